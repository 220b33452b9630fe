use std::sync::Arc;

use crate::count_sketch::median_in_place;
use crate::error::{Error, Result};
use crate::hashing::{derive_seed, ModeHash, Stream};
use crate::tensor::{strides, DenseTensor};

/// How one mode is compressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSpec {
    Hashed { n: usize, m: usize },
    Identity(usize),
}

/// Per-replica, per-mode hashes.
#[derive(Debug, Clone, PartialEq)]
pub struct HcsPlan {
    dims: Vec<usize>,
    sketch_dims: Vec<usize>,
    replicas: Vec<Vec<Arc<ModeHash>>>,
}

impl HcsPlan {
    pub fn generate(modes: &[ModeSpec], d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSize("at least one replica is required".into()));
        }
        let identities: Vec<Option<Arc<ModeHash>>> = modes
            .iter()
            .map(|spec| match *spec {
                ModeSpec::Identity(n) => ModeHash::identity(n).map(|h| Some(Arc::new(h))),
                ModeSpec::Hashed { .. } => Ok(None),
            })
            .collect::<Result<_>>()?;
        let replicas = (0..d)
            .map(|r| {
                modes
                    .iter()
                    .enumerate()
                    .map(|(k, spec)| match (*spec, &identities[k]) {
                        (_, Some(id)) => Ok(id.clone()),
                        (ModeSpec::Hashed { n, m }, None) => ModeHash::hashed(
                            n,
                            m,
                            derive_seed(seed, r, k, Stream::Index),
                            derive_seed(seed, r, k, Stream::Sign),
                        )
                        .map(Arc::new),
                        (ModeSpec::Identity(_), None) => unreachable!(),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_hashes(replicas)
    }

    /// Hashed plan with every mode of size `dims[k]` sent to `sketch_dims[k]`
    /// buckets; modes with equal sizes still get random hashes.
    pub fn hashed(dims: &[usize], sketch_dims: &[usize], d: usize, seed: u64) -> Result<Self> {
        if dims.len() != sketch_dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mode sizes but {} sketch sizes",
                dims.len(),
                sketch_dims.len()
            )));
        }
        let specs: Vec<ModeSpec> = dims
            .iter()
            .zip(sketch_dims)
            .map(|(&n, &m)| ModeSpec::Hashed { n, m })
            .collect();
        Self::generate(&specs, d, seed)
    }

    pub fn identity(dims: &[usize], d: usize) -> Result<Self> {
        let specs: Vec<ModeSpec> = dims.iter().map(|&n| ModeSpec::Identity(n)).collect();
        Self::generate(&specs, d, 0)
    }

    pub fn from_hashes(replicas: Vec<Vec<Arc<ModeHash>>>) -> Result<Self> {
        let first = replicas
            .first()
            .ok_or_else(|| Error::InvalidSize("at least one replica is required".into()))?;
        let dims: Vec<usize> = first.iter().map(|h| h.domain()).collect();
        let sketch_dims: Vec<usize> = first.iter().map(|h| h.range()).collect();
        for modes in &replicas {
            let same = modes.len() == dims.len()
                && modes
                    .iter()
                    .zip(dims.iter().zip(&sketch_dims))
                    .all(|(h, (&n, &m))| h.domain() == n && h.range() == m);
            if !same {
                return Err(Error::Incompatible(
                    "replica hashes disagree on mode sizes".into(),
                ));
            }
        }
        Ok(Self {
            dims,
            sketch_dims,
            replicas,
        })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn sketch_dims(&self) -> &[usize] {
        &self.sketch_dims
    }

    pub fn d(&self) -> usize {
        self.replicas.len()
    }

    pub fn hash(&self, replica: usize, mode: usize) -> &Arc<ModeHash> {
        &self.replicas[replica][mode]
    }

    pub fn replica_hashes(&self, replica: usize) -> &[Arc<ModeHash>] {
        &self.replicas[replica]
    }

    /// True when mode `k` is the identity in every replica.
    pub fn is_identity_mode(&self, mode: usize) -> bool {
        self.replicas.iter().all(|modes| modes[mode].is_identity())
    }

    pub fn input_len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn sketch_len(&self) -> usize {
        self.sketch_dims.iter().product()
    }

    /// Stored index and sign entries over all replicas; identity modes
    /// store nothing.
    pub fn hash_entries(&self) -> usize {
        self.replicas
            .iter()
            .flat_map(|modes| modes.iter().map(|h| h.stored_entries()))
            .sum()
    }

    /// Appends singleton modes hashed to bucket 0 of the given ranges.
    pub(crate) fn pad_modes(&self, ranges: &[usize]) -> Result<Self> {
        let units = ranges
            .iter()
            .map(|&m| ModeHash::unit(m).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let replicas = self
            .replicas
            .iter()
            .map(|modes| modes.iter().cloned().chain(units.iter().cloned()).collect())
            .collect();
        Self::from_hashes(replicas)
    }

    pub fn sketch_tensor(&self, t: &DenseTensor) -> Result<HcsSketch> {
        HcsSketch::from_tensor(t, self)
    }

    pub fn sketch_vector(&self, u: &[f64]) -> Result<HcsSketch> {
        HcsSketch::from_vector(u, self)
    }
}

/// Per-mode `(bucket * output stride, sign)` tables for one replica.
pub(crate) struct ReplicaTables {
    pub offsets: Vec<Vec<usize>>,
    pub signs: Vec<Vec<f64>>,
}

impl ReplicaTables {
    pub fn new(plan: &HcsPlan, replica: usize) -> Self {
        let out_strides = strides(&plan.sketch_dims);
        let mut offsets = Vec::with_capacity(plan.order());
        let mut signs = Vec::with_capacity(plan.order());
        for (k, h) in plan.replicas[replica].iter().enumerate() {
            let (b, s) = h.tables();
            offsets.push(b.into_iter().map(|x| x * out_strides[k]).collect());
            signs.push(s);
        }
        Self { offsets, signs }
    }

    pub fn locate(&self, index: &[usize]) -> (usize, f64) {
        let mut off = 0;
        let mut sign = 1.0;
        for (k, &i) in index.iter().enumerate() {
            off += self.offsets[k][i];
            sign *= self.signs[k][i];
        }
        (off, sign)
    }
}

/// Calls `f(flat_input, sketch_offset, sign)` for every input cell in
/// column-major order.
pub(crate) fn for_each_cell(dims: &[usize], t: &ReplicaTables, mut f: impl FnMut(usize, usize, f64)) {
    if dims.is_empty() {
        f(0, 0, 1.0);
        return;
    }
    let outer_dims = &dims[1..];
    let mut idx = vec![0usize; outer_dims.len()];
    let mut flat = 0;
    loop {
        let mut base = 0;
        let mut sign = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            base += t.offsets[k + 1][i];
            sign *= t.signs[k + 1][i];
        }
        for (o, s) in t.offsets[0].iter().zip(&t.signs[0]) {
            f(flat, base + o, sign * s);
            flat += 1;
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return;
            }
            idx[k] += 1;
            if idx[k] < outer_dims[k] {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `d` sketch tensors of shape `m_1 x .. x m_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct HcsSketch {
    plan: HcsPlan,
    replicas: Vec<DenseTensor>,
}

impl HcsSketch {
    pub fn from_tensor(t: &DenseTensor, plan: &HcsPlan) -> Result<Self> {
        if t.shape() != plan.dims() {
            return Err(Error::DimensionMismatch(format!(
                "tensor of shape {:?} for a plan over {:?}",
                t.shape(),
                plan.dims()
            )));
        }
        let data = t.data();
        let replicas = (0..plan.d())
            .map(|r| {
                let tables = ReplicaTables::new(plan, r);
                let mut out = DenseTensor::zeros(plan.sketch_dims())?;
                let buf = out.data_mut();
                for_each_cell(plan.dims(), &tables, |i, off, s| buf[off] += s * data[i]);
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            plan: plan.clone(),
            replicas,
        })
    }

    /// Sketch of `u` reshaped (column-major) to the plan's mode sizes.
    pub fn from_vector(u: &[f64], plan: &HcsPlan) -> Result<Self> {
        let t = DenseTensor::from_vec(plan.dims().to_vec(), u.to_vec()).map_err(|_| {
            Error::DimensionMismatch(format!(
                "vector of length {} for a plan over {:?}",
                u.len(),
                plan.dims()
            ))
        })?;
        Self::from_tensor(&t, plan)
    }

    pub fn from_replicas(plan: HcsPlan, replicas: Vec<DenseTensor>) -> Result<Self> {
        if replicas.len() != plan.d() || replicas.iter().any(|t| t.shape() != plan.sketch_dims()) {
            return Err(Error::Incompatible(format!(
                "expected {} replicas of shape {:?}",
                plan.d(),
                plan.sketch_dims()
            )));
        }
        Ok(Self { plan, replicas })
    }

    pub fn plan(&self) -> &HcsPlan {
        &self.plan
    }

    pub fn replica(&self, r: usize) -> &DenseTensor {
        &self.replicas[r]
    }

    pub fn replicas(&self) -> &[DenseTensor] {
        &self.replicas
    }

    fn check_index(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.plan.order() || index.iter().zip(self.plan.dims()).any(|(i, n)| i >= n)
        {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.plan.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Single-replica estimate of `T[index]`. The index must be in range.
    pub fn replica_estimate(&self, r: usize, index: &[usize]) -> f64 {
        let m_strides = strides(self.plan.sketch_dims());
        let mut off = 0;
        let mut sign = 1.0;
        for (k, (&i, h)) in index.iter().zip(&self.plan.replicas[r]).enumerate() {
            off += h.bucket(i) * m_strides[k];
            sign *= h.sign(i);
        }
        sign * self.replicas[r].data()[off]
    }

    pub fn recover_entry(&self, index: &[usize]) -> Result<f64> {
        self.check_index(index)?;
        let mut buf: Vec<f64> = (0..self.plan.d())
            .map(|r| self.replica_estimate(r, index))
            .collect();
        Ok(median_in_place(&mut buf))
    }

    pub fn recover_flat(&self, j: usize) -> Result<f64> {
        if j >= self.plan.input_len() {
            return Err(Error::IndexOutOfRange {
                index: vec![j],
                shape: self.plan.dims().to_vec(),
            });
        }
        let mut rest = j;
        let index: Vec<usize> = self
            .plan
            .dims()
            .iter()
            .map(|&n| {
                let i = rest % n;
                rest /= n;
                i
            })
            .collect();
        self.recover_entry(&index)
    }

    /// Median-of-replicas estimate of every entry.
    pub fn recover_full(&self) -> Result<DenseTensor> {
        let d = self.plan.d();
        let len = self.plan.input_len();
        if d == 1 {
            let tables = ReplicaTables::new(&self.plan, 0);
            let sk = self.replicas[0].data();
            let mut out = vec![0.0; len];
            for_each_cell(self.plan.dims(), &tables, |i, off, s| out[i] = s * sk[off]);
            return DenseTensor::from_vec(self.plan.dims().to_vec(), out);
        }
        // Estimates are gathered replica-major in blocks so the working set
        // stays bounded for large inputs.
        const BLOCK: usize = 1 << 16;
        let tables: Vec<ReplicaTables> = (0..d).map(|r| ReplicaTables::new(&self.plan, r)).collect();
        let mut out = vec![0.0; len];
        let mut est = vec![0.0; d * BLOCK.min(len)];
        let mut buf = vec![0.0; d];
        let mut start = 0;
        while start < len {
            let end = (start + BLOCK).min(len);
            let width = end - start;
            for (r, t) in tables.iter().enumerate() {
                let sk = self.replicas[r].data();
                let row = &mut est[r * width..(r + 1) * width];
                for_each_cell_range(self.plan.dims(), t, start, end, |i, off, s| {
                    row[i - start] = s * sk[off];
                });
            }
            for i in 0..width {
                for (r, slot) in buf.iter_mut().enumerate() {
                    *slot = est[r * width + i];
                }
                out[start + i] = median_in_place(&mut buf);
            }
            start = end;
        }
        DenseTensor::from_vec(self.plan.dims().to_vec(), out)
    }
}

/// [`for_each_cell`] restricted to flat inputs in `[start, end)`.
fn for_each_cell_range(
    dims: &[usize],
    t: &ReplicaTables,
    start: usize,
    end: usize,
    mut f: impl FnMut(usize, usize, f64),
) {
    let mut idx: Vec<usize> = {
        let mut rest = start;
        dims.iter()
            .map(|&n| {
                let i = rest % n;
                rest /= n;
                i
            })
            .collect()
    };
    for flat in start..end {
        let (off, s) = t.locate(&idx);
        f(flat, off, s);
        for (k, i) in idx.iter_mut().enumerate() {
            *i += 1;
            if *i < dims[k] {
                break;
            }
            *i = 0;
        }
    }
}
