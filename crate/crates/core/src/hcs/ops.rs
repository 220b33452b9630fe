use std::sync::Arc;

use super::plan::{HcsPlan, HcsSketch};
use crate::error::{Error, Result};
use crate::fft::circular_convolve;
use crate::hashing::ModeHash;
use crate::tensor::{contract, max_subtensor_norm, ContractionSpec, DenseTensor};

/// Embeds a sketch tensor into a larger shape that only adds trailing modes;
/// the original values occupy index 0 of each new mode.
fn pad_sketch(t: &DenseTensor, shape: &[usize]) -> Result<DenseTensor> {
    let mut data = t.data().to_vec();
    data.resize(shape.iter().product(), 0.0);
    DenseTensor::from_vec(shape.to_vec(), data)
}

fn pad_operand(sk: &HcsSketch, sketch_dims: &[usize]) -> Result<HcsSketch> {
    let order = sk.plan().order();
    if order == sketch_dims.len() {
        return Ok(sk.clone());
    }
    let plan = sk.plan().pad_modes(&sketch_dims[order..])?;
    let replicas = sk
        .replicas()
        .iter()
        .map(|t| pad_sketch(t, sketch_dims))
        .collect::<Result<Vec<_>>>()?;
    HcsSketch::from_replicas(plan, replicas)
}

impl HcsSketch {
    /// Sketch of the per-mode paired Kronecker product of the two inputs, as
    /// the replica-wise N-dimensional circular convolution of the operand
    /// sketches. Mode `k` of the result covers paired indices
    /// `a_k n_k(B) + b_k` and is hashed by `(h_A(a) + h_B(b)) mod m_k` with
    /// sign `s_A(a) s_B(b)`. A lower-order operand is padded with singleton
    /// modes.
    pub fn tensor_product(&self, other: &HcsSketch) -> Result<HcsSketch> {
        let (pa, pb) = (self.plan(), other.plan());
        if pa.d() != pb.d() {
            return Err(Error::Incompatible(format!(
                "{} and {} replicas",
                pa.d(),
                pb.d()
            )));
        }
        let longer = if pa.order() >= pb.order() { pa } else { pb };
        let shared = pa.order().min(pb.order());
        if pa.sketch_dims()[..shared] != pb.sketch_dims()[..shared] {
            return Err(Error::Incompatible(format!(
                "sketch dims {:?} and {:?}",
                pa.sketch_dims(),
                pb.sketch_dims()
            )));
        }
        let sketch_dims = longer.sketch_dims().to_vec();
        let a = pad_operand(self, &sketch_dims)?;
        let b = pad_operand(other, &sketch_dims)?;

        let mut hashes = Vec::with_capacity(pa.d());
        let mut replicas = Vec::with_capacity(pa.d());
        for r in 0..pa.d() {
            let modes = a
                .plan()
                .replica_hashes(r)
                .iter()
                .zip(b.plan().replica_hashes(r))
                .map(|(ha, hb)| ModeHash::composite(ha.clone(), hb.clone()).map(Arc::new))
                .collect::<Result<Vec<_>>>()?;
            hashes.push(modes);
            replicas.push(circular_convolve(a.replica(r), b.replica(r))?);
        }
        HcsSketch::from_replicas(HcsPlan::from_hashes(hashes)?, replicas)
    }

    /// Estimate of `A[index_a] B[index_b]` from a sketch built by
    /// [`HcsSketch::tensor_product`]. Short indices are padded with zeros.
    pub fn kron_recover(&self, index_a: &[usize], index_b: &[usize]) -> Result<f64> {
        let order = self.plan().order();
        if index_a.len() > order || index_b.len() > order {
            return Err(Error::IndexOutOfRange {
                index: index_a.iter().chain(index_b).copied().collect(),
                shape: self.plan().dims().to_vec(),
            });
        }
        let mut paired = Vec::with_capacity(order);
        for k in 0..order {
            let (na, nb) = match self.plan().hash(0, k).as_ref() {
                ModeHash::Composite { major, minor } => (major.domain(), minor.domain()),
                _ => {
                    return Err(Error::Incompatible(
                        "sketch was not built by a tensor product".into(),
                    ))
                }
            };
            let a = index_a.get(k).copied().unwrap_or(0);
            let b = index_b.get(k).copied().unwrap_or(0);
            if a >= na || b >= nb {
                return Err(Error::IndexOutOfRange {
                    index: vec![a, b],
                    shape: vec![na, nb],
                });
            }
            paired.push(a * nb + b);
        }
        self.recover_entry(&paired)
    }

    /// Sketch of `contract(A, B, spec)` computed by contracting the operand
    /// sketches replica by replica. Every contracted mode must be
    /// identity-hashed in both plans; the result is hashed by the free-mode
    /// hashes of `A` followed by those of `B`.
    pub fn contract(&self, other: &HcsSketch, spec: &ContractionSpec) -> Result<HcsSketch> {
        let (pa, pb) = (self.plan(), other.plan());
        spec.validate(pa.dims(), pb.dims())?;
        if pa.d() != pb.d() {
            return Err(Error::Incompatible(format!(
                "{} and {} replicas",
                pa.d(),
                pb.d()
            )));
        }
        for &(a, b) in spec.pairs() {
            if !pa.is_identity_mode(a) {
                return Err(Error::NotIdentityMode { operand: 'A', mode: a });
            }
            if !pb.is_identity_mode(b) {
                return Err(Error::NotIdentityMode { operand: 'B', mode: b });
            }
        }
        let free_a = spec.free_a(pa.order());
        let free_b = spec.free_b(pb.order());
        let mut hashes = Vec::with_capacity(pa.d());
        let mut replicas = Vec::with_capacity(pa.d());
        for r in 0..pa.d() {
            let modes: Vec<Arc<ModeHash>> = free_a
                .iter()
                .map(|&k| pa.hash(r, k).clone())
                .chain(free_b.iter().map(|&k| pb.hash(r, k).clone()))
                .collect();
            hashes.push(modes);
            replicas.push(contract(self.replica(r), other.replica(r), spec)?);
        }
        HcsSketch::from_replicas(HcsPlan::from_hashes(hashes)?, replicas)
    }

    /// Sketch of the Tucker tensor `G x_1 U_1 .. x_l U_l` as
    /// `G x_1 HCS(U_1) .. x_l HCS(U_l)`, where each factor is sketched along
    /// its `n_k` mode only. `plan` is over the full tensor (`n_1 .. n_l`).
    pub fn from_tucker(core: &DenseTensor, factors: &[DenseTensor], plan: &HcsPlan) -> Result<Self> {
        let order = core.order();
        if factors.len() != order || plan.order() != order {
            return Err(Error::DimensionMismatch(format!(
                "order-{order} core with {} factors and an order-{} plan",
                factors.len(),
                plan.order()
            )));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.order() != 2 || f.shape()[1] != core.shape()[k] || f.shape()[0] != plan.dims()[k] {
                return Err(Error::DimensionMismatch(format!(
                    "factor {k} of shape {:?} against core {:?} and plan {:?}",
                    f.shape(),
                    core.shape(),
                    plan.dims()
                )));
            }
        }
        let replicas = (0..plan.d())
            .map(|r| {
                factors.iter().enumerate().try_fold(core.clone(), |acc, (k, f)| {
                    let h = plan.hash(r, k);
                    let (n, rank) = (f.shape()[0], f.shape()[1]);
                    let m = h.range();
                    let mut sk = DenseTensor::zeros(&[m, rank])?;
                    let buf = sk.data_mut();
                    for j in 0..rank {
                        for i in 0..n {
                            buf[h.bucket(i) + j * m] += h.sign(i) * f.data()[i + j * n];
                        }
                    }
                    acc.mode_product(&sk, k)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HcsSketch::from_replicas(plan.clone(), replicas)
    }
}

/// `sum_{p=1..l} T_p^2 / m^p`, where `T_p` is the largest Frobenius norm of
/// an order-`p` subtensor. Requires a plan over `t`'s shape with one sketch
/// size `m` for every mode. Cost grows exponentially in the order.
pub fn variance_bound(t: &DenseTensor, plan: &HcsPlan) -> Result<f64> {
    if t.shape() != plan.dims() {
        return Err(Error::DimensionMismatch(format!(
            "tensor of shape {:?} for a plan over {:?}",
            t.shape(),
            plan.dims()
        )));
    }
    let m = match plan.sketch_dims().first() {
        Some(&m) if plan.sketch_dims().iter().all(|&x| x == m) => m as f64,
        _ => {
            return Err(Error::InvalidSize(format!(
                "bound needs one shared sketch size, got {:?}",
                plan.sketch_dims()
            )))
        }
    };
    let mut total = 0.0;
    for p in 1..=t.order() {
        total += max_subtensor_norm(t, p)?.powi(2) / m.powi(p as i32);
    }
    Ok(total)
}
