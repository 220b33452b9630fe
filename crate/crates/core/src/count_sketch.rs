//! Count Sketch of vectors, outer products, matrix products and Tucker
//! tensors, with median-of-replicas recovery.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Convolver;
use crate::hashing::{derive_seed, ModeHash, Stream};
use crate::tensor::DenseTensor;

/// Median of `values`; the mean of the two middle values for even counts.
pub fn median_estimate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buf = values.to_vec();
    Ok(median_in_place(&mut buf))
}

/// Median that reorders `buf`. Panics on an empty slice.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    if n == 1 {
        return buf[0];
    }
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Hashes for `d` independent sketches of length-`n` inputs into `c` buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct CsPlan {
    n: usize,
    c: usize,
    replicas: Vec<Arc<ModeHash>>,
}

impl CsPlan {
    pub fn generate(n: usize, c: usize, d: usize, seed: u64) -> Result<Self> {
        Self::generate_for_mode(n, c, d, seed, 0)
    }

    /// Like [`CsPlan::generate`], drawing from the sub-seeds of `mode` so
    /// several factors can share one root seed.
    pub fn generate_for_mode(n: usize, c: usize, d: usize, seed: u64, mode: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSize("at least one replica is required".into()));
        }
        let replicas = (0..d)
            .map(|r| {
                ModeHash::hashed(
                    n,
                    c,
                    derive_seed(seed, r, mode, Stream::Index),
                    derive_seed(seed, r, mode, Stream::Sign),
                )
                .map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, c, replicas })
    }

    /// `c = n`, `h(i) = i`, all signs `+1`.
    pub fn identity(n: usize, d: usize) -> Result<Self> {
        let h = Arc::new(ModeHash::identity(n)?);
        Self::from_hashes(vec![h; d.max(1)])
    }

    pub fn from_hashes(replicas: Vec<Arc<ModeHash>>) -> Result<Self> {
        let first = replicas
            .first()
            .ok_or_else(|| Error::InvalidSize("at least one replica is required".into()))?;
        let (n, c) = (first.domain(), first.range());
        if replicas.iter().any(|h| h.domain() != n || h.range() != c) {
            return Err(Error::Incompatible(
                "replica hashes disagree on domain or range".into(),
            ));
        }
        Ok(Self { n, c, replicas })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn d(&self) -> usize {
        self.replicas.len()
    }

    pub fn hash(&self, replica: usize) -> &Arc<ModeHash> {
        &self.replicas[replica]
    }

    /// Hash entries when every one of the `n` inputs has its own stored
    /// index and sign, per replica.
    pub fn flat_hash_entries(&self) -> usize {
        2 * self.d() * self.n
    }

    /// Hash entries actually held by this plan; smaller than the flat count
    /// for derived (paired) hashes.
    pub fn stored_hash_entries(&self) -> usize {
        self.replicas.iter().map(|h| h.stored_entries()).sum()
    }

    pub fn sketch(&self, u: &[f64]) -> Result<CsSketch> {
        CsSketch::sketch(u, self)
    }
}

/// A `d x c` table of signed bucket sums.
#[derive(Debug, Clone, PartialEq)]
pub struct CsSketch {
    plan: CsPlan,
    table: Vec<f64>,
}

fn sketch_row(u: &[f64], h: &ModeHash, c: usize) -> Vec<f64> {
    let mut row = vec![0.0; c];
    match h {
        ModeHash::Table { buckets, signs, .. } => {
            for ((&x, &b), &s) in u.iter().zip(buckets).zip(signs) {
                row[b] += s * x;
            }
        }
        ModeHash::Identity { .. } => row.copy_from_slice(u),
        ModeHash::Composite { .. } => {
            for (i, &x) in u.iter().enumerate() {
                row[h.bucket(i)] += h.sign(i) * x;
            }
        }
    }
    row
}

impl CsSketch {
    pub fn sketch(u: &[f64], plan: &CsPlan) -> Result<Self> {
        if u.len() != plan.n {
            return Err(Error::DimensionMismatch(format!(
                "input of length {} for a plan over {}",
                u.len(),
                plan.n
            )));
        }
        let mut table = Vec::with_capacity(plan.d() * plan.c);
        for h in &plan.replicas {
            table.extend(sketch_row(u, h, plan.c));
        }
        Ok(Self {
            plan: plan.clone(),
            table,
        })
    }

    pub fn from_table(plan: CsPlan, table: Vec<f64>) -> Result<Self> {
        if table.len() != plan.d() * plan.c {
            return Err(Error::ShapeMismatch {
                shape: vec![plan.d(), plan.c],
                expected: plan.d() * plan.c,
                actual: table.len(),
            });
        }
        Ok(Self { plan, table })
    }

    pub fn plan(&self) -> &CsPlan {
        &self.plan
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row(&self, replica: usize) -> &[f64] {
        &self.table[replica * self.plan.c..(replica + 1) * self.plan.c]
    }

    /// Single-replica estimate `s_r(i) * table[r, h_r(i)]`.
    pub fn replica_estimate(&self, replica: usize, i: usize) -> f64 {
        let h = &self.plan.replicas[replica];
        h.sign(i) * self.table[replica * self.plan.c + h.bucket(i)]
    }

    pub fn recover(&self, i: usize) -> Result<f64> {
        if i >= self.plan.n {
            return Err(Error::IndexOutOfRange {
                index: vec![i],
                shape: vec![self.plan.n],
            });
        }
        let mut buf: Vec<f64> = (0..self.plan.d())
            .map(|r| self.replica_estimate(r, i))
            .collect();
        Ok(median_in_place(&mut buf))
    }

    pub fn recover_all(&self) -> Vec<f64> {
        let d = self.plan.d();
        let mut buf = vec![0.0; d];
        (0..self.plan.n)
            .map(|i| {
                for (r, slot) in buf.iter_mut().enumerate() {
                    *slot = self.replica_estimate(r, i);
                }
                median_in_place(&mut buf)
            })
            .collect()
    }

    /// Sketch of `vec(u (x) v)` (index `i + j n_u`) as the circular
    /// convolution of the two sketches, replica by replica.
    pub fn outer_product(&self, other: &CsSketch) -> Result<CsSketch> {
        let (pu, pv) = (&self.plan, &other.plan);
        if pu.c != pv.c || pu.d() != pv.d() {
            return Err(Error::Incompatible(format!(
                "sketches with (c, d) = ({}, {}) and ({}, {})",
                pu.c,
                pu.d(),
                pv.c,
                pv.d()
            )));
        }
        let conv = Convolver::new(pu.c);
        let mut hashes = Vec::with_capacity(pu.d());
        let mut table = Vec::with_capacity(pu.d() * pu.c);
        for r in 0..pu.d() {
            hashes.push(Arc::new(ModeHash::composite(
                pv.replicas[r].clone(),
                pu.replicas[r].clone(),
            )?));
            table.extend(conv.convolve(self.row(r), other.row(r))?);
        }
        CsSketch::from_table(CsPlan::from_hashes(hashes)?, table)
    }
}

fn check_matrix(t: &DenseTensor, what: &str) -> Result<(usize, usize)> {
    if t.order() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be a matrix, got shape {:?}",
            t.shape()
        )));
    }
    Ok((t.shape()[0], t.shape()[1]))
}

fn check_factor_plans(plans: &[&CsPlan]) -> Result<(usize, usize)> {
    let (c, d) = (plans[0].c, plans[0].d());
    if plans.iter().any(|p| p.c != c || p.d() != d) {
        return Err(Error::Incompatible(
            "factor plans must share bucket and replica counts".into(),
        ));
    }
    Ok((c, d))
}

/// Sketch of `vec(AB)` as `sum_k CS(A[:, k]) * CS(B[k, :])`, with `row_plan`
/// hashing the rows of `A` and `col_plan` the columns of `B`. All
/// convolutions of a replica share one inverse transform.
pub fn cs_matrix_product(
    a: &DenseTensor,
    b: &DenseTensor,
    row_plan: &CsPlan,
    col_plan: &CsPlan,
) -> Result<CsSketch> {
    let (n, r) = check_matrix(a, "A")?;
    let (r2, n2) = check_matrix(b, "B")?;
    if r != r2 || row_plan.n != n || col_plan.n != n2 {
        return Err(Error::DimensionMismatch(format!(
            "A {:?}, B {:?} with plans over {} rows and {} columns",
            a.shape(),
            b.shape(),
            row_plan.n,
            col_plan.n
        )));
    }
    let (c, d) = check_factor_plans(&[row_plan, col_plan])?;
    let conv = Convolver::new(c);
    let mut hashes = Vec::with_capacity(d);
    let mut table = Vec::with_capacity(d * c);
    let mut b_row = vec![0.0; n2];
    for rep in 0..d {
        let (hr, hc) = (&row_plan.replicas[rep], &col_plan.replicas[rep]);
        let mut acc = vec![Complex64::new(0.0, 0.0); c];
        for k in 0..r {
            let a_col = &a.data()[k * n..(k + 1) * n];
            for (j, slot) in b_row.iter_mut().enumerate() {
                *slot = b.data()[k + j * r];
            }
            let fa = conv.forward(&sketch_row(a_col, hr, c));
            let fb = conv.forward(&sketch_row(&b_row, hc, c));
            for ((z, x), y) in acc.iter_mut().zip(&fa).zip(&fb) {
                *z += x * y;
            }
        }
        table.extend(conv.inverse(acc)?);
        hashes.push(Arc::new(ModeHash::composite(hc.clone(), hr.clone())?));
    }
    CsSketch::from_table(CsPlan::from_hashes(hashes)?, table)
}

/// Sketch of the flattened Tucker tensor `G x1 U x2 V x3 W` as
/// `sum_{abc} G[a,b,c] CS(U[:,a]) * CS(V[:,b]) * CS(W[:,c])`.
pub fn cs_tucker(
    core: &DenseTensor,
    factors: [&DenseTensor; 3],
    plans: [&CsPlan; 3],
) -> Result<CsSketch> {
    if core.order() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "Tucker core must be order 3, got shape {:?}",
            core.shape()
        )));
    }
    let mut dims = [0usize; 3];
    for k in 0..3 {
        let (n, r) = check_matrix(factors[k], "factor")?;
        if r != core.shape()[k] || plans[k].n != n {
            return Err(Error::DimensionMismatch(format!(
                "factor {k} of shape {:?} against core {:?} and a plan over {}",
                factors[k].shape(),
                core.shape(),
                plans[k].n
            )));
        }
        dims[k] = n;
    }
    let (c, d) = check_factor_plans(&plans)?;
    let (r1, r2, r3) = (core.shape()[0], core.shape()[1], core.shape()[2]);
    let conv = Convolver::new(c);
    let mut hashes = Vec::with_capacity(d);
    let mut table = Vec::with_capacity(d * c);
    for rep in 0..d {
        let spectra: Vec<Vec<Vec<Complex64>>> = (0..3)
            .map(|k| {
                let (n, f) = (dims[k], factors[k]);
                (0..core.shape()[k])
                    .map(|col| {
                        let x = &f.data()[col * n..(col + 1) * n];
                        conv.forward(&sketch_row(x, &plans[k].replicas[rep], c))
                    })
                    .collect()
            })
            .collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); c];
        let mut inner = vec![Complex64::new(0.0, 0.0); c];
        for cc in 0..r3 {
            for bb in 0..r2 {
                inner.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                let mut any = false;
                for aa in 0..r1 {
                    let g = core.data()[aa + bb * r1 + cc * r1 * r2];
                    if g == 0.0 {
                        continue;
                    }
                    any = true;
                    for (z, x) in inner.iter_mut().zip(&spectra[0][aa]) {
                        *z += g * x;
                    }
                }
                if !any {
                    continue;
                }
                for (((z, x), v), w) in acc
                    .iter_mut()
                    .zip(&inner)
                    .zip(&spectra[1][bb])
                    .zip(&spectra[2][cc])
                {
                    *z += x * v * w;
                }
            }
        }
        table.extend(conv.inverse(acc)?);
        let minor = Arc::new(ModeHash::composite(
            plans[1].replicas[rep].clone(),
            plans[0].replicas[rep].clone(),
        )?);
        hashes.push(Arc::new(ModeHash::composite(
            plans[2].replicas[rep].clone(),
            minor,
        )?));
    }
    CsSketch::from_table(CsPlan::from_hashes(hashes)?, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{contract, tensor_product, ContractionSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table_plan(buckets: Vec<usize>, signs: Vec<f64>, c: usize) -> CsPlan {
        CsPlan::from_hashes(vec![Arc::new(ModeHash::from_tables(buckets, signs, c).unwrap())])
            .unwrap()
    }

    /// Bucket sums straight from the definition, any hash.
    fn oracle(u: &[f64], h: &ModeHash) -> Vec<f64> {
        let mut out = vec![0.0; h.range()];
        for (i, &x) in u.iter().enumerate() {
            out[h.bucket(i)] += h.sign(i) * x;
        }
        out
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn median_examples() {
        assert_eq!(median_estimate(&[1.0, 5.0, 3.0]).unwrap(), 3.0);
        assert_eq!(median_estimate(&[2.0, 2.0, 2.0, 9.0]).unwrap(), 2.0);
        assert_eq!(median_estimate(&[-1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(median_estimate(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn hand_traced_sketch_and_recovery() {
        let plan = table_plan(vec![0, 1, 0, 1], vec![1.0, -1.0, 1.0, -1.0], 2);
        let sk = plan.sketch(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(sk.table(), &[4.0, -6.0]);
        assert_eq!(sk.recover(2).unwrap(), 4.0);
        assert!(sk.recover(4).is_err());
        assert!(plan.sketch(&[1.0]).is_err());
    }

    #[test]
    fn identity_and_zero_cases() {
        let u = [3.0, -1.0, 4.0, 1.5];
        let sk = CsPlan::identity(4, 3).unwrap().sketch(&u).unwrap();
        assert_eq!(sk.row(0), &u);
        assert_eq!(sk.recover_all(), u.to_vec());
        let z = CsPlan::generate(4, 3, 5, 1).unwrap().sketch(&[0.0; 4]).unwrap();
        assert!(z.table().iter().all(|&x| x == 0.0));
        assert_eq!(z.recover(1).unwrap(), 0.0);
    }

    #[test]
    fn outer_product_examples() {
        let id = CsPlan::identity(2, 1).unwrap();
        let su = id.sketch(&[1.0, 2.0]).unwrap();
        let sv = id.sketch(&[3.0, 4.0]).unwrap();
        let p = su.outer_product(&sv).unwrap();
        assert!(close(p.table(), &[11.0, 10.0], 1e-12));

        let plan = CsPlan::generate(5, 4, 2, 9).unwrap();
        let su = plan.sketch(&[1.0, -2.0, 0.5, 3.0, 1.0]).unwrap();
        let scalar = CsPlan::from_hashes(vec![Arc::new(ModeHash::unit(4).unwrap()); 2]).unwrap();
        let sv = scalar.sketch(&[1.0]).unwrap();
        assert!(close(su.outer_product(&sv).unwrap().table(), su.table(), 1e-12));

        let zero = plan.sketch(&[0.0; 5]).unwrap();
        let other = CsPlan::generate_for_mode(3, 4, 2, 9, 1).unwrap().sketch(&[1.0, 2.0, 3.0]).unwrap();
        assert!(zero.outer_product(&other).unwrap().table().iter().all(|x| x.abs() < 1e-12));

        let mismatched = CsPlan::generate(3, 5, 2, 1).unwrap().sketch(&[1.0; 3]).unwrap();
        assert!(su.outer_product(&mismatched).is_err());
    }

    #[test]
    fn matrix_product_examples() {
        let a = DenseTensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let eye = DenseTensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let id = CsPlan::identity(2, 1).unwrap();
        let sk = cs_matrix_product(&a, &eye, &id, &id).unwrap();
        assert!(close(sk.table(), &[5.0, 5.0], 1e-12));

        let two = DenseTensor::from_rows(&[vec![2.0]]).unwrap();
        let three = DenseTensor::from_rows(&[vec![3.0]]).unwrap();
        let one = CsPlan::identity(1, 1).unwrap();
        assert!(close(cs_matrix_product(&two, &three, &one, &one).unwrap().table(), &[6.0], 1e-12));

        let zero = DenseTensor::zeros(&[2, 2]).unwrap();
        let p = CsPlan::generate(2, 3, 2, 5).unwrap();
        let q = CsPlan::generate_for_mode(2, 3, 2, 5, 1).unwrap();
        assert!(cs_matrix_product(&a, &zero, &p, &q).unwrap().table().iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn tucker_examples() {
        let one = CsPlan::identity(1, 1).unwrap();
        let g = DenseTensor::from_vec(vec![1, 1, 1], vec![2.0]).unwrap();
        let f = DenseTensor::from_vec(vec![1, 1], vec![1.0]).unwrap();
        let sk = cs_tucker(&g, [&f, &f, &f], [&one, &one, &one]).unwrap();
        assert!(close(sk.table(), &[2.0], 1e-12));

        let g = DenseTensor::from_vec(vec![1, 1, 1], vec![1.0]).unwrap();
        let u = DenseTensor::from_vec(vec![2, 1], vec![1.0, 2.0]).unwrap();
        let v = DenseTensor::from_vec(vec![2, 1], vec![1.0, 0.0]).unwrap();
        let w = DenseTensor::from_vec(vec![2, 1], vec![0.0, 1.0]).unwrap();
        let id = CsPlan::identity(2, 1).unwrap();
        // Nonzero entries (0,0,1) = 1 -> bucket 1 and (1,0,1) = 2 -> bucket 0.
        let sk = cs_tucker(&g, [&u, &v, &w], [&id, &id, &id]).unwrap();
        assert!(close(sk.table(), &[2.0, 1.0], 1e-12));

        let z = DenseTensor::zeros(&[1, 1, 1]).unwrap();
        assert!(cs_tucker(&z, [&u, &v, &w], [&id, &id, &id]).unwrap().table().iter().all(|x| x.abs() < 1e-12));
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn derived_hash_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let (nu, nv, c, d) = (rng.gen_range(1..9), rng.gen_range(1..9), rng.gen_range(1..13), 2);
            let pu = CsPlan::generate_for_mode(nu, c, d, trial, 0).unwrap();
            let pv = CsPlan::generate_for_mode(nv, c, d, trial, 1).unwrap();
            let (u, v) = (random_vec(nu, &mut rng), random_vec(nv, &mut rng));
            let prod = pu.sketch(&u).unwrap().outer_product(&pv.sketch(&v).unwrap()).unwrap();
            let flat = tensor_product(
                &DenseTensor::from_vec(vec![nu], u.clone()).unwrap(),
                &DenseTensor::from_vec(vec![nv], v.clone()).unwrap(),
            );
            for r in 0..d {
                assert!(close(prod.row(r), &oracle(flat.data(), prod.plan().hash(r)), 1e-9));
            }

            let k = rng.gen_range(1..5);
            let a = DenseTensor::from_fn(&[nu, k], |_| rng.gen_range(-1.0..1.0)).unwrap();
            let b = DenseTensor::from_fn(&[k, nv], |_| rng.gen_range(-1.0..1.0)).unwrap();
            let ab = contract(&a, &b, &ContractionSpec::new(vec![(1, 0)]).unwrap()).unwrap();
            let sk = cs_matrix_product(&a, &b, &pu, &pv).unwrap();
            for r in 0..d {
                assert!(close(sk.row(r), &oracle(ab.data(), sk.plan().hash(r)), 1e-9));
            }
        }
    }

    proptest! {
        #[test]
        fn sketch_is_linear(
            seed in any::<u64>(),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            u in proptest::collection::vec(-10.0f64..10.0, 12),
            v in proptest::collection::vec(-10.0f64..10.0, 12),
        ) {
            let plan = CsPlan::generate(12, 5, 3, seed).unwrap();
            let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| alpha * x + beta * y).collect();
            let lhs = plan.sketch(&mix).unwrap();
            let (su, sv) = (plan.sketch(&u).unwrap(), plan.sketch(&v).unwrap());
            let rhs: Vec<f64> = su.table().iter().zip(sv.table()).map(|(x, y)| alpha * x + beta * y).collect();
            prop_assert!(close(lhs.table(), &rhs, 1e-12));
        }

        #[test]
        fn median_lies_between_extremes(values in proptest::collection::vec(-1e6f64..1e6, 1..30)) {
            let m = median_estimate(&values).unwrap();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= m && m <= hi);
        }
    }
}
