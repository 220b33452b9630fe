//! Property checks behind the `verify` subcommand. Each check returns the
//! worst relative deviation it observed over its random trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::count_sketch::{cs_matrix_product, cs_tucker, CsPlan, CsSketch};
use crate::error::Result;
use crate::fft::{circular_convolve, dft_nd, ComplexTensor};
use crate::hashing::operand_seed;
use crate::hcs::{HcsPlan, HcsSketch, ModeSpec};
use crate::tensor::{
    contract, kron_pairing_product, tensor_product, ContractionSpec, DenseTensor, MultiIndexIter,
};

/// Relative tolerance for every exact identity.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Result<DenseTensor> {
    DenseTensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0))
}

fn dims(rng: &mut ChaCha8Rng, order: usize, lo: usize, hi: usize) -> Vec<usize> {
    (0..order).map(|_| rng.gen_range(lo..=hi)).collect()
}

fn dense_tucker(core: &DenseTensor, factors: &[DenseTensor]) -> Result<DenseTensor> {
    factors
        .iter()
        .enumerate()
        .try_fold(core.clone(), |acc, (k, f)| acc.mode_product(f, k))
}

/// Identity-hashed sketching, contraction and Tucker sketching reproduce
/// their exact counterparts.
pub fn identity_exactness(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let order = rng.gen_range(1..=3);
        let shape = dims(&mut rng, order, 1, 6);
        let t = random(&shape, &mut rng)?;
        let plan = HcsPlan::identity(&shape, 3)?;
        let back = plan.sketch_tensor(&t)?.recover_full()?;
        worst = worst.max(rel(back.data(), t.data()));

        let (p, q, r) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..6));
        let a = random(&[p, r, q], &mut rng)?;
        let b = random(&[q, r], &mut rng)?;
        let spec = ContractionSpec::new(vec![(2, 0)])?;
        let pa = HcsPlan::identity(&[p, r, q], 2)?;
        let pb = HcsPlan::identity(&[q, r], 2)?;
        let c = pa.sketch_tensor(&a)?.contract(&pb.sketch_tensor(&b)?, &spec)?;
        worst = worst.max(rel(c.recover_full()?.data(), contract(&a, &b, &spec)?.data()));

        let core = random(&[2, 3, 2], &mut rng)?;
        let factors = vec![random(&[4, 2], &mut rng)?, random(&[3, 3], &mut rng)?, random(&[5, 2], &mut rng)?];
        let plan = HcsPlan::identity(&[4, 3, 5], 2)?;
        let sk = HcsSketch::from_tucker(&core, &factors, &plan)?;
        worst = worst.max(rel(sk.recover_full()?.data(), dense_tucker(&core, &factors)?.data()));
    }
    Ok(worst)
}

/// Convolved Count Sketches of `u` and `v` (and of matrix and Tucker
/// factors) equal a direct sketch of the flattened exact result under the
/// derived hash.
pub fn cs_convolution_identity(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials as u64 {
        let root = operand_seed(seed, t as usize);
        let (nu, nv, c) = (rng.gen_range(1..100), rng.gen_range(1..100), rng.gen_range(1..64));
        let pu = CsPlan::generate_for_mode(nu, c, 2, root, 0)?;
        let pv = CsPlan::generate_for_mode(nv, c, 2, root, 1)?;
        let u = random(&[nu], &mut rng)?;
        let v = random(&[nv], &mut rng)?;
        let sk = pu.sketch(u.data())?.outer_product(&pv.sketch(v.data())?)?;
        let direct = CsSketch::sketch(tensor_product(&u, &v).data(), sk.plan())?;
        worst = worst.max(rel(sk.table(), direct.table()));

        let k = rng.gen_range(1..8);
        let a = random(&[nu, k], &mut rng)?;
        let b = random(&[k, nv], &mut rng)?;
        let sk = cs_matrix_product(&a, &b, &pu, &pv)?;
        let ab = contract(&a, &b, &ContractionSpec::new(vec![(1, 0)])?)?;
        worst = worst.max(rel(sk.table(), CsSketch::sketch(ab.data(), sk.plan())?.table()));

        let n3 = rng.gen_range(1..12);
        let pw = CsPlan::generate_for_mode(n3, c, 2, root, 2)?;
        let core = random(&[2, 2, 3], &mut rng)?;
        let factors = vec![random(&[nu, 2], &mut rng)?, random(&[nv, 2], &mut rng)?, random(&[n3, 3], &mut rng)?];
        let sk = cs_tucker(&core, [&factors[0], &factors[1], &factors[2]], [&pu, &pv, &pw])?;
        let dense = dense_tucker(&core, &factors)?;
        worst = worst.max(rel(sk.table(), CsSketch::sketch(dense.data(), sk.plan())?.table()));
    }
    Ok(worst)
}

/// Sketched tensor product equals a direct sketch of the paired Kronecker
/// product under the derived per-mode hashes.
pub fn product_identity(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let order = rng.gen_range(1..=3);
        let hi = [90, 9, 4][order - 1];
        let da = dims(&mut rng, order, 1, hi);
        let db_order = rng.gen_range(1..=order);
        let db = dims(&mut rng, db_order, 1, hi);
        let ms = dims(&mut rng, order, 1, 7);
        let pa = HcsPlan::hashed(&da, &ms, 2, operand_seed(seed ^ t as u64, 0))?;
        let pb = HcsPlan::hashed(&db, &ms[..db_order], 2, operand_seed(seed ^ t as u64, 1))?;
        let a = random(&da, &mut rng)?;
        let b = random(&db, &mut rng)?;
        let sk = pa.sketch_tensor(&a)?.tensor_product(&pb.sketch_tensor(&b)?)?;
        let direct = sk.plan().sketch_tensor(&kron_pairing_product(&a, &b))?;
        for r in 0..2 {
            worst = worst.max(rel(sk.replica(r).data(), direct.replica(r).data()));
        }
    }
    Ok(worst)
}

/// Contraction of sketches equals a direct sketch of the exact contraction.
pub fn contraction_identity(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (oa, ob) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let da = dims(&mut rng, oa, 1, 8);
        let mut db = dims(&mut rng, ob, 1, 8);
        let (ka, kb) = (rng.gen_range(0..oa), rng.gen_range(0..ob));
        db[kb] = da[ka];
        let spec_a: Vec<ModeSpec> = da
            .iter()
            .enumerate()
            .map(|(k, &n)| if k == ka { ModeSpec::Identity(n) } else { ModeSpec::Hashed { n, m: rng.gen_range(1..6) } })
            .collect();
        let spec_b: Vec<ModeSpec> = db
            .iter()
            .enumerate()
            .map(|(k, &n)| if k == kb { ModeSpec::Identity(n) } else { ModeSpec::Hashed { n, m: rng.gen_range(1..6) } })
            .collect();
        let pa = HcsPlan::generate(&spec_a, 2, operand_seed(seed ^ t as u64, 0))?;
        let pb = HcsPlan::generate(&spec_b, 2, operand_seed(seed ^ t as u64, 1))?;
        let a = random(&da, &mut rng)?;
        let b = random(&db, &mut rng)?;
        let spec = ContractionSpec::new(vec![(ka, kb)])?;
        let sk = pa.sketch_tensor(&a)?.contract(&pb.sketch_tensor(&b)?, &spec)?;
        let direct = sk.plan().sketch_tensor(&contract(&a, &b, &spec)?)?;
        for r in 0..2 {
            worst = worst.max(rel(sk.replica(r).data(), direct.replica(r).data()));
        }
    }
    Ok(worst)
}

/// Tucker sketch from sketched factors equals a direct sketch of the dense
/// reconstruction.
pub fn tucker_identity(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let order = rng.gen_range(1..=3);
        let ranks = dims(&mut rng, order, 1, 4);
        let ns = dims(&mut rng, order, 1, 12);
        let ms = dims(&mut rng, order, 1, 6);
        let core = random(&ranks, &mut rng)?;
        let factors = ns
            .iter()
            .zip(&ranks)
            .map(|(&n, &r)| random(&[n, r], &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let plan = HcsPlan::hashed(&ns, &ms, 2, operand_seed(seed ^ t as u64, 0))?;
        let sk = HcsSketch::from_tucker(&core, &factors, &plan)?;
        let direct = plan.sketch_tensor(&dense_tucker(&core, &factors)?)?;
        for r in 0..2 {
            worst = worst.max(rel(sk.replica(r).data(), direct.replica(r).data()));
        }
    }
    Ok(worst)
}

/// `C[t] = sum_s A[s] B[(t - s) mod shape]` by direct summation.
pub fn direct_convolve(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let shape = a.shape().to_vec();
    let cells: Vec<Vec<usize>> = MultiIndexIter::new(&shape).collect();
    let mut out = DenseTensor::zeros(&shape)?;
    for (ti, t) in cells.iter().enumerate() {
        let mut acc = 0.0;
        for (si, s) in cells.iter().enumerate() {
            let mut flat = 0;
            let mut stride = 1;
            for k in 0..shape.len() {
                flat += ((t[k] + shape[k] - s[k]) % shape[k]) * stride;
                stride *= shape[k];
            }
            acc += a.data()[si] * b.data()[flat];
        }
        out.data_mut()[ti] = acc;
    }
    Ok(out)
}

/// FFT convolution against direct summation on random shapes, including
/// prime and other non-power-of-two mode sizes.
pub fn fft_convolution(trials: usize, max_len: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let order = rng.gen_range(1..=3);
        let cap = (max_len as f64).powf(1.0 / order as f64).floor().max(1.0) as usize;
        let shape = dims(&mut rng, order, 1, cap);
        let a = random(&shape, &mut rng)?;
        let b = random(&shape, &mut rng)?;
        let fast = circular_convolve(&a, &b)?;
        worst = worst.max(rel(fast.data(), direct_convolve(&a, &b)?.data()));
    }
    Ok(worst)
}

/// `|| DFT(T) ||^2 = prod(m_k) || T ||^2`.
pub fn parseval(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let order = rng.gen_range(1..=4);
        let shape = dims(&mut rng, order, 1, 13);
        let t = random(&shape, &mut rng)?;
        let spectrum = dft_nd(&ComplexTensor::from_real(&t)).norm_sqr();
        let want = t.len() as f64 * t.frobenius_norm().powi(2);
        worst = worst.max((spectrum - want).abs() / want);
    }
    Ok(worst)
}

/// The quick suite run by `hcsketch verify`.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    let exact = |name, worst| Check {
        name,
        worst,
        tolerance: EXACT_TOLERANCE,
    };
    Ok(vec![
        exact("identity hashes are exact", identity_exactness(20, seed)?),
        exact("count sketch convolution identities", cs_convolution_identity(20, seed)?),
        exact("tensor product sketch", product_identity(20, seed)?),
        exact("contraction sketch", contraction_identity(20, seed)?),
        exact("tucker sketch", tucker_identity(20, seed)?),
        exact("fft convolution theorem", fft_convolution(20, 400, seed)?),
        exact("parseval", parseval(20, seed)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        for check in run_all(1).unwrap() {
            assert!(check.passed(), "{} worst {}", check.name, check.worst);
        }
    }

    #[test]
    fn direct_convolution_example() {
        let a = DenseTensor::from_vec(vec![2], vec![1.0, 2.0]).unwrap();
        let b = DenseTensor::from_vec(vec![2], vec![3.0, 4.0]).unwrap();
        assert_eq!(direct_convolve(&a, &b).unwrap().data(), &[11.0, 10.0]);
    }
}
