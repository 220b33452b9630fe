use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{memory_account, relative_error_flat, timed, ExperimentConfig, ExperimentRow, PlanRef};
use crate::count_sketch::{cs_matrix_product, CsPlan};
use crate::error::{Error, Result};
use crate::hashing::operand_seed;
use crate::hcs::{HcsPlan, ModeSpec};
use crate::reshuffle::ReshufflePermutation;
use crate::tensor::{contract, kron_pairing_product, tensor_product, ContractionSpec, DenseTensor};

/// Operand slot reserved for input data; hash plans use 0, 1, ...
const DATA_OPERAND: usize = 100;

fn data_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(operand_seed(seed, DATA_OPERAND))
}

fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Result<DenseTensor> {
    DenseTensor::from_fn(shape, |_| rng.gen_range(lo..hi))
}

fn mode(n: usize, m: usize) -> ModeSpec {
    if m == n {
        ModeSpec::Identity(n)
    } else {
        ModeSpec::Hashed { n, m }
    }
}

/// Sketch size per mode giving roughly `ratio` compression across `order`
/// modes of size `n`.
fn per_mode(n: usize, order: i32, ratio: f64) -> usize {
    ((n as f64 / ratio.powf(1.0 / order as f64)).round() as usize).clamp(1, n)
}

fn dims_label(dims: &[usize]) -> String {
    dims.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x")
}

fn check(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.replicas == 0 {
        return Err(Error::InvalidSize("at least one replica is required".into()));
    }
    Ok(())
}

struct Cell<'a> {
    experiment: &'a str,
    cfg: &'a ExperimentConfig,
    exact_entries: usize,
}

impl Cell<'_> {
    #[allow(clippy::too_many_arguments)]
    fn row(
        &self,
        method: &str,
        sketch_entries: usize,
        sketch_dims: String,
        plan: PlanRef<'_>,
        compress_ns: u64,
        recover_ns: u64,
        relative_error: f64,
    ) -> ExperimentRow {
        let mem = memory_account(plan);
        ExperimentRow {
            experiment: self.experiment.to_string(),
            method: method.to_string(),
            compression_ratio: self.exact_entries as f64 / sketch_entries as f64,
            sketch_dims,
            replicas: self.cfg.replicas,
            seed: self.cfg.seed,
            compress_time_ns: compress_ns,
            recover_time_ns: recover_ns,
            hash_entries: mem.hash_entries,
            output_entries: mem.output_entries,
            relative_error,
            stored_hash_entries: mem.stored_hash_entries,
        }
    }
}

/// 50 x 50 matrix of uniform [-1, 1] noise whose column 1 is all 100.
pub fn spiked_matrix(seed: u64) -> Result<DenseTensor> {
    let mut rng = data_rng(seed);
    let mut t = uniform(&[50, 50], -1.0, 1.0, &mut rng)?;
    for i in 0..50 {
        t.data_mut()[i + 50] = 100.0;
    }
    Ok(t)
}

/// Count Sketch, HCS and HCS after reshuffling on the spiked matrix.
pub fn run_spike_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    check(cfg)?;
    let (n, d) = (50, cfg.replicas);
    let truth = spiked_matrix(cfg.seed)?;
    let cell = Cell {
        experiment: "spike",
        cfg,
        exact_entries: n * n,
    };
    let mut rows = Vec::new();
    for &ratio in &cfg.ratios {
        let m = per_mode(n, 2, ratio);

        let cs_plan = CsPlan::generate(n * n, m * m, d, operand_seed(cfg.seed, 0))?;
        let (sk, c_ns) = timed(cfg.timings, || cs_plan.sketch(truth.data()))?;
        let (est, r_ns) = timed(cfg.timings, || Ok(sk.recover_all()))?;
        let err = relative_error_flat(&est, truth.data())?;
        rows.push(cell.row("cs", m * m, (m * m).to_string(), PlanRef::Cs(&cs_plan), c_ns, r_ns, err));

        let plan = HcsPlan::generate(&[mode(n, m), mode(n, m)], d, operand_seed(cfg.seed, 1))?;
        let (sk, c_ns) = timed(cfg.timings, || plan.sketch_tensor(&truth))?;
        let (est, r_ns) = timed(cfg.timings, || sk.recover_full())?;
        let err = relative_error_flat(est.data(), truth.data())?;
        let label = dims_label(plan.sketch_dims());
        rows.push(cell.row("hcs", m * m, label.clone(), PlanRef::Hcs(&plan), c_ns, r_ns, err));

        let ((perm, sk), c_ns) = timed(cfg.timings, || {
            let perm = ReshufflePermutation::build(truth.data(), &[n, n])?;
            let sk = plan.sketch_vector(&perm.apply(truth.data())?)?;
            Ok((perm, sk))
        })?;
        let (est, r_ns) = timed(cfg.timings, || perm.invert(sk.recover_full()?.data()))?;
        let err = relative_error_flat(&est, truth.data())?;
        rows.push(cell.row("hcs-reshuffled", m * m, label, PlanRef::Hcs(&plan), c_ns, r_ns, err));
    }
    Ok(rows)
}

/// Sketches of `A (x) B` for two 30 x 30 uniform [-5, 5] matrices, built
/// from the operand sketches: Count Sketch of `vec(A) (x) vec(B)` by 1-D
/// convolution, HCS by 2-D convolution.
pub fn run_kron_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    check(cfg)?;
    let (n, d) = (30, cfg.replicas);
    let mut rng = data_rng(cfg.seed);
    let a = uniform(&[n, n], -5.0, 5.0, &mut rng)?;
    let b = uniform(&[n, n], -5.0, 5.0, &mut rng)?;
    let side = n * n;
    let cs_truth = tensor_product(
        &DenseTensor::from_vec(vec![side], a.data().to_vec())?,
        &DenseTensor::from_vec(vec![side], b.data().to_vec())?,
    );
    let hcs_truth = kron_pairing_product(&a, &b);
    let cell = Cell {
        experiment: "kron",
        cfg,
        exact_entries: side * side,
    };
    let mut rows = Vec::new();
    for &ratio in &cfg.ratios {
        let m = per_mode(side, 2, ratio);
        let c = m * m;

        let pa = CsPlan::generate(side, c, d, operand_seed(cfg.seed, 0))?;
        let pb = CsPlan::generate(side, c, d, operand_seed(cfg.seed, 1))?;
        let (sk, c_ns) = timed(cfg.timings, || {
            pa.sketch(a.data())?.outer_product(&pb.sketch(b.data())?)
        })?;
        let (est, r_ns) = timed(cfg.timings, || Ok(sk.recover_all()))?;
        let err = relative_error_flat(&est, cs_truth.data())?;
        rows.push(cell.row("cs", c, c.to_string(), PlanRef::Cs(sk.plan()), c_ns, r_ns, err));

        let ha = HcsPlan::generate(&[mode(n, m), mode(n, m)], d, operand_seed(cfg.seed, 2))?;
        let hb = HcsPlan::generate(&[mode(n, m), mode(n, m)], d, operand_seed(cfg.seed, 3))?;
        let (sk, c_ns) = timed(cfg.timings, || {
            ha.sketch_tensor(&a)?.tensor_product(&hb.sketch_tensor(&b)?)
        })?;
        let (est, r_ns) = timed(cfg.timings, || sk.recover_full())?;
        let err = relative_error_flat(est.data(), hcs_truth.data())?;
        let label = dims_label(sk.plan().sketch_dims());
        rows.push(cell.row("hcs", c, label, PlanRef::Hcs(sk.plan()), c_ns, r_ns, err));
    }
    Ok(rows)
}

/// Contraction of a 30 x 30 x 40 tensor with a 40 x 30 x 30 tensor over the
/// size-40 modes, entries uniform [0, 10]. Count Sketch sums 40 convolved
/// column/row sketches of the unfolded operands; HCS contracts the two
/// sketches directly with the shared mode left unhashed.
pub fn run_contract_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    check(cfg)?;
    let (n, r, d) = (30, 40, cfg.replicas);
    let mut rng = data_rng(cfg.seed);
    let a = uniform(&[n, n, r], 0.0, 10.0, &mut rng)?;
    let b = uniform(&[r, n, n], 0.0, 10.0, &mut rng)?;
    let spec = ContractionSpec::new(vec![(2, 0)])?;
    let truth = contract(&a, &b, &spec)?;
    let a_mat = a.clone().reshape(vec![n * n, r])?;
    let b_mat = b.clone().reshape(vec![r, n * n])?;
    let cell = Cell {
        experiment: "contract",
        cfg,
        exact_entries: truth.len(),
    };
    let mut rows = Vec::new();
    for &ratio in &cfg.ratios {
        let m = per_mode(n, 4, ratio);
        let c = m.pow(4);

        let rows_plan = CsPlan::generate(n * n, c, d, operand_seed(cfg.seed, 0))?;
        let cols_plan = CsPlan::generate(n * n, c, d, operand_seed(cfg.seed, 1))?;
        let (sk, c_ns) = timed(cfg.timings, || {
            cs_matrix_product(&a_mat, &b_mat, &rows_plan, &cols_plan)
        })?;
        let (est, r_ns) = timed(cfg.timings, || Ok(sk.recover_all()))?;
        let err = relative_error_flat(&est, truth.data())?;
        rows.push(cell.row("cs", c, c.to_string(), PlanRef::Cs(sk.plan()), c_ns, r_ns, err));

        let ha = HcsPlan::generate(
            &[mode(n, m), mode(n, m), ModeSpec::Identity(r)],
            d,
            operand_seed(cfg.seed, 2),
        )?;
        let hb = HcsPlan::generate(
            &[ModeSpec::Identity(r), mode(n, m), mode(n, m)],
            d,
            operand_seed(cfg.seed, 3),
        )?;
        let (sk, c_ns) = timed(cfg.timings, || {
            ha.sketch_tensor(&a)?.contract(&hb.sketch_tensor(&b)?, &spec)
        })?;
        let (est, r_ns) = timed(cfg.timings, || sk.recover_full())?;
        let err = relative_error_flat(est.data(), truth.data())?;
        let label = dims_label(sk.plan().sketch_dims());
        rows.push(cell.row("hcs", c, label, PlanRef::Hcs(sk.plan()), c_ns, r_ns, err));
    }
    Ok(rows)
}
