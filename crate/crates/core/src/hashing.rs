//! Seeded pairwise-independent hash families.
//!
//! Both index and sign hashes use `((a i + b) mod p)` with the Mersenne prime
//! `p = 2^61 - 1`, reduced mod `m` (index) or mod 2 (sign). The modulo bias of
//! the final reduction is ignored since `p` is far larger than any bucket
//! count used here.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Which random stream a derived seed feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Index = 0,
    Sign = 1,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for one (replica, mode, stream) cell of an experiment.
pub fn derive_seed(root: u64, replica: usize, mode: usize, stream: Stream) -> u64 {
    let mut z = splitmix64(root);
    z = splitmix64(z ^ replica as u64);
    z = splitmix64(z ^ ((mode as u64) << 1 | stream as u64));
    z
}

/// Root seed for one operand of a multi-operand experiment, so each operand
/// draws hashes independent of the others.
pub fn operand_seed(root: u64, operand: usize) -> u64 {
    splitmix64(root ^ splitmix64(0x5ca1_ab1e ^ operand as u64))
}

fn affine_params(seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        rng.gen_range(1..MERSENNE_61),
        rng.gen_range(0..MERSENNE_61),
    )
}

#[inline]
fn affine_mod_p(a: u64, b: u64, i: u64) -> u64 {
    ((a as u128 * i as u128 + b as u128) % MERSENNE_61 as u128) as u64
}

/// `h(i) = ((a i + b) mod p) mod m` on `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexHash {
    n: usize,
    m: usize,
    a: u64,
    b: u64,
    seed: u64,
}

impl IndexHash {
    pub fn new(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidSize(format!(
                "index hash needs n, m >= 1 (got n={n}, m={m})"
            )));
        }
        let (a, b) = affine_params(seed);
        Ok(Self { n, m, a, b, seed })
    }

    pub fn domain(&self) -> usize {
        self.n
    }

    pub fn range(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        (affine_mod_p(self.a, self.b, i as u64) % self.m as u64) as usize
    }

    pub fn table(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.get(i)).collect()
    }
}

/// `s(i) = 1 - 2 ((a i + b) mod p mod 2)` on `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignHash {
    n: usize,
    a: u64,
    b: u64,
    seed: u64,
}

impl SignHash {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("sign hash needs n >= 1".into()));
        }
        let (a, b) = affine_params(seed);
        Ok(Self { n, a, b, seed })
    }

    pub fn domain(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        if affine_mod_p(self.a, self.b, i as u64) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn table(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i)).collect()
    }
}

/// The 0/1 matrix `H` with `H[h(i), i] = 1`.
pub fn hash_matrix(h: &ModeHash) -> DenseTensor {
    let mut out = DenseTensor::zeros(&[h.range(), h.domain()]).expect("hash sizes are positive");
    for i in 0..h.domain() {
        let flat = h.bucket(i) + i * h.range();
        out.data_mut()[flat] = 1.0;
    }
    out
}

/// The (bucket, sign) pair applied to one mode of one replica.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeHash {
    /// Explicit lookup tables, normally filled from an [`IndexHash`] and a
    /// [`SignHash`].
    Table {
        buckets: Vec<usize>,
        signs: Vec<f64>,
        range: usize,
    },
    /// `h(i) = i`, `s(i) = +1`.
    Identity { n: usize },
    /// Hash over paired indices `i = major_index * minor.domain() + minor_index`:
    /// buckets add mod the shared range and signs multiply.
    Composite {
        major: Arc<ModeHash>,
        minor: Arc<ModeHash>,
    },
}

impl ModeHash {
    /// Random index and sign hash with independent seeds.
    pub fn hashed(n: usize, m: usize, index_seed: u64, sign_seed: u64) -> Result<Self> {
        let h = IndexHash::new(n, m, index_seed)?;
        let s = SignHash::new(n, sign_seed)?;
        Ok(Self::Table {
            buckets: h.table(),
            signs: s.table(),
            range: m,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("identity hash needs n >= 1".into()));
        }
        Ok(Self::Identity { n })
    }

    pub fn from_tables(buckets: Vec<usize>, signs: Vec<f64>, range: usize) -> Result<Self> {
        if buckets.is_empty() || range == 0 {
            return Err(Error::InvalidSize("hash tables must be non-empty".into()));
        }
        if buckets.len() != signs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} buckets but {} signs",
                buckets.len(),
                signs.len()
            )));
        }
        if let Some(&b) = buckets.iter().find(|&&b| b >= range) {
            return Err(Error::InvalidSize(format!("bucket {b} outside range {range}")));
        }
        if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidSize("signs must be +1 or -1".into()));
        }
        Ok(Self::Table {
            buckets,
            signs,
            range,
        })
    }

    /// Singleton domain sent to bucket 0 with sign +1; pads lower-order
    /// operands of a sketched tensor product.
    pub fn unit(range: usize) -> Result<Self> {
        Self::from_tables(vec![0], vec![1.0], range)
    }

    pub fn composite(major: Arc<ModeHash>, minor: Arc<ModeHash>) -> Result<Self> {
        if major.range() != minor.range() {
            return Err(Error::Incompatible(format!(
                "paired hashes have ranges {} and {}",
                major.range(),
                minor.range()
            )));
        }
        Ok(Self::Composite { major, minor })
    }

    pub fn domain(&self) -> usize {
        match self {
            Self::Table { buckets, .. } => buckets.len(),
            Self::Identity { n } => *n,
            Self::Composite { major, minor } => major.domain() * minor.domain(),
        }
    }

    pub fn range(&self) -> usize {
        match self {
            Self::Table { range, .. } => *range,
            Self::Identity { n } => *n,
            Self::Composite { major, .. } => major.range(),
        }
    }

    #[inline]
    pub fn bucket(&self, i: usize) -> usize {
        match self {
            Self::Table { buckets, .. } => buckets[i],
            Self::Identity { .. } => i,
            Self::Composite { major, minor } => {
                let n = minor.domain();
                (major.bucket(i / n) + minor.bucket(i % n)) % major.range()
            }
        }
    }

    #[inline]
    pub fn sign(&self, i: usize) -> f64 {
        match self {
            Self::Table { signs, .. } => signs[i],
            Self::Identity { .. } => 1.0,
            Self::Composite { major, minor } => {
                let n = minor.domain();
                major.sign(i / n) * minor.sign(i % n)
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity { .. })
    }

    /// Index and sign entries that must be stored to evaluate this hash.
    pub fn stored_entries(&self) -> usize {
        match self {
            Self::Table { buckets, .. } => 2 * buckets.len(),
            Self::Identity { .. } => 0,
            Self::Composite { major, minor } => major.stored_entries() + minor.stored_entries(),
        }
    }

    /// Materialized `(bucket, sign)` tables over the whole domain.
    pub fn tables(&self) -> (Vec<usize>, Vec<f64>) {
        let n = self.domain();
        ((0..n).map(|i| self.bucket(i)).collect(), (0..n).map(|i| self.sign(i)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_bucket_maps_everything_to_zero() {
        let h = IndexHash::new(100, 1, 7).unwrap();
        assert!(h.table().iter().all(|&b| b == 0));
    }

    #[test]
    fn same_seed_same_tables() {
        assert_eq!(
            IndexHash::new(500, 13, 99).unwrap().table(),
            IndexHash::new(500, 13, 99).unwrap().table()
        );
        assert_eq!(
            SignHash::new(500, 99).unwrap().table(),
            SignHash::new(500, 99).unwrap().table()
        );
        assert_ne!(
            IndexHash::new(500, 13, 99).unwrap().table(),
            IndexHash::new(500, 13, 100).unwrap().table()
        );
    }

    #[test]
    fn zero_sizes_rejected() {
        assert!(IndexHash::new(0, 4, 1).is_err());
        assert!(IndexHash::new(4, 0, 1).is_err());
        assert!(SignHash::new(0, 1).is_err());
        assert!(ModeHash::identity(0).is_err());
    }

    #[test]
    fn index_hash_formula() {
        let h = IndexHash::new(50, 7, 3).unwrap();
        for i in 0..50 {
            let want = ((h.a as u128 * i as u128 + h.b as u128) % MERSENNE_61 as u128) % 7;
            assert_eq!(h.get(i) as u128, want);
        }
        assert!(h.a >= 1 && h.a < MERSENNE_61 && h.b < MERSENNE_61);
    }

    #[test]
    fn bucket_occupancy_is_uniform() {
        let (n, m) = (10_000usize, 10usize);
        let h = IndexHash::new(n, m, 2024).unwrap();
        let mut counts = vec![0f64; m];
        for b in h.table() {
            counts[b] += 1.0;
        }
        let expected = n as f64 / m as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // chi-square with 9 degrees of freedom: mean 9, sd sqrt(18).
        let dof = (m - 1) as f64;
        assert!(chi2 <= dof + 5.0 * (2.0 * dof).sqrt(), "chi2 = {chi2}");
    }

    #[test]
    fn signs_are_balanced() {
        let n = 10_000;
        let s = SignHash::new(n, 77).unwrap();
        let t = s.table();
        assert!(t.iter().all(|&x| x == 1.0 || x == -1.0));
        let mean = t.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() <= 5.0 / (n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn pairwise_collision_rate() {
        let (m, seeds) = (8usize, 10_000u64);
        let (i, j) = (3usize, 11usize);
        let mut hits = 0u64;
        for seed in 0..seeds {
            let h = IndexHash::new(16, m, derive_seed(5, seed as usize, 0, Stream::Index)).unwrap();
            if h.get(i) == h.get(j) {
                hits += 1;
            }
        }
        let p = 1.0 / m as f64;
        let sigma = (p * (1.0 - p) / seeds as f64).sqrt();
        let rate = hits as f64 / seeds as f64;
        assert!((rate - p).abs() <= 3.0 * sigma, "rate = {rate}");
    }

    #[test]
    fn hash_matrix_shapes() {
        let eye = hash_matrix(&ModeHash::identity(3).unwrap());
        let want = DenseTensor::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(eye, want);
        let one = hash_matrix(&ModeHash::hashed(5, 1, 1, 2).unwrap());
        assert_eq!(one.shape(), &[1, 5]);
        assert!(one.data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..20 {
            for k in 0..4 {
                for s in [Stream::Index, Stream::Sign] {
                    assert!(seen.insert(derive_seed(42, r, k, s)));
                }
            }
        }
    }

    #[test]
    fn composite_pairs_major_and_minor() {
        let major = Arc::new(ModeHash::from_tables(vec![1, 2], vec![1.0, -1.0], 3).unwrap());
        let minor = Arc::new(ModeHash::from_tables(vec![2, 0, 1], vec![-1.0, 1.0, 1.0], 3).unwrap());
        let c = ModeHash::composite(major, minor).unwrap();
        assert_eq!(c.domain(), 6);
        // i = 4 -> major 1, minor 1: bucket (2 + 0) mod 3, sign -1 * 1.
        assert_eq!(c.bucket(4), 2);
        assert_eq!(c.sign(4), -1.0);
        // i = 2 -> major 0, minor 2: bucket (1 + 1) mod 3.
        assert_eq!(c.bucket(2), 2);
        assert_eq!(c.stored_entries(), 10);
        let bad = ModeHash::composite(
            Arc::new(ModeHash::identity(2).unwrap()),
            Arc::new(ModeHash::identity(3).unwrap()),
        );
        assert!(bad.is_err());
    }

    proptest! {
        #[test]
        fn every_column_of_the_hash_matrix_has_one_entry(
            n in 1usize..40, m in 1usize..12, seed in any::<u64>()
        ) {
            let h = ModeHash::hashed(n, m, seed, seed ^ 1).unwrap();
            let mat = hash_matrix(&h);
            for i in 0..n {
                let col: f64 = (0..m).map(|j| mat.get(&[j, i]).unwrap()).sum();
                prop_assert_eq!(col, 1.0);
            }
        }

        #[test]
        fn buckets_stay_in_range(n in 1usize..200, m in 1usize..50, seed in any::<u64>()) {
            let h = IndexHash::new(n, m, seed).unwrap();
            prop_assert!(h.table().iter().all(|&b| b < m));
        }
    }
}
