//! Count Sketch and Higher-order Count Sketch for vectors and dense tensors.
//!
//! [`tensor`] holds the exact dense algebra, [`count_sketch`] and [`hcs`] the
//! two sketch families, and [`bench`] the experiment drivers behind the
//! `hcsketch` binary.

pub mod bench;
pub mod count_sketch;
pub mod error;
pub mod fft;
pub mod hashing;
pub mod hcs;
pub mod reshuffle;
pub mod tensor;
pub mod verify;

pub use count_sketch::{cs_matrix_product, cs_tucker, median_estimate, CsPlan, CsSketch};
pub use error::{Error, Result};
pub use hashing::{IndexHash, ModeHash, SignHash};
pub use hcs::{HcsPlan, HcsSketch, ModeSpec};
pub use reshuffle::{ReshufflePermutation, Traversal};
pub use tensor::{ContractionSpec, DenseTensor};
