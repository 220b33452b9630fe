//! Value-aware re-layout of a vector before tensor sketching.
//!
//! Entries are ranked by descending value and laid out along diagonals so
//! that large values land in different fibers. The permutation is kept so
//! recovered estimates can be mapped back to the original positions.

use crate::error::{Error, Result};
use crate::tensor::{strides, MultiIndexIter};

/// Order in which ranked entries fill the tensor cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Traversal {
    /// Wrapped diagonals: cell `(i_1, (i_1 + j_2) mod n_2, ..)` for each
    /// offset `(j_2, ..)` in column-major order, `i_1` ascending on even
    /// offsets and descending on odd ones. The first `n_1` ranks fill the
    /// main diagonal, so no two of them share a row or column.
    #[default]
    WrappedDiagonal,
    /// Diagonals of constant index sum `t = 0, 1, ..`, cells in lexicographic
    /// order, reversed on odd `t`.
    IndexSum,
}

impl Traversal {
    /// Flat (column-major) cells in placement order.
    pub fn cells(self, shape: &[usize]) -> Vec<usize> {
        let st = strides(shape);
        let flat = |idx: &[usize]| idx.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>();
        match self {
            Traversal::IndexSum => {
                let mut all: Vec<Vec<usize>> = MultiIndexIter::new(shape).collect();
                all.sort_by(|a, b| {
                    let (sa, sb) = (a.iter().sum::<usize>(), b.iter().sum::<usize>());
                    sa.cmp(&sb).then_with(|| {
                        if sa % 2 == 1 {
                            b.cmp(a)
                        } else {
                            a.cmp(b)
                        }
                    })
                });
                all.iter().map(|idx| flat(idx)).collect()
            }
            Traversal::WrappedDiagonal => {
                if shape.is_empty() {
                    return vec![0];
                }
                let n1 = shape[0];
                let mut out = Vec::with_capacity(shape.iter().product());
                let mut idx = vec![0; shape.len()];
                for (diag, offset) in MultiIndexIter::new(&shape[1..]).enumerate() {
                    for step in 0..n1 {
                        let i1 = if diag % 2 == 1 { n1 - 1 - step } else { step };
                        idx[0] = i1;
                        for (k, &j) in offset.iter().enumerate() {
                            idx[k + 1] = (i1 + j) % shape[k + 1];
                        }
                        out.push(flat(&idx));
                    }
                }
                out
            }
        }
    }
}

/// Bijection between original positions and tensor cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReshufflePermutation {
    /// `forward[i]` is the cell receiving original entry `i`.
    forward: Vec<usize>,
    /// `inverse[cell]` is the original entry stored in `cell`.
    inverse: Vec<usize>,
    shape: Vec<usize>,
}

impl ReshufflePermutation {
    pub fn build(u: &[f64], shape: &[usize]) -> Result<Self> {
        Self::build_with(u, shape, Traversal::default())
    }

    pub fn build_with(u: &[f64], shape: &[usize], traversal: Traversal) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != u.len() || shape.iter().any(|&n| n == 0) {
            return Err(Error::ShapeMismatch {
                shape: shape.to_vec(),
                expected: len,
                actual: u.len(),
            });
        }
        let mut ranked: Vec<usize> = (0..u.len()).collect();
        ranked.sort_by(|&a, &b| u[b].total_cmp(&u[a]).then(a.cmp(&b)));
        let cells = traversal.cells(shape);
        let mut forward = vec![0; len];
        let mut inverse = vec![0; len];
        for (&i, &cell) in ranked.iter().zip(&cells) {
            forward[i] = cell;
            inverse[cell] = i;
        }
        Ok(Self {
            forward,
            inverse,
            shape: shape.to_vec(),
        })
    }

    pub fn identity(shape: &[usize]) -> Self {
        let len: usize = shape.iter().product();
        Self {
            forward: (0..len).collect(),
            inverse: (0..len).collect(),
            shape: shape.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.forward.len() {
            return Err(Error::ShapeMismatch {
                shape: self.shape.clone(),
                expected: self.forward.len(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Original layout to reshuffled layout.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u.len())?;
        Ok(self.inverse.iter().map(|&i| u[i]).collect())
    }

    /// Reshuffled layout back to the original one.
    pub fn invert(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        Ok(self.forward.iter().map(|&cell| v[cell]).collect())
    }
}
