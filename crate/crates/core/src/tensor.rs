//! Dense N-dimensional tensors and the exact tensor algebra every sketch is
//! checked against.
//!
//! Storage is column-major: the first mode varies fastest, so the flat index
//! of `(i_1, .., i_N)` is `i_1 + i_2 n_1 + i_3 n_1 n_2 + ..`. All modes are
//! zero-based. An empty shape denotes an order-0 (scalar) tensor.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Column-major strides for `shape`.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(shape.len());
    let mut acc = 1;
    for &n in shape {
        out.push(acc);
        acc *= n;
    }
    out
}

fn checked_len(shape: &[usize]) -> Result<usize> {
    let mut len: usize = 1;
    for &n in shape {
        if n == 0 {
            return Err(Error::InvalidSize(format!(
                "shape {shape:?} has a zero-length mode"
            )));
        }
        len = len
            .checked_mul(n)
            .ok_or_else(|| Error::InvalidSize(format!("shape {shape:?} overflows usize")))?;
    }
    Ok(len)
}

/// Odometer over all multi-indices of a shape in column-major order.
#[derive(Debug, Clone)]
pub struct MultiIndexIter {
    shape: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl MultiIndexIter {
    pub fn new(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            current: vec![0; shape.len()],
            done: shape.iter().any(|&n| n == 0),
        }
    }
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut k = 0;
        loop {
            if k == self.shape.len() {
                self.done = true;
                break;
            }
            self.current[k] += 1;
            if self.current[k] < self.shape[k] {
                break;
            }
            self.current[k] = 0;
            k += 1;
        }
        Some(out)
    }
}

impl DenseTensor {
    /// Interprets `data` as a column-major tensor of the given shape. No
    /// values are reordered.
    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = checked_len(&shape)?;
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = checked_len(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn from_fn<F>(shape: &[usize], mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> f64,
    {
        let len = checked_len(shape)?;
        let mut data = Vec::with_capacity(len);
        for idx in MultiIndexIter::new(shape) {
            data.push(f(&idx));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Builds a matrix from row-major nested rows, e.g. `[[1,3],[2,4]]` has
    /// `T[0,1] = 3`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_fn(&[nrows, ncols], |idx| rows[idx[0]][idx[1]])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn flat_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() || index.iter().zip(&self.shape).any(|(i, n)| i >= n)
        {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                shape: self.shape.clone(),
            });
        }
        let mut flat = 0;
        let mut stride = 1;
        for (&i, &n) in index.iter().zip(&self.shape) {
            flat += i * stride;
            stride *= n;
        }
        Ok(flat)
    }

    pub fn multi_index(&self, mut flat: usize) -> Result<Vec<usize>> {
        if flat >= self.data.len() {
            return Err(Error::IndexOutOfRange {
                index: vec![flat],
                shape: self.shape.clone(),
            });
        }
        let mut out = Vec::with_capacity(self.shape.len());
        for &n in &self.shape {
            out.push(flat % n);
            flat /= n;
        }
        Ok(out)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.flat_index(index)?])
    }

    /// Same values, new shape. The element count must be unchanged.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::from_vec(shape, self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Appends trailing singleton modes up to `order`.
    pub fn pad_to_order(&self, order: usize) -> Self {
        let mut shape = self.shape.clone();
        while shape.len() < order {
            shape.push(1);
        }
        Self {
            shape,
            data: self.data.clone(),
        }
    }

    /// Reorders modes: output mode `k` is input mode `axes[k]`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let order = self.order();
        let mut seen = vec![false; order];
        if axes.len() != order {
            return Err(Error::InvalidSize(format!(
                "permutation {axes:?} does not match order {order}"
            )));
        }
        for &a in axes {
            if a >= order || seen[a] {
                return Err(Error::InvalidSize(format!("{axes:?} is not a permutation")));
            }
            seen[a] = true;
        }
        if axes.iter().enumerate().all(|(k, &a)| k == a) {
            return Ok(self.clone());
        }
        let in_strides = strides(&self.shape);
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let gather: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        for_each_offset(&out_shape, &gather, |src| data.push(self.data[src]));
        Ok(Self {
            shape: out_shape,
            data,
        })
    }

    /// `p`-mode product `T x_p M` with `M` of shape `m x n_p`:
    /// `(T x_p M)[.., j, ..] = sum_i T[.., i, ..] M[j, i]`.
    pub fn mode_product(&self, matrix: &DenseTensor, mode: usize) -> Result<Self> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        if matrix.order() != 2 || matrix.shape[1] != self.shape[mode] {
            return Err(Error::DimensionMismatch(format!(
                "matrix of shape {:?} cannot act on mode {mode} of size {}",
                matrix.shape, self.shape[mode]
            )));
        }
        let rows = matrix.shape[0];
        let n = self.shape[mode];
        let inner: usize = self.shape[..mode].iter().product();
        let outer: usize = self.shape[mode + 1..].iter().product();
        let mut out_shape = self.shape.clone();
        out_shape[mode] = rows;
        let mut data = vec![0.0; inner * rows * outer];
        for o in 0..outer {
            for i in 0..n {
                let src = &self.data[(o * n + i) * inner..(o * n + i + 1) * inner];
                for j in 0..rows {
                    let w = matrix.data[j + i * rows];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut data[(o * rows + j) * inner..(o * rows + j + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        Ok(Self {
            shape: out_shape,
            data,
        })
    }
}

/// Visits `sum_k idx_k * strides_k` for every multi-index of `shape` in
/// column-major order.
pub(crate) fn for_each_offset(shape: &[usize], strides: &[usize], mut f: impl FnMut(usize)) {
    if shape.iter().any(|&n| n == 0) {
        return;
    }
    if shape.is_empty() {
        f(0);
        return;
    }
    let order = shape.len();
    let mut idx = vec![0usize; order];
    let mut base = 0usize;
    let (n0, s0) = (shape[0], strides[0]);
    loop {
        for i in 0..n0 {
            f(base + i * s0);
        }
        let mut k = 1;
        loop {
            if k == order {
                return;
            }
            idx[k] += 1;
            base += strides[k];
            if idx[k] < shape[k] {
                break;
            }
            base -= strides[k] * shape[k];
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Outer (tensor) product: `C[i.., j..] = A[i..] B[j..]`, order `p + q`.
pub fn tensor_product(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let mut shape = a.shape.clone();
    shape.extend_from_slice(&b.shape);
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &y in &b.data {
        data.extend(a.data.iter().map(|&x| x * y));
    }
    DenseTensor { shape, data }
}

/// Kronecker product with per-mode index pairing. Output mode `k` has size
/// `n_k(A) n_k(B)`; entry `(a_k n_k(B) + b_k)_k` equals `A[a] B[b]`. The
/// lower-order operand is padded with trailing singleton modes.
pub fn kron_pairing_product(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let order = a.order().max(b.order());
    let a = a.pad_to_order(order);
    let b = b.pad_to_order(order);
    let shape: Vec<usize> = a.shape.iter().zip(&b.shape).map(|(x, y)| x * y).collect();
    let out_strides = strides(&shape);
    // Placing A[a] B[b] at sum_k (a_k nB_k + b_k) s_k splits into an A part
    // with strides nB_k s_k and a B part with strides s_k.
    let a_strides: Vec<usize> = (0..order).map(|k| b.shape[k] * out_strides[k]).collect();
    let mut a_offsets = Vec::with_capacity(a.len());
    for_each_offset(&a.shape, &a_strides, |o| a_offsets.push(o));
    let mut b_offsets = Vec::with_capacity(b.len());
    for_each_offset(&b.shape, &out_strides, |o| b_offsets.push(o));
    let mut data = vec![0.0; a.len() * b.len()];
    for (&x, &ao) in a.data.iter().zip(&a_offsets) {
        for (&y, &bo) in b.data.iter().zip(&b_offsets) {
            data[ao + bo] = x * y;
        }
    }
    DenseTensor { shape, data }
}

/// Pairing of contracted modes between two tensors. Output modes are the
/// free modes of `A` in ascending order followed by the free modes of `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionSpec {
    pairs: Vec<(usize, usize)>,
}

impl ContractionSpec {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(a, b)) in pairs.iter().enumerate() {
            for &(a2, b2) in &pairs[..i] {
                if a == a2 || b == b2 {
                    return Err(Error::InvalidContraction(format!(
                        "mode paired twice in {pairs:?}"
                    )));
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn contracted_a(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn contracted_b(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    pub fn free_a(&self, order_a: usize) -> Vec<usize> {
        (0..order_a).filter(|k| !self.pairs.iter().any(|p| p.0 == *k)).collect()
    }

    pub fn free_b(&self, order_b: usize) -> Vec<usize> {
        (0..order_b).filter(|k| !self.pairs.iter().any(|p| p.1 == *k)).collect()
    }

    /// Checks mode ranges and paired dimensions against two shapes.
    pub fn validate(&self, shape_a: &[usize], shape_b: &[usize]) -> Result<()> {
        for &(a, b) in &self.pairs {
            if a >= shape_a.len() {
                return Err(Error::ModeOutOfRange {
                    mode: a,
                    order: shape_a.len(),
                });
            }
            if b >= shape_b.len() {
                return Err(Error::ModeOutOfRange {
                    mode: b,
                    order: shape_b.len(),
                });
            }
            if shape_a[a] != shape_b[b] {
                return Err(Error::DimensionMismatch(format!(
                    "contracted modes ({a}, {b}) have sizes {} and {}",
                    shape_a[a], shape_b[b]
                )));
            }
        }
        Ok(())
    }

    pub fn output_shape(&self, shape_a: &[usize], shape_b: &[usize]) -> Vec<usize> {
        self.free_a(shape_a.len())
            .into_iter()
            .map(|k| shape_a[k])
            .chain(self.free_b(shape_b.len()).into_iter().map(|k| shape_b[k]))
            .collect()
    }
}

/// Column-major `(m x r) * (r x n)` product.
pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, r: usize, n: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    for j in 0..n {
        let col = &mut c[j * m..(j + 1) * m];
        for k in 0..r {
            let w = b[k + j * r];
            if w == 0.0 {
                continue;
            }
            let a_col = &a[k * m..(k + 1) * m];
            for (ci, ai) in col.iter_mut().zip(a_col) {
                *ci += w * ai;
            }
        }
    }
    c
}

/// General contraction `C_L = sum_R A_{:R} (x) B_{R:}`.
pub fn contract(a: &DenseTensor, b: &DenseTensor, spec: &ContractionSpec) -> Result<DenseTensor> {
    spec.validate(&a.shape, &b.shape)?;
    let free_a = spec.free_a(a.order());
    let free_b = spec.free_b(b.order());
    let con_a = spec.contracted_a();
    let con_b = spec.contracted_b();

    let perm_a: Vec<usize> = free_a.iter().chain(&con_a).copied().collect();
    let perm_b: Vec<usize> = con_b.iter().chain(&free_b).copied().collect();
    let a_p = a.permute(&perm_a)?;
    let b_p = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
    let r: usize = con_a.iter().map(|&k| a.shape[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
    let data = matmul(&a_p.data, &b_p.data, m, r, n);
    DenseTensor::from_vec(spec.output_shape(&a.shape, &b.shape), data)
}

/// Largest Frobenius norm over all order-`p` subtensors, i.e. subtensors
/// obtained by fixing `order - p` modes at any values. `p == order` yields
/// the full Frobenius norm.
pub fn max_subtensor_norm(t: &DenseTensor, p: usize) -> Result<f64> {
    let order = t.order();
    if p == 0 || p > order {
        return Err(Error::InvalidSize(format!(
            "subtensor order {p} outside 1..={order}"
        )));
    }
    let mut best: f64 = 0.0;
    // Each bitmask with p set bits selects the modes left free.
    for mask in 0u64..(1u64 << order) {
        if mask.count_ones() as usize != p {
            continue;
        }
        let fixed: Vec<usize> = (0..order).filter(|k| mask & (1 << k) == 0).collect();
        let fixed_shape: Vec<usize> = fixed.iter().map(|&k| t.shape[k]).collect();
        let fixed_strides = strides(&fixed_shape);
        let mut sums = vec![0.0; fixed_shape.iter().product()];
        // Map every flat offset of T to the flat offset of its fixed modes.
        let scatter: Vec<usize> = (0..order)
            .map(|k| match fixed.iter().position(|&f| f == k) {
                Some(pos) => fixed_strides[pos],
                None => 0,
            })
            .collect();
        let mut cursor = 0;
        for_each_offset(&t.shape, &scatter, |slot| {
            let x = t.data[cursor];
            sums[slot] += x * x;
            cursor += 1;
        });
        for s in sums {
            best = best.max(s);
        }
    }
    Ok(best.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matmul(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
        let (m, r, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
        DenseTensor::from_fn(&[m, n], |idx| {
            (0..r)
                .map(|k| a.get(&[idx[0], k]).unwrap() * b.get(&[k, idx[1]]).unwrap())
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn reshape_is_column_major() {
        let t = DenseTensor::from_vec(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.get(&[0, 0]).unwrap(), 1.0);
        assert_eq!(t.get(&[1, 0]).unwrap(), 2.0);
        assert_eq!(t.get(&[0, 1]).unwrap(), 3.0);
        assert_eq!(t.get(&[1, 1]).unwrap(), 4.0);
    }

    #[test]
    fn reshape_singleton_and_mismatch() {
        let t = DenseTensor::from_vec(vec![1, 1, 1], vec![7.0]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]).unwrap(), 7.0);
        assert!(matches!(
            DenseTensor::from_vec(vec![2, 2], vec![0.0; 6]),
            Err(Error::ShapeMismatch { expected: 4, actual: 6, .. })
        ));
        assert!(DenseTensor::from_vec(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn flat_index_formula() {
        let t = DenseTensor::zeros(&[3, 4, 5]).unwrap();
        for idx in MultiIndexIter::new(&[3, 4, 5]) {
            let flat = t.flat_index(&idx).unwrap();
            assert_eq!(flat, idx[0] + idx[1] * 3 + idx[2] * 12);
            assert_eq!(t.multi_index(flat).unwrap(), idx);
        }
    }

    #[test]
    fn mode_product_identity_and_row_sum() {
        let eye = DenseTensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(eye.mode_product(&eye, 0).unwrap(), eye);

        let t = DenseTensor::from_rows(&[vec![1.0, 3.0], vec![2.0, 4.0]]).unwrap();
        let ones = DenseTensor::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let out = t.mode_product(&ones, 0).unwrap();
        assert_eq!(out, DenseTensor::from_rows(&[vec![3.0, 7.0]]).unwrap());
    }

    #[test]
    fn mode_product_errors() {
        let t = DenseTensor::zeros(&[2, 3]).unwrap();
        let m = DenseTensor::zeros(&[4, 2]).unwrap();
        assert!(matches!(
            t.mode_product(&m, 1),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            t.mode_product(&m, 2),
            Err(Error::ModeOutOfRange { mode: 2, order: 2 })
        ));
    }

    #[test]
    fn mode_product_matches_definition_on_order_three() {
        let t = DenseTensor::from_fn(&[2, 3, 4], |i| (i[0] + 2 * i[1] + 7 * i[2]) as f64 - 5.0)
            .unwrap();
        let m = DenseTensor::from_fn(&[5, 3], |i| (i[0] as f64) * 0.5 - i[1] as f64).unwrap();
        let out = t.mode_product(&m, 1).unwrap();
        assert_eq!(out.shape(), &[2, 5, 4]);
        for idx in MultiIndexIter::new(&[2, 5, 4]) {
            let want: f64 = (0..3)
                .map(|i| t.get(&[idx[0], i, idx[2]]).unwrap() * m.get(&[idx[1], i]).unwrap())
                .sum();
            assert_eq!(out.get(&idx).unwrap(), want);
        }
    }

    #[test]
    fn outer_product_examples() {
        let a = DenseTensor::from_vec(vec![2], vec![1.0, 2.0]).unwrap();
        let b = DenseTensor::from_vec(vec![2], vec![3.0, 4.0]).unwrap();
        let c = tensor_product(&a, &b);
        assert_eq!(
            c,
            DenseTensor::from_rows(&[vec![3.0, 4.0], vec![6.0, 8.0]]).unwrap()
        );
        let one = DenseTensor::scalar(1.0);
        assert_eq!(tensor_product(&a, &one).data(), a.data());
        let zero = DenseTensor::zeros(&[3]).unwrap();
        assert!(tensor_product(&zero, &b).data().iter().all(|&x| x == 0.0));
    }

    fn classical_kron(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
        let (p, q) = (a.shape()[0], a.shape()[1]);
        let (h, g) = (b.shape()[0], b.shape()[1]);
        let mut out = DenseTensor::zeros(&[p * h, q * g]).unwrap();
        for i in 0..p {
            for j in 0..q {
                for k in 0..h {
                    for l in 0..g {
                        let flat = out.flat_index(&[i * h + k, j * g + l]).unwrap();
                        out.data_mut()[flat] =
                            a.get(&[i, j]).unwrap() * b.get(&[k, l]).unwrap();
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kron_matches_textbook_example() {
        let a = DenseTensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = DenseTensor::from_rows(&[vec![0.0, 5.0], vec![6.0, 7.0]]).unwrap();
        let want = DenseTensor::from_rows(&[
            vec![0.0, 5.0, 0.0, 10.0],
            vec![6.0, 7.0, 12.0, 14.0],
            vec![0.0, 15.0, 0.0, 20.0],
            vec![18.0, 21.0, 24.0, 28.0],
        ])
        .unwrap();
        assert_eq!(kron_pairing_product(&a, &b), want);
    }

    #[test]
    fn kron_exhaustive_small_integer_cases() {
        // Every 2x2 and 3x2 matrix with entries in {-1, 0, 2} against a
        // fixed partner, compared with the double-loop definition.
        let partner = DenseTensor::from_rows(&[vec![1.0, -2.0], vec![3.0, 0.5]]).unwrap();
        for rows in [2usize, 3] {
            let cells = rows * 2;
            let vals = [-1.0, 0.0, 2.0];
            for code in 0..3usize.pow(cells as u32) {
                let mut c = code;
                let data: Vec<f64> = (0..cells)
                    .map(|_| {
                        let v = vals[c % 3];
                        c /= 3;
                        v
                    })
                    .collect();
                let a = DenseTensor::from_vec(vec![rows, 2], data).unwrap();
                assert_eq!(kron_pairing_product(&a, &partner), classical_kron(&a, &partner));
                assert_eq!(kron_pairing_product(&partner, &a), classical_kron(&partner, &a));
            }
        }
    }

    #[test]
    fn kron_scalar_cases() {
        let a = DenseTensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let one = DenseTensor::from_vec(vec![1, 1], vec![1.0]).unwrap();
        assert_eq!(kron_pairing_product(&a, &one), a);
        let c = DenseTensor::from_vec(vec![1, 1], vec![-3.0]).unwrap();
        assert_eq!(kron_pairing_product(&c, &a), a.scale(-3.0));
        // Lower-order operand gets trailing singleton modes.
        let v = DenseTensor::from_vec(vec![2], vec![1.0, 10.0]).unwrap();
        let k = kron_pairing_product(&a, &v);
        assert_eq!(k.shape(), &[4, 2]);
        assert_eq!(k.get(&[1, 1]).unwrap(), 20.0);
        assert_eq!(k.get(&[3, 0]).unwrap(), 30.0);
    }

    #[test]
    fn contract_identity_and_matrix_product() {
        let a = DenseTensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let eye = DenseTensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let spec = ContractionSpec::new(vec![(1, 0)]).unwrap();
        assert_eq!(contract(&a, &eye, &spec).unwrap(), a);

        let a = DenseTensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let b = DenseTensor::from_rows(&[vec![7.0, 8.0], vec![9.0, 10.0], vec![11.0, 12.0]])
            .unwrap();
        // Hand multiplication: [[58, 64], [139, 154]].
        let want = DenseTensor::from_rows(&[vec![58.0, 64.0], vec![139.0, 154.0]]).unwrap();
        assert_eq!(contract(&a, &b, &spec).unwrap(), want);
        assert_eq!(naive_matmul(&a, &b), want);
    }

    #[test]
    fn contract_order_three_against_loops() {
        let a = DenseTensor::from_fn(&[2, 3, 4], |i| (i[0] * 5 + i[1] * 3 + i[2]) as f64 - 4.0)
            .unwrap();
        let b = DenseTensor::from_fn(&[3, 5, 2], |i| (i[0] as f64) - 0.5 * (i[1] * i[2]) as f64)
            .unwrap();
        // Mode 1 of A (size 3) with mode 0 of B.
        let spec = ContractionSpec::new(vec![(1, 0)]).unwrap();
        let c = contract(&a, &b, &spec).unwrap();
        assert_eq!(c.shape(), &[2, 4, 5, 2]);
        for idx in MultiIndexIter::new(&[2, 4, 5, 2]) {
            let mut want = 0.0;
            for r in 0..3 {
                want += a.get(&[idx[0], r, idx[1]]).unwrap() * b.get(&[r, idx[2], idx[3]]).unwrap();
            }
            assert!((c.get(&idx).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn contract_rejects_bad_specs() {
        assert!(ContractionSpec::new(vec![(0, 0), (0, 1)]).is_err());
        let a = DenseTensor::zeros(&[2, 3]).unwrap();
        let b = DenseTensor::zeros(&[2, 3]).unwrap();
        let spec = ContractionSpec::new(vec![(1, 0)]).unwrap();
        assert!(matches!(
            contract(&a, &b, &spec),
            Err(Error::DimensionMismatch(_))
        ));
        let spec = ContractionSpec::new(vec![(2, 0)]).unwrap();
        assert!(matches!(
            contract(&a, &b, &spec),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn full_contraction_is_scalar() {
        let a = DenseTensor::from_vec(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let spec = ContractionSpec::new(vec![(0, 0)]).unwrap();
        let c = contract(&a, &a, &spec).unwrap();
        assert_eq!(c.order(), 0);
        assert_eq!(c.data(), &[14.0]);
    }

    #[test]
    fn subtensor_norm_examples() {
        let ones = DenseTensor::from_vec(vec![2, 2], vec![1.0; 4]).unwrap();
        assert!((max_subtensor_norm(&ones, 1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(max_subtensor_norm(&ones, 2).unwrap(), 2.0);
        let zero = DenseTensor::zeros(&[3, 2, 2]).unwrap();
        for p in 1..=3 {
            assert_eq!(max_subtensor_norm(&zero, p).unwrap(), 0.0);
        }
        assert!(max_subtensor_norm(&ones, 0).is_err());
        assert!(max_subtensor_norm(&ones, 3).is_err());
    }

    #[test]
    fn subtensor_norm_enumerates_every_fiber() {
        // Brute force over every fiber of an order-3 tensor.
        let t = DenseTensor::from_fn(&[2, 3, 4], |i| ((i[0] * 7 + i[1] * 3 + i[2] * 5) % 11) as f64)
            .unwrap();
        let mut best: f64 = 0.0;
        for free in 0..3 {
            let fixed: Vec<usize> = (0..3).filter(|&k| k != free).collect();
            let fixed_shape: Vec<usize> = fixed.iter().map(|&k| t.shape()[k]).collect();
            for f in MultiIndexIter::new(&fixed_shape) {
                let mut s = 0.0;
                for i in 0..t.shape()[free] {
                    let mut idx = vec![0; 3];
                    idx[free] = i;
                    idx[fixed[0]] = f[0];
                    idx[fixed[1]] = f[1];
                    s += t.get(&idx).unwrap().powi(2);
                }
                best = best.max(s);
            }
        }
        assert!((max_subtensor_norm(&t, 1).unwrap() - best.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn permute_round_trip() {
        let t = DenseTensor::from_fn(&[2, 3, 4], |i| (i[0] + 10 * i[1] + 100 * i[2]) as f64).unwrap();
        let p = t.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 3]);
        assert_eq!(p.get(&[3, 1, 2]).unwrap(), t.get(&[1, 2, 3]).unwrap());
        assert_eq!(p.permute(&[1, 2, 0]).unwrap(), t);
    }
}
