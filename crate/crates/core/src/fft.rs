//! Separable N-dimensional DFT and circular convolution on column-major
//! tensors of arbitrary mode sizes.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Residue tolerance for discarding the imaginary part of a convolution,
/// relative to the Frobenius norm of the real part.
pub const IMAGINARY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn from_vec(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn from_real(t: &DenseTensor) -> Self {
        Self {
            shape: t.shape().to_vec(),
            data: t.data().iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real part, failing if the imaginary part exceeds `tol * ||Re||_F`.
    pub fn into_real(self, tol: f64) -> Result<DenseTensor> {
        let re: Vec<f64> = self.data.iter().map(|z| z.re).collect();
        let re_norm = re.iter().map(|x| x * x).sum::<f64>().sqrt();
        let residue = self.data.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        // An all-zero real part still admits rounding-level residue.
        let tolerance = tol * re_norm.max(f64::MIN_POSITIVE);
        if residue > tolerance && residue > 1e-300 {
            return Err(Error::ImaginaryResidue { residue, tolerance });
        }
        DenseTensor::from_vec(self.shape, re)
    }
}

fn transform_in_place(shape: &[usize], data: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let total = data.len();
    let mut stride = 1;
    for &n in shape {
        if n > 1 {
            let fft = planner.plan_fft(n, direction);
            if stride == 1 {
                fft.process(data);
            } else {
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                let block = n * stride;
                for base in (0..total).step_by(block) {
                    for inner in 0..stride {
                        for (t, slot) in buf.iter_mut().enumerate() {
                            *slot = data[base + inner + t * stride];
                        }
                        fft.process(&mut buf);
                        for (t, v) in buf.iter().enumerate() {
                            data[base + inner + t * stride] = *v;
                        }
                    }
                }
            }
        }
        stride *= n;
    }
}

/// Unnormalized forward DFT along every mode.
pub fn dft_nd(t: &ComplexTensor) -> ComplexTensor {
    let mut data = t.data.clone();
    transform_in_place(&t.shape, &mut data, FftDirection::Forward);
    ComplexTensor {
        shape: t.shape.clone(),
        data,
    }
}

/// Inverse DFT with `1 / prod(m_k)` normalization.
pub fn idft_nd(t: &ComplexTensor) -> ComplexTensor {
    let mut data = t.data.clone();
    transform_in_place(&t.shape, &mut data, FftDirection::Inverse);
    let scale = 1.0 / data.len() as f64;
    for z in &mut data {
        *z *= scale;
    }
    ComplexTensor {
        shape: t.shape.clone(),
        data,
    }
}

/// `C[t] = sum_a A[a] B[(t - a) mod shape]`, computed in the frequency domain.
pub fn circular_convolve(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "cannot convolve shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let fa = dft_nd(&ComplexTensor::from_real(a));
    let fb = dft_nd(&ComplexTensor::from_real(b));
    let prod = ComplexTensor {
        shape: fa.shape.clone(),
        data: fa.data.iter().zip(&fb.data).map(|(x, y)| x * y).collect(),
    };
    idft_nd(&prod).into_real(IMAGINARY_TOLERANCE)
}

/// Reusable 1-D transforms of a fixed length, for sums of many
/// convolutions that share one inverse transform.
pub struct Convolver {
    len: usize,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Convolver {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Normalized inverse; returns the real part after the residue check.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Result<Vec<f64>> {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.len as f64;
        let t = ComplexTensor {
            shape: vec![self.len],
            data: spectrum.into_iter().map(|z| z * scale).collect(),
        };
        Ok(t.into_real(IMAGINARY_TOLERANCE)?.into_vec())
    }

    pub fn convolve(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let fa = self.forward(a);
        let fb = self.forward(b);
        self.inverse(fa.iter().zip(&fb).map(|(x, y)| x * y).collect())
    }
}
