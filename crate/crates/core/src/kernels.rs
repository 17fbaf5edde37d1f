//! Kernel functions, Gram matrices and feature-space centering.
//!
//! Centering a Gram matrix `K` in feature space is `H·K·H` with
//! `H = I − (1/n)·𝟙𝟙ᵀ`. Test rows are centered against the training
//! statistics so that a test point equal to training point `i` reproduces
//! row `i` of the centered training Gram matrix.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A positive semidefinite kernel and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `⟨x, z⟩`
    Linear,
    /// `exp(−‖x − z‖² / (2σ²))`
    Rbf { bandwidth: f64 },
    /// `(⟨x, z⟩ + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl KernelSpec {
    pub fn rbf(bandwidth: f64) -> Result<Self> {
        let spec = KernelSpec::Rbf { bandwidth };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let spec = KernelSpec::Polynomial { degree, offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { bandwidth } if bandwidth > 0.0 && bandwidth.is_finite() => Ok(()),
            KernelSpec::Rbf { bandwidth } => Err(Error::InvalidParameter(alloc::format!(
                "RBF bandwidth must be positive and finite, got {bandwidth}"
            ))),
            KernelSpec::Polynomial { degree, offset } => {
                if degree == 0 {
                    Err(Error::InvalidParameter(
                        "polynomial degree must be at least 1".into(),
                    ))
                } else if !offset.is_finite() {
                    Err(Error::NonFinite("polynomial offset"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match *self {
            KernelSpec::Rbf { bandwidth } => Some(bandwidth),
            _ => None,
        }
    }

    fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Rbf { bandwidth } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                libm::exp(-d2 / (2.0 * bandwidth * bandwidth))
            }
            KernelSpec::Polynomial { degree, offset } => {
                libm::pow(dot(x, z) + offset, f64::from(degree))
            }
        }
    }
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Evaluates `spec` on a single pair of points.
pub fn kernel_eval(x: &[f64], z: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            context: "kernel arguments",
            expected: x.len(),
            found: z.len(),
        });
    }
    spec.validate()?;
    if !x.iter().chain(z).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("kernel arguments"));
    }
    Ok(spec.eval_unchecked(x, z))
}

/// Raw and feature-space-centered Gram matrices of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPair {
    pub raw: Matrix,
    pub centered: Matrix,
}

pub fn build_gram(x: &Matrix, spec: &KernelSpec) -> Result<GramPair> {
    if x.nrows() < 2 {
        return Err(Error::TooFewSamples {
            context: "Gram centering",
            needed: 2,
            found: x.nrows(),
        });
    }
    let raw = gram(x, spec)?;
    let centered = center_kernel(&raw);
    Ok(GramPair { raw, centered })
}

/// Symmetric Gram matrix `K[i][j] = k(xᵢ, xⱼ)`.
pub fn gram(x: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    if !x.is_finite() {
        return Err(Error::NonFinite("kernel input"));
    }
    let n = x.nrows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(x.row(i), x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Cross-kernel `K*[i][j] = k(x_newᵢ, x_trainⱼ)`.
pub fn cross_gram(x_new: &Matrix, x_train: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    if x_new.ncols() != x_train.ncols() {
        return Err(Error::DimensionMismatch {
            context: "cross-kernel feature count",
            expected: x_train.ncols(),
            found: x_new.ncols(),
        });
    }
    spec.validate()?;
    if !x_new.is_finite() {
        return Err(Error::NonFinite("kernel input"));
    }
    Ok(Matrix::from_fn(x_new.nrows(), x_train.nrows(), |i, j| {
        spec.eval_unchecked(x_new.row(i), x_train.row(j))
    }))
}

/// `H·K·H` for a square `K`.
pub fn center_kernel(k: &Matrix) -> Matrix {
    let n = k.nrows();
    let row_means: Vec<f64> = k.row_sums().iter().map(|s| s / n as f64).collect();
    let col_means = k.column_means();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    Matrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Centers test cross-kernel rows against the training Gram matrix:
/// `(K* − (1/n)·𝟙ₘ𝟙ᵀ·K_train)·H`.
pub fn center_test_rows(k_star: &Matrix, k_raw_train: &Matrix) -> Result<Matrix> {
    let n = k_raw_train.nrows();
    if k_raw_train.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "training Gram matrix (square)",
            expected: n,
            found: k_raw_train.ncols(),
        });
    }
    if k_star.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "test cross-kernel columns",
            expected: n,
            found: k_star.ncols(),
        });
    }
    Ok(center_test_rows_with_means(
        k_star,
        &k_raw_train.column_means(),
    ))
}

pub(crate) fn center_test_rows_with_means(k_star: &Matrix, train_col_means: &[f64]) -> Matrix {
    let n = train_col_means.len() as f64;
    let mut out = k_star.clone();
    for i in 0..out.nrows() {
        let row = out.row_mut(i);
        for (v, m) in row.iter_mut().zip(train_col_means) {
            *v -= m;
        }
        let row_mean = row.iter().sum::<f64>() / n;
        row.iter_mut().for_each(|v| *v -= row_mean);
    }
    out
}

/// Median pairwise Euclidean distance over all `i < j`; `1.0` if that
/// median is zero.
pub fn median_heuristic(x: &Matrix) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples {
            context: "median heuristic",
            needed: 2,
            found: n,
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("median heuristic input"));
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            distances.push(libm::sqrt(d2));
        }
    }
    distances.sort_by(f64::total_cmp);
    let m = distances.len();
    let median = if m % 2 == 1 {
        distances[m / 2]
    } else {
        0.5 * (distances[m / 2 - 1] + distances[m / 2])
    };
    Ok(if median > 0.0 { median } else { 1.0 })
}

/// Column means subtracted by [`center_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringStats {
    pub column_means: Vec<f64>,
    pub n_train: usize,
}

impl CenteringStats {
    /// Subtracts the stored means from every row of `m`.
    pub fn apply(&self, m: &Matrix) -> Result<Matrix> {
        self.check_width(m)?;
        let mut out = m.clone();
        for i in 0..out.nrows() {
            for (v, mean) in out.row_mut(i).iter_mut().zip(&self.column_means) {
                *v -= mean;
            }
        }
        Ok(out)
    }

    /// Adds the stored means back to every row of `m`.
    pub fn restore(&self, m: &Matrix) -> Result<Matrix> {
        self.check_width(m)?;
        let mut out = m.clone();
        for i in 0..out.nrows() {
            for (v, mean) in out.row_mut(i).iter_mut().zip(&self.column_means) {
                *v += mean;
            }
        }
        Ok(out)
    }

    fn check_width(&self, m: &Matrix) -> Result<()> {
        if m.ncols() != self.column_means.len() {
            return Err(Error::DimensionMismatch {
                context: "column count against centering statistics",
                expected: self.column_means.len(),
                found: m.ncols(),
            });
        }
        Ok(())
    }
}

pub fn center_columns(m: &Matrix) -> Result<(Matrix, CenteringStats)> {
    if m.nrows() == 0 {
        return Err(Error::EmptyInput("column centering"));
    }
    let stats = CenteringStats {
        column_means: m.column_means(),
        n_train: m.nrows(),
    };
    let centered = stats.apply(m)?;
    Ok((centered, stats))
}
