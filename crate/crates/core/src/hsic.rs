//! Biased empirical HSIC estimators.
//!
//! Linear form: `(1/n²)·‖Ãᵀ·B̃‖²_F` with column-centered samples.
//! Kernel form: `(1/n²)·Tr(K̃_A·K̃_B)` with feature-space-centered Grams.

use crate::error::{Error, Result};
use crate::linalg::{trace_of_product, Matrix};

/// Estimates within this distance below zero are reported as zero.
pub const ZERO_CLAMP: f64 = 1e-12;

/// Negative kernel estimates down to this magnitude are treated as rounding noise.
pub const KERNEL_CLAMP: f64 = 1e-9;

/// Row sums of a "centered" Gram may not exceed this (scaled by the entry magnitude).
pub const CENTERING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsicValue {
    pub value: f64,
    pub n: usize,
}

pub fn hsic_linear(a: &Matrix, b: &Matrix) -> Result<HsicValue> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "HSIC sample rows",
            expected: n,
            found: b.nrows(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewSamples {
            context: "HSIC",
            needed: 2,
            found: n,
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("HSIC input"));
    }
    let a_means = a.column_means();
    let b_means = b.column_means();
    let mut cross = Matrix::zeros(a.ncols(), b.ncols());
    for i in 0..n {
        for (p, (&av, am)) in a.row(i).iter().zip(&a_means).enumerate() {
            let ac = av - am;
            for (q, (&bv, bm)) in b.row(i).iter().zip(&b_means).enumerate() {
                cross[(p, q)] += ac * (bv - bm);
            }
        }
    }
    let value = cross.frobenius_sq() / (n as f64 * n as f64);
    Ok(HsicValue {
        value: clamp(value),
        n,
    })
}

pub fn hsic_kernel(k_a_centered: &Matrix, k_b_centered: &Matrix) -> Result<HsicValue> {
    let n = k_a_centered.nrows();
    for k in [k_a_centered, k_b_centered] {
        if k.nrows() != n || k.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "HSIC Gram matrix size",
                expected: n,
                found: if k.nrows() != n { k.nrows() } else { k.ncols() },
            });
        }
    }
    if n < 2 {
        return Err(Error::TooFewSamples {
            context: "HSIC",
            needed: 2,
            found: n,
        });
    }
    for k in [k_a_centered, k_b_centered] {
        if !k.is_finite() {
            return Err(Error::NonFinite("HSIC Gram matrix"));
        }
        let row_sum_norm = libm::sqrt(k.row_sums().iter().map(|s| s * s).sum::<f64>());
        if row_sum_norm > CENTERING_TOLERANCE * k.max_abs().max(1.0) {
            return Err(Error::NotCentered { row_sum_norm });
        }
    }
    let value = trace_of_product(k_a_centered, k_b_centered) / (n as f64 * n as f64);
    if value < -KERNEL_CLAMP {
        return Err(Error::NotPositiveSemidefinite { value });
    }
    Ok(HsicValue {
        value: value.max(0.0),
        n,
    })
}

fn clamp(value: f64) -> f64 {
    if value < ZERO_CLAMP && value > -ZERO_CLAMP {
        0.0
    } else {
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::center_kernel;

    #[test]
    fn constant_column_is_independent() {
        let a = Matrix::column_vector(&[1.0, 5.0, -2.0]);
        let b = Matrix::column_vector(&[4.0, 4.0, 4.0]);
        assert_eq!(hsic_linear(&a, &b).unwrap().value, 0.0);
    }

    #[test]
    fn hand_evaluated_linear_examples() {
        let a = Matrix::column_vector(&[-1.0, 1.0]);
        assert_eq!(hsic_linear(&a, &a).unwrap().value, 1.0);

        let a = Matrix::column_vector(&[1.0, 2.0, 3.0]);
        let b = Matrix::column_vector(&[3.0, 1.0, 2.0]);
        let v = hsic_linear(&a, &b).unwrap();
        assert!((v.value - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(v.n, 3);
    }

    #[test]
    fn row_mismatch_is_an_error() {
        let a = Matrix::zeros(3, 1);
        let b = Matrix::zeros(4, 1);
        assert!(matches!(
            hsic_linear(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kernel_examples() {
        let h = Matrix::from_rows(&[[0.5, -0.5], [-0.5, 0.5]]).unwrap();
        assert_eq!(hsic_kernel(&h, &h).unwrap().value, 0.25);
        assert_eq!(hsic_kernel(&h, &Matrix::zeros(2, 2)).unwrap().value, 0.0);
    }

    #[test]
    fn kernel_form_rejects_uncentered_and_mismatched() {
        let raw = Matrix::identity(3);
        let c = center_kernel(&raw);
        assert!(matches!(
            hsic_kernel(&raw, &c),
            Err(Error::NotCentered { .. })
        ));
        assert!(matches!(
            hsic_kernel(&c, &Matrix::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
