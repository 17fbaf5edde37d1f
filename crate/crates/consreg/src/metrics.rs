use std::fmt;

use consreg_core::selection::{rmse, rmse_per_output};
use consreg_core::{hsic_linear, Matrix};

use crate::csv_io::format_number;

/// Accuracy and dependence of a set of predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    /// Linear HSIC between predictions and sensitive variables.
    pub hsic_pred_s: f64,
    pub n_test: usize,
    /// Filled only for multi-output targets.
    pub rmse_per_output: Vec<f64>,
}

impl MetricsReport {
    pub fn compute(
        predictions: &Matrix,
        targets: &Matrix,
        s: &Matrix,
    ) -> consreg_core::Result<Self> {
        let per_output = if targets.ncols() > 1 {
            rmse_per_output(predictions, targets)?
        } else {
            Vec::new()
        };
        Ok(Self {
            rmse: rmse(predictions, targets)?,
            hsic_pred_s: hsic_linear(predictions, s)?.value,
            n_test: targets.nrows(),
            rmse_per_output: per_output,
        })
    }
}

/// `key=value` lines, one metric per line.
impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rmse={}", format_number(self.rmse))?;
        writeln!(f, "hsic_pred_s={}", format_number(self.hsic_pred_s))?;
        write!(f, "n_test={}", self.n_test)?;
        for (j, v) in self.rmse_per_output.iter().enumerate() {
            write!(f, "\nrmse_{}={}", j + 1, format_number(*v))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_built_rows() {
        let y = Matrix::column_vector(&[1.0, 2.0, 3.0]);
        let p = Matrix::column_vector(&[1.0, 3.0, 5.0]);
        let s = Matrix::column_vector(&[0.0, 1.0, 0.0]);
        let r = MetricsReport::compute(&p, &y, &s).unwrap();
        // squared errors 0, 1, 4
        assert!((r.rmse - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.n_test, 3);
        assert!(r.rmse_per_output.is_empty());
        assert!(r.to_string().starts_with("rmse=1.2909944487358056e0\n"));
    }

    #[test]
    fn multi_output_lines() {
        let y = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        let p = Matrix::from_rows(&[[1.0, 1.0], [2.0, 1.0]]).unwrap();
        let s = Matrix::zeros(2, 0);
        let text = MetricsReport::compute(&p, &y, &s).unwrap().to_string();
        assert!(
            text.contains("\nrmse_1=0.0000000000000000e0\nrmse_2=1.0000000000000000e0"),
            "{text}"
        );
    }
}
