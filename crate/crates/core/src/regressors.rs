//! Closed-form consistent regressors.
//!
//! Both models minimize a squared-error fit term, a ridge term weighted by
//! `λ` and an HSIC dependence term between the training predictions and the
//! sensitive variables weighted by `μ/n²`:
//!
//! * linear: `J(W) = ‖Ỹ − X̃W‖² + λ‖W‖² + (μ/n²)‖S̃ᵀX̃W‖²`, solved by
//!   `W = (X̃ᵀX̃ + λI + (μ/n²)X̃ᵀS̃S̃ᵀX̃)⁻¹ X̃ᵀỸ`;
//! * kernel: `J(Λ) = ‖Ỹ − K̃Λ‖² + λTr(ΛᵀK̃Λ) + (μ/n²)Tr(ΛᵀK̃K̃_SK̃Λ)`,
//!   whose stationary point is `Λ = (K̃ + λI + (μ/n²)K̃_SK̃)⁻¹ Ỹ`.
//!
//! Tildes denote centering: column means for `X`, `S`, `Y` and `H·K·H` for
//! Gram matrices. Targets are centered before fitting and their means are
//! added back at prediction time. With `μ = 0` the two models are ridge
//! regression and kernel ridge regression.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{
    build_gram, center_columns, center_kernel, center_test_rows_with_means, cross_gram, gram,
    CenteringStats, GramPair, KernelSpec,
};
use crate::linalg::{solve_checked, Matrix};

/// Smallest admissible `λ` for the kernel model.
pub const MIN_KERNEL_LAMBDA: f64 = 1e-12;

/// Training blocks and the two penalty weights.
#[derive(Debug, Clone, Copy)]
pub struct FitProblem<'a> {
    pub x: &'a Matrix,
    pub s: &'a Matrix,
    pub y: &'a Matrix,
    pub lambda: f64,
    pub mu: f64,
}

impl<'a> FitProblem<'a> {
    pub fn new(x: &'a Matrix, s: &'a Matrix, y: &'a Matrix, lambda: f64, mu: f64) -> Result<Self> {
        let n = x.nrows();
        for (block, rows) in [("sensitive rows", s.nrows()), ("target rows", y.nrows())] {
            if rows != n {
                return Err(Error::DimensionMismatch {
                    context: block,
                    expected: n,
                    found: rows,
                });
            }
        }
        if n < 2 {
            return Err(Error::TooFewSamples {
                context: "fitting",
                needed: 2,
                found: n,
            });
        }
        if y.ncols() == 0 {
            return Err(Error::EmptyInput("targets"));
        }
        if !x.is_finite() || !s.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("training data"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) || !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "lambda and mu must be finite and non-negative (lambda = {lambda}, mu = {mu})"
            )));
        }
        if mu > 0.0 && s.ncols() == 0 {
            return Err(Error::NoSensitiveVariables { mu });
        }
        Ok(Self {
            x,
            s,
            y,
            lambda,
            mu,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// The HSIC weight `μ/n²` as it appears in the normal equations.
    pub fn penalty_weight(&self) -> f64 {
        let n = self.n() as f64;
        self.mu / (n * n)
    }

    pub fn with_hyperparameters(&self, lambda: f64, mu: f64) -> Result<FitProblem<'a>> {
        FitProblem::new(self.x, self.s, self.y, lambda, mu)
    }
}

struct Centered {
    x: Matrix,
    s: Matrix,
    y: Matrix,
    x_stats: CenteringStats,
    s_stats: CenteringStats,
    y_stats: CenteringStats,
}

fn center_problem(p: &FitProblem<'_>) -> Result<Centered> {
    let (x, x_stats) = center_columns(p.x)?;
    let (s, s_stats) = center_columns(p.s)?;
    let (y, y_stats) = center_columns(p.y)?;
    Ok(Centered {
        x,
        s,
        y,
        x_stats,
        s_stats,
        y_stats,
    })
}

/// Consistent linear regression model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClrModel {
    /// `d × c` weights acting on centered drivers.
    pub weights: Matrix,
    pub x_stats: CenteringStats,
    pub s_stats: CenteringStats,
    pub y_stats: CenteringStats,
    pub lambda: f64,
    pub mu: f64,
}

impl ClrModel {
    /// Predictions `(X* − x̄)·W + ȳ`.
    pub fn predict(&self, x_new: &Matrix) -> Result<Matrix> {
        if !x_new.is_finite() {
            return Err(Error::NonFinite("prediction input"));
        }
        let centered = self.x_stats.apply(x_new)?;
        self.y_stats.restore(&centered.matmul(&self.weights))
    }

    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }
}

pub fn fit_clr(p: &FitProblem<'_>) -> Result<ClrModel> {
    let c = center_problem(p)?;
    let mut system = c.x.t_matmul(&c.x);
    system.add_diagonal(p.lambda);
    if p.mu > 0.0 {
        let sx = c.s.t_matmul(&c.x);
        system.add_scaled(p.penalty_weight(), &sx.t_matmul(&sx));
    }
    let rhs = c.x.t_matmul(&c.y);
    let weights = solve_checked(&system, &rhs)?;
    Ok(ClrModel {
        weights,
        x_stats: c.x_stats,
        s_stats: c.s_stats,
        y_stats: c.y_stats,
        lambda: p.lambda,
        mu: p.mu,
    })
}

/// Either fitted model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Clr(ClrModel),
    Ckr(CkrModel),
}

impl Model {
    pub fn predict(&self, x_new: &Matrix) -> Result<Matrix> {
        match self {
            Model::Clr(m) => m.predict(x_new),
            Model::Ckr(m) => m.predict(x_new),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Clr(m) => m.n_features(),
            Model::Ckr(m) => m.n_features(),
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            Model::Clr(m) => m.lambda,
            Model::Ckr(m) => m.lambda(),
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            Model::Clr(m) => m.mu,
            Model::Ckr(m) => m.mu(),
        }
    }
}

/// Centered Gram matrices of the drivers and of the sensitive variables.
#[derive(Debug, Clone)]
pub struct CkrGrams {
    pub x: GramPair,
    pub s_centered: Matrix,
}

impl CkrGrams {
    pub fn build(
        x: &Matrix,
        s: &Matrix,
        kernel_x: &KernelSpec,
        kernel_s: &KernelSpec,
    ) -> Result<Self> {
        let x_pair = build_gram(x, kernel_x)?;
        let s_centered = center_kernel(&gram(s, kernel_s)?);
        Ok(Self {
            x: x_pair,
            s_centered,
        })
    }

    pub fn n(&self) -> usize {
        self.x.raw.nrows()
    }
}

/// Consistent kernel regression model.
#[derive(Debug, Clone, PartialEq)]
pub struct CkrModel {
    dual: Matrix,
    x_train: Matrix,
    kernel_x: KernelSpec,
    kernel_s: KernelSpec,
    k_raw_train: Matrix,
    k_col_means: Vec<f64>,
    y_stats: CenteringStats,
    lambda: f64,
    mu: f64,
}

impl CkrModel {
    /// Reassembles a model from persisted parts, recomputing the training Gram
    /// matrix from the retained drivers.
    pub fn from_parts(
        dual: Matrix,
        x_train: Matrix,
        kernel_x: KernelSpec,
        kernel_s: KernelSpec,
        y_stats: CenteringStats,
        lambda: f64,
        mu: f64,
    ) -> Result<Self> {
        if dual.nrows() != x_train.nrows() {
            return Err(Error::DimensionMismatch {
                context: "dual coefficient rows",
                expected: x_train.nrows(),
                found: dual.nrows(),
            });
        }
        if dual.ncols() != y_stats.column_means.len() {
            return Err(Error::DimensionMismatch {
                context: "dual coefficient columns",
                expected: y_stats.column_means.len(),
                found: dual.ncols(),
            });
        }
        if !dual.is_finite() {
            return Err(Error::NonFinite("dual coefficients"));
        }
        kernel_s.validate()?;
        let k_raw_train = gram(&x_train, &kernel_x)?;
        Ok(Self::assemble(
            dual,
            x_train,
            kernel_x,
            kernel_s,
            k_raw_train,
            y_stats,
            lambda,
            mu,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dual: Matrix,
        x_train: Matrix,
        kernel_x: KernelSpec,
        kernel_s: KernelSpec,
        k_raw_train: Matrix,
        y_stats: CenteringStats,
        lambda: f64,
        mu: f64,
    ) -> Self {
        let k_col_means = k_raw_train.column_means();
        Self {
            dual,
            x_train,
            kernel_x,
            kernel_s,
            k_raw_train,
            k_col_means,
            y_stats,
            lambda,
            mu,
        }
    }

    pub fn dual(&self) -> &Matrix {
        &self.dual
    }

    pub fn x_train(&self) -> &Matrix {
        &self.x_train
    }

    pub fn kernel_x(&self) -> &KernelSpec {
        &self.kernel_x
    }

    pub fn kernel_s(&self) -> &KernelSpec {
        &self.kernel_s
    }

    pub fn k_raw_train(&self) -> &Matrix {
        &self.k_raw_train
    }

    pub fn y_stats(&self) -> &CenteringStats {
        &self.y_stats
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n_features(&self) -> usize {
        self.x_train.ncols()
    }

    /// Predictions `k̃*·Λ + ȳ` with test rows centered against training statistics.
    pub fn predict(&self, x_new: &Matrix) -> Result<Matrix> {
        let k_star = cross_gram(x_new, &self.x_train, &self.kernel_x)?;
        let centered = center_test_rows_with_means(&k_star, &self.k_col_means);
        self.y_stats.restore(&centered.matmul(&self.dual))
    }
}

pub fn fit_ckr(
    p: &FitProblem<'_>,
    kernel_x: &KernelSpec,
    kernel_s: &KernelSpec,
) -> Result<CkrModel> {
    check_kernel_lambda(p.lambda)?;
    let grams = CkrGrams::build(p.x, p.s, kernel_x, kernel_s)?;
    fit_ckr_with_grams(p, &grams, kernel_x, kernel_s)
}

/// Kernel fit reusing precomputed Gram matrices (which must come from `p.x`, `p.s`).
pub fn fit_ckr_with_grams(
    p: &FitProblem<'_>,
    grams: &CkrGrams,
    kernel_x: &KernelSpec,
    kernel_s: &KernelSpec,
) -> Result<CkrModel> {
    check_kernel_lambda(p.lambda)?;
    check_grams(p, grams)?;
    let (y_centered, y_stats) = center_columns(p.y)?;
    let k = &grams.x.centered;
    let mut system = k.clone();
    system.add_diagonal(p.lambda);
    if p.mu > 0.0 {
        system.add_scaled(p.penalty_weight(), &grams.s_centered.matmul(k));
    }
    let dual = solve_checked(&system, &y_centered)?;
    Ok(CkrModel::assemble(
        dual,
        p.x.clone(),
        *kernel_x,
        *kernel_s,
        grams.x.raw.clone(),
        y_stats,
        p.lambda,
        p.mu,
    ))
}

fn check_kernel_lambda(lambda: f64) -> Result<()> {
    if lambda < MIN_KERNEL_LAMBDA {
        return Err(Error::RankDeficientGram {
            lambda,
            minimum: MIN_KERNEL_LAMBDA,
        });
    }
    Ok(())
}

fn check_grams(p: &FitProblem<'_>, grams: &CkrGrams) -> Result<()> {
    let n = p.n();
    for (context, found) in [
        ("driver Gram size", grams.x.centered.nrows()),
        ("sensitive Gram size", grams.s_centered.nrows()),
    ] {
        if found != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                found,
            });
        }
    }
    Ok(())
}

/// The three parts of an objective and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// Squared-error fit on centered targets.
    pub fit: f64,
    /// Unweighted ridge term.
    pub ridge: f64,
    /// Unweighted dependence term (the `μ`-free factor).
    pub penalty: f64,
    /// `fit + λ·ridge + (μ/n²)·penalty`.
    pub value: f64,
}

pub fn clr_terms(weights: &Matrix, p: &FitProblem<'_>) -> Result<ObjectiveTerms> {
    check_clr_shape(weights, p)?;
    let c = center_problem(p)?;
    let xw = c.x.matmul(weights);
    let fit = c.y.sub(&xw).frobenius_sq();
    let ridge = weights.frobenius_sq();
    let penalty = c.s.t_matmul(&xw).frobenius_sq();
    Ok(ObjectiveTerms {
        fit,
        ridge,
        penalty,
        value: fit + p.lambda * ridge + p.penalty_weight() * penalty,
    })
}

pub fn clr_objective(weights: &Matrix, p: &FitProblem<'_>) -> Result<f64> {
    Ok(clr_terms(weights, p)?.value)
}

/// Analytic gradient `2[(X̃ᵀX̃ + λI + (μ/n²)X̃ᵀS̃S̃ᵀX̃)W − X̃ᵀỸ]`.
pub fn clr_gradient(weights: &Matrix, p: &FitProblem<'_>) -> Result<Matrix> {
    check_clr_shape(weights, p)?;
    let c = center_problem(p)?;
    let xw = c.x.matmul(weights);
    let mut grad = c.x.t_matmul(&xw.sub(&c.y));
    grad.add_scaled(p.lambda, weights);
    let sxw = c.s.t_matmul(&xw);
    grad.add_scaled(p.penalty_weight(), &c.x.t_matmul(&c.s.matmul(&sxw)));
    Ok(grad.scaled(2.0))
}

fn check_clr_shape(weights: &Matrix, p: &FitProblem<'_>) -> Result<()> {
    if weights.nrows() != p.x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "weight rows",
            expected: p.x.ncols(),
            found: weights.nrows(),
        });
    }
    if weights.ncols() != p.y.ncols() {
        return Err(Error::DimensionMismatch {
            context: "weight columns",
            expected: p.y.ncols(),
            found: weights.ncols(),
        });
    }
    Ok(())
}

pub fn ckr_terms(dual: &Matrix, p: &FitProblem<'_>, grams: &CkrGrams) -> Result<ObjectiveTerms> {
    check_ckr_shape(dual, p, grams)?;
    let (y, _) = center_columns(p.y)?;
    let k = &grams.x.centered;
    let k_dual = k.matmul(dual);
    let fit = y.sub(&k_dual).frobenius_sq();
    let ridge = elementwise_dot(dual, &k_dual);
    let penalty = elementwise_dot(&k_dual, &grams.s_centered.matmul(&k_dual));
    Ok(ObjectiveTerms {
        fit,
        ridge,
        penalty,
        value: fit + p.lambda * ridge + p.penalty_weight() * penalty,
    })
}

pub fn ckr_objective(dual: &Matrix, p: &FitProblem<'_>, grams: &CkrGrams) -> Result<f64> {
    Ok(ckr_terms(dual, p, grams)?.value)
}

/// Analytic gradient `2K̃[(K̃ + λI + (μ/n²)K̃_SK̃)Λ − Ỹ]`.
pub fn ckr_gradient(dual: &Matrix, p: &FitProblem<'_>, grams: &CkrGrams) -> Result<Matrix> {
    check_ckr_shape(dual, p, grams)?;
    let (y, _) = center_columns(p.y)?;
    let k = &grams.x.centered;
    let k_dual = k.matmul(dual);
    let mut inner = k_dual.sub(&y);
    inner.add_scaled(p.lambda, dual);
    inner.add_scaled(p.penalty_weight(), &grams.s_centered.matmul(&k_dual));
    Ok(k.matmul(&inner).scaled(2.0))
}

fn check_ckr_shape(dual: &Matrix, p: &FitProblem<'_>, grams: &CkrGrams) -> Result<()> {
    check_grams(p, grams)?;
    if dual.nrows() != p.n() {
        return Err(Error::DimensionMismatch {
            context: "dual coefficient rows",
            expected: p.n(),
            found: dual.nrows(),
        });
    }
    if dual.ncols() != p.y.ncols() {
        return Err(Error::DimensionMismatch {
            context: "dual coefficient columns",
            expected: p.y.ncols(),
            found: dual.ncols(),
        });
    }
    Ok(())
}

fn elementwise_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(u, v)| u * v)
        .sum()
}
