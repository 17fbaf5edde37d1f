//! Cross-validated hyperparameter selection and the μ trade-off sweep.
//!
//! For each consistency weight μ, `λ` (and the driver-kernel bandwidth for
//! RBF kernel models) is chosen by minimum mean validation RMSE over k folds.
//! Exact ties go to the larger `λ`, then the larger bandwidth. Grids are
//! deduplicated and ordered by value, so selection does not depend on the
//! order in which the caller lists them.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hsic::hsic_linear;
use crate::kernels::{median_heuristic, KernelSpec};
use crate::linalg::Matrix;
use crate::regressors::{
    ckr_terms, clr_terms, fit_ckr_with_grams, fit_clr, CkrGrams, FitProblem, Model,
};
use crate::rng::SeededRng;

/// One cross-validation fold. Both index lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Seeded k-fold partition of `0..n`.
///
/// Indices are shuffled once; the first `n mod k` folds take one extra index.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!(
            "fold count must satisfy 2 <= k <= n (k = {k}, n = {n})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut validation = order[start..start + size].to_vec();
        validation.sort_unstable();
        let mut in_validation = vec![false; n];
        validation.iter().for_each(|&i| in_validation[i] = true);
        let train = (0..n).filter(|&i| !in_validation[i]).collect();
        folds.push(Fold { train, validation });
        start += size;
    }
    Ok(folds)
}

/// A bandwidth grid entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median pairwise distance of the data being fitted.
    Median,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(&self, x: &Matrix) -> Result<f64> {
        match *self {
            Bandwidth::Median => median_heuristic(x),
            Bandwidth::Fixed(v) if v > 0.0 && v.is_finite() => Ok(v),
            Bandwidth::Fixed(v) => Err(Error::InvalidParameter(format!(
                "bandwidth must be positive and finite, got {v}"
            ))),
        }
    }
}

/// Kernel family without its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Linear,
    Rbf,
    Polynomial { degree: u32, offset: f64 },
}

impl KernelFamily {
    pub fn with_bandwidth(&self, bandwidth: f64) -> Result<KernelSpec> {
        match *self {
            KernelFamily::Linear => Ok(KernelSpec::Linear),
            KernelFamily::Rbf => KernelSpec::rbf(bandwidth),
            KernelFamily::Polynomial { degree, offset } => KernelSpec::polynomial(degree, offset),
        }
    }

    pub fn uses_bandwidth(&self) -> bool {
        matches!(self, KernelFamily::Rbf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Clr,
    Ckr {
        kernel_x: KernelFamily,
        kernel_s: KernelFamily,
        /// Bandwidth for an RBF sensitive kernel, resolved on the training `S`.
        s_bandwidth: Bandwidth,
    },
}

impl ModelKind {
    /// Kernel model with RBF kernels on both blocks and a median-heuristic `K_S`.
    pub fn ckr_rbf() -> Self {
        ModelKind::Ckr {
            kernel_x: KernelFamily::Rbf,
            kernel_s: KernelFamily::Rbf,
            s_bandwidth: Bandwidth::Median,
        }
    }

    fn kernel_x_uses_bandwidth(&self) -> bool {
        matches!(self, ModelKind::Ckr { kernel_x, .. } if kernel_x.uses_bandwidth())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub k_folds: usize,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    pub bandwidth_grid: Vec<Bandwidth>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k_folds: 5,
            seed: 0,
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            bandwidth_grid: vec![Bandwidth::Median],
        }
    }
}

impl CvConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::EmptyInput("lambda grid"));
        }
        if self.bandwidth_grid.is_empty() {
            return Err(Error::EmptyInput("bandwidth grid"));
        }
        if let Some(bad) = self
            .lambda_grid
            .iter()
            .find(|l| !(**l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "lambda grid entries must be positive and finite, got {bad}"
            )));
        }
        if self.k_folds < 2 || self.k_folds > n {
            return Err(Error::InvalidParameter(format!(
                "fold count must satisfy 2 <= k <= n (k = {}, n = {n})",
                self.k_folds
            )));
        }
        Ok(())
    }
}

/// `{0} ∪ {10^k : k = −2..10}`.
pub fn default_mu_grid() -> Vec<f64> {
    vec![
        0.0, 1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10,
    ]
}

/// Root mean squared error over every entry.
pub fn rmse(predictions: &Matrix, targets: &Matrix) -> Result<f64> {
    if predictions.shape() != targets.shape() {
        return Err(Error::DimensionMismatch {
            context: "prediction/target entries",
            expected: targets.nrows() * targets.ncols(),
            found: predictions.nrows() * predictions.ncols(),
        });
    }
    let count = targets.nrows() * targets.ncols();
    if count == 0 {
        return Err(Error::EmptyInput("RMSE"));
    }
    Ok(libm::sqrt(
        predictions.sub(targets).frobenius_sq() / count as f64,
    ))
}

/// Per-output-column RMSE.
pub fn rmse_per_output(predictions: &Matrix, targets: &Matrix) -> Result<Vec<f64>> {
    rmse(predictions, targets)?;
    Ok((0..targets.ncols())
        .map(|j| {
            let sq: f64 = (0..targets.nrows())
                .map(|i| {
                    let e = predictions[(i, j)] - targets[(i, j)];
                    e * e
                })
                .sum();
            libm::sqrt(sq / targets.nrows() as f64)
        })
        .collect())
}

/// A fitted model plus the kernel bandwidth it used (kernel models with RBF drivers).
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: Model,
    pub bandwidth: Option<f64>,
    /// `μ`-free dependence term at the training data.
    pub penalty_term: f64,
    /// Squared-error fit term at the training data.
    pub fit_term: f64,
}

/// Fits one model at fixed hyperparameters. `bandwidth` is ignored unless the
/// driver kernel is RBF, where it is required.
pub fn fit_model(
    data: &Dataset,
    kind: &ModelKind,
    lambda: f64,
    mu: f64,
    bandwidth: Option<f64>,
) -> Result<Fitted> {
    let p = FitProblem::new(data.x(), data.s(), data.y(), lambda, mu)?;
    match kind {
        ModelKind::Clr => {
            let m = fit_clr(&p)?;
            let terms = clr_terms(&m.weights, &p)?;
            Ok(Fitted {
                model: Model::Clr(m),
                bandwidth: None,
                penalty_term: terms.penalty,
                fit_term: terms.fit,
            })
        }
        ModelKind::Ckr { .. } => {
            let (kx, ks) = resolve_kernels(kind, data, bandwidth)?;
            let grams = CkrGrams::build(data.x(), data.s(), &kx, &ks)?;
            let m = fit_ckr_with_grams(&p, &grams, &kx, &ks)?;
            let terms = ckr_terms(m.dual(), &p, &grams)?;
            Ok(Fitted {
                model: Model::Ckr(m),
                bandwidth: kx.bandwidth(),
                penalty_term: terms.penalty,
                fit_term: terms.fit,
            })
        }
    }
}

fn resolve_kernels(
    kind: &ModelKind,
    data: &Dataset,
    bandwidth: Option<f64>,
) -> Result<(KernelSpec, KernelSpec)> {
    let ModelKind::Ckr {
        kernel_x,
        kernel_s,
        s_bandwidth,
    } = kind
    else {
        unreachable!("linear models have no kernels")
    };
    let kx = if kernel_x.uses_bandwidth() {
        let bw = bandwidth.ok_or_else(|| {
            Error::InvalidParameter("an RBF driver kernel needs a bandwidth".into())
        })?;
        kernel_x.with_bandwidth(bw)?
    } else {
        kernel_x.with_bandwidth(1.0)?
    };
    let ks = if kernel_s.uses_bandwidth() {
        kernel_s.with_bandwidth(s_bandwidth.resolve(data.s())?)?
    } else {
        kernel_s.with_bandwidth(1.0)?
    };
    Ok((kx, ks))
}

/// Result of a grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridChoice {
    pub lambda: f64,
    pub bandwidth: Option<f64>,
    pub cv_rmse: f64,
}

fn sorted_desc_unique(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    v
}

pub fn grid_search(
    data: &Dataset,
    mu: f64,
    cfg: &CvConfig,
    kind: &ModelKind,
) -> Result<GridChoice> {
    cfg.validate(data.n())?;
    let folds = kfold_indices(data.n(), cfg.k_folds, cfg.seed)?;
    let lambdas = sorted_desc_unique(cfg.lambda_grid.iter().copied());
    let bandwidths: Vec<Option<f64>> = if kind.kernel_x_uses_bandwidth() {
        let resolved = cfg
            .bandwidth_grid
            .iter()
            .map(|b| b.resolve(data.x()))
            .collect::<Result<Vec<_>>>()?;
        sorted_desc_unique(resolved).into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    // The sensitive kernel is resolved once on the full data so every fold
    // sees the same K_S bandwidth.
    let fixed_kind = match *kind {
        ModelKind::Ckr {
            kernel_x,
            kernel_s,
            s_bandwidth,
        } if kernel_s.uses_bandwidth() => ModelKind::Ckr {
            kernel_x,
            kernel_s,
            s_bandwidth: Bandwidth::Fixed(s_bandwidth.resolve(data.s())?),
        },
        other => other,
    };

    let mut sums = vec![vec![0.0; lambdas.len()]; bandwidths.len()];
    let mut failures: Vec<Vec<Option<String>>> = vec![vec![None; lambdas.len()]; bandwidths.len()];
    for fold in &folds {
        let train = data.select_rows(&fold.train);
        let validation = data.select_rows(&fold.validation);
        for (bi, bw) in bandwidths.iter().enumerate() {
            let grams = match fixed_kind {
                ModelKind::Clr => None,
                ModelKind::Ckr { .. } => {
                    match resolve_kernels(&fixed_kind, &train, *bw).and_then(|(kx, ks)| {
                        CkrGrams::build(train.x(), train.s(), &kx, &ks).map(|g| (g, kx, ks))
                    }) {
                        Ok(g) => Some(g),
                        Err(e) => {
                            for slot in failures[bi].iter_mut() {
                                slot.get_or_insert_with(|| format!("{e}"));
                            }
                            continue;
                        }
                    }
                }
            };
            for (li, &lambda) in lambdas.iter().enumerate() {
                if failures[bi][li].is_some() {
                    continue;
                }
                let outcome = FitProblem::new(train.x(), train.s(), train.y(), lambda, mu)
                    .and_then(|p| match &grams {
                        None => fit_clr(&p).map(Model::Clr),
                        Some((g, kx, ks)) => fit_ckr_with_grams(&p, g, kx, ks).map(Model::Ckr),
                    })
                    .and_then(|m| m.predict(validation.x()))
                    .and_then(|pred| rmse(&pred, validation.y()));
                match outcome {
                    Ok(e) => sums[bi][li] += e,
                    Err(e) => failures[bi][li] = Some(format!("{e}")),
                }
            }
        }
    }

    let k = folds.len() as f64;
    let mut best: Option<GridChoice> = None;
    let mut messages = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        for (bi, &bandwidth) in bandwidths.iter().enumerate() {
            if let Some(msg) = &failures[bi][li] {
                messages.push(match bandwidth {
                    Some(bw) => format!("lambda = {lambda:e}, bandwidth = {bw:e}: {msg}"),
                    None => format!("lambda = {lambda:e}: {msg}"),
                });
                continue;
            }
            let cv_rmse = sums[bi][li] / k;
            if best.is_none_or(|b| cv_rmse < b.cv_rmse) {
                best = Some(GridChoice {
                    lambda,
                    bandwidth,
                    cv_rmse,
                });
            }
        }
    }
    best.ok_or(Error::GridExhausted { failures: messages })
}

/// One point of the accuracy/consistency trade-off curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub mu: f64,
    pub lambda_selected: f64,
    /// `None` for models without an RBF driver kernel.
    pub bandwidth_selected: Option<f64>,
    pub rmse_train: f64,
    pub rmse_test: f64,
    /// Linear HSIC between test predictions and test sensitive variables.
    pub hsic_pred_s: f64,
    /// `μ`-free dependence term of the fitted model at the training data.
    pub penalty_term: f64,
}

/// Re-selects hyperparameters for every `μ` in `mu_grid`, refits on `train`
/// and scores on both sets.
pub fn sweep_mu(
    train: &Dataset,
    test: &Dataset,
    mu_grid: &[f64],
    cfg: &CvConfig,
    kind: &ModelKind,
) -> Result<Vec<SweepRecord>> {
    if mu_grid.is_empty() {
        return Err(Error::EmptyInput("mu grid"));
    }
    if let Some(bad) = mu_grid.iter().find(|m| !(**m >= 0.0 && m.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "mu grid entries must be finite and non-negative, got {bad}"
        )));
    }
    if mu_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "mu grid must be sorted ascending".into(),
        ));
    }
    mu_grid
        .iter()
        .map(|&mu| {
            sweep_point(train, test, mu, cfg, kind).map_err(|e| Error::AtMu {
                mu,
                source: Box::new(e),
            })
        })
        .collect()
}

fn sweep_point(
    train: &Dataset,
    test: &Dataset,
    mu: f64,
    cfg: &CvConfig,
    kind: &ModelKind,
) -> Result<SweepRecord> {
    let choice = grid_search(train, mu, cfg, kind)?;
    let fitted = fit_model(train, kind, choice.lambda, mu, choice.bandwidth)?;
    let pred_train = fitted.model.predict(train.x())?;
    let pred_test = fitted.model.predict(test.x())?;
    Ok(SweepRecord {
        mu,
        lambda_selected: choice.lambda,
        bandwidth_selected: fitted.bandwidth,
        rmse_train: rmse(&pred_train, train.y())?,
        rmse_test: rmse(&pred_test, test.y())?,
        hsic_pred_s: hsic_linear(&pred_test, test.s())?.value,
        penalty_term: fitted.penalty_term,
    })
}
