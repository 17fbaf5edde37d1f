//! Consistent regression: linear and kernel ridge models whose predictions are
//! pushed towards statistical independence from a set of sensitive variables.
//!
//! The dependence between predictions and sensitive variables is measured by
//! the biased empirical Hilbert-Schmidt Independence Criterion (HSIC). Adding
//! it to a ridge objective keeps the problem quadratic, so both models are
//! fitted in closed form:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernels`] | kernels, Gram matrices, centering, median heuristic |
//! | [`hsic`] | linear and kernel HSIC estimators |
//! | [`regressors`] | CLR / CKR closed forms, prediction, objectives |
//! | [`selection`] | k-fold CV, grid search, μ sweep |
//! | [`data`] | datasets, synthetic benchmark, splits |
//! | [`linalg`] | dense matrices and a checked LU solver |
//!
//! The crate is `no_std` and only needs `alloc`. Transcendental functions come
//! from `libm`, so seeded results are reproducible across platforms.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod hsic;
pub mod kernels;
pub mod linalg;
pub mod regressors;
pub mod rng;
pub mod selection;

pub use data::{
    gen_synthetic, generate, train_test_split, Dataset, SensitiveMode, SynthConfig, Synthetic,
};
pub use error::{Error, Result};
pub use hsic::{hsic_kernel, hsic_linear, HsicValue};
pub use kernels::{
    build_gram, center_columns, center_test_rows, kernel_eval, median_heuristic, CenteringStats,
    GramPair, KernelSpec,
};
pub use linalg::Matrix;
pub use regressors::{
    ckr_objective, clr_objective, fit_ckr, fit_clr, CkrModel, ClrModel, FitProblem, Model,
};
pub use selection::{
    grid_search, kfold_indices, sweep_mu, Bandwidth, CvConfig, KernelFamily, ModelKind, SweepRecord,
};
