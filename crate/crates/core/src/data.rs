//! Row-aligned datasets, the seeded synthetic benchmark and train/test splits.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SeededRng;

/// Drivers `X`, sensitive variables `S` and targets `Y`, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    s: Matrix,
    y: Matrix,
    x_names: Vec<String>,
    s_names: Vec<String>,
    y_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Matrix,
        s: Matrix,
        y: Matrix,
        x_names: Vec<String>,
        s_names: Vec<String>,
        y_names: Vec<String>,
    ) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::EmptyInput("dataset rows"));
        }
        for (context, rows) in [("sensitive rows", s.nrows()), ("target rows", y.nrows())] {
            if rows != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    found: rows,
                });
            }
        }
        for (context, names, cols) in [
            ("driver names", &x_names, x.ncols()),
            ("sensitive names", &s_names, s.ncols()),
            ("target names", &y_names, y.ncols()),
        ] {
            if names.len() != cols {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: cols,
                    found: names.len(),
                });
            }
        }
        if !x.is_finite() || !s.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self {
            x,
            s,
            y,
            x_names,
            s_names,
            y_names,
        })
    }

    /// Builds a dataset with default `x_1…`, `s_1…`, `y_1…` column names.
    pub fn from_blocks(x: Matrix, s: Matrix, y: Matrix) -> Result<Self> {
        let x_names = default_names("x", x.ncols());
        let s_names = default_names("s", s.ncols());
        let y_names = default_names("y", y.ncols());
        Self::new(x, s, y, x_names, s_names, y_names)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn s(&self) -> &Matrix {
        &self.s
    }

    pub fn y(&self) -> &Matrix {
        &self.y
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn s_names(&self) -> &[String] {
        &self.s_names
    }

    pub fn y_names(&self) -> &[String] {
        &self.y_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Rows picked by index, keeping column names.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            s: self.s.select_rows(indices),
            y: self.y.select_rows(indices),
            x_names: self.x_names.clone(),
            s_names: self.s_names.clone(),
            y_names: self.y_names.clone(),
        }
    }
}

pub fn default_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}_{i}")).collect()
}

/// How the sensitive block is derived from the drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitiveMode {
    /// `S` is the last `q` driver columns.
    SubsetColumns,
    /// `S = X_B·A + η` where `X_B` are the last `min(q, d)` driver columns.
    MixedNoise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub q: usize,
    pub noise_std: f64,
    pub sensitive_mode: SensitiveMode,
    /// Number of sensitive-basis columns carrying strong target weight.
    pub overlap: usize,
    /// Coefficient of the `x_1·x_2` interaction added to the target.
    pub interaction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 200,
            d: 20,
            q: 4,
            noise_std: 0.1,
            sensitive_mode: SensitiveMode::SubsetColumns,
            overlap: 4,
            interaction: 1.0,
            seed: 42,
        }
    }
}

/// Standard deviation of driver weights outside the strong columns.
const WEAK_WEIGHT_STD: f64 = 0.3;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 || self.d == 0 {
            return invalid(format!(
                "n and d must be positive (n = {}, d = {})",
                self.n, self.d
            ));
        }
        if self.q == 0 {
            return invalid("q must be positive".into());
        }
        if self.sensitive_mode == SensitiveMode::SubsetColumns && self.q > self.d {
            return invalid(format!(
                "q = {} exceeds d = {} with subset sensitive columns",
                self.q, self.d
            ));
        }
        if self.overlap > self.q.min(self.d) {
            return invalid(format!(
                "overlap = {} exceeds the {} sensitive-basis columns",
                self.overlap,
                self.q.min(self.d)
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return invalid(format!(
                "noise_std must be non-negative, got {}",
                self.noise_std
            ));
        }
        if !self.interaction.is_finite() {
            return Err(Error::NonFinite("interaction"));
        }
        if self.interaction != 0.0 && self.d < 2 {
            return invalid("an interaction term needs d >= 2".into());
        }
        Ok(())
    }

    /// Driver columns that span the sensitive block (the last `min(q, d)`).
    pub fn sensitive_basis(&self) -> core::ops::Range<usize> {
        self.d - self.q.min(self.d)..self.d
    }
}

/// A generated dataset together with the hidden linear weights.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub weights: Vec<f64>,
}

/// Seeded synthetic benchmark.
///
/// Draw order from a single stream: `X` (n×d, row-major, standard normal);
/// weak weights `w_j ~ N(0, 0.3²)` for every column; then for each of the
/// first `overlap` sensitive-basis columns a sign (uniform `< 0.5` is
/// negative) and magnitude `1 + U[0,1)` replacing its weight; in mixed mode
/// the mixing matrix `A` (basis×q, standard normal) followed by `η`
/// (n×q, `N(0, noise_std²)`); finally the target noise `ε`.
///
/// `Y = X·w + interaction·x_1·x_2 + noise_std·ε`.
pub fn generate(cfg: &SynthConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let mut rng = SeededRng::new(cfg.seed);
    let x = Matrix::from_fn(cfg.n, cfg.d, |_, _| rng.standard_normal());

    let mut weights: Vec<f64> = (0..cfg.d)
        .map(|_| WEAK_WEIGHT_STD * rng.standard_normal())
        .collect();
    let basis = cfg.sensitive_basis();
    for j in basis.clone().take(cfg.overlap) {
        let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        weights[j] = sign * (1.0 + rng.uniform());
    }

    let basis_cols: Vec<usize> = basis.collect();
    let s = match cfg.sensitive_mode {
        SensitiveMode::SubsetColumns => x.select_columns(&basis_cols),
        SensitiveMode::MixedNoise => {
            let mixing = Matrix::from_fn(basis_cols.len(), cfg.q, |_, _| rng.standard_normal());
            let mut s = x.select_columns(&basis_cols).matmul(&mixing);
            for i in 0..cfg.n {
                for v in s.row_mut(i) {
                    *v += cfg.noise_std * rng.standard_normal();
                }
            }
            s
        }
    };

    let mut y = Matrix::zeros(cfg.n, 1);
    for i in 0..cfg.n {
        let row = x.row(i);
        let mut value: f64 = row.iter().zip(&weights).map(|(a, w)| a * w).sum();
        if cfg.interaction != 0.0 {
            value += cfg.interaction * row[0] * row[1];
        }
        y[(i, 0)] = value + cfg.noise_std * rng.standard_normal();
    }

    let dataset = Dataset::from_blocks(x, s, y)?;
    Ok(Synthetic { dataset, weights })
}

pub fn gen_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    Ok(generate(cfg)?.dataset)
}

/// Splits rows into disjoint train and test sets.
///
/// The test set has `round(n·test_fraction)` rows, clamped so that both sides
/// keep at least one row. Rows keep their original order within each side.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = ds.n();
    if n < 2 {
        return Err(Error::TooFewSamples {
            context: "train/test split",
            needed: 2,
            found: n,
        });
    }
    let n_test = (libm::round(n as f64 * test_fraction) as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    let mut test_idx = order[..n_test].to_vec();
    let mut train_idx = order[n_test..].to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((ds.select_rows(&train_idx), ds.select_rows(&test_idx)))
}
