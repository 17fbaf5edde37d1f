//! `consreg <gen|fit|predict|evaluate|sweep> [flags]`.
//!
//! Exit codes: 0 on success, 1 for runtime or data failures, 2 for usage
//! errors. Every random choice is driven by `--seed`, which defaults to 0.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use consreg_core::selection::{default_mu_grid, fit_model, rmse};
use consreg_core::{
    gen_synthetic, hsic_linear, sweep_mu, train_test_split, Bandwidth, CvConfig, Dataset,
    KernelFamily, Matrix, Model, ModelKind, SensitiveMode, SynthConfig,
};

use crate::csv_io::{format_number, load_csv, load_features, save_csv, write_curve, write_matrix};
use crate::error::{DataError, Error, Result};
use crate::metrics::MetricsReport;
use crate::model_file::{Metadata, ModelFile};

#[derive(Debug, Parser)]
#[command(
    name = "consreg",
    version,
    about = "Regression with an HSIC consistency penalty"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset.
    Gen(GenArgs),
    /// Fit a model on a labeled CSV and save it.
    Fit(FitArgs),
    /// Predict targets for a feature CSV.
    Predict(PredictArgs),
    /// Report RMSE and HSIC(predictions, S) on a labeled CSV.
    Evaluate(EvaluateArgs),
    /// Trace the accuracy/consistency trade-off over a grid of mu.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Subset,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Clr,
    Ckr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Rbf,
    Linear,
    Poly,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub q: usize,
    /// Sensitive columns with strong target weight [default: min(q, d, 4)].
    #[arg(long)]
    pub overlap: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Subset)]
    pub mode: ModeArg,
    /// Weight of the x_1*x_2 term in the target.
    #[arg(long, default_value_t = 1.0)]
    pub interaction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Driver kernel (kernel model only).
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub kernel: KernelArg,
    /// Sensitive-variable kernel (kernel model only).
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    pub s_kernel: KernelArg,
    /// RBF bandwidth of the sensitive kernel: `median` or a positive number.
    #[arg(long, default_value = "median", value_parser = parse_bandwidth)]
    pub s_bandwidth: Bandwidth,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// RBF bandwidth of the driver kernel: `median` or a positive number.
    #[arg(long, default_value = "median", value_parser = parse_bandwidth)]
    pub bandwidth: Bandwidth,
    #[command(flatten)]
    pub kernels: KernelArgs,
    /// Recorded in the model file.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["model", "predictions"]))]
pub struct EvaluateArgs {
    /// Labeled CSV; its `s_` columns enter the HSIC.
    #[arg(long)]
    pub data: PathBuf,
    /// Model file to predict with.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Precomputed predictions with the same `y_` columns as the data.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out CSV; when absent the data is split by `--test-fraction`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Ascending, comma separated [default: 0,1e-2,1e-1,...,1e10].
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-2,1e-1,1,10")]
    pub lambda_grid: Vec<f64>,
    /// Entries are `median` or positive numbers.
    #[arg(long, value_delimiter = ',', default_value = "median", value_parser = parse_bandwidth)]
    pub bandwidth_grid: Vec<Bandwidth>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[command(flatten)]
    pub kernels: KernelArgs,
    /// Seeds both the train/test split and the fold assignment.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_bandwidth(s: &str) -> std::result::Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(Bandwidth::Median);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
        _ => Err(format!("expected `median` or a positive number, got {s:?}")),
    }
}

impl KernelArgs {
    fn family(&self, k: KernelArg) -> KernelFamily {
        match k {
            KernelArg::Rbf => KernelFamily::Rbf,
            KernelArg::Linear => KernelFamily::Linear,
            KernelArg::Poly => KernelFamily::Polynomial {
                degree: self.degree,
                offset: self.offset,
            },
        }
    }

    fn model_kind(&self, model: ModelArg) -> ModelKind {
        match model {
            ModelArg::Clr => ModelKind::Clr,
            ModelArg::Ckr => ModelKind::Ckr {
                kernel_x: self.family(self.kernel),
                kernel_s: self.family(self.s_kernel),
                s_bandwidth: self.s_bandwidth,
            },
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Fit(a) => cmd_fit(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}

fn report(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SynthConfig {
        n: a.n,
        d: a.d,
        q: a.q,
        noise_std: a.noise,
        sensitive_mode: match a.mode {
            ModeArg::Subset => SensitiveMode::SubsetColumns,
            ModeArg::Mixed => SensitiveMode::MixedNoise,
        },
        overlap: a.overlap.unwrap_or(a.q.min(a.d).min(4)),
        interaction: a.interaction,
        seed: a.seed,
    };
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let ds = gen_synthetic(&cfg)?;
    save_csv(&ds, &a.out)?;
    report(
        out,
        format_args!(
            "wrote {}: n={} x={} s={} y={}",
            a.out.display(),
            ds.n(),
            ds.x().ncols(),
            ds.s().ncols(),
            ds.y().ncols()
        ),
    )
}

fn dataset_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load_csv(&a.data)?;
    let hash = dataset_hash(&a.data)?;
    let kind = a.kernels.model_kind(a.model);
    let bandwidth = match kind {
        ModelKind::Ckr { kernel_x, .. } if kernel_x.uses_bandwidth() => {
            Some(a.bandwidth.resolve(ds.x())?)
        }
        _ => None,
    };
    let fitted = fit_model(&ds, &kind, a.lambda, a.mu, bandwidth)?;
    let pred = fitted.model.predict(ds.x())?;
    let file = ModelFile::from_model(
        &fitted.model,
        ds.x_names(),
        ds.y_names(),
        Metadata {
            seed: a.seed,
            dataset_hash: hash,
        },
    );
    file.write(&a.out)?;
    report(
        out,
        format_args!("rmse_train={}", format_number(rmse(&pred, ds.y())?)),
    )?;
    report(
        out,
        format_args!(
            "hsic_pred_s={}",
            format_number(hsic_linear(&pred, ds.s())?.value)
        ),
    )?;
    if let Some(bw) = fitted.bandwidth {
        report(out, format_args!("bandwidth={}", format_number(bw)))?;
    }
    report(out, format_args!("wrote {}", a.out.display()))
}

/// Positions of `wanted` within `available`.
fn column_indices(available: &[String], wanted: &[String], path: &Path) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|name| {
            available
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Data {
                    path: path.to_path_buf(),
                    kind: DataError::MissingColumn(name.clone()),
                })
        })
        .collect()
}

fn predict_with(file: &ModelFile, ds: &Dataset, path: &Path) -> Result<Matrix> {
    let model: Model = file.to_model()?;
    let x = ds
        .x()
        .select_columns(&column_indices(ds.x_names(), &file.x_names, path)?);
    Ok(model.predict(&x)?)
}

fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let file = ModelFile::read(&a.model)?;
    let ds = load_features(&a.data)?;
    let pred = predict_with(&file, &ds, &a.data)?;
    write_matrix(&a.out, &file.y_names, &pred)?;
    report(
        out,
        format_args!("wrote {}: {} rows", a.out.display(), pred.nrows()),
    )
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let ds = load_csv(&a.data)?;
    let (names, pred) = match (&a.model, &a.predictions) {
        (Some(model), _) => {
            let file = ModelFile::read(model)?;
            let pred = predict_with(&file, &ds, &a.data)?;
            (file.y_names, pred)
        }
        (None, Some(path)) => {
            let p = load_csv(path)?;
            if p.n() != ds.n() {
                return Err(Error::Data {
                    path: path.clone(),
                    kind: DataError::Core(consreg_core::Error::DimensionMismatch {
                        context: "prediction rows",
                        expected: ds.n(),
                        found: p.n(),
                    }),
                });
            }
            (p.y_names().to_vec(), p.y().clone())
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let targets = ds
        .y()
        .select_columns(&column_indices(ds.y_names(), &names, &a.data)?);
    let metrics = MetricsReport::compute(&pred, &targets, ds.s())?;
    report(out, format_args!("{metrics}"))
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_csv(&a.data)?;
    let (train, test) = match &a.test {
        Some(path) => (data, load_csv(path)?),
        None => train_test_split(&data, a.test_fraction, a.seed)?,
    };
    let cfg = CvConfig {
        k_folds: a.folds,
        seed: a.seed,
        lambda_grid: a.lambda_grid.clone(),
        bandwidth_grid: a.bandwidth_grid.clone(),
    };
    let mu_grid = a.mu_grid.clone().unwrap_or_else(default_mu_grid);
    let kind = a.kernels.model_kind(a.model);
    let records = sweep_mu(&train, &test, &mu_grid, &cfg, &kind)?;
    write_curve(&a.out, &records)?;
    for r in &records {
        report(
            out,
            format_args!(
                "mu={} lambda={} rmse_test={} hsic={}",
                format_number(r.mu),
                format_number(r.lambda_selected),
                format_number(r.rmse_test),
                format_number(r.hsic_pred_s)
            ),
        )?;
    }
    report(
        out,
        format_args!("wrote {}: {} rows", a.out.display(), records.len()),
    )
}
