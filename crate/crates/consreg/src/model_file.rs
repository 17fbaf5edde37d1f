//! Persisted models.
//!
//! A model file is a JSON document whose first key is `format_version`.
//! Floats are written with 17 significant digits and parsed with correct
//! rounding, so reading a file and writing it again reproduces it byte for
//! byte. Arrays of scalars are written on one line; arrays of arrays put one
//! inner array per line.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use consreg_core::kernels::{CenteringStats, KernelSpec};
use consreg_core::regressors::{CkrModel, ClrModel, Model};
use consreg_core::Matrix;

use crate::error::{Error, ModelFileError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKindTag {
    Clr,
    Ckr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelRecord {
    Linear,
    Rbf { bandwidth: f64 },
    Polynomial { degree: u32, offset: f64 },
}

impl From<KernelSpec> for KernelRecord {
    fn from(k: KernelSpec) -> Self {
        match k {
            KernelSpec::Linear => KernelRecord::Linear,
            KernelSpec::Rbf { bandwidth } => KernelRecord::Rbf { bandwidth },
            KernelSpec::Polynomial { degree, offset } => {
                KernelRecord::Polynomial { degree, offset }
            }
        }
    }
}

impl From<&KernelRecord> for KernelSpec {
    fn from(k: &KernelRecord) -> Self {
        match *k {
            KernelRecord::Linear => KernelSpec::Linear,
            KernelRecord::Rbf { bandwidth } => KernelSpec::Rbf { bandwidth },
            KernelRecord::Polynomial { degree, offset } => {
                KernelSpec::Polynomial { degree, offset }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&Matrix> for MatrixRecord {
    fn from(m: &Matrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows()).map(|i| m.row(i).to_vec()).collect(),
        }
    }
}

impl MatrixRecord {
    fn to_matrix(&self, what: &str) -> std::result::Result<Matrix, ModelFileError> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(ModelFileError::Invalid(format!(
                "{what}: data does not match the declared {}x{} shape",
                self.rows, self.cols
            )));
        }
        Matrix::from_rows(&self.data).map_err(|e| ModelFileError::Invalid(format!("{what}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub seed: u64,
    /// SHA-256 of the training CSV bytes, hex encoded.
    pub dataset_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub model_kind: ModelKindTag,
    pub lambda: f64,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_x: Option<KernelRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_s: Option<KernelRecord>,
    pub n_train: usize,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_means: Option<Vec<f64>>,
    pub y_means: Vec<f64>,
    /// Weights `W` (linear) or dual coefficients `Λ` (kernel).
    pub coefficients: MatrixRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_train: Option<MatrixRecord>,
    pub metadata: Metadata,
}

impl ModelFile {
    pub fn from_model(
        model: &Model,
        x_names: &[String],
        y_names: &[String],
        metadata: Metadata,
    ) -> Self {
        match model {
            Model::Clr(m) => ModelFile {
                format_version: FORMAT_VERSION,
                model_kind: ModelKindTag::Clr,
                lambda: m.lambda,
                mu: m.mu,
                kernel_x: None,
                kernel_s: None,
                n_train: m.x_stats.n_train,
                x_names: x_names.to_vec(),
                y_names: y_names.to_vec(),
                x_means: Some(m.x_stats.column_means.clone()),
                s_means: Some(m.s_stats.column_means.clone()),
                y_means: m.y_stats.column_means.clone(),
                coefficients: (&m.weights).into(),
                x_train: None,
                metadata,
            },
            Model::Ckr(m) => ModelFile {
                format_version: FORMAT_VERSION,
                model_kind: ModelKindTag::Ckr,
                lambda: m.lambda(),
                mu: m.mu(),
                kernel_x: Some((*m.kernel_x()).into()),
                kernel_s: Some((*m.kernel_s()).into()),
                n_train: m.y_stats().n_train,
                x_names: x_names.to_vec(),
                y_names: y_names.to_vec(),
                x_means: None,
                s_means: None,
                y_means: m.y_stats().column_means.clone(),
                coefficients: m.dual().into(),
                x_train: Some(m.x_train().into()),
                metadata,
            },
        }
    }

    pub fn to_model(&self) -> std::result::Result<Model, ModelFileError> {
        let invalid = |msg: &str| ModelFileError::Invalid(msg.to_owned());
        if self.format_version != FORMAT_VERSION {
            return Err(ModelFileError::Version {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let coefficients = self.coefficients.to_matrix("coefficients")?;
        let y_stats = CenteringStats {
            column_means: self.y_means.clone(),
            n_train: self.n_train,
        };
        if y_stats.column_means.len() != coefficients.ncols()
            || self.y_names.len() != coefficients.ncols()
        {
            return Err(invalid("target count differs from coefficient columns"));
        }
        match self.model_kind {
            ModelKindTag::Clr => {
                let x_means = self
                    .x_means
                    .clone()
                    .ok_or_else(|| invalid("linear model without x_means"))?;
                let s_means = self
                    .s_means
                    .clone()
                    .ok_or_else(|| invalid("linear model without s_means"))?;
                if x_means.len() != coefficients.nrows()
                    || self.x_names.len() != coefficients.nrows()
                {
                    return Err(invalid("driver count differs from weight rows"));
                }
                if !coefficients.is_finite() {
                    return Err(invalid("non-finite weights"));
                }
                Ok(Model::Clr(ClrModel {
                    weights: coefficients,
                    x_stats: CenteringStats {
                        column_means: x_means,
                        n_train: self.n_train,
                    },
                    s_stats: CenteringStats {
                        column_means: s_means,
                        n_train: self.n_train,
                    },
                    y_stats,
                    lambda: self.lambda,
                    mu: self.mu,
                }))
            }
            ModelKindTag::Ckr => {
                let kernel_x = self
                    .kernel_x
                    .as_ref()
                    .ok_or_else(|| invalid("kernel model without kernel_x"))?;
                let kernel_s = self
                    .kernel_s
                    .as_ref()
                    .ok_or_else(|| invalid("kernel model without kernel_s"))?;
                let x_train = self
                    .x_train
                    .as_ref()
                    .ok_or_else(|| invalid("kernel model without x_train"))?
                    .to_matrix("x_train")?;
                if x_train.ncols() != self.x_names.len() || x_train.nrows() != self.n_train {
                    return Err(invalid("x_train shape differs from x_names/n_train"));
                }
                let model = CkrModel::from_parts(
                    coefficients,
                    x_train,
                    kernel_x.into(),
                    kernel_s.into(),
                    y_stats,
                    self.lambda,
                    self.mu,
                )
                .map_err(|e| ModelFileError::Invalid(e.to_string()))?;
                Ok(Model::Ckr(model))
            }
        }
    }

    pub fn to_json(&self) -> std::result::Result<String, ModelFileError> {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, TreeFormatter::default());
        self.serialize(&mut ser)?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, ModelFileError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(ModelFileError::Version {
                found: file.format_version,
                expected: FORMAT_VERSION,
            });
        }
        Ok(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_json(&text)?)
    }
}

#[derive(Debug)]
struct Frame {
    is_array: bool,
    multiline: bool,
    empty: bool,
}

/// JSON layout: objects one key per line, scalar arrays inline, nested arrays
/// one element per line, floats with 17 significant digits.
#[derive(Debug, Default)]
struct TreeFormatter {
    stack: Vec<Frame>,
    /// Separator owed before the next array element (`Some(first)`).
    pending: Option<bool>,
}

impl TreeFormatter {
    fn indent<W: ?Sized + io::Write>(&self, w: &mut W, depth: usize) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    /// Emits the separator owed to the enclosing array. Nested containers
    /// switch that array to one-element-per-line layout.
    fn flush<W: ?Sized + io::Write>(&mut self, w: &mut W, nested: bool) -> io::Result<()> {
        let Some(first) = self.pending.take() else {
            return Ok(());
        };
        let depth = self.stack.len();
        let frame = self
            .stack
            .last_mut()
            .expect("pending separator outside an array");
        if first && nested {
            frame.multiline = true;
        }
        frame.empty = false;
        let multiline = frame.multiline;
        if !first {
            w.write_all(if multiline { b"," } else { b", " })?;
        }
        if multiline {
            self.indent(w, depth)?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for TreeFormatter {
    fn write_null<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.flush(w, false)?;
        w.write_all(b"null")
    }

    fn write_bool<W: ?Sized + io::Write>(&mut self, w: &mut W, value: bool) -> io::Result<()> {
        self.flush(w, false)?;
        w.write_all(if value { b"true" } else { b"false" })
    }

    fn write_u32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: u32) -> io::Result<()> {
        self.flush(w, false)?;
        write!(w, "{value}")
    }

    fn write_u64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: u64) -> io::Result<()> {
        self.flush(w, false)?;
        write!(w, "{value}")
    }

    fn write_i64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: i64) -> io::Result<()> {
        self.flush(w, false)?;
        write!(w, "{value}")
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        self.flush(w, false)?;
        write!(w, "{value:.16e}")
    }

    fn begin_string<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.flush(w, false)?;
        w.write_all(b"\"")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.flush(w, true)?;
        self.stack.push(Frame {
            is_array: true,
            multiline: false,
            empty: true,
        });
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        let frame = self.stack.pop().expect("unbalanced array");
        debug_assert!(frame.is_array);
        if frame.multiline && !frame.empty {
            self.indent(w, self.stack.len())?;
        }
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        _w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pending = Some(first);
        Ok(())
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, _w: &mut W) -> io::Result<()> {
        Ok(())
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.flush(w, true)?;
        self.stack.push(Frame {
            is_array: false,
            multiline: true,
            empty: true,
        });
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        let frame = self.stack.pop().expect("unbalanced object");
        debug_assert!(!frame.is_array);
        if !frame.empty {
            self.indent(w, self.stack.len())?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        let depth = self.stack.len();
        if let Some(frame) = self.stack.last_mut() {
            frame.empty = false;
        }
        if !first {
            w.write_all(b",")?;
        }
        self.indent(w, depth)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}
