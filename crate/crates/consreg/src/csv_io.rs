//! Prefix-schema CSV files.
//!
//! The header names every column; `x_*` columns are drivers, `s_*` sensitive
//! variables and `y_*` targets (prefixes are case-sensitive). Columns of one
//! block may appear anywhere in the file and keep their relative order.
//! Numbers are written with 17 significant digits so values survive a
//! save/load cycle exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use consreg_core::selection::SweepRecord;
use consreg_core::{Dataset, Matrix};

use crate::error::{DataError, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    X,
    S,
    Y,
}

fn classify(name: &str) -> Option<Block> {
    if name.starts_with("x_") {
        Some(Block::X)
    } else if name.starts_with("s_") {
        Some(Block::S)
    } else if name.starts_with("y_") {
        Some(Block::Y)
    } else {
        None
    }
}

/// Formats a value with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a labeled dataset; at least one `y_` column is required.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load(path.as_ref(), true)
}

/// Reads a dataset whose `y_` block may be empty (prediction inputs).
pub fn load_features(path: impl AsRef<Path>) -> Result<Dataset> {
    load(path.as_ref(), false)
}

fn load(path: &Path, require_targets: bool) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, require_targets).map_err(|kind| Error::Data {
        path: path.to_path_buf(),
        kind,
    })
}

pub fn read_dataset<R: Read>(
    reader: R,
    require_targets: bool,
) -> std::result::Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(DataError::MissingHeader),
    };
    let names: Vec<String> = header.iter().map(str::to_owned).collect();
    if names.iter().all(|n| n.is_empty()) {
        return Err(DataError::MissingHeader);
    }
    let blocks = names
        .iter()
        .map(|n| classify(n).ok_or_else(|| DataError::UnknownColumn { name: n.clone() }))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if require_targets && !blocks.contains(&Block::Y) {
        return Err(DataError::NoTargets);
    }

    let mut x = Vec::new();
    let mut s = Vec::new();
    let mut y = Vec::new();
    let mut n = 0usize;
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            return Err(DataError::RaggedRow {
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        for ((cell, name), block) in record.iter().zip(&names).zip(&blocks) {
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                line,
                column: name.clone(),
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NonFinite {
                    line,
                    column: name.clone(),
                });
            }
            match block {
                Block::X => x.push(value),
                Block::S => s.push(value),
                Block::Y => y.push(value),
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(DataError::NoRows);
    }
    let pick = |b: Block| -> Vec<String> {
        names
            .iter()
            .zip(&blocks)
            .filter(|(_, bb)| **bb == b)
            .map(|(n, _)| n.clone())
            .collect()
    };
    let (x_names, s_names, y_names) = (pick(Block::X), pick(Block::S), pick(Block::Y));
    let x = Matrix::from_vec(n, x_names.len(), x)?;
    let s = Matrix::from_vec(n, s_names.len(), s)?;
    let y = Matrix::from_vec(n, y_names.len(), y)?;
    Ok(Dataset::new(x, s, y, x_names, s_names, y_names)?)
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, file).map_err(|kind| Error::Data {
        path: path.to_path_buf(),
        kind,
    })
}

pub fn write_dataset<W: Write>(ds: &Dataset, writer: W) -> std::result::Result<(), DataError> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let header: Vec<&str> = ds
        .x_names()
        .iter()
        .chain(ds.s_names())
        .chain(ds.y_names())
        .map(String::as_str)
        .collect();
    wtr.write_record(&header)?;
    for i in 0..ds.n() {
        let row: Vec<String> = ds
            .x()
            .row(i)
            .iter()
            .chain(ds.s().row(i))
            .chain(ds.y().row(i))
            .map(|v| format_number(*v))
            .collect();
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes a matrix under the given column names (used for predictions).
pub fn write_matrix(path: impl AsRef<Path>, names: &[String], m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let mut rows = Vec::with_capacity(m.nrows() + 1);
    rows.push(names.join(","));
    for i in 0..m.nrows() {
        rows.push(
            m.row(i)
                .iter()
                .map(|v| format_number(*v))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    write_lines(path, &rows)
}

/// Trade-off curve columns, in file order.
pub const CURVE_HEADER: &str = "mu,lambda,bandwidth,rmse_train,rmse_test,hsic,penalty";

pub fn write_curve(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<()> {
    let mut rows = Vec::with_capacity(records.len() + 1);
    rows.push(CURVE_HEADER.to_owned());
    for r in records {
        rows.push(
            [
                format_number(r.mu),
                format_number(r.lambda_selected),
                r.bandwidth_selected.map(format_number).unwrap_or_default(),
                format_number(r.rmse_train),
                format_number(r.rmse_test),
                format_number(r.hsic_pred_s),
                format_number(r.penalty_term),
            ]
            .join(","),
        );
    }
    write_lines(path.as_ref(), &rows)
}

fn write_lines(path: &Path, rows: &[String]) -> Result<()> {
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    for row in rows {
        writeln!(file, "{row}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, require_targets: bool) -> std::result::Result<Dataset, DataError> {
        read_dataset(text.as_bytes(), require_targets)
    }

    #[test]
    fn schema_parse() {
        let ds = parse("x_1,x_2,s_1,y_1\n1,2,3,4\n5,6,7,8\n9,10,11,12\n", true).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.x().ncols(), 2);
        assert_eq!(ds.s().ncols(), 1);
        assert_eq!(ds.y().ncols(), 1);
        assert_eq!(ds.x().row(1), &[5.0, 6.0]);
        assert_eq!(ds.y().column(0), vec![4.0, 8.0, 12.0]);
    }

    #[test]
    fn interleaved_columns_keep_block_order() {
        let ds = parse("y_a,x_b,s_c,x_a\r\n1,2,3,4\r\n", true).unwrap();
        assert_eq!(ds.x_names(), &["x_b".to_owned(), "x_a".to_owned()]);
        assert_eq!(ds.x().row(0), &[2.0, 4.0]);
        assert_eq!(ds.y().row(0), &[1.0]);
    }

    #[test]
    fn no_sensitive_columns_is_valid() {
        let ds = parse("x_1,y_1\n1,2\n3,4\n", true).unwrap();
        assert_eq!(ds.s().shape(), (2, 0));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(parse("", true), Err(DataError::MissingHeader)));
        assert!(matches!(
            parse("x_1,s_1\n1,2\n", true),
            Err(DataError::NoTargets)
        ));
        assert!(parse("x_1,s_1\n1,2\n", false).is_ok());
        assert!(matches!(
            parse("x_1,z_1,y_1\n1,2,3\n", true),
            Err(DataError::UnknownColumn { .. })
        ));
        assert!(matches!(
            parse("x_1,X_2,y_1\n1,2,3\n", true),
            Err(DataError::UnknownColumn { .. })
        ));
        match parse("x_1,y_1\n1,2\n3\n", true) {
            Err(DataError::RaggedRow {
                line,
                expected,
                found,
            }) => {
                assert_eq!((line, expected, found), (3, 2, 1));
            }
            other => panic!("{other:?}"),
        }
        match parse("x_1,y_1\n1,2\n3,abc\n", true) {
            Err(DataError::NonNumeric {
                line,
                column,
                value,
            }) => {
                assert_eq!((line, column.as_str(), value.as_str()), (3, "y_1", "abc"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("x_1,y_1\nNaN,1\n", true),
            Err(DataError::NonFinite { .. })
        ));
        assert!(matches!(parse("x_1,y_1\n", true), Err(DataError::NoRows)));
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = parse(
            "x_1,s_1,y_1\n0.1,-3.3333333333333335,1e-300\n2.718281828459045,7,123456789.123\n",
            true,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), true).unwrap();
        assert_eq!(ds, back);
    }
}
