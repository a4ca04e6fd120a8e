//! CSV and JSON input/output.
//!
//! Series layout: one row per time point with `p·q` numeric fields, entry
//! `(i, j)` of `Y_t` in column `(i−1)·q + j` (row-major). A non-numeric first
//! row is a header. A leading date column is recognised either because its
//! values do not parse as numbers or because rows carry exactly `p·q + 1`
//! fields (numeric dates such as `20210106`).

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimation::{Estimate, Mode, Side, SideAnalysis};
use crate::evaluation::{CvReport, McCellConfig, McReport, RssNorm};
use crate::linalg::Matrix;
use crate::series::MatrixSeries;

fn parse_number(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses a series without demeaning. Row numbers in errors are 1-based file lines.
pub fn parse_series<R: Read>(reader: R, p: usize, q: usize) -> Result<MatrixSeries> {
    if p == 0 || q == 0 {
        return Err(Error::Validation(format!(
            "series dimensions must be positive, got {p}x{q}"
        )));
    }
    let width = p * q;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut frames = Vec::new();
    let mut skip_first: Option<bool> = None;
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if frames.is_empty() && skip_first.is_none() && is_header(&record) {
            skip_first = Some(false);
            continue;
        }
        let offset = match record.len() {
            n if n == width => 0,
            n if n == width + 1 => 1,
            n => {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {width} fields (p·q = {p}·{q}), found {n}"),
                })
            }
        };
        let mut data = Vec::with_capacity(width);
        for (col, field) in record.iter().skip(offset).enumerate() {
            let v = parse_number(field).ok_or_else(|| Error::Parse {
                row,
                message: format!(
                    "field {} is not a finite number: `{field}`",
                    col + offset + 1
                ),
            })?;
            data.push(v);
        }
        frames.push(Matrix::new(p, q, data)?);
    }
    if frames.is_empty() {
        return Err(Error::Parse {
            row: 0,
            message: "no data rows".into(),
        });
    }
    MatrixSeries::new(p, q, frames)
}

/// A first row is a header when some field after the first does not parse.
fn is_header(record: &csv::StringRecord) -> bool {
    record.iter().skip(1).any(|f| parse_number(f).is_none())
        || (record.len() == 1 && parse_number(&record[0]).is_none())
}

/// Reads a series file and subtracts the per-entry temporal mean.
pub fn read_series_csv(path: impl AsRef<Path>, p: usize, q: usize) -> Result<MatrixSeries> {
    let file = File::open(path.as_ref())?;
    Ok(parse_series(BufReader::new(file), p, q)?.demeaned())
}

/// Writes a series with a `y_i_j` header; values use the shortest round-trip form.
pub fn write_series<W: Write>(writer: W, series: &MatrixSeries) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let header: Vec<String> = (1..=series.p())
        .flat_map(|i| (1..=series.q()).map(move |j| format!("y_{i}_{j}")))
        .collect();
    wtr.write_record(&header)?;
    for frame in series.frames() {
        wtr.write_record(frame.as_slice().iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &MatrixSeries) -> Result<()> {
    write_series(File::create(path.as_ref())?, series)
}

/// Twelve significant digits.
fn fmt12(v: f64) -> String {
    format!("{v:.11e}")
}

/// One row of a curve file; ratio columns are `None` past the search bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub i: usize,
    pub t_hat: f64,
    pub g_hat: f64,
    pub mr: Option<f64>,
    pub sr: Option<f64>,
    pub er: Option<f64>,
}

pub const CURVE_HEADER: [&str; 6] = ["i", "T_hat", "G_hat", "MR", "SR", "ER"];

pub fn curve_rows(analysis: &SideAnalysis) -> Vec<CurveRow> {
    let at = |v: &Vec<f64>, k: usize| v.get(k).copied();
    (0..analysis.curves.len())
        .map(|k| CurveRow {
            i: k + 1,
            t_hat: analysis.curves.t_curve[k],
            g_hat: analysis.curves.g_curve[k],
            mr: at(&analysis.mr.ratio_curve, k),
            sr: at(&analysis.sr.ratio_curve, k),
            er: at(&analysis.er.ratio_curve, k),
        })
        .collect()
}

/// `curves_<side>_<mode>.csv`
pub fn curves_file_name(side: Side, mode: Mode) -> String {
    format!("curves_{side}_{mode}.csv")
}

pub fn write_curves<W: Write>(writer: W, rows: &[CurveRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CURVE_HEADER)?;
    let opt = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
    for r in rows {
        wtr.write_record([
            r.i.to_string(),
            fmt12(r.t_hat),
            fmt12(r.g_hat),
            opt(r.mr),
            opt(r.sr),
            opt(r.er),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_curves_csv(path: impl AsRef<Path>, rows: &[CurveRow]) -> Result<()> {
    write_curves(File::create(path.as_ref())?, rows)
}

/// Writes both sides of an estimate into `dir`; returns the paths written.
pub fn write_curve_files(dir: impl AsRef<Path>, estimate: &Estimate) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.as_ref())?;
    Side::BOTH
        .iter()
        .map(|&side| {
            let path = dir.as_ref().join(curves_file_name(side, estimate.mode));
            write_curves_csv(&path, &curve_rows(estimate.side(side)))?;
            Ok(path)
        })
        .collect()
}

pub fn read_curves_csv(path: impl AsRef<Path>) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_path(path.as_ref())?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(Error::Parse {
            row: 1,
            message: format!(
                "unexpected curve header {:?}",
                header.iter().collect::<Vec<_>>()
            ),
        });
    }
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2;
        let rec = rec?;
        let bad = |what: &str| Error::Parse {
            row,
            message: format!("bad {what} field"),
        };
        let num = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(CURVE_HEADER[k]))
        };
        let opt = |k: usize| -> Result<Option<f64>> {
            match rec[k].trim() {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(CURVE_HEADER[k])),
            }
        };
        rows.push(CurveRow {
            i: rec[0].trim().parse().map_err(|_| bad("i"))?,
            t_hat: num(1)?,
            g_hat: num(2)?,
            mr: opt(3)?,
            sr: opt(4)?,
            er: opt(5)?,
        });
    }
    Ok(rows)
}

pub const MC_HEADER: [&str; 24] = [
    "p",
    "q",
    "r",
    "c",
    "n",
    "a",
    "delta",
    "omega",
    "noise_case",
    "seed",
    "replications",
    "h0",
    "K",
    "m",
    "method",
    "mode",
    "side",
    "exact",
    "under",
    "over",
    "x",
    "y",
    "z",
    "cell",
];

/// Long-format Monte Carlo table: one row per cell, estimator and side.
pub fn write_mc<W: Write>(writer: W, reports: &[McReport]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(MC_HEADER)?;
    for rep in reports {
        let cfg = &rep.config;
        let d = &cfg.dgp;
        for e in &rep.entries {
            let t = &e.tally;
            wtr.write_record([
                d.p.to_string(),
                d.q.to_string(),
                d.r.to_string(),
                d.c.to_string(),
                d.n.to_string(),
                d.a.to_string(),
                d.delta.to_string(),
                d.omega.to_string(),
                d.noise_case.to_string(),
                d.seed.to_string(),
                cfg.replications.to_string(),
                cfg.params.h0.to_string(),
                cfg.params.k.to_string(),
                cfg.m.map(|m| m.to_string()).unwrap_or_default(),
                e.estimator.method.to_string(),
                e.estimator.mode.to_string(),
                e.side.to_string(),
                t.exact.to_string(),
                t.under.to_string(),
                t.over.to_string(),
                format!("{:.3}", t.hit_rate()),
                format!("{:.3}", t.under_rate()),
                format!("{:.3}", t.over_rate()),
                t.cell(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_mc_csv(path: impl AsRef<Path>, reports: &[McReport]) -> Result<()> {
    write_mc(File::create(path.as_ref())?, reports)
}

pub fn write_cv<W: Write>(writer: W, report: &CvReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["r", "c", "folds", "norm", "rss"])?;
    let norm = match report.norm {
        RssNorm::Frobenius => "frobenius",
        RssNorm::Squared => "squared",
    };
    for e in &report.entries {
        wtr.write_record([
            e.r.to_string(),
            e.c.to_string(),
            report.folds.to_string(),
            norm.to_string(),
            fmt12(e.rss),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_cv_csv(path: impl AsRef<Path>, report: &CvReport) -> Result<()> {
    write_cv(File::create(path.as_ref())?, report)
}

/// Reads a JSON config file as a raw value (flags are merged before typing).
pub fn read_json(path: impl AsRef<Path>) -> Result<Value> {
    let file = File::open(path.as_ref())?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// Expands a Monte Carlo config into one JSON object per cell: a single cell
/// object, an array of cells, or `{"cells": [...]}` whose other top-level
/// keys are shared defaults.
pub fn expand_cells(value: Value) -> Result<Vec<Value>> {
    match value {
        Value::Array(cells) => Ok(cells),
        Value::Object(mut map) => match map.remove("cells") {
            Some(Value::Array(cells)) => cells
                .into_iter()
                .map(|c| merge_objects(Value::Object(map.clone()), c))
                .collect(),
            Some(_) => Err(Error::config("cells", "must be an array of cell objects")),
            None => Ok(vec![Value::Object(map)]),
        },
        _ => Err(Error::config(
            "cells",
            "config must be an object or an array",
        )),
    }
}

/// Types and validates one cell object.
pub fn mc_cell_from_value(value: Value) -> Result<McCellConfig> {
    let cell: McCellConfig =
        serde_json::from_value(value).map_err(|e| Error::config("cells", e.to_string()))?;
    cell.validate()?;
    Ok(cell)
}

pub fn mc_cells_from_value(value: Value) -> Result<Vec<McCellConfig>> {
    expand_cells(value)?
        .into_iter()
        .map(mc_cell_from_value)
        .collect()
}

/// Shallow merge: keys of `overlay` replace keys of `base`.
pub fn merge_objects(base: Value, overlay: Value) -> Result<Value> {
    match (base, overlay) {
        (Value::Object(mut b), Value::Object(o)) => {
            b.extend(o);
            Ok(Value::Object(b))
        }
        _ => Err(Error::config("cells", "cells must be JSON objects")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_row_major() {
        let s = parse_series("1,2,3,4\n5,6,7,8\n9,10,11,12\n".as_bytes(), 2, 2).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.frame(0), &Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
    }

    #[test]
    fn header_and_date_columns_are_skipped() {
        let text = "date,a,b\n2021-01-06,1,2\n2021-01-07,3,4\n";
        let s = parse_series(text.as_bytes(), 1, 2).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.frame(1).as_slice(), &[3.0, 4.0]);
        let numeric_dates = "20210106,1,2\n20210107,3,4\n";
        let s = parse_series(numeric_dates.as_bytes(), 1, 2).unwrap();
        assert_eq!(s.frame(0).as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn parse_errors_carry_row_numbers() {
        let err = parse_series("1,2\n3\n".as_bytes(), 1, 2).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err}");
        let err = parse_series("y1,y2\n1,2\n3,x\n".as_bytes(), 1, 2).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        let err = parse_series("1,2,3\n".as_bytes(), 2, 2).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }), "{err}");
        assert!(parse_series("".as_bytes(), 1, 1).is_err());
    }

    #[test]
    fn fmt12_keeps_twelve_digits() {
        let v = std::f64::consts::PI * 1e5;
        let s = fmt12(v);
        assert_eq!(s, "3.14159265359e5");
        assert_eq!(fmt12(f64::INFINITY).parse::<f64>().unwrap(), f64::INFINITY);
    }

    #[test]
    fn mc_config_forms() {
        let one: Value = serde_json::json!({"p": 10, "q": 10, "r": 2, "c": 2, "n": 50, "a": 0.5});
        assert_eq!(mc_cells_from_value(one.clone()).unwrap().len(), 1);
        let arr = Value::Array(vec![one.clone(), one]);
        assert_eq!(mc_cells_from_value(arr).unwrap().len(), 2);
        let shared = serde_json::json!({
            "q": 10, "r": 2, "c": 2, "n": 50, "a": 0.5, "replications": 3,
            "cells": [{"p": 10}, {"p": 12, "replications": 4}]
        });
        let cells = mc_cells_from_value(shared).unwrap();
        assert_eq!((cells[0].replications, cells[1].replications), (3, 4));
        assert_eq!(cells[1].dgp.p, 12);
        let missing = serde_json::json!({"p": 10});
        assert!(matches!(
            mc_cells_from_value(missing),
            Err(Error::Config { .. })
        ));
    }
}
