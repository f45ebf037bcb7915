//! CSV ingestion and export.
//!
//! Dataset files carry a header with `left`, `right`, `cause` and covariate
//! columns. `right` may be the token `inf` for right-censored rows. Floats are
//! written in the shortest form that parses back to the same value.

use crate::data::{validate_dataset, CompetingRisksDataset, IntervalObservation};
use crate::error::{Error, Result};
use crate::simulation::MonteCarloReport;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReadOptions {
    /// Number of causes; defaults to the largest cause present (at least 1).
    pub num_causes: Option<usize>,
    /// Covariate columns in model order; defaults to every non-reserved column.
    pub covariates: Option<Vec<String>>,
}

const RESERVED: [&str; 3] = ["left", "right", "cause"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(field: &str, column: &str, line: usize) -> Result<f64> {
    let t = field.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| parse_err(line, format!("column '{column}': cannot parse '{t}' as a number")))
}

pub fn read_dataset<R: Read>(reader: R, opts: &ReadOptions) -> Result<CompetingRisksDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::InvalidData("no observations".into()));
    }
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
    };
    let (left_col, right_col, cause_col) = (column("left")?, column("right")?, column("cause")?);
    let names: Vec<String> = match &opts.covariates {
        Some(names) => names.clone(),
        None => headers
            .iter()
            .filter(|h| !RESERVED.contains(h))
            .map(str::to_string)
            .collect(),
    };
    let covariate_cols = names.iter().map(|n| column(n)).collect::<Result<Vec<_>>>()?;

    let mut observations = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        let left = parse_number(&record[left_col], "left", line)?;
        let right = parse_number(&record[right_col], "right", line)?;
        let cause: usize = record[cause_col]
            .parse()
            .map_err(|_| parse_err(line, format!("column 'cause': '{}' is not a non-negative integer", &record[cause_col])))?;
        let covariates = covariate_cols
            .iter()
            .zip(&names)
            .map(|(&c, name)| parse_number(&record[c], name, line))
            .collect::<Result<Vec<f64>>>()?;
        observations.push(IntervalObservation {
            left,
            right,
            cause,
            covariates,
        });
        lines.push(line);
    }
    let max_cause = observations.iter().map(|o| o.cause).max().unwrap_or(0).max(1);
    let num_causes = opts.num_causes.unwrap_or(max_cause);
    let ds = CompetingRisksDataset::new(observations, num_causes, names.len()).with_covariate_names(names);
    if let Some(v) = validate_dataset(&ds).into_iter().next() {
        return Err(match v.index {
            Some(i) => parse_err(lines[i], v.rule_message()),
            None => Error::InvalidData(v.rule_message().to_string()),
        });
    }
    Ok(ds)
}

pub fn read_dataset_path(path: &Path, opts: &ReadOptions) -> Result<CompetingRisksDataset> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_dataset(file, opts)
}

fn covariate_header(ds: &CompetingRisksDataset) -> Vec<String> {
    match &ds.covariate_names {
        Some(names) if names.len() == ds.num_covariates => names.clone(),
        _ => (1..=ds.num_covariates).map(|i| format!("x{i}")).collect(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_dataset<W: Write>(writer: W, ds: &CompetingRisksDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    header.extend(covariate_header(ds));
    w.write_record(&header).map_err(csv_error)?;
    for obs in &ds.observations {
        let mut row = vec![obs.left.to_string(), obs.right.to_string(), obs.cause.to_string()];
        row.extend(obs.covariates.iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_path(path: &Path, ds: &CompetingRisksDataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), ds)
}

/// One row per parameter followed by one row per stratum cure rate.
pub fn write_monte_carlo_csv<W: Write>(writer: W, report: &MonteCarloReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["quantity", "truth", "bias", "abs_bias", "mse", "cp90", "cp95"])
        .map_err(csv_error)?;
    for p in &report.parameters {
        w.write_record([
            p.name.clone(),
            p.truth.to_string(),
            p.bias.to_string(),
            p.abs_bias.to_string(),
            p.mse.to_string(),
            p.cp90.to_string(),
            p.cp95.to_string(),
        ])
        .map_err(csv_error)?;
    }
    for c in &report.cure_rates {
        w.write_record([
            format!("{}(x1={},x2={})", c.name, c.x1, c.x2),
            c.truth.to_string(),
            c.bias.to_string(),
            c.abs_bias.to_string(),
            c.mse.to_string(),
            String::new(),
            String::new(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// A point of a survival curve export.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub stratum: String,
    pub t: f64,
    pub turnbull: f64,
    pub model: Option<f64>,
}

pub fn write_curves_csv<W: Write>(writer: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["stratum", "t", "turnbull_S", "model_S"]).map_err(csv_error)?;
    for p in points {
        w.write_record([
            p.stratum.clone(),
            p.t.to_string(),
            p.turnbull.to_string(),
            p.model.map(|m| m.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<CompetingRisksDataset> {
        read_dataset(text.as_bytes(), &ReadOptions::default())
    }

    #[test]
    fn parses_inf_and_covariates() {
        let ds = read("left,right,cause,gender\n0.5,1.25,1,0\n2,inf,0,1\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.num_causes, 1);
        assert_eq!(ds.observations[1].right, f64::INFINITY);
        assert_eq!(ds.covariate_names.as_deref(), Some(&["gender".to_string()][..]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read("left,right,cause,x\n0,1,1,0\n0,abc,1,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read("left,right,cause,x\n0,1,1,0\n0,2,0,0\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: censored must have right=+inf");
        let err = read("left,cause\n0,1\n").unwrap_err();
        assert!(err.to_string().contains("missing column 'right'"));
    }

    #[test]
    fn empty_inputs() {
        assert!(read("").unwrap_err().to_string().contains("no observations"));
        assert!(read("left,right,cause\n").unwrap_err().to_string().contains("no observations"));
    }

    #[test]
    fn selected_covariates_and_causes() {
        let opts = ReadOptions {
            num_causes: Some(3),
            covariates: Some(vec!["b".into()]),
        };
        let ds = read_dataset("a,left,right,cause,b\n9,0,1,2,7\n".as_bytes(), &opts).unwrap();
        assert_eq!(ds.num_causes, 3);
        assert_eq!(ds.observations[0].covariates, vec![7.0]);
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = CompetingRisksDataset::new(
            vec![
                IntervalObservation::event(0.1 + 0.2, 1.0 / 3.0, 2, vec![1e-300, -2.5]),
                IntervalObservation::censored(std::f64::consts::PI, vec![0.0, 123456789.123]),
            ],
            2,
            2,
        )
        .with_covariate_names(vec!["u".into(), "v".into()]);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_dataset(buf.as_slice(), &ReadOptions { num_causes: Some(2), covariates: None }).unwrap();
        assert_eq!(back, ds);
    }
}
