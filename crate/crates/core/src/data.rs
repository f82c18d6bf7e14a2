//! CSV ingestion, preparation and the real-data claim experiment.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::intervals::{constrained_interval, unsupervised_claim_interval, Branch, IntervalError, RegressionSample};
use crate::order_stats::{empirical_quantile, OrderStatError, Sample};
use crate::transform::TransformExpr;

/// Response column of the automobile bodily injury claims file.
pub const AUTOBI_RESPONSE: &str = "LOSS";
/// Predictors used for the claims experiment (CASENUM and ATTORNEY are dropped).
pub const AUTOBI_PREDICTORS: [&str; 5] = ["CLMSEX", "MARITAL", "CLMINSUR", "SEATBELT", "CLMAGE"];
pub const AUTOBI_TRANSFORM: &str = "log(1+t1+t2+t3+t4+t5)";
pub const AUTOBI_ALPHAS: [f64; 4] = [0.10, 0.075, 0.05, 0.025];

pub const DEFAULT_MISSING_MARKERS: [&str; 3] = ["", ".", "NA"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("row {row} has {got} field(s), header has {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("duplicate column name '{0}'")]
    DuplicateHeader(String),
    #[error("row {row}, column '{column}': '{token}' is neither numeric nor a missing marker")]
    NonNumeric { row: usize, column: String, token: String },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("response '{column}' is negative ({value}) at row {row}")]
    NegativeResponse { column: String, row: usize, value: f64 },
    #[error("need at least {need} row(s), have {have}")]
    TooFewRows { need: usize, have: usize },
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    OrderStat(#[from] OrderStatError),
}

/// Named columns of optional numbers. Rows are numbered from 1 (the first
/// data line after the header) in error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    headers: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
    rows: usize,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub missing_markers: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            missing_markers: DEFAULT_MISSING_MARKERS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RawTable {
    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn missing_count(&self, name: &str) -> Option<usize> {
        self.column(name).map(|c| c.iter().filter(|v| v.is_none()).count())
    }

    pub fn from_reader<R: Read>(reader: R, opts: &LoadOptions) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| DataError::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(DataError::DuplicateHeader(h.clone()));
            }
        }
        let mut columns = vec![Vec::new(); headers.len()];
        let mut rows = 0;
        for record in rdr.records() {
            let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
            rows += 1;
            if record.len() != headers.len() {
                return Err(DataError::RowLength {
                    row: rows,
                    expected: headers.len(),
                    got: record.len(),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let token = field.trim();
                let value = if opts.missing_markers.iter().any(|m| m == token) {
                    None
                } else {
                    match token.parse::<f64>() {
                        Ok(v) if v.is_finite() => Some(v),
                        _ => {
                            return Err(DataError::NonNumeric {
                                row: rows,
                                column: headers[j].clone(),
                                token: token.to_string(),
                            })
                        }
                    }
                };
                columns[j].push(value);
            }
        }
        Ok(Self { headers, columns, rows })
    }

    /// Writes the table back out; missing cells become empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
        w.write_record(&self.headers).map_err(csv_err)?;
        for i in 0..self.rows {
            let row = self
                .columns
                .iter()
                .map(|c| c[i].map(|v| v.to_string()).unwrap_or_default());
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| DataError::Csv(e.to_string()))
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<RawTable, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RawTable::from_reader(std::io::BufReader::new(file), opts)
}

/// A complete (imputed) regression sample with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub sample: RegressionSample,
    pub response_name: String,
    pub predictor_names: Vec<String>,
    /// Predictor name -> index into each feature row.
    pub columns: HashMap<String, usize>,
    /// Cells replaced by the impute value, over the selected columns.
    pub imputed_count: usize,
}

pub fn prepare(
    table: &RawTable,
    response: &str,
    predictors: &[&str],
    impute_value: f64,
) -> Result<PreparedDataset, DataError> {
    let fetch = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    };
    let y_raw = fetch(response)?;
    let x_raw = predictors.iter().map(|p| fetch(p)).collect::<Result<Vec<_>, _>>()?;
    if table.rows == 0 {
        return Err(DataError::TooFewRows { need: 1, have: 0 });
    }
    let mut imputed = 0;
    let mut fill = |v: Option<f64>| {
        v.unwrap_or_else(|| {
            imputed += 1;
            impute_value
        })
    };
    let responses: Vec<f64> = y_raw.iter().map(|&v| fill(v)).collect();
    let features: Vec<Vec<f64>> = (0..table.rows)
        .map(|i| x_raw.iter().map(|c| fill(c[i])).collect())
        .collect();
    if let Some(row) = responses.iter().position(|&y| y < 0.0) {
        return Err(DataError::NegativeResponse {
            column: response.to_string(),
            row: row + 1,
            value: responses[row],
        });
    }
    let columns = predictors.iter().enumerate().map(|(i, p)| (p.to_string(), i)).collect();
    Ok(PreparedDataset {
        sample: RegressionSample::new(features, responses)?,
        response_name: response.to_string(),
        predictor_names: predictors.iter().map(|p| p.to_string()).collect(),
        columns,
        imputed_count: imputed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSummary {
    pub name: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl VariableSummary {
    /// Quartiles use the inverse-CDF empirical quantile.
    pub fn of(name: &str, values: &[f64]) -> Result<Self, DataError> {
        let s = Sample::from_slice(values)?;
        Ok(Self {
            name: name.to_string(),
            min: s.min(),
            q1: empirical_quantile(&s, 0.25)?,
            median: empirical_quantile(&s, 0.5)?,
            q3: empirical_quantile(&s, 0.75)?,
            max: s.max(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

/// Summary of the response followed by each predictor.
pub fn summarize(dataset: &PreparedDataset) -> Result<Vec<VariableSummary>, DataError> {
    let mut out = vec![VariableSummary::of(&dataset.response_name, dataset.sample.responses())?];
    for (j, name) in dataset.predictor_names.iter().enumerate() {
        let col: Vec<f64> = dataset.sample.features().iter().map(|x| x[j]).collect();
        out.push(VariableSummary::of(name, &col)?);
    }
    Ok(out)
}

pub fn summary_table(rows: &[VariableSummary]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(8).max(8);
    let mut out = format!(
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>10}  {:>10}  {:>10}\n",
        "variable", "min", "q1", "median", "q3", "max", "mean"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>10.3}  {:>10.3}  {:>10.3}  {:>10.3}  {:>10.3}  {:>10.3}\n",
            r.name, r.min, r.q1, r.median, r.q3, r.max, r.mean
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataRow {
    pub alpha: f64,
    /// Empirical `1 - alpha` quantile of all responses.
    pub oracle_upper: f64,
    /// `Y_(r)` of the first `n - 1` responses.
    pub baseline_upper: f64,
    /// Transformation interval from the first `n - 1` pairs at the last row.
    pub transform_upper: f64,
    pub branch: Branch,
}

/// Holds out the last row and predicts its response from the rest.
pub fn realdata_experiment(
    dataset: &PreparedDataset,
    h: &TransformExpr,
    alphas: &[f64],
) -> Result<Vec<RealDataRow>, DataError> {
    let n = dataset.sample.len();
    if n < 2 {
        return Err(DataError::TooFewRows { need: 2, have: n });
    }
    let ys = dataset.sample.responses();
    let xs = dataset.sample.features();
    let all = Sample::from_slice(ys)?;
    let train = RegressionSample::new(xs[..n - 1].to_vec(), ys[..n - 1].to_vec())?;
    let x_new = &xs[n - 1];
    alphas
        .iter()
        .map(|&alpha| {
            let ci = constrained_interval(&train, h, x_new, alpha)?;
            Ok(RealDataRow {
                alpha,
                oracle_upper: empirical_quantile(&all, 1.0 - alpha)?,
                baseline_upper: unsupervised_claim_interval(train.responses(), alpha)?.upper,
                transform_upper: ci.upper(),
                branch: ci.branch,
            })
        })
        .collect()
}

pub fn realdata_table(rows: &[RealDataRow]) -> String {
    let mut out = format!(
        "{:>8}  {:>12}  {:>14}  {:>16}\n",
        "1-alpha", "oracle upper", "[0, Y_(r)) upper", "transform upper"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>7.1}%  {:>12.2}  {:>16.2}  {:>16.2}\n",
            100.0 * (1.0 - r.alpha),
            r.oracle_upper,
            r.baseline_upper,
            r.transform_upper
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "A,B,LOSS\n1,2,0.5\n,3,1.5\n.,NA,2.5\n4,5,\n";

    fn table(text: &str) -> RawTable {
        RawTable::from_reader(text.as_bytes(), &LoadOptions::default()).unwrap()
    }

    #[test]
    fn loads_with_missing_markers() {
        let t = table(SMALL);
        assert_eq!(t.num_rows(), 4);
        assert_eq!(t.headers(), ["A", "B", "LOSS"]);
        assert_eq!(t.column("A").unwrap(), [Some(1.0), None, None, Some(4.0)]);
        assert_eq!(t.missing_count("B"), Some(1));
    }

    #[test]
    fn short_row_is_structural_error() {
        let err = RawTable::from_reader("A,B\n1,2\n3\n".as_bytes(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(
            err,
            DataError::RowLength {
                row: 2,
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn header_only() {
        let t = table("A,B\n");
        assert_eq!(t.num_rows(), 0);
        assert!(matches!(
            prepare(&t, "A", &["B"], 0.0),
            Err(DataError::TooFewRows { .. })
        ));
    }

    #[test]
    fn duplicate_header_and_bad_token() {
        assert!(matches!(
            RawTable::from_reader("A,A\n1,2\n".as_bytes(), &LoadOptions::default()),
            Err(DataError::DuplicateHeader(_))
        ));
        assert!(matches!(
            RawTable::from_reader("A\nfoo\n".as_bytes(), &LoadOptions::default()),
            Err(DataError::NonNumeric { row: 1, .. })
        ));
        let opts = LoadOptions {
            missing_markers: vec!["foo".into()],
        };
        assert_eq!(
            RawTable::from_reader("A\nfoo\n".as_bytes(), &opts)
                .unwrap()
                .column("A")
                .unwrap(),
            [None]
        );
    }

    #[test]
    fn quoted_fields() {
        let t = table("\"A\",\"B, quoted\"\n\"1.5\",2\n");
        assert_eq!(t.column("B, quoted").unwrap(), [Some(2.0)]);
        assert_eq!(t.column("A").unwrap(), [Some(1.5)]);
    }

    #[test]
    fn write_then_reload_is_identical() {
        let t = table(SMALL);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = RawTable::from_reader(buf.as_slice(), &LoadOptions::default()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn prepare_imputes_and_counts() {
        let t = table(SMALL);
        let d = prepare(&t, "LOSS", &["A", "B"], 0.0).unwrap();
        let raw_missing: usize = ["LOSS", "A", "B"].iter().map(|c| t.missing_count(c).unwrap()).sum();
        assert_eq!(d.imputed_count, raw_missing);
        assert_eq!(d.imputed_count, 4);
        assert_eq!(d.sample.responses(), [0.5, 1.5, 2.5, 0.0]);
        assert_eq!(d.sample.features()[2], vec![0.0, 0.0]);
        assert_eq!(d.columns["B"], 1);
    }

    #[test]
    fn prepare_errors() {
        let t = table(SMALL);
        assert!(matches!(
            prepare(&t, "LOSS", &["Z"], 0.0),
            Err(DataError::UnknownColumn(_))
        ));
        let t = table("X,LOSS\n1,2\n1,-3\n");
        assert!(matches!(
            prepare(&t, "LOSS", &["X"], 0.0),
            Err(DataError::NegativeResponse { row: 2, .. })
        ));
    }

    #[test]
    fn prepare_without_predictors() {
        let t = table(SMALL);
        let d = prepare(&t, "LOSS", &[], 0.0).unwrap();
        assert_eq!(d.sample.num_predictors(), 0);
        assert_eq!(
            unsupervised_claim_interval(d.sample.responses(), 0.2).unwrap().upper,
            2.5
        );
    }

    #[test]
    fn constant_column_summary() {
        let s = VariableSummary::of("c", &[4.0; 9]).unwrap();
        for v in [s.min, s.q1, s.median, s.q3, s.max, s.mean] {
            assert_eq!(v, 4.0);
        }
    }

    #[test]
    fn realdata_zero_transform_matches_baseline() {
        let text: String = std::iter::once("X,LOSS\n".to_string())
            .chain((1..=40).map(|i| format!("{},{}\n", i % 3, (i * 7 % 17) as f64 + 0.5)))
            .collect();
        let d = prepare(&table(&text), "LOSS", &["X"], 0.0).unwrap();
        let rows = realdata_experiment(&d, &TransformExpr::zero(1), &[0.1, 0.2]).unwrap();
        for r in &rows {
            assert_eq!(r.transform_upper, r.baseline_upper);
            assert!(d.sample.responses().contains(&r.baseline_upper));
        }
        let one = realdata_experiment(&d, &TransformExpr::zero(1), &[0.5]).unwrap();
        assert_eq!(one.len(), 1);
    }
}
