//! CSV input and the plain-text fit report.
//!
//! Input files are comma-separated with a header row; every cell must parse as
//! a finite number. A fit report is a block of `# key=value` lines followed by
//! a `term,estimate` table whose first row is the intercept.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::dataset::{Dataset, Matrix};
use crate::error::{Result, SolverError};

pub const INTERCEPT_TERM: &str = "(intercept)";

fn parse_err(msg: impl Into<String>) -> SolverError {
    SolverError::Parse(msg.into())
}

fn csv_err(e: csv::Error) -> SolverError {
    match e.kind() {
        csv::ErrorKind::Io(_) => SolverError::Io(e.to_string()),
        _ => parse_err(e.to_string()),
    }
}

/// Resolves `response` against the header: an exact column name wins, otherwise
/// a zero-based column index is accepted.
fn response_column(headers: &[String], response: &str) -> Result<usize> {
    if let Some(j) = headers.iter().position(|h| h == response) {
        return Ok(j);
    }
    match response.parse::<usize>() {
        Ok(j) if j < headers.len() => Ok(j),
        _ => Err(SolverError::InvalidConfig(format!(
            "response column {:?} not found; columns are {}",
            response,
            headers.join(", ")
        ))),
    }
}

/// Reads a dataset; `response` names the response column (or gives its
/// zero-based index) and the remaining columns form the design.
pub fn read_dataset<R: Read>(reader: R, response: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if headers.len() < 2 {
        return Err(parse_err("need a response column and at least one predictor column"));
    }
    let target = response_column(&headers, response)?;
    let p = headers.len() - 1;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut y = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = row + 2;
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                parse_err(format!(
                    "line {}, column {:?}: {:?} is not a number",
                    line, headers[col], cell
                ))
            })?;
            if !value.is_finite() {
                return Err(SolverError::NonfiniteInput(format!(
                    "line {}, column {:?}: {}",
                    line, headers[col], cell
                )));
            }
            match col.cmp(&target) {
                std::cmp::Ordering::Equal => y.push(value),
                std::cmp::Ordering::Less => columns[col].push(value),
                std::cmp::Ordering::Greater => columns[col - 1].push(value),
            }
        }
    }
    if y.is_empty() {
        return Err(parse_err("no data rows"));
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::new(Matrix::from_columns(&columns)?, y)?.with_feature_names(names)
}

pub fn load_dataset(path: &Path, response: &str) -> Result<Dataset> {
    let file = File::open(path)
        .map_err(|e| SolverError::Io(format!("{}: {}", path.display(), e)))?;
    read_dataset(file, response)
}

/// Writes `d` with the response as the first column named `response`.
pub fn write_dataset<W: Write>(d: &Dataset, response: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![response.to_string()];
    header.extend((0..d.p()).map(|j| d.feature_name(j)));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..d.n() {
        let mut row = vec![d.y()[i].to_string()];
        row.extend((0..d.p()).map(|j| d.x().get(i, j).to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Coefficients with their names and free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub metadata: Vec<(String, String)>,
    pub intercept: f64,
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
}

impl FitReport {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {}={}", k, v)?;
        }
        writeln!(out, "term,estimate")?;
        writeln!(out, "{},{}", INTERCEPT_TERM, self.intercept)?;
        for (t, c) in self.terms.iter().zip(&self.coefficients) {
            writeln!(out, "{},{}", t, c)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| parse_err(format!("malformed metadata line {:?}", line)))?;
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            } else if !line.trim().is_empty() {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["term", "estimate"] {
            return Err(parse_err("fit report table must have columns term,estimate"));
        }
        let mut intercept = None;
        let mut terms = Vec::new();
        let mut coefficients = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_err)?;
            let value: f64 = record[1]
                .parse()
                .map_err(|_| parse_err(format!("estimate {:?} is not a number", &record[1])))?;
            if &record[0] == INTERCEPT_TERM {
                intercept = Some(value);
            } else {
                terms.push(record[0].to_string());
                coefficients.push(value);
            }
        }
        Ok(FitReport {
            metadata,
            intercept: intercept.ok_or_else(|| parse_err("fit report has no intercept row"))?,
            terms,
            coefficients,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .map_err(|e| SolverError::Io(format!("{}: {}", path.display(), e)))?;
        Self::read(file)
    }

    /// Coefficients reordered to match the predictors of `d`.
    pub fn coefficients_for(&self, d: &Dataset) -> Result<Vec<f64>> {
        (0..d.p())
            .map(|j| {
                let name = d.feature_name(j);
                self.terms
                    .iter()
                    .position(|t| *t == name)
                    .map(|k| self.coefficients[k])
                    .ok_or_else(|| {
                        SolverError::DimensionMismatch(format!("fit report has no term {:?}", name))
                    })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;

    const SAMPLE: &str = "a,y,b\n1,2,3\n4,5,6\n7,8,9.5\n";

    #[test]
    fn reads_by_name_and_index() {
        let d = read_dataset(SAMPLE.as_bytes(), "y").unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.y(), &[2.0, 5.0, 8.0]);
        assert_eq!(d.x().col(1), &[3.0, 6.0, 9.5]);
        assert_eq!(d.feature_name(0), "a");
        assert_eq!(d.feature_name(1), "b");
        let by_index = read_dataset(SAMPLE.as_bytes(), "1").unwrap();
        assert_eq!(by_index, d);
    }

    #[test]
    fn missing_response_names_the_column() {
        let err = read_dataset(SAMPLE.as_bytes(), "target").unwrap_err();
        assert_eq!(err.kind(), ErrorKind::InvalidConfig);
        assert!(err.message().contains("target"));
    }

    #[test]
    fn non_numeric_cells_are_parse_errors() {
        let err = read_dataset("a,y\n1,2\nx,3\n".as_bytes(), "y").unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Parse);
        assert!(err.message().contains("line 3"));
        let err = read_dataset("a,y\n1,\n".as_bytes(), "y").unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Parse);
        let err = read_dataset("a,y\n1,2,3\n".as_bytes(), "y").unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Parse);
        let err = read_dataset("a,y\nNaN,2\n".as_bytes(), "y").unwrap_err();
        assert_eq!(err.kind(), ErrorKind::NonfiniteInput);
        assert_eq!(read_dataset("a,y\n".as_bytes(), "y").unwrap_err().kind(), ErrorKind::Parse);
    }

    #[test]
    fn dataset_round_trip() {
        let d = read_dataset(SAMPLE.as_bytes(), "y").unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, "y", &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice(), "y").unwrap(), d);
    }

    #[test]
    fn fit_report_round_trip() {
        let report = FitReport {
            metadata: vec![("lambda".into(), "0.25".into()), ("tau".into(), "0.1".into())],
            intercept: -1.5,
            terms: vec!["a".into(), "b".into()],
            coefficients: vec![0.125, 0.0],
        };
        let mut buf = Vec::new();
        report.write(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# lambda=0.25\n# tau=0.1\nterm,estimate\n(intercept),-1.5\n"));
        let back = FitReport::read(buf.as_slice()).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.get("tau"), Some("0.1"));
        let d = read_dataset("b,y,a\n1,2,3\n".as_bytes(), "y").unwrap();
        assert_eq!(back.coefficients_for(&d).unwrap(), vec![0.0, 0.125]);
    }

    #[test]
    fn malformed_reports() {
        assert!(FitReport::read("term,estimate\na,1\n".as_bytes()).is_err());
        assert!(FitReport::read("# nokey\nterm,estimate\n(intercept),1\n".as_bytes()).is_err());
        assert!(FitReport::read("x,y\n(intercept),1\n".as_bytes()).is_err());
    }
}
