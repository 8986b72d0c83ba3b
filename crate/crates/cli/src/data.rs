//! CSV ingestion and output.
//!
//! Input files carry a mandatory header row, an optional leading `date`
//! column in ISO-8601 form and one or more numeric columns. Every cell must
//! be present and finite; there is no imputation.

use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use gas_core::model::{GasSpec, Series, SimOutput};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub dates: Option<Vec<String>>,
    pub columns: Vec<Vec<f64>>,
}

fn is_iso_date(s: &str) -> bool {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
        || NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").is_ok()
        || NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").is_ok()
        || DateTime::parse_from_rfc3339(s).is_ok()
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::file(path, e))?;
    let headers: Vec<String> =
        reader.headers().map_err(|e| CliError::file(path, e))?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().any(|h| h.is_empty()) {
        return Err(CliError::file(path, "header row has empty column names"));
    }
    if headers.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(CliError::file(path, "first row looks numeric; a header row is required"));
    }
    let has_date = headers[0].eq_ignore_ascii_case("date");
    let numeric_headers: Vec<String> = headers[has_date as usize..].to_vec();
    if numeric_headers.is_empty() {
        return Err(CliError::file(path, "no numeric columns"));
    }
    let mut dates = Vec::new();
    let mut columns = vec![Vec::new(); numeric_headers.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::file(path, e))?;
        let mut cells = record.iter();
        if has_date {
            let d = cells.next().unwrap_or_default();
            if !is_iso_date(d) {
                return Err(CliError::file(path, format!("line {line}: `{d}` is not an ISO-8601 date")));
            }
            dates.push(d.to_string());
        }
        for (j, cell) in cells.enumerate() {
            if cell.is_empty() {
                return Err(CliError::file(path, format!("line {line}: missing value in `{}`", numeric_headers[j])));
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| CliError::file(path, format!("line {line}: `{cell}` is not a finite number")))?;
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(CliError::file(path, "no data rows"));
    }
    Ok(Table { headers: numeric_headers, dates: has_date.then_some(dates), columns })
}

impl Table {
    fn index_of(&self, name: &str) -> CliResult<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::input(format!("no column named `{name}` (have {})", self.headers.join(", "))))
    }

    /// Picks the named columns; by default the first column for univariate
    /// models and every column for multivariate ones.
    pub fn select(&self, names: Option<&[String]>, multivariate: bool) -> CliResult<Series> {
        let idx: Vec<usize> = match names {
            Some(names) => names.iter().map(|n| self.index_of(n)).collect::<CliResult<_>>()?,
            None if multivariate => (0..self.columns.len()).collect(),
            None => vec![0],
        };
        if !multivariate && idx.len() != 1 {
            return Err(CliError::input("univariate models take exactly one column"));
        }
        let n = self.columns[0].len();
        let mut values = Vec::with_capacity(n * idx.len());
        for t in 0..n {
            values.extend(idx.iter().map(|&j| self.columns[j][t]));
        }
        Ok(Series::new(idx.len(), values)?)
    }
}

pub fn series_headers(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["y".into()]
    } else {
        (1..=dim).map(|i| format!("y{i}")).collect()
    }
}

/// Writes observations followed by the parameter paths, one row per time.
pub fn write_simulation(path: &Path, spec: &GasSpec, sim: &SimOutput) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::file(path, e))?;
    let mut header = series_headers(spec.dist.dim);
    header.extend(spec.dist.param_names());
    w.write_record(&header).map_err(|e| CliError::file(path, e))?;
    for (row, params) in sim.series.rows().zip(&sim.param_paths) {
        let cells: Vec<String> = row.iter().chain(params).map(|v| v.to_string()).collect();
        w.write_record(&cells).map_err(|e| CliError::file(path, e))?;
    }
    w.flush().map_err(|e| CliError::file(path, e))?;
    Ok(())
}

/// One column of a score file (the first unless named).
pub fn read_scores(path: &Path, column: Option<&str>) -> CliResult<Vec<f64>> {
    let table = read_table(path)?;
    let j = match column {
        Some(name) => table.index_of(name).map_err(|e| CliError::file(path, e))?,
        None => 0,
    };
    Ok(table.columns[j].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_dates_and_columns() {
        let f = file("date,a,b\n2020-01-01,1.5,2\n2020-01-02,-0.5,3e-2\n");
        let t = read_table(f.path()).unwrap();
        assert_eq!(t.headers, vec!["a", "b"]);
        assert_eq!(t.dates.as_ref().unwrap().len(), 2);
        assert_eq!(t.columns, vec![vec![1.5, -0.5], vec![2.0, 0.03]]);
        let s = t.select(Some(&["b".to_string()]), false).unwrap();
        assert_eq!(s.values(), &[2.0, 0.03]);
        let m = t.select(None, true).unwrap();
        assert_eq!(m.row(1), &[-0.5, 0.03]);
    }

    #[test]
    fn rejects_bad_files() {
        for bad in [
            "1.0\n2.0\n",
            "y\n",
            "y\n1.0\nNaN\n",
            "y,z\n1.0,2.0\n3.0\n",
            "y,z\n1.0,\n",
            "date,y\n2020-13-01,1\n",
            "y\nabc\n",
        ] {
            let f = file(bad);
            let r = read_table(f.path()).and_then(|t| t.select(None, false));
            assert!(r.is_err(), "{bad:?}");
        }
        let f = file("y\n1\n2\n");
        assert!(read_table(f.path()).is_ok());
    }
}
