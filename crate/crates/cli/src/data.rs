//! CSV input and output.

use std::path::Path;

use rdpersuasion::Observation;

use crate::{CliError, Result};

/// Column names to read. Matching is case-insensitive.
///
/// `d` and `cluster` left as `None` are read from columns named `d` and
/// `cluster` when such columns exist; naming them explicitly makes them
/// required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub y: String,
    pub w: String,
    pub d: Option<String>,
    pub cluster: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            y: "y".into(),
            w: "w".into(),
            d: None,
            cluster: None,
        }
    }
}

fn find(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn required(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    find(headers, name).ok_or_else(|| CliError::MissingColumn(name.to_string()))
}

fn optional(headers: &csv::StringRecord, explicit: Option<&str>, default: &str) -> Result<Option<usize>> {
    match explicit {
        Some(name) => required(headers, name).map(Some),
        None => Ok(find(headers, default)),
    }
}

fn number(row: usize, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| CliError::ParseError {
        row,
        column: column.to_string(),
        message: format!("`{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(CliError::ParseError {
            row,
            column: column.to_string(),
            message: format!("`{raw}` is not finite"),
        });
    }
    Ok(v)
}

fn binary(row: usize, column: &str, raw: &str) -> Result<f64> {
    let v = number(row, column, raw)?;
    if v == 0.0 || v == 1.0 {
        Ok(v)
    } else {
        Err(CliError::NonBinaryValue {
            row,
            column: column.to_string(),
            value: raw.trim().to_string(),
        })
    }
}

/// Reads observations from any CSV source. Row numbers in errors count data
/// rows from 1, excluding the header.
pub fn read_observations<R: std::io::Read>(reader: R, columns: &ColumnMap) -> Result<Vec<Observation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let yi = required(&headers, &columns.y)?;
    let wi = required(&headers, &columns.w)?;
    let di = optional(&headers, columns.d.as_deref(), "d")?;
    let ci = optional(&headers, columns.cluster.as_deref(), "cluster")?;
    let d_name = columns.d.clone().unwrap_or_else(|| "d".into());

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let field = |idx: usize| rec.get(idx).unwrap_or("");
        let y = binary(row, &columns.y, field(yi))?;
        let w = number(row, &columns.w, field(wi))?;
        let d = di.map(|k| binary(row, &d_name, field(k))).transpose()?;
        let mut obs = Observation::new(y, d, w);
        if let Some(k) = ci {
            obs = obs.with_cluster(field(k));
        }
        out.push(obs);
    }
    Ok(out)
}

pub fn read_csv(path: &Path, columns: &ColumnMap) -> Result<Vec<Observation>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_observations(file, columns)
}

/// Writes `y,d,w` (and `cluster` when any record has one).
pub fn write_csv(path: &Path, records: &[Observation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let clustered = records.iter().any(|r| r.cluster.is_some());
    let with_d = records.iter().any(|r| r.d.is_some());
    let mut header = vec!["y"];
    if with_d {
        header.push("d");
    }
    header.push("w");
    if clustered {
        header.push("cluster");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![format!("{}", r.y)];
        if with_d {
            row.push(r.d.map(|d| d.to_string()).unwrap_or_default());
        }
        row.push(format!("{}", r.w));
        if clustered {
            row.push(r.cluster.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<Vec<Observation>> {
        read_observations(text.as_bytes(), &ColumnMap::default())
    }

    #[test]
    fn full_triplet() {
        let obs = read("y,d,w\n1,1,0.5\n0,0,-0.3\n").unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[1], Observation::new(0.0, Some(0.0), -0.3));
    }

    #[test]
    fn outcome_only_and_case() {
        let obs = read("Y,W\n1,0.5\n0,-0.3\n").unwrap();
        assert!(obs.iter().all(|o| o.d.is_none()));
    }

    #[test]
    fn non_binary_row() {
        let err = read("y,d,w\n2,0,0.1\n").unwrap_err();
        assert!(matches!(err, CliError::NonBinaryValue { row: 1, ref column, .. } if column == "y"));
        let err = read("y,d,w\n1,0,0.1\n0,0.5,0.2\n").unwrap_err();
        assert!(matches!(err, CliError::NonBinaryValue { row: 2, .. }));
    }

    #[test]
    fn parse_errors_and_missing_columns() {
        assert!(matches!(read("y,w\n1,abc\n"), Err(CliError::ParseError { row: 1, .. })));
        assert!(matches!(read("y,d\n1,1\n"), Err(CliError::MissingColumn(c)) if c == "w"));
        let map = ColumnMap {
            y: "vote".into(),
            w: "margin".into(),
            d: Some("exposed".into()),
            cluster: Some("county".into()),
        };
        let obs = read_observations("Vote,Exposed,Margin,County\n1,1,0.2,a\n".as_bytes(), &map).unwrap();
        assert_eq!(obs[0].cluster.as_deref(), Some("a"));
        let err = read_observations("vote,margin\n1,0.2\n".as_bytes(), &map).unwrap_err();
        assert!(matches!(err, CliError::MissingColumn(c) if c == "exposed"));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let recs = vec![
            Observation::new(1.0, Some(1.0), 0.123456789012345),
            Observation::new(0.0, Some(0.0), -0.5),
        ];
        write_csv(&path, &recs).unwrap();
        assert_eq!(read_csv(&path, &ColumnMap::default()).unwrap(), recs);
    }
}
