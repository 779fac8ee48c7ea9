use std::collections::HashMap;
use std::path::Path;

use super::{Dataset, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reads a comma-separated file into a dataset.
///
/// A first row whose feature fields are all non-numeric is treated as a header. Labels that are all integers are used as-is; otherwise they are
/// encoded in first-appearance order. Rows and columns in errors are 1-based.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: usize) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| {
            Error::Io(std::io::Error::other(
                e.to_string(),
            ))
        })?;

    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            column: 0,
            message: e.to_string(),
        })?;
        records.push(rec.iter().map(str::to_owned).collect::<Vec<_>>());
    }

    // a header has no numeric feature field at all; a partly numeric first row is data
    let is_header = |r: &[String]| {
        r.iter()
            .enumerate()
            .filter(|(j, _)| *j != label_column)
            .all(|(_, f)| f.parse::<f64>().is_err())
    };
    let skip = usize::from(records.first().is_some_and(|r| is_header(r)));
    let body = &records[skip..];
    if body.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "{} has no data rows",
            path.as_ref().display()
        )));
    }

    let width = body[0].len();
    if label_column >= width {
        return Err(Error::InvalidArgument(format!(
            "label column {label_column} out of range for {width} columns"
        )));
    }
    let mut values = Vec::with_capacity(body.len() * (width - 1));
    let mut raw_labels = Vec::with_capacity(body.len());
    for (i, row) in body.iter().enumerate() {
        let row_no = i + 1 + skip;
        if row.len() != width {
            return Err(Error::Parse {
                row: row_no,
                column: row.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        for (j, field) in row.iter().enumerate() {
            if j == label_column {
                raw_labels.push(field.clone());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: j + 1,
                message: format!("non-numeric feature {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    column: j + 1,
                    message: format!("non-finite feature {field:?}"),
                });
            }
            values.push(T::lit(v));
        }
    }

    let numeric: Option<Vec<usize>> = raw_labels.iter().map(|l| l.parse().ok()).collect();
    let (y, n_classes) = match numeric {
        Some(y) => {
            let k = y.iter().max().map_or(0, |m| m + 1);
            (y, k)
        }
        None => {
            let mut codes: HashMap<&str, usize> = HashMap::new();
            let y = raw_labels
                .iter()
                .map(|l| {
                    let next = codes.len();
                    *codes.entry(l.as_str()).or_insert(next)
                })
                .collect();
            (y, codes.len())
        }
    };
    Dataset::new(Tensor::matrix(body.len(), width - 1, values)?, y, n_classes)
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
    fn reads_numeric_labels() {
        let f = file("1,2,0\n3,4,1\n5,6,0\n");
        let ds: Dataset<f64> = load_csv(f.path(), 2).unwrap();
        assert_eq!(ds.x().shape(), &[3, 2]);
        assert_eq!(ds.y(), &[0, 1, 0]);
        assert_eq!(ds.x().row(1), vec![3.0, 4.0]);
    }

    #[test]
    fn encodes_string_labels_and_skips_header() {
        let f = file("a,b,animal\n1,2,cat\n3,4,dog\n5,6,cat\n");
        let ds: Dataset<f64> = load_csv(f.path(), 2).unwrap();
        assert_eq!(ds.y(), &[0, 1, 0]);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.n_samples(), 3);
    }

    #[test]
    fn label_column_can_be_first() {
        let f = file("dog,0.5\ncat,0.25\n");
        let ds: Dataset<f64> = load_csv(f.path(), 0).unwrap();
        assert_eq!(ds.y(), &[0, 1]);
        assert_eq!(ds.x().to_dense_vec(), vec![0.5, 0.25]);
    }

    #[test]
    fn reports_bad_field_position() {
        let f = file("1,x,0\n");
        match load_csv::<f64>(f.path(), 2) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let f = file("1,2,0\n3,1\n");
        assert!(matches!(
            load_csv::<f64>(f.path(), 2),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv::<f64>("/nonexistent/file.csv", 0),
            Err(Error::Io(_))
        ));
    }
}
