//! Tables of dimensionless observations `(Π, Π_1, …, Π_l)` with cached
//! logarithms, and their CSV form.
//!
//! The CSV layout is a header row naming the columns followed by one row per
//! observation; the first column is `Π`. Lines starting with `#` are
//! ignored.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Entries at or below this value are rejected at ingestion.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessDataset {
    columns: Vec<String>,
    values: Vec<f64>,
    logs: Vec<f64>,
    retained: usize,
    rejected: usize,
}

impl DimensionlessDataset {
    /// Builds a dataset, dropping rows with any entry `<= 1e-12` (or not
    /// finite). `retained` is the number of arguments `Π_1..Π_n` kept inside
    /// the similarity function; the rest are scaling variables.
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>, retained: usize) -> Result<Self> {
        let width = columns.len();
        if width < 2 {
            return Err(Error::Config(
                "a dataset needs the target column and at least one argument".into(),
            ));
        }
        if retained >= width - 1 {
            return Err(Error::Config(format!(
                "retained argument count must be below {}, got {retained}",
                width - 1
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * width);
        let mut rejected = 0;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Parse {
                    line: i + 2,
                    message: format!("expected {width} values, got {}", row.len()),
                });
            }
            if row.iter().all(|v| v.is_finite() && *v > POSITIVITY_FLOOR) {
                values.extend_from_slice(row);
            } else {
                rejected += 1;
            }
        }
        if values.is_empty() {
            return Err(Error::EmptyDataset { rejected });
        }
        let logs = values.iter().map(|v| v.ln()).collect();
        let ds = Self {
            columns,
            values,
            logs,
            retained,
            rejected,
        };
        ds.check_identifiable()?;
        Ok(ds)
    }

    fn check_identifiable(&self) -> Result<()> {
        for c in 1 + self.retained..self.width() {
            let first = self.values[c];
            if (0..self.len()).all(|r| self.value(r, c) == first) {
                return Err(Error::Unidentifiable {
                    column: self.columns[c].clone(),
                });
            }
        }
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.values.len() / self.width()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of retained arguments `n`.
    pub fn retained(&self) -> usize {
        self.retained
    }

    /// Number of scaling arguments `l - n`.
    pub fn scaling(&self) -> usize {
        self.width() - 1 - self.retained
    }

    /// Rows dropped by the positivity filter.
    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.width();
        &self.values[row * w..(row + 1) * w]
    }

    /// `ln` of a row.
    pub fn log_row(&self, row: usize) -> &[f64] {
        let w = self.width();
        &self.logs[row * w..(row + 1) * w]
    }

    /// Same data with a different partition.
    pub fn with_retained(&self, retained: usize) -> Result<Self> {
        if retained >= self.width() - 1 {
            return Err(Error::Config(format!(
                "retained argument count must be below {}, got {retained}",
                self.width() - 1
            )));
        }
        let ds = Self {
            retained,
            ..self.clone()
        };
        ds.check_identifiable()?;
        Ok(ds)
    }

    pub fn read_csv<R: Read>(reader: R, retained: usize) -> Result<Self> {
        let (columns, rows) = read_table(reader)?;
        Self::new(columns, rows, retained)
    }

    pub fn load_csv(path: &Path, retained: usize) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, retained)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_table(writer, &self.columns, (0..self.len()).map(|r| self.row(r)))
    }
}

/// Reads a header plus numeric rows.
pub(crate) fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let parse_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    };
    let columns: Vec<String> = rdr
        .headers()
        .map_err(parse_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(parse_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != columns.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", columns.len(), record.len()),
            });
        }
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{field}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Writes a header plus numeric rows using the shortest exact float form.
pub(crate) fn write_table<'a, W, I>(writer: W, columns: &[String], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    };
    w.write_record(columns).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
