//! Delimited text input, with or without a header row.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawFormat {
    pub delimiter: char,
    pub has_header: bool,
}

fn reader(path: &Path, format: RawFormat) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .has_headers(format.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

pub fn read_header(path: &Path, delimiter: char) -> Result<Vec<String>> {
    let mut rdr = reader(
        path,
        RawFormat {
            delimiter,
            has_header: true,
        },
    )?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?;
    Ok(header.iter().map(|s| s.trim().to_string()).collect())
}

/// Streams every data row (header excluded) to `visit` with its row index.
pub fn for_each_row(
    path: &Path,
    format: RawFormat,
    mut visit: impl FnMut(usize, &[&str]) -> Result<()>,
) -> Result<usize> {
    let mut rdr = reader(path, format)?;
    let mut record = csv::StringRecord::new();
    let mut index = 0;
    while rdr.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let cells: Vec<&str> = record.iter().collect();
        visit(index, &cells).map_err(|e| match e {
            Error::Data(msg) => Error::Data(format!("{} row {}: {msg}", path.display(), index + 1)),
            other => other,
        })?;
        index += 1;
    }
    Ok(index)
}

/// Data rows as owned cells. The first read error ends the iteration and is
/// kept for [`Rows::finish`].
pub struct Rows {
    path: std::path::PathBuf,
    reader: csv::Reader<std::fs::File>,
    record: csv::StringRecord,
    error: Option<Error>,
    read: usize,
}

pub fn rows(path: &Path, format: RawFormat) -> Result<Rows> {
    Ok(Rows {
        path: path.to_path_buf(),
        reader: reader(path, format)?,
        record: csv::StringRecord::new(),
        error: None,
        read: 0,
    })
}

impl Rows {
    /// Rows read so far, or the error that stopped the iteration.
    pub fn finish(self) -> Result<usize> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.read),
        }
    }
}

impl Iterator for Rows {
    type Item = Vec<String>;

    fn next(&mut self) -> Option<Vec<String>> {
        if self.error.is_some() {
            return None;
        }
        match self.reader.read_record(&mut self.record) {
            Ok(true) => {
                self.read += 1;
                Some(self.record.iter().map(str::to_string).collect())
            }
            Ok(false) => None,
            Err(e) => {
                self.error = Some(csv_error(&self.path, e));
                None
            }
        }
    }
}
