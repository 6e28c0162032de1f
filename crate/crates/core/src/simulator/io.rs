//! Learning-curve CSV files.

use std::io::{Read, Write};

use super::CurveCell;
use crate::error::{Error, Result};

pub const CURVE_COLUMNS: [&str; 9] = [
    "strategy",
    "learner",
    "repeat",
    "iteration",
    "labels_used",
    "precision",
    "recall",
    "f1_pos",
    "f1_weighted",
];

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn write_curve<W: Write>(writer: W, cells: &[CurveCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if cells.is_empty() {
        w.write_record(CURVE_COLUMNS).map_err(csv_error)?;
    }
    for c in cells {
        w.serialize(c).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_curve`]. Errors carry the 1-based line.
pub fn read_curve<R: Read>(reader: R) -> Result<Vec<CurveCell>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(CURVE_COLUMNS) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected columns {}", CURVE_COLUMNS.join(",")),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}
