//! One CSV file per realization: a header row of channel names followed by
//! one row per sample.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use stateselect_core::data::ChannelMeta;
use stateselect_core::DMatrix;

use crate::error::{Error, Result};

/// Reads one realization, reordering columns to match `manifest`.
pub fn read_realization(path: &Path, manifest: &[ChannelMeta]) -> Result<DMatrix<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header = reader.headers().map_err(|e| Error::format(path, e))?.clone();

    let mut column_of = vec![usize::MAX; manifest.len()];
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        if header.iter().take(col).any(|h| h.trim() == name) {
            return Err(Error::DuplicateColumn {
                path: path.into(),
                name: name.into(),
            });
        }
        match manifest.iter().position(|c| c.name == name) {
            Some(row) => column_of[row] = col,
            None => {
                return Err(Error::UnknownColumn {
                    path: path.into(),
                    name: name.into(),
                })
            }
        }
    }
    if let Some(row) = column_of.iter().position(|&c| c == usize::MAX) {
        return Err(Error::MissingChannel {
            path: path.into(),
            name: manifest[row].name.clone(),
        });
    }

    let mut data: Vec<f64> = Vec::new();
    let mut steps = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                path: path.into(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (row, &col) in column_of.iter().enumerate() {
            let raw = record[col].trim();
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                channel: manifest[row].name.clone(),
                value: raw.into(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    path: path.into(),
                    line,
                    channel: manifest[row].name.clone(),
                    value: raw.into(),
                });
            }
            data.push(value);
        }
        steps += 1;
    }
    // data is step-major, i.e. column-major for a channels × steps matrix
    Ok(DMatrix::from_vec(manifest.len(), steps, data))
}

/// Writes `m` (channels × steps) with shortest round-trip float formatting.
pub fn write_realization(path: &Path, names: &[String], m: &DMatrix<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(names).map_err(|e| Error::format(path, e))?;
    let mut row = Vec::with_capacity(m.nrows());
    for k in 0..m.ncols() {
        row.clear();
        row.extend(m.column(k).iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(|e| Error::format(path, e))?;
    }
    let mut inner = writer.into_inner().map_err(|e| Error::format(path, e))?;
    inner.flush().map_err(|e| Error::io(path, e))
}
