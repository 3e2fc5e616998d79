use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, Format};

/// A row type with a fixed column order.
pub trait Table: Serialize {
    const COLUMNS: &'static [&'static str];
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes to JSON");
    text.push('\n');
    std::fs::write(&path, text).map_err(io_error(&path))?;
    Ok(path)
}

/// Writes `rows` as `<stem>.csv` (header always present) or `<stem>.json`.
pub fn write_table<T: Table>(dir: &Path, stem: &str, rows: &[T], format: Format) -> Result<PathBuf, CliError> {
    match format {
        Format::Json => write_json(dir, &format!("{stem}.json"), rows),
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let csv_error = |e: csv::Error| CliError::Io {
                path: path.clone(),
                source: e.into(),
            };
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_path(&path)
                .map_err(csv_error)?;
            w.write_record(T::COLUMNS).map_err(csv_error)?;
            for row in rows {
                w.serialize(row).map_err(csv_error)?;
            }
            w.flush().map_err(io_error(&path))?;
            Ok(path)
        }
    }
}
