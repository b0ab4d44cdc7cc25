use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::args::Format;
use crate::Failure;

/// Decimal text for a real: plain notation in the usual range, scientific
/// notation for very small or very large magnitudes.
pub fn fmt_real(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// A header plus numeric rows.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::usage(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| fmt_real(*v)))
                .map_err(io)?;
        }
        w.into_inner()
            .map_err(|e| Failure::usage(format!("csv: {e}")))
    }

    /// `{"columns": {name: [values...]}}` in header order.
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut columns = serde_json::Map::new();
        for (j, name) in self.header.iter().enumerate() {
            let col: Vec<f64> = self.rows.iter().map(|r| r[j]).collect();
            columns.insert(name.clone(), serde_json::json!(col));
        }
        serde_json::Value::Object(columns)
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, Failure> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => json_bytes(&serde_json::json!({ "columns": self.to_json_value() })),
        }
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| Failure::usage(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes to `path` via a temporary file in the same directory and a rename,
/// or to standard output when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::usage(format!("cannot write output: {e}"));
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(fail)?;
            out.flush().map_err(fail)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = NamedTempFile::new_in(dir).map_err(fail)?;
            tmp.write_all(bytes).map_err(fail)?;
            tmp.as_file().sync_all().map_err(fail)?;
            tmp.persist(path).map_err(|e| fail(e.error))?;
            Ok(())
        }
    }
}
