//! Result tables and their CSV/JSON serializations.
//!
//! CSV: one `<table>.csv` per table with a header row and every value in
//! `{:.16e}` notation, plus a `metadata.json` sidecar. JSON: a single
//! `bundle.json` holding `{"tables": ..., "metadata": ...}`. Non-finite
//! values are written as `NaN`/`inf` in CSV and as `null` in JSON (read back
//! as NaN). Both layouts are byte-stable for identical bundles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::Format;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("malformed bundle: {0}")]
    Malformed(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> BundleError {
    BundleError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// A named-column table of `f64`, stored column-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        let data = vec![Vec::new(); columns.len()];
        Self { columns, data }
    }

    /// # Panics
    /// If `row` does not have one value per column.
    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the table");
        for (col, &v) in self.data.iter_mut().zip(row) {
            col.push(v);
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|i| self.data[i].as_slice())
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.iter().map(|c| c[i]).collect()
    }

    /// Equality that treats NaN as equal to NaN.
    pub fn same_values(&self, other: &Table) -> bool {
        self.columns == other.columns
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
            })
    }

    /// A table without columns serializes to the empty string.
    pub fn to_csv(&self) -> String {
        if self.columns.is_empty() {
            return String::new();
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for i in 0..self.n_rows() {
            w.write_record(self.data.iter().map(|c| format!("{:.16e}", c[i]))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(text: &str) -> Result<Self, BundleError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| BundleError::Malformed(e.to_string()))?.clone();
        let mut table = Table::new(headers.iter());
        for record in r.records() {
            let record = record.map_err(|e| BundleError::Malformed(e.to_string()))?;
            let row = record
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|_| BundleError::Malformed(format!("not a number: `{f}`"))))
                .collect::<Result<Vec<f64>, _>>()?;
            if row.len() != table.columns.len() {
                return Err(BundleError::Malformed("row width does not match the header".into()));
            }
            table.push(&row);
        }
        Ok(table)
    }

    fn to_json(&self) -> Value {
        let values: Vec<Value> = self.data.iter().map(|c| c.iter().map(|&v| num(v)).collect()).collect();
        json!({ "columns": self.columns, "values": values })
    }

    fn from_json(v: &Value) -> Result<Self, BundleError> {
        let bad = |m: &str| BundleError::Malformed(m.to_string());
        let columns = v
            .get("columns")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("table without `columns`"))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| bad("column names must be strings")))
            .collect::<Result<Vec<_>, _>>()?;
        let values = v.get("values").and_then(Value::as_array).ok_or_else(|| bad("table without `values`"))?;
        if values.len() != columns.len() {
            return Err(bad("one value array per column expected"));
        }
        let data = values
            .iter()
            .map(|col| {
                col.as_array()
                    .ok_or_else(|| bad("column values must be arrays"))?
                    .iter()
                    .map(|x| match x {
                        Value::Null => Ok(f64::NAN),
                        _ => x.as_f64().ok_or_else(|| bad("values must be numbers or null")),
                    })
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        if data.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(bad("columns of unequal length"));
        }
        Ok(Self { columns, data })
    }
}

/// JSON number, or `null` when not finite.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Tables plus free-form metadata (tool version, config hash, seed, wall
/// time, scalar results, warnings).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultBundle {
    pub tables: BTreeMap<String, Table>,
    pub metadata: Map<String, Value>,
}

impl ResultBundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    /// Scalar or structured result recorded under `metadata.results`.
    pub fn result(&self, key: &str) -> Option<&Value> {
        self.metadata.get("results")?.get(key)
    }

    pub fn to_json(&self) -> String {
        let tables: Map<String, Value> = self.tables.iter().map(|(k, t)| (k.clone(), t.to_json())).collect();
        let mut s = serde_json::to_string_pretty(&json!({ "tables": tables, "metadata": self.metadata }))
            .expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let v: Value = serde_json::from_str(text).map_err(|e| BundleError::Malformed(e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| BundleError::Malformed("bundle must be an object".into()))?;
        if obj.len() != 2 {
            return Err(BundleError::Malformed("bundle must have exactly `tables` and `metadata`".into()));
        }
        let tables = obj
            .get("tables")
            .and_then(Value::as_object)
            .ok_or_else(|| BundleError::Malformed("missing `tables` object".into()))?
            .iter()
            .map(|(k, t)| Ok((k.clone(), Table::from_json(t)?)))
            .collect::<Result<BTreeMap<_, _>, BundleError>>()?;
        let metadata = obj
            .get("metadata")
            .and_then(Value::as_object)
            .ok_or_else(|| BundleError::Malformed("missing `metadata` object".into()))?
            .clone();
        Ok(Self { tables, metadata })
    }

    pub fn metadata_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.metadata).expect("values serialize");
        s.push('\n');
        s
    }

    /// Writes the bundle under `dir`, returning the files written.
    pub fn emit(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, BundleError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut written = Vec::new();
        let mut write = |name: String, contents: String| -> Result<(), BundleError> {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
            written.push(path);
            Ok(())
        };
        match format {
            Format::Csv => {
                for (name, table) in &self.tables {
                    write(format!("{name}.csv"), table.to_csv())?;
                }
                write("metadata.json".into(), self.metadata_json())?;
            }
            Format::Json => write("bundle.json".into(), self.to_json())?,
        }
        Ok(written)
    }

    /// Reads a bundle written by [`Self::emit`].
    pub fn load(dir: &Path, format: Format) -> Result<Self, BundleError> {
        match format {
            Format::Json => {
                let path = dir.join("bundle.json");
                Self::from_json(&fs::read_to_string(&path).map_err(|e| io_err(&path, e))?)
            }
            Format::Csv => {
                let meta_path = dir.join("metadata.json");
                let text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
                let metadata = match serde_json::from_str(&text) {
                    Ok(Value::Object(m)) => m,
                    _ => return Err(BundleError::Malformed("metadata.json must be an object".into())),
                };
                let mut tables = BTreeMap::new();
                let mut entries: Vec<PathBuf> = fs::read_dir(dir)
                    .map_err(|e| io_err(dir, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                    .collect();
                entries.sort();
                for path in entries {
                    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
                    tables.insert(name, Table::from_csv(&text)?);
                }
                Ok(Self { tables, metadata })
            }
        }
    }
}
