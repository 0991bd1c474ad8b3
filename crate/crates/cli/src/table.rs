//! Result tables and their CSV / JSON encodings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format};
use crate::CliError;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Equal-length named columns, kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Columns(Vec<(String, Vec<f64>)>);

impl Columns {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a column; panics if its length differs from the others.
    pub fn push(&mut self, name: &str, values: Vec<f64>) -> &mut Self {
        if let Some((first, v)) = self.0.first() {
            assert_eq!(v.len(), values.len(), "column {name} does not match {first}");
        }
        self.0.push((name.to_string(), values));
        self
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(n, _)| n.as_str())
    }

    pub fn rows(&self) -> usize {
        self.0.first().map_or(0, |(_, v)| v.len())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let header: Vec<&str> = self.names().collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.rows() {
            let row: Vec<String> = self.0.iter().map(|(_, v)| fmt_f64(v[i])).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

impl Serialize for Columns {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (name, values) in &self.0 {
            let v: Vec<Value> = values.iter().map(|&x| json_f64(x)).collect();
            m.serialize_entry(name, &v)?;
        }
        m.end()
    }
}

/// Shortest round-trip decimal form, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e15) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Finite floats become JSON numbers, the rest strings.
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(fmt_f64(x)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
}

/// What a command produces: a main table, optional named side tables,
/// scalar results and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub columns: Columns,
    pub tables: BTreeMap<String, Columns>,
    pub summary: BTreeMap<String, Value>,
    pub diagnostics: BTreeMap<String, Value>,
}

impl ResultTable {
    pub fn new(config: &ExperimentConfig) -> Self {
        ResultTable {
            metadata: Metadata { tool: "lambert", version: VERSION, config: config.clone() },
            columns: Columns::new(),
            tables: BTreeMap::new(),
            summary: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn summary(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.summary.insert(key.into(), v.into());
        self
    }

    pub fn summary_f64(&mut self, key: &str, x: f64) -> &mut Self {
        self.summary.insert(key.into(), json_f64(x));
        self
    }

    pub fn diagnostic(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.diagnostics.insert(key.into(), v.into());
        self
    }

    pub fn diagnostic_f64(&mut self, key: &str, x: f64) -> &mut Self {
        self.diagnostics.insert(key.into(), json_f64(x));
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result tables always serialize");
        s.push('\n');
        s
    }

    /// Everything except the main table, as written to the `.meta.json` sidecar.
    fn meta_json(&self) -> String {
        let v = serde_json::json!({
            "metadata": self.metadata,
            "summary": self.summary,
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("metadata always serializes");
        s.push('\n');
        s
    }

    /// Writes the result. JSON goes to a single document. CSV writes the main
    /// table to `path`, side tables to `<stem>.<name>.csv` and the rest to
    /// `<stem>.meta.json`. Returns the files written.
    pub fn write(&self, path: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
        match format {
            Format::Json => {
                std::fs::write(path, self.to_json()).map_err(|e| io(e, path))?;
                Ok(vec![path.to_path_buf()])
            }
            Format::Csv => {
                let mut written = Vec::new();
                let mut buf = Vec::new();
                self.columns.write_csv(&mut buf).map_err(|e| io(e, path))?;
                std::fs::write(path, buf).map_err(|e| io(e, path))?;
                written.push(path.to_path_buf());
                for (name, cols) in &self.tables {
                    let p = sibling(path, &format!("{name}.csv"));
                    let mut buf = Vec::new();
                    cols.write_csv(&mut buf).map_err(|e| io(e, &p))?;
                    std::fs::write(&p, buf).map_err(|e| io(e, &p))?;
                    written.push(p);
                }
                let p = sibling(path, "meta.json");
                std::fs::write(&p, self.meta_json()).map_err(|e| io(e, &p))?;
                written.push(p);
                Ok(written)
            }
        }
    }

    /// Writes to standard output. CSV prints every table, each after a
    /// `# name` line, followed by the metadata as a JSON comment block.
    pub fn print<W: Write>(&self, w: &mut W, format: Format) -> std::io::Result<()> {
        match format {
            Format::Json => w.write_all(self.to_json().as_bytes()),
            Format::Csv => {
                self.columns.write_csv(w)?;
                for (name, cols) in &self.tables {
                    writeln!(w, "\n# {name}")?;
                    cols.write_csv(w)?;
                }
                writeln!(w)?;
                for line in self.meta_json().lines() {
                    writeln!(w, "# {line}")?;
                }
                Ok(())
            }
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
