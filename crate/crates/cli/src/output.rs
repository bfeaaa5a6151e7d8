//! CSV and JSON emission.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tempfile::NamedTempFile;

use crate::scenario::Scenario;

/// Version of the JSON document layout; bumped on incompatible changes.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats `x` with 9 significant digits, plain for moderate magnitudes and
/// in exponent notation otherwise. Output never depends on the locale.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let plain = format!("{x:.decimals$}");
        if plain.contains('.') {
            plain
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            plain
        }
    } else {
        let (mantissa, exponent) = sci.split_once('e').unwrap();
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// Comma-separated table with a header row and a newline after every row.
#[derive(Debug, Clone)]
pub struct CsvTable {
    columns: Vec<&'static str>,
    text: String,
}

impl CsvTable {
    pub fn new(columns: &[&'static str]) -> Self {
        let mut text = columns.join(",");
        text.push('\n');
        Self {
            columns: columns.to_vec(),
            text,
        }
    }

    pub fn push(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        let row: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&row.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Real(f64),
}

impl Cell {
    fn render(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_sig(v),
        }
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `traj.csv` -> `traj.json`; a path already ending in `.json` gets `.meta.json`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    if data.extension().is_some_and(|e| e == "json") {
        data.with_extension("meta.json")
    } else {
        data.with_extension("json")
    }
}

/// Common header of every JSON document: schema, tool version and the full
/// resolved parameter set.
pub fn document(
    schema: &str,
    command: &str,
    scenario: &Scenario,
    normalized: bool,
) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), json!(schema));
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("version".into(), json!(TOOL_VERSION));
    map.insert("command".into(), json!(command));
    map.insert(
        "scenario".into(),
        serde_json::to_value(scenario).expect("scenario serializes"),
    );
    map.insert("mean_base_count".into(), json!(scenario.mean_base_count()));
    map.insert("normalized".into(), json!(normalized));
    map
}

pub fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

/// CSV rows as JSON objects, for `--format json`.
pub fn rows_as_json(table: &CsvTable) -> Value {
    let rows: Vec<Value> = table
        .as_str()
        .lines()
        .skip(1)
        .map(|line| {
            let obj: serde_json::Map<String, Value> = table
                .columns()
                .iter()
                .zip(line.split(','))
                .map(|(k, v)| {
                    let n: f64 = v.parse().unwrap_or(f64::NAN);
                    (k.to_string(), json!(n))
                })
                .collect();
            Value::Object(obj)
        })
        .collect();
    Value::Array(rows)
}
