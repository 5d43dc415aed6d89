//! CSV tables and Vega-Lite plot scripts.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// Writes a header and rows; returns the path written.
pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Log-scale line plot of `columns` against `x`, read from `csv_name`.
pub fn log_plot(csv_name: &str, title: &str, x: &str, columns: &[&str]) -> Value {
    json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "title": title,
        "data": {"url": csv_name, "format": {"type": "csv"}},
        "transform": [
            {"fold": columns, "as": ["quantity", "value"]},
            {"calculate": "toNumber(datum.value)", "as": "value"},
            {"filter": "datum.value > 0"}
        ],
        "mark": {"type": "line", "point": true},
        "encoding": {
            "x": {"field": x, "type": "quantitative"},
            "y": {"field": "value", "type": "quantitative", "scale": {"type": "log"}},
            "color": {"field": "quantity", "type": "nominal"}
        }
    })
}
