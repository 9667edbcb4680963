//! `report`: prints the metrics of a written report or the deltas between
//! two. Works on any report by walking its JSON for known metric keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::{CliError, CliResult, ReportArgs};

const METRIC_KEYS: [&str; 10] = [
    "accuracy",
    "rmse",
    "precision",
    "recall",
    "f1",
    "average",
    "gain",
    "worst_single_average",
    "augmented_average",
    "flagged",
];

/// Fields that identify an element of an array in the flattened path. The
/// variant is left out so best-variant rows line up across reports.
const ID_KEYS: [&str; 5] = ["dataset", "model", "step", "train_rpm", "rpm"];

/// Subtrees that hold configuration or bulky detail, not results.
const SKIP: [&str; 5] = ["run_config", "options", "confusion", "loss_history", "curves"];

fn load(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| mfgsense::Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: not a JSON report: {e}", path.display())))
}

fn element_label(v: &Value, index: usize) -> String {
    let Value::Object(map) = v else {
        return index.to_string();
    };
    let parts: Vec<String> = ID_KEYS
        .iter()
        .filter_map(|k| match map.get(*k) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(format!("{k}={n}")),
            Some(Value::Null) if *k == "train_rpm" => Some("augmented".into()),
            _ => None,
        })
        .collect();
    if parts.is_empty() {
        index.to_string()
    } else {
        parts.join("/")
    }
}

fn walk(v: &Value, path: &str, out: &mut BTreeMap<String, f64>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if SKIP.contains(&k.as_str()) {
                    continue;
                }
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                if let (true, Some(x)) = (METRIC_KEYS.contains(&k.as_str()), child.as_f64()) {
                    out.insert(p, x);
                } else {
                    walk(child, &p, out);
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                walk(item, &format!("{path}[{}]", element_label(item, i)), out);
            }
        }
        _ => {}
    }
}

/// Metric leaves of a report keyed by a readable path.
pub fn metrics(report: &Value) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    // The full benchmark grid repeats the tables; keep only the tables.
    let trimmed = match report {
        Value::Object(map) if map.contains_key("rmse_table") => {
            let mut m = map.clone();
            m.remove("grid");
            Value::Object(m)
        }
        other => other.clone(),
    };
    walk(&trimmed, "", &mut out);
    out
}

fn header(report: &Value) -> String {
    let field = |k: &str| report.get(k).and_then(Value::as_str).unwrap_or("?").to_string();
    let command = report
        .get("command")
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| if report.get("rmse_table").is_some() { "bench".into() } else { "?".into() });
    format!("{command} (artifact {})", field("artifact_version"))
}

macro_rules! outln {
    ($out:expr, $($arg:tt)*) => {{
        let _ = writeln!($out, $($arg)*);
    }};
}

pub fn report(a: ReportArgs) -> CliResult<()> {
    let mut out = String::new();
    match (a.report, a.compare) {
        (Some(path), None) => {
            let r = load(&path)?;
            outln!(out, "{}: {}", path.display(), header(&r));
            for (k, v) in metrics(&r) {
                outln!(out, "  {k:<60} {v:.4}");
            }
        }
        (None, Some(paths)) => {
            let (a, b) = (load(&paths[0])?, load(&paths[1])?);
            outln!(out, "A = {}: {}", paths[0].display(), header(&a));
            outln!(out, "B = {}: {}", paths[1].display(), header(&b));
            let (ma, mb) = (metrics(&a), metrics(&b));
            outln!(out, "  {:<60} {:>10} {:>10} {:>10}", "metric", "A", "B", "B - A");
            for (k, va) in &ma {
                match mb.get(k) {
                    Some(vb) => outln!(out, "  {k:<60} {va:>10.4} {vb:>10.4} {:>+10.4}", vb - va),
                    None => outln!(out, "  {k:<60} {va:>10.4} {:>10} {:>10}", "-", "-"),
                }
            }
            for (k, vb) in mb.iter().filter(|(k, _)| !ma.contains_key(*k)) {
                outln!(out, "  {k:<60} {:>10} {vb:>10.4} {:>10}", "-", "-");
            }
        }
        _ => return Err(CliError::Usage("report takes one REPORT or --compare A B".into())),
    }
    // A closed pipe (e.g. `| head`) is not an error.
    let _ = std::io::stdout().write_all(out.as_bytes());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn metric_paths_use_identifying_fields() {
        let r = json!({
            "run_config": { "accuracy": 9.0 },
            "rmse_table": [{ "dataset": "d", "model": "ar", "variant": "p=5", "rmse": 0.5, "f1": null }],
            "grid": [{ "dataset": "d", "model": "ar", "rmse": 0.7 }],
            "result": { "entries": [{ "step": "baseline", "accuracy": 0.8 }] },
        });
        let m = metrics(&r);
        assert_eq!(m.len(), 2, "{m:?}");
        assert_eq!(m["rmse_table[d/ar].rmse"], 0.5);
        assert_eq!(m["result.entries[baseline].accuracy"], 0.8);
    }
}
