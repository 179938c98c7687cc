//! Cartesian-product sweeps over config keys.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_value, RunConfig};
use crate::error::{LabError, LabResult};
use crate::output::{fmt_f64, write_json};
use crate::run::{run_in, Workspace};

/// One `section.key=v1,v2,...` axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<toml::Value>,
}

/// Splits on commas that are not inside brackets or quotes.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut quoted, mut start) = (0i32, false, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '[' | '{' if !quoted => depth += 1,
            ']' | '}' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl Axis {
    pub fn parse(spec: &str) -> LabResult<Self> {
        let (key, vals) = spec
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("axis `{spec}` must look like key=v1,v2")))?;
        let values: Vec<toml::Value> = split_top_level(vals)
            .into_iter()
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(parse_value)
            .collect();
        if values.is_empty() {
            return Err(LabError::Config(format!("axis `{key}` has no values")));
        }
        Ok(Axis { key: key.trim().to_string(), values })
    }
}

fn show(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One grid point.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub index: usize,
    pub assignments: Vec<(String, String)>,
    pub summary: Option<Value>,
    /// Exit code and message of a failed row.
    pub error: Option<(i32, String)>,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

pub fn row_dir_name(i: usize) -> String {
    format!("row_{i:04}")
}

/// Expands the grid; a row whose overrides do not validate keeps its error.
pub fn expand(base: &RunConfig, axes: &[Axis], base_dir: Option<&Path>) -> LabResult<Vec<(Vec<(String, String)>, LabResult<RunConfig>)>> {
    if axes.is_empty() {
        return Err(LabError::Config("sweep needs at least one axis".into()));
    }
    let mut points: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for ax in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                ax.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((ax.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    let root = base.output_dir.clone();
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(i, pt)| {
            let shown = pt.iter().map(|(k, v)| (k.clone(), show(v))).collect();
            let cfg = pt
                .iter()
                .try_fold(base.clone(), |c, (k, v)| c.with_override(k, v, base_dir))
                .map(|c| c.with_output_dir(root.join(row_dir_name(i))));
            (shown, cfg)
        })
        .collect())
}

/// Identifies a [`Workspace`]: domain, exponent and constant tolerance.
fn cache_key(cfg: &RunConfig) -> String {
    let ext: Vec<String> = cfg.domain.extents.iter().map(|x| x.to_bits().to_string()).collect();
    format!(
        "{}|{:?}|{}|{}",
        ext.join(","),
        cfg.domain.resolution,
        cfg.p.to_bits(),
        cfg.constants.tol.to_bits()
    )
}

pub fn sweep(base: &RunConfig, axes: &[Axis], base_dir: Option<&Path>, use_cache: bool) -> LabResult<SweepTable> {
    let rows = expand(base, axes, base_dir)?;

    // warm-up; read-only afterwards
    let mut cache: HashMap<String, LabResult<Arc<Workspace>>> = HashMap::new();
    if use_cache {
        let mut keys: Vec<(String, &RunConfig)> = rows
            .iter()
            .filter_map(|(_, c)| c.as_ref().ok())
            .map(|c| (cache_key(c), c))
            .collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0));
        keys.dedup_by(|a, b| a.0 == b.0);
        cache = keys
            .into_par_iter()
            .map(|(k, c)| (k, Workspace::build(c).map(Arc::new)))
            .collect();
    }

    let results: Vec<SweepRow> = rows
        .into_par_iter()
        .enumerate()
        .map(|(index, (assignments, cfg))| {
            let outcome = cfg.and_then(|cfg| {
                let ws = if use_cache {
                    match &cache[&cache_key(&cfg)] {
                        Ok(w) => w.clone(),
                        Err(e) => return Err(LabError::Runtime(format!("constants: {e}"))),
                    }
                } else {
                    Arc::new(Workspace::build(&cfg)?)
                };
                run_in(&cfg, &ws)
            });
            match outcome {
                Ok(s) => SweepRow { index, assignments, summary: Some(s), error: None },
                Err(e) => SweepRow { index, assignments, summary: None, error: Some((e.exit_code(), e.to_string())) },
            }
        })
        .collect();

    let table = SweepTable { axes: axes.iter().map(|a| a.key.clone()).collect(), rows: results };
    std::fs::create_dir_all(&base.output_dir)?;
    std::fs::write(base.output_dir.join("phase_table.csv"), phase_table_csv(&table))?;
    write_json(&base.output_dir.join("sweep_index.json"), &index_json(&table))?;
    Ok(table)
}

const PHASE_COLUMNS: [&str; 14] = [
    "a",
    "b",
    "lambda",
    "p",
    "recipe",
    "outcome",
    "halt",
    "final_time",
    "E0",
    "depth",
    "T1_estimate",
    "sup_ut_plus_grad",
    "invariance_violations",
    "vacuum_ok",
];

fn num(v: Option<&Value>) -> String {
    v.and_then(Value::as_f64).map(fmt_f64).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The depth that governs the row's regime, when one was estimated.
fn active_depth(s: &Value) -> Option<&Value> {
    let d = &s["depths"];
    let p = s["params"]["p"].as_f64()?;
    let key = if p == 3.0 { "d3" } else { "dp" };
    d[key].get("value")
}

pub fn phase_table_csv(t: &SweepTable) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = vec!["row".into()];
    header.extend(t.axes.iter().cloned());
    header.extend(PHASE_COLUMNS.iter().map(|s| s.to_string()));
    header.push("error".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for r in &t.rows {
        let mut cols = vec![r.index.to_string()];
        cols.extend(r.assignments.iter().map(|(_, v)| csv_field(v)));
        match &r.summary {
            Some(s) => {
                let pr = &s["params"];
                cols.push(num(pr.get("a")));
                cols.push(num(pr.get("b")));
                cols.push(num(pr.get("lambda")));
                cols.push(num(pr.get("p")));
                cols.push(csv_field(s["seed"]["source"].as_str().unwrap_or("")));
                cols.push(s["outcome"].as_str().unwrap_or("").into());
                cols.push(s["halt"].as_str().unwrap_or("").into());
                cols.push(num(s.get("final_time")));
                cols.push(num(s["energy"].get("E0")));
                cols.push(num(active_depth(s)));
                cols.push(num(s.get("T1_estimate")));
                cols.push(num(s.get("sup_ut_plus_grad")));
                cols.push(s["invariance"].get("violations").map(|v| v.to_string()).unwrap_or_default());
                cols.push(s["vacuum_ok"].as_bool().map(|b| b.to_string()).unwrap_or_default());
                cols.push(String::new());
            }
            None => {
                cols.extend(std::iter::repeat_n(String::new(), PHASE_COLUMNS.len()));
                cols.push(csv_field(&r.error.as_ref().map(|e| e.1.clone()).unwrap_or_default()));
            }
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn index_json(t: &SweepTable) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            let assign: serde_json::Map<String, Value> =
                r.assignments.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            json!({
                "row": r.index,
                "dir": row_dir_name(r.index),
                "assignments": assign,
                "outcome": r.summary.as_ref().and_then(|s| s["outcome"].as_str()),
                "error": r.error.as_ref().map(|e| json!({ "exit_code": e.0, "message": e.1 })),
            })
        })
        .collect();
    json!({ "axes": t.axes, "rows": rows })
}
