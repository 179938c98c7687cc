//! Files written by a run: `trace.csv`, `summary.json`, `constants.json`.

use std::io::{self, Write};
use std::path::Path;

use kirchhoff_core::dynamics::Trace;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::error::LabResult;

pub const TRACE_HEADER: &str = "t,ut_l2sq,grad_l2sq,M,lp1,J,I,E,Mprime";

pub const SUMMARY_SCHEMA: &str = "kirchhoff-lab/summary/v1";
pub const CONSTANTS_SCHEMA: &str = "kirchhoff-lab/constants/v1";

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with every float printed through [`fmt_f64`].
struct Digits17(PrettyFormatter<'static>);

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::new()));
    serde::Serialize::serialize(v, &mut ser).expect("serializing a Value cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn write_json(path: &Path, v: &Value) -> LabResult<()> {
    std::fs::write(path, to_json_string(v))?;
    Ok(())
}

pub fn trace_csv(trace: &Trace<f64>) -> String {
    let mut s = String::with_capacity(trace.rows.len() * 200);
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &trace.rows {
        let cols = [r.t, r.ut_l2sq, r.grad_l2sq, r.m, r.lp1, r.j, r.i, r.e, r.mprime];
        let line: Vec<String> = cols.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

pub fn write_trace(path: &Path, trace: &Trace<f64>) -> LabResult<()> {
    std::fs::write(path, trace_csv(trace))?;
    Ok(())
}

#[derive(Clone, Copy)]
enum Kind {
    Str,
    Num,
    NumOrNull,
    BoolOrNull,
    Obj,
    ObjOrNull,
    Arr,
}

impl Kind {
    fn accepts(&self, v: &Value) -> bool {
        match self {
            Kind::Str => v.is_string(),
            Kind::Num => v.is_number(),
            Kind::NumOrNull => v.is_number() || v.is_null(),
            Kind::BoolOrNull => v.is_boolean() || v.is_null(),
            Kind::Obj => v.is_object(),
            Kind::ObjOrNull => v.is_object() || v.is_null(),
            Kind::Arr => v.is_array(),
        }
    }
}

const SUMMARY_FIELDS: &[(&str, Kind)] = &[
    ("schema", Kind::Str),
    ("config", Kind::Obj),
    ("params", Kind::Obj),
    ("params/a", Kind::Num),
    ("params/b", Kind::Num),
    ("params/lambda", Kind::Num),
    ("params/p", Kind::Num),
    ("constants", Kind::Obj),
    ("constants/lambda1", Kind::Num),
    ("constants/Lambda", Kind::Num),
    ("constants/S_p1", Kind::NumOrNull),
    ("depths", Kind::Obj),
    ("seed", Kind::Obj),
    ("seed/source", Kind::Str),
    ("seed/certificate", Kind::ObjOrNull),
    ("outcome", Kind::Str),
    ("halt", Kind::Str),
    ("final_time", Kind::Num),
    ("steps", Kind::Num),
    ("dt_halvings", Kind::Num),
    ("T1_estimate", Kind::NumOrNull),
    ("blowup", Kind::ObjOrNull),
    ("invariance", Kind::ObjOrNull),
    ("vacuum", Kind::ObjOrNull),
    ("vacuum_ok", Kind::BoolOrNull),
    ("budget", Kind::ObjOrNull),
    ("energy", Kind::Obj),
    ("energy/E0", Kind::Num),
    ("energy/relative_drift", Kind::NumOrNull),
    ("sup_ut_plus_grad", Kind::NumOrNull),
    ("analyses", Kind::Arr),
    ("wall_time_s", Kind::Num),
];

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('/').try_fold(v, |cur, k| cur.get(k))
}

/// Checks a summary against the pinned field list.
pub fn validate_summary(v: &Value) -> Result<(), String> {
    if lookup(v, "schema").and_then(Value::as_str) != Some(SUMMARY_SCHEMA) {
        return Err(format!("schema must be `{SUMMARY_SCHEMA}`"));
    }
    for (path, kind) in SUMMARY_FIELDS {
        match lookup(v, path) {
            Some(x) if kind.accepts(x) => {}
            Some(_) => return Err(format!("field `{path}` has the wrong type")),
            None => return Err(format!("field `{path}` missing")),
        }
    }
    Ok(())
}

/// Drops the one field that legitimately differs between identical runs.
pub fn strip_wall_time(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("wall_time_s");
    }
    v
}
