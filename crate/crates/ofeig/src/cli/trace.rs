//! Trace files: a comment header carrying the full resolved config
//! followed by a fixed-column CSV body.
//!
//! The header makes every trace self-describing — the lines between the
//! `config-begin`/`config-end` markers are the exact TOML that reproduces
//! the run. Within a platform, identical configs produce byte-identical
//! bodies except for the `wall_ns` column (wall time is the one
//! non-deterministic measurement, and the schema wants it recorded).

use std::io::{self, Write};

use crate::cg::TraceRecord;
use crate::coord::CrgdRecord;

pub const CSV_COLUMNS: &str =
    "iter,f,grad_norm,alpha,beta,cos_theta,descent_ratio,armijo_ok,curvature_ok,omega_norm,wall_ns";

pub const CONFIG_BEGIN: &str = "# config-begin";
pub const CONFIG_END: &str = "# config-end";

/// One CSV row. Both solvers map onto the same fixed columns; fields a
/// solver does not produce stay `None` and serialize as empty cells.
#[derive(Debug, Clone)]
pub struct Row {
    pub iter: usize,
    pub f: Option<f64>,
    /// Gradient norm for the conjugate-gradient solver; block-direction
    /// norm for coordinate descent.
    pub grad_norm: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub cos_theta: Option<f64>,
    pub descent_ratio: Option<f64>,
    pub armijo_ok: Option<bool>,
    pub curvature_ok: Option<bool>,
    pub omega_norm: Option<f64>,
    pub wall_ns: u128,
}

impl From<&TraceRecord> for Row {
    fn from(r: &TraceRecord) -> Self {
        Row {
            iter: r.iter,
            f: Some(r.f),
            grad_norm: r.grad_norm,
            alpha: r.alpha,
            beta: Some(r.beta),
            cos_theta: Some(r.cos_theta),
            descent_ratio: Some(r.descent_ratio),
            armijo_ok: Some(r.armijo_ok),
            curvature_ok: Some(r.curvature_ok),
            omega_norm: Some(r.omega_norm),
            wall_ns: r.wall_ns,
        }
    }
}

/// Coordinate-descent rows carry the fixed step in `alpha`.
pub fn row_from_crgd(r: &CrgdRecord, alpha: f64) -> Row {
    Row {
        iter: r.iter,
        f: r.f,
        grad_norm: r.delta_norm,
        alpha,
        beta: None,
        cos_theta: None,
        descent_ratio: None,
        armijo_ok: None,
        curvature_ok: None,
        omega_norm: None,
        wall_ns: r.wall_ns,
    }
}

fn push_f64(out: &mut String, v: f64) {
    use std::fmt::Write as _;
    // {:?} is the shortest representation that parses back exactly
    let _ = write!(out, "{v:?}");
}

fn push_opt_f64(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        push_f64(out, v);
    }
}

fn push_opt_bool(out: &mut String, v: Option<bool>) {
    if let Some(v) = v {
        out.push_str(if v { "true" } else { "false" });
    }
}

pub fn format_row(r: &Row) -> String {
    let mut s = String::with_capacity(128);
    use std::fmt::Write as _;
    let _ = write!(s, "{},", r.iter);
    push_opt_f64(&mut s, r.f);
    s.push(',');
    push_f64(&mut s, r.grad_norm);
    s.push(',');
    push_f64(&mut s, r.alpha);
    s.push(',');
    push_opt_f64(&mut s, r.beta);
    s.push(',');
    push_opt_f64(&mut s, r.cos_theta);
    s.push(',');
    push_opt_f64(&mut s, r.descent_ratio);
    s.push(',');
    push_opt_bool(&mut s, r.armijo_ok);
    s.push(',');
    push_opt_bool(&mut s, r.curvature_ok);
    s.push(',');
    push_opt_f64(&mut s, r.omega_norm);
    let _ = write!(s, ",{}", r.wall_ns);
    s
}

/// Header block + body. `config_toml` is the canonical serialized config;
/// `extras` are additional resolved quantities (e.g. an auto-chosen shift)
/// recorded as `# key = value` lines before the config block.
pub fn write_trace(
    w: &mut dyn Write,
    config_toml: &str,
    field: &str,
    extras: &[(String, String)],
    rows: &[Row],
) -> io::Result<()> {
    writeln!(w, "# ofeig {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# field = {field}")?;
    for (k, v) in extras {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{CONFIG_BEGIN}")?;
    for line in config_toml.lines() {
        if line.is_empty() {
            writeln!(w, "#")?;
        } else {
            writeln!(w, "# {line}")?;
        }
    }
    writeln!(w, "{CONFIG_END}")?;
    writeln!(w, "{CSV_COLUMNS}")?;
    for row in rows {
        writeln!(w, "{}", format_row(row))?;
    }
    Ok(())
}

/// Recover the embedded config TOML from a trace produced by
/// [`write_trace`] — the "self-describing" contract.
pub fn read_embedded_config(trace_text: &str) -> Option<String> {
    let mut inside = false;
    let mut out = String::new();
    for line in trace_text.lines() {
        if line == CONFIG_BEGIN {
            inside = true;
        } else if line == CONFIG_END {
            return inside.then_some(out);
        } else if inside {
            let stripped = line.strip_prefix("# ").or_else(|| line.strip_prefix("#"))?;
            out.push_str(stripped);
            out.push('\n');
        }
    }
    None
}

/// CSV body with the `wall_ns` column removed — the deterministic part of
/// a trace, used by the byte-identity tests.
pub fn body_without_wall(trace_text: &str) -> String {
    let mut out = String::new();
    let mut in_body = false;
    for line in trace_text.lines() {
        if line == CSV_COLUMNS {
            in_body = true;
        }
        if in_body {
            match line.rsplit_once(',') {
                Some((head, _wall)) => {
                    out.push_str(head);
                    out.push('\n');
                }
                None => {
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
    }
    out
}
