//! Command-line harness.
//!
//! Verbs:
//! * `run <config>` — one configured solve; CSV trace to the configured
//!   output (stdout if none), human summary alongside.
//! * `compare <config>...` — several solves from one shared initial
//!   factor, one summary table.
//! * `spectrum <kind> <n> <r> <seed>` — print a generated eigenvalue
//!   family, one value per line.
//! * `oracle <config>` — dense reference decomposition of the configured
//!   operator (small dimensions only).
//!
//! Exit codes: 0 success; 2 config or usage error; 3 the solve finished
//! without converging; 4 numerical failure.

pub mod config;
pub mod runner;
pub mod trace;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::extract::{dense_eig, OracleError};
use crate::linop::{generate_spectrum, OpError, SpectrumKind};
pub use config::{OperatorSpec, RunConfig, ShiftSpec, SolverSpec};
pub use runner::{build_operator, execute_run, load_config, BuiltOp, Failure, RunReport};

#[derive(Parser)]
#[command(
    name = "ofeig",
    version,
    about = "Orthogonalization-free eigensolver for Hermitian PSD operators"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Run one configured solve and write its CSV trace
    Run { config: PathBuf },
    /// Run several configs from a shared initial factor and summarize
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print a generated eigenvalue family (random|uniform|ushape|logarithm)
    Spectrum { kind: String, n: usize, r: usize, seed: u64 },
    /// Dense reference decomposition of the configured operator
    Oracle { config: PathBuf },
}

/// Entry point used by `main`; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.verb {
        Verb::Run { config } => run_verb(&config),
        Verb::Compare { configs } => compare_verb(&configs),
        Verb::Spectrum { kind, n, r, seed } => spectrum_verb(&kind, n, r, seed),
        Verb::Oracle { config } => oracle_verb(&config),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn write_report_trace(cfg: &RunConfig, report: &RunReport) -> Result<(), Failure> {
    let toml_echo = cfg.to_toml();
    match &cfg.output {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|e| {
                Failure::config(format!("output {}: {e}", path.display()))
            })?;
            trace::write_trace(&mut file, &toml_echo, report.field, &report.extras, &report.rows)
                .map_err(|e| Failure::config(format!("output {}: {e}", path.display())))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            trace::write_trace(&mut lock, &toml_echo, report.field, &report.extras, &report.rows)
                .map_err(|e| Failure::config(format!("stdout: {e}")))
        }
    }
}

fn print_values(out: &mut dyn Write, report: &RunReport) {
    let _ = writeln!(out, "eigenvalue estimates (largest first):");
    for (i, v) in report.values.iter().enumerate() {
        match report.reference.as_ref().and_then(|r| r.get(i)) {
            Some(r) => {
                let rel = (v - r).abs() / r.abs().max(1.0);
                let _ = writeln!(out, "  [{i}] {v:?}    reference {r:?}    rel err {rel:.3e}");
            }
            None => {
                let _ = writeln!(out, "  [{i}] {v:?}");
            }
        }
    }
    if let Some((how, sigma)) = &report.back_values {
        let _ = writeln!(out, "base-operator eigenvalues, smallest first ({how}):");
        for (i, s) in sigma.iter().enumerate() {
            let _ = writeln!(out, "  [{i}] {s:?}");
        }
    }
}

fn print_summary(out: &mut dyn Write, report: &RunReport) {
    let _ = writeln!(
        out,
        "{}: {} on {} (n={}, p={}, {})",
        report.label, report.solver, report.field, report.n, report.p, report.status
    );
    let f_note = if report.f_includes_constant { "" } else { " (constant term unknown: shifted by -0.5*||A||_F^2)" };
    let _ = writeln!(
        out,
        "  iterations {}   final f {:?}{}   final grad {:.6e}   wall {:.1} ms",
        report.iters, report.final_f, f_note, report.final_grad, report.wall_ms
    );
    if let Some(err) = report.max_rel_value_err {
        let _ = writeln!(
            out,
            "  max relative eigenvalue error {err:.3e}   max residual {:.3e}",
            report.max_residual
        );
    } else {
        let _ = writeln!(out, "  max residual {:.3e}", report.max_residual);
    }
    print_values(out, report);
}

fn run_verb(path: &Path) -> Result<i32, Failure> {
    let cfg = load_config(path)?;
    let report = execute_run(&cfg, &path.display().to_string())?;
    write_report_trace(&cfg, &report)?;
    // keep the human-readable part off the CSV stream when both share stdout
    if cfg.output.is_some() {
        print_summary(&mut std::io::stdout(), &report);
        if let Some(p) = &cfg.output {
            println!("trace: {} ({} rows)", p.display(), report.rows.len());
        }
    } else {
        print_summary(&mut std::io::stderr(), &report);
    }
    Ok(if report.converged { 0 } else { 3 })
}

fn compare_verb(paths: &[PathBuf]) -> Result<i32, Failure> {
    let mut configs = Vec::with_capacity(paths.len());
    for path in paths {
        configs.push((path, load_config(path)?));
    }

    // one shared starting point: every run uses the first config's seed
    let shared_seed = configs[0].1.x0_seed;
    let shared_p = configs[0].1.p;
    for (path, cfg) in &configs {
        if cfg.p != shared_p {
            return Err(Failure::config(format!(
                "{}: p = {} differs from {} in the first config; compared runs must share p",
                path.display(),
                cfg.p,
                shared_p
            )));
        }
    }

    let mut reports = Vec::with_capacity(configs.len());
    for (path, cfg) in &configs {
        let mut cfg = (*cfg).clone();
        if cfg.x0_seed != shared_seed {
            eprintln!(
                "note: {} x0_seed {} overridden by shared seed {}",
                path.display(),
                cfg.x0_seed,
                shared_seed
            );
            cfg.x0_seed = shared_seed;
        }
        let report = execute_run(&cfg, &path.display().to_string())?;
        if let Some(first) = reports.first() {
            let first: &RunReport = first;
            if report.n != first.n || report.field != first.field {
                return Err(Failure::config(format!(
                    "{}: operator (n={}, {}) does not match the first run (n={}, {}); \
                     compared runs must share the problem size and scalar field",
                    report.label, report.n, report.field, first.n, first.field
                )));
            }
        }
        if cfg.output.is_some() {
            write_report_trace(&cfg, &report)?;
        }
        reports.push(report);
    }

    println!(
        "{:<28} {:<14} {:<13} {:>8} {:>8} {:>13} {:>10}",
        "run", "solver", "status", "iters", "to_eps", "final_grad", "wall_ms"
    );
    for r in &reports {
        let to_eps = match r.first_below_eps {
            Some(k) => k.to_string(),
            None => "-".to_string(),
        };
        println!(
            "{:<28} {:<14} {:<13} {:>8} {:>8} {:>13.4e} {:>10.1}",
            short_label(&r.label),
            r.solver,
            r.status,
            r.iters,
            to_eps,
            r.final_grad,
            r.wall_ms
        );
    }
    for r in &reports {
        println!();
        println!("{}:", r.label);
        print_values(&mut std::io::stdout(), r);
    }

    Ok(if reports.iter().all(|r| r.converged) { 0 } else { 3 })
}

fn short_label(label: &str) -> String {
    Path::new(label)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| label.to_string())
}

fn spectrum_verb(kind: &str, n: usize, r: usize, seed: u64) -> Result<i32, Failure> {
    let kind: SpectrumKind = kind
        .parse()
        .map_err(|e| Failure::config(format!("kind: {e}")))?;
    let values = generate_spectrum(kind, n, r, seed)
        .map_err(|e| Failure::config(format!("spectrum: {e}")))?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for v in values {
        let _ = writeln!(lock, "{v:?}");
    }
    Ok(0)
}

fn oracle_verb(path: &Path) -> Result<i32, Failure> {
    let cfg = load_config(path)?;
    let (built, _extras) = build_operator(&cfg)?;
    let map_err = |e: OracleError| match e {
        OracleError::DimensionTooLarge { .. } => Failure::config(format!("oracle: {e}")),
        OracleError::Op(OpError::NotHermitian { .. }) => {
            Failure::numerical(format!("oracle: {e}"))
        }
        OracleError::Op(inner) => Failure::numerical(format!("oracle: {inner}")),
    };
    let (values, reference) = match &built {
        BuiltOp::Real(op) => {
            let pairs = dense_eig(op.as_ref()).map_err(map_err)?;
            (pairs.values, op.spectrum())
        }
        BuiltOp::Complex(op) => {
            let pairs = dense_eig(op.as_ref()).map_err(map_err)?;
            (pairs.values, op.spectrum())
        }
    };
    println!(
        "dense reference decomposition: n = {}, field = {}, showing top {}",
        built.dim(),
        built.field(),
        cfg.p
    );
    for (i, v) in values.iter().take(cfg.p).enumerate() {
        match reference.as_ref().and_then(|r| r.get(i)) {
            Some(r) => {
                let rel = (v - r).abs() / r.abs().max(1.0);
                println!("  [{i}] {v:?}    declared {r:?}    rel err {rel:.3e}");
            }
            None => println!("  [{i}] {v:?}"),
        }
    }
    Ok(0)
}
