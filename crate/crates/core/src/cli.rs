//! The `chss` command-line driver.
//!
//! ```text
//! chss emden|construct|verify|sweep --config <path> [--out <dir>] [--tol <real>]
//!      [--grid nx,nt] [--seed-corrupt u=<factor>]
//! ```
//!
//! Exit codes: 0 success, 1 invalid input or precondition, 2 numerical
//! failure, 3 verification failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{self, Block};
use crate::emden::{analyze, classify, BlowupReport, Classification, Termination};
use crate::error::{invalid, Error, Result};
use crate::selfsim::{ScaleFactor, SolutionCase};
use crate::suite::{self, VerificationReport};
use crate::verify::MassValue;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 3;

/// Default integration horizon of `chss emden`, in physical time.
pub const DEFAULT_T_END: f64 = 10.0;
/// Largest relative energy drift `chss emden` accepts.
pub const EMDEN_DRIFT_TOL: f64 = 1e-8;
/// Largest gap between the integrated and the quadrature collapse times.
pub const EMDEN_COLLAPSE_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "chss",
    version,
    about = "Self-similar solutions of the two-component Camassa-Holm system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the scale-factor ODE; writes trajectory.csv and emden.json.
    Emden(RunArgs),
    /// Sample density and velocity on a grid; writes fields.csv.
    Construct(RunArgs),
    /// Run residual, mass and rate checks; writes verify.json.
    Verify(RunArgs),
    /// Summarise a list of `[case]` blocks; writes sweep.csv.
    Sweep(RunArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Integrator tolerance (overrides `tol`).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Grid size `nx,nt` (overrides `nx` and `nt`).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Debug: scale every velocity sample, e.g. `u=1.01`.
    #[arg(long, value_parser = parse_corrupt)]
    pub seed_corrupt: Option<f64>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (nx, nt) = s.split_once(',').ok_or("expected `nx,nt`")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(nx)?, parse(nt)?))
}

fn parse_corrupt(s: &str) -> std::result::Result<f64, String> {
    let factor = s.strip_prefix("u=").ok_or("expected `u=<factor>`")?;
    factor.parse().map_err(|e| format!("`{factor}`: {e}"))
}

/// Parses `args` (including the program name) and runs the command.
/// Diagnostics go to stderr; the return value is the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.pass {
                EXIT_OK
            } else {
                EXIT_VERIFICATION
            }
        }
        Err(e) => {
            eprintln!("chss: error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
}

pub fn execute(command: &Command) -> Result<Outcome> {
    match command {
        Command::Emden(a) => cmd_emden(&load(a)?, &a.out),
        Command::Construct(a) => cmd_construct(&load(a)?, &a.out),
        Command::Verify(a) => cmd_verify(&load(a)?, &a.out, a.seed_corrupt),
        Command::Sweep(a) => cmd_sweep(&read_config(&a.config)?, &overrides(a), &a.out),
    }
}

fn read_config(path: &Path) -> Result<config::ConfigFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    config::parse(&text)
}

fn overrides(a: &RunArgs) -> Block {
    let mut b = Block::default();
    if let Some(tol) = a.tol {
        b.set("tol", tol);
    }
    if let Some((nx, nt)) = a.grid {
        b.set("nx", nx);
        b.set("nt", nt);
    }
    b
}

/// Flat config with command-line overrides applied.
fn load(a: &RunArgs) -> Result<Block> {
    let cfg = read_config(&a.config)?;
    if !cfg.cases.is_empty() {
        return Err(invalid("`[case]` blocks are only valid for `sweep`"));
    }
    Ok(overrides(a).over(&cfg.defaults))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// CSV number with 17 significant digits; negative zero prints as zero.
pub fn num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct JsonReport<C, P, R> {
    case: Option<C>,
    params: P,
    reports: R,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct EmdenRunParams {
    xi: f64,
    a0: f64,
    a1: f64,
    tol: f64,
    t_end: f64,
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    points: usize,
    s_max: f64,
    termination: Termination,
    max_energy_drift: f64,
}

#[derive(Debug, Serialize)]
struct EmdenReports {
    emden: BlowupReport,
    trajectory: TrajectorySummary,
    checks: Vec<suite::Check>,
}

pub fn cmd_emden(cfg: &Block, out: &Path) -> Result<Outcome> {
    let params = cfg.emden_params()?;
    let tol = cfg.tol()?;
    let t_end: f64 = cfg.get_or("t_end", DEFAULT_T_END)?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end must be positive, got {t_end}")));
    }
    let (traj, report) = analyze(&params, 3.0 * t_end, tol)?;

    let mut csv = String::from("s,a,a_dot,energy\n");
    for st in traj.states() {
        let e = crate::emden::energy(&params, st);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            num(st.s),
            num(st.a),
            num(st.a_dot),
            num(e)
        );
    }

    let drift = traj.max_energy_drift();
    let mut checks = vec![suite::Check {
        name: "energy_drift".into(),
        pass: drift <= EMDEN_DRIFT_TOL,
        skipped: false,
        detail: format!("max relative drift {drift:e}"),
    }];
    if let (Some(a), Some(b)) = (report.s_collapse_numeric, report.s_collapse_quadrature) {
        checks.push(suite::Check {
            name: "collapse_time_agreement".into(),
            pass: (a - b).abs() <= EMDEN_COLLAPSE_TOL,
            skipped: false,
            detail: format!("integrated {a}, quadrature {b}"),
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    let json = JsonReport::<(), _, _> {
        case: None,
        params: EmdenRunParams {
            xi: params.xi,
            a0: params.a0,
            a1: params.a1,
            tol,
            t_end,
        },
        reports: EmdenReports {
            trajectory: TrajectorySummary {
                points: traj.states().len(),
                s_max: traj.s_max(),
                termination: traj.termination(),
                max_energy_drift: drift,
            },
            emden: report.clone(),
            checks,
        },
        pass,
    };
    let csv_path = write_file(out, "trajectory.csv", &csv)?;
    let json_path = write_file(out, "emden.json", &to_json(&json)?)?;
    let s_text = report
        .s_collapse_numeric
        .map_or(String::new(), |s| format!(", S = {s}"));
    Ok(Outcome {
        pass,
        summary: format!(
            "{:?}{s_text}; wrote {} and {}",
            report.classification,
            csv_path.display(),
            json_path.display()
        ),
    })
}

pub fn cmd_construct(cfg: &Block, out: &Path) -> Result<Outcome> {
    let case = cfg.solution_case()?;
    let grid = cfg.field_grid()?;
    let (traj, report) = analyze(case.emden(), 3.0 * grid.t1, cfg.tol()?)?;
    if let Some(s) = report.s_collapse_numeric {
        if 3.0 * grid.t1 >= s {
            return Err(invalid(format!(
                "grid reaches t = {} at or beyond the collapse time t = {}",
                grid.t1,
                s / 3.0
            )));
        }
    }
    let eta_b = case.support_eta();
    let rows: Vec<String> = (0..grid.nt)
        .into_par_iter()
        .map(|i| {
            let t = grid.t(i);
            let sf = ScaleFactor::at(&traj, t)?;
            let root = sf.a.cbrt();
            let mut rows = String::new();
            for j in 0..grid.nx {
                let x = grid.x(j);
                let eta = x / root;
                let inside = eta_b.is_none_or(|b| eta.abs() < b);
                let _ = writeln!(
                    rows,
                    "{},{},{},{},{},{inside}",
                    num(t),
                    num(x),
                    num(case.density_at(sf, x)),
                    num(case.velocity_at(sf, x)),
                    num(eta)
                );
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let csv = std::iter::once("t,x,rho,u,eta,in_support\n".to_owned())
        .chain(rows)
        .collect::<String>();
    let path = write_file(out, "fields.csv", &csv)?;
    Ok(Outcome {
        pass: true,
        summary: format!(
            "case {}: {}x{} samples; wrote {}",
            case.case_id(),
            grid.nt,
            grid.nx,
            path.display()
        ),
    })
}

pub fn cmd_verify(cfg: &Block, out: &Path, corrupt: Option<f64>) -> Result<Outcome> {
    let case = cfg.solution_case()?;
    let mut settings = cfg.verify_settings()?;
    if let Some(f) = corrupt {
        settings.velocity_scale = f;
    }
    let report = suite::run(&case, &settings)?;
    let path = write_file(out, "verify.json", &to_json(&report)?)?;
    for c in report.failed_checks() {
        eprintln!("chss: check failed: {}: {}", c.name, c.detail);
    }
    Ok(Outcome {
        pass: report.pass,
        summary: format!(
            "case {}: {}; wrote {}",
            case.case_id(),
            if report.pass {
                "all checks pass"
            } else {
                "verification FAILED"
            },
            path.display()
        ),
    })
}

pub const SWEEP_HEADER: &str =
    "case_id,sigma,xi,alpha,a0,a1,classification,S,theta,mass,rate_limit,all_pass,note";

fn sweep_row(case: &SolutionCase, result: &Result<VerificationReport>) -> String {
    let p = case.emden();
    let prefix = format!(
        "{},{},{},{},{},{}",
        case.case_id(),
        case.sigma(),
        num(case.xi()),
        num(case.alpha()),
        num(p.a0),
        num(p.a1)
    );
    let classification = match classify(p) {
        Classification::Collapse => "Collapse",
        Classification::Global => "Global",
    };
    match result {
        Ok(r) => {
            let e = &r.reports.emden;
            let mass = match r.reports.mass {
                MassValue::Finite(m) => num(m),
                MassValue::Divergent => "div".into(),
            };
            let rate = r.reports.blowup_rate.as_ref().map(|b| b.limit_extrapolated);
            let note = r
                .failed_checks()
                .map(|c| c.name.replace(',', ";"))
                .collect::<Vec<_>>()
                .join(";");
            format!(
                "{prefix},{classification},{},{},{mass},{},{},{note}",
                opt_num(e.s_collapse_numeric),
                num(e.theta),
                opt_num(rate),
                r.pass
            )
        }
        Err(err) => {
            let note = err.to_string().replace([',', '\n'], ";");
            format!(
                "{prefix},{classification},,{},,,false,error: {note}",
                num(p.theta())
            )
        }
    }
}

pub fn cmd_sweep(cfg: &config::ConfigFile, cli: &Block, out: &Path) -> Result<Outcome> {
    // Validate every block before any computation starts.
    let jobs = cfg
        .merged_cases()
        .iter()
        .enumerate()
        .map(|(i, block)| {
            let block = cli.over(block);
            let ctx = |e: Error| match e {
                Error::InvalidInput(m) => invalid(format!("case block {}: {m}", i + 1)),
                other => other,
            };
            Ok((
                block.solution_case().map_err(ctx)?,
                block.verify_settings().map_err(ctx)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<String> = jobs
        .par_iter()
        .map(|(case, settings)| sweep_row(case, &suite::run(case, settings)))
        .collect();
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        csv.push_str(r);
        csv.push('\n');
    }
    let path = write_file(out, "sweep.csv", &csv)?;
    Ok(Outcome {
        pass: true,
        summary: format!("{} cases; wrote {}", rows.len(), path.display()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_corrupt_flags() {
        assert_eq!(parse_grid("41, 21"), Ok((41, 21)));
        assert!(parse_grid("41").is_err());
        assert_eq!(parse_corrupt("u=1.01"), Ok(1.01));
        assert!(parse_corrupt("rho=2").is_err());
    }

    #[test]
    fn csv_numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.0), num(0.0));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with_args(["chss", "frobnicate"]), 1);
        assert_eq!(main_with_args(["chss", "verify"]), 1);
        assert_eq!(
            main_with_args(["chss", "verify", "--config", "/nonexistent/x.cfg"]),
            1
        );
    }
}
