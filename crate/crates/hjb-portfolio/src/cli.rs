//! Command orchestration: `alpha`, `solve`, `policy`, `check`.
//!
//! Exit codes: 0 success, 1 hypothesis check violated (`check` only),
//! 2 configuration or validation failure, 3 numerical failure,
//! 4 missing inputs. Output CSVs are deterministic: shortest round-trip
//! float formatting, no timestamps (the manifest carries the only
//! timestamp).

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::alpha::{build_alpha_table, AlphaFn, AlphaTable, DirectAlpha};
use crate::config::{AlphaMode, RunConfig};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::pde::{solve, PdeState, SolutionTrajectory};
use crate::policy::{diversification_report, reconstruct_policy, PolicyField, SnapshotField};
use crate::riccati::initial_condition;

#[derive(Parser)]
#[command(
    name = "hjb-portfolio",
    version,
    about = "Dynamic portfolio selection via the Riccati-transformed HJB equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the value function alpha(phi), its derivative and minimizer
    Alpha(CommonArgs),
    /// Solve the transformed PDE and write snapshot/diagnostic CSVs
    Solve(CommonArgs),
    /// Reconstruct optimal allocations from a solved run directory
    Policy(CommonArgs),
    /// Check the well-posedness hypotheses and the initial condition
    Check(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (alpha/check print to stdout without it; solve and
    /// policy require it)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress informational messages on stderr
    #[arg(long)]
    quiet: bool,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/version through this path
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Alpha(a) => cmd_alpha(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Policy(a) => cmd_policy(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::MissingInput(_) => 4,
        Error::Parse { .. } | Error::Validation(_) | Error::Io { .. } => 2,
        Error::QpNonConvergence { .. }
        | Error::PicardNonConvergence { .. }
        | Error::CflViolation { .. }
        | Error::BlowUp { .. }
        | Error::NotDiagonallyDominant { .. } => 3,
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig> {
    let cfg = RunConfig::from_path(&args.config)?;
    Ok(cfg)
}

fn note(args: &CommonArgs, msg: &str) {
    if !args.quiet {
        eprintln!("{msg}");
    }
}

fn warn_ridge(stats: &crate::market::AssetStats) {
    if let Some(eps) = stats.ridge_applied() {
        eprintln!(
            "WARNING: covariance was not strictly positive definite; \
             ridge regularization Sigma + {eps:e} I applied"
        );
    }
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f =
        fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// alpha
// ---------------------------------------------------------------------------

fn cmd_alpha(args: &CommonArgs) -> Result<i32> {
    let cfg = load_config(args)?;
    let stats = cfg.load_assets()?;
    warn_ridge(&stats);
    let set = cfg.decision_set(&stats)?;
    let t = &cfg.alpha_table;
    let table = build_alpha_table(&stats, &set, t.phi_min, t.phi_max, t.knots)?;
    let csv = alpha_csv(&table, stats.n_assets());
    match &args.out {
        Some(dir) => {
            ensure_out_dir(dir)?;
            let path = dir.join("alpha.csv");
            write_file(&path, &csv)?;
            note(args, &format!("wrote {}", path.display()));
        }
        None => print!("{csv}"),
    }
    Ok(0)
}

fn alpha_csv(table: &AlphaTable, n: usize) -> String {
    let mut out = String::from("phi,alpha,alpha_prime");
    for j in 1..=n {
        let _ = write!(out, ",theta_{j}");
    }
    out.push_str(",support_size\n");
    for e in table.evals() {
        let _ = write!(out, "{},{},{}", e.phi, e.alpha, e.alpha_prime);
        for t in &e.theta {
            let _ = write!(out, ",{t}");
        }
        let _ = writeln!(out, ",{}", e.active_support.len());
    }
    out
}

/// Parsed `alpha.csv` row.
#[derive(Debug, Clone)]
pub struct AlphaRow {
    pub phi: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub theta: Vec<f64>,
    pub support_size: usize,
}

pub fn read_alpha_csv(path: &Path) -> Result<Vec<AlphaRow>> {
    let lines = read_lines(path)?;
    let header = lines.first().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty alpha csv".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "phi" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected alpha csv header '{header}'"),
        });
    }
    let n = cols.len() - 4;
    let mut rows = Vec::new();
    for (i, line) in lines[1..].iter().enumerate() {
        let f = split_floats(line, i + 2)?;
        if f.len() != n + 4 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} fields, found {}", n + 4, f.len()),
            });
        }
        rows.push(AlphaRow {
            phi: f[0],
            alpha: f[1],
            alpha_prime: f[2],
            theta: f[3..3 + n].to_vec(),
            support_size: f[3 + n] as usize,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    artifact_version: &'a str,
    /// Seconds since the epoch; the only nondeterministic output field.
    created_unix: u64,
    config: &'a RunConfig,
    summary: RunSummary,
}

#[derive(Serialize)]
struct RunSummary {
    n_steps: usize,
    initial_mass: f64,
    final_mass: f64,
    max_rel_mass_drift: f64,
    min_phi_final: f64,
    max_phi_final: f64,
    max_picard_iters: usize,
}

fn cmd_solve(args: &CommonArgs) -> Result<i32> {
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Validation("solve requires --out <dir>".into()))?;
    let cfg = load_config(args)?;
    let stats = cfg.load_assets()?;
    warn_ridge(&stats);
    let set = cfg.decision_set(&stats)?;
    let grid = cfg.grid()?;
    let solver_cfg = cfg.solver_config()?;
    let spec = cfg.utility_spec()?;
    let phi0 = initial_condition(&spec, &grid)?;
    let times = cfg.snapshot_times();

    let table;
    let direct;
    let alpha: &dyn AlphaFn = match cfg.alpha_table.mode {
        AlphaMode::Table => {
            let t = &cfg.alpha_table;
            table = build_alpha_table(&stats, &set, t.phi_min, t.phi_max, t.knots)?;
            &table
        }
        AlphaMode::Direct => {
            direct = DirectAlpha::new(&stats, &set)?;
            &direct
        }
    };

    let traj = solve(&phi0, &grid, &solver_cfg, alpha, &times)?;

    ensure_out_dir(out)?;
    let snap_path = out.join("snapshots.csv");
    write_file(&snap_path, &snapshots_csv(&traj, &grid))?;
    let diag_path = out.join("diagnostics.csv");
    write_file(&diag_path, &diagnostics_csv(&traj))?;

    let final_state = traj.snapshots.last();
    let manifest = Manifest {
        schema_version: cfg.schema_version,
        artifact_version: env!("CARGO_PKG_VERSION"),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: &cfg,
        summary: RunSummary {
            n_steps: traj.steps.len(),
            initial_mass: traj.initial_mass,
            final_mass: traj
                .steps
                .last()
                .map(|s| s.mass)
                .unwrap_or(traj.initial_mass),
            max_rel_mass_drift: traj.max_rel_mass_drift,
            min_phi_final: final_state.map(|s| s.min()).unwrap_or(f64::NAN),
            max_phi_final: final_state.map(|s| s.max()).unwrap_or(f64::NAN),
            max_picard_iters: traj.steps.iter().map(|s| s.picard_iters).max().unwrap_or(0),
        },
    };
    let manifest_text = toml::to_string(&manifest)
        .map_err(|e| Error::Validation(format!("manifest serialization: {e}")))?;
    write_file(&out.join("manifest.toml"), &manifest_text)?;

    note(
        args,
        &format!(
            "wrote {}, {} and manifest.toml ({} steps, mass drift {:.3e})",
            snap_path.display(),
            diag_path.display(),
            traj.steps.len(),
            traj.max_rel_mass_drift
        ),
    );
    Ok(0)
}

fn snapshots_csv(traj: &SolutionTrajectory, grid: &Grid1D) -> String {
    let mut out = String::from("tau,x,phi\n");
    for snap in &traj.snapshots {
        for (i, &v) in snap.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", snap.tau, grid.center(i), v);
        }
    }
    out
}

fn diagnostics_csv(traj: &SolutionTrajectory) -> String {
    let mut out = String::from("tau,dt,mass,min_phi,max_phi,picard_iters\n");
    for s in &traj.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.tau, s.dt, s.mass, s.min_phi, s.max_phi, s.picard_iters
        );
    }
    out
}

/// Parsed `diagnostics.csv` row.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRow {
    pub tau: f64,
    pub dt: f64,
    pub mass: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub picard_iters: usize,
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRow>> {
    let lines = read_lines(path)?;
    expect_header(&lines, "tau,dt,mass,min_phi,max_phi,picard_iters")?;
    let mut rows = Vec::new();
    for (i, line) in lines[1..].iter().enumerate() {
        let f = split_floats(line, i + 2)?;
        if f.len() != 6 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected 6 fields, found {}", f.len()),
            });
        }
        rows.push(DiagnosticsRow {
            tau: f[0],
            dt: f[1],
            mass: f[2],
            min_phi: f[3],
            max_phi: f[4],
            picard_iters: f[5] as usize,
        });
    }
    Ok(rows)
}

/// Read a long-format `tau,x,phi` snapshot file back into per-time fields,
/// preserving the written order.
pub fn read_snapshots_csv(path: &Path) -> Result<Vec<SnapshotField>> {
    let lines = read_lines(path)?;
    expect_header(&lines, "tau,x,phi")?;
    let mut fields: Vec<SnapshotField> = Vec::new();
    for (i, line) in lines[1..].iter().enumerate() {
        let f = split_floats(line, i + 2)?;
        if f.len() != 3 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected 3 fields, found {}", f.len()),
            });
        }
        let (tau, x, phi) = (f[0], f[1], f[2]);
        match fields.last_mut() {
            Some(last) if last.tau == tau => {
                last.x.push(x);
                last.phi.push(phi);
            }
            _ => fields.push(SnapshotField {
                tau,
                x: vec![x],
                phi: vec![phi],
            }),
        }
    }
    if fields.is_empty() {
        return Err(Error::Parse {
            line: 1,
            msg: "snapshot file has no data rows".into(),
        });
    }
    Ok(fields)
}

// ---------------------------------------------------------------------------
// policy
// ---------------------------------------------------------------------------

fn cmd_policy(args: &CommonArgs) -> Result<i32> {
    let out = args
        .out
        .as_ref()
        .ok_or_else(|| Error::Validation("policy requires --out <dir> (a solved run directory)".into()))?;
    let cfg = load_config(args)?;
    let stats = cfg.load_assets()?;
    warn_ridge(&stats);
    let set = cfg.decision_set(&stats)?;

    let snap_path = out.join("snapshots.csv");
    if !snap_path.exists() {
        return Err(Error::MissingInput(format!(
            "{} (run `solve` into this directory first)",
            snap_path.display()
        )));
    }
    let fields = read_snapshots_csv(&snap_path)?;
    let field = reconstruct_policy(&fields, &stats, &set, cfg.policy.support_threshold)?;
    if field.nonpositive_phi_points > 0 {
        eprintln!(
            "WARNING: {} grid points had phi <= 0; zero-limit policy substituted",
            field.nonpositive_phi_points
        );
    }
    let policy_path = out.join("policy.csv");
    write_file(&policy_path, &policy_csv(&field))?;
    let div_path = out.join("diversification.csv");
    write_file(&div_path, &diversification_csv(&field))?;
    note(
        args,
        &format!(
            "wrote {} and {}",
            policy_path.display(),
            div_path.display()
        ),
    );
    Ok(0)
}

fn policy_csv(field: &PolicyField) -> String {
    let mut out = String::from("tau,x");
    for j in 1..=field.n_assets {
        let _ = write!(out, ",theta_{j}");
    }
    out.push_str(",support,entropy\n");
    for p in &field.points {
        let _ = write!(out, "{},{}", p.tau, p.x);
        for t in &p.theta {
            let _ = write!(out, ",{t}");
        }
        let _ = writeln!(out, ",{},{}", p.support, p.entropy);
    }
    out
}

fn diversification_csv(field: &PolicyField) -> String {
    let mut out = String::from(
        "tau,min_entropy,mean_entropy,max_entropy,min_support,mean_support,max_support\n",
    );
    for r in diversification_report(field) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.tau,
            r.min_entropy,
            r.mean_entropy,
            r.max_entropy,
            r.min_support,
            r.mean_support,
            r.max_support
        );
    }
    out
}

/// Parsed `policy.csv` row.
#[derive(Debug, Clone)]
pub struct PolicyRow {
    pub tau: f64,
    pub x: f64,
    pub theta: Vec<f64>,
    pub support: usize,
    pub entropy: f64,
}

pub fn read_policy_csv(path: &Path) -> Result<Vec<PolicyRow>> {
    let lines = read_lines(path)?;
    let header = lines.first().ok_or_else(|| Error::Parse {
        line: 1,
        msg: "empty policy csv".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 || cols[0] != "tau" || cols[1] != "x" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected policy csv header '{header}'"),
        });
    }
    let n = cols.len() - 4;
    let mut rows = Vec::new();
    for (i, line) in lines[1..].iter().enumerate() {
        let f = split_floats(line, i + 2)?;
        if f.len() != n + 4 {
            return Err(Error::Parse {
                line: i + 2,
                msg: format!("expected {} fields, found {}", n + 4, f.len()),
            });
        }
        rows.push(PolicyRow {
            tau: f[0],
            x: f[1],
            theta: f[2..2 + n].to_vec(),
            support: f[2 + n] as usize,
            entropy: f[3 + n],
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(args: &CommonArgs) -> Result<i32> {
    let cfg = load_config(args)?;
    let stats = cfg.load_assets()?;
    warn_ridge(&stats);
    let grid = cfg.grid()?;
    let drift = cfg.drift_profile()?;

    let mut violations: Vec<String> = Vec::new();

    let report = crate::market::check_assumptions(&stats, Some(&drift), &grid);
    println!("assumption report on [{}, {}]:", grid.x_min(), grid.x_max());
    println!("  p_linf   = {}", report.p_linf);
    println!("  p_l2     = {}", report.p_l2);
    println!("  h_linf   = {}", report.h_linf);
    println!("  h_xx_l2  = {}", report.h_xx_l2);
    for n in &report.notes {
        println!("  note: {n}");
    }
    if !report.plausible {
        violations.push("auxiliary-function norms are not finite".into());
    }

    // phi0 must be admissible on this grid
    match cfg.utility_spec().and_then(|spec| initial_condition(&spec, &grid)) {
        Ok(phi0) => {
            println!(
                "  phi0     : {} cells in [{}, {}]",
                phi0.values.len(),
                phi0.min(),
                phi0.max()
            );
        }
        Err(e) => violations.push(format!("initial condition: {e}")),
    }

    if violations.is_empty() {
        println!("hypotheses numerically plausible: PASS");
        if let Some(dir) = &args.out {
            ensure_out_dir(dir)?;
            write_file(&dir.join("assumptions.csv"), &assumptions_csv(&report, &grid))?;
        }
        Ok(0)
    } else {
        println!("hypotheses violated: FAIL");
        for v in &violations {
            println!("  - {v}");
        }
        Ok(1)
    }
}

fn assumptions_csv(report: &crate::market::AssumptionReport, grid: &Grid1D) -> String {
    let mut out = String::from("x,p,h\n");
    for (i, &x) in grid.centers().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", x, report.p_values[i], report.h_values[i]);
    }
    out
}

// ---------------------------------------------------------------------------
// shared csv helpers
// ---------------------------------------------------------------------------

fn read_lines(path: &Path) -> Result<Vec<String>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.display().to_string()));
    }
    let f = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    BufReader::new(f)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn expect_header(lines: &[String], expected: &str) -> Result<()> {
    match lines.first() {
        Some(h) if h == expected => Ok(()),
        Some(h) => Err(Error::Parse {
            line: 1,
            msg: format!("expected header '{expected}', got '{h}'"),
        }),
        None => Err(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        }),
    }
}

fn split_floats(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("cannot parse '{}'", s.trim()),
            })
        })
        .collect()
}

/// Snapshot output as written by `solve` (exposed for the library surface).
pub fn snapshots_to_csv(traj: &SolutionTrajectory, grid: &Grid1D) -> String {
    snapshots_csv(traj, grid)
}

/// Re-parse helper used in self-consumption tests.
pub fn state_fields(traj: &SolutionTrajectory, grid: &Grid1D) -> Vec<SnapshotField> {
    traj.snapshots
        .iter()
        .map(|s: &PdeState| SnapshotField {
            tau: s.tau,
            x: grid.centers(),
            phi: s.values.clone(),
        })
        .collect()
}
