//! Batch entry point: scenario ingestion, seeded sampling campaigns,
//! invariant-suite execution, and machine-readable reporting.
//!
//! Exit codes: 0 all checks passed, 1 invariant failure or math error,
//! 2 scenario parse/validation error.

mod invariants;
mod report;
mod scenario_file;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use report::{ConventionConstants, CurvatureReport, InvariantResult, Timing};
use scenario_file::ScenarioFile;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Environment variable naming the default output directory for reports.
const OUT_DIR_ENV: &str = "KOSZUL_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "koszul",
    about = "Odd symplectic supergeometry engine: scenario verification, \
             sampling campaigns, and constraint certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full invariant suite on a scenario file.
    Verify {
        file: PathBuf,
        /// Write the report to this path (default: $KOSZUL_OUT_DIR/<name>.verify.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the identity tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sample superconnections and report the scalar supercurvature.
    Scalar {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the forced-vanishing certificate for the scenario's frame.
    Forced {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample one superconnection and write its tensors.
    Sample {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { file, out, tol } => cmd_verify(&file, out, tol),
        Command::Scalar {
            file,
            seed,
            count,
            out,
        } => cmd_scalar(&file, seed, count, out),
        Command::Forced { file, out } => cmd_forced(&file, out),
        Command::Sample { file, seed, out } => cmd_sample(&file, seed, out),
    }
}

fn load(path: &Path) -> Result<ScenarioFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .map_err(|e| format!("{}: parse error at line {}, column {}: {e}", path.display(), e.line(), e.column()))?;
    file.validate()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(file)
}

fn output_path(cli_out: Option<PathBuf>, name: &str, command: &str) -> Option<PathBuf> {
    if cli_out.is_some() {
        return cli_out;
    }
    std::env::var_os(OUT_DIR_ENV)
        .map(|dir| PathBuf::from(dir).join(format!("{name}.{command}.json")))
}

fn write_report(report: &CurvatureReport, path: Option<PathBuf>) -> i32 {
    if let Some(path) = path {
        if let Some(parent) = path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        if let Err(e) = std::fs::write(&path, json) {
            eprintln!("cannot write report to {}: {e}", path.display());
            return 1;
        }
        println!("report written to {}", path.display());
    }
    0
}

fn print_invariants(invariants: &[InvariantResult]) {
    for inv in invariants {
        let status = if inv.passed { "PASS" } else { "FAIL" };
        let details = inv
            .details
            .as_deref()
            .map(|d| format!("  ({d})"))
            .unwrap_or_default();
        println!(
            "{status}  {:<38} residual {:>12.3e}  tol {:>9.1e}{details}",
            inv.name, inv.residual, inv.tolerance
        );
    }
}

fn timing(start: Instant) -> Option<Timing> {
    Some(Timing {
        started_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        wall_clock_ms: start.elapsed().as_millis(),
    })
}

fn base_report(file: &ScenarioFile, command: &str) -> CurvatureReport {
    CurvatureReport {
        version: "koszul-report/1".into(),
        command: command.into(),
        scenario: file.scenario.name.clone(),
        h_symmetry: format!("{:?}", file.scenario.h_symmetry).to_lowercase(),
        dimension: file.scenario.dimension,
        seed: file.sampler.seed,
        count: file.sampler.count,
        tolerances: file.tolerances,
        conventions: ConventionConstants::default(),
        runs: Vec::new(),
        invariants: Vec::new(),
        passed: true,
        timing: None,
    }
}

fn cmd_verify(path: &Path, out: Option<PathBuf>, tol: Option<f64>) -> i32 {
    let start = Instant::now();
    let mut file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    if let Some(t) = tol {
        file.tolerances.identity = t;
    }
    let points = file.points();
    let results: Vec<_> = points
        .par_iter()
        .map(|p| invariants::run_point(&file, p))
        .collect();
    let mut report = base_report(&file, "verify");
    let mut lists = vec![invariants::run_global(file.scenario.dimension, file.sampler.seed)];
    for r in results {
        match r {
            Ok((run, invs)) => {
                report.runs.push(run);
                lists.push(invs);
            }
            Err(e) => {
                eprintln!("scenario evaluation failed: {e}");
                return 1;
            }
        }
    }
    report.invariants = invariants::merge_invariants(lists);
    report.passed = report.invariants.iter().all(|i| i.passed);
    report.timing = timing(start);
    print_invariants(&report.invariants);
    let rc = write_report(&report, output_path(out, &report.scenario, "verify"));
    if rc != 0 {
        return rc;
    }
    if report.passed {
        println!("verify: all {} invariants passed", report.invariants.len());
        0
    } else {
        let failing: Vec<_> = report
            .invariants
            .iter()
            .filter(|i| !i.passed)
            .map(|i| format!("{} (residual {:.3e})", i.name, i.residual))
            .collect();
        eprintln!("verify: failing invariants: {}", failing.join(", "));
        1
    }
}

fn cmd_scalar(path: &Path, seed: u64, count: usize, out: Option<PathBuf>) -> i32 {
    let start = Instant::now();
    let mut file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    file.sampler.seed = seed;
    file.sampler.count = count;
    let mut report = base_report(&file, "scalar");
    let definite = file.scenario.h_symmetry != koszul_core::scenario::HSymmetry::Generic;
    let mut worst = 0.0f64;
    let mut all_values: Vec<f64> = Vec::new();
    for point in file.points() {
        let scenario = file.scenario_at(&point);
        let frame = match scenario.build_frame() {
            Ok(f) => f,
            Err(e) => {
                eprintln!("scenario evaluation failed: {e}");
                return 1;
            }
        };
        let data = match invariants::sample_campaign(&frame, seed, count) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("sampling failed: {e}");
                return 1;
            }
        };
        let mut run = report::PointRun {
            point: point.clone(),
            nabla_h_residual: frame.check_nabla_h(),
            curvature_norm: koszul_core::frame::max_abs4(&frame.r),
            forced: None,
            symmetry_residual: None,
            compatibility_residual: None,
            named_tensor_norms: None,
            scalar_samples: Vec::new(),
        };
        if count > 0 {
            let (_, samples, norms) = invariants::supercurv_invariants(
                &frame,
                &data,
                file.scenario.h_symmetry,
                &file.tolerances,
            );
            for s in &samples {
                worst = worst.max(s.scal.abs());
                all_values.push(s.scal);
                for v in &s.degree1 {
                    worst = worst.max(v.abs());
                    all_values.push(*v);
                }
            }
            run.scalar_samples = samples;
            run.named_tensor_norms = norms;
        }
        report.runs.push(run);
    }
    if definite && count > 0 {
        report.invariants.push(InvariantResult::new(
            "supercurv/scal-vanishing",
            worst,
            file.tolerances.identity,
        ));
    } else {
        let (lo, hi) = all_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let summary = if all_values.is_empty() {
            "no samples requested".to_string()
        } else {
            format!("values in [{lo:.3e}, {hi:.3e}], reported without assertion")
        };
        report
            .invariants
            .push(InvariantResult::new("supercurv/scal-reported", 0.0, 0.0).with_details(summary));
    }
    report.passed = report.invariants.iter().all(|i| i.passed);
    report.timing = timing(start);
    print_invariants(&report.invariants);
    match (definite, count) {
        (true, c) if c > 0 => println!("scalar: max |Scal| = {worst:.3e} over {c} samples/point"),
        (_, 0) => println!("scalar: empty campaign"),
        _ => println!("scalar: values reported (generic H, no assertion)"),
    }
    let rc = write_report(&report, output_path(out, &report.scenario, "scalar"));
    if rc != 0 {
        return rc;
    }
    if report.passed {
        0
    } else {
        1
    }
}

fn cmd_forced(path: &Path, out: Option<PathBuf>) -> i32 {
    let start = Instant::now();
    let file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let mut report = base_report(&file, "forced");
    for point in file.points() {
        let scenario = file.scenario_at(&point);
        let frame = match scenario.build_frame() {
            Ok(f) => f,
            Err(e) => {
                eprintln!("scenario evaluation failed: {e}");
                return 1;
            }
        };
        let cert = match koszul_core::superconn::forced_vanishing_check(&frame) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("forced-vanishing check failed: {e}");
                return 1;
            }
        };
        println!(
            "point {:?}: K1=K2=L3 forced to 0 (max component {:.3e}); K3 free dimension = {}",
            point, cert.k1_k2_l3_max, cert.k3_free_dim
        );
        let mut residual = cert.k1_k2_l3_max;
        if cert.k3_free_dim != cert.expected_k3_dim {
            residual = f64::INFINITY;
        }
        report.invariants.push(
            InvariantResult::new("superconn/forced-vanishing", residual, 1e-10).with_details(
                format!(
                    "K3 free dimension = {} (expected {})",
                    cert.k3_free_dim, cert.expected_k3_dim
                ),
            ),
        );
        report.runs.push(report::PointRun {
            point,
            nabla_h_residual: frame.check_nabla_h(),
            curvature_norm: koszul_core::frame::max_abs4(&frame.r),
            forced: Some(cert),
            symmetry_residual: None,
            compatibility_residual: None,
            named_tensor_norms: None,
            scalar_samples: Vec::new(),
        });
    }
    report.invariants = invariants::merge_invariants(vec![report.invariants.clone()]);
    report.passed = report.invariants.iter().all(|i| i.passed);
    report.timing = timing(start);
    let rc = write_report(&report, output_path(out, &report.scenario, "forced"));
    if rc != 0 {
        return rc;
    }
    if report.passed {
        0
    } else {
        1
    }
}

fn cmd_sample(path: &Path, seed: u64, out: Option<PathBuf>) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let frame = match file.scenario.build_frame() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("scenario evaluation failed: {e}");
            return 1;
        }
    };
    let tensors = match koszul_core::superconn::sample_fedosov(&frame, seed) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("sampling failed: {e}");
            return 1;
        }
    };
    let json = serde_json::to_string_pretty(&tensors).expect("tensors serialize");
    match output_path(out, &file.scenario.name, &format!("sample-{seed}")) {
        Some(path) => {
            if let Some(parent) = path.parent() {
                let _ = std::fs::create_dir_all(parent);
            }
            if let Err(e) = std::fs::write(&path, json) {
                eprintln!("cannot write {}: {e}", path.display());
                return 1;
            }
            println!("tensors written to {}", path.display());
        }
        None => println!("{json}"),
    }
    0
}
