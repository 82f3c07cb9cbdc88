//! Runs every acceptance criterion at its stated size and prints one line
//! per criterion. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use sirw::harness::{default_config, execute, list_experiments, Check, Report, RunOptions};

const CRITERIA: [(u32, &str); 13] = [
    (1, "identity_suite"),
    (2, "oracle_equivalence"),
    (3, "polya_beta_limit"),
    (4, "weak_reinforcement_ratio"),
    (5, "strong_monopoly"),
    (6, "vrrw_five_site"),
    (7, "volkov_dichotomy"),
    (8, "esirw_attracting_edge"),
    (9, "coupling_monotonicity"),
    (10, "kendall_transform"),
    (11, "martingale_means"),
    (12, "sellke_parity"),
    (13, "predicate_suite"),
];

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{}", (x * 1e6).round() / 1e6)
    }
}

fn describe(c: &Check) -> String {
    let rel = serde_json::to_value(c.relation).unwrap();
    format!("{} = {} ({} {})", c.name, num(c.value), rel.as_str().unwrap_or("?"), num(c.threshold))
}

fn line(n: u32, name: &str, passed: bool, seconds: f64, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} {name:<26} {verdict}  [{seconds:.1} s] {detail}");
}

fn run(id: &str) -> Result<Report, String> {
    let config = default_config(id).map_err(|e| e.to_string())?;
    execute(&config, &RunOptions::default()).map(|(r, _)| r).map_err(|e| e.to_string())
}

/// Same config and seed, sequential and parallel, full size for the
/// cheaper experiments and reduced size for the rest.
fn determinism() -> Result<(), String> {
    for info in list_experiments() {
        let mut config = info.default_config.clone();
        let full = ["polya_beta_limit", "kendall_transform", "predicate_suite", "oracle_equivalence"];
        if !full.contains(&info.id) {
            config.replications = config.replications.min(16);
            config.steps = config.steps.min(5000);
            if let Some(cps) = config.params.checkpoints.as_mut() {
                cps.iter_mut().for_each(|c| *c = (*c).min(config.steps));
            }
            if let Some(k) = config.params.contrast_replications.as_mut() {
                *k = (*k).min(16);
            }
        }
        let seq = execute(&config, &RunOptions { parallel: Some(1) }).map_err(|e| e.to_string())?;
        let par = execute(&config, &RunOptions { parallel: Some(4) }).map_err(|e| e.to_string())?;
        if seq.0.to_json() != par.0.to_json() {
            return Err(format!("{}: report differs across parallelism", info.id));
        }
        let csv = |t: &[sirw::harness::Table]| t.iter().map(|t| t.to_csv()).collect::<Vec<_>>();
        if csv(&seq.1) != csv(&par.1) {
            return Err(format!("{}: tables differ across parallelism", info.id));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for (n, id) in CRITERIA {
        let start = Instant::now();
        let outcome = run(id);
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(report) => {
                let detail = if report.passed {
                    report.checks.iter().map(describe).collect::<Vec<_>>().join("; ")
                } else {
                    report.failed_checks().map(describe).collect::<Vec<_>>().join("; ")
                };
                line(n, id, report.passed, secs, &detail);
                if !report.passed {
                    failed.push(n);
                }
            }
            Err(e) => {
                line(n, id, false, secs, &format!("error: {e}"));
                failed.push(n);
            }
        }
    }
    let start = Instant::now();
    let det = determinism();
    let secs = start.elapsed().as_secs_f64();
    match &det {
        Ok(()) => line(14, "determinism", true, secs, "byte-identical across parallelism 1 and 4"),
        Err(e) => {
            line(14, "determinism", false, secs, e);
            failed.push(14);
        }
    }
    println!("acceptance: {} of 14 criteria passed", 14 - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
