use std::fs;
use std::path::PathBuf;

use sirw::harness::{default_config, execute, list_experiments, run_experiment, ExperimentConfig, Format, RunOptions};

fn small(id: &str) -> ExperimentConfig {
    let mut c = default_config(id).unwrap();
    c.replications = c.replications.min(12);
    c.steps = c.steps.min(3000);
    if let Some(k) = c.params.contrast_replications.as_mut() {
        *k = (*k).min(12);
    }
    if let Some(k) = c.params.contrast_steps.as_mut() {
        *k = (*k).min(3000);
    }
    if let Some(cps) = c.params.checkpoints.as_mut() {
        for cp in cps.iter_mut() {
            *cp = (*cp).min(c.steps);
        }
    }
    c.output.format = Format::Both;
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("sirw-determinism-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn read_dir_sorted(d: &PathBuf) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(d)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reports_are_byte_identical_across_parallelism() {
    for info in list_experiments() {
        let config = small(&info.id);
        let (r1, t1) = execute(&config, &RunOptions { parallel: Some(1) }).unwrap();
        let (r2, t2) = execute(&config, &RunOptions { parallel: Some(3) }).unwrap();
        let (r3, _) = execute(&config, &RunOptions { parallel: None }).unwrap();
        assert_eq!(r1.to_json(), r2.to_json(), "{}", info.id);
        assert_eq!(r1.to_json(), r3.to_json(), "{}", info.id);
        let csv = |ts: &[sirw::harness::Table]| ts.iter().map(|t| t.to_csv()).collect::<Vec<_>>();
        assert_eq!(csv(&t1), csv(&t2), "{}", info.id);
    }
}

#[test]
fn written_outputs_are_byte_identical() {
    let mut config = small("coupling_monotonicity");
    let a = scratch("a");
    let b = scratch("b");
    config.output.dir = Some(a.clone());
    run_experiment(&config, &RunOptions { parallel: Some(1) }).unwrap();
    config.output.dir = Some(b.clone());
    run_experiment(&config, &RunOptions { parallel: Some(2) }).unwrap();
    let fa = read_dir_sorted(&a);
    let fb = read_dir_sorted(&b);
    assert!(fa.iter().any(|(n, _)| n == "coupling_monotonicity.json"));
    assert!(fa.iter().any(|(n, _)| n.ends_with(".csv")));
    // the config echoed in the report carries the output dir
    let strip = |files: Vec<(String, Vec<u8>)>, dir: &PathBuf| -> Vec<(String, String)> {
        files
            .into_iter()
            .map(|(n, bytes)| (n, String::from_utf8(bytes).unwrap().replace(&*dir.to_string_lossy(), "<dir>")))
            .collect()
    };
    assert_eq!(strip(fa, &a), strip(fb, &b));
    let _ = fs::remove_dir_all(&a);
    let _ = fs::remove_dir_all(&b);
}

#[test]
fn different_seeds_give_different_reports() {
    let mut config = small("polya_beta_limit");
    let (r1, _) = execute(&config, &RunOptions::default()).unwrap();
    config.seed += 1;
    let (r2, _) = execute(&config, &RunOptions::default()).unwrap();
    assert_ne!(r1.to_json(), r2.to_json());
}

#[test]
fn single_replication_without_steps() {
    for id in ["identity_suite", "polya_beta_limit", "coupling_monotonicity", "vrrw_five_site", "predicate_suite"] {
        let mut config = default_config(id).unwrap();
        config.replications = 1;
        config.steps = 0;
        let (report, _) = execute(&config, &RunOptions::default()).unwrap();
        assert_eq!(report.metadata.replications, 1, "{id}");
        assert_eq!(report.metadata.seed, config.seed);
        assert!(!report.metadata.crate_version.is_empty());
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert!(json["metadata"].is_object() && json["checks"].is_array(), "{id}");
    }
}

#[test]
fn catalog_ids_round_trip_through_json() {
    let ids: Vec<String> = list_experiments().into_iter().map(|e| e.id.to_string()).collect();
    assert!(ids.iter().any(|i| i == "polya_beta_limit"));
    assert!(ids.iter().any(|i| i == "coupling_monotonicity"));
    for id in ids {
        let c = default_config(&id).unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }
}
