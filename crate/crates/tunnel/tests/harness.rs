//! Scenario configuration, grids and file output.

use std::fs;

use ccs_core::WellParams;
use ccs_tunnel::harness::{classify_energies, make_grid, run_scenario, write_grid, EnergyClass};
use ccs_tunnel::{simulate, ExperimentConfig, Scenario};

fn config_in(dir: &std::path::Path, body: &str) -> ExperimentConfig {
    let text = format!("{body}\nout_dir = {}\n", dir.display());
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn preset_grid_sizes() {
    for (scenario, m) in [
        (Scenario::Fig2, 49),
        (Scenario::Fig3, 98),
        (Scenario::Fig4, 81),
        (Scenario::Fig5, 81),
    ] {
        let cfg = ExperimentConfig::preset(scenario);
        let (labels, occupied) = make_grid(&cfg.grid).unwrap();
        assert_eq!(labels.len(), m);
        let (q, p) = labels[occupied].qp();
        assert!((q - cfg.alpha().0).abs() < 1e-15 && p.abs() < 1e-15);
    }
}

#[test]
fn mirrored_grid_is_exactly_reflected_and_classified_alike() {
    let cfg = ExperimentConfig::preset(Scenario::Fig3);
    let (labels, _) = make_grid(&cfg.grid).unwrap();
    let half = labels.len() / 2;
    for i in 0..half {
        assert_eq!(labels[half + i], -labels[i]);
    }
    let classes = classify_energies(&labels, &cfg.params().unwrap());
    assert_eq!(classes[..half], classes[half..]);
}

#[test]
fn dense_grid_is_entirely_below_and_wide_grid_is_not() {
    let params = WellParams::new(1.0).unwrap();
    let (dense, _) = make_grid(&ExperimentConfig::preset(Scenario::Fig2).grid).unwrap();
    assert!(classify_energies(&dense, &params)
        .iter()
        .all(|&c| c == EnergyClass::Below));
    let (wide, _) = make_grid(&ExperimentConfig::preset(Scenario::Fig4).grid).unwrap();
    assert!(classify_energies(&wide, &params).contains(&EnergyClass::Above));
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for path in names {
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.d, 1.0);
        assert_eq!(cfg.dt, 0.05);
    }
}

#[test]
fn grid_report_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path(), "scenario = fig2");
    let report = write_grid(&cfg).unwrap();
    assert_eq!(report.labels.len(), 49);
    assert_eq!(report.below(), 49);
    let text = fs::read_to_string(&report.path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("label_index,q,p,energy,class,occupied"));
    assert_eq!(lines.clone().count(), 49);
    assert_eq!(lines.filter(|l| l.ends_with(",1")).count(), 1);
}

#[test]
fn runs_are_byte_identical() {
    let body = "scenario = custom\nnq = 3\nnp = 3\nt_final = 5\nsnapshot_times = 0, 2.5, 5";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, files_a) = run_scenario(&config_in(a.path(), body)).unwrap();
    let (_, files_b) = run_scenario(&config_in(b.path(), body)).unwrap();
    for (x, y) in [
        (&files_a.correlation, &files_b.correlation),
        (&files_a.snapshots, &files_b.snapshots),
        (&files_a.separatrix, &files_b.separatrix),
    ] {
        let bytes = fs::read(x).unwrap();
        assert!(!bytes.is_empty());
        assert!(!bytes.contains(&b'\r'));
        assert_eq!(bytes, fs::read(y).unwrap());
    }
    let corr = fs::read_to_string(&files_a.correlation).unwrap();
    assert!(corr.starts_with("t,re_c_ccs,im_c_ccs,abs_c_ccs,abs_c_ref,norm_ccs\n"));
    assert_eq!(corr.lines().count(), 1 + 101);
    let snaps = fs::read_to_string(&files_a.snapshots).unwrap();
    assert_eq!(snaps.lines().count(), 1 + 3 * 9);
}

#[test]
fn half_period_snapshot_populates_the_left_well() {
    let cfg = ExperimentConfig::preset(Scenario::Fig5);
    let outcome = simulate(&cfg).unwrap();
    assert_eq!(outcome.snapshots.len(), 2);
    let last = &outcome.snapshots[1];
    assert_eq!(last.t, 131.0);
    assert!(last
        .labels
        .iter()
        .zip(&last.coefficients)
        .any(|(z, a)| z.qp().0 < 0.0 && a.norm() > 0.0));
}
