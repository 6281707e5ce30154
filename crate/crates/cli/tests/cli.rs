use std::path::Path;
use std::process::Command;

use readout_sim::config::PRESETS;
use readout_sim::{preset, run, run_scenario, CliError, Format, ResultBundle, Scenario, ScenarioConfig};
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_readout-sim"))
}

fn small(scenario: Scenario) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(scenario);
    c.sweep.shots_per_state = 2000;
    c.sweep.trials = 2;
    c.sweep.ramsey_shots_per_point = 1000;
    c.shots.count = 2000;
    c.shots.bootstrap_resamples = 100;
    c.shots.alpha2_values = vec![1.0, 2.5];
    c.chain.gain_points = 3;
    c.flux.flux_points = 41;
    c.network.probe_points = 11;
    c.network.phase_points = 8;
    c
}

fn csv_digest(dir: &Path) -> String {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.file_name().unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(f).unwrap());
    }
    hex::encode(h.finalize())
}

#[test]
fn every_scenario_runs_on_small_inputs() {
    for s in [
        Scenario::Spectroscopy,
        Scenario::Scattering,
        Scenario::OccupancyVsPhase,
        Scenario::EfficiencyCurve,
        Scenario::RamseySweep,
        Scenario::ReadoutShots,
        Scenario::Fidelity,
        Scenario::ClosureTest,
    ] {
        let b = run_scenario(&small(s)).unwrap_or_else(|e| panic!("{}: {e}", s.name()));
        assert!(!b.tables.is_empty(), "{}", s.name());
        for key in ["tool_version", "config_hash", "master_seed", "wall_time_s", "results"] {
            assert!(b.metadata.contains_key(key), "{}: missing {key}", s.name());
        }
    }
}

#[test]
fn efficiency_curve_schema() {
    let b = run_scenario(&small(Scenario::EfficiencyCurve)).unwrap();
    let t = b.table("efficiency").unwrap();
    assert_eq!(t.columns(), ["gain_db", "eta_model", "eta_estimated", "sigma"]);
    assert_eq!(t.n_rows(), 3);
}

#[test]
fn directional_curve_rises_toward_plateau() {
    let mut c = preset("directional_efficiency").unwrap().config;
    c.chain.estimate = false;
    c.chain.gain_points = 22;
    let b = run_scenario(&c).unwrap();
    let t = b.table("efficiency").unwrap();
    let (g, eta) = (t.column("gain_db").unwrap(), t.column("eta_model").unwrap());
    assert!(eta.windows(2).all(|w| w[1] > w[0]));
    let at15 = eta[g.iter().position(|&x| x == 15.0).unwrap()];
    assert!((0.67..=0.77).contains(&at15), "{at15}");
}

#[test]
fn closure_is_exact_without_loss_or_relaxation() {
    let text = "scenario = \"closure_test\"\n[readout]\neta_m = 1.0\nt1_us = inf\n[sweep]\ntrials = 3\nshots_per_state = 4000\n";
    let loaded = ScenarioConfig::parse(text).unwrap();
    let b = run(&loaded).unwrap();
    let t = b.table("trials").unwrap();
    for z in t.column("z_eta").unwrap() {
        assert!(z.abs() < 3.0, "z = {z}");
    }
}

#[test]
fn same_seed_gives_identical_tables_and_hash() {
    let c = small(Scenario::ReadoutShots);
    let a = run_scenario(&c).unwrap();
    let b = run_scenario(&c).unwrap();
    assert_eq!(a.tables, b.tables);
    assert_eq!(a.metadata["config_hash"], b.metadata["config_hash"]);
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(run_scenario(&other).unwrap().tables, a.tables);
}

#[test]
fn emitted_csv_and_json_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let b = run_scenario(&small(Scenario::Scattering)).unwrap();
    for format in [Format::Csv, Format::Json] {
        let out = dir.path().join(format!("{format:?}"));
        b.emit(&out, format).unwrap();
        let back = ResultBundle::load(&out, format).unwrap();
        assert_eq!(back.metadata, b.metadata);
        for (name, t) in &b.tables {
            assert!(back.tables[name].same_values(t), "{format:?}/{name}");
        }
    }
    let json = std::fs::read_to_string(dir.path().join("Json/bundle.json")).unwrap();
    assert_eq!(ResultBundle::from_json(&json).unwrap().to_json(), json);
}

#[test]
fn config_round_trips_through_serialization() {
    for (name, _) in PRESETS {
        let c = preset(name).unwrap().config;
        assert_eq!(ScenarioConfig::parse(&c.to_toml()).unwrap().config, c, "{name}");
    }
}

#[test]
fn binary_writes_byte_identical_csv_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let status = bin()
            .args(["--scenario", "readout_shots", "--seed", "11", "--quiet", "--out"])
            .arg(&out)
            .env("READOUT_SIM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        digests.push(csv_digest(&out));
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");

    std::fs::write(&cfg, "scenario = \"fidelity\"\n[readout]\nkappa = 2.58\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa_mhz"));

    std::fs::write(&cfg, "scenario = \"occupancy_vs_phase\"\n[network]\nkind = \"converter\"\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin().arg("--config").arg(dir.path().join("missing.cfg")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = bin().args(["--preset", "circulator", "--quiet", "--out"]).arg(blocker.join("sub")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn model_errors_map_to_exit_codes() {
    use readout_core::Error;
    let model = |source| CliError::Model { scenario: "scattering", source };
    let unstable = Error::Instability { drive: "gain b-b".into(), max_real_part: 1.0 };
    assert_eq!(model(unstable).exit_code(), 2);
    assert_eq!(model(Error::Fit("x".into())).exit_code(), 2);
    assert_eq!(model(Error::Configuration("x".into())).exit_code(), 1);
}
