//! Scenario dispatch. Each scenario turns a validated config into tables and
//! scalar results; rates in tables are in 1/us, frequencies in GHz or MHz
//! (as `omega / 2pi`), phases in radians.
//!
//! | scenario             | tables                                      |
//! |----------------------|---------------------------------------------|
//! | `spectroscopy`       | `branches`, `bare`, `ladder`                |
//! | `scattering`         | `s_parameters`                              |
//! | `occupancy_vs_phase` | `occupancy`                                 |
//! | `efficiency_curve`   | `efficiency`                                |
//! | `ramsey_sweep`       | `ramsey`, `gamma2`                          |
//! | `readout_shots`      | `shots`, `histogram`                        |
//! | `fidelity`           | `fidelity`                                  |
//! | `closure_test`       | `trials`, `gamma2`, `gamma_m`               |

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use readout_core::coupled_mode::presets::{
    circulator, two_mode_converter, DirectionalAmplifier, ISOLATING_LOOP_PHASE, LOOP_PHASE_DRIVE,
};
use readout_core::coupled_mode::{mode_occupancy_from_noise, scattering_matrix, stability_margin, uniform_baths, NetworkSpec};
use readout_core::dephasing::{dephasing_meas, fidelity_model};
use readout_core::estimation::{
    analyze_sweep, bootstrap_uncertainty, extract_gamma2, histogram_fidelity, weighted_linear_fit, RatePoint,
};
use readout_core::flux_tuning::{flux_sweep, ladder_frequencies, squid_frequency, FluxTuneParams, SpuriousLadder, SweepModel, TunableMode};
use readout_core::noise_cascade::{propagate, ChainTemplate, GainKind, TemplateStage};
use readout_core::rng::SeedSpec;
use readout_core::stochastic::{
    predicted_gamma2, ramsey_delays, readout_warnings, simulate_ramsey, simulate_shots, sweep_measurement_strength,
    QubitState, ShotOptions, ShotRecord, SweepConfig,
};
use readout_core::Error;
use serde_json::{json, Map, Value};

use crate::bundle::{num, ResultBundle, Table};
use crate::config::{ghz, linspace, mhz, us, ChainKind, NetworkKind, Scenario, ScenarioConfig, VariableGain};

const PER_US: f64 = 1e-6;

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    seed: SeedSpec,
    tables: Vec<(&'static str, Table)>,
    results: Map<String, Value>,
    warnings: Vec<String>,
}

impl Run<'_> {
    fn result(&mut self, key: &str, v: impl Into<Value>) {
        self.results.insert(key.to_string(), v.into());
    }

    fn value(&mut self, key: &str, v: f64) {
        self.results.insert(key.to_string(), num(v));
    }

    fn warn(&mut self, w: impl IntoIterator<Item = String>) {
        for w in w {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
    }
}

/// Runs the configured scenario. Tables depend only on the config (including
/// its seed); the metadata adds the wall time.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultBundle, Error> {
    let started = Instant::now();
    let mut run = Run {
        cfg,
        seed: SeedSpec::new(cfg.seed).derive(cfg.scenario.name()),
        tables: Vec::new(),
        results: Map::new(),
        warnings: Vec::new(),
    };
    match cfg.scenario {
        Scenario::Spectroscopy => spectroscopy(&mut run)?,
        Scenario::Scattering => scattering(&mut run)?,
        Scenario::OccupancyVsPhase => occupancy_vs_phase(&mut run)?,
        Scenario::EfficiencyCurve => efficiency_curve(&mut run)?,
        Scenario::RamseySweep => ramsey_sweep(&mut run)?,
        Scenario::ReadoutShots => readout_shots(&mut run)?,
        Scenario::Fidelity => fidelity(&mut run)?,
        Scenario::ClosureTest => closure_test(&mut run)?,
    }
    let mut bundle = ResultBundle::default();
    for (name, t) in run.tables {
        bundle.tables.insert(name.to_string(), t);
    }
    let m = &mut bundle.metadata;
    m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("scenario".into(), json!(cfg.scenario.name()));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m.insert("master_seed".into(), json!(cfg.seed));
    m.insert("config".into(), json!(cfg.to_toml()));
    m.insert("results".into(), Value::Object(run.results));
    m.insert("warnings".into(), json!(run.warnings));
    m.insert("wall_time_s".into(), num(started.elapsed().as_secs_f64()));
    Ok(bundle)
}

fn spectroscopy(run: &mut Run) -> Result<(), Error> {
    let f = &run.cfg.flux;
    let tuning = FluxTuneParams { omega_max: ghz(f.tunable_max_freq_ghz), participation: f.participation, flux: 0.0 };
    let ladder = SpuriousLadder {
        fsr: mhz(f.ladder_fsr_mhz),
        anchor: ghz(f.ladder_anchor_ghz),
        couplings: f.ladder_coupling_mhz.iter().map(|&g| mhz(g)).collect(),
        kappa: mhz(f.ladder_kappa_mhz),
    };
    let range = [ghz(f.ladder_min_freq_ghz), ghz(f.ladder_max_freq_ghz)];
    let model = SweepModel {
        tunable: vec![TunableMode { label: "tunable".into(), tuning, kappa: mhz(f.tunable_kappa_mhz) }],
        fixed: vec![],
        couplings: DMatrix::zeros(1, 1),
        ladder: Some(ladder.clone()),
        ladder_range: range,
    };
    let fluxes = linspace(f.flux_start_phi0, f.flux_stop_phi0, f.flux_points);
    let spectra = flux_sweep(&model, &fluxes)?;
    let bare: Vec<f64> = fluxes.iter().map(|&x| squid_frequency(&tuning.at_flux(x))).collect::<Result<_, _>>()?;

    let mut branches = Table::new(["flux_phi0", "branch", "frequency_ghz", "linewidth_mhz", "tunable_participation"]);
    for (x, s) in fluxes.iter().zip(&spectra) {
        for k in 0..s.len() {
            branches.push(&[*x, k as f64, s.eigenfrequencies[k] / ghz(1.0), s.eigenlinewidths[k] / mhz(1.0), s.participations[k][0]]);
        }
    }
    let mut bare_t = Table::new(["flux_phi0", "tunable_freq_ghz"]);
    for (x, w) in fluxes.iter().zip(&bare) {
        bare_t.push(&[*x, w / ghz(1.0)]);
    }

    // Splitting at the sampled flux closest to each crossing with a rung.
    let rungs = ladder_frequencies(&ladder, range)?;
    let mut ladder_t = Table::new(["element", "frequency_ghz", "coupling_mhz", "splitting_mhz"]);
    let mut crossings = 0;
    for (r, &w) in rungs.iter().enumerate() {
        let crosses = bare.windows(2).any(|p| (p[0] - w) * (p[1] - w) <= 0.0);
        let splitting = if crosses {
            crossings += 1;
            let i = (0..bare.len()).min_by(|&a, &b| (bare[a] - w).abs().total_cmp(&(bare[b] - w).abs())).unwrap_or(0);
            let mut freqs = spectra[i].eigenfrequencies.clone();
            freqs.sort_by(f64::total_cmp);
            let j = (0..freqs.len()).min_by(|&a, &b| (freqs[a] - w).abs().total_cmp(&(freqs[b] - w).abs())).unwrap_or(0);
            let below = if j > 0 { freqs[j] - freqs[j - 1] } else { f64::INFINITY };
            let above = if j + 1 < freqs.len() { freqs[j + 1] - freqs[j] } else { f64::INFINITY };
            below.min(above) / mhz(1.0)
        } else {
            f64::NAN
        };
        ladder_t.push(&[r as f64, w / ghz(1.0), ladder.coupling(r) / mhz(1.0), splitting]);
    }
    run.result("ladder_elements", rungs.len());
    run.result("crossings", crossings);
    run.tables.push(("branches", branches));
    run.tables.push(("bare", bare_t));
    run.tables.push(("ladder", ladder_t));
    Ok(())
}

/// Network, label of the mode whose occupancy matters, and the index of the
/// drive carrying the loop phase (if any).
fn build_network(cfg: &ScenarioConfig) -> Result<(NetworkSpec, &'static str, Option<usize>), Error> {
    let n = &cfg.network;
    let f = &n.mode_freqs_ghz;
    let kappa = mhz(n.mode_kappa_mhz);
    match n.kind {
        NetworkKind::Circulator => {
            let net = circulator([ghz(f[0]), ghz(f[1]), ghz(f[2])], kappa, n.loop_phase_rad.unwrap_or(FRAC_PI_2))?;
            Ok((net, "1", Some(2)))
        }
        NetworkKind::Converter => Ok((two_mode_converter(ghz(f[0]), kappa, ghz(f[1]), kappa, kappa / 2.0)?, "a", None)),
        NetworkKind::DirectionalAmplifier => Ok((directional_amplifier(cfg)?.build()?, "r", Some(LOOP_PHASE_DRIVE))),
    }
}

fn directional_amplifier(cfg: &ScenarioConfig) -> Result<DirectionalAmplifier, Error> {
    let n = &cfg.network;
    let mut amp = DirectionalAmplifier::reference_design();
    if let [r, a, b, ..] = n.mode_freqs_ghz[..] {
        (amp.omega_r, amp.omega_a, amp.omega_b) = (ghz(r), ghz(a), ghz(b));
    }
    amp.gain_fraction = n.gain_fraction;
    amp.loop_phase = n.loop_phase_rad.unwrap_or(ISOLATING_LOOP_PHASE);
    if let Some(k) = n.target_linewidth_mhz {
        amp.calibrate_cavity_linewidth(mhz(k))?;
    }
    Ok(amp)
}

fn scattering(run: &mut Run) -> Result<(), Error> {
    let n = &run.cfg.network;
    let (net, _, _) = build_network(run.cfg)?;
    let probe = net.modes()[net.mode_index(net.probe_port()).expect("validated")].omega;
    let offsets = linspace(-n.probe_span_mhz / 2.0, n.probe_span_mhz / 2.0, n.probe_points);
    let results = offsets
        .par_iter()
        .map(|&o| scattering_matrix(&net, probe + mhz(o)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(["offset_mhz", "out_index", "in_index", "magnitude", "phase_rad"]);
    let mut unitarity: f64 = 0.0;
    for (o, r) in offsets.iter().zip(&results) {
        let s = &r.s_matrix;
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                table.push(&[*o, i as f64, j as f64, s[(i, j)].norm(), s[(i, j)].arg()]);
            }
        }
        let d = s.adjoint() * s - DMatrix::identity(s.nrows(), s.ncols());
        unitarity = unitarity.max(d.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let ports = results[0].port_labels.clone();
    let center = scattering_matrix(&net, probe)?;
    let signal: Vec<&String> = ports.iter().take(center.n_ports()).filter(|p| !p.ends_with("/loss")).collect();
    if signal.len() >= 2 {
        let fwd = center.element(signal[0], signal[1]).expect("port exists").norm();
        let back = center.element(signal[1], signal[0]).expect("port exists").norm();
        run.result("forward_port_pair", json!([signal[0], signal[1]]));
        run.value("forward_magnitude", fwd);
        run.value("reverse_magnitude", back);
        run.value("isolation_db", 20.0 * (fwd / back).log10());
    }
    let refl = center.element(signal[0], signal[0]).expect("port exists").norm();
    run.value("reflection_gain_db", 20.0 * refl.log10());
    if !net.has_gain() {
        run.value("max_unitarity_residual", unitarity);
    }
    run.value("stability_margin_mhz", stability_margin(&net) / mhz(1.0));
    if n.kind == NetworkKind::DirectionalAmplifier {
        let kappa = directional_amplifier(run.cfg)?.cavity_linewidth()?;
        run.value("cavity_linewidth_mhz", kappa / mhz(1.0));
    }
    run.result("ports", json!(ports));
    run.tables.push(("s_parameters", table));
    Ok(())
}

fn occupancy_vs_phase(run: &mut Run) -> Result<(), Error> {
    let n = &run.cfg.network;
    let (net, target, drive) = build_network(run.cfg)?;
    let drive = drive.ok_or_else(|| Error::Configuration("the converter has no closed drive loop".into()))?;
    let baths = uniform_baths(&net, n.bath_occupancy);
    let phases: Vec<f64> = (0..n.phase_points).map(|k| TAU * k as f64 / n.phase_points as f64).collect();
    let occ = phases
        .par_iter()
        .map(|&phi| mode_occupancy_from_noise(&net.with_drive_phase(drive, phi)?, target, &baths))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut table = Table::new(["loop_phase_rad", "occupancy"]);
    for (p, o) in phases.iter().zip(&occ) {
        table.push(&[*p, *o]);
    }
    let len = occ.len();
    let minima = (0..len).filter(|&k| occ[k] < occ[(k + len - 1) % len] && occ[k] <= occ[(k + 1) % len]).count();
    let kmin = (0..len).min_by(|&a, &b| occ[a].total_cmp(&occ[b])).unwrap_or(0);
    run.result("target_mode", target);
    run.value("minimum_phase_rad", phases[kmin]);
    run.value("minimum_occupancy", occ[kmin]);
    run.value("maximum_occupancy", occ.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    run.result("local_minima", minima);
    run.tables.push(("occupancy", table));
    Ok(())
}

fn chain_template(cfg: &ScenarioConfig) -> ChainTemplate {
    let c = &cfg.chain;
    let mut t = match c.template {
        ChainKind::Directional => {
            ChainTemplate::directional(c.fpja_transmission(), c.jpa_transmission, c.jpa_gain_db, c.hemt_noise_quanta)
        }
        ChainKind::Converter => ChainTemplate::converter(c.fpja_transmission(), c.jpa_transmission, c.hemt_noise_quanta),
    };
    let kind = match c.variable_gain {
        VariableGain::PhaseSensitive => GainKind::PhaseSensitive,
        VariableGain::PhasePreserving => GainKind::PhasePreserving,
    };
    for s in &mut t.stages {
        if let TemplateStage::Variable(k) = s {
            *k = kind;
        }
    }
    t
}

fn sweep_config(cfg: &ScenarioConfig) -> SweepConfig {
    let s = &cfg.sweep;
    SweepConfig {
        alpha2_grid: s.alpha2_values.clone(),
        tau_grid: s.tau_values_us.iter().map(|&t| us(t)).collect(),
        shots_per_state: s.shots_per_state,
        ramsey_points: s.ramsey_points,
        ramsey_shots_per_point: s.ramsey_shots_per_point,
        ramsey_span_decays: s.ramsey_span_decays,
        ramsey_detuning: mhz(s.ramsey_detuning_mhz),
        shot_options: ShotOptions { discard_ring_up: cfg.readout.discard_ring_up },
    }
}

fn efficiency_curve(run: &mut Run) -> Result<(), Error> {
    let cfg = run.cfg;
    let template = chain_template(cfg);
    let gains = cfg.chain.gain_grid();
    let (d, q, m) = (cfg.readout.dispersive()?, cfg.readout.qubit()?, cfg.readout.measurement()?);
    let sweep = sweep_config(cfg);
    let mut table = Table::new(["gain_db", "eta_model", "eta_estimated", "sigma"]);
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for (i, &g) in gains.iter().enumerate() {
        let eta = propagate(&template.at_gain_db(g)?).eta;
        if eta > best.1 {
            best = (g, eta);
        }
        let (est, sigma) = if cfg.chain.estimate {
            let seed = run.seed.derive(&format!("gain{i}"));
            let data = sweep_measurement_strength(&d, &q, &m, eta, &sweep, &seed)?;
            match analyze_sweep(&data, q.gamma1(), &d, cfg.sweep.correct_relaxation) {
                Ok(a) => (a.efficiency.eta_m, a.efficiency.sigma_eta),
                Err(e @ (Error::Fit(_) | Error::Inconsistency(_))) => {
                    run.warn([format!("gain {g} dB: estimate failed: {e}")]);
                    (f64::NAN, f64::NAN)
                }
                Err(e) => return Err(e),
            }
        } else {
            (f64::NAN, f64::NAN)
        };
        table.push(&[g, eta, est, sigma]);
    }
    run.value("max_eta_model", best.1);
    run.value("gain_at_max_eta_db", best.0);
    run.value("eta_model_at_max_gain", table.column("eta_model").and_then(|c| c.last().copied()).unwrap_or(f64::NAN));
    run.tables.push(("efficiency", table));
    Ok(())
}

fn rate_table(points: &[RatePoint]) -> Table {
    let mut t = Table::new(["alpha2", "rate_per_us", "sigma_per_us"]);
    for p in points {
        t.push(&[p.alpha2, p.rate * PER_US, p.sigma * PER_US]);
    }
    t
}

fn ramsey_sweep(run: &mut Run) -> Result<(), Error> {
    let cfg = run.cfg;
    let s = &cfg.sweep;
    let (d, q, m) = (cfg.readout.dispersive()?, cfg.readout.qubit()?, cfg.readout.measurement()?);
    let mut traces_t = Table::new(["alpha2", "delay_us", "excited_probability"]);
    let mut rates_t = Table::new(["alpha2", "gamma2_per_us", "sigma_per_us", "predicted_per_us"]);
    let mut points = Vec::new();
    for (i, &a) in s.alpha2_values.iter().enumerate() {
        let predicted = predicted_gamma2(&d, &q, a);
        let delays = ramsey_delays(predicted, s.ramsey_points, s.ramsey_span_decays);
        let trace = simulate_ramsey(
            &d,
            &q,
            &m.with_alpha2(a),
            &delays,
            s.ramsey_shots_per_point,
            mhz(s.ramsey_detuning_mhz),
            &run.seed,
            &format!("ramsey/a{i}"),
        )?;
        for (t, p) in trace.delays.iter().zip(&trace.excited_probability) {
            traces_t.push(&[a, t / us(1.0), *p]);
        }
        let est = extract_gamma2(&trace)?;
        run.warn(est.warnings.iter().map(|w| format!("|alpha|^2 = {a}: {w}")));
        rates_t.push(&[a, est.gamma2 * PER_US, est.sigma * PER_US, predicted * PER_US]);
        points.push(RatePoint { alpha2: a, rate: est.gamma2, sigma: est.sigma });
    }
    let x: Vec<f64> = points.iter().map(|p| p.alpha2).collect();
    let y: Vec<f64> = points.iter().map(|p| p.rate).collect();
    let sig: Vec<f64> = points.iter().map(|p| p.sigma).collect();
    let fit = weighted_linear_fit(&x, &y, &sig)?;
    let model = dephasing_meas(&d, 1.0);
    run.value("slope_per_us", fit.slope * PER_US);
    run.value("slope_sigma_per_us", fit.sigma_slope() * PER_US);
    run.value("slope_model_per_us", model * PER_US);
    run.value("slope_z", (fit.slope - model) / fit.sigma_slope());
    run.value("intercept_per_us", fit.intercept * PER_US);
    run.tables.push(("ramsey", traces_t));
    run.tables.push(("gamma2", rates_t));
    Ok(())
}

fn simulate_pair(
    run: &Run,
    alpha2: f64,
    stream: &str,
) -> Result<(Vec<ShotRecord>, Vec<ShotRecord>), Error> {
    let r = &run.cfg.readout;
    let (d, q, m) = (r.dispersive()?, r.qubit()?, r.measurement()?.with_alpha2(alpha2));
    let opts = ShotOptions { discard_ring_up: r.discard_ring_up };
    let n = run.cfg.shots.count;
    let g = simulate_shots(&d, &q, &m, r.eta_m, QubitState::Ground, n, &run.seed, stream, &opts)?;
    let e = simulate_shots(&d, &q, &m, r.eta_m, QubitState::Excited, n, &run.seed, stream, &opts)?;
    Ok((g, e))
}

fn bootstrap_fidelity(run: &Run, g: &[ShotRecord], e: &[ShotRecord], stream: &str) -> Result<f64, Error> {
    let b = bootstrap_uncertainty(
        &[g, e],
        |s: &[Vec<ShotRecord>]| Ok(histogram_fidelity(&s[0], &s[1])?.fidelity),
        run.cfg.shots.bootstrap_resamples,
        &run.seed,
        stream,
    )?;
    Ok(b.standard_error)
}

fn readout_shots(run: &mut Run) -> Result<(), Error> {
    let r = &run.cfg.readout;
    let (d, q, m) = (r.dispersive()?, r.qubit()?, r.measurement()?);
    run.warn(readout_warnings(&d, &m));
    let (g, e) = simulate_pair(run, r.alpha2, "shots")?;

    let mut shots = Table::new(["prepared_excited", "integrated_signal", "decayed"]);
    for s in g.iter().chain(&e) {
        let excited = matches!(s.prepared_state, QubitState::Excited);
        shots.push(&[f64::from(u8::from(excited)), s.integrated_signal, f64::from(u8::from(s.decay_time.is_some()))]);
    }

    let bins = run.cfg.shots.histogram_bins;
    let all = g.iter().chain(&e).map(|s| s.integrated_signal);
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![[0.0f64; 2]; bins];
    for (k, set) in [&g, &e].into_iter().enumerate() {
        for s in set {
            let b = (((s.integrated_signal - lo) / width) as usize).min(bins - 1);
            counts[b][k] += 1.0;
        }
    }
    let mut hist = Table::new(["bin_center", "ground_counts", "excited_counts"]);
    for (b, c) in counts.iter().enumerate() {
        hist.push(&[lo + (b as f64 + 0.5) * width, c[0], c[1]]);
    }

    let mc = histogram_fidelity(&g, &e)?;
    let model = fidelity_model(&d, &q, &m, r.eta_m)?;
    let se = bootstrap_fidelity(run, &g, &e, "bootstrap")?;
    run.warn(model.warnings.clone());
    run.value("fidelity_mc", mc.fidelity);
    run.value("fidelity_mc_se", se);
    run.value("threshold", mc.threshold);
    run.value("p_e_given_g", mc.p_e_given_g);
    run.value("p_g_given_e", mc.p_g_given_e);
    run.value("fidelity_model", model.fidelity);
    run.value("snr_model", model.snr);
    run.value("p_decay_model", model.p_decay);
    run.tables.push(("shots", shots));
    run.tables.push(("histogram", hist));
    Ok(())
}

fn fidelity(run: &mut Run) -> Result<(), Error> {
    let r = &run.cfg.readout;
    let (d, q, m) = (r.dispersive()?, r.qubit()?, r.measurement()?);
    run.warn(readout_warnings(&d, &m));
    let mut table = Table::new(["alpha2", "fidelity_model", "fidelity_mc", "bootstrap_se", "snr_model", "p_decay"]);
    let mut worst: f64 = 0.0;
    for (i, &a) in run.cfg.shots.alpha2_values.clone().iter().enumerate() {
        let model = fidelity_model(&d, &q, &m.with_alpha2(a), r.eta_m)?;
        let (g, e) = simulate_pair(run, a, &format!("shots/a{i}"))?;
        let mc = histogram_fidelity(&g, &e)?;
        let se = bootstrap_fidelity(run, &g, &e, &format!("bootstrap/a{i}"))?;
        worst = worst.max((mc.fidelity - model.fidelity).abs());
        table.push(&[a, model.fidelity, mc.fidelity, se, model.snr, model.p_decay]);
    }
    run.value("max_model_mc_difference", worst);
    run.tables.push(("fidelity", table));
    Ok(())
}

fn closure_test(run: &mut Run) -> Result<(), Error> {
    let cfg = run.cfg;
    let (d, q, m) = (cfg.readout.dispersive()?, cfg.readout.qubit()?, cfg.readout.measurement()?);
    let sweep = sweep_config(cfg);
    let eta = cfg.readout.eta_m;
    let slope_model = dephasing_meas(&d, 1.0);
    let mut trials = Table::new([
        "trial",
        "eta_estimated",
        "sigma_eta",
        "z_eta",
        "gamma_phi_slope_per_us",
        "gamma_phi_slope_sigma_per_us",
        "z_slope",
        "n_env_estimated",
        "n_env_sigma",
    ]);
    let (mut within1, mut within3) = (0usize, 0usize);
    for t in 0..cfg.sweep.trials {
        let seed = run.seed.derive(&format!("trial{t}"));
        let data = sweep_measurement_strength(&d, &q, &m, eta, &sweep, &seed)?;
        let a = analyze_sweep(&data, q.gamma1(), &d, cfg.sweep.correct_relaxation)?;
        let e = &a.efficiency;
        let z = (e.eta_m - eta) / e.sigma_eta;
        let fit = &e.gamma2_fit;
        let zs = (fit.slope - slope_model) / fit.sigma_slope();
        within1 += usize::from(z.abs() <= 1.0);
        within3 += usize::from(z.abs() <= 3.0);
        trials.push(&[
            t as f64,
            e.eta_m,
            e.sigma_eta,
            z,
            fit.slope * PER_US,
            fit.sigma_slope() * PER_US,
            zs,
            a.n_env.n_env,
            a.n_env.sigma,
        ]);
        if t == 0 {
            run.tables.push(("gamma2", rate_table(&a.gamma2)));
            run.tables.push(("gamma_m", rate_table(&a.gamma_m)));
        }
    }
    let n = cfg.sweep.trials as f64;
    let col = |name| trials.column(name).map_or(f64::NAN, |c: &[f64]| c.iter().sum::<f64>() / n);
    run.value("eta_true", eta);
    run.value("mean_eta_estimated", col("eta_estimated"));
    run.value("mean_sigma_eta", col("sigma_eta"));
    run.value("fraction_within_1_sigma", within1 as f64 / n);
    run.value("fraction_within_3_sigma", within3 as f64 / n);
    run.value("slope_model_per_us", slope_model * PER_US);
    run.tables.push(("trials", trials));
    Ok(())
}
