//! Monte Carlo generation of readout shots and Ramsey traces.
//!
//! Integrated homodyne records are drawn directly from their Gaussian
//! distribution. A shot integrating over a window of length `T` has mean
//! `+sqrt(Gamma_m) T` for the ground state and `-sqrt(Gamma_m) T` for the
//! excited state, and variance `T / 2`, so that `SNR^2 = 4 Gamma_m T`.
//! An excited qubit relaxing at `t_d` contributes the excited mean up to
//! `t_d` and the ground mean afterwards.
//!
//! Shot `i` of stream `label` always draws from `seed.stream(label, i)`,
//! so results do not depend on thread count or evaluation order.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp, StandardNormal};
use rayon::prelude::*;

use crate::dephasing::{dephasing_env, dephasing_meas, total_decoherence, DispersiveParams, MeasurementConfig, QubitSpec};
use crate::error::{Error, Result};
use crate::rng::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub fn tag(self) -> &'static str {
        match self {
            QubitState::Ground => "g",
            QubitState::Excited => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub prepared_state: QubitState,
    pub integrated_signal: f64,
    /// Relaxation time within `[0, tau]`, if the qubit relaxed in the window.
    pub decay_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotOptions {
    /// Drop the first `2 / kappa` of the window from the integration.
    pub discard_ring_up: bool,
}

impl Default for ShotOptions {
    fn default() -> Self {
        Self { discard_ring_up: true }
    }
}

/// Start of the integration window for the given options.
pub fn integration_start(d: &DispersiveParams, opts: &ShotOptions) -> f64 {
    if opts.discard_ring_up {
        2.0 / d.kappa
    } else {
        0.0
    }
}

/// Warnings about model validity for a readout configuration.
pub fn readout_warnings(d: &DispersiveParams, m: &MeasurementConfig) -> Vec<String> {
    let mut w = Vec::new();
    if m.tau * d.kappa < 5.0 {
        w.push(format!("tau = {:.3e} s is not long compared with 1/kappa = {:.3e} s", m.tau, 1.0 / d.kappa));
    }
    w
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_shots(
    d: &DispersiveParams,
    q: &QubitSpec,
    m: &MeasurementConfig,
    eta_m: f64,
    prepared: QubitState,
    n_shots: usize,
    seed: &SeedSpec,
    stream: &str,
    opts: &ShotOptions,
) -> Result<Vec<ShotRecord>> {
    if !(eta_m > 0.0 && eta_m <= 1.0) {
        return Err(Error::domain(format!("eta_m must be in (0, 1], got {eta_m}")));
    }
    if n_shots == 0 {
        return Err(Error::domain("need at least one shot"));
    }
    let start = integration_start(d, opts);
    if start >= m.tau {
        return Err(Error::domain(format!(
            "ring-up time {start:.3e} s leaves no integration window within tau = {:.3e} s",
            m.tau
        )));
    }
    let window = m.tau - start;
    let rate = (eta_m * dephasing_meas(d, m.alpha2)).sqrt();
    let sigma = (window / 2.0).sqrt();
    let label = format!("{stream}/{}", prepared.tag());
    let relax = if q.t1.is_finite() { Some(Exp::new(1.0 / q.t1).map_err(|e| Error::domain(e.to_string()))?) } else { None };
    let tau = m.tau;

    Ok((0..n_shots as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(&label, i);
            let decay_time = match (prepared, &relax) {
                (QubitState::Excited, Some(exp)) => Some(exp.sample(&mut rng)).filter(|&t| t <= tau),
                _ => None,
            };
            let excited_time = match prepared {
                QubitState::Ground => 0.0,
                QubitState::Excited => decay_time.map_or(window, |t| (t - start).clamp(0.0, window)),
            };
            let noise: f64 = rng.sample(StandardNormal);
            ShotRecord {
                prepared_state: prepared,
                integrated_signal: rate * (window - 2.0 * excited_time) + sigma * noise,
                decay_time,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RamseyTrace {
    /// Free-evolution delays (s).
    pub delays: Vec<f64>,
    pub excited_probability: Vec<f64>,
    pub shots_per_point: u64,
    /// Ramsey detuning used to generate the fringe (rad/s).
    pub detuning: f64,
}

/// Default Ramsey detuning, `2pi x 0.5 MHz`.
pub const DEFAULT_RAMSEY_DETUNING: f64 = TAU * 0.5e6;

/// Predicted `Gamma_2` with the measurement tone on.
pub fn predicted_gamma2(d: &DispersiveParams, q: &QubitSpec, alpha2: f64) -> f64 {
    total_decoherence(q.gamma1(), dephasing_env(d, q.n_env), dephasing_meas(d, alpha2))
}

/// Binomially sampled fringe `p(t) = (1 + e^{-Gamma_2 t} cos(detuning t)) / 2`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ramsey(
    d: &DispersiveParams,
    q: &QubitSpec,
    m: &MeasurementConfig,
    delays: &[f64],
    shots_per_point: u64,
    detuning: f64,
    seed: &SeedSpec,
    stream: &str,
) -> Result<RamseyTrace> {
    if delays.is_empty() {
        return Err(Error::domain("empty delay grid"));
    }
    if shots_per_point == 0 {
        return Err(Error::domain("need at least one shot per delay"));
    }
    let gamma2 = predicted_gamma2(d, q, m.alpha2);
    let excited_probability = delays
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let p = (0.5 * (1.0 + (-gamma2 * t).exp() * (detuning * t).cos())).clamp(0.0, 1.0);
            let mut rng = seed.stream(stream, i as u64);
            let k = Binomial::new(shots_per_point, p).map_err(|e| Error::domain(e.to_string()))?.sample(&mut rng);
            Ok(k as f64 / shots_per_point as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RamseyTrace { delays: delays.to_vec(), excited_probability, shots_per_point, detuning })
}

/// Shape of a two-experiment sweep over measurement strength.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub alpha2_grid: Vec<f64>,
    /// Integration times (s) for the SNR experiment.
    pub tau_grid: Vec<f64>,
    pub shots_per_state: usize,
    pub ramsey_points: usize,
    pub ramsey_shots_per_point: u64,
    /// Delay span in units of the expected `1 / Gamma_2`.
    pub ramsey_span_decays: f64,
    pub ramsey_detuning: f64,
    pub shot_options: ShotOptions,
}

impl SweepConfig {
    pub fn new(alpha2_grid: Vec<f64>, tau_grid: Vec<f64>, shots_per_state: usize) -> Self {
        Self {
            alpha2_grid,
            tau_grid,
            shots_per_state,
            ramsey_points: 161,
            ramsey_shots_per_point: 2000,
            ramsey_span_decays: 4.0,
            ramsey_detuning: DEFAULT_RAMSEY_DETUNING,
            shot_options: ShotOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    pub alpha2: f64,
    pub tau: f64,
    /// Length of the integration window actually used (s).
    pub window: f64,
    pub ground: Vec<ShotRecord>,
    pub excited: Vec<ShotRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepData {
    /// One Ramsey trace per `|alpha|^2`.
    pub ramsey: Vec<(f64, RamseyTrace)>,
    /// One ground/excited shot pair per `(|alpha|^2, tau)`, alpha-major.
    pub shots: Vec<ShotSet>,
}

/// Ramsey delays spanning `span_decays / Gamma_2`, as an experimenter would
/// choose from a rough estimate of the decay.
pub fn ramsey_delays(gamma2: f64, points: usize, span_decays: f64) -> Vec<f64> {
    let end = span_decays / gamma2;
    (0..points).map(|i| end * i as f64 / (points.max(2) - 1) as f64).collect()
}

/// Synthetic dataset for both experiments over `|alpha|^2` (and `tau` for
/// the SNR experiment).
pub fn sweep_measurement_strength(
    d: &DispersiveParams,
    q: &QubitSpec,
    template: &MeasurementConfig,
    eta_m: f64,
    cfg: &SweepConfig,
    seed: &SeedSpec,
) -> Result<SweepData> {
    if cfg.alpha2_grid.is_empty() || cfg.tau_grid.is_empty() {
        return Err(Error::domain("sweep grids must be non-empty"));
    }
    let mut ramsey = Vec::with_capacity(cfg.alpha2_grid.len());
    let mut shots = Vec::with_capacity(cfg.alpha2_grid.len() * cfg.tau_grid.len());
    for (i, &alpha2) in cfg.alpha2_grid.iter().enumerate() {
        let m = MeasurementConfig::new(alpha2, template.tau)?.with_gains(template.gain_fpja_db, template.gain_jpa_db);
        let delays = ramsey_delays(predicted_gamma2(d, q, alpha2), cfg.ramsey_points, cfg.ramsey_span_decays);
        let trace = simulate_ramsey(
            d,
            q,
            &m,
            &delays,
            cfg.ramsey_shots_per_point,
            cfg.ramsey_detuning,
            seed,
            &format!("ramsey/a{i}"),
        )?;
        ramsey.push((alpha2, trace));
        for (j, &tau) in cfg.tau_grid.iter().enumerate() {
            let m = m.with_tau(tau);
            let stream = format!("shots/a{i}/t{j}");
            let run = |state| simulate_shots(d, q, &m, eta_m, state, cfg.shots_per_state, seed, &stream, &cfg.shot_options);
            shots.push(ShotSet {
                alpha2,
                tau,
                window: tau - integration_start(d, &cfg.shot_options),
                ground: run(QubitState::Ground)?, excited: run(QubitState::Excited)? });
        }
    }
    Ok(SweepData { ramsey, shots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> (DispersiveParams, QubitSpec) {
        (
            DispersiveParams::from_splitting(TAU * 1.7e6, TAU * 2.58e6, TAU * 10.929e9).unwrap(),
            QubitSpec::new(TAU * 6.297e9, 27e-6, 0.01).unwrap(),
        )
    }

    #[test]
    fn ground_shots_never_decay() {
        let (d, q) = params();
        let m = MeasurementConfig::new(1.0, 350e-9).unwrap();
        let shots =
            simulate_shots(&d, &q, &m, 0.7, QubitState::Ground, 500, &SeedSpec::new(1), "t", &ShotOptions::default()).unwrap();
        assert!(shots.iter().all(|s| s.decay_time.is_none() && s.prepared_state == QubitState::Ground));
    }

    #[test]
    fn decay_times_lie_in_window() {
        let (d, q) = params();
        let q = QubitSpec { t1: 1e-6, ..q };
        let m = MeasurementConfig::new(1.0, 350e-9).unwrap();
        let shots =
            simulate_shots(&d, &q, &m, 0.7, QubitState::Excited, 2000, &SeedSpec::new(2), "t", &ShotOptions::default()).unwrap();
        let decays: Vec<f64> = shots.iter().filter_map(|s| s.decay_time).collect();
        assert!(!decays.is_empty());
        assert!(decays.iter().all(|&t| (0.0..=350e-9).contains(&t)));
    }

    #[test]
    fn invalid_efficiency_is_domain_error() {
        let (d, q) = params();
        let m = MeasurementConfig::new(1.0, 350e-9).unwrap();
        for eta in [0.0, -0.1, 1.5] {
            let r = simulate_shots(&d, &q, &m, eta, QubitState::Ground, 10, &SeedSpec::new(1), "t", &ShotOptions::default());
            assert!(matches!(r, Err(Error::Domain(_))));
        }
    }

    #[test]
    fn shots_are_order_independent() {
        let (d, q) = params();
        let m = MeasurementConfig::new(0.5, 500e-9).unwrap();
        let seed = SeedSpec::new(99);
        let all = simulate_shots(&d, &q, &m, 0.7, QubitState::Excited, 300, &seed, "x", &ShotOptions::default()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool
            .install(|| simulate_shots(&d, &q, &m, 0.7, QubitState::Excited, 300, &seed, "x", &ShotOptions::default()))
            .unwrap();
        assert_eq!(all, serial);
    }

    #[test]
    fn ramsey_without_decay_stays_excited() {
        let (d, _) = params();
        let q = QubitSpec::new(0.0, f64::INFINITY, 0.0).unwrap();
        let m = MeasurementConfig::new(0.0, 350e-9).unwrap();
        let delays: Vec<f64> = (0..20).map(|i| i as f64 * 1e-7).collect();
        let trace = simulate_ramsey(&d, &q, &m, &delays, 100, 0.0, &SeedSpec::new(3), "r").unwrap();
        assert!(trace.excited_probability.iter().all(|&p| p == 1.0));
    }
}
