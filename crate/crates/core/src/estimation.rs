//! Analysis of simulated (or measured) readout data: weighted linear fits,
//! Ramsey decay extraction, measurement rate from SNR, efficiency, thermal
//! occupancy and histogram fidelity.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::dephasing::{n_env_from_dephasing, DispersiveParams};
use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::rng::SeedSpec;
use crate::stochastic::{RamseyTrace, ShotRecord, ShotSet, SweepData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Covariance of `(slope, intercept)`.
    pub covariance: [[f64; 2]; 2],
    pub r_squared: f64,
}

impl LinearFitResult {
    pub fn sigma_slope(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn sigma_intercept(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }
}

/// Weighted least squares `y = slope x + intercept` with weights
/// `1 / sigma_y^2`. The covariance assumes the `sigma_y` are absolute.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma_y: &[f64]) -> Result<LinearFitResult> {
    if x.len() != y.len() || x.len() != sigma_y.len() {
        return Err(Error::domain("x, y and sigma_y must have equal lengths"));
    }
    if x.len() < 3 {
        return Err(Error::domain(format!("linear fit needs at least 3 points, got {}", x.len())));
    }
    if let Some(s) = sigma_y.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::domain(format!("sigma_y must be positive and finite, got {s}")));
    }
    let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for ((&xi, &yi), &si) in x.iter().zip(y).zip(sigma_y) {
        let w = 1.0 / (si * si);
        s += w;
        sx += w * xi;
        sy += w * yi;
    }
    let (xm, ym) = (sx / s, sy / s);
    // centred sums avoid cancellation for offset abscissae
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((&xi, &yi), &si) in x.iter().zip(y).zip(sigma_y) {
        let w = 1.0 / (si * si);
        sxx += w * (xi - xm) * (xi - xm);
        sxy += w * (xi - xm) * (yi - ym);
        syy += w * (yi - ym) * (yi - ym);
    }
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(sxx > s * (1e-12 * scale.max(f64::MIN_POSITIVE)).powi(2)) {
        return Err(Error::Fit("abscissae have zero spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let var_slope = 1.0 / sxx;
    let cov = [[var_slope, -xm * var_slope], [-xm * var_slope, 1.0 / s + xm * xm * var_slope]];
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).min(1.0) } else { 1.0 };
    Ok(LinearFitResult { slope, intercept, covariance: cov, r_squared })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gamma2Estimate {
    pub gamma2: f64,
    pub sigma: f64,
    pub detuning: f64,
    pub phase: f64,
    pub warnings: Vec<String>,
}

fn fringe(t: f64, gamma: f64, detuning: f64, phase: f64) -> f64 {
    0.5 * (1.0 + (-gamma * t).exp() * (detuning * t + phase).cos())
}

/// Dominant angular frequency and phase of the demeaned fringe.
fn spectral_start(t: &[f64], y: &[f64]) -> (f64, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut spacings: Vec<f64> = t.windows(2).map(|w| (w[1] - w[0]).abs()).filter(|d| *d > 0.0).collect();
    if spacings.is_empty() {
        return (0.0, 0.0);
    }
    spacings.sort_by(f64::total_cmp);
    let nyquist = std::f64::consts::PI / spacings[spacings.len() / 2];
    let n_grid = 8 * t.len();
    let mut best = (0.0, Complex64::new(0.0, 0.0));
    for k in 0..=n_grid {
        let w = nyquist * k as f64 / n_grid as f64;
        let c: Complex64 = t.iter().zip(y).map(|(&ti, &yi)| (yi - mean) * Complex64::from_polar(1.0, -w * ti)).sum();
        if c.norm() > best.1.norm() {
            best = (w, c);
        }
    }
    let phase = if best.0 == 0.0 { if best.1.re >= 0.0 { 0.0 } else { std::f64::consts::PI } } else { best.1.arg() };
    (best.0, phase)
}

/// Decay rate from a log-envelope regression given a fringe frequency and phase.
fn envelope_start(t: &[f64], y: &[f64], detuning: f64, phase: f64, floor: f64) -> Option<f64> {
    let (mut xs, mut ls) = (Vec::new(), Vec::new());
    for (&ti, &yi) in t.iter().zip(y) {
        let c = (detuning * ti + phase).cos();
        let amp = 2.0 * yi - 1.0;
        if c.abs() > 0.7 && (amp / c) > floor {
            xs.push(ti);
            ls.push((amp / c).ln());
        }
    }
    if xs.len() < 3 {
        return None;
    }
    let ones = vec![1.0; xs.len()];
    weighted_linear_fit(&xs, &ls, &ones).ok().map(|f| -f.slope)
}

/// Fits `p(t) = (1 + e^{-Gamma_2 t} cos(delta t + phi)) / 2` to a Ramsey trace
/// with binomial weights.
pub fn extract_gamma2(trace: &RamseyTrace) -> Result<Gamma2Estimate> {
    let (t, p) = (&trace.delays, &trace.excited_probability);
    if t.len() != p.len() || t.len() < 4 {
        return Err(Error::domain("Ramsey trace needs at least 4 delays with matching probabilities"));
    }
    if trace.shots_per_point == 0 {
        return Err(Error::domain("Ramsey trace has zero shots per point"));
    }
    let span = t.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(span > 0.0) {
        return Err(Error::domain("Ramsey delays must not all be zero"));
    }
    let n = trace.shots_per_point as f64;
    let (w0, phi0) = spectral_start(t, p);
    let gamma0 = envelope_start(t, p, w0, phi0, 3.0 / n.sqrt()).filter(|g| g.is_finite()).unwrap_or(1.0 / span).max(0.0);

    // parameters scaled by the span: (gamma * span, delta * span, phi)
    let floor = 0.25 / n;
    let fit_with = |sigmas: &[f64], start: &[f64]| {
        levenberg_marquardt(
            |q| {
                DVector::from_iterator(
                    t.len(),
                    t.iter()
                        .zip(p)
                        .zip(sigmas)
                        .map(|((&ti, &pi), &si)| (fringe(ti, q[0] / span, q[1] / span, q[2]) - pi) / si),
                )
            },
            start,
            &LmOptions::default(),
        )
    };
    let flat = vec![1.0; t.len()];
    let first = fit_with(&flat, &[gamma0 * span, w0 * span, phi0])?;
    let q = &first.params;
    let sigmas: Vec<f64> = t
        .iter()
        .map(|&ti| {
            let m = fringe(ti, q[0] / span, q[1] / span, q[2]).clamp(0.0, 1.0);
            ((m * (1.0 - m)).max(floor) / n).sqrt()
        })
        .collect();
    let fit = fit_with(&sigmas, &first.params)?;
    let gamma2 = fit.params[0] / span;
    let sigma = fit.inverse_hessian[(0, 0)].max(0.0).sqrt() / span;
    let mut warnings = Vec::new();
    if gamma2 * span < 2.0 {
        warnings.push(format!("trace spans {:.2} decay constants (fewer than 2)", gamma2 * span));
    }
    Ok(Gamma2Estimate {
        gamma2,
        sigma,
        detuning: fit.params[1] / span,
        phase: fit.params[2].rem_euclid(std::f64::consts::TAU),
        warnings,
    })
}

/// A rate measured at one measurement strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub alpha2: f64,
    pub rate: f64,
    pub sigma: f64,
}

fn mean_var(s: &[ShotRecord]) -> Result<(f64, f64)> {
    if s.len() < 2 {
        return Err(Error::domain("need at least two shots per state"));
    }
    let n = s.len() as f64;
    let mean = s.iter().map(|r| r.integrated_signal).sum::<f64>() / n;
    let var = s.iter().map(|r| (r.integrated_signal - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var))
}

/// `SNR^2` of a ground/excited shot pair and its first-order standard error.
pub fn snr_squared(ground: &[ShotRecord], excited: &[ShotRecord]) -> Result<(f64, f64)> {
    let (mg, vg) = mean_var(ground)?;
    let (me, ve) = mean_var(excited)?;
    let var = vg + ve;
    if !(var > 0.0) {
        return Err(Error::domain("shot distributions have zero variance"));
    }
    let (ng, ne) = (ground.len() as f64, excited.len() as f64);
    let d = mg - me;
    let snr2 = d * d / var;
    let var_d = vg / ng + ve / ne;
    let var_var = 2.0 * (vg * vg / (ng - 1.0) + ve * ve / (ne - 1.0));
    let err2 = (2.0 * d / var).powi(2) * var_d + (snr2 / var).powi(2) * var_var;
    Ok((snr2, err2.sqrt()))
}

/// Mean fraction of the window `[start, start + window]` an initially
/// excited qubit spends excited, for relaxation rate `gamma1`.
pub fn excited_fraction(gamma1: f64, start: f64, window: f64) -> f64 {
    let x = gamma1 * window;
    let avg = if x < 1e-8 { 1.0 - x / 2.0 } else { -(-x).exp_m1() / x };
    (-gamma1 * start).exp() * avg
}

/// `SNR^2` corrected for relaxation during the window: the contrast is
/// divided by the mean excited fraction and the noise is taken from the
/// ground-state shots, which never relax.
pub fn snr_squared_relaxation_corrected(
    ground: &[ShotRecord],
    excited: &[ShotRecord],
    excited_fraction: f64,
) -> Result<(f64, f64)> {
    if !(excited_fraction > 0.0 && excited_fraction <= 1.0) {
        return Err(Error::domain(format!("excited fraction must be in (0, 1], got {excited_fraction}")));
    }
    let (mg, vg) = mean_var(ground)?;
    let (me, ve) = mean_var(excited)?;
    if !(vg > 0.0) {
        return Err(Error::domain("ground shots have zero variance"));
    }
    let (ng, ne) = (ground.len() as f64, excited.len() as f64);
    let d = (mg - me) / excited_fraction;
    let snr2 = d * d / (2.0 * vg);
    let var_d = (vg / ng + ve / ne) / (excited_fraction * excited_fraction);
    let var_vg = 2.0 * vg * vg / (ng - 1.0);
    let err2 = (d / vg).powi(2) * var_d + (snr2 / vg).powi(2) * var_vg;
    Ok((snr2, err2.sqrt()))
}

/// Measurement rate `SNR^2 / (4 T)` per `|alpha|^2`, with `T` the
/// integration window. With `gamma1` given, `SNR^2` is corrected for
/// relaxation during the window (see [`snr_squared_relaxation_corrected`]).
/// Shot sets sharing a strength (different `tau`) are combined by
/// inverse-variance weighting.
pub fn measurement_rates(shots: &[ShotSet], gamma1: Option<f64>) -> Result<Vec<RatePoint>> {
    let mut groups: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for s in shots {
        if !(s.window > 0.0 && s.window <= s.tau) {
            return Err(Error::domain(format!("integration window {} must lie in (0, tau]", s.window)));
        }
        let (v, e) = match gamma1 {
            Some(g1) => snr_squared_relaxation_corrected(&s.ground, &s.excited, excited_fraction(g1, s.tau - s.window, s.window))?,
            None => snr_squared(&s.ground, &s.excited)?,
        };
        let (rate, sigma) = (v / (4.0 * s.window), e / (4.0 * s.window));
        if !(sigma > 0.0) {
            return Err(Error::Fit(format!("zero SNR uncertainty at |alpha|^2 = {}", s.alpha2)));
        }
        let w = 1.0 / (sigma * sigma);
        let acc = groups.entry(s.alpha2.to_bits()).or_insert((0.0, 0.0));
        acc.0 += w * rate;
        acc.1 += w;
    }
    Ok(groups
        .into_iter()
        .map(|(bits, (wr, w))| RatePoint { alpha2: f64::from_bits(bits), rate: wr / w, sigma: w.sqrt().recip() })
        .collect())
}

/// `Gamma_2` per `|alpha|^2` from a set of Ramsey traces.
pub fn dephasing_rates(traces: &[(f64, RamseyTrace)]) -> Result<Vec<RatePoint>> {
    traces
        .par_iter()
        .map(|(alpha2, trace)| {
            let est = extract_gamma2(trace)?;
            Ok(RatePoint { alpha2: *alpha2, rate: est.gamma2, sigma: est.sigma })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyEstimate {
    pub eta_m: f64,
    pub sigma_eta: f64,
    pub gamma_m_slope: f64,
    pub gamma_phi_slope: f64,
    pub gamma2_fit: LinearFitResult,
    pub gamma_m_fit: LinearFitResult,
}

fn split(points: &[RatePoint]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        points.iter().map(|p| p.alpha2).collect(),
        points.iter().map(|p| p.rate).collect(),
        points.iter().map(|p| p.sigma).collect(),
    )
}

/// Ratio of the `Gamma_m` slope to the `Gamma_2` slope against `|alpha|^2`.
pub fn extract_efficiency(gamma2: &[RatePoint], gamma_m: &[RatePoint]) -> Result<EfficiencyEstimate> {
    let range = |p: &[RatePoint]| {
        p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q.alpha2), hi.max(q.alpha2)))
    };
    let (lo2, hi2) = range(gamma2);
    let (lom, him) = range(gamma_m);
    if lo2.max(lom) > hi2.min(him) {
        return Err(Error::domain("dephasing and SNR datasets cover disjoint |alpha|^2 ranges"));
    }
    let (x, y, s) = split(gamma2);
    let gamma2_fit = weighted_linear_fit(&x, &y, &s)?;
    let (x, y, s) = split(gamma_m);
    let gamma_m_fit = weighted_linear_fit(&x, &y, &s)?;
    let (sm, sphi) = (gamma_m_fit.slope, gamma2_fit.slope);
    if !(sphi > 0.0) {
        return Err(Error::Inconsistency(format!("dephasing slope {sphi:.3e} is not positive")));
    }
    let eta_m = sm / sphi;
    let rel = (gamma_m_fit.covariance[0][0] / (sm * sm) + gamma2_fit.covariance[0][0] / (sphi * sphi)).sqrt();
    Ok(EfficiencyEstimate {
        eta_m,
        sigma_eta: (eta_m * rel).abs(),
        gamma_m_slope: sm,
        gamma_phi_slope: sphi,
        gamma2_fit,
        gamma_m_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NEnvEstimate {
    pub n_env: f64,
    pub sigma: f64,
    /// Set when a slightly negative estimate was clipped to zero.
    pub clipped: bool,
}

/// Thermal cavity occupancy from the zero-power `Gamma_2` intercept.
pub fn extract_n_env(intercept: f64, sigma_intercept: f64, gamma1: f64, d: &DispersiveParams) -> Result<NEnvEstimate> {
    if !(gamma1 >= 0.0) || !(sigma_intercept >= 0.0) {
        return Err(Error::domain("gamma1 and sigma_intercept must be non-negative"));
    }
    let excess = intercept - gamma1 / 2.0;
    let sigma = n_env_from_dephasing(d, sigma_intercept);
    if excess >= 0.0 {
        return Ok(NEnvEstimate { n_env: n_env_from_dephasing(d, excess), sigma, clipped: false });
    }
    if -excess > 3.0 * sigma_intercept {
        return Err(Error::Inconsistency(format!(
            "Gamma_2 intercept {intercept:.4e} /s lies below Gamma_1/2 = {:.4e} /s by more than 3 sigma",
            gamma1 / 2.0
        )));
    }
    Ok(NEnvEstimate { n_env: 0.0, sigma, clipped: true })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityResult {
    pub fidelity: f64,
    pub threshold: f64,
    pub p_e_given_g: f64,
    pub p_g_given_e: f64,
}

/// Threshold candidates scanned across the pooled signal range.
pub const THRESHOLD_CANDIDATES: usize = 512;

fn sorted_signals(s: &[ShotRecord]) -> Vec<f64> {
    let mut v: Vec<f64> = s.iter().map(|r| r.integrated_signal).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Misassignment probabilities at a fixed threshold. Shots are assigned to
/// the state whose mean lies on their side of the threshold.
pub fn fidelity_at_threshold(ground: &[ShotRecord], excited: &[ShotRecord], threshold: f64) -> Result<FidelityResult> {
    let g = sorted_signals(ground);
    let e = sorted_signals(excited);
    fidelity_sorted(&g, &e, threshold, ground_above(&g, &e)?)
}

fn ground_above(g: &[f64], e: &[f64]) -> Result<bool> {
    if g.is_empty() || e.is_empty() {
        return Err(Error::domain("both shot sets must be non-empty"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(g) >= mean(e))
}

fn fidelity_sorted(g: &[f64], e: &[f64], t: f64, ground_above: bool) -> Result<FidelityResult> {
    let below = |v: &[f64]| v.partition_point(|x| *x <= t) as f64 / v.len() as f64;
    let (p_e_given_g, p_g_given_e) = if ground_above { (below(g), 1.0 - below(e)) } else { (1.0 - below(g), below(e)) };
    Ok(FidelityResult { fidelity: 1.0 - p_e_given_g - p_g_given_e, threshold: t, p_e_given_g, p_g_given_e })
}

/// Best single-threshold assignment fidelity `F = 1 - P(e|g) - P(g|e)`,
/// scanning an even grid over the pooled range plus the midpoint of the
/// two means.
pub fn histogram_fidelity(ground: &[ShotRecord], excited: &[ShotRecord]) -> Result<FidelityResult> {
    let g = sorted_signals(ground);
    let e = sorted_signals(excited);
    let above = ground_above(&g, &e)?;
    let lo = g[0].min(e[0]);
    let hi = g[g.len() - 1].max(e[e.len() - 1]);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let midpoint = 0.5 * (mean(&g) + mean(&e));
    let mut best = fidelity_sorted(&g, &e, midpoint, above)?;
    for k in 0..THRESHOLD_CANDIDATES {
        let t = lo + (hi - lo) * k as f64 / (THRESHOLD_CANDIDATES - 1) as f64;
        let r = fidelity_sorted(&g, &e, t, above)?;
        if r.fidelity > best.fidelity {
            best = r;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapResult {
    pub standard_error: f64,
    pub mean: f64,
    pub n_succeeded: usize,
    pub n_failed: usize,
}

/// Nonparametric bootstrap standard error of `estimator`. Each group is
/// resampled with replacement independently (stratified), resample `i`
/// draws from `seed.stream(stream, i)`, and resamples on which the
/// estimator fails are counted and excluded.
pub fn bootstrap_uncertainty<T, F>(
    groups: &[&[T]],
    estimator: F,
    n_resamples: usize,
    seed: &SeedSpec,
    stream: &str,
) -> Result<BootstrapResult>
where
    T: Clone + Send + Sync,
    F: Fn(&[Vec<T>]) -> Result<f64> + Sync,
{
    if n_resamples < 100 {
        return Err(Error::domain(format!("bootstrap needs at least 100 resamples, got {n_resamples}")));
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(Error::domain("bootstrap groups must be non-empty"));
    }
    let values: Vec<Option<f64>> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(stream, i);
            let resample: Vec<Vec<T>> =
                groups.iter().map(|g| (0..g.len()).map(|_| g[rng.random_range(0..g.len())].clone()).collect()).collect();
            estimator(&resample).ok().filter(|v| v.is_finite())
        })
        .collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let n_failed = values.len() - ok.len();
    if ok.len() < 2 {
        return Err(Error::Fit(format!("estimator failed on {n_failed} of {n_resamples} resamples")));
    }
    let n = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let var = ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BootstrapResult { standard_error: var.sqrt(), mean, n_succeeded: ok.len(), n_failed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAnalysis {
    pub gamma2: Vec<RatePoint>,
    pub gamma_m: Vec<RatePoint>,
    pub efficiency: EfficiencyEstimate,
    pub n_env: NEnvEstimate,
}

/// Runs the full analysis chain on a measurement-strength sweep. With
/// `correct_relaxation` the SNR is corrected for decay at rate `gamma1`
/// during the integration window.
pub fn analyze_sweep(
    data: &SweepData,
    gamma1: f64,
    d: &DispersiveParams,
    correct_relaxation: bool,
) -> Result<SweepAnalysis> {
    let gamma2 = dephasing_rates(&data.ramsey)?;
    let gamma_m = measurement_rates(&data.shots, correct_relaxation.then_some(gamma1))?;
    let efficiency = extract_efficiency(&gamma2, &gamma_m)?;
    let fit = &efficiency.gamma2_fit;
    let n_env = extract_n_env(fit.intercept, fit.sigma_intercept(), gamma1, d)?;
    Ok(SweepAnalysis { gamma2, gamma_m, efficiency, n_env })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::QubitState;
    use std::f64::consts::TAU;

    fn shots(state: QubitState, values: &[f64]) -> Vec<ShotRecord> {
        values.iter().map(|&v| ShotRecord { prepared_state: state, integrated_signal: v, decay_time: None }).collect()
    }

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = weighted_linear_fit(&x, &y, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_y_has_zero_slope() {
        let f = weighted_linear_fit(&[1.0, 2.0, 5.0], &[3.0; 3], &[1.0; 3]).unwrap();
        assert!(f.slope.abs() < 1e-15);
    }

    #[test]
    fn degenerate_abscissa_is_fit_error() {
        assert!(matches!(weighted_linear_fit(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0], &[1.0; 4]), Err(Error::Fit(_))));
        assert!(matches!(weighted_linear_fit(&[1.0, 2.0], &[1.0, 2.0], &[1.0; 2]), Err(Error::Domain(_))));
    }

    #[test]
    fn noiseless_ramsey_round_trip() {
        let delays: Vec<f64> = (0..120).map(|i| i as f64 * 0.25e-6).collect();
        let p: Vec<f64> = delays.iter().map(|&t| fringe(t, 1e5, TAU * 0.5e6, 0.3)).collect();
        let trace = RamseyTrace { delays, excited_probability: p, shots_per_point: 1_000_000, detuning: TAU * 0.5e6 };
        let est = extract_gamma2(&trace).unwrap();
        assert!((est.gamma2 / 1e5 - 1.0).abs() < 1e-6, "{est:?}");
        assert!((est.detuning / (TAU * 0.5e6) - 1.0).abs() < 1e-6);
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn short_trace_warns() {
        let delays: Vec<f64> = (0..40).map(|i| i as f64 * 0.1e-6).collect();
        let p: Vec<f64> = delays.iter().map(|&t| fringe(t, 1e5, TAU * 2e6, 0.0)).collect();
        let trace = RamseyTrace { delays, excited_probability: p, shots_per_point: 1000, detuning: TAU * 2e6 };
        assert!(!extract_gamma2(&trace).unwrap().warnings.is_empty());
    }

    #[test]
    fn efficiency_ratio() {
        let pts = |slope: f64| -> Vec<RatePoint> {
            (0..4).map(|i| RatePoint { alpha2: i as f64, rate: 10.0 + slope * i as f64, sigma: 0.1 }).collect()
        };
        let e = extract_efficiency(&pts(4.0), &pts(2.0)).unwrap();
        assert!((e.eta_m - 0.5).abs() < 1e-12);
        let e = extract_efficiency(&pts(4.0), &pts(4.0)).unwrap();
        assert!((e.eta_m - 1.0).abs() < 1e-12 && e.sigma_eta > 0.0);
        assert!(matches!(extract_efficiency(&pts(-1.0), &pts(2.0)), Err(Error::Inconsistency(_))));
    }

    #[test]
    fn n_env_inversion() {
        let d = DispersiveParams::from_splitting(TAU * 1.7e6, TAU * 2.58e6, TAU * 10.9e9).unwrap();
        let g1 = 1.0 / 27e-6;
        assert_eq!(extract_n_env(g1 / 2.0, 100.0, g1, &d).unwrap().n_env, 0.0);
        let n = extract_n_env(1.0 / 17e-6, 100.0, g1, &d).unwrap().n_env;
        assert!((0.007..=0.012).contains(&n), "{n}");
        let clipped = extract_n_env(g1 / 2.0 - 50.0, 100.0, g1, &d).unwrap();
        assert!(clipped.clipped && clipped.n_env == 0.0);
        assert!(matches!(extract_n_env(g1 / 2.0 - 500.0, 100.0, g1, &d), Err(Error::Inconsistency(_))));
    }

    #[test]
    fn separated_histograms_give_unit_fidelity() {
        let g = shots(QubitState::Ground, &[5.0, 6.0, 7.0]);
        let e = shots(QubitState::Excited, &[-7.0, -6.0, -5.0]);
        let f = histogram_fidelity(&g, &e).unwrap();
        assert_eq!(f.fidelity, 1.0);
        assert!(f.threshold > -5.0 && f.threshold < 5.0);
        // inverted orientation is handled by the means
        assert_eq!(histogram_fidelity(&e, &g).unwrap().fidelity, 1.0);
    }

    #[test]
    fn identical_histograms_give_zero_fidelity() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let f = histogram_fidelity(&shots(QubitState::Ground, &v), &shots(QubitState::Excited, &v)).unwrap();
        assert!(f.fidelity.abs() < 0.02, "{f:?}");
        assert!(histogram_fidelity(&[], &shots(QubitState::Excited, &v)).is_err());
    }

    #[test]
    fn bootstrap_of_constant_data_is_zero() {
        let data = vec![3.0; 50];
        let r = bootstrap_uncertainty(
            &[&data],
            |g| Ok(g[0].iter().sum::<f64>() / g[0].len() as f64),
            200,
            &SeedSpec::new(4),
            "b",
        )
        .unwrap();
        assert_eq!(r.standard_error, 0.0);
        assert_eq!(r.n_failed, 0);
        assert!(bootstrap_uncertainty(&[&data], |_| Ok(0.0), 99, &SeedSpec::new(4), "b").is_err());
    }

    #[test]
    fn bootstrap_counts_failures() {
        let data: Vec<f64> = (0..20).map(f64::from).collect();
        let r = bootstrap_uncertainty(
            &[&data],
            |g| if g[0].contains(&0.0) { Err(Error::Fit("x".into())) } else { Ok(1.0) },
            200,
            &SeedSpec::new(5),
            "f",
        )
        .unwrap();
        assert!(r.n_failed > 0 && r.n_failed + r.n_succeeded == 200);
    }
}
