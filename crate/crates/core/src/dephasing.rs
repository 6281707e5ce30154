//! Closed-form dispersive measurement theory: photon-number dephasing,
//! decoherence budget, SNR and measurement rate, efficiencies and the
//! analytic readout-fidelity model.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Cavity parameters entering the dephasing rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveParams {
    /// Dispersive shift (rad/s), half the qubit-state splitting `2 chi`.
    pub chi: f64,
    /// Effective cavity linewidth (rad/s).
    pub kappa: f64,
    /// Cavity frequency (rad/s).
    pub omega_r: f64,
}

impl DispersiveParams {
    pub fn new(chi: f64, kappa: f64, omega_r: f64) -> Result<Self> {
        if !(chi > 0.0 && kappa > 0.0) || !chi.is_finite() || !kappa.is_finite() {
            return Err(Error::domain(format!("need chi > 0 and kappa > 0 (chi = {chi}, kappa = {kappa})")));
        }
        Ok(Self { chi, kappa, omega_r })
    }

    /// Builds from the full splitting `2 chi`, the way it is usually quoted.
    pub fn from_splitting(two_chi: f64, kappa: f64, omega_r: f64) -> Result<Self> {
        Self::new(two_chi / 2.0, kappa, omega_r)
    }

    /// `4 chi^2 kappa / (4 chi^2 + kappa^2)`: dephasing per thermal photon.
    pub fn lorentzian_factor(&self) -> f64 {
        let c2 = 4.0 * self.chi * self.chi;
        c2 * self.kappa / (c2 + self.kappa * self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSpec {
    /// Qubit frequency (rad/s).
    pub omega_q: f64,
    /// Relaxation time (s); `f64::INFINITY` disables relaxation.
    pub t1: f64,
    /// Thermal cavity occupancy (quanta).
    pub n_env: f64,
}

impl QubitSpec {
    pub fn new(omega_q: f64, t1: f64, n_env: f64) -> Result<Self> {
        if !(t1 > 0.0) {
            return Err(Error::domain(format!("T1 must be positive, got {t1}")));
        }
        if !(n_env >= 0.0) || !n_env.is_finite() {
            return Err(Error::domain(format!("n_env must be >= 0, got {n_env}")));
        }
        Ok(Self { omega_q, t1, n_env })
    }

    pub fn gamma1(&self) -> f64 {
        1.0 / self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    /// Mean coherent photon number `|alpha|^2`.
    pub alpha2: f64,
    /// Integration time (s).
    pub tau: f64,
    pub gain_fpja_db: f64,
    pub gain_jpa_db: f64,
}

impl MeasurementConfig {
    pub fn new(alpha2: f64, tau: f64) -> Result<Self> {
        if !(alpha2 >= 0.0) || !alpha2.is_finite() {
            return Err(Error::domain(format!("|alpha|^2 must be >= 0, got {alpha2}")));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("integration time must be positive, got {tau}")));
        }
        Ok(Self { alpha2, tau, gain_fpja_db: 0.0, gain_jpa_db: 0.0 })
    }

    pub fn with_gains(mut self, fpja_db: f64, jpa_db: f64) -> Self {
        self.gain_fpja_db = fpja_db;
        self.gain_jpa_db = jpa_db;
        self
    }

    pub fn with_alpha2(mut self, alpha2: f64) -> Self {
        self.alpha2 = alpha2;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

/// Excess dephasing from a thermal cavity occupancy.
pub fn dephasing_env(d: &DispersiveParams, n_env: f64) -> f64 {
    d.lorentzian_factor() * n_env
}

/// Measurement-induced dephasing at mean photon number `alpha2`.
pub fn dephasing_meas(d: &DispersiveParams, alpha2: f64) -> f64 {
    2.0 * d.lorentzian_factor() * alpha2
}

/// `Gamma_2 = Gamma_1 / 2 + Gamma_phi_env + Gamma_phi_m`.
pub fn total_decoherence(gamma1: f64, gamma_phi_env: f64, gamma_phi_m: f64) -> f64 {
    gamma1 / 2.0 + gamma_phi_env + gamma_phi_m
}

/// Inverts [`dephasing_env`]: thermal occupancy producing `gamma_phi_env`.
pub fn n_env_from_dephasing(d: &DispersiveParams, gamma_phi_env: f64) -> f64 {
    gamma_phi_env / d.lorentzian_factor()
}

/// `SNR = |<I_g> - <I_e>| / sqrt(sigma_g^2 + sigma_e^2)`.
pub fn snr_from_stats(mean_g: f64, mean_e: f64, sigma_g: f64, sigma_e: f64) -> Result<f64> {
    let var = sigma_g * sigma_g + sigma_e * sigma_e;
    if !(sigma_g > 0.0 && sigma_e > 0.0) || !var.is_finite() {
        return Err(Error::domain("SNR needs strictly positive standard deviations"));
    }
    Ok((mean_g - mean_e).abs() / var.sqrt())
}

/// `Gamma_m = SNR^2 / (4 tau)`.
pub fn measurement_rate(snr: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("integration time must be positive, got {tau}")));
    }
    Ok(snr * snr / (4.0 * tau))
}

/// Measurement efficiency with a flag for unphysical (> 1) ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub value: f64,
    /// Set when the ratio exceeds one, which signals inconsistent inputs.
    pub exceeds_unity: bool,
}

/// `eta_m = Gamma_m / Gamma_phi_m`.
pub fn efficiency_meas(gamma_m: f64, gamma_phi_m: f64) -> Result<Efficiency> {
    if !(gamma_phi_m > 0.0) {
        return Err(Error::domain("measurement efficiency needs a positive dephasing rate"));
    }
    let value = gamma_m / gamma_phi_m;
    Ok(Efficiency { value, exceeds_unity: value > 1.0 })
}

/// `eta_env = 1 / (1 + 2 n_env)`.
pub fn efficiency_env(n_env: f64) -> Result<f64> {
    if !(n_env >= 0.0) {
        return Err(Error::domain(format!("n_env must be >= 0, got {n_env}")));
    }
    Ok(1.0 / (1.0 + 2.0 * n_env))
}

/// Inverse of [`efficiency_env`].
pub fn n_env_from_efficiency(eta_env: f64) -> Result<f64> {
    if !(eta_env > 0.0 && eta_env <= 1.0) {
        return Err(Error::domain(format!("environmental efficiency must be in (0, 1], got {eta_env}")));
    }
    Ok((1.0 / eta_env - 1.0) / 2.0)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityPrediction {
    pub fidelity: f64,
    pub p_e_given_g: f64,
    pub p_g_given_e: f64,
    /// Optimal threshold; ground is assigned above it.
    pub threshold: f64,
    pub snr: f64,
    /// Probability that an excited qubit relaxes within the exposure time.
    pub p_decay: f64,
    pub warnings: Vec<String>,
}

/// Ring-up allowance added to the integration time when estimating the
/// relaxation error: `tau_eff = tau + 2 / kappa`.
pub fn relaxation_exposure(d: &DispersiveParams, tau: f64) -> f64 {
    tau + 2.0 / d.kappa
}

/// Analytic readout fidelity.
///
/// Signals are in the units of the shot simulator: state means
/// `+-sqrt(Gamma_m) tau` with standard deviation `sqrt(tau / 2)`, so that
/// `SNR^2 = 4 Gamma_m tau` and `Gamma_m = eta_m Gamma_phi_m`. An excited
/// qubit that relaxes within `tau_eff` is counted as reading ground
/// (an upper estimate of the relaxation error). The threshold is scanned
/// between the two means at `1e-3 sigma` resolution.
pub fn fidelity_model(
    d: &DispersiveParams,
    q: &QubitSpec,
    m: &MeasurementConfig,
    eta_m: f64,
) -> Result<FidelityPrediction> {
    if !(eta_m > 0.0 && eta_m <= 1.0) {
        return Err(Error::domain(format!("eta_m must be in (0, 1], got {eta_m}")));
    }
    let mut warnings = Vec::new();
    if m.tau * d.kappa < 5.0 {
        warnings.push(format!(
            "integration time {:.3e} s is not long compared with 1/kappa = {:.3e} s",
            m.tau,
            1.0 / d.kappa
        ));
    }
    let gamma_m = eta_m * dephasing_meas(d, m.alpha2);
    let snr = (4.0 * gamma_m * m.tau).sqrt();
    let mean = gamma_m.sqrt() * m.tau;
    let sigma = (m.tau / 2.0).sqrt();
    let p_decay = if q.t1.is_infinite() { 0.0 } else { -(-relaxation_exposure(d, m.tau) / q.t1).exp_m1() };

    let errors = |t: f64| {
        let p_eg = normal_cdf((t - mean) / sigma);
        let p_ge = (1.0 - p_decay) * (1.0 - normal_cdf((t + mean) / sigma)) + p_decay * (1.0 - p_eg);
        (p_eg, p_ge)
    };
    let step = 1e-3 * sigma;
    let n_steps = ((2.0 * mean) / step).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0, 0.0);
    for k in 0..=n_steps {
        let t = (-mean + k as f64 * step).min(mean);
        let (p_eg, p_ge) = errors(t);
        let f = 1.0 - p_eg - p_ge;
        if f > best.0 {
            best = (f, p_eg, p_ge, t);
        }
    }
    let (fidelity, p_e_given_g, p_g_given_e, threshold) = best;
    Ok(FidelityPrediction { fidelity, p_e_given_g, p_g_given_e, threshold, snr, p_decay, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn reference() -> DispersiveParams {
        DispersiveParams::from_splitting(TAU * 1.7e6, TAU * 2.58e6, TAU * 10.929e9).unwrap()
    }

    #[test]
    fn env_dephasing_values() {
        let d = reference();
        assert_eq!(dephasing_env(&d, 0.0), 0.0);
        let r = dephasing_env(&d, 0.01);
        assert!((r - 4.91e4).abs() < 0.01e4, "{r}");
        let fast = DispersiveParams::new(d.chi, 1e18, d.omega_r).unwrap();
        assert!(dephasing_env(&fast, 0.01) < 1e-5);
    }

    #[test]
    fn meas_dephasing_values() {
        let d = reference();
        assert_eq!(dephasing_meas(&d, 0.0), 0.0);
        let r = dephasing_meas(&d, 1.0);
        assert!((r - 9.81e6).abs() < 0.01e6, "{r}");
        assert!((r / TAU - 1.56e6).abs() < 0.01e6);
        assert_eq!(dephasing_meas(&d, 0.3), 2.0 * dephasing_env(&d, 0.3));
    }

    #[test]
    fn decoherence_budget() {
        assert_eq!(total_decoherence(0.0, 0.0, 0.0), 0.0);
        let g1 = 1.0 / 27e-6;
        assert!((total_decoherence(g1, 0.0, 0.0) - 1.85e4).abs() < 0.01e4);
        let env = 1.0 / 17e-6 - g1 / 2.0;
        assert!((env - 4.03e4).abs() < 0.01e4);
        let n = n_env_from_dephasing(&reference(), env);
        assert!((n - 0.008).abs() < 0.0005, "{n}");
    }

    #[test]
    fn snr_and_rate() {
        assert_eq!(snr_from_stats(1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((snr_from_stats(1.0, -1.0, 1.0, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((snr_from_stats(5.0, -5.0, 1.0, 1.0).unwrap() - 50f64.sqrt()).abs() < 1e-14);
        assert!(snr_from_stats(1.0, 0.0, 0.0, 1.0).is_err());
        assert_eq!(measurement_rate(0.0, 1e-6).unwrap(), 0.0);
        assert!((measurement_rate(2.0, 1e-6).unwrap() - 1e6).abs() < 1e-6);
        assert!((measurement_rate(4.9, 350e-9).unwrap() - 1.72e7).abs() < 0.01e7);
    }

    #[test]
    fn efficiencies() {
        assert_eq!(efficiency_meas(3.0, 3.0).unwrap().value, 1.0);
        assert_eq!(efficiency_meas(0.0, 3.0).unwrap().value, 0.0);
        assert!((efficiency_meas(1.72e7, 2.45e7).unwrap().value - 0.702).abs() < 1e-3);
        assert!(efficiency_meas(2.0, 1.0).unwrap().exceeds_unity);
        assert!(efficiency_meas(1.0, 0.0).is_err());
        assert_eq!(efficiency_env(0.0).unwrap(), 1.0);
        assert!((efficiency_env(0.01).unwrap() - 0.9804).abs() < 5e-5);
        assert!((n_env_from_efficiency(0.88).unwrap() - 0.0682).abs() < 5e-5);
    }

    #[test]
    fn fidelity_limits() {
        let d = reference();
        let ideal = QubitSpec::new(0.0, f64::INFINITY, 0.0).unwrap();
        let strong = MeasurementConfig::new(50.0, 1e-6).unwrap();
        assert!((fidelity_model(&d, &ideal, &strong, 1.0).unwrap().fidelity - 1.0).abs() < 1e-12);
        let q = QubitSpec::new(0.0, 27e-6, 0.0).unwrap();
        let off = MeasurementConfig::new(0.0, 350e-9).unwrap();
        let f = fidelity_model(&d, &q, &off, 0.7).unwrap();
        assert!(f.fidelity.abs() < 1e-12);
    }

    #[test]
    fn fidelity_at_reference_point() {
        let d = reference();
        let q = QubitSpec::new(TAU * 6.297e9, 27e-6, 0.01).unwrap();
        let m = MeasurementConfig::new(2.5, 350e-9).unwrap();
        let f = fidelity_model(&d, &q, &m, 0.70).unwrap();
        assert!((0.96..=0.99).contains(&f.fidelity), "{}", f.fidelity);
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn invalid_efficiency_rejected() {
        let d = reference();
        let q = QubitSpec::new(0.0, 27e-6, 0.0).unwrap();
        let m = MeasurementConfig::new(1.0, 350e-9).unwrap();
        assert!(fidelity_model(&d, &q, &m, 0.0).is_err());
        assert!(fidelity_model(&d, &q, &m, 1.2).is_err());
    }
}
