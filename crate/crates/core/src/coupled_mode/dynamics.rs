use num_complex::Complex64;
use rayon::prelude::*;

use super::{DriveKind, NetworkSpec, ScatteringResult};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coupling part of the dynamics (no detuning term).
fn coupling_matrix(net: &NetworkSpec) -> CMatrix {
    let n = net.modes().len();
    let mut a = CMatrix::zeros(2 * n, 2 * n);
    for (j, m) in net.modes().iter().enumerate() {
        a[(j, j)] = Complex64::new(-m.kappa() / 2.0, 0.0);
        a[(n + j, n + j)] = Complex64::new(-m.kappa() / 2.0, 0.0);
    }
    for d in net.drives() {
        let p = net.mode_index(&d.mode_a).expect("validated");
        let q = net.mode_index(&d.mode_b).expect("validated");
        let e = Complex64::from_polar(d.strength, d.phase);
        match d.kind {
            DriveKind::Conversion => {
                a[(p, q)] += -I * e;
                a[(q, p)] += -I * e.conj();
                a[(n + p, n + q)] += I * e.conj();
                a[(n + q, n + p)] += I * e;
            }
            DriveKind::Gain if p == q => {
                a[(p, n + p)] += -I * e;
                a[(n + p, p)] += I * e.conj();
            }
            DriveKind::Gain => {
                a[(p, n + q)] += -I * e;
                a[(q, n + p)] += -I * e;
                a[(n + p, q)] += I * e.conj();
                a[(n + q, p)] += I * e.conj();
            }
        }
    }
    a
}

fn probe_offset(net: &NetworkSpec, probe_freq: f64) -> Result<f64> {
    if !(probe_freq > 0.0) || !probe_freq.is_finite() {
        return Err(Error::domain(format!("probe frequency must be positive, got {probe_freq}")));
    }
    let p = net.require_mode(net.probe_port())?;
    Ok(probe_freq - net.modes()[p].omega)
}

/// Dynamics matrix `M(w) = A + i delta` in the doubled basis, with
/// `delta = probe_freq - omega(probe mode)`. Diagonal entries are
/// `-kappa_j/2 + i delta` in both sectors.
pub fn assemble_dynamics(net: &NetworkSpec, probe_freq: f64) -> Result<CMatrix> {
    let delta = probe_offset(net, probe_freq)?;
    Ok(dynamics_at_offset(net, delta))
}

pub(crate) fn dynamics_at_offset(net: &NetworkSpec, delta: f64) -> CMatrix {
    let mut m = coupling_matrix(net);
    for k in 0..m.nrows() {
        m[(k, k)] += I * delta;
    }
    m
}

/// Largest real part among the eigenvalues of the coupling matrix. Stable
/// networks return a negative number; the frequency offset only shifts
/// eigenvalues along the imaginary axis.
pub fn stability_margin(net: &NetworkSpec) -> f64 {
    eigenvalues(&coupling_matrix(net)).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn check_stable(net: &NetworkSpec) -> Result<()> {
    let max_re = stability_margin(net);
    if max_re > -1e-9 * net.kappa_max() {
        return Err(Error::Instability { drive: net.offending_gain_drive(), max_real_part: max_re });
    }
    Ok(())
}

/// Port coupling matrix `K` (modes x ports, doubled).
pub(crate) fn port_matrix(net: &NetworkSpec) -> (CMatrix, Vec<String>) {
    let n = net.modes().len();
    let ports = net.ports();
    let np = ports.len();
    let mut k = CMatrix::zeros(2 * n, 2 * np);
    let mut labels = Vec::with_capacity(2 * np);
    for (c, p) in ports.iter().enumerate() {
        let r = Complex64::new(p.rate.sqrt(), 0.0);
        k[(p.mode, c)] = r;
        k[(n + p.mode, np + c)] = r;
        labels.push(p.label.clone());
    }
    for p in &ports {
        labels.push(format!("{}*", p.label));
    }
    (k, labels)
}

/// Mode response `x = chi x_in` with `chi = -M^{-1} K`.
pub(crate) fn susceptibility(net: &NetworkSpec, k: &CMatrix, delta: f64) -> Result<CMatrix> {
    let m = dynamics_at_offset(net, delta);
    m.lu()
        .solve(k)
        .map(|x| -x)
        .ok_or_else(|| Error::Instability { drive: net.offending_gain_drive(), max_real_part: 0.0 })
}

fn scattering_at_offset(net: &NetworkSpec, k: &CMatrix, delta: f64) -> Result<CMatrix> {
    let chi = susceptibility(net, k, delta)?;
    let np2 = k.ncols();
    Ok(CMatrix::identity(np2, np2) - k.transpose() * chi)
}

/// `S(w) = I + K^T M(w)^{-1} K`, including internal-loss ports.
pub fn scattering_matrix(net: &NetworkSpec, probe_freq: f64) -> Result<ScatteringResult> {
    let delta = probe_offset(net, probe_freq)?;
    check_stable(net)?;
    let (k, port_labels) = port_matrix(net);
    let s_matrix = scattering_at_offset(net, &k, delta)?;
    Ok(ScatteringResult { frequency: probe_freq, s_matrix, port_labels })
}

/// Reflection coefficient `S_port,port` over a frequency grid, in grid order.
pub fn reflection_trace(net: &NetworkSpec, port: &str, freqs: &[f64]) -> Result<Vec<Complex64>> {
    if freqs.is_empty() {
        return Err(Error::domain("empty frequency grid"));
    }
    let mode = net.require_mode(port)?;
    if net.modes()[mode].kappa_ext <= 0.0 {
        return Err(Error::domain(format!("port `{port}` has no external coupling")));
    }
    check_stable(net)?;
    let (k, labels) = port_matrix(net);
    let idx = labels.iter().position(|l| l == port).expect("external port present");
    let omega_probe = net.modes()[net.require_mode(net.probe_port())?].omega;
    freqs
        .par_iter()
        .map(|&w| {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::domain(format!("probe frequency must be positive, got {w}")));
            }
            let s = scattering_at_offset(net, &k, w - omega_probe)?;
            Ok(s[(idx, idx)])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled_mode::{DriveSpec, ModeSpec};

    const W: f64 = 2.0e10;

    fn single(kext: f64, kint: f64) -> NetworkSpec {
        NetworkSpec::new(vec![ModeSpec::new("a", W, kext, kint)], vec![], "a").unwrap()
    }

    #[test]
    fn single_mode_on_resonance_is_pure_damping() {
        let m = assemble_dynamics(&single(2.0, 0.0), W).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m[(0, 0)], Complex64::new(-1.0, 0.0));
        assert_eq!(m[(1, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn single_mode_detuned_carries_detuning_on_diagonal() {
        let m = assemble_dynamics(&single(2.0, 0.0), W + 5.0).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(-1.0, 5.0));
        assert_eq!(m[(1, 1)], Complex64::new(-1.0, 5.0));
    }

    #[test]
    fn conversion_stays_in_signal_sector() {
        let net = NetworkSpec::new(
            vec![ModeSpec::new("a", W, 1.0, 0.0), ModeSpec::new("b", 0.7 * W, 1.0, 0.0)],
            vec![DriveSpec::conversion("a", "b", 0.3, 1.1)],
            "a",
        )
        .unwrap();
        let m = assemble_dynamics(&net, W).unwrap();
        assert!((m[(0, 1)].norm() - 0.3).abs() < 1e-15);
        assert!((m[(1, 0)].norm() - 0.3).abs() < 1e-15);
        for r in 0..2 {
            for c in 2..4 {
                assert_eq!(m[(r, c)].norm(), 0.0);
                assert_eq!(m[(c, r)].norm(), 0.0);
            }
        }
        assert!((net.pump_frequency(0).unwrap() - 0.3 * W).abs() < 1e-3);
    }

    #[test]
    fn nonpositive_probe_is_domain_error() {
        assert!(matches!(assemble_dynamics(&single(1.0, 0.0), 0.0), Err(Error::Domain(_))));
        assert!(matches!(assemble_dynamics(&single(1.0, 0.0), -3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn unresolved_mode_is_configuration_error() {
        let r = NetworkSpec::new(
            vec![ModeSpec::new("a", W, 1.0, 0.0)],
            vec![DriveSpec::conversion("a", "zz", 0.3, 0.0)],
            "a",
        );
        assert!(matches!(r, Err(Error::Configuration(_))));
    }

    #[test]
    fn overcoupled_reflection_is_minus_one() {
        let s = scattering_matrix(&single(3.0, 0.0), W).unwrap();
        let r = s.element("a", "a").unwrap();
        assert!((r - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn degenerate_gain_above_threshold_is_rejected() {
        let net = NetworkSpec::new(
            vec![ModeSpec::new("b", W, 2.0, 0.0)],
            vec![DriveSpec::gain("b", "b", 1.2, 0.0)],
            "b",
        )
        .unwrap();
        match scattering_matrix(&net, W) {
            Err(Error::Instability { drive, .. }) => assert!(drive.contains("gain drive #0")),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_paramp_gain_matches_closed_form() {
        let (k, g) = (2.0, 0.8);
        let net = NetworkSpec::new(
            vec![ModeSpec::new("b", W, k, 0.0)],
            vec![DriveSpec::gain("b", "b", g, 0.0)],
            "b",
        )
        .unwrap();
        let s = scattering_matrix(&net, W).unwrap();
        let expected = -(k * k / 4.0 + g * g) / (k * k / 4.0 - g * g);
        assert!((s.s_matrix[(0, 0)].re - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(matches!(reflection_trace(&single(1.0, 1.0), "a", &[]), Err(Error::Domain(_))));
    }
}
