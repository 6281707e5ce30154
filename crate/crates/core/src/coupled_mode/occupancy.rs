use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::dynamics::{check_stable, port_matrix, susceptibility};
use super::NetworkSpec;
use crate::error::{Error, Result};
use crate::quad::integrate_real_line;

/// Relative tolerance of the frequency integral.
const REL_TOL: f64 = 1e-6;

/// Every port (external and loss) of `net` at occupancy `n`.
pub fn uniform_baths(net: &NetworkSpec, n: f64) -> BTreeMap<String, f64> {
    net.ports().into_iter().map(|p| (p.label, n)).collect()
}

/// Steady-state occupancy `<a^dag a>` of `target_mode` (vacuum excluded).
///
/// Each port `p` injects white noise with `<a_in^dag a_in> = n_p`. The mode
/// picks it up through the signal-sector susceptibility with weight `n_p`
/// and through the conjugate sector (amplified vacuum) with weight `n_p + 1`.
/// The spectral density is integrated over the whole real line.
pub fn mode_occupancy_from_noise(
    net: &NetworkSpec,
    target_mode: &str,
    bath_occupations: &BTreeMap<String, f64>,
) -> Result<f64> {
    let j = net.require_mode(target_mode)?;
    let ports = net.ports();
    let mut occupations = Vec::with_capacity(ports.len());
    for p in &ports {
        let n = *bath_occupations
            .get(&p.label)
            .ok_or_else(|| Error::domain(format!("no bath occupancy for port `{}`", p.label)))?;
        if !(n >= 0.0) || !n.is_finite() {
            return Err(Error::domain(format!("bath occupancy for `{}` must be >= 0", p.label)));
        }
        occupations.push(n);
    }
    for label in bath_occupations.keys() {
        if !ports.iter().any(|p| &p.label == label) {
            return Err(Error::domain(format!("bath given for unknown port `{label}`")));
        }
    }
    check_stable(net)?;

    let (k, _) = port_matrix(net);
    let np = ports.len();
    let mut failure = None;
    let density = |delta: f64| -> f64 {
        match susceptibility(net, &k, delta) {
            Ok(chi) => (0..np)
                .map(|p| chi[(j, p)].norm_sqr() * occupations[p] + chi[(j, np + p)].norm_sqr() * (occupations[p] + 1.0))
                .sum::<f64>(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let result = integrate_real_line(density, net.kappa_max() / 2.0, REL_TOL, 1e-14);
    if let Some(e) = failure {
        return Err(e);
    }
    if !result.value.is_finite() {
        return Err(Error::Instability { drive: net.offending_gain_drive(), max_real_part: 0.0 });
    }
    Ok(result.value / TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled_mode::{DriveSpec, ModeSpec};

    const W: f64 = 3e10;

    fn pair() -> NetworkSpec {
        NetworkSpec::new(
            vec![ModeSpec::new("a", W, 1.0, 0.2), ModeSpec::new("b", 0.8 * W, 3.0, 0.0)],
            vec![DriveSpec::conversion("a", "b", 0.9, 0.4)],
            "a",
        )
        .unwrap()
    }

    #[test]
    fn passive_network_thermalizes() {
        let net = pair();
        let n = mode_occupancy_from_noise(&net, "a", &uniform_baths(&net, 0.37)).unwrap();
        assert!((n - 0.37).abs() < 1e-6 * 0.37, "{n}");
    }

    #[test]
    fn vacuum_stays_vacuum() {
        let net = pair();
        let n = mode_occupancy_from_noise(&net, "b", &uniform_baths(&net, 0.0)).unwrap();
        assert!(n.abs() < 1e-12);
    }

    #[test]
    fn degenerate_paramp_occupancy_closed_form() {
        // <b^dag b> = 2 g^2 / (kappa^2 - 4 g^2) for a vacuum-driven degenerate amplifier
        let (k, g) = (2.0, 0.6);
        let net = NetworkSpec::new(vec![ModeSpec::new("b", W, k, 0.0)], vec![DriveSpec::gain("b", "b", g, 0.0)], "b")
            .unwrap();
        let n = mode_occupancy_from_noise(&net, "b", &uniform_baths(&net, 0.0)).unwrap();
        let expected = 2.0 * g * g / (k * k - 4.0 * g * g);
        assert!((n - expected).abs() < 1e-6 * expected, "{n} vs {expected}");
    }

    #[test]
    fn missing_bath_is_rejected() {
        let net = pair();
        let mut baths = uniform_baths(&net, 0.1);
        baths.remove("a/loss");
        assert!(matches!(mode_occupancy_from_noise(&net, "a", &baths), Err(Error::Domain(_))));
    }
}
