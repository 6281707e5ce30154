use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};

/// Peak `|S - 1|` below which a trace is treated as featureless.
const MIN_FEATURE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LinewidthFit {
    /// Total linewidth kappa (rad/s).
    pub kappa: f64,
    /// kappa_ext / kappa as seen from the probed port.
    pub kappa_ext_fraction: f64,
    /// Fitted resonance frequency (rad/s).
    pub center: f64,
    /// Euclidean norm of the complex fit residual.
    pub residual_norm: f64,
}

#[cfg(test)]
fn lorentzian(w: f64, center: f64, kappa: f64, kappa_ext: f64) -> Complex64 {
    lorentzian_offset(w - center, kappa, kappa_ext)
}

fn lorentzian_offset(detuning: f64, kappa: f64, kappa_ext: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) + kappa_ext / Complex64::new(-kappa / 2.0, detuning)
}

/// Indices of distinct peaks of `y` whose height exceeds half the maximum.
/// Two maxima count as distinct when the trace dips below 80% of the lower
/// one between them.
fn distinct_peaks(y: &[f64]) -> Vec<usize> {
    let max = y.iter().copied().fold(0.0, f64::max);
    let n = y.len();
    let mut candidates = Vec::new();
    for i in 0..n {
        let left = if i == 0 { f64::NEG_INFINITY } else { y[i - 1] };
        let right = if i + 1 == n { f64::NEG_INFINITY } else { y[i + 1] };
        if y[i] >= 0.5 * max && y[i] >= left && y[i] > right {
            candidates.push(i);
        }
    }
    let mut peaks: Vec<usize> = Vec::new();
    for c in candidates {
        match peaks.last_mut() {
            Some(last) => {
                let valley = y[*last..=c].iter().copied().fold(f64::INFINITY, f64::min);
                if valley < 0.8 * y[*last].min(y[c]) {
                    peaks.push(c);
                } else if y[c] > y[*last] {
                    *last = c;
                }
            }
            None => peaks.push(c),
        }
    }
    peaks
}

/// Least-squares Lorentzian fit of a single-port reflection trace,
/// `S(w) = 1 + kappa_ext / (-kappa/2 + i (w - w0))`.
pub fn effective_linewidth(trace: &[Complex64], freqs: &[f64]) -> Result<LinewidthFit> {
    if trace.len() != freqs.len() {
        return Err(Error::domain("trace and frequency grid differ in length"));
    }
    if trace.len() < 5 {
        return Err(Error::domain("need at least 5 points for a linewidth fit"));
    }
    let dev: Vec<f64> = trace.iter().map(|s| (s - 1.0).norm()).collect();
    let peaks = distinct_peaks(&dev);
    let (imax, &peak) = dev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if !(peak >= MIN_FEATURE) {
        return Err(Error::Fit(format!("no resonant feature (peak |S-1| = {peak:.2e})")));
    }
    if peaks.len() > 1 {
        let at: Vec<f64> = peaks.iter().map(|&i| freqs[i]).collect();
        return Err(Error::Ambiguity(format!("{} resonant features at {at:?} rad/s", peaks.len())));
    }

    // |S-1|^2 is a Lorentzian of full width kappa; read off the half-maximum crossings.
    let half = peak / std::f64::consts::SQRT_2;
    let left = (0..imax).rev().find(|&i| dev[i] < half).map(|i| freqs[i]);
    let right = (imax + 1..dev.len()).find(|&i| dev[i] < half).map(|i| freqs[i]);
    let span = (freqs[freqs.len() - 1] - freqs[0]).abs();
    let center0 = freqs[imax];
    let kappa0 = match (left, right) {
        (Some(l), Some(r)) => (r - l).abs(),
        (Some(l), None) => 2.0 * (center0 - l).abs(),
        (None, Some(r)) => 2.0 * (r - center0).abs(),
        (None, None) => span,
    }
    .max(span * 1e-6);
    let kext0 = peak * kappa0 / 2.0;

    let residuals = |p: &[f64]| {
        let shift = p[0] * kappa0;
        let kappa = p[1] * kappa0;
        let kext = p[2] * kappa0;
        let mut r = DVector::zeros(2 * trace.len());
        for (i, (&w, s)) in freqs.iter().zip(trace).enumerate() {
            let d = lorentzian_offset((w - center0) - shift, kappa, kext) - s;
            r[2 * i] = d.re;
            r[2 * i + 1] = d.im;
        }
        r
    };
    let fit = levenberg_marquardt(residuals, &[0.0, 1.0, kext0 / kappa0], &LmOptions::default())?;
    let kappa = fit.params[1] * kappa0;
    if !(kappa > 0.0) {
        return Err(Error::Fit(format!("fitted linewidth is not positive ({kappa:.3e})")));
    }
    Ok(LinewidthFit {
        kappa,
        kappa_ext_fraction: fit.params[2] * kappa0 / kappa,
        center: center0 + fit.params[0] * kappa0,
        residual_norm: fit.cost.sqrt(),
    })
}
