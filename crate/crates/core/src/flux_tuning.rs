//! Static spectroscopy: flux-tuned SQUID resonator frequencies, ladders of
//! spurious standing-wave resonances and the hybridized (anti-crossing)
//! spectrum of coupled lossy modes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coupled_mode::ModeSpec;
use crate::error::{Error, Result};
use crate::linalg::{eig, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxTuneParams {
    /// Frequency at zero flux (rad/s).
    pub omega_max: f64,
    /// Fraction of the frequency that tunes with flux, in (0, 1].
    pub participation: f64,
    /// Applied flux in units of the flux quantum.
    pub flux: f64,
}

impl FluxTuneParams {
    /// Picks `omega_max` so the mode sits at `omega` when biased at `flux`.
    pub fn calibrated(omega: f64, flux: f64, participation: f64) -> Result<Self> {
        let shape = participation * (PI * flux).cos().abs().sqrt() + (1.0 - participation);
        if !(shape > 0.0) || flux.abs() >= 0.5 {
            return Err(Error::domain("calibration point outside the first flux branch"));
        }
        Ok(Self { omega_max: omega / shape, participation, flux })
    }

    pub fn at_flux(self, flux: f64) -> Self {
        Self { flux, ..self }
    }

    /// Smallest non-negative flux on the first branch where the mode reaches
    /// `omega`, if it does.
    pub fn flux_for_frequency(&self, omega: f64) -> Option<f64> {
        if self.participation <= 0.0 {
            return None;
        }
        let root = (omega / self.omega_max - (1.0 - self.participation)) / self.participation;
        if !(0.0..=1.0).contains(&root) {
            return None;
        }
        let flux = (root * root).acos() / PI;
        (flux < 0.5).then_some(flux)
    }
}

/// `omega_max [p sqrt|cos(pi flux)| + (1 - p)]` on the first branch `|flux| < 0.5`.
pub fn squid_frequency(params: &FluxTuneParams) -> Result<f64> {
    let p = params.participation;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("participation must be in [0, 1], got {p}")));
    }
    if !(params.flux.abs() < 0.5) {
        return Err(Error::domain(format!("flux {} is outside the first branch (|flux| < 0.5)", params.flux)));
    }
    Ok(params.omega_max * (p * (PI * params.flux).cos().sqrt() + (1.0 - p)))
}

/// Equally spaced standing-wave resonances `anchor + k fsr`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpuriousLadder {
    pub fsr: f64,
    pub anchor: f64,
    /// Coupling of the i-th element (ascending, within the modeled range) to
    /// every non-ladder mode. The last entry repeats for further elements.
    pub couplings: Vec<f64>,
    /// Linewidth of each ladder element (rad/s).
    pub kappa: f64,
}

impl SpuriousLadder {
    pub fn validate(&self) -> Result<()> {
        if !(self.fsr > 0.0) {
            return Err(Error::config("ladder free spectral range must be positive"));
        }
        if self.couplings.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::config("ladder couplings must be non-negative"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::config("ladder linewidth must be positive"));
        }
        Ok(())
    }

    pub fn coupling(&self, element: usize) -> f64 {
        self.couplings.get(element).or(self.couplings.last()).copied().unwrap_or(0.0)
    }
}

/// Ladder elements inside `[lo, hi]`, ascending.
pub fn ladder_frequencies(ladder: &SpuriousLadder, range: [f64; 2]) -> Result<Vec<f64>> {
    let [lo, hi] = range;
    if !(hi >= lo) {
        return Err(Error::domain("empty frequency range"));
    }
    if !(ladder.fsr > 0.0) {
        return Err(Error::config("ladder free spectral range must be positive"));
    }
    let k_lo = ((lo - ladder.anchor) / ladder.fsr).ceil() as i64;
    let k_hi = ((hi - ladder.anchor) / ladder.fsr).floor() as i64;
    Ok((k_lo..=k_hi)
        .map(|k| ladder.anchor + k as f64 * ladder.fsr)
        .filter(|w| *w >= lo && *w <= hi)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSpectrum {
    /// Real parts of the eigenvalues (rad/s).
    pub eigenfrequencies: Vec<f64>,
    /// `-2 Im(lambda)` (rad/s).
    pub eigenlinewidths: Vec<f64>,
    /// Row k: weight of every bare mode in eigenmode k, summing to one.
    pub participations: Vec<Vec<f64>>,
    pub eigenvectors: Vec<CVector>,
}

impl HybridSpectrum {
    pub fn len(&self) -> usize {
        self.eigenfrequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenfrequencies.is_empty()
    }

    fn permuted(&self, order: &[usize]) -> Self {
        Self {
            eigenfrequencies: order.iter().map(|&i| self.eigenfrequencies[i]).collect(),
            eigenlinewidths: order.iter().map(|&i| self.eigenlinewidths[i]).collect(),
            participations: order.iter().map(|&i| self.participations[i].clone()).collect(),
            eigenvectors: order.iter().map(|&i| self.eigenvectors[i].clone()).collect(),
        }
    }
}

/// Diagonalizes `H = diag(omega_j - i kappa_j / 2) + g`, sorted by frequency.
pub fn hybridized_spectrum(bare: &[ModeSpec], couplings: &DMatrix<f64>) -> Result<HybridSpectrum> {
    let n = bare.len();
    if couplings.nrows() != n || couplings.ncols() != n {
        return Err(Error::config(format!(
            "coupling matrix is {}x{} for {n} modes",
            couplings.nrows(),
            couplings.ncols()
        )));
    }
    let scale = couplings.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    for i in 0..n {
        for j in 0..i {
            if (couplings[(i, j)] - couplings[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::config(format!("coupling matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    if n == 0 {
        return Ok(HybridSpectrum {
            eigenfrequencies: vec![],
            eigenlinewidths: vec![],
            participations: vec![],
            eigenvectors: vec![],
        });
    }
    // diagonalize relative to the mean frequency to keep splittings well resolved
    let reference = bare.iter().map(|m| m.omega).sum::<f64>() / n as f64;
    let h = CMatrix::from_fn(n, n, |i, j| {
        let mut z = Complex64::new(couplings[(i, j)], 0.0);
        if i == j {
            z += Complex64::new(bare[i].omega - reference, -bare[i].kappa() / 2.0);
        }
        z
    });
    let (values, vectors) = eig(&h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let spectrum = HybridSpectrum {
        eigenfrequencies: values.iter().map(|z| z.re + reference).collect(),
        eigenlinewidths: values.iter().map(|z| -2.0 * z.im).collect(),
        participations: vectors
            .iter()
            .map(|v| {
                let total: f64 = v.iter().map(|c| c.norm_sqr()).sum();
                v.iter().map(|c| c.norm_sqr() / total).collect()
            })
            .collect(),
        eigenvectors: vectors,
    };
    Ok(spectrum.permuted(&order))
}

/// A flux-tunable mode in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TunableMode {
    pub label: String,
    pub tuning: FluxTuneParams,
    pub kappa: f64,
}

/// Everything needed to compute spectra along a flux sweep: tunable modes,
/// fixed modes, their mutual couplings and an optional spurious ladder.
///
/// Bare-mode order in every spectrum is tunable modes, fixed modes, then
/// ladder elements inside `ladder_range` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepModel {
    pub tunable: Vec<TunableMode>,
    pub fixed: Vec<ModeSpec>,
    /// Symmetric couplings among tunable and fixed modes (in that order).
    pub couplings: DMatrix<f64>,
    pub ladder: Option<SpuriousLadder>,
    pub ladder_range: [f64; 2],
}

impl SweepModel {
    pub fn labels(&self) -> Result<Vec<String>> {
        let mut labels: Vec<String> = self.tunable.iter().map(|t| t.label.clone()).collect();
        labels.extend(self.fixed.iter().map(|m| m.label.clone()));
        if let Some(ladder) = &self.ladder {
            let n = ladder_frequencies(ladder, self.ladder_range)?.len();
            labels.extend((0..n).map(|i| format!("spurious{i}")));
        }
        Ok(labels)
    }

    fn bare_at(&self, flux: f64) -> Result<(Vec<ModeSpec>, DMatrix<f64>)> {
        let mut bare = Vec::new();
        for t in &self.tunable {
            let omega = squid_frequency(&t.tuning.at_flux(flux))?;
            bare.push(ModeSpec::new(t.label.clone(), omega, t.kappa, 0.0));
        }
        bare.extend(self.fixed.iter().cloned());
        let core = bare.len();
        if self.couplings.nrows() != core || self.couplings.ncols() != core {
            return Err(Error::config(format!("coupling matrix must be {core}x{core}")));
        }
        let mut rungs = Vec::new();
        if let Some(ladder) = &self.ladder {
            ladder.validate()?;
            rungs = ladder_frequencies(ladder, self.ladder_range)?;
            for (i, w) in rungs.iter().enumerate() {
                bare.push(ModeSpec::new(format!("spurious{i}"), *w, ladder.kappa, 0.0));
            }
        }
        let n = bare.len();
        let mut g = DMatrix::zeros(n, n);
        g.view_mut((0, 0), (core, core)).copy_from(&self.couplings);
        if let Some(ladder) = &self.ladder {
            for i in 0..rungs.len() {
                for j in 0..core {
                    g[(core + i, j)] = ladder.coupling(i);
                    g[(j, core + i)] = ladder.coupling(i);
                }
            }
        }
        Ok((bare, g))
    }
}

/// Hybridized spectra along `fluxes`, with eigenmodes re-ordered so that
/// index k follows the same branch from point to point (maximum eigenvector
/// overlap with the previous point). The first point is sorted by frequency.
pub fn flux_sweep(model: &SweepModel, fluxes: &[f64]) -> Result<Vec<HybridSpectrum>> {
    if fluxes.is_empty() {
        return Err(Error::domain("empty flux grid"));
    }
    let raw: Vec<HybridSpectrum> = fluxes
        .par_iter()
        .map(|&f| {
            let (bare, g) = model.bare_at(f)?;
            hybridized_spectrum(&bare, &g)
        })
        .collect::<Result<_>>()?;
    let mut tracked: Vec<HybridSpectrum> = Vec::with_capacity(raw.len());
    for spectrum in raw {
        let next = match tracked.last() {
            None => spectrum,
            Some(prev) => {
                let order = match_branches(prev, &spectrum);
                spectrum.permuted(&order)
            }
        };
        tracked.push(next);
    }
    Ok(tracked)
}

/// `order[k]` = index in `next` continuing branch k of `prev`.
fn match_branches(prev: &HybridSpectrum, next: &HybridSpectrum) -> Vec<usize> {
    let n = prev.len();
    let mut pairs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let overlap = prev.eigenvectors[i].dotc(&next.eigenvectors[j]).norm();
            pairs.push((overlap, i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut order = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, i, j) in pairs {
        if order[i] == usize::MAX && !used[j] {
            order[i] = j;
            used[j] = true;
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const GHZ: f64 = TAU * 1e9;
    const MHZ: f64 = TAU * 1e6;

    #[test]
    fn zero_flux_is_maximum() {
        let p = FluxTuneParams { omega_max: 12.0 * GHZ, participation: 0.6, flux: 0.0 };
        assert_eq!(squid_frequency(&p).unwrap(), 12.0 * GHZ);
    }

    #[test]
    fn untunable_mode_ignores_flux() {
        let p = FluxTuneParams { omega_max: 9.0 * GHZ, participation: 0.0, flux: 0.0 };
        for f in [-0.4, -0.1, 0.2, 0.45] {
            assert_eq!(squid_frequency(&p.at_flux(f)).unwrap(), 9.0 * GHZ);
        }
    }

    #[test]
    fn half_flux_quantum_is_out_of_model() {
        let p = FluxTuneParams { omega_max: 9.0 * GHZ, participation: 1.0, flux: 0.5 };
        assert!(matches!(squid_frequency(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn calibrated_curve_crosses_cavity_at_calibration_flux() {
        let p = FluxTuneParams::calibrated(10.929 * GHZ, 0.219, 0.8).unwrap();
        let f = p.flux_for_frequency(10.929 * GHZ).unwrap();
        assert!((f - 0.219).abs() < 1e-12);
        assert!((squid_frequency(&p).unwrap() - 10.929 * GHZ).abs() < 1e-3);
    }

    #[test]
    fn ladder_counts() {
        let ladder = SpuriousLadder { fsr: 535.0 * MHZ, anchor: 10.7 * GHZ, couplings: vec![], kappa: MHZ };
        for start in [9.0, 9.3, 10.7, 10.95] {
            let n = ladder_frequencies(&ladder, [start * GHZ, start * GHZ + 1070.0 * MHZ]).unwrap().len();
            assert!(n == 2 || n == 3, "{n} elements from {start} GHz");
        }
        assert!(ladder_frequencies(&ladder, [10.75 * GHZ, 11.2 * GHZ]).unwrap().is_empty());
        let one = ladder_frequencies(&ladder, [10.6 * GHZ, 10.8 * GHZ]).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one[0] - 10.7 * GHZ).abs() < 1.0);
    }

    #[test]
    fn uncoupled_spectrum_is_bare() {
        let bare = vec![ModeSpec::new("x", 7.0 * GHZ, 3.0 * MHZ, 0.0), ModeSpec::new("y", 9.0 * GHZ, 1.0 * MHZ, 0.5 * MHZ)];
        let s = hybridized_spectrum(&bare, &DMatrix::zeros(2, 2)).unwrap();
        assert!((s.eigenfrequencies[0] - 7.0 * GHZ).abs() < 1e-3);
        assert!((s.eigenfrequencies[1] - 9.0 * GHZ).abs() < 1e-3);
        assert!((s.eigenlinewidths[0] - 3.0 * MHZ).abs() < 1e-6);
        assert!((s.eigenlinewidths[1] - 1.5 * MHZ).abs() < 1e-6);
    }

    #[test]
    fn degenerate_pair_splits_by_twice_coupling() {
        let g = 12.0 * MHZ;
        let bare = vec![ModeSpec::new("x", 8.0 * GHZ, 1e-9, 0.0), ModeSpec::new("y", 8.0 * GHZ, 1e-9, 0.0)];
        let s = hybridized_spectrum(&bare, &DMatrix::from_row_slice(2, 2, &[0.0, g, g, 0.0])).unwrap();
        let split = s.eigenfrequencies[1] - s.eigenfrequencies[0];
        assert!((split - 2.0 * g).abs() < 1e-9 * g, "{split}");
        for row in &s.participations {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((row[0] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn asymmetric_couplings_rejected() {
        let bare = vec![ModeSpec::new("x", 8.0 * GHZ, 1.0, 0.0), ModeSpec::new("y", 8.0 * GHZ, 1.0, 0.0)];
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(hybridized_spectrum(&bare, &g), Err(Error::Configuration(_))));
    }
}
