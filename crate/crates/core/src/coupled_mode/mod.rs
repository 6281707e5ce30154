//! Frequency-domain input-output theory for networks of parametrically
//! coupled resonator modes.
//!
//! Every mode is described in its own rotating frame, with each pump exactly
//! resonant with the frequency difference (conversion) or sum (gain) of the
//! modes it couples. A probe at absolute frequency `omega` entering the probe
//! port then appears in every mode at the same offset
//! `delta = omega - omega_probe_mode`.
//!
//! The state vector is doubled: the first `n` entries are the annihilation
//! components `a_j[delta]`, the next `n` the creation components
//! `a_j^dag[delta]`. Ports follow the same layout.

mod dynamics;
mod linewidth;
mod occupancy;
pub mod presets;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use dynamics::{assemble_dynamics, reflection_trace, scattering_matrix, stability_margin};
pub use linewidth::{effective_linewidth, LinewidthFit};
pub use occupancy::{mode_occupancy_from_noise, uniform_baths};

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub label: String,
    /// Resonance angular frequency (rad/s).
    pub omega: f64,
    /// Coupling rate to the external line (rad/s).
    pub kappa_ext: f64,
    /// Internal loss rate (rad/s), modeled as a fictitious thermal port.
    pub kappa_int: f64,
}

impl ModeSpec {
    pub fn new(label: impl Into<String>, omega: f64, kappa_ext: f64, kappa_int: f64) -> Self {
        Self { label: label.into(), omega, kappa_ext, kappa_int }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_ext + self.kappa_int
    }

    fn validate(&self) -> Result<()> {
        if !(self.kappa_ext >= 0.0 && self.kappa_int >= 0.0) {
            return Err(Error::config(format!("mode `{}`: negative linewidth", self.label)));
        }
        if !(self.kappa() > 0.0) || !self.kappa().is_finite() {
            return Err(Error::config(format!("mode `{}`: total linewidth must be positive", self.label)));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::config(format!("mode `{}`: frequency must be positive", self.label)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    /// Beam-splitter coupling `g (e^{i phase} a^dag b + h.c.)`.
    Conversion,
    /// Two-mode squeezing `g (e^{i phase} a^dag b^dag + h.c.)`, or
    /// `g/2 (e^{i phase} a^dag^2 + h.c.)` when both ends name the same mode.
    Gain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveSpec {
    pub kind: DriveKind,
    pub mode_a: String,
    pub mode_b: String,
    /// Coupling rate g (rad/s).
    pub strength: f64,
    /// Drive phase, normalized into `[0, 2pi)` when the network is built.
    pub phase: f64,
}

impl DriveSpec {
    pub fn conversion(a: impl Into<String>, b: impl Into<String>, strength: f64, phase: f64) -> Self {
        Self { kind: DriveKind::Conversion, mode_a: a.into(), mode_b: b.into(), strength, phase }
    }

    pub fn gain(a: impl Into<String>, b: impl Into<String>, strength: f64, phase: f64) -> Self {
        Self { kind: DriveKind::Gain, mode_a: a.into(), mode_b: b.into(), strength, phase }
    }

    fn describe(&self, index: usize) -> String {
        let kind = match self.kind {
            DriveKind::Conversion => "conversion",
            DriveKind::Gain => "gain",
        };
        format!("{kind} drive #{index} ({}-{}, g = {:.4e} rad/s)", self.mode_a, self.mode_b, self.strength)
    }
}

/// A validated, immutable coupled-mode network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    modes: Vec<ModeSpec>,
    drives: Vec<DriveSpec>,
    probe_port: String,
}

/// One external or internal-loss port.
#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub label: String,
    pub mode: usize,
    pub rate: f64,
    pub is_loss: bool,
}

impl NetworkSpec {
    pub fn new(modes: Vec<ModeSpec>, mut drives: Vec<DriveSpec>, probe_port: impl Into<String>) -> Result<Self> {
        let probe_port = probe_port.into();
        if modes.is_empty() {
            return Err(Error::config("network has no modes"));
        }
        for m in &modes {
            m.validate()?;
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].iter().any(|o| o.label == m.label) {
                return Err(Error::config(format!("duplicate mode label `{}`", m.label)));
            }
        }
        let index: BTreeMap<&str, usize> = modes.iter().enumerate().map(|(i, m)| (m.label.as_str(), i)).collect();
        for (i, d) in drives.iter_mut().enumerate() {
            for end in [&d.mode_a, &d.mode_b] {
                if !index.contains_key(end.as_str()) {
                    return Err(Error::config(format!("drive #{i} references unknown mode `{end}`")));
                }
            }
            if d.kind == DriveKind::Conversion && d.mode_a == d.mode_b {
                return Err(Error::config(format!("conversion drive #{i} couples `{}` to itself", d.mode_a)));
            }
            if !(d.strength >= 0.0) || !d.strength.is_finite() {
                return Err(Error::config(format!("drive #{i}: strength must be finite and non-negative")));
            }
            if !d.phase.is_finite() {
                return Err(Error::config(format!("drive #{i}: phase must be finite")));
            }
            d.phase = d.phase.rem_euclid(TAU);
            if d.phase >= TAU {
                d.phase = 0.0;
            }
        }
        match index.get(probe_port.as_str()) {
            None => return Err(Error::config(format!("probe port `{probe_port}` is not a mode"))),
            Some(&i) if modes[i].kappa_ext <= 0.0 => {
                return Err(Error::config(format!("probe port `{probe_port}` has no external coupling")))
            }
            _ => {}
        }
        let net = Self { modes, drives, probe_port };
        if !net.is_connected() {
            return Err(Error::config("drive graph does not connect every mode"));
        }
        Ok(net)
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn drives(&self) -> &[DriveSpec] {
        &self.drives
    }

    pub fn probe_port(&self) -> &str {
        &self.probe_port
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub(crate) fn require_mode(&self, label: &str) -> Result<usize> {
        self.mode_index(label).ok_or_else(|| Error::config(format!("unknown mode `{label}`")))
    }

    pub fn has_gain(&self) -> bool {
        self.drives.iter().any(|d| d.kind == DriveKind::Gain && d.strength > 0.0)
    }

    /// Pump frequency of drive `index`: `|w_a - w_b|` for conversion, `w_a + w_b` for gain.
    pub fn pump_frequency(&self, index: usize) -> Option<f64> {
        let d = self.drives.get(index)?;
        let wa = self.modes[self.mode_index(&d.mode_a)?].omega;
        let wb = self.modes[self.mode_index(&d.mode_b)?].omega;
        Some(match d.kind {
            DriveKind::Conversion => (wa - wb).abs(),
            DriveKind::Gain => wa + wb,
        })
    }

    /// Ports in matrix order: per mode, the external port (labelled with the
    /// mode label) then the internal-loss port (`<label>/loss`).
    pub fn ports(&self) -> Vec<Port> {
        let mut ports = Vec::new();
        for (i, m) in self.modes.iter().enumerate() {
            if m.kappa_ext > 0.0 {
                ports.push(Port { label: m.label.clone(), mode: i, rate: m.kappa_ext, is_loss: false });
            }
            if m.kappa_int > 0.0 {
                ports.push(Port { label: format!("{}/loss", m.label), mode: i, rate: m.kappa_int, is_loss: true });
            }
        }
        ports
    }

    pub fn kappa_max(&self) -> f64 {
        self.modes.iter().map(ModeSpec::kappa).fold(0.0, f64::max)
    }

    fn is_connected(&self) -> bool {
        let n = self.modes.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            let label = &self.modes[i].label;
            for d in &self.drives {
                let other = if &d.mode_a == label {
                    &d.mode_b
                } else if &d.mode_b == label {
                    &d.mode_a
                } else {
                    continue;
                };
                let j = self.mode_index(other).expect("validated");
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Copy with drive `index` re-phased; used for loop-phase sweeps.
    pub fn with_drive_phase(&self, index: usize, phase: f64) -> Result<Self> {
        let mut drives = self.drives.clone();
        let d = drives
            .get_mut(index)
            .ok_or_else(|| Error::config(format!("no drive #{index}")))?;
        d.phase = phase;
        Self::new(self.modes.clone(), drives, self.probe_port.clone())
    }

    pub(crate) fn offending_gain_drive(&self) -> String {
        self.drives
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == DriveKind::Gain)
            .max_by(|a, b| a.1.strength.total_cmp(&b.1.strength))
            .map(|(i, d)| d.describe(i))
            .unwrap_or_else(|| "no gain drive present".to_string())
    }
}

/// Scattering matrix at one probe frequency, in the doubled port basis.
#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub frequency: f64,
    pub s_matrix: CMatrix,
    /// Signal-sector labels followed by conjugate-sector labels (suffix `*`).
    pub port_labels: Vec<String>,
}

impl ScatteringResult {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.port_labels.iter().position(|l| l == label)
    }

    /// `S[out, in]` between signal-sector ports.
    pub fn element(&self, out: &str, input: &str) -> Option<num_complex::Complex64> {
        Some(self.s_matrix[(self.index_of(out)?, self.index_of(input)?)])
    }

    pub fn n_ports(&self) -> usize {
        self.port_labels.len() / 2
    }
}
