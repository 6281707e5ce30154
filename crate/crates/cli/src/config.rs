//! Scenario configuration: a strict TOML schema with unit-suffixed keys.
//!
//! Frequencies and linewidths are given as `nu = omega / 2pi` in MHz or GHz,
//! times in microseconds, gains in dB, phases in radians and flux in units
//! of the flux quantum. Dimensionless quantities (photon numbers,
//! efficiencies, transmissions, counts) carry no suffix. Conversion to the
//! core's rad/s and seconds happens only in this module.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use readout_core::dephasing::{DispersiveParams, MeasurementConfig, QubitSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Suffixes recognised as units in key names.
pub const UNIT_SUFFIXES: &[&str] = &["mhz", "ghz", "us", "db", "rad", "quanta", "phi0"];

pub fn mhz(v: f64) -> f64 {
    TAU * 1e6 * v
}

pub fn ghz(v: f64) -> f64 {
    TAU * 1e9 * v
}

pub fn us(v: f64) -> f64 {
    v * 1e-6
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {message}")]
    Read { path: String, message: String },

    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("line {line}, column {column}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize, column: usize },

    #[error("line {line}, column {column}: key `{key}` needs a unit suffix; did you mean `{expected}`?")]
    MissingUnit { key: String, expected: String, line: usize, column: usize },

    #[error("line {line}, column {column}: key `{key}` has the wrong unit; expected `{expected}`")]
    WrongUnit { key: String, expected: String, line: usize, column: usize },

    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Scenario {
    Spectroscopy,
    Scattering,
    OccupancyVsPhase,
    EfficiencyCurve,
    RamseySweep,
    ReadoutShots,
    Fidelity,
    ClosureTest,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Spectroscopy => "spectroscopy",
            Scenario::Scattering => "scattering",
            Scenario::OccupancyVsPhase => "occupancy_vs_phase",
            Scenario::EfficiencyCurve => "efficiency_curve",
            Scenario::RamseySweep => "ramsey_sweep",
            Scenario::ReadoutShots => "readout_shots",
            Scenario::Fidelity => "fidelity",
            Scenario::ClosureTest => "closure_test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

/// Cavity, qubit and readout-pulse parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    /// Full dispersive splitting `2 chi`.
    pub two_chi_mhz: f64,
    pub kappa_mhz: f64,
    pub cavity_freq_ghz: f64,
    pub qubit_freq_ghz: f64,
    pub t1_us: f64,
    pub n_env: f64,
    pub alpha2: f64,
    pub tau_us: f64,
    pub eta_m: f64,
    pub discard_ring_up: bool,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            two_chi_mhz: 1.7,
            kappa_mhz: 2.58,
            cavity_freq_ghz: 10.929,
            qubit_freq_ghz: 6.297,
            t1_us: 27.0,
            n_env: 0.01,
            alpha2: 2.5,
            tau_us: 0.35,
            eta_m: 0.72,
            discard_ring_up: true,
        }
    }
}

impl ReadoutConfig {
    pub fn dispersive(&self) -> readout_core::Result<DispersiveParams> {
        DispersiveParams::from_splitting(mhz(self.two_chi_mhz), mhz(self.kappa_mhz), ghz(self.cavity_freq_ghz))
    }

    pub fn qubit(&self) -> readout_core::Result<QubitSpec> {
        QubitSpec::new(ghz(self.qubit_freq_ghz), us(self.t1_us), self.n_env)
    }

    pub fn measurement(&self) -> readout_core::Result<MeasurementConfig> {
        MeasurementConfig::new(self.alpha2, us(self.tau_us))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    Directional,
    Converter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableGain {
    PhaseSensitive,
    PhasePreserving,
}

/// Amplification chain and the gain sweep of `efficiency_curve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub template: ChainKind,
    /// Total transmission of the first amplifier's path; defaults per template.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fpja_transmission: Option<f64>,
    pub jpa_transmission: f64,
    /// Fixed gain of the second amplifier (directional template only).
    pub jpa_gain_db: f64,
    pub hemt_noise_quanta: f64,
    pub variable_gain: VariableGain,
    pub gain_start_db: f64,
    pub gain_stop_db: f64,
    pub gain_points: usize,
    /// Also run the simulate-and-estimate pipeline at each gain.
    pub estimate: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            template: ChainKind::Directional,
            fpja_transmission: None,
            jpa_transmission: 0.56,
            jpa_gain_db: 18.2,
            hemt_noise_quanta: 36.0,
            variable_gain: VariableGain::PhaseSensitive,
            gain_start_db: 0.0,
            gain_stop_db: 21.0,
            gain_points: 22,
            estimate: true,
        }
    }
}

impl ChainConfig {
    pub fn fpja_transmission(&self) -> f64 {
        self.fpja_transmission.unwrap_or(match self.template {
            ChainKind::Directional => 0.59,
            ChainKind::Converter => 0.82,
        })
    }

    pub fn gain_grid(&self) -> Vec<f64> {
        linspace(self.gain_start_db, self.gain_stop_db, self.gain_points)
    }
}

/// Measurement-strength sweep shared by `ramsey_sweep`, `closure_test` and
/// the estimated points of `efficiency_curve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub alpha2_values: Vec<f64>,
    pub tau_values_us: Vec<f64>,
    pub shots_per_state: usize,
    pub ramsey_points: usize,
    pub ramsey_shots_per_point: u64,
    /// Delay span in expected decay constants.
    pub ramsey_span_decays: f64,
    pub ramsey_detuning_mhz: f64,
    pub trials: usize,
    /// Correct the SNR for relaxation during the integration window.
    pub correct_relaxation: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            alpha2_values: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            tau_values_us: vec![0.35],
            shots_per_state: 10_000,
            ramsey_points: 161,
            ramsey_shots_per_point: 2000,
            ramsey_span_decays: 4.0,
            ramsey_detuning_mhz: 0.5,
            trials: 20,
            correct_relaxation: true,
        }
    }
}

/// Single-shot readout statistics for `readout_shots` and `fidelity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotsConfig {
    pub count: usize,
    pub histogram_bins: usize,
    pub bootstrap_resamples: usize,
    /// Photon numbers scanned by `fidelity`.
    pub alpha2_values: Vec<f64>,
}

impl Default for ShotsConfig {
    fn default() -> Self {
        Self {
            count: 20_000,
            histogram_bins: 120,
            bootstrap_resamples: 200,
            alpha2_values: vec![0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    Circulator,
    DirectionalAmplifier,
    Converter,
}

/// Coupled-mode network for `scattering` and `occupancy_vs_phase`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    /// Loop phase; defaults to `pi/2` for the circulator and to the
    /// isolating phase `3pi/2` for the directional amplifier.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_phase_rad: Option<f64>,
    /// Mode frequencies for the circulator (three) and converter (first two).
    pub mode_freqs_ghz: Vec<f64>,
    /// Linewidth of each circulator/converter mode.
    pub mode_kappa_mhz: f64,
    pub probe_span_mhz: f64,
    pub probe_points: usize,
    pub phase_points: usize,
    pub bath_occupancy: f64,
    /// Directional amplifier gain drive as a fraction of its threshold.
    pub gain_fraction: f64,
    /// Calibrate the directional amplifier's cavity linewidth to this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_linewidth_mhz: Option<f64>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            kind: NetworkKind::Circulator,
            loop_phase_rad: None,
            mode_freqs_ghz: vec![10.929, 6.912, 8.013],
            mode_kappa_mhz: 2.0,
            probe_span_mhz: 10.0,
            probe_points: 201,
            phase_points: 64,
            bath_occupancy: 0.01,
            gain_fraction: 0.5,
            target_linewidth_mhz: None,
        }
    }
}

/// Flux sweep of a tunable mode through a ladder of spurious resonances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxConfig {
    pub tunable_max_freq_ghz: f64,
    pub participation: f64,
    pub tunable_kappa_mhz: f64,
    pub flux_start_phi0: f64,
    pub flux_stop_phi0: f64,
    pub flux_points: usize,
    pub ladder_fsr_mhz: f64,
    pub ladder_anchor_ghz: f64,
    /// Coupling of each ladder element, ascending; the last value repeats.
    pub ladder_coupling_mhz: Vec<f64>,
    pub ladder_kappa_mhz: f64,
    pub ladder_min_freq_ghz: f64,
    pub ladder_max_freq_ghz: f64,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self {
            tunable_max_freq_ghz: 9.0,
            participation: 0.8,
            tunable_kappa_mhz: 5.0,
            flux_start_phi0: 0.0,
            flux_stop_phi0: 0.42,
            flux_points: 421,
            ladder_fsr_mhz: 535.0,
            ladder_anchor_ghz: 6.0,
            ladder_coupling_mhz: vec![15.0],
            ladder_kappa_mhz: 1.0,
            ladder_min_freq_ghz: 5.0,
            ladder_max_freq_ghz: 9.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub readout: ReadoutConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub shots: ShotsConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub flux: FluxConfig,
}

fn default_seed() -> u64 {
    1
}

/// A validated configuration and the keys that were filled from defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub defaulted: Vec<String>,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut end = offset.min(text.len());
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    let before = &text[..end];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Splits `name_suffix` at its unit suffix, if it has one.
fn split_unit(key: &str) -> Option<(&str, &str)> {
    let (stem, unit) = key.rsplit_once('_')?;
    UNIT_SUFFIXES.contains(&unit).then_some((stem, unit))
}

/// Turns serde's "unknown field" message into a unit-aware error.
fn classify_unknown(message: &str, line: usize, column: usize) -> Option<ConfigError> {
    if !message.starts_with("unknown field") {
        return None;
    }
    let ticks: Vec<&str> = message.split('`').skip(1).step_by(2).collect();
    let (&key, expected) = ticks.split_first()?;
    let key = key.to_string();
    let stem = split_unit(&key).map_or(key.as_str(), |(s, _)| s);
    for candidate in expected {
        if let Some((cstem, _)) = split_unit(candidate) {
            if cstem == stem {
                let expected = candidate.to_string();
                return Some(if split_unit(&key).is_some() {
                    ConfigError::WrongUnit { key, expected, line, column }
                } else {
                    ConfigError::MissingUnit { key, expected, line, column }
                });
            }
        }
    }
    Some(ConfigError::UnknownKey { key, line, column })
}

fn leaf_paths(table: &toml::Table, prefix: &str, out: &mut BTreeSet<String>) {
    for (k, v) in table {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => leaf_paths(t, &path, out),
            _ => {
                out.insert(path);
            }
        }
    }
}

impl ScenarioConfig {
    /// Defaults for every section.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: default_seed(),
            output: OutputConfig::default(),
            readout: ReadoutConfig::default(),
            chain: ChainConfig::default(),
            sweep: SweepSection::default(),
            shots: ShotsConfig::default(),
            network: NetworkConfig::default(),
            flux: FluxConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<LoadedConfig, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            let message = e.message().to_string();
            classify_unknown(&message, line, column).unwrap_or(ConfigError::Parse { line, column, message })
        })?;
        config.validate()?;
        let given: toml::Table = toml::from_str(text).expect("parsed above");
        let mut present = BTreeSet::new();
        leaf_paths(&given, "", &mut present);
        let mut all = BTreeSet::new();
        leaf_paths(&config.to_table(), "", &mut all);
        let defaulted = all.difference(&present).cloned().collect();
        Ok(LoadedConfig { config, defaulted })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, excluding the output section.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be positive and finite, got {v}")))
            }
        }
        fn finite(key: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(key, format!("must be finite, got {v}")))
            }
        }
        fn unit_interval(key: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be in (0, 1], got {v}")))
            }
        }
        fn at_least(key: &str, v: usize, min: usize) -> Result<(), ConfigError> {
            if v >= min {
                Ok(())
            } else {
                Err(invalid(key, format!("must be at least {min}, got {v}")))
            }
        }
        fn non_negative_list(key: &str, v: &[f64], min_len: usize) -> Result<(), ConfigError> {
            if v.len() < min_len {
                return Err(invalid(key, format!("needs at least {min_len} values")));
            }
            match v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                Some(x) => Err(invalid(key, format!("values must be non-negative and finite, got {x}"))),
                None => Ok(()),
            }
        }

        if self.seed > i64::MAX as u64 {
            return Err(invalid("seed", "must be below 2^63"));
        }
        let r = &self.readout;
        positive("readout.two_chi_mhz", r.two_chi_mhz)?;
        positive("readout.kappa_mhz", r.kappa_mhz)?;
        positive("readout.cavity_freq_ghz", r.cavity_freq_ghz)?;
        positive("readout.qubit_freq_ghz", r.qubit_freq_ghz)?;
        if !(r.t1_us > 0.0) {
            return Err(invalid("readout.t1_us", format!("must be positive (inf allowed), got {}", r.t1_us)));
        }
        if !(r.n_env >= 0.0 && r.n_env.is_finite()) {
            return Err(invalid("readout.n_env", format!("must be non-negative, got {}", r.n_env)));
        }
        if !(r.alpha2 >= 0.0 && r.alpha2.is_finite()) {
            return Err(invalid("readout.alpha2", format!("must be non-negative, got {}", r.alpha2)));
        }
        positive("readout.tau_us", r.tau_us)?;
        unit_interval("readout.eta_m", r.eta_m)?;

        let c = &self.chain;
        unit_interval("chain.fpja_transmission", c.fpja_transmission())?;
        unit_interval("chain.jpa_transmission", c.jpa_transmission)?;
        if !(c.jpa_gain_db >= 0.0 && c.jpa_gain_db.is_finite()) {
            return Err(invalid("chain.jpa_gain_db", "must be non-negative"));
        }
        if !(c.hemt_noise_quanta >= 0.0 && c.hemt_noise_quanta.is_finite()) {
            return Err(invalid("chain.hemt_noise_quanta", "must be non-negative"));
        }
        for (key, v) in [("chain.gain_start_db", c.gain_start_db), ("chain.gain_stop_db", c.gain_stop_db)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("gain must be non-negative dB, got {v}")));
            }
        }
        at_least("chain.gain_points", c.gain_points, 1)?;

        let s = &self.sweep;
        non_negative_list("sweep.alpha2_values", &s.alpha2_values, 3)?;
        non_negative_list("sweep.tau_values_us", &s.tau_values_us, 1)?;
        if s.tau_values_us.contains(&0.0) {
            return Err(invalid("sweep.tau_values_us", "integration times must be positive"));
        }
        at_least("sweep.shots_per_state", s.shots_per_state, 2)?;
        at_least("sweep.ramsey_points", s.ramsey_points, 4)?;
        if s.ramsey_shots_per_point == 0 {
            return Err(invalid("sweep.ramsey_shots_per_point", "must be at least 1"));
        }
        positive("sweep.ramsey_span_decays", s.ramsey_span_decays)?;
        finite("sweep.ramsey_detuning_mhz", s.ramsey_detuning_mhz)?;
        at_least("sweep.trials", s.trials, 1)?;

        let sh = &self.shots;
        at_least("shots.count", sh.count, 2)?;
        at_least("shots.histogram_bins", sh.histogram_bins, 1)?;
        at_least("shots.bootstrap_resamples", sh.bootstrap_resamples, 100)?;
        non_negative_list("shots.alpha2_values", &sh.alpha2_values, 1)?;

        let n = &self.network;
        if let Some(phi) = n.loop_phase_rad {
            finite("network.loop_phase_rad", phi)?;
        }
        let needed = match n.kind {
            NetworkKind::Circulator => 3,
            NetworkKind::Converter => 2,
            NetworkKind::DirectionalAmplifier => 0,
        };
        if n.mode_freqs_ghz.len() < needed {
            return Err(invalid("network.mode_freqs_ghz", format!("needs {needed} frequencies")));
        }
        for &f in &n.mode_freqs_ghz {
            positive("network.mode_freqs_ghz", f)?;
        }
        positive("network.mode_kappa_mhz", n.mode_kappa_mhz)?;
        positive("network.probe_span_mhz", n.probe_span_mhz)?;
        at_least("network.probe_points", n.probe_points, 2)?;
        at_least("network.phase_points", n.phase_points, 3)?;
        if !(n.bath_occupancy >= 0.0 && n.bath_occupancy.is_finite()) {
            return Err(invalid("network.bath_occupancy", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&n.gain_fraction) {
            return Err(invalid("network.gain_fraction", format!("must be in [0, 1), got {}", n.gain_fraction)));
        }
        if let Some(k) = n.target_linewidth_mhz {
            positive("network.target_linewidth_mhz", k)?;
        }

        let f = &self.flux;
        positive("flux.tunable_max_freq_ghz", f.tunable_max_freq_ghz)?;
        if !(0.0..=1.0).contains(&f.participation) {
            return Err(invalid("flux.participation", "must be in [0, 1]"));
        }
        positive("flux.tunable_kappa_mhz", f.tunable_kappa_mhz)?;
        for (key, v) in [("flux.flux_start_phi0", f.flux_start_phi0), ("flux.flux_stop_phi0", f.flux_stop_phi0)] {
            if !(v.abs() < 0.5) {
                return Err(invalid(key, format!("must lie on the first branch |flux| < 0.5, got {v}")));
            }
        }
        at_least("flux.flux_points", f.flux_points, 2)?;
        positive("flux.ladder_fsr_mhz", f.ladder_fsr_mhz)?;
        positive("flux.ladder_anchor_ghz", f.ladder_anchor_ghz)?;
        non_negative_list("flux.ladder_coupling_mhz", &f.ladder_coupling_mhz, 1)?;
        positive("flux.ladder_kappa_mhz", f.ladder_kappa_mhz)?;
        positive("flux.ladder_min_freq_ghz", f.ladder_min_freq_ghz)?;
        if !(f.ladder_max_freq_ghz >= f.ladder_min_freq_ghz) {
            return Err(invalid("flux.ladder_max_freq_ghz", "must not be below ladder_min_freq_ghz"));
        }
        Ok(())
    }
}

/// Preset configurations shipped with the tool.
pub const PRESETS: &[(&str, &str)] = &[
    ("directional_efficiency", include_str!("../presets/directional_efficiency.cfg")),
    ("converter_efficiency", include_str!("../presets/converter_efficiency.cfg")),
    ("readout_fidelity", include_str!("../presets/readout_fidelity.cfg")),
    ("fidelity_scan", include_str!("../presets/fidelity_scan.cfg")),
    ("closure", include_str!("../presets/closure.cfg")),
    ("ramsey", include_str!("../presets/ramsey.cfg")),
    ("circulator", include_str!("../presets/circulator.cfg")),
    ("occupancy", include_str!("../presets/occupancy.cfg")),
    ("spectroscopy", include_str!("../presets/spectroscopy.cfg")),
];

pub fn preset(name: &str) -> Result<LoadedConfig, ConfigError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    ScenarioConfig::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_fully_populated() {
        let loaded = ScenarioConfig::parse("scenario = \"fidelity\"\n").unwrap();
        assert_eq!(loaded.config, ScenarioConfig::new(Scenario::Fidelity));
        assert!(loaded.defaulted.contains(&"readout.kappa_mhz".to_string()));
        assert!(loaded.defaulted.contains(&"seed".to_string()));
        assert!(!loaded.defaulted.contains(&"scenario".to_string()));
    }

    #[test]
    fn bare_quantity_needs_unit() {
        let err = ScenarioConfig::parse("scenario = \"fidelity\"\n[readout]\nkappa = 2.58\n").unwrap_err();
        match err {
            ConfigError::MissingUnit { key, expected, line, .. } => {
                assert_eq!((key.as_str(), expected.as_str(), line), ("kappa", "kappa_mhz", 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_unit_is_reported() {
        let err = ScenarioConfig::parse("scenario = \"fidelity\"\n[readout]\nt1_ms = 0.027\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { .. }), "ms is not a recognised unit: {err:?}");
        let err = ScenarioConfig::parse("scenario = \"fidelity\"\n[readout]\ntau_mhz = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::WrongUnit { ref expected, .. } if expected == "tau_us"), "{err:?}");
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ScenarioConfig::parse("scenario = \"fidelity\"\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { ref key, line: 2, .. } if key == "bogus"), "{err:?}");
    }

    #[test]
    fn syntax_error_has_position() {
        let err = ScenarioConfig::parse("scenario = \"fidelity\"\n[readout\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn out_of_range_value_is_invalid() {
        let err = ScenarioConfig::parse("scenario = \"fidelity\"\n[readout]\neta_m = 1.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "readout.eta_m"));
    }

    #[test]
    fn all_presets_load_and_round_trip() {
        for (name, _) in PRESETS {
            let loaded = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = ScenarioConfig::parse(&loaded.config.to_toml()).unwrap();
            assert_eq!(loaded.config, again.config, "{name}");
            assert!(again.defaulted.iter().all(|k| k.ends_with("loop_phase_rad")
                || k.ends_with("fpja_transmission")
                || k.ends_with("target_linewidth_mhz")));
        }
    }

    #[test]
    fn hash_ignores_output_location() {
        let mut a = ScenarioConfig::new(Scenario::ReadoutShots);
        let h = a.hash();
        a.output.dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), h);
        a.seed = 2;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn directional_preset_chain() {
        let c = preset("directional_efficiency").unwrap().config.chain;
        assert_eq!(c.template, ChainKind::Directional);
        assert_eq!(c.fpja_transmission(), 0.59);
        assert_eq!((c.jpa_transmission, c.hemt_noise_quanta, c.jpa_gain_db), (0.56, 36.0, 18.2));
    }
}
