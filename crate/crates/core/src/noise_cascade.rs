//! Cascaded-amplifier noise bookkeeping in quadrature-variance units.
//!
//! The chain starts from vacuum (variance `1/4` in the measured quadrature)
//! with unit signal gain. Loss mixes in vacuum, a phase-sensitive gain
//! scales the variance noiselessly, a phase-preserving gain adds
//! `(G - 1)/4` of idler vacuum, and added noise of `n` quanta adds `n/2`.

use crate::error::{Error, Result};

/// Vacuum quadrature variance.
pub const VACUUM_VARIANCE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainStage {
    /// Power transmission `A` in `(0, 1]`.
    Loss(f64),
    /// Quadrature power gain `G >= 1`, noiseless in the amplified quadrature.
    PhaseSensitiveGain(f64),
    /// Power gain `G >= 1` with the idler's vacuum added.
    PhasePreservingGain(f64),
    /// Noise referred to the stage input, in quanta.
    AddedNoise(f64),
}

impl ChainStage {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ChainStage::Loss(a) => a > 0.0 && a <= 1.0,
            ChainStage::PhaseSensitiveGain(g) | ChainStage::PhasePreservingGain(g) => g >= 1.0 && g.is_finite(),
            ChainStage::AddedNoise(n) => n >= 0.0 && n.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("stage value out of range: {self:?}")))
        }
    }
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn power_to_db(g: f64) -> f64 {
    10.0 * g.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChain {
    stages: Vec<ChainStage>,
}

impl NoiseChain {
    pub fn new(stages: Vec<ChainStage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::config("noise chain has no stages"));
        }
        for s in &stages {
            s.validate()?;
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[ChainStage] {
        &self.stages
    }

    /// Concatenation of two chains.
    pub fn then(&self, other: &NoiseChain) -> NoiseChain {
        let mut stages = self.stages.clone();
        stages.extend_from_slice(&other.stages);
        NoiseChain { stages }
    }
}

/// Signal gain and output quadrature variance part-way along a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub signal_gain: f64,
    pub variance: f64,
}

impl ChainState {
    pub const VACUUM: ChainState = ChainState { signal_gain: 1.0, variance: VACUUM_VARIANCE };

    fn apply(self, stage: &ChainStage) -> ChainState {
        let v0 = VACUUM_VARIANCE;
        let ChainState { signal_gain, variance } = self;
        match *stage {
            ChainStage::Loss(a) => ChainState { signal_gain: signal_gain * a, variance: a * variance + (1.0 - a) * v0 },
            ChainStage::PhaseSensitiveGain(g) => ChainState { signal_gain: signal_gain * g, variance: g * variance },
            ChainStage::PhasePreservingGain(g) => {
                ChainState { signal_gain: signal_gain * g, variance: g * variance + (g - 1.0) * v0 }
            }
            ChainStage::AddedNoise(n) => ChainState { signal_gain, variance: variance + n * 2.0 * v0 },
        }
    }

    pub fn result(self) -> ChainResult {
        let v0 = VACUUM_VARIANCE;
        let n_sys = (self.variance / self.signal_gain - v0) / (2.0 * v0);
        ChainResult {
            signal_gain: self.signal_gain,
            noise_variance: self.variance,
            n_sys,
            eta: 1.0 / (1.0 + 2.0 * n_sys),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResult {
    /// Quadrature power gain of the whole chain.
    pub signal_gain: f64,
    /// Output quadrature variance.
    pub noise_variance: f64,
    /// Noise referred to the chain input (quanta).
    pub n_sys: f64,
    /// `1 / (1 + 2 n_sys)`.
    pub eta: f64,
}

/// Runs `chain` from `start`.
pub fn propagate_from(start: ChainState, chain: &NoiseChain) -> ChainState {
    chain.stages.iter().fold(start, |s, stage| s.apply(stage))
}

pub fn propagate(chain: &NoiseChain) -> ChainResult {
    propagate_from(ChainState::VACUUM, chain).result()
}

/// Amplifier type for the swept stage of a template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainKind {
    PhaseSensitive,
    PhasePreserving,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateStage {
    Fixed(ChainStage),
    Variable(GainKind),
}

/// A chain with one swept gain stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTemplate {
    pub stages: Vec<TemplateStage>,
}

impl ChainTemplate {
    /// Instantiates the template with the variable stage at `gain_db`.
    pub fn at_gain_db(&self, gain_db: f64) -> Result<NoiseChain> {
        let variable = self.stages.iter().filter(|s| matches!(s, TemplateStage::Variable(_))).count();
        if variable != 1 {
            return Err(Error::config(format!("template needs exactly one variable stage, found {variable}")));
        }
        let g = db_to_power(gain_db);
        NoiseChain::new(
            self.stages
                .iter()
                .map(|s| match *s {
                    TemplateStage::Fixed(stage) => stage,
                    TemplateStage::Variable(GainKind::PhaseSensitive) => ChainStage::PhaseSensitiveGain(g),
                    TemplateStage::Variable(GainKind::PhasePreserving) => ChainStage::PhasePreservingGain(g),
                })
                .collect(),
        )
    }

    /// Frequency converter followed by a variable JPA: the FPJA path loss,
    /// the FPJA-to-JPA loss, the JPA, and the downstream (HEMT) noise.
    pub fn converter(a_fpja: f64, a_jpa: f64, n_hemt: f64) -> Self {
        use TemplateStage::*;
        Self {
            stages: vec![
                Fixed(ChainStage::Loss(a_fpja)),
                Fixed(ChainStage::Loss(a_jpa)),
                Variable(GainKind::PhaseSensitive),
                Fixed(ChainStage::AddedNoise(n_hemt)),
            ],
        }
    }

    /// Variable-gain directional amplifier with its path transmission split
    /// equally before and after the gain, followed by a fixed JPA.
    pub fn directional(a_fpja: f64, a_jpa: f64, jpa_gain_db: f64, n_hemt: f64) -> Self {
        use TemplateStage::*;
        let half = a_fpja.sqrt();
        Self {
            stages: vec![
                Fixed(ChainStage::Loss(half)),
                Variable(GainKind::PhaseSensitive),
                Fixed(ChainStage::Loss(half)),
                Fixed(ChainStage::Loss(a_jpa)),
                Fixed(ChainStage::PhaseSensitiveGain(db_to_power(jpa_gain_db))),
                Fixed(ChainStage::AddedNoise(n_hemt)),
            ],
        }
    }
}

/// Transmission of the FPJA path in converter mode.
pub const CONVERTER_FPJA_TRANSMISSION: f64 = 0.82;
/// Transmission of the FPJA path in directional-amplifier mode.
pub const DIRECTIONAL_FPJA_TRANSMISSION: f64 = 0.59;
/// Loss between the FPJA and the JPA.
pub const JPA_TRANSMISSION: f64 = 0.56;
/// Noise added after the JPA (quanta).
pub const HEMT_NOISE_QUANTA: f64 = 36.0;
/// Fixed JPA gain in directional mode (dB).
pub const DIRECTIONAL_JPA_GAIN_DB: f64 = 18.2;

/// `(gain_db, eta)` along a gain grid.
pub fn efficiency_vs_gain(template: &ChainTemplate, gains_db: &[f64]) -> Result<Vec<(f64, f64)>> {
    gains_db.iter().map(|&g| Ok((g, propagate(&template.at_gain_db(g)?).eta))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_chain_is_ideal() {
        let r = propagate(&NoiseChain::new(vec![ChainStage::Loss(1.0)]).unwrap());
        assert_eq!(r.n_sys, 0.0);
        assert_eq!(r.eta, 1.0);
    }

    #[test]
    fn loss_before_infinite_gain_sets_efficiency() {
        let a = 0.63;
        let chain = NoiseChain::new(vec![ChainStage::Loss(a), ChainStage::PhaseSensitiveGain(1e12)]).unwrap();
        assert!((propagate(&chain).eta - a).abs() < 1e-12);
    }

    #[test]
    fn pre_jpa_loss_limit() {
        let chain = NoiseChain::new(vec![
            ChainStage::Loss(0.82),
            ChainStage::Loss(0.56),
            ChainStage::PhaseSensitiveGain(1e15),
            ChainStage::AddedNoise(36.0),
        ])
        .unwrap();
        assert!((propagate(&chain).eta - 0.82 * 0.56).abs() < 1e-9);
    }

    #[test]
    fn converter_endpoints() {
        let t = ChainTemplate::converter(0.82, 0.56, 36.0);
        let curve = efficiency_vs_gain(&t, &[0.0, 30.0, 40.0]).unwrap();
        assert!((curve[0].1 - 0.0063).abs() < 1e-4, "{:?}", curve[0]);
        assert!(curve[0].1 < 0.02);
        // at 30 dB the HEMT still contributes 36/(G A) = 0.078 quanta
        let expected_30 = 1.0 / (1.0 + 2.0 * ((1.0 / 0.4592 - 1.0) / 2.0 + 36.0 / (1000.0 * 0.4592)));
        assert!((curve[1].1 - expected_30).abs() < 1e-9, "{:?}", curve[1]);
        assert!((curve[2].1 - 0.459).abs() < 0.005);
    }

    #[test]
    fn directional_at_fifteen_db() {
        let t = ChainTemplate::directional(0.59, 0.56, 18.2, 36.0);
        let eta = propagate(&t.at_gain_db(15.0).unwrap()).eta;
        assert!((0.67..=0.77).contains(&eta), "{eta}");
    }

    #[test]
    fn phase_preserving_cap() {
        let t = ChainTemplate { stages: vec![TemplateStage::Variable(GainKind::PhasePreserving)] };
        let eta = propagate(&t.at_gain_db(60.0).unwrap()).eta;
        assert!((eta - 0.5).abs() < 1e-5);
    }

    #[test]
    fn template_needs_one_variable_stage() {
        let none = ChainTemplate { stages: vec![TemplateStage::Fixed(ChainStage::Loss(0.5))] };
        assert!(matches!(none.at_gain_db(3.0), Err(Error::Configuration(_))));
        let two = ChainTemplate {
            stages: vec![TemplateStage::Variable(GainKind::PhaseSensitive), TemplateStage::Variable(GainKind::PhaseSensitive)],
        };
        assert!(matches!(two.at_gain_db(3.0), Err(Error::Configuration(_))));
    }

    #[test]
    fn stage_ranges_enforced() {
        assert!(NoiseChain::new(vec![]).is_err());
        assert!(NoiseChain::new(vec![ChainStage::Loss(0.0)]).is_err());
        assert!(NoiseChain::new(vec![ChainStage::Loss(1.2)]).is_err());
        assert!(NoiseChain::new(vec![ChainStage::PhaseSensitiveGain(0.5)]).is_err());
        assert!(NoiseChain::new(vec![ChainStage::AddedNoise(-1.0)]).is_err());
    }
}
