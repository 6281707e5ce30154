//! Ready-made networks: a matched two-mode converter, a three-mode
//! circulator and the four-drive directional phase-sensitive amplifier with
//! the readout cavity attached.

use std::f64::consts::{PI, TAU};

use super::{effective_linewidth, reflection_trace, DriveSpec, ModeSpec, NetworkSpec};
use crate::error::{Error, Result};

/// Two overcoupled modes with a conversion drive at strength `g`.
/// `g = sqrt(kappa_a kappa_c) / 2` gives unit transmission on resonance.
pub fn two_mode_converter(omega_a: f64, kappa_a: f64, omega_c: f64, kappa_c: f64, g: f64) -> Result<NetworkSpec> {
    NetworkSpec::new(
        vec![ModeSpec::new("a", omega_a, kappa_a, 0.0), ModeSpec::new("c", omega_c, kappa_c, 0.0)],
        vec![DriveSpec::conversion("a", "c", g, 0.0)],
        "a",
    )
}

/// Three identical overcoupled modes `1`, `2`, `3` coupled pairwise by
/// conversion drives at the matched strength `g = kappa / 2`. The loop
/// phase sits on the `1-3` drive (index 2). At `pi/2` signals circulate
/// `2 -> 1 -> 3 -> 2`; at `3pi/2` the sense reverses; at `0` and `pi` the
/// network is reciprocal.
pub fn circulator(omegas: [f64; 3], kappa: f64, loop_phase: f64) -> Result<NetworkSpec> {
    let g = kappa / 2.0;
    NetworkSpec::new(
        vec![
            ModeSpec::new("1", omegas[0], kappa, 0.0),
            ModeSpec::new("2", omegas[1], kappa, 0.0),
            ModeSpec::new("3", omegas[2], kappa, 0.0),
        ],
        vec![
            DriveSpec::conversion("1", "2", g, 0.0),
            DriveSpec::conversion("2", "3", g, 0.0),
            DriveSpec::conversion("1", "3", g, loop_phase),
        ],
        "1",
    )
}

/// Readout cavity `r` attached to an amplifier with an output mode `a` and
/// an amplification mode `b`.
///
/// Drives: conversion `r-a`, `a-b`, `b-r` and a degenerate (phase-sensitive)
/// gain on `b`. With `g_br = 2 g_ra g_ab / kappa_a` and loop phase
/// `3pi/2` on the `r -> a -> b -> r` loop, the `b -> r` path cancels on
/// resonance: the cavity feeds the amplifier but amplified noise only leaves
/// through the output mode. The cavity linewidth is then
/// `kappa_r + 4 g_ra^2 / kappa_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalAmplifier {
    pub omega_r: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    /// Weak cavity port used for probing (rad/s).
    pub kappa_r_weak: f64,
    pub kappa_r_int: f64,
    pub kappa_a: f64,
    /// Residual coupling of the amplification mode to the output line.
    pub kappa_b_ext: f64,
    pub kappa_b_int: f64,
    pub g_ra: f64,
    pub g_ab: f64,
    /// Gain drive strength as a fraction of the parametric threshold of `b`.
    pub gain_fraction: f64,
    pub loop_phase: f64,
    pub gain_phase: f64,
}

/// Loop phase at which the amplifier is isolated from the cavity.
pub const ISOLATING_LOOP_PHASE: f64 = 1.5 * PI;

/// Index of the drive carrying the loop phase in [`DirectionalAmplifier::build`].
pub const LOOP_PHASE_DRIVE: usize = 2;

impl DirectionalAmplifier {
    /// Frequencies of the readout cavity and FPJA modes, with illustrative
    /// linewidths and couplings. `g_ra` is set so the cavity linewidth is
    /// close to `2pi x 2.58 MHz`; call [`Self::calibrate_cavity_linewidth`]
    /// to hit a target exactly.
    pub fn reference_design() -> Self {
        let mhz = TAU * 1e6;
        let mut amp = Self {
            omega_r: TAU * 10.929e9,
            omega_a: TAU * 6.912e9,
            omega_b: TAU * 8.013e9,
            kappa_r_weak: 0.10 * mhz,
            kappa_r_int: 0.02 * mhz,
            kappa_a: 40.0 * mhz,
            kappa_b_ext: 1.0 * mhz,
            kappa_b_int: 1.0 * mhz,
            g_ra: 0.0,
            g_ab: 10.0 * mhz,
            gain_fraction: 0.5,
            loop_phase: ISOLATING_LOOP_PHASE,
            gain_phase: 0.0,
        };
        amp.g_ra = amp.g_ra_for_linewidth(2.58 * mhz).expect("valid defaults");
        amp
    }

    fn g_br(&self) -> f64 {
        2.0 * self.g_ra * self.g_ab / self.kappa_a
    }

    /// Threshold of the degenerate gain on `b`, including the damping the
    /// `a-b` conversion lends it.
    pub fn gain_threshold(&self) -> f64 {
        (self.kappa_b_ext + self.kappa_b_int + 4.0 * self.g_ab * self.g_ab / self.kappa_a) / 2.0
    }

    fn g_ra_for_linewidth(&self, kappa_target: f64) -> Result<f64> {
        let bare = self.kappa_r_weak + self.kappa_r_int;
        if kappa_target <= bare {
            return Err(Error::config("target cavity linewidth must exceed its bare linewidth"));
        }
        Ok(((kappa_target - bare) * self.kappa_a / 4.0).sqrt())
    }

    pub fn build(&self) -> Result<NetworkSpec> {
        if !(0.0..1.0).contains(&self.gain_fraction) {
            return Err(Error::config("gain_fraction must be in [0, 1)"));
        }
        NetworkSpec::new(
            vec![
                ModeSpec::new("r", self.omega_r, self.kappa_r_weak, self.kappa_r_int),
                ModeSpec::new("a", self.omega_a, self.kappa_a, 0.0),
                ModeSpec::new("b", self.omega_b, self.kappa_b_ext, self.kappa_b_int),
            ],
            vec![
                DriveSpec::conversion("r", "a", self.g_ra, 0.0),
                DriveSpec::conversion("a", "b", self.g_ab, 0.0),
                DriveSpec::conversion("b", "r", self.g_br(), self.loop_phase),
                DriveSpec::gain("b", "b", self.gain_fraction * self.gain_threshold(), self.gain_phase),
            ],
            "r",
        )
    }

    /// Fitted cavity linewidth seen from the weak port.
    pub fn cavity_linewidth(&self) -> Result<f64> {
        let net = self.build()?;
        let guess = self.kappa_r_weak + self.kappa_r_int + 4.0 * self.g_ra * self.g_ra / self.kappa_a;
        let freqs: Vec<f64> = (0..801)
            .map(|i| self.omega_r + guess * (-10.0 + 20.0 * i as f64 / 800.0))
            .collect();
        let trace = reflection_trace(&net, "r", &freqs)?;
        Ok(effective_linewidth(&trace, &freqs)?.kappa)
    }

    /// Adjusts `g_ra` by secant iteration until the fitted cavity linewidth
    /// matches `kappa_target` to `1e-6` relative.
    pub fn calibrate_cavity_linewidth(&mut self, kappa_target: f64) -> Result<()> {
        let mut x0 = self.g_ra_for_linewidth(kappa_target)?;
        self.g_ra = x0;
        let mut f0 = self.cavity_linewidth()? - kappa_target;
        let mut x1 = x0 * 1.01;
        for _ in 0..50 {
            self.g_ra = x1;
            let f1 = self.cavity_linewidth()? - kappa_target;
            if (f1 / kappa_target).abs() < 1e-6 {
                return Ok(());
            }
            if f1 == f0 {
                break;
            }
            let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
            x0 = x1;
            f0 = f1;
            x1 = x2.max(1e-6 * x1);
        }
        Err(Error::Fit("cavity linewidth calibration did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directional_amplifier_is_stable_at_all_loop_phases() {
        let mut amp = DirectionalAmplifier::reference_design();
        for k in 0..16 {
            amp.loop_phase = TAU * k as f64 / 16.0;
            let net = amp.build().unwrap();
            assert!(super::super::stability_margin(&net) < 0.0, "unstable at loop phase step {k}");
        }
    }
}
