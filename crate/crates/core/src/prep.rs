//! Two-beam-splitter preparation network.
//!
//! A photon pair `|11⟩` meets a splitter of transmission `ϑ₁`; one of the
//! emerging arms then passes a second splitter of transmission `ϑ₂`, and
//! only events where no photon is diverted there are kept. Attenuating the
//! reference arm gives
//!
//! `√(2ϑ₁(1−ϑ₁))|20⟩ + √ϑ₂(2ϑ₁−1)|11⟩ − ϑ₂√(2ϑ₁(1−ϑ₁))|02⟩`
//!
//! with success probability equal to its squared norm.

#[allow(unused_imports)]
use num_traits::Float;

use crate::bounds::{optimize_weights, ProbeWeights, REFERENCE_MODE, SENSING_MODE};
use crate::error::{check_unit, Error, Result};
use crate::fock::{apply_loss, apply_transform, beam_splitter, FockState, NORM_TOL};

/// Arm carrying the second (attenuating) splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Sensing,
    Reference,
}

impl Arm {
    pub fn mode(self) -> usize {
        match self {
            Arm::Sensing => SENSING_MODE,
            Arm::Reference => REFERENCE_MODE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub attenuated_arm: Arm,
    pub success_prob: f64,
}

impl PrepConfig {
    /// Runs the network on `|11⟩`.
    pub fn prepare(&self) -> Result<(FockState, f64)> {
        prepare_from(&FockState::basis([1, 1])?, self.theta1, self.theta2, self.attenuated_arm)
    }
}

/// Prepares from a photon pair with the second splitter on the reference arm.
pub fn prepare(theta1: f64, theta2: f64) -> Result<(FockState, f64)> {
    prepare_from(&FockState::basis([1, 1])?, theta1, theta2, Arm::Reference)
}

/// Runs the network on an arbitrary normalized two-mode `input`. Returns the
/// postselected unnormalized state and its squared norm.
pub fn prepare_from(
    input: &FockState,
    theta1: f64,
    theta2: f64,
    arm: Arm,
) -> Result<(FockState, f64)> {
    check_unit("theta1", theta1)?;
    check_unit("theta2", theta2)?;
    let split = apply_transform(input, &beam_splitter(theta1, SENSING_MODE, REFERENCE_MODE, 2)?)?;
    let kept = apply_loss(&split, arm.mode(), theta2)?
        .into_iter()
        .find(|b| b.lost == 0)
        .ok_or(Error::InvalidState("no photon survives the attenuating splitter"))?;
    Ok((kept.weighted_state(), kept.probability))
}

/// Reads the simplex weights off a normalized two-photon state.
pub fn weights_of(state: &FockState) -> Result<ProbeWeights> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    if state.modes() != 2 {
        return Err(Error::DimensionMismatch {
            transform: 2,
            state: state.modes(),
        });
    }
    match state.photon_number() {
        Some(2) => {}
        Some(n) => return Err(Error::PhotonNumber(n)),
        None => return Err(Error::InvalidState("mixed photon numbers")),
    }
    let x2 = state.amplitude(&[2, 0]).norm_sqr();
    let x1 = state.amplitude(&[1, 1]).norm_sqr();
    let x0 = state.amplitude(&[0, 2]).norm_sqr();
    // Summing to one only within NORM_TOL; fold the residue into the largest weight.
    let residue = 1.0 - (x0 + x1 + x2);
    let mut w = [x0, x1, x2];
    let imax = (0..3).fold(0, |m, i| if w[i] > w[m] { i } else { m });
    w[imax] += residue;
    ProbeWeights::new(w[0], w[1], w[2])
}

/// Splitter settings producing `target` (after renormalization).
///
/// The attenuated arm is the reference arm when `x₀ ≤ x₂`, the sensing
/// arm otherwise, with `ϑ₂` the square root of the weight ratio. `ϑ₁` then
/// solves `ϑ₂(2ϑ₁−1)² / (2ϑ₁(1−ϑ₁)) = x₁/x_big`, taking the root `ϑ₁ ≥ 1/2`.
pub fn solve_prep(target: &ProbeWeights) -> Result<PrepConfig> {
    let ProbeWeights { x0, x1, x2 } = *target;
    let (big, small, arm) = if x0 <= x2 {
        (x2, x0, Arm::Reference)
    } else {
        (x0, x2, Arm::Sensing)
    };

    let (theta1, theta2) = if big == 0.0 {
        // Pure |11>: no interference and no attenuation.
        (1.0, 1.0)
    } else if small == 0.0 && x1 > 0.0 {
        return Err(Error::Unreachable(
            "a vanishing |20> or |02> weight next to a |11> component needs ϑ₂ = 0, which also removes |11>",
        ));
    } else if small == 0.0 {
        // Only one of |20>, |02>: a balanced split with that arm blocked entirely.
        (0.5, 0.0)
    } else {
        let theta2 = (small / big).sqrt();
        let ratio = x1 / big;
        // With u = 2ϑ₁ − 1 the condition reads u²(2ϑ₂ + R) = R.
        let u = (ratio / (2.0 * theta2 + ratio)).sqrt();
        let theta1 = 0.5 * (1.0 + u);
        if !(0.0..=1.0).contains(&theta1) {
            return Err(Error::Unreachable("no splitter transmission reproduces the |11> weight"));
        }
        (theta1, theta2)
    };

    let s = 2.0 * theta1 * (1.0 - theta1);
    let success_prob =
        s + theta2 * (2.0 * theta1 - 1.0) * (2.0 * theta1 - 1.0) + theta2 * theta2 * s;
    Ok(PrepConfig {
        theta1,
        theta2,
        attenuated_arm: arm,
        success_prob,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProbeKind {
    Optimal,
    Noon,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Optimal => "optimal",
            ProbeKind::Noon => "noon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "optimal" => Some(ProbeKind::Optimal),
            "noon" => Some(ProbeKind::Noon),
            _ => None,
        }
    }
}

/// A probe as produced by the preparation network.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub kind: ProbeKind,
    /// Target weights the network was tuned for.
    pub weights: ProbeWeights,
    pub prep: PrepConfig,
    /// Normalized prepared state.
    pub state: FockState,
}

impl Probe {
    /// Prepares the weights maximizing the lossy Fisher information at `eta`.
    pub fn optimal(eta: f64) -> Result<Self> {
        let (weights, _) = optimize_weights(eta)?;
        Self::with_weights(ProbeKind::Optimal, weights)
    }

    pub fn noon() -> Result<Self> {
        Self::with_weights(ProbeKind::Noon, ProbeWeights::noon())
    }

    pub fn for_kind(kind: ProbeKind, eta: f64) -> Result<Self> {
        match kind {
            ProbeKind::Optimal => Self::optimal(eta),
            ProbeKind::Noon => Self::noon(),
        }
    }

    fn with_weights(kind: ProbeKind, weights: ProbeWeights) -> Result<Self> {
        let prep = solve_prep(&weights)?;
        let (raw, _) = prep.prepare()?;
        Ok(Probe {
            kind,
            weights,
            prep,
            state: raw.normalized(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::NormFlag;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn balanced_unattenuated_gives_noon() {
        let (s, p) = prepare(0.5, 1.0).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(&[2, 0]) - c(h)).norm() < 1e-15);
        assert!((s.amplitude(&[0, 2]) - c(-h)).norm() < 1e-15);
        assert_eq!(s.amplitude(&[1, 1]), c(0.0));
        assert!((p - 1.0).abs() < 1e-15);
        assert_eq!(s.norm_flag(), NormFlag::Normalized);
    }

    #[test]
    fn attenuated_noon() {
        let t2 = 0.6;
        let (s, p) = prepare(0.5, t2).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(&[2, 0]) - c(h)).norm() < 1e-15);
        assert!((s.amplitude(&[0, 2]) - c(-t2 * h)).norm() < 1e-15);
        assert!((p - (1.0 + t2 * t2) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn full_transmission_first_splitter() {
        let (s, p) = prepare(1.0, 0.3).unwrap();
        assert!((s.amplitude(&[1, 1]) - c(0.3_f64.sqrt())).norm() < 1e-15);
        assert!((p - 0.3).abs() < 1e-15);
    }

    #[test]
    fn matches_quoted_formula() {
        for &(t1, t2) in &[(0.7, 0.4), (0.55, 0.9), (0.2, 0.5)] {
            let (s, p) = prepare(t1, t2).unwrap();
            let r = (2.0 * t1 * (1.0 - t1)).sqrt();
            assert!((s.amplitude(&[2, 0]) - c(r)).norm() < 1e-14);
            assert!((s.amplitude(&[1, 1]) - c(t2.sqrt() * (2.0 * t1 - 1.0))).norm() < 1e-14);
            assert!((s.amplitude(&[0, 2]) - c(-t2 * r)).norm() < 1e-14);
            assert!((p - s.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn noon_target() {
        let cfg = solve_prep(&ProbeWeights::noon()).unwrap();
        assert_eq!((cfg.theta1, cfg.theta2), (0.5, 1.0));
        assert!((cfg.success_prob - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_outer_weights_need_no_attenuation() {
        for &x1 in &[0.0, 0.2, 0.7] {
            let x = (1.0 - x1) / 2.0;
            let cfg = solve_prep(&ProbeWeights::new(x, x1, x).unwrap()).unwrap();
            assert_eq!(cfg.theta2, 1.0);
        }
    }

    #[test]
    fn sensing_arm_attenuation_when_02_dominates() {
        let target = ProbeWeights::new(0.6, 0.1, 0.3).unwrap();
        let cfg = solve_prep(&target).unwrap();
        assert_eq!(cfg.attenuated_arm, Arm::Sensing);
        let (s, p) = cfg.prepare().unwrap();
        assert!((p - cfg.success_prob).abs() < 1e-12);
        let w = weights_of(&s.normalized()).unwrap();
        for (a, b) in w.as_array().iter().zip(target.as_array()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn unreachable_targets() {
        let t = ProbeWeights::new(0.0, 0.4, 0.6).unwrap();
        assert!(matches!(solve_prep(&t), Err(Error::Unreachable(_))));
        let t = ProbeWeights::new(0.6, 0.4, 0.0).unwrap();
        assert!(matches!(solve_prep(&t), Err(Error::Unreachable(_))));
    }

    #[test]
    fn corner_targets() {
        let pair = solve_prep(&ProbeWeights::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        let (s, _) = pair.prepare().unwrap();
        assert!((s.normalized().amplitude(&[1, 1]).norm() - 1.0).abs() < 1e-15);
        let only20 = solve_prep(&ProbeWeights::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        let (s, p) = only20.prepare().unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((s.normalized().amplitude(&[2, 0]).norm() - 1.0).abs() < 1e-15);
    }
}
