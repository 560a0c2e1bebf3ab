//! Quantum Fisher information of two-photon probes under loss, optimal
//! probe weights, and the precision curves they imply.
//!
//! Probes live on two modes, sensing (mode 0) and reference (mode 1), and
//! take the form `√x₂|20⟩ + √x₁|11⟩ − √x₀|02⟩`. Loss acts on the sensing
//! mode only. Precisions are reported per probe, i.e. per photon pair for
//! the two-photon states.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_unit, Error, Result};
use crate::fock::{apply_loss, FockState, NORM_TOL};
use crate::search::golden_section_max;

/// Index of the mode carrying the phase and the loss.
pub const SENSING_MODE: usize = 0;
/// Index of the auxiliary arm.
pub const REFERENCE_MODE: usize = 1;

/// Transmissions at which the measurement campaign is run.
pub const EXPERIMENT_ETAS: [f64; 4] = [0.2, 0.361, 0.4, 0.547];

/// Spacing of the brute-force simplex grid in [`optimize_weights`].
pub const GRID_STEP: f64 = 1e-3;

/// Weights of `|02⟩`, `|11⟩` and `|20⟩` in a two-photon probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeWeights {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl ProbeWeights {
    pub fn new(x0: f64, x1: f64, x2: f64) -> Result<Self> {
        let ok = [x0, x1, x2].iter().all(|x| x.is_finite() && *x >= 0.0)
            && (x0 + x1 + x2 - 1.0).abs() <= NORM_TOL;
        if ok {
            Ok(ProbeWeights { x0, x1, x2 })
        } else {
            Err(Error::InvalidWeights { x0, x1, x2 })
        }
    }

    /// The balanced `(|20⟩ − |02⟩)/√2` point.
    pub fn noon() -> Self {
        ProbeWeights {
            x0: 0.5,
            x1: 0.0,
            x2: 0.5,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x0, self.x1, self.x2]
    }

    /// `√x₂|20⟩ + √x₁|11⟩ − √x₀|02⟩`.
    pub fn state(&self) -> FockState {
        FockState::from_terms(
            2,
            2,
            [
                ([2, 0], Complex64::new(self.x2.sqrt(), 0.0)),
                ([1, 1], Complex64::new(self.x1.sqrt(), 0.0)),
                ([0, 2], Complex64::new(-self.x0.sqrt(), 0.0)),
            ],
        )
        .expect("simplex weights always give a normalized two-photon state")
    }
}

/// Pure-state Fisher information for a phase on `sensing_mode`:
/// four times the variance of the photon number there.
pub fn qfi_pure(state: &FockState, sensing_mode: usize) -> Result<f64> {
    if sensing_mode >= state.modes() {
        return Err(Error::ModeOutOfRange {
            index: sensing_mode,
            modes: state.modes(),
        });
    }
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    let (mean, mean_sq) = state.number_moments(sensing_mode);
    Ok(4.0 * (mean_sq - mean * mean))
}

/// Fisher information of the probe after loss `eta` on the sensing arm.
///
/// The conditional states for different numbers of lost photons are
/// orthogonal in total photon number, so their informations add with the
/// branch probabilities as weights.
pub fn qfi_lossy(weights: &ProbeWeights, eta: f64) -> Result<f64> {
    check_unit("eta", eta)?;
    let branches = apply_loss(&weights.state(), SENSING_MODE, eta)?;
    let mut total = 0.0;
    for b in &branches {
        total += b.probability * qfi_pure(&b.state, SENSING_MODE)?;
    }
    Ok(total)
}

/// Closed-form `p₀F(ψ₀) + p₁F(ψ₁)` used for the dense grid and the polish.
fn lossy_qfi_fast(w: [f64; 3], eta: f64) -> f64 {
    let [x0, x1, x2] = w;
    // Unnormalized weights of |20>, |11>, |02> with no photon lost.
    let a20 = eta * eta * x2;
    let a11 = eta * x1;
    let p0 = a20 + a11 + x0;
    let mut f = 0.0;
    if p0 > 0.0 {
        let m1 = 2.0 * a20 + a11;
        let m2 = 4.0 * a20 + a11;
        f += 4.0 * (m2 - m1 * m1 / p0);
    }
    // One photon lost: weights of |10> and |01>.
    let b10 = 2.0 * eta * (1.0 - eta) * x2;
    let b01 = (1.0 - eta) * x1;
    let p1 = b10 + b01;
    if p1 > 0.0 {
        f += 4.0 * b10 * b01 / p1;
    }
    f
}

fn check_positive_eta(eta: f64) -> Result<()> {
    if eta == 0.0 {
        return Err(Error::ZeroTransmission);
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

/// Probe weights maximizing [`qfi_lossy`] at transmission `eta`, with the
/// maximal value.
///
/// A full simplex grid of spacing [`GRID_STEP`] is scanned, then the best
/// grid point is polished by compass search along the six edge directions
/// of the simplex with a halving step.
pub fn optimize_weights(eta: f64) -> Result<(ProbeWeights, f64)> {
    check_positive_eta(eta)?;
    let n = (1.0 / GRID_STEP).round() as u32;
    let scale = f64::from(n);
    let mut best = ([0.0, 0.0, 1.0], f64::NEG_INFINITY);
    for i2 in 0..=n {
        for i1 in 0..=(n - i2) {
            let i0 = n - i2 - i1;
            let w = [f64::from(i0) / scale, f64::from(i1) / scale, f64::from(i2) / scale];
            let f = lossy_qfi_fast(w, eta);
            if f > best.1 {
                best = (w, f);
            }
        }
    }

    let (w, _) = compass_polish(best.0, best.1, |w| lossy_qfi_fast(w, eta));
    let weights = ProbeWeights::new(w[0], w[1], w[2])?;
    let f_max = qfi_lossy(&weights, eta)?;
    Ok((weights, f_max))
}

fn compass_polish<F>(mut x: [f64; 3], mut fx: f64, f: F) -> ([f64; 3], f64)
where
    F: Fn([f64; 3]) -> f64,
{
    const MOVES: [(usize, usize); 6] = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
    let mut step = GRID_STEP;
    while step > 1e-14 {
        let mut improved = true;
        while improved {
            improved = false;
            for &(from, to) in &MOVES {
                let s = step.min(x[from]);
                if s <= 0.0 {
                    continue;
                }
                let mut y = x;
                y[from] -= s;
                y[to] += s;
                if y[from] < 0.0 {
                    y[from] = 0.0;
                }
                let fy = f(y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        step *= 0.5;
    }
    (x, fx)
}

/// `δφ = 1/√F` for the N00N probe, with `F = 8η²/(1+η²)`.
pub fn noon_precision(eta: f64) -> Result<f64> {
    check_positive_eta(eta)?;
    Ok(((1.0 + eta * eta) / (8.0 * eta * eta)).sqrt())
}

/// Fisher information of coherent light with mean photon number
/// `n_photons`, a fraction `split` of it sent through the lossy arm.
pub fn coherent_fisher(split: f64, eta: f64, n_photons: f64) -> f64 {
    let denom = 1.0 / (eta * split) + 1.0 / (1.0 - split);
    4.0 * n_photons / denom
}

fn check_sil_args(eta: f64, n_photons: f64) -> Result<()> {
    check_positive_eta(eta)?;
    if !(n_photons > 0.0 && n_photons.is_finite()) {
        return Err(Error::OutOfRange {
            name: "n_photons",
            value: n_photons,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Standard interferometric limit for `n_photons` of classical light:
/// `(1+√η) / (2√(ηN))`, attained at the split `τ* = 1/(1+√η)`.
pub fn sil_precision(eta: f64, n_photons: f64) -> Result<f64> {
    check_sil_args(eta, n_photons)?;
    Ok((1.0 + eta.sqrt()) / (2.0 * (eta * n_photons).sqrt()))
}

/// [`sil_precision`] obtained by maximizing [`coherent_fisher`] over the
/// split ratio numerically.
pub fn sil_precision_numeric(eta: f64, n_photons: f64) -> Result<f64> {
    check_sil_args(eta, n_photons)?;
    let (_, f) = golden_section_max(|t| coherent_fisher(t, eta, n_photons), 0.0, 1.0, 1e-10);
    Ok(1.0 / f.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionPoint {
    pub eta: f64,
    pub weights: ProbeWeights,
    pub f_max: f64,
    pub dphi_optimal: f64,
    pub dphi_noon: f64,
    pub dphi_sil: f64,
    /// Optimal probe strictly beats both the N00N state and classical light.
    pub nonclassical: bool,
}

pub fn precision_point(eta: f64) -> Result<PrecisionPoint> {
    let (weights, f_max) = optimize_weights(eta)?;
    let dphi_optimal = 1.0 / f_max.sqrt();
    let dphi_noon = noon_precision(eta)?;
    let dphi_sil = sil_precision(eta, 2.0)?;
    Ok(PrecisionPoint {
        eta,
        weights,
        f_max,
        dphi_optimal,
        dphi_noon,
        dphi_sil,
        nonclassical: dphi_optimal < dphi_noon.min(dphi_sil),
    })
}

pub fn precision_curve(etas: &[f64]) -> Result<Vec<PrecisionPoint>> {
    etas.iter().map(|&eta| precision_point(eta)).collect()
}

/// `0.01, 0.02, …, 1.00` merged with [`EXPERIMENT_ETAS`], sorted.
pub fn default_eta_grid() -> Vec<f64> {
    let mut etas: Vec<f64> = (1..=100).map(|k| f64::from(k) / 100.0).collect();
    merge_etas(&mut etas, &EXPERIMENT_ETAS);
    etas
}

/// Inserts `extra` values into the sorted `etas`, skipping duplicates.
pub fn merge_etas(etas: &mut Vec<f64>, extra: &[f64]) {
    for &e in extra {
        if !etas.contains(&e) {
            etas.push(e);
        }
    }
    etas.sort_by(|a, b| a.partial_cmp(b).expect("finite transmissions"));
}
