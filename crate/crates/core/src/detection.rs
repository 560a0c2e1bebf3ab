//! Detection stage: conditional phase, final splitter `ϑ_D`, and the six
//! two-fold coincidence labels.
//!
//! After the loss, the sensing arm picks up `φ` plus a conditional phase,
//! the two arms are interfered on a splitter of transmission `ϑ_D` and
//! counted at A (sensing output) and B (reference output). Photons removed
//! by the loss are counted at C. Two settings are recorded separately:
//! `Quarter` (phase near π/4, tuned `ϑ_D`) is read out on AA/AB/BB and
//! `Half` (phase π/2, balanced splitter) on AC/BC/CC.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use core::fmt;
use core::ops::{Index, IndexMut};


use crate::bounds::{REFERENCE_MODE, SENSING_MODE};
use crate::error::{check_unit, Error, Result};
use crate::fock::{apply_loss, apply_transform, beam_splitter, phase_shift, ConditionalBranch, FockState};
use crate::search::{bracketed_max, golden_section_max};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    AA,
    AB,
    BB,
    AC,
    BC,
    CC,
}

impl Label {
    pub const ALL: [Label; 6] = [Label::AA, Label::AB, Label::BB, Label::AC, Label::BC, Label::CC];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::AA => "AA",
            Label::AB => "AB",
            Label::BB => "BB",
            Label::AC => "AC",
            Label::BC => "BC",
            Label::CC => "CC",
        }
    }

    /// Both photons hit the same counter.
    pub fn same_counter(self) -> bool {
        matches!(self, Label::AA | Label::BB | Label::CC)
    }

    /// Photons lost before the detection stage.
    pub fn lost(self) -> u32 {
        match self {
            Label::AA | Label::AB | Label::BB => 0,
            Label::AC | Label::BC => 1,
            Label::CC => 2,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Probabilities of the six coincidence labels, indexed by [`Label`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LabelProbs(pub [f64; 6]);

impl LabelProbs {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn sum_of(&self, labels: &[Label]) -> f64 {
        labels.iter().map(|&l| self[l]).sum()
    }
}

impl Index<Label> for LabelProbs {
    type Output = f64;
    fn index(&self, l: Label) -> &f64 {
        &self.0[l.index()]
    }
}

impl IndexMut<Label> for LabelProbs {
    fn index_mut(&mut self, l: Label) -> &mut f64 {
        &mut self.0[l.index()]
    }
}

/// Event counts per label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct LabelCounts(pub [u64; 6]);

impl LabelCounts {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn sum_of(&self, labels: &[Label]) -> u64 {
        labels.iter().map(|&l| self[l]).sum()
    }
}

impl Index<Label> for LabelCounts {
    type Output = u64;
    fn index(&self, l: Label) -> &u64 {
        &self.0[l.index()]
    }
}

impl IndexMut<Label> for LabelCounts {
    fn index_mut(&mut self, l: Label) -> &mut u64 {
        &mut self.0[l.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Setting {
    Quarter,
    Half,
}

impl Setting {
    pub const BOTH: [Setting; 2] = [Setting::Quarter, Setting::Half];

    pub fn nominal_phase(self) -> f64 {
        match self {
            Setting::Quarter => FRAC_PI_4,
            Setting::Half => FRAC_PI_2,
        }
    }

    /// Labels kept when postselecting this setting's events.
    pub fn labels(self) -> [Label; 3] {
        match self {
            Setting::Quarter => [Label::AA, Label::AB, Label::BB],
            Setting::Half => [Label::AC, Label::BC, Label::CC],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::Quarter => "quarter",
            Setting::Half => "half",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quarter" => Some(Setting::Quarter),
            "half" => Some(Setting::Half),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub setting: Setting,
    pub theta_d: f64,
    pub conditional_phase: f64,
}

impl DetectionConfig {
    pub fn quarter(theta_d: f64) -> Result<Self> {
        check_unit("theta_d", theta_d)?;
        Ok(DetectionConfig {
            setting: Setting::Quarter,
            theta_d,
            conditional_phase: FRAC_PI_4,
        })
    }

    pub fn half() -> Self {
        DetectionConfig {
            setting: Setting::Half,
            theta_d: 0.5,
            conditional_phase: FRAC_PI_2,
        }
    }

    pub fn with_conditional_phase(mut self, phase: f64) -> Self {
        self.conditional_phase = phase;
        self
    }
}

/// Label probabilities as a function of the phase.
pub trait OutcomeModel {
    fn probabilities(&self, phi: f64) -> LabelProbs;
}

impl<M: OutcomeModel + ?Sized> OutcomeModel for &M {
    fn probabilities(&self, phi: f64) -> LabelProbs {
        (**self).probabilities(phi)
    }
}

/// Pure-state model of one detection setting.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealModel {
    eta: f64,
    config: DetectionConfig,
    branches: Vec<ConditionalBranch>,
    /// Fringe contrast applied to single-photon (one lost) interference.
    contrast: f64,
}

impl IdealModel {
    pub fn new(probe: &FockState, eta: f64, config: DetectionConfig) -> Result<Self> {
        check_unit("eta", eta)?;
        check_unit("theta_d", config.theta_d)?;
        if probe.modes() != 2 {
            return Err(Error::DimensionMismatch {
                transform: 2,
                state: probe.modes(),
            });
        }
        if let Some((occ, _)) = probe.iter().find(|(o, _)| o.total() != 2) {
            return Err(Error::PhotonNumber(occ.total()));
        }
        let branches = apply_loss(probe, SENSING_MODE, eta)?;
        Ok(IdealModel {
            eta,
            config,
            branches,
            contrast: 1.0,
        })
    }

    /// Scales the visibility of single-photon fringes by `contrast`.
    pub fn with_contrast(mut self, contrast: f64) -> Result<Self> {
        check_unit("v_classical", contrast)?;
        self.contrast = contrast;
        Ok(self)
    }

    pub fn config(&self) -> &DetectionConfig {
        &self.config
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn branches(&self) -> &[ConditionalBranch] {
        &self.branches
    }

    fn try_probabilities(&self, phi: f64) -> Result<LabelProbs> {
        let cfg = &self.config;
        let readout = phase_shift(phi + cfg.conditional_phase, SENSING_MODE, 2)?
            .then(&beam_splitter(cfg.theta_d, SENSING_MODE, REFERENCE_MODE, 2)?)?;
        let mut p = LabelProbs::default();
        for branch in &self.branches {
            let w = branch.probability;
            match branch.lost {
                0 => {
                    let out = apply_transform(&branch.state, &readout)?;
                    p[Label::AA] += w * out.amplitude(&[2, 0]).norm_sqr();
                    p[Label::AB] += w * out.amplitude(&[1, 1]).norm_sqr();
                    p[Label::BB] += w * out.amplitude(&[0, 2]).norm_sqr();
                }
                1 => {
                    let out = apply_transform(&branch.state, &readout)?;
                    let mut at_a = out.amplitude(&[1, 0]).norm_sqr();
                    let mut at_b = out.amplitude(&[0, 1]).norm_sqr();
                    if self.contrast != 1.0 {
                        let in_s = branch.state.amplitude(&[1, 0]).norm_sqr();
                        let in_r = branch.state.amplitude(&[0, 1]).norm_sqr();
                        let t = cfg.theta_d;
                        let flat_a = t * in_s + (1.0 - t) * in_r;
                        let flat_b = (1.0 - t) * in_s + t * in_r;
                        at_a = self.contrast * at_a + (1.0 - self.contrast) * flat_a;
                        at_b = self.contrast * at_b + (1.0 - self.contrast) * flat_b;
                    }
                    p[Label::AC] += w * at_a;
                    p[Label::BC] += w * at_b;
                }
                _ => p[Label::CC] += w,
            }
        }
        Ok(p)
    }
}

impl OutcomeModel for IdealModel {
    fn probabilities(&self, phi: f64) -> LabelProbs {
        self.try_probabilities(phi)
            .expect("model inputs were validated at construction")
    }
}

/// Label probabilities for a normalized two-photon probe.
pub fn outcome_distribution(
    probe: &FockState,
    eta: f64,
    phi: f64,
    config: DetectionConfig,
) -> Result<LabelProbs> {
    IdealModel::new(probe, eta, config)?.try_probabilities(phi)
}

/// Step of the central difference used for `dp/dφ`.
pub const FISHER_STEP: f64 = 1e-5;
/// Probabilities below this are treated through the `p -> 0` limit.
pub const FISHER_FLOOR: f64 = 1e-12;

/// Classical Fisher information `Σ (dp_k/dφ)² / p_k` over `labels`.
///
/// For a label whose probability vanishes together with its slope, the
/// term tends to `2 p''`; a vanishing probability with a finite slope is
/// reported as [`Error::DivergentFisher`].
pub fn classical_fisher<M: OutcomeModel>(model: &M, phi: f64, labels: &[Label]) -> Result<f64> {
    let h = FISHER_STEP;
    let mid = model.probabilities(phi);
    let up = model.probabilities(phi + h);
    let down = model.probabilities(phi - h);
    let mut total = 0.0;
    for &l in labels {
        let p = mid[l];
        let slope = (up[l] - down[l]) / (2.0 * h);
        if p >= FISHER_FLOOR {
            total += slope * slope / p;
        } else if slope.abs() <= 1e-5 {
            let curvature = (up[l] - 2.0 * p + down[l]) / (h * h);
            total += 2.0 * curvature.max(0.0);
        } else {
            return Err(Error::DivergentFisher(l));
        }
    }
    Ok(total)
}

/// The two detection settings of one probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair<M> {
    pub quarter: M,
    pub half: M,
}

impl<M: OutcomeModel> ModelPair<M> {
    pub fn get(&self, setting: Setting) -> &M {
        match setting {
            Setting::Quarter => &self.quarter,
            Setting::Half => &self.half,
        }
    }

    /// Fisher information of the postselected data: AA/AB/BB from the
    /// quarter setting plus AC/BC (and CC when `include_cc`) from the half one.
    pub fn combined_fisher(&self, phi: f64, include_cc: bool) -> Result<f64> {
        let half_labels: &[Label] = if include_cc {
            &[Label::AC, Label::BC, Label::CC]
        } else {
            &[Label::AC, Label::BC]
        };
        Ok(classical_fisher(&self.quarter, phi, &Setting::Quarter.labels())?
            + classical_fisher(&self.half, phi, half_labels)?)
    }

    pub fn fringe_scan(&self, phi_grid: &[f64]) -> Vec<FringeRow> {
        fringe_scan(self, phi_grid)
    }
}

impl ModelPair<IdealModel> {
    /// Ideal models with the detection stage tuned by [`optimize_detection`].
    pub fn ideal(probe: &FockState, eta: f64) -> Result<Self> {
        let quarter = optimize_detection(probe, eta)?;
        Ok(ModelPair {
            quarter: IdealModel::new(probe, eta, quarter)?,
            half: IdealModel::new(probe, eta, DetectionConfig::half())?,
        })
    }
}

fn zero_loss_fisher(probe: &FockState, eta: f64, config: DetectionConfig) -> f64 {
    IdealModel::new(probe, eta, config)
        .ok()
        .and_then(|m| classical_fisher(&m, 0.0, &Setting::Quarter.labels()).ok())
        .unwrap_or(f64::NEG_INFINITY)
}

fn has_pair_component(probe: &FockState) -> bool {
    probe.amplitude(&[1, 1]).norm_sqr() > 0.0
}

/// `ϑ_D` for the quarter setting at the nominal π/4 phase: 1/2 for probes
/// without a `|11⟩` component, otherwise the maximizer of the zero-loss
/// Fisher information at `φ = 0`.
pub fn optimize_theta_d(probe: &FockState, eta: f64) -> Result<DetectionConfig> {
    if !has_pair_component(probe) {
        return DetectionConfig::quarter(0.5);
    }
    let (theta_d, _) = bracketed_max(
        |t| zero_loss_fisher(probe, eta, DetectionConfig { setting: Setting::Quarter, theta_d: t, conditional_phase: FRAC_PI_4 }),
        0.0,
        1.0,
        40,
        1e-8,
    );
    DetectionConfig::quarter(theta_d)
}

/// Quarter-setting tuning that saturates the zero-loss Fisher information
/// at `φ = 0`.
///
/// For probes with a `|11⟩` component the optimal conditional phase sits
/// slightly away from π/4, so it is searched jointly with `ϑ_D` within
/// π/8 of the nominal value. Probes without `|11⟩` keep π/4 and `ϑ_D = 1/2`.
pub fn optimize_detection(probe: &FockState, eta: f64) -> Result<DetectionConfig> {
    if !has_pair_component(probe) {
        return DetectionConfig::quarter(0.5);
    }
    let best_theta = |phase: f64| {
        bracketed_max(
            |t| {
                zero_loss_fisher(
                    probe,
                    eta,
                    DetectionConfig { setting: Setting::Quarter, theta_d: t, conditional_phase: phase },
                )
            },
            0.0,
            1.0,
            20,
            1e-9,
        )
    };
    let (phase, _) = golden_section_max(
        |phase| best_theta(phase).1,
        FRAC_PI_4 - FRAC_PI_8,
        FRAC_PI_4 + FRAC_PI_8,
        1e-9,
    );
    let (theta_d, _) = best_theta(phase);
    Ok(DetectionConfig::quarter(theta_d)?.with_conditional_phase(phase))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeRow {
    pub phi: f64,
    pub setting: Setting,
    pub probs: LabelProbs,
}

/// Label probabilities of both settings at every phase in `phi_grid`.
pub fn fringe_scan<M: OutcomeModel>(pair: &ModelPair<M>, phi_grid: &[f64]) -> Vec<FringeRow> {
    let mut rows = Vec::with_capacity(2 * phi_grid.len());
    for &phi in phi_grid {
        for setting in Setting::BOTH {
            rows.push(FringeRow {
                phi,
                setting,
                probs: pair.get(setting).probabilities(phi),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::ProbeWeights;

    #[test]
    fn noon_quarter_fringe() {
        let noon = ProbeWeights::noon().state();
        let cfg = DetectionConfig::quarter(0.5).unwrap();
        for &phi in &[-0.7, -0.1, 0.0, 0.3, 1.2] {
            let p = outcome_distribution(&noon, 1.0, phi, cfg).unwrap();
            let s = (2.0 * phi).sin();
            assert!((p[Label::AB] - (1.0 - s) / 2.0).abs() < 1e-12);
            assert!((p[Label::AA] - (1.0 + s) / 4.0).abs() < 1e-12);
            assert!((p[Label::BB] - (1.0 + s) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_setting_single_loss_mass() {
        let probe = ProbeWeights::new(0.2, 0.3, 0.5).unwrap().state();
        let eta = 0.4;
        let p1 = apply_loss(&probe, 0, eta).unwrap().iter().find(|b| b.lost == 1).unwrap().probability;
        for &phi in &[-1.0, 0.0, 0.5, 2.0] {
            let p = outcome_distribution(&probe, eta, phi, DetectionConfig::half()).unwrap();
            assert!((p[Label::AC] + p[Label::BC] - p1).abs() < 1e-12);
            assert!((p.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let pair = FockState::basis([1, 1]).unwrap();
        let cfg = DetectionConfig::quarter(0.5).unwrap().with_conditional_phase(0.0);
        let p = outcome_distribution(&pair, 1.0, 0.0, cfg).unwrap();
        assert_eq!(p[Label::AB], 0.0);
    }

    #[test]
    fn rejects_wrong_photon_number() {
        let single = FockState::basis([1, 0]).unwrap();
        assert!(matches!(
            outcome_distribution(&single, 0.5, 0.0, DetectionConfig::half()),
            Err(Error::PhotonNumber(1))
        ));
    }

    #[test]
    fn noon_fisher_at_operating_point() {
        let noon = ProbeWeights::noon().state();
        let m = IdealModel::new(&noon, 1.0, DetectionConfig::quarter(0.5).unwrap()).unwrap();
        let f = classical_fisher(&m, 0.0, &Setting::Quarter.labels()).unwrap();
        assert!((f - 4.0).abs() < 1e-8);
    }

    #[test]
    fn fisher_limit_at_dark_fringe() {
        // AB vanishes at φ = π/4 together with its slope.
        let noon = ProbeWeights::noon().state();
        let m = IdealModel::new(&noon, 1.0, DetectionConfig::quarter(0.5).unwrap()).unwrap();
        assert!(m.probabilities(FRAC_PI_4)[Label::AB] < FISHER_FLOOR);
        let f = classical_fisher(&m, FRAC_PI_4, &Label::ALL).unwrap();
        assert!((f - 4.0).abs() < 1e-4);
    }

    #[test]
    fn phase_blind_probe_has_no_information() {
        let pair = FockState::basis([1, 1]).unwrap();
        let m = IdealModel::new(&pair, 1.0, DetectionConfig::quarter(0.5).unwrap()).unwrap();
        assert!(classical_fisher(&m, 0.3, &Label::ALL).unwrap() < 1e-15);
    }

    #[test]
    fn noon_detection_is_balanced() {
        let noon = ProbeWeights::noon().state();
        for &eta in &[0.2, 0.7, 1.0] {
            assert_eq!(optimize_theta_d(&noon, eta).unwrap().theta_d, 0.5);
            let cfg = optimize_detection(&noon, eta).unwrap();
            assert_eq!((cfg.theta_d, cfg.conditional_phase), (0.5, FRAC_PI_4));
        }
    }

    #[test]
    fn lossless_scan_has_no_c_events() {
        let pair = ModelPair::ideal(&ProbeWeights::noon().state(), 1.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|k| -3.0 + 0.12 * f64::from(k)).collect();
        for row in pair.fringe_scan(&grid) {
            assert_eq!(row.probs[Label::AC], 0.0);
            assert_eq!(row.probs[Label::BC], 0.0);
            assert_eq!(row.probs[Label::CC], 0.0);
        }
    }
}
