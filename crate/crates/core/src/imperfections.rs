//! Parametric non-idealities: fibre admixture, partial distinguishability,
//! reduced single-photon visibility and detection thinning at the
//! multimode couplers.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::bounds::{REFERENCE_MODE, SENSING_MODE};
use crate::detection::{
    optimize_detection, DetectionConfig, IdealModel, Label, LabelCounts, LabelProbs, ModelPair, OutcomeModel,
};
use crate::error::{check_unit, Error, Result};
use crate::fock::{FockState, DEFAULT_CUTOFF};
use crate::prep::{prepare_from, Arm, PrepConfig, Probe};

/// Tolerance on the normalization of label distributions.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectionParams {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda_hom: f64,
    pub v_classical: f64,
    pub coupler_factor: f64,
}

impl Default for ImperfectionParams {
    fn default() -> Self {
        Self::ideal()
    }
}

impl ImperfectionParams {
    pub const fn ideal() -> Self {
        ImperfectionParams {
            epsilon: 0.0,
            delta: 0.0,
            lambda_hom: 1.0,
            v_classical: 1.0,
            coupler_factor: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("epsilon", self.epsilon)?;
        check_unit("lambda_hom", self.lambda_hom)?;
        check_unit("v_classical", self.v_classical)?;
        check_unit("coupler_factor", self.coupler_factor)?;
        if !self.delta.is_finite() {
            return Err(Error::OutOfRange {
                name: "delta",
                value: self.delta,
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            });
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.epsilon == 0.0 && self.lambda_hom == 1.0 && self.v_classical == 1.0
    }
}

/// Two-photon state leaving the fibre:
/// `√(1−ε)|11⟩ + e^{iδ}√(ε/2)(|20⟩+|02⟩)`.
pub fn fibre_input(epsilon: f64, delta: f64) -> Result<FockState> {
    check_unit("epsilon", epsilon)?;
    let side = Complex64::from_polar((epsilon / 2.0).sqrt(), delta);
    let state = FockState::from_terms(
        2,
        DEFAULT_CUTOFF,
        [
            ([1u8, 1], Complex64::new((1.0 - epsilon).sqrt(), 0.0)),
            ([2, 0], side),
            ([0, 2], side),
        ],
    )?;
    Ok(state.normalized())
}

/// `i^k` without rounding.
fn i_pow(k: i32) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Re-expresses a fibre state in the port basis of the preparation network.
///
/// The fibre output ports differ from the network input ports by a quarter
/// wave between the two modes, applied symmetrically: `|n_s n_r⟩` picks up
/// `e^{iπ(n_r − n_s)/4}`. `|11⟩` is left untouched while
/// `|20⟩ + |02⟩` becomes `−i(|20⟩ − |02⟩)`.
pub fn fibre_to_network(state: &FockState) -> Result<FockState> {
    let terms = state.iter().map(|(occ, &amp)| {
        let diff = i32::from(occ.get(REFERENCE_MODE)) - i32::from(occ.get(SENSING_MODE));
        let factor = if diff % 2 == 0 {
            i_pow(diff / 2)
        } else {
            Complex64::from_polar(1.0, core::f64::consts::FRAC_PI_4 * f64::from(diff))
        };
        (occ.clone(), amp * factor)
    });
    FockState::from_terms(state.modes(), state.cutoff(), terms)
}

fn check_distribution(p: &LabelProbs) -> Result<()> {
    let total = p.sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL || p.0.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::UnnormalizedDistribution(total));
    }
    Ok(())
}

/// `λ·ideal + (1−λ)·distinguishable`.
pub fn degrade_distribution(ideal: &LabelProbs, distinguishable: &LabelProbs, lambda_hom: f64) -> Result<LabelProbs> {
    check_distribution(ideal)?;
    check_distribution(distinguishable)?;
    check_unit("lambda_hom", lambda_hom)?;
    if lambda_hom == 1.0 {
        return Ok(*ideal);
    }
    let mut out = LabelProbs::default();
    for l in Label::ALL {
        out[l] = lambda_hom * ideal[l] + (1.0 - lambda_hom) * distinguishable[l];
    }
    Ok(out)
}

/// Single-photon amplitudes `(sensing, reference)` of two photons that
/// travel the network independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonPaths {
    pub first: [Complex64; 2],
    pub second: [Complex64; 2],
}

impl PhotonPaths {
    /// One photon in each arm, as at the fibre output.
    pub fn pair() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        PhotonPaths {
            first: [one, zero],
            second: [zero, one],
        }
    }

    /// Paths after the preparation splitter and attenuation, each photon
    /// conditioned on surviving.
    pub fn through_prep(prep: &PrepConfig) -> Result<Self> {
        let t = prep.theta1;
        let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
        let first = [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)];
        let second = [Complex64::new(s, 0.0), Complex64::new(c, 0.0)];
        let keep = prep.theta2.sqrt();
        let attenuate = |mut v: [Complex64; 2]| -> Result<[Complex64; 2]> {
            let idx = match prep.attenuated_arm {
                Arm::Sensing => SENSING_MODE,
                Arm::Reference => REFERENCE_MODE,
            };
            v[idx] *= keep;
            let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            if norm == 0.0 {
                return Err(Error::InvalidState("a photon never survives the preparation"));
            }
            Ok([v[0] / norm, v[1] / norm])
        };
        Ok(PhotonPaths {
            first: attenuate(first)?,
            second: attenuate(second)?,
        })
    }
}

/// Probabilities `[A, B, C]` for one photon.
fn single_photon(path: &[Complex64; 2], eta: f64, phi: f64, cfg: &DetectionConfig, visibility: f64) -> [f64; 3] {
    let [a_s, a_r] = *path;
    let lost = a_s.norm_sqr() * (1.0 - eta);
    let s = a_s * eta.sqrt() * Complex64::from_polar(1.0, phi + cfg.conditional_phase);
    let t = cfg.theta_d;
    let (ct, st) = (t.sqrt(), (1.0 - t).sqrt());
    let coh_a = (s * ct + a_r * st).norm_sqr();
    let coh_b = (-s * st + a_r * ct).norm_sqr();
    let flat_a = t * s.norm_sqr() + (1.0 - t) * a_r.norm_sqr();
    let flat_b = (1.0 - t) * s.norm_sqr() + t * a_r.norm_sqr();
    [
        visibility * coh_a + (1.0 - visibility) * flat_a,
        visibility * coh_b + (1.0 - visibility) * flat_b,
        lost,
    ]
}

/// Label probabilities for two photons routed independently: single-photon
/// interference is kept, two-photon interference is absent.
pub fn distinguishable_distribution(
    paths: &PhotonPaths,
    eta: f64,
    phi: f64,
    config: &DetectionConfig,
    visibility: f64,
) -> Result<LabelProbs> {
    check_unit("eta", eta)?;
    check_unit("v_classical", visibility)?;
    let [a1, b1, c1] = single_photon(&paths.first, eta, phi, config, visibility);
    let [a2, b2, c2] = single_photon(&paths.second, eta, phi, config, visibility);
    let mut p = LabelProbs::default();
    p[Label::AA] = a1 * a2;
    p[Label::AB] = a1 * b2 + b1 * a2;
    p[Label::BB] = b1 * b2;
    p[Label::AC] = a1 * c2 + c1 * a2;
    p[Label::BC] = b1 * c2 + c1 * b2;
    p[Label::CC] = c1 * c2;
    Ok(p)
}

/// One detection setting with the imperfections folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectModel {
    ideal: IdealModel,
    paths: PhotonPaths,
    params: ImperfectionParams,
}

impl ImperfectModel {
    pub fn new(prep: &PrepConfig, eta: f64, config: DetectionConfig, params: ImperfectionParams) -> Result<Self> {
        params.validate()?;
        let fibre = fibre_to_network(&fibre_input(params.epsilon, params.delta)?)?;
        let (raw, _) = prepare_from(&fibre, prep.theta1, prep.theta2, prep.attenuated_arm)?;
        let ideal = IdealModel::new(&raw.normalized(), eta, config)?.with_contrast(params.v_classical)?;
        Ok(ImperfectModel {
            ideal,
            paths: PhotonPaths::through_prep(prep)?,
            params,
        })
    }

    pub fn config(&self) -> &DetectionConfig {
        self.ideal.config()
    }

    pub fn params(&self) -> &ImperfectionParams {
        &self.params
    }
}

impl OutcomeModel for ImperfectModel {
    fn probabilities(&self, phi: f64) -> LabelProbs {
        let coherent = self.ideal.probabilities(phi);
        let lambda = self.params.lambda_hom;
        if lambda == 1.0 {
            return coherent;
        }
        let dist = distinguishable_distribution(
            &self.paths,
            self.ideal.eta(),
            phi,
            self.ideal.config(),
            self.params.v_classical,
        )
        .expect("parameters were validated at construction");
        let mut out = LabelProbs::default();
        for l in Label::ALL {
            out[l] = lambda * coherent[l] + (1.0 - lambda) * dist[l];
        }
        out
    }
}

/// Both detection settings of a probe seen through the imperfect apparatus.
pub type Apparatus = ModelPair<ImperfectModel>;

/// Builds the apparatus for `probe` at transmission `eta`. The detection
/// stage is tuned for the ideal probe, as an experimenter would.
pub fn apparatus(probe: &Probe, eta: f64, params: ImperfectionParams) -> Result<Apparatus> {
    let quarter = optimize_detection(&probe.state, eta)?;
    Ok(ModelPair {
        quarter: ImperfectModel::new(&probe.prep, eta, quarter, params)?,
        half: ImperfectModel::new(&probe.prep, eta, DetectionConfig::half(), params)?,
    })
}

/// Keeps each event independently with probability `factor`.
///
/// AA, BB and CC lose half their events at the multimode couplers; AB, AC
/// and BC are then thinned by the same factor in postprocessing so that
/// relative frequencies stay unbiased.
pub fn apply_coupler_thinning<R: Rng + ?Sized>(counts: &LabelCounts, factor: f64, rng: &mut R) -> Result<LabelCounts> {
    check_unit("coupler_factor", factor)?;
    let mut out = LabelCounts::default();
    let physical = Label::ALL.into_iter().filter(|l| l.same_counter());
    let compensation = Label::ALL.into_iter().filter(|l| !l.same_counter());
    for l in physical.chain(compensation) {
        let n = counts[l];
        out[l] = if n == 0 {
            0
        } else {
            Binomial::new(n, factor)
                .map_err(|_| Error::OutOfRange { name: "coupler_factor", value: factor, lo: 0.0, hi: 1.0 })?
                .sample(rng)
        };
    }
    Ok(out)
}
