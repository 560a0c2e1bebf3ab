//! Sparse Fock-space states on a handful of optical modes.
//!
//! States are stored as a map from occupation patterns to complex
//! amplitudes. Mode transforms act on creation operators: column `k` of a
//! [`ModeTransform`] is the image of `a_k†`, i.e. `a_k† -> Σ_m U[m][k] a_m†`.
//! With that convention `apply_transform(apply_transform(s, U), V)` equals
//! `apply_transform(s, V·U)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{check_unit, Error, Result};

/// Tolerance on normalization and unitarity checks.
pub const NORM_TOL: f64 = 1e-12;

/// Default bound on the total photon number of a state.
pub const DEFAULT_CUTOFF: u8 = 4;

/// Photon numbers per mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<u8>);

impl Occupation {
    pub fn new(counts: Vec<u8>) -> Self {
        Occupation(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Occupation(vec![0; modes])
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&n| u32::from(n)).sum()
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }

    /// `√(Π n_k!)`, the normalization linking kets and creation-operator monomials.
    fn factorial_root(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product::<f64>().sqrt()
    }
}

impl From<&[u8]> for Occupation {
    fn from(counts: &[u8]) -> Self {
        Occupation(counts.to_vec())
    }
}

impl<const N: usize> From<[u8; N]> for Occupation {
    fn from(counts: [u8; N]) -> Self {
        Occupation(counts.to_vec())
    }
}

impl fmt::Debug for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for n in &self.0 {
            write!(f, "{n}")?;
        }
        f.write_str(">")
    }
}

fn factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormFlag {
    Normalized,
    /// Squared norm in `(0, 1)`, as produced by postselection.
    Unnormalized,
}

/// A pure state of `modes` optical modes with at most `cutoff` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    cutoff: u8,
    norm: NormFlag,
    amplitudes: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    /// Builds a state from `(occupation, amplitude)` terms. Repeated
    /// occupations are summed and exact zeros dropped.
    pub fn from_terms<I, O>(modes: usize, cutoff: u8, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (O, Complex64)>,
        O: Into<Occupation>,
    {
        let mut amplitudes = BTreeMap::new();
        for (occ, amp) in terms {
            let occ = occ.into();
            if occ.modes() != modes {
                return Err(Error::InvalidState("occupation length differs from mode count"));
            }
            if occ.total() > u32::from(cutoff) {
                return Err(Error::InvalidState("occupation exceeds the photon cutoff"));
            }
            *amplitudes.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        Self::from_map(modes, cutoff, amplitudes)
    }

    fn from_map(
        modes: usize,
        cutoff: u8,
        mut amplitudes: BTreeMap<Occupation, Complex64>,
    ) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidState("a state needs at least one mode"));
        }
        amplitudes.retain(|_, a| a.re != 0.0 || a.im != 0.0);
        let norm_sqr: f64 = amplitudes.values().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || norm_sqr <= 0.0 {
            return Err(Error::InvalidState("squared norm must be positive"));
        }
        let norm = if (norm_sqr - 1.0).abs() <= NORM_TOL {
            NormFlag::Normalized
        } else if norm_sqr < 1.0 {
            NormFlag::Unnormalized
        } else {
            return Err(Error::NotNormalized(norm_sqr));
        };
        Ok(FockState {
            modes,
            cutoff,
            norm,
            amplitudes,
        })
    }

    /// A single occupation pattern with unit amplitude.
    pub fn basis(occupation: impl Into<Occupation>) -> Result<Self> {
        let occ = occupation.into();
        let modes = occ.modes();
        let cutoff = DEFAULT_CUTOFF.max(occ.total().min(255) as u8);
        Self::from_terms(modes, cutoff, [(occ, Complex64::new(1.0, 0.0))])
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> u8 {
        self.cutoff
    }

    pub fn norm_flag(&self) -> NormFlag {
        self.norm
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn amplitude(&self, occupation: &[u8]) -> Complex64 {
        self.amplitudes
            .get(&Occupation::from(occupation))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amplitudes.iter()
    }

    /// Total photon number, if every component carries the same number.
    pub fn photon_number(&self) -> Option<u32> {
        let mut totals = self.amplitudes.keys().map(Occupation::total);
        let first = totals.next()?;
        totals.all(|t| t == first).then_some(first)
    }

    /// Rescales to unit norm.
    pub fn normalized(&self) -> FockState {
        let scale = 1.0 / self.norm_sqr().sqrt();
        FockState {
            modes: self.modes,
            cutoff: self.cutoff,
            norm: NormFlag::Normalized,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(o, a)| (o.clone(), a * scale))
                .collect(),
        }
    }

    /// Multiplies every amplitude by `factor`; the result must stay within unit norm.
    pub fn scaled(&self, factor: Complex64) -> Result<FockState> {
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(o, a)| (o.clone(), a * factor))
            .collect();
        Self::from_map(self.modes, self.cutoff, amplitudes)
    }

    /// Mean and mean square of the photon number in `mode`, weighted by `|amplitude|²`.
    pub(crate) fn number_moments(&self, mode: usize) -> (f64, f64) {
        self.amplitudes.iter().fold((0.0, 0.0), |(m1, m2), (o, a)| {
            let n = f64::from(o.get(mode));
            let w = a.norm_sqr();
            (m1 + w * n, m2 + w * n * n)
        })
    }

    fn with_vacuum_mode(&self) -> FockState {
        FockState {
            modes: self.modes + 1,
            cutoff: self.cutoff,
            norm: self.norm,
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(o, a)| {
                    let mut counts = o.0.clone();
                    counts.push(0);
                    (Occupation(counts), *a)
                })
                .collect(),
        }
    }
}

/// A linear-optical transformation of creation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    dim: usize,
    /// Row-major `dim × dim` entries.
    matrix: Vec<Complex64>,
}

impl ModeTransform {
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            matrix[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        ModeTransform { dim, matrix }
    }

    /// Wraps a row-major matrix after checking `U·U† = 1` within [`NORM_TOL`].
    pub fn from_matrix(dim: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != dim * dim || dim == 0 {
            return Err(Error::InvalidState("matrix must be square and non-empty"));
        }
        let t = ModeTransform { dim, matrix };
        let deviation = t.unitarity_deviation();
        if deviation > NORM_TOL {
            return Err(Error::NotUnitary(deviation));
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    /// Largest elementwise deviation of `U·U†` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.entry(i, k) * self.entry(j, k).conj();
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// The transform `next · self`: first `self`, then `next`.
    pub fn then(&self, next: &ModeTransform) -> Result<ModeTransform> {
        if next.dim != self.dim {
            return Err(Error::DimensionMismatch {
                transform: next.dim,
                state: self.dim,
            });
        }
        let n = self.dim;
        let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += next.entry(i, k) * self.entry(k, j);
                }
                matrix[i * n + j] = acc;
            }
        }
        Ok(ModeTransform { dim: n, matrix })
    }
}

fn check_mode(index: usize, modes: usize) -> Result<()> {
    if index < modes {
        Ok(())
    } else {
        Err(Error::ModeOutOfRange { index, modes })
    }
}

/// Beam splitter with intensity transmission `transmission` between modes
/// `i` and `j`:
///
/// `a_i† -> √ϑ a_i† − √(1−ϑ) a_j†`, `a_j† -> √(1−ϑ) a_i† + √ϑ a_j†`.
///
/// With this real convention `|11⟩` maps to
/// `√(2ϑ(1−ϑ))(|20⟩ − |02⟩) + (2ϑ−1)|11⟩`.
pub fn beam_splitter(transmission: f64, i: usize, j: usize, modes: usize) -> Result<ModeTransform> {
    check_unit("transmission", transmission)?;
    check_mode(i, modes)?;
    check_mode(j, modes)?;
    if i == j {
        return Err(Error::SameMode(i));
    }
    let t = Complex64::new(transmission.sqrt(), 0.0);
    let r = Complex64::new((1.0 - transmission).sqrt(), 0.0);
    let mut u = ModeTransform::identity(modes);
    u.matrix[i * modes + i] = t;
    u.matrix[j * modes + i] = -r;
    u.matrix[i * modes + j] = r;
    u.matrix[j * modes + j] = t;
    Ok(u)
}

/// Phase `e^{iφ}` on a single mode.
pub fn phase_shift(phase: f64, mode: usize, modes: usize) -> Result<ModeTransform> {
    check_mode(mode, modes)?;
    let mut u = ModeTransform::identity(modes);
    u.matrix[mode * modes + mode] = Complex64::from_polar(1.0, phase);
    Ok(u)
}

/// Applies the multi-photon map induced by `transform`.
///
/// Every basis ket is written as a creation-operator monomial, the
/// transformed operators are substituted and the product expanded.
pub fn apply_transform(state: &FockState, transform: &ModeTransform) -> Result<FockState> {
    let n = state.modes;
    if transform.dim != n {
        return Err(Error::DimensionMismatch {
            transform: transform.dim,
            state: n,
        });
    }
    let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
    for (occ, &amp) in &state.amplitudes {
        // Monomial coefficients, keyed by the exponents of a_m†.
        let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        poly.insert(vec![0; n], amp / occ.factorial_root());
        for k in 0..n {
            for _ in 0..occ.get(k) {
                let mut next: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
                for (exponents, coeff) in &poly {
                    for m in 0..n {
                        let u = transform.entry(m, k);
                        if u.re == 0.0 && u.im == 0.0 {
                            continue;
                        }
                        let mut e = exponents.clone();
                        e[m] += 1;
                        *next.entry(e).or_insert(Complex64::new(0.0, 0.0)) += coeff * u;
                    }
                }
                poly = next;
            }
        }
        for (exponents, coeff) in poly {
            let q = Occupation(exponents);
            let ket = coeff * q.factorial_root();
            *out.entry(q).or_insert(Complex64::new(0.0, 0.0)) += ket;
        }
    }
    FockState::from_map(n, state.cutoff, out)
}

/// The state conditioned on `lost` photons leaving through the loss channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalBranch {
    pub lost: u32,
    pub probability: f64,
    /// Normalized conditional state on the original modes.
    pub state: FockState,
}

impl ConditionalBranch {
    /// `√p_l |ψ_l⟩`.
    pub fn weighted_state(&self) -> FockState {
        let s = self.probability.sqrt();
        FockState {
            modes: self.state.modes,
            cutoff: self.state.cutoff,
            norm: if (self.probability - 1.0).abs() <= NORM_TOL {
                NormFlag::Normalized
            } else {
                NormFlag::Unnormalized
            },
            amplitudes: self
                .state
                .amplitudes
                .iter()
                .map(|(o, a)| (o.clone(), a * s))
                .collect(),
        }
    }
}

/// Loss of transmission `eta` on `mode`, modeled as a beam splitter to a
/// vacuum environment mode followed by counting the photons in it.
///
/// Branches are returned in increasing `lost` order; branches of exactly
/// zero probability are omitted. The environment coupling is oriented so
/// that `a_mode† -> √η a_mode† + √(1−η) a_env†`, which keeps every branch
/// amplitude of a real non-negative input real and non-negative.
pub fn apply_loss(state: &FockState, mode: usize, eta: f64) -> Result<Vec<ConditionalBranch>> {
    check_unit("eta", eta)?;
    check_mode(mode, state.modes)?;
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm_sqr));
    }
    let n = state.modes;
    let extended = state.with_vacuum_mode();
    let coupler = beam_splitter(eta, n, mode, n + 1)?;
    let mixed = apply_transform(&extended, &coupler)?;

    let mut by_lost: BTreeMap<u8, BTreeMap<Occupation, Complex64>> = BTreeMap::new();
    for (occ, amp) in mixed.amplitudes {
        let mut counts = occ.0;
        let lost = counts.pop().unwrap_or(0);
        by_lost
            .entry(lost)
            .or_default()
            .insert(Occupation(counts), amp);
    }

    let mut branches = Vec::with_capacity(by_lost.len());
    for (lost, amplitudes) in by_lost {
        let probability: f64 = amplitudes.values().map(|a| a.norm_sqr()).sum();
        if probability == 0.0 {
            continue;
        }
        let scale = 1.0 / probability.sqrt();
        let amplitudes = amplitudes
            .into_iter()
            .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
            .map(|(o, a)| (o, a * scale))
            .collect();
        branches.push(ConditionalBranch {
            lost: u32::from(lost),
            probability,
            state: FockState {
                modes: n,
                cutoff: state.cutoff,
                norm: NormFlag::Normalized,
                amplitudes,
            },
        });
    }
    Ok(branches)
}

/// Probability of detecting exactly `pattern`.
pub fn outcome_probability(state: &FockState, pattern: &[u8]) -> Result<f64> {
    if pattern.len() != state.modes {
        return Err(Error::DimensionMismatch {
            transform: pattern.len(),
            state: state.modes,
        });
    }
    Ok(state.amplitude(pattern).norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn full_transmission_is_identity() {
        let u = beam_splitter(1.0, 0, 1, 2).unwrap();
        assert_eq!(u, ModeTransform::identity(2));
    }

    #[test]
    fn balanced_splitter_entries() {
        let u = beam_splitter(0.5, 0, 1, 2).unwrap();
        for r in 0..2 {
            for col in 0..2 {
                assert!((u.entry(r, col).norm() - FRAC_1_SQRT_2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn splitter_is_unitary_with_unit_determinant() {
        let u = beam_splitter(0.36, 0, 1, 2).unwrap();
        assert!(u.unitarity_deviation() < 1e-15);
        let det = u.entry(0, 0) * u.entry(1, 1) - u.entry(0, 1) * u.entry(1, 0);
        assert!((det.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn splitter_rejects_bad_arguments() {
        assert!(matches!(beam_splitter(1.2, 0, 1, 2), Err(Error::OutOfRange { .. })));
        assert!(matches!(beam_splitter(0.5, 0, 2, 2), Err(Error::ModeOutOfRange { .. })));
        assert!(matches!(beam_splitter(0.5, 1, 1, 2), Err(Error::SameMode(1))));
        assert!(matches!(phase_shift(0.1, 3, 2), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn phase_shift_cases() {
        assert_eq!(phase_shift(0.0, 0, 2).unwrap(), ModeTransform::identity(2));
        let s = FockState::basis([1, 0]).unwrap();
        let out = apply_transform(&s, &phase_shift(PI, 0, 2).unwrap()).unwrap();
        assert_close(out.amplitude(&[1, 0]), c(-1.0), 1e-15);
        let full = phase_shift(2.0 * PI, 0, 2).unwrap();
        assert!((full.entry(0, 0) - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn pair_through_splitter_matches_closed_form() {
        let pair = FockState::basis([1, 1]).unwrap();
        for &t in &[0.0, 0.2, 0.5, 0.73, 1.0] {
            let out = apply_transform(&pair, &beam_splitter(t, 0, 1, 2).unwrap()).unwrap();
            let s = (2.0 * t * (1.0 - t)).sqrt();
            assert_close(out.amplitude(&[2, 0]), c(s), 1e-15);
            assert_close(out.amplitude(&[0, 2]), c(-s), 1e-15);
            assert_close(out.amplitude(&[1, 1]), c(2.0 * t - 1.0), 1e-15);
        }
        let noon = apply_transform(&pair, &beam_splitter(0.5, 0, 1, 2).unwrap()).unwrap();
        assert_eq!(noon.amplitude(&[1, 1]), c(0.0));
    }

    #[test]
    fn single_photon_through_splitter() {
        let s = FockState::basis([1, 0]).unwrap();
        let t = 0.3;
        let out = apply_transform(&s, &beam_splitter(t, 0, 1, 2).unwrap()).unwrap();
        assert_close(out.amplitude(&[1, 0]), c(t.sqrt()), 1e-15);
        assert_close(out.amplitude(&[0, 1]), c(-(1.0 - t).sqrt()), 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = FockState::basis([1, 0]).unwrap();
        let u = ModeTransform::identity(3);
        assert!(matches!(apply_transform(&s, &u), Err(Error::DimensionMismatch { .. })));
        assert!(outcome_probability(&s, &[1, 0, 0]).is_err());
    }

    #[test]
    fn lossless_channel_keeps_state() {
        let s = FockState::from_terms(2, 2, [([2, 0], c(0.6)), ([0, 2], c(-0.8))]).unwrap();
        let branches = apply_loss(&s, 0, 1.0).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].lost, 0);
        assert!((branches[0].probability - 1.0).abs() < 1e-15);
        assert_close(branches[0].state.amplitude(&[2, 0]), c(0.6), 1e-15);
    }

    #[test]
    fn noon_loss_probabilities() {
        let h = FRAC_1_SQRT_2;
        let noon = FockState::from_terms(2, 2, [([2, 0], c(h)), ([0, 2], c(-h))]).unwrap();
        let eta = 0.37;
        let b = apply_loss(&noon, 0, eta).unwrap();
        assert_eq!(b.len(), 3);
        assert!((b[0].probability - (1.0 + eta * eta) / 2.0).abs() < 1e-14);
        assert!((b[1].probability - eta * (1.0 - eta)).abs() < 1e-14);
        assert!((b[2].probability - (1.0 - eta) * (1.0 - eta) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn loss_rejects_unnormalized_input() {
        let s = FockState::from_terms(2, 2, [([1, 1], c(0.5))]).unwrap();
        assert_eq!(s.norm_flag(), NormFlag::Unnormalized);
        assert!(matches!(apply_loss(&s, 0, 0.5), Err(Error::NotNormalized(_))));
        let ok = FockState::basis([1, 1]).unwrap();
        assert!(matches!(apply_loss(&ok, 0, -0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn outcome_probabilities() {
        let h = FRAC_1_SQRT_2;
        let noon = FockState::from_terms(2, 2, [([2, 0], c(h)), ([0, 2], c(-h))]).unwrap();
        assert!((outcome_probability(&noon, &[2, 0]).unwrap() - 0.5).abs() < 1e-15);
        let pair = FockState::basis([1, 1]).unwrap();
        assert_eq!(outcome_probability(&pair, &[2, 0]).unwrap(), 0.0);
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(FockState::from_terms(2, 2, [([1, 1, 0], c(1.0))]).is_err());
        assert!(FockState::from_terms(2, 1, [([1, 1], c(1.0))]).is_err());
        assert!(FockState::from_terms(2, 2, [([1, 1], c(2.0))]).is_err());
        assert!(FockState::from_terms(2, 2, [([1, 1], c(0.0))]).is_err());
    }
}
