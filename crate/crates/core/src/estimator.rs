//! Maximum-likelihood phase estimation, uncertainty reports and histograms.

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bounds::{optimize_weights, qfi_lossy, ProbeWeights};
use crate::detection::{Label, LabelCounts, LabelProbs, ModelPair, OutcomeModel, Setting};
use crate::error::{Error, Result};
use crate::montecarlo::{SeriesData, SeriesKey};
use crate::prep::ProbeKind;

/// Grid step of the likelihood scan.
pub const SCAN_STEP: f64 = 1e-3;
/// Grid maxima within this many nats of the best one are refined.
const CANDIDATE_BAND: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LikelihoodOptions {
    /// Score CC counts of the half setting.
    pub include_cc: bool,
    /// Use the raw label probabilities instead of renormalizing within each
    /// setting's postselected labels.
    pub joint_normalization: bool,
}

impl Default for LikelihoodOptions {
    fn default() -> Self {
        LikelihoodOptions {
            include_cc: true,
            joint_normalization: false,
        }
    }
}

impl LikelihoodOptions {
    pub fn labels(&self, setting: Setting) -> &'static [Label] {
        match setting {
            Setting::Quarter => &[Label::AA, Label::AB, Label::BB],
            Setting::Half if self.include_cc => &[Label::AC, Label::BC, Label::CC],
            Setting::Half => &[Label::AC, Label::BC],
        }
    }
}

/// Counts of one series in both settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SeriesCounts {
    pub quarter: LabelCounts,
    pub half: LabelCounts,
}

impl SeriesCounts {
    pub fn get(&self, setting: Setting) -> &LabelCounts {
        match setting {
            Setting::Quarter => &self.quarter,
            Setting::Half => &self.half,
        }
    }

    /// Coincidences that enter the likelihood.
    pub fn registered(&self, opts: &LikelihoodOptions) -> u64 {
        Setting::BOTH
            .iter()
            .map(|&s| self.get(s).sum_of(opts.labels(s)))
            .sum()
    }
}

impl From<&SeriesData> for SeriesCounts {
    fn from(s: &SeriesData) -> Self {
        SeriesCounts {
            quarter: s.quarter,
            half: s.half,
        }
    }
}

/// Log-probabilities used for scoring, `[quarter AA, AB, BB, half AC, BC, CC]`.
fn scoring_logs(quarter: &LabelProbs, half: &LabelProbs, opts: &LikelihoodOptions) -> [f64; 6] {
    let mut out = [f64::NEG_INFINITY; 6];
    for (setting, probs) in [(Setting::Quarter, quarter), (Setting::Half, half)] {
        let labels = opts.labels(setting);
        let norm = if opts.joint_normalization {
            1.0
        } else {
            probs.sum_of(labels)
        };
        for &l in labels {
            let p = probs[l] / norm;
            out[l.index()] = if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
    }
    out
}

fn score(counts: &SeriesCounts, logs: &[f64; 6]) -> f64 {
    let mut total = 0.0;
    for setting in Setting::BOTH {
        let c = counts.get(setting);
        for l in setting.labels() {
            let n = c[l];
            if n == 0 {
                continue;
            }
            let lp = logs[l.index()];
            if lp == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += n as f64 * lp;
        }
    }
    total
}

fn masked(counts: &SeriesCounts, opts: &LikelihoodOptions) -> SeriesCounts {
    let mut out = *counts;
    if !opts.include_cc {
        out.half[Label::CC] = 0;
    }
    out.quarter[Label::AC] = 0;
    out.quarter[Label::BC] = 0;
    out.quarter[Label::CC] = 0;
    out.half[Label::AA] = 0;
    out.half[Label::AB] = 0;
    out.half[Label::BB] = 0;
    out
}

/// `Σ n_k ln p_k(φ)` with quarter counts scored on AA/AB/BB and half counts
/// on AC/BC/CC. A zero probability under a positive count gives `−∞`.
pub fn log_likelihood<M: OutcomeModel>(
    counts: &SeriesCounts,
    phi: f64,
    models: &ModelPair<M>,
    opts: &LikelihoodOptions,
) -> f64 {
    let logs = scoring_logs(&models.quarter.probabilities(phi), &models.half.probabilities(phi), opts);
    score(&masked(counts, opts), &logs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub phi_hat: f64,
    pub log_likelihood_max: f64,
    pub n_coincidences: u64,
}

/// Maximum-likelihood estimator with the log-probabilities on the scan grid
/// computed once.
#[derive(Debug, Clone)]
pub struct MlEstimator<'a, M> {
    models: &'a ModelPair<M>,
    opts: LikelihoodOptions,
    lo: f64,
    hi: f64,
    grid: Vec<f64>,
    table: Vec<[f64; 6]>,
}

impl<'a, M: OutcomeModel> MlEstimator<'a, M> {
    /// Estimator over the default interval `[−π/2, π/2)`.
    pub fn new(models: &'a ModelPair<M>, opts: LikelihoodOptions) -> Self {
        Self::with_interval(models, opts, -FRAC_PI_2, FRAC_PI_2)
            .expect("default interval is valid")
    }

    /// Estimator over `[lo, hi)`.
    pub fn with_interval(models: &'a ModelPair<M>, opts: LikelihoodOptions, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi - lo > SCAN_STEP) {
            return Err(Error::InvalidConfig("search interval must span more than one grid step"));
        }
        let n = ((hi - lo) / SCAN_STEP).ceil() as usize;
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + SCAN_STEP * i as f64)
            .filter(|&x| x < hi)
            .collect();
        let table = grid
            .iter()
            .map(|&phi| scoring_logs(&models.quarter.probabilities(phi), &models.half.probabilities(phi), &opts))
            .collect();
        Ok(MlEstimator {
            models,
            opts,
            lo,
            hi,
            grid,
            table,
        })
    }

    pub fn options(&self) -> &LikelihoodOptions {
        &self.opts
    }

    fn exact(&self, counts: &SeriesCounts, phi: f64) -> f64 {
        let logs = scoring_logs(
            &self.models.quarter.probabilities(phi),
            &self.models.half.probabilities(phi),
            &self.opts,
        );
        score(counts, &logs)
    }

    /// Successive three-point parabolic steps around `x`, shrinking the
    /// stencil tenfold each round.
    fn refine(&self, counts: &SeriesCounts, mut x: f64, mut fx: f64) -> (f64, f64) {
        let top = self.hi - SCAN_STEP * 1e-6;
        let mut h = SCAN_STEP;
        while h >= 1e-8 {
            let fm = self.exact(counts, x - h);
            let fp = self.exact(counts, x + h);
            let curv = fm - 2.0 * fx + fp;
            let mut candidates = [(x - h, fm), (x + h, fp), (x, fx)];
            if curv < 0.0 && fm.is_finite() && fp.is_finite() {
                let d = (0.5 * h * (fm - fp) / curv).clamp(-h, h);
                let xv = (x + d).clamp(self.lo, top);
                candidates[2] = (xv, self.exact(counts, xv));
            }
            for (cx, cf) in candidates {
                if cf > fx && cx >= self.lo && cx <= top {
                    x = cx;
                    fx = cf;
                }
            }
            h /= 10.0;
        }
        (x, fx)
    }

    pub fn estimate(&self, counts: &SeriesCounts) -> Result<Estimate> {
        let used = masked(counts, &self.opts);
        let n_coincidences = used.registered(&self.opts);
        if n_coincidences == 0 {
            return Err(Error::EmptyCounts);
        }
        let values: Vec<f64> = self.table.iter().map(|logs| score(&used, logs)).collect();
        let (mut best, mut worst) = (f64::NEG_INFINITY, f64::INFINITY);
        for &v in &values {
            if v > best {
                best = v;
            }
            if v < worst {
                worst = v;
            }
        }
        if best == f64::NEG_INFINITY {
            return Err(Error::DegenerateLikelihood);
        }
        if best - worst <= 1e-12 * best.abs().max(1.0) {
            return Err(Error::DegenerateLikelihood);
        }
        let n = values.len();
        let mut chosen: Option<(f64, f64)> = None;
        for i in 0..n {
            let v = values[i];
            if v < best - CANDIDATE_BAND {
                continue;
            }
            let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < n { values[i + 1] } else { f64::NEG_INFINITY };
            if v < left || v < right {
                continue;
            }
            let (x, fx) = self.refine(&used, self.grid[i], v);
            chosen = Some(match chosen {
                None => (x, fx),
                Some((bx, bf)) => {
                    let tie = (fx - bf).abs() <= 1e-9 * bf.abs().max(1.0);
                    if (tie && x.abs() < bx.abs()) || (!tie && fx > bf) {
                        (x, fx)
                    } else {
                        (bx, bf)
                    }
                }
            });
        }
        let (phi_hat, log_likelihood_max) = chosen.ok_or(Error::DegenerateLikelihood)?;
        Ok(Estimate {
            phi_hat,
            log_likelihood_max,
            n_coincidences,
        })
    }
}

/// One-shot estimate; builds the grid table on every call.
pub fn ml_estimate<M: OutcomeModel>(
    counts: &SeriesCounts,
    models: &ModelPair<M>,
    opts: LikelihoodOptions,
) -> Result<Estimate> {
    MlEstimator::new(models, opts).estimate(counts)
}

/// Uncertainty of one `(η, probe, φ)` group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub eta: f64,
    pub probe: ProbeKind,
    pub phi_true: f64,
    pub mean: f64,
    pub sigma: f64,
    pub m_bar: f64,
    pub sigma_scaled: f64,
    pub crb: f64,
}

/// `1/√F` for the probe the campaign uses at `eta`.
pub fn cramer_rao(eta: f64, probe: ProbeKind) -> Result<f64> {
    let f = match probe {
        ProbeKind::Optimal => optimize_weights(eta)?.1,
        ProbeKind::Noon => qfi_lossy(&ProbeWeights::noon(), eta)?,
    };
    Ok(1.0 / f.sqrt())
}

/// Mean and sample standard deviation (`n − 1` denominator).
pub fn mean_std(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::TooFewEstimates(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// Groups estimates by `(η, probe, φ)` in order of first appearance and
/// reports σ, the mean registered coincidences `M̄`, `σ·√M̄` and the bound
/// returned by `crb` for the group.
pub fn analyze<F>(estimates: &[(SeriesKey, Estimate)], mut crb: F) -> Result<Vec<ReportRow>>
where
    F: FnMut(f64, ProbeKind) -> Result<f64>,
{
    type Group = ((f64, ProbeKind, f64), Vec<f64>, u64);
    let mut groups: Vec<Group> = Vec::new();
    for (key, est) in estimates {
        let id = (key.eta, key.probe, key.phi_true);
        match groups.iter_mut().find(|(g, _, _)| *g == id) {
            Some((_, phis, n)) => {
                phis.push(est.phi_hat);
                *n += est.n_coincidences;
            }
            None => groups.push((id, alloc::vec![est.phi_hat], est.n_coincidences)),
        }
    }
    let mut bounds: Vec<((f64, ProbeKind), f64)> = Vec::new();
    let mut rows = Vec::with_capacity(groups.len());
    for ((eta, probe, phi_true), phis, total) in groups {
        let (mean, sigma) = mean_std(&phis)?;
        let m_bar = total as f64 / phis.len() as f64;
        let bound = match bounds.iter().find(|(k, _)| *k == (eta, probe)) {
            Some(&(_, b)) => b,
            None => {
                let b = crb(eta, probe)?;
                bounds.push(((eta, probe), b));
                b
            }
        };
        rows.push(ReportRow {
            eta,
            probe,
            phi_true,
            mean,
            sigma,
            m_bar,
            sigma_scaled: sigma * m_bar.sqrt(),
            crb: bound,
        });
    }
    Ok(rows)
}

/// Fixed-width histogram with left-closed, right-open bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Values that fell outside the binned range.
    pub outside: u64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Left edge of bin `i`.
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + self.bin_width * i as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins `values` over `[lo, hi)`.
pub fn histogram(values: &[f64], bin_width: f64, range: (f64, f64)) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::OutOfRange {
            name: "bin_width",
            value: bin_width,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidConfig("histogram range must be finite and non-empty"));
    }
    let bins = ((hi - lo) / bin_width).ceil().max(1.0) as usize;
    let mut counts = alloc::vec![0u64; bins];
    let mut outside = 0;
    for &v in values {
        let k = ((v - lo) / bin_width).floor();
        if v >= lo && v < hi && k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        } else {
            outside += 1;
        }
    }
    Ok(Histogram {
        lo,
        bin_width,
        counts,
        outside,
    })
}

/// Histogram whose range is aligned to multiples of `bin_width` and covers
/// all of `values`.
pub fn histogram_covering(values: &[f64], bin_width: f64) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / bin_width).floor() * bin_width;
    let hi = ((max / bin_width).floor() + 1.0) * bin_width;
    histogram(values, bin_width, (lo, hi))
}

/// Normal fit by moments: `(mean, standard deviation)`.
pub fn fit_normal(values: &[f64]) -> Result<(f64, f64)> {
    mean_std(values)
}

/// Overlap coefficient `Σ min(p_i, q_i)` of two samples binned on a common
/// grid of width `bin_width`.
pub fn overlap_coefficient(a: &[f64], b: &[f64], bin_width: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let joint: Vec<f64> = a.iter().chain(b).copied().collect();
    let grid = histogram_covering(&joint, bin_width)?;
    let range = (grid.lo, grid.edge(grid.bins()));
    let ha = histogram(a, bin_width, range)?;
    let hb = histogram(b, bin_width, range)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(ha
        .counts
        .iter()
        .zip(&hb.counts)
        .map(|(&x, &y)| (x as f64 / na).min(y as f64 / nb))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::ProbeWeights;
    use crate::detection::IdealModel;

    fn noon_pair(eta: f64) -> ModelPair<IdealModel> {
        ModelPair::ideal(&ProbeWeights::noon().state(), eta).unwrap()
    }

    #[test]
    fn zero_counts_score_zero() {
        let m = noon_pair(0.5);
        let c = SeriesCounts::default();
        for &phi in &[-1.0, 0.0, 0.7] {
            assert_eq!(log_likelihood(&c, phi, &m, &LikelihoodOptions::default()), 0.0);
        }
        assert!(matches!(
            ml_estimate(&c, &m, LikelihoodOptions::default()),
            Err(Error::EmptyCounts)
        ));
    }

    #[test]
    fn single_ab_count() {
        let m = noon_pair(1.0);
        let mut c = SeriesCounts::default();
        c.quarter[Label::AB] = 1;
        for &phi in &[-0.6, -0.2, 0.0, 0.3] {
            let expected = ((1.0 - (2.0 * phi).sin()) / 2.0).ln();
            let got = log_likelihood(&c, phi, &m, &LikelihoodOptions::default());
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_expected_counts() {
        let m = noon_pair(0.361);
        let phi0 = 0.04;
        let q = m.quarter.probabilities(phi0);
        let h = m.half.probabilities(phi0);
        let mut c = SeriesCounts::default();
        for l in Label::ALL {
            c.quarter[l] = (1e6 * q[l]).round() as u64;
            c.half[l] = (1e6 * h[l]).round() as u64;
        }
        let est = ml_estimate(&c, &m, LikelihoodOptions::default()).unwrap();
        assert!((est.phi_hat - phi0).abs() < 2e-3);
    }

    #[test]
    fn cc_only_is_degenerate() {
        let m = noon_pair(0.4);
        let mut c = SeriesCounts::default();
        c.half[Label::CC] = 50;
        assert!(matches!(
            ml_estimate(&c, &m, LikelihoodOptions::default()),
            Err(Error::DegenerateLikelihood)
        ));
    }

    #[test]
    fn histogram_basics() {
        let h = histogram(&[0.013], 0.01, (0.0, 0.05)).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts[1], 1);
        assert!(histogram(&[], 0.01, (0.0, 1.0)).is_err());
        assert!(histogram(&[0.1], 0.0, (0.0, 1.0)).is_err());
        let edge = histogram(&[0.0, 0.05], 0.01, (0.0, 0.05)).unwrap();
        assert_eq!(edge.counts[0], 1);
        assert_eq!(edge.outside, 1);
    }

    #[test]
    fn identical_samples_overlap_fully() {
        let a = [0.1, 0.12, 0.15, 0.2];
        assert!((overlap_coefficient(&a, &a, 0.01).unwrap() - 1.0).abs() < 1e-12);
        let b = [0.5, 0.52];
        assert_eq!(overlap_coefficient(&a, &b, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn analyze_needs_two_estimates() {
        let key = SeriesKey {
            eta: 0.5,
            probe: ProbeKind::Noon,
            phi_true: 0.0,
            series_id: 0,
        };
        let est = Estimate {
            phi_hat: 0.01,
            log_likelihood_max: -1.0,
            n_coincidences: 10,
        };
        assert!(matches!(
            analyze(&[(key, est)], |_, _| Ok(1.0)),
            Err(Error::TooFewEstimates(1))
        ));
    }
}
