//! Seeded simulation of coincidence-count campaigns.
//!
//! Every record draws from its own ChaCha8 stream whose seed is a pure
//! function of `(master_seed, η index, φ index, series id, stream)`, so any
//! record can be regenerated alone and series can be simulated in any order
//! or in parallel.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::bounds::EXPERIMENT_ETAS;
use crate::detection::{Label, LabelCounts, LabelProbs, OutcomeModel, Setting};
use crate::error::{check_unit, Error, Result};
use crate::imperfections::{apparatus, apply_coupler_thinning, Apparatus, ImperfectionParams, DISTRIBUTION_TOL};
use crate::prep::{Probe, ProbeKind};

/// `k · 0.02` rad for `k = −7..=7`.
pub fn default_phases() -> Vec<f64> {
    (-7..=7).map(|k| f64::from(k) * 2.0 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub eta_list: Vec<f64>,
    pub probes: Vec<ProbeKind>,
    pub phase_list: Vec<f64>,
    pub series_count: u32,
    /// Mean number of coincidence events per series.
    pub events_per_series: u64,
    pub master_seed: u64,
    pub imperfections: ImperfectionParams,
    pub poissonize_m: bool,
    /// Share of a series' events recorded in the quarter setting.
    pub quarter_fraction: f64,
    /// Draw the event count separately for each setting instead of
    /// splitting one count between them.
    pub events_per_setting: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            eta_list: EXPERIMENT_ETAS.to_vec(),
            probes: vec![ProbeKind::Optimal],
            phase_list: default_phases(),
            series_count: 300,
            events_per_series: 2000,
            master_seed: 0,
            imperfections: ImperfectionParams::ideal(),
            poissonize_m: true,
            quarter_fraction: 0.5,
            events_per_setting: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta_list.is_empty() {
            return Err(Error::InvalidConfig("eta_list is empty"));
        }
        for &eta in &self.eta_list {
            check_unit("eta", eta)?;
            if eta == 0.0 {
                return Err(Error::ZeroTransmission);
            }
        }
        if self.probes.is_empty() {
            return Err(Error::InvalidConfig("no probe selected"));
        }
        if self.phase_list.is_empty() {
            return Err(Error::InvalidConfig("phase_list is empty"));
        }
        if self.phase_list.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("phase_list holds a non-finite value"));
        }
        if self.series_count == 0 {
            return Err(Error::InvalidConfig("series must be at least 1"));
        }
        if self.events_per_series == 0 {
            return Err(Error::InvalidConfig("events must be at least 1"));
        }
        check_unit("quarter_fraction", self.quarter_fraction)?;
        self.imperfections.validate()
    }
}

const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream used for the per-series event count.
pub const COUNT_STREAM: u64 = 2;

/// Seed of one random stream. Streams 0 and 1 belong to the quarter and
/// half settings, [`COUNT_STREAM`] draws the series' event count.
pub fn derive_seed(master_seed: u64, eta_index: usize, phase_index: usize, series_id: u32, stream: u64) -> u64 {
    let mut h = splitmix64(master_seed);
    for word in [eta_index as u64, phase_index as u64, u64::from(series_id), stream] {
        h = splitmix64(h ^ word);
    }
    h
}

/// The random stream behind a derived seed.
pub fn seeded_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multinomial draw of `m` events over the six labels.
pub fn sample_counts<R: Rng + ?Sized>(distribution: &LabelProbs, m: u64, rng: &mut R) -> Result<LabelCounts> {
    let total = distribution.sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOL || distribution.0.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::UnnormalizedDistribution(total));
    }
    let mut counts = LabelCounts::default();
    let mut remaining = m;
    for (i, l) in Label::ALL.into_iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let rest: f64 = distribution.0[i..].iter().sum();
        if rest <= 0.0 {
            break;
        }
        let p = (distribution[l] / rest).clamp(0.0, 1.0);
        let n = if p >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, p)
                .map_err(|_| Error::UnnormalizedDistribution(total))?
                .sample(rng)
        };
        counts[l] = n;
        remaining -= n;
    }
    Ok(counts)
}

/// One setting of one series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub eta: f64,
    pub probe: ProbeKind,
    pub phi_true: f64,
    pub setting: Setting,
    pub series_id: u32,
    pub counts: LabelCounts,
    pub seed_used: u64,
}

/// Identifies a series within a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesKey {
    pub eta: f64,
    pub probe: ProbeKind,
    pub phi_true: f64,
    pub series_id: u32,
}

/// Both settings' counts of a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesData {
    pub key: SeriesKey,
    pub quarter: LabelCounts,
    pub half: LabelCounts,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventDataset {
    pub records: Vec<EventRecord>,
}

impl EventDataset {
    /// Pairs the quarter and half records of each series, keeping the
    /// order of first appearance.
    pub fn series(&self) -> Result<Vec<SeriesData>> {
        let mut out: Vec<(SeriesData, [bool; 2])> = Vec::new();
        for r in &self.records {
            let key = SeriesKey {
                eta: r.eta,
                probe: r.probe,
                phi_true: r.phi_true,
                series_id: r.series_id,
            };
            // Records of one series are normally adjacent; fall back to a scan.
            let pos = match out.last() {
                Some((s, _)) if s.key == key => Some(out.len() - 1),
                _ => out.iter().position(|(s, _)| s.key == key),
            };
            let idx = match pos {
                Some(i) => i,
                None => {
                    out.push((
                        SeriesData {
                            key,
                            quarter: LabelCounts::default(),
                            half: LabelCounts::default(),
                        },
                        [false; 2],
                    ));
                    out.len() - 1
                }
            };
            let (series, seen) = &mut out[idx];
            if seen[r.setting.index()] {
                return Err(Error::InvalidConfig("duplicate record for a series setting"));
            }
            seen[r.setting.index()] = true;
            match r.setting {
                Setting::Quarter => series.quarter = r.counts,
                Setting::Half => series.half = r.counts,
            }
        }
        out.into_iter()
            .map(|(s, seen)| {
                if seen == [true; 2] {
                    Ok(s)
                } else {
                    Err(Error::InvalidConfig("series is missing a setting"))
                }
            })
            .collect()
    }
}

/// Position of a series in the campaign grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeriesIndex {
    pub eta_index: usize,
    pub probe_index: usize,
    pub phase_index: usize,
    pub series_id: u32,
}

/// A validated campaign with its apparatus models built once.
#[derive(Debug, Clone)]
pub struct CampaignPlan {
    config: ExperimentConfig,
    /// Indexed by `eta_index * probes.len() + probe_index`.
    apparatus: Vec<Apparatus>,
}

impl CampaignPlan {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mut models = Vec::with_capacity(config.eta_list.len() * config.probes.len());
        for &eta in &config.eta_list {
            for &kind in &config.probes {
                let probe = Probe::for_kind(kind, eta)?;
                models.push(apparatus(&probe, eta, config.imperfections)?);
            }
        }
        Ok(CampaignPlan {
            config,
            apparatus: models,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn apparatus(&self, eta_index: usize, probe_index: usize) -> &Apparatus {
        &self.apparatus[eta_index * self.config.probes.len() + probe_index]
    }

    /// All series in output order: η, probe, φ, series id.
    pub fn series_indices(&self) -> Vec<SeriesIndex> {
        let c = &self.config;
        let mut out = Vec::with_capacity(c.eta_list.len() * c.probes.len() * c.phase_list.len() * c.series_count as usize);
        for eta_index in 0..c.eta_list.len() {
            for probe_index in 0..c.probes.len() {
                for phase_index in 0..c.phase_list.len() {
                    for series_id in 0..c.series_count {
                        out.push(SeriesIndex {
                            eta_index,
                            probe_index,
                            phase_index,
                            series_id,
                        });
                    }
                }
            }
        }
        out
    }

    fn event_count(&self, idx: &SeriesIndex, stream: u64) -> Result<u64> {
        let c = &self.config;
        if !c.poissonize_m {
            return Ok(c.events_per_series);
        }
        let seed = derive_seed(c.master_seed, idx.eta_index, idx.phase_index, idx.series_id, stream);
        let poisson = Poisson::new(c.events_per_series as f64)
            .map_err(|_| Error::InvalidConfig("events out of range for a Poisson draw"))?;
        Ok(poisson.sample(&mut seeded_stream(seed)) as u64)
    }

    /// Simulates the quarter and half records of one series.
    pub fn simulate_series(&self, idx: &SeriesIndex) -> Result<[EventRecord; 2]> {
        let c = &self.config;
        let phi = c.phase_list[idx.phase_index];
        let models = self.apparatus(idx.eta_index, idx.probe_index);
        let split = if c.events_per_setting {
            [
                self.event_count(idx, COUNT_STREAM)?,
                self.event_count(idx, COUNT_STREAM + 1)?,
            ]
        } else {
            let m = self.event_count(idx, COUNT_STREAM)?;
            let quarter = ((m as f64) * c.quarter_fraction).round() as u64;
            [quarter, m - quarter.min(m)]
        };
        let record = |setting: Setting| -> Result<EventRecord> {
            let seed = derive_seed(c.master_seed, idx.eta_index, idx.phase_index, idx.series_id, setting.index() as u64);
            let mut rng = seeded_stream(seed);
            let probs = models.get(setting).probabilities(phi);
            let raw = sample_counts(&probs, split[setting.index()], &mut rng)?;
            let counts = apply_coupler_thinning(&raw, c.imperfections.coupler_factor, &mut rng)?;
            Ok(EventRecord {
                eta: c.eta_list[idx.eta_index],
                probe: c.probes[idx.probe_index],
                phi_true: phi,
                setting,
                series_id: idx.series_id,
                counts,
                seed_used: seed,
            })
        };
        Ok([record(Setting::Quarter)?, record(Setting::Half)?])
    }
}

/// Runs the whole campaign sequentially.
pub fn run_campaign(config: &ExperimentConfig) -> Result<EventDataset> {
    let plan = CampaignPlan::new(config.clone())?;
    let mut records = Vec::new();
    for idx in plan.series_indices() {
        records.extend(plan.simulate_series(&idx)?);
    }
    Ok(EventDataset { records })
}
