use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use lossyphase_core::bounds::{default_eta_grid, merge_etas, precision_point, EXPERIMENT_ETAS};
use lossyphase_core::detection::Label;
use lossyphase_core::estimator::{
    analyze, cramer_rao, histogram_covering, Estimate, LikelihoodOptions, MlEstimator, ReportRow, SeriesCounts,
};
use lossyphase_core::imperfections::apparatus;
use lossyphase_core::montecarlo::{derive_seed, sample_counts, seeded_stream, CampaignPlan, EventDataset, SeriesKey};
use lossyphase_core::prep::{solve_prep, Probe, ProbeKind};
use rayon::prelude::*;

use crate::config::{Imperfections, SimulateConfig};
use crate::error::{CliError, CliResult};
use crate::format::num;
use crate::manifest::{self, BoundsRun, EstimateRun, FringesRun, RunConfig, RunManifest, SimulateRun};
use crate::tables::{
    read_dataset, write_csv, write_dataset, BOUNDS_COLUMNS, ESTIMATE_COLUMNS, FRINGE_COLUMNS, HISTOGRAM_COLUMNS,
    REPORT_COLUMNS,
};

pub const DATASET_FILE: &str = "dataset.csv";
pub const ESTIMATES_FILE: &str = "estimates.csv";
pub const REPORT_FILE: &str = "report.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

/// Runs `run` and writes its manifest. Returns the manifest path.
pub fn execute(run: RunConfig) -> CliResult<PathBuf> {
    let started = manifest::now_ms();
    let (outputs, manifest_path) = match &run {
        RunConfig::Bounds(b) => (bounds(b)?, manifest::sidecar(&b.out)),
        RunConfig::Fringes(f) => (fringes(f)?, manifest::sidecar(&f.out)),
        RunConfig::Simulate(s) => (simulate(s)?, manifest::in_dir(&s.out_dir, "simulate")),
        RunConfig::Estimate(e) => (estimate(e)?, manifest::in_dir(&e.out_dir, "estimate")),
    };
    RunManifest::new(run, outputs, started).write(&manifest_path)?;
    Ok(manifest_path)
}

/// Repeats the run recorded in a manifest, optionally redirecting its
/// outputs into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: Option<&Path>) -> CliResult<PathBuf> {
    let mut run = RunManifest::read(manifest_path)?.run;
    if let Some(dir) = out_dir {
        let redirect = |p: &Path| dir.join(p.file_name().unwrap_or_default());
        match &mut run {
            RunConfig::Bounds(b) => b.out = redirect(&b.out),
            RunConfig::Fringes(f) => f.out = redirect(&f.out),
            RunConfig::Simulate(s) => s.out_dir = dir.to_path_buf(),
            RunConfig::Estimate(e) => e.out_dir = dir.to_path_buf(),
        }
    }
    execute(run)
}

fn bounds_grid(b: &BoundsRun) -> CliResult<Vec<f64>> {
    if b.eta_min.is_none() && b.eta_max.is_none() && b.steps.is_none() {
        return Ok(default_eta_grid());
    }
    let lo = b.eta_min.unwrap_or(0.01);
    let hi = b.eta_max.unwrap_or(1.0);
    let steps = b.steps.unwrap_or(100);
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(CliError::domain(format!(
            "transmission range must satisfy 0 < eta_min <= eta_max <= 1, got [{lo}, {hi}]"
        )));
    }
    if steps == 0 {
        return Err(CliError::domain("steps must be at least 1"));
    }
    let mut etas: Vec<f64> = if steps == 1 {
        vec![lo]
    } else {
        (0..steps)
            .map(|k| {
                if k + 1 == steps {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (steps - 1) as f64
                }
            })
            .collect()
    };
    if steps > 1 {
        let inside: Vec<f64> = EXPERIMENT_ETAS.iter().copied().filter(|e| (lo..=hi).contains(e)).collect();
        merge_etas(&mut etas, &inside);
    }
    Ok(etas)
}

fn bounds(b: &BoundsRun) -> CliResult<Vec<PathBuf>> {
    let etas = bounds_grid(b)?;
    let rows = etas
        .par_iter()
        .map(|&eta| -> CliResult<Vec<String>> {
            let p = precision_point(eta)?;
            let prep = solve_prep(&p.weights)?;
            let [x0, x1, x2] = p.weights.as_array();
            Ok(vec![
                num(eta),
                num(p.dphi_optimal),
                num(p.dphi_noon),
                num(p.dphi_sil),
                num(x0),
                num(x1),
                num(x2),
                num(prep.success_prob),
            ])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(&b.out, &BOUNDS_COLUMNS, rows)?;
    Ok(vec![b.out.clone()])
}

/// `steps` phases spanning `[−π, π]`.
pub fn phase_grid(steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n)
            .map(|k| if k + 1 == n { PI } else { -PI + 2.0 * PI * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn fringes(f: &FringesRun) -> CliResult<Vec<PathBuf>> {
    if !(f.eta > 0.0 && f.eta <= 1.0) {
        return Err(CliError::domain(format!("eta must lie in (0, 1], got {}", f.eta)));
    }
    if f.phi_steps == 0 {
        return Err(CliError::domain("phi_steps must be at least 1"));
    }
    let probe = Probe::for_kind(f.probe.into(), f.eta)?;
    let models = apparatus(&probe, f.eta, f.imperfections.params())?;
    let grid = phase_grid(f.phi_steps);
    let scan = models.fringe_scan(&grid);
    let mut rows = Vec::with_capacity(scan.len());
    for (k, row) in scan.iter().enumerate() {
        let mut out = vec![num(row.phi), row.setting.name().to_string()];
        match f.counts {
            None => out.extend(Label::ALL.iter().map(|&l| num(row.probs[l]))),
            Some(m) => {
                let seed = derive_seed(f.seed, 0, k / 2, 0, row.setting.index() as u64);
                let counts = sample_counts(&row.probs, m, &mut seeded_stream(seed))?;
                out.extend(Label::ALL.iter().map(|&l| counts[l].to_string()));
            }
        }
        rows.push(out);
    }
    write_csv(&f.out, &FRINGE_COLUMNS, rows)?;
    Ok(vec![f.out.clone()])
}

/// Simulates the campaign in parallel; records keep the sequential order.
pub fn simulate_dataset(config: &SimulateConfig) -> CliResult<EventDataset> {
    let plan = CampaignPlan::new(config.experiment())?;
    let records = plan
        .series_indices()
        .par_iter()
        .map(|idx| plan.simulate_series(idx))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EventDataset {
        records: records.into_iter().flatten().collect(),
    })
}

fn simulate(s: &SimulateRun) -> CliResult<Vec<PathBuf>> {
    let data = simulate_dataset(&s.config)?;
    let path = s.out_dir.join(DATASET_FILE);
    write_dataset(&path, &data)?;
    Ok(vec![path])
}

/// Estimates of every series that yields one, in dataset order, plus the
/// number of series skipped for an empty or flat likelihood.
pub fn estimate_dataset(
    data: &EventDataset,
    imperfections: &Imperfections,
    opts: LikelihoodOptions,
) -> CliResult<(Vec<(SeriesKey, Estimate)>, usize)> {
    let series = data.series()?;
    let mut groups: Vec<(f64, ProbeKind)> = Vec::new();
    for s in &series {
        let g = (s.key.eta, s.key.probe);
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let models = groups
        .par_iter()
        .map(|&(eta, kind)| -> CliResult<_> {
            let probe = Probe::for_kind(kind, eta)?;
            Ok(apparatus(&probe, eta, imperfections.params())?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let estimators: Vec<_> = models.iter().map(|m| MlEstimator::new(m, opts)).collect();
    let index: HashMap<(u64, ProbeKind), usize> = groups
        .iter()
        .enumerate()
        .map(|(i, &(eta, kind))| ((eta.to_bits(), kind), i))
        .collect();
    let results: Vec<_> = series
        .par_iter()
        .map(|s| {
            let est = &estimators[index[&(s.key.eta.to_bits(), s.key.probe)]];
            (s.key, est.estimate(&SeriesCounts::from(s)))
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for (key, r) in results {
        match r {
            Ok(e) => out.push((key, e)),
            Err(lossyphase_core::Error::EmptyCounts) | Err(lossyphase_core::Error::DegenerateLikelihood) => {
                skipped += 1
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, skipped))
}

/// Uncertainty report with the bound of each `(η, probe)` computed once.
pub fn report(estimates: &[(SeriesKey, Estimate)]) -> CliResult<Vec<ReportRow>> {
    Ok(analyze(estimates, cramer_rao)?)
}

fn estimate(e: &EstimateRun) -> CliResult<Vec<PathBuf>> {
    let data = read_dataset(&e.dataset)?;
    if data.records.is_empty() {
        return Err(CliError::input(format!("{} holds no records", e.dataset.display())));
    }
    let opts = LikelihoodOptions {
        include_cc: e.include_cc,
        joint_normalization: e.joint_normalization,
    };
    let (estimates, skipped) = estimate_dataset(&data, &e.imperfections, opts)?;
    if skipped > 0 {
        eprintln!("warning: {skipped} series gave no estimate (no usable counts or a flat likelihood)");
    }
    let rows = report(&estimates)?;

    let est_path = e.out_dir.join(ESTIMATES_FILE);
    write_csv(
        &est_path,
        &ESTIMATE_COLUMNS,
        estimates.iter().map(|(k, est)| {
            vec![
                num(k.eta),
                k.probe.name().to_string(),
                num(k.phi_true),
                k.series_id.to_string(),
                num(est.phi_hat),
                num(est.log_likelihood_max),
                est.n_coincidences.to_string(),
            ]
        }),
    )?;
    let report_path = e.out_dir.join(REPORT_FILE);
    write_csv(
        &report_path,
        &REPORT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                num(r.eta),
                r.probe.name().to_string(),
                num(r.phi_true),
                num(r.mean),
                num(r.sigma),
                num(r.m_bar),
                num(r.sigma_scaled),
                num(r.crb),
            ]
        }),
    )?;
    let mut outputs = vec![est_path, report_path];

    if let Some(bin) = e.hist_bin {
        if !(bin > 0.0 && bin.is_finite()) {
            return Err(CliError::domain(format!("histogram bin width must be positive, got {bin}")));
        }
        let mut hist_rows = Vec::new();
        for r in &rows {
            let phis: Vec<f64> = estimates
                .iter()
                .filter(|(k, _)| (k.eta, k.probe, k.phi_true) == (r.eta, r.probe, r.phi_true))
                .map(|(_, est)| est.phi_hat)
                .collect();
            let h = histogram_covering(&phis, bin)?;
            for (i, &c) in h.counts.iter().enumerate() {
                hist_rows.push(vec![
                    num(r.eta),
                    r.probe.name().to_string(),
                    num(r.phi_true),
                    num(h.edge(i)),
                    num(h.edge(i + 1)),
                    c.to_string(),
                ]);
            }
        }
        let path = e.out_dir.join(HISTOGRAM_FILE);
        write_csv(&path, &HISTOGRAM_COLUMNS, hist_rows)?;
        outputs.push(path);
    }
    Ok(outputs)
}

/// Imperfections and likelihood switches recorded by the simulate run that
/// produced `dataset`, if its manifest sits next to it.
pub fn simulate_settings_for(dataset: &Path) -> CliResult<Option<SimulateConfig>> {
    let dir = dataset.parent().unwrap_or(Path::new("."));
    let path = manifest::in_dir(dir, "simulate");
    if !path.exists() {
        return Ok(None);
    }
    match RunManifest::read(&path)?.run {
        RunConfig::Simulate(s) => Ok(Some(s.config)),
        _ => Ok(None),
    }
}

/// Parses `--hist` values: `bin=0.01` or `0.01`.
pub fn parse_hist(arg: &str) -> CliResult<f64> {
    let raw = arg.strip_prefix("bin=").unwrap_or(arg);
    raw.parse()
        .map_err(|_| CliError::input(format!("invalid --hist value {arg:?}, expected bin=<width>")))
}
