//! CSV schemas. Column names and order are part of the output contract.

use std::path::Path;

use lossyphase_core::detection::{Label, LabelCounts, Setting};
use lossyphase_core::montecarlo::{EventDataset, EventRecord};
use lossyphase_core::prep::ProbeKind;

use crate::error::{read_error, write_error, CliError, CliResult};

pub const BOUNDS_COLUMNS: [&str; 8] = [
    "eta",
    "dphi_optimal",
    "dphi_noon",
    "dphi_sil",
    "x0",
    "x1",
    "x2",
    "prep_success_p",
];

pub const FRINGE_COLUMNS: [&str; 8] = ["phi", "setting", "AA", "AB", "BB", "AC", "BC", "CC"];

pub const DATASET_COLUMNS: [&str; 12] = [
    "eta",
    "probe",
    "phi_true",
    "setting",
    "series_id",
    "n_AA",
    "n_AB",
    "n_BB",
    "n_AC",
    "n_BC",
    "n_CC",
    "seed_used",
];

pub const ESTIMATE_COLUMNS: [&str; 7] = ["eta", "probe", "phi_true", "series_id", "phi_hat", "loglik", "n_coinc"];

pub const REPORT_COLUMNS: [&str; 8] = ["eta", "probe", "phi_true", "mean", "sigma", "m_bar", "sigma_scaled", "crb"];

pub const HISTOGRAM_COLUMNS: [&str; 6] = ["eta", "probe", "phi_true", "bin_lo", "bin_hi", "count"];

/// Writes a header and rows with LF line endings.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| write_error(dir, e))?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| write_error(path, e))?;
    w.write_record(header).map_err(|e| write_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| write_error(path, e))?;
    }
    w.flush().map_err(|e| write_error(path, e))
}

pub fn dataset_row(r: &EventRecord) -> Vec<String> {
    let mut row = vec![
        crate::format::num(r.eta),
        r.probe.name().to_string(),
        crate::format::num(r.phi_true),
        r.setting.name().to_string(),
        r.series_id.to_string(),
    ];
    row.extend(Label::ALL.iter().map(|&l| r.counts[l].to_string()));
    row.push(r.seed_used.to_string());
    row
}

pub fn write_dataset(path: &Path, data: &EventDataset) -> CliResult<()> {
    write_csv(path, &DATASET_COLUMNS, data.records.iter().map(dataset_row))
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, row: u64, col: usize) -> CliResult<T> {
    let raw = record.get(col).unwrap_or("");
    raw.parse().map_err(|_| {
        CliError::input(format!(
            "row {row}, column {}: cannot parse {raw:?}",
            DATASET_COLUMNS[col]
        ))
    })
}

/// Reads a dataset CSV, rejecting any header that differs from the schema.
pub fn read_dataset(path: &Path) -> CliResult<EventDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| read_error(path, e))?;
    let header = rdr.headers().map_err(|e| read_error(path, e))?.clone();
    for (i, expected) in DATASET_COLUMNS.iter().enumerate() {
        match header.get(i) {
            Some(found) if found == *expected => {}
            Some(found) => {
                return Err(CliError::input(format!(
                    "schema mismatch in column {}: expected {expected}, found {found}",
                    i + 1
                )))
            }
            None => return Err(CliError::input(format!("schema mismatch: missing column {expected}"))),
        }
    }
    if header.len() > DATASET_COLUMNS.len() {
        return Err(CliError::input(format!(
            "schema mismatch: unexpected column {}",
            &header[DATASET_COLUMNS.len()]
        )));
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i as u64 + 2;
        let rec = rec.map_err(|e| CliError::input(format!("{}: row {row}: {e}", path.display())))?;
        let probe_raw = rec.get(1).unwrap_or("");
        let probe = ProbeKind::parse(probe_raw)
            .ok_or_else(|| CliError::input(format!("row {row}, column probe: unknown probe {probe_raw:?}")))?;
        let setting_raw = rec.get(3).unwrap_or("");
        let setting = Setting::parse(setting_raw)
            .ok_or_else(|| CliError::input(format!("row {row}, column setting: unknown setting {setting_raw:?}")))?;
        let mut counts = LabelCounts::default();
        for (k, l) in Label::ALL.into_iter().enumerate() {
            counts[l] = field(&rec, row, 5 + k)?;
        }
        records.push(EventRecord {
            eta: field(&rec, row, 0)?,
            probe,
            phi_true: field(&rec, row, 2)?,
            setting,
            series_id: field(&rec, row, 4)?,
            counts,
            seed_used: field(&rec, row, 11)?,
        });
    }
    Ok(EventDataset { records })
}
