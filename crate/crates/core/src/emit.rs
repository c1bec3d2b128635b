//! CSV and JSON emission of campaign results.
//!
//! Profile CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `gap` | grid value in the campaign's units |
//! | `mean_regret` | Monte Carlo mean regret |
//! | `se` | standard error of `mean_regret` |
//! | `q025` `q25` `q50` `q75` `q975` | regret quantiles |
//! | `mean_tau` | mean stopping time (diffusion time) |
//! | `misid_rate` | fraction implementing the worse arm |
//! | `capped_fraction` | fraction stopped by the period cap |
//!
//! Floats are written as `{:.16e}` (17 significant digits, `.` decimal point).
//! The closed-form overlay goes to a sibling `<stem>.reference.csv` with
//! columns `gap, closed_form, v_star, delta_star`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::campaign::{CampaignMode, CampaignSpec, ReferenceOverlay, RegretProfile};
use crate::error::{Result, WaldError};
use crate::summary::RegretSummary;

pub const PROFILE_COLUMNS: [&str; 11] = [
    "gap",
    "mean_regret",
    "se",
    "q025",
    "q25",
    "q50",
    "q75",
    "q975",
    "mean_tau",
    "misid_rate",
    "capped_fraction",
];

pub const REFERENCE_COLUMNS: [&str; 4] = ["gap", "closed_form", "v_star", "delta_star"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub version: String,
    pub spec: Value,
}

impl Metadata {
    pub fn new(seed: u64, spec: Value) -> Self {
        Self {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
        }
    }

    pub fn for_campaign(spec: &CampaignSpec) -> Self {
        Self::new(spec.master_seed, spec_echo(spec))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub metadata: Metadata,
    pub rows: Vec<ProfileJsonRow>,
    pub reference: ReferenceOverlay,
}

/// JSON row; field names match the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileJsonRow {
    pub gap: f64,
    pub mean_regret: f64,
    pub se: f64,
    pub q025: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q975: f64,
    pub mean_tau: f64,
    pub misid_rate: f64,
    pub capped_fraction: f64,
}

impl ProfileJsonRow {
    pub fn new(gap: f64, s: &RegretSummary) -> Self {
        Self {
            gap,
            mean_regret: s.mean_regret,
            se: s.std_error,
            q025: s.quantiles.q025,
            q25: s.quantiles.q25,
            q50: s.quantiles.q50,
            q75: s.quantiles.q75,
            q975: s.quantiles.q975,
            mean_tau: s.mean_tau,
            misid_rate: s.misid_rate,
            capped_fraction: s.capped_fraction,
        }
    }

    fn values(&self) -> [f64; 11] {
        [
            self.gap,
            self.mean_regret,
            self.se,
            self.q025,
            self.q25,
            self.q50,
            self.q75,
            self.q975,
            self.mean_tau,
            self.misid_rate,
            self.capped_fraction,
        ]
    }
}

/// Plain-data echo of a campaign for the metadata block.
pub fn spec_echo(spec: &CampaignSpec) -> Value {
    let mode = match &spec.mode {
        CampaignMode::Diffusion {
            params,
            gamma,
            dt,
            horizon,
            crossing,
        } => json!({
            "kind": "diffusion",
            "params": params,
            "gamma": gamma,
            "dt": dt,
            "horizon": horizon,
            "crossing": crossing,
        }),
        CampaignMode::Discrete { config, family } => json!({
            "kind": "discrete",
            "family": family,
            "n": config.n,
            "c": config.c,
            "horizon": config.horizon,
            "gamma": config.gamma,
            "variance": config.variance,
            "batch_size": config.batch_size,
            "max_periods": config.max_periods,
            "influence": config.influence.is_some(),
        }),
    };
    json!({
        "mode": mode,
        "grid": spec.grid,
        "units": spec.units,
        "reps": spec.reps,
        "master_seed": spec.master_seed,
        "seeds": spec.seeds,
    })
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> WaldError {
    WaldError::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    }
}

/// Writes a header plus rows of floats.
pub fn write_csv_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_f64(x))).map_err(csv_error)?;
    }
    w.flush().map_err(|e| WaldError::Io {
        path: "<csv buffer>".into(),
        message: e.to_string(),
    })
}

pub fn profile_csv(profile: &RegretProfile) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let rows = profile
        .rows
        .iter()
        .map(|r| ProfileJsonRow::new(r.gap, &r.summary).values().to_vec());
    write_csv_table(&mut buf, &PROFILE_COLUMNS, rows)?;
    Ok(buf)
}

/// Summaries keyed by a text label, with the profile columns after `gap` and
/// a constant `v_star` column.
pub fn labeled_summary_csv(rows: &[(String, RegretSummary)], v_star: f64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["label"];
        header.extend(&PROFILE_COLUMNS[1..]);
        header.push("v_star");
        w.write_record(&header).map_err(csv_error)?;
        for (label, s) in rows {
            let mut record = vec![label.clone()];
            record.extend(ProfileJsonRow::new(0.0, s).values()[1..].iter().map(|&x| fmt_f64(x)));
            record.push(fmt_f64(v_star));
            w.write_record(&record).map_err(csv_error)?;
        }
        w.flush().map_err(|e| WaldError::Io {
            path: "<csv buffer>".into(),
            message: e.to_string(),
        })?;
    }
    Ok(buf)
}

pub fn reference_csv(profile: &RegretProfile) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let r = &profile.reference;
    let rows = profile
        .rows
        .iter()
        .zip(&r.closed_form)
        .map(|(row, cf)| vec![row.gap, cf.unwrap_or(f64::NAN), r.v_star, r.delta_star]);
    write_csv_table(&mut buf, &REFERENCE_COLUMNS, rows)?;
    Ok(buf)
}

pub fn profile_document(profile: &RegretProfile, metadata: &Metadata) -> ProfileDocument {
    ProfileDocument {
        metadata: metadata.clone(),
        rows: profile
            .rows
            .iter()
            .map(|r| ProfileJsonRow::new(r.gap, &r.summary))
            .collect(),
        reference: profile.reference.clone(),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(|e| WaldError::Io {
        path: "<json buffer>".into(),
        message: e.to_string(),
    })?;
    buf.push(b'\n');
    Ok(buf)
}

/// Sibling path for the reference overlay: `out.csv` becomes `out.reference.csv`.
pub fn reference_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.reference.csv"))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| WaldError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, bytes).map_err(|e| WaldError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes a profile to `path`. CSV output also writes the reference sibling.
pub fn emit_profile(profile: &RegretProfile, metadata: &Metadata, format: Format, path: &Path) -> Result<()> {
    match format {
        Format::Csv => {
            write_file(path, &profile_csv(profile)?)?;
            write_file(&reference_path(path), &reference_csv(profile)?)
        }
        Format::Json => write_file(path, &to_json(&profile_document(profile, metadata))?),
    }
}
