use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;

use evc_core::f0prep::interpolate_unvoiced;
use evc_core::io::{read_f0, read_features, write_atomic, write_json, FeatureSequence};
use evc_core::metrics::{dtw_align, f0_rmse_in, lsd, mcd, pcc, F0Domain};

use crate::error::{CliError, CliResult};
use crate::files::{list_dir, print_json, stem, DEFAULT_SHIFT_MS};
use crate::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Hz,
    Log,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Reference utterances.
    #[arg(long)]
    ref_dir: PathBuf,
    /// Converted utterances, paired with the references by name.
    #[arg(long)]
    conv_dir: PathBuf,
    /// Score the pairs that exist instead of failing on unpaired files.
    #[arg(long)]
    allow_partial: bool,
    /// Write the JSON report here (default: <config paths.reports>/eval.json,
    /// else stdout).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write one CSV row per utterance and a mean row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// MCEP column 0 is a regular coefficient, not energy; include it.
    #[arg(long)]
    no_c0: bool,
    /// Domain of the F0 RMSE.
    #[arg(long, value_enum, default_value_t = DomainArg::Hz)]
    f0_domain: DomainArg,
}

/// Files of one utterance. MCEPs come from `<utt>.mcep.evcf`, else from
/// `<utt>.evcf`; spectra from `<utt>.sp.evcf`; F0 from `<utt>.f0.evcf` or
/// `<utt>.f0.csv`.
#[derive(Debug, Default)]
struct UttFiles {
    mcep: Option<PathBuf>,
    plain: Option<PathBuf>,
    sp: Option<PathBuf>,
    f0: Option<PathBuf>,
}

impl UttFiles {
    fn mcep(&self) -> Option<&PathBuf> {
        self.mcep.as_ref().or(self.plain.as_ref())
    }
}

fn scan(dir: &Path) -> CliResult<BTreeMap<String, UttFiles>> {
    let mut out: BTreeMap<String, UttFiles> = BTreeMap::new();
    for path in list_dir(dir)? {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let key = stem(&path);
        let role = name.strip_prefix(key.as_str()).unwrap_or_default().to_string();
        let u = out.entry(key).or_default();
        let slot = match role.as_str() {
            ".evcf" => &mut u.plain,
            ".mcep.evcf" => &mut u.mcep,
            ".sp.evcf" => &mut u.sp,
            ".f0.evcf" | ".f0.csv" => &mut u.f0,
            _ => continue,
        };
        *slot = Some(path);
    }
    out.retain(|_, u| u.mcep().is_some());
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub utt_id: String,
    pub mcd_db: f64,
    /// Absent when either side lacks spectra.
    pub lsd_db: Option<f64>,
    pub f0_rmse_hz: f64,
    pub pcc: f64,
    pub n_frames_compared: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    utterances: Vec<Row>,
    mean: Row,
    unpaired: Vec<String>,
}

fn interpolated_f0(path: Option<&PathBuf>, utt: &str) -> CliResult<Vec<f64>> {
    let path = path.ok_or_else(|| CliError::Io(format!("{utt}: no F0 file")))?;
    let f0 = read_f0(path, DEFAULT_SHIFT_MS)?;
    Ok(interpolate_unvoiced(&f0)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        .into_values())
}

fn score(utt: &str, r: &UttFiles, c: &UttFiles, args: &Args) -> CliResult<Row> {
    let at = |e: evc_core::metrics::MetricError| CliError::config(format!("{utt}: {e}"));
    let rm: FeatureSequence = read_features(r.mcep().expect("scanned"))?;
    let cm: FeatureSequence = read_features(c.mcep().expect("scanned"))?;
    let rf = interpolated_f0(r.f0.as_ref(), utt)?;
    let cf = interpolated_f0(c.f0.as_ref(), utt)?;
    if rf.len() != rm.n_frames() || cf.len() != cm.n_frames() {
        return Err(CliError::config(format!("ShapeError: {utt}: F0 and MCEP frame counts differ")));
    }
    let path = dtw_align(&rm, &cm).map_err(at)?;
    let lsd_db = match (&r.sp, &c.sp) {
        (Some(a), Some(b)) => {
            let a: FeatureSequence = read_features(a)?;
            let b: FeatureSequence = read_features(b)?;
            Some(lsd(&a, &b, &path).map_err(at)?)
        }
        _ => None,
    };
    let domain = match args.f0_domain {
        DomainArg::Hz => F0Domain::Hz,
        DomainArg::Log => F0Domain::LogHz,
    };
    Ok(Row {
        utt_id: utt.to_string(),
        mcd_db: mcd(&rm, &cm, &path, !args.no_c0).map_err(at)?,
        lsd_db,
        f0_rmse_hz: f0_rmse_in(&rf, &cf, &path, domain).map_err(at)?,
        pcc: pcc(&rf, &cf, &path).map_err(at)?,
        n_frames_compared: path.len(),
    })
}

fn mean_row(rows: &[Row]) -> Row {
    let n = rows.len() as f64;
    let avg = |f: fn(&Row) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let lsd = rows.iter().map(|r| r.lsd_db).collect::<Option<Vec<f64>>>();
    Row {
        utt_id: "mean".into(),
        mcd_db: avg(|r| r.mcd_db),
        lsd_db: lsd.map(|v| v.iter().sum::<f64>() / n),
        f0_rmse_hz: avg(|r| r.f0_rmse_hz),
        pcc: avg(|r| r.pcc),
        n_frames_compared: rows.iter().map(|r| r.n_frames_compared).sum(),
    }
}

fn write_csv(path: &Path, rows: &[Row]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
    w.write_record(["utt_id", "mcd_db", "lsd_db", "f0_rmse_hz", "pcc", "n_frames_compared"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.utt_id.clone(),
            r.mcd_db.to_string(),
            r.lsd_db.map(|v| v.to_string()).unwrap_or_default(),
            r.f0_rmse_hz.to_string(),
            r.pcc.to_string(),
            r.n_frames_compared.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(write_atomic(path, &bytes)?)
}

pub fn run(ctx: &Context, args: Args) -> CliResult<()> {
    let refs = scan(&args.ref_dir)?;
    let convs = scan(&args.conv_dir)?;
    let unpaired: Vec<String> = refs
        .keys()
        .filter(|k| !convs.contains_key(*k))
        .map(|k| format!("{k} (no converted file)"))
        .chain(convs.keys().filter(|k| !refs.contains_key(*k)).map(|k| format!("{k} (no reference)")))
        .collect();
    let pairs: Vec<(&String, &UttFiles, &UttFiles)> =
        refs.iter().filter_map(|(k, r)| convs.get(k).map(|c| (k, r, c))).collect();
    if pairs.is_empty() {
        return Err(CliError::Pairing(format!(
            "PairingError: no utterance appears in both {} and {}",
            args.ref_dir.display(),
            args.conv_dir.display()
        )));
    }
    if !unpaired.is_empty() {
        if !args.allow_partial {
            return Err(CliError::Pairing(format!("PairingError: unpaired utterances: {}", unpaired.join(", "))));
        }
        log::warn!("skipping unpaired utterances: {}", unpaired.join(", "));
    }

    let rows = pairs
        .par_iter()
        .map(|(k, r, c)| score(k, r, c, &args))
        .collect::<CliResult<Vec<_>>>()?;
    let report = Report {
        mean: mean_row(&rows),
        utterances: rows,
        unpaired,
    };
    if let Some(path) = &args.csv {
        let mut all = report.utterances.clone();
        all.push(report.mean.clone());
        write_csv(path, &all)?;
    }
    match args.report.clone().or_else(|| ctx.config.paths.reports.as_ref().map(|d| d.join("eval.json"))) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                crate::files::ensure_dir(dir)?;
            }
            write_json(&path, &report)?;
            print_json(&report.mean)
        }
        None => print_json(&report),
    }
}
