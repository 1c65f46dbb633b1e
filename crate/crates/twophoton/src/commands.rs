//! One function per subcommand. Angles arrive in radians.

use std::f64::consts::SQRT_2;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use twophoton_core::bell::{
    chsh, correlation_closed_form, correlation_via_table, hom_port_probabilities, ChshSettings,
    PsiAngles, SettingPair,
};
use twophoton_core::detection::{
    apply_alpha_confusion, joint_table, reference_table, DetectorModel, JointProbabilityTable,
};
use twophoton_core::montecarlo::{estimate_chsh, EventRecord, SamplerConfig};
use twophoton_core::optimize::{OptimizerOptions, ThresholdOptions};

use crate::envelope::OutputEnvelope;
use crate::events_io::write_events_csv;
use crate::table_io::table_records;
use crate::{parallel, validate};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(twophoton_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{failed} validation check(s) failed")]
    Validation { failed: usize },
}

impl From<twophoton_core::Error> for CommandError {
    fn from(e: twophoton_core::Error) -> Self {
        use twophoton_core::Error::*;
        match e {
            BadEfficiency(_) | BadAlpha(_) | InvalidConfig(_) => Self::Usage(e.to_string()),
            other => Self::Model(other),
        }
    }
}

impl CommandError {
    /// 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CommandResult<T> = Result<T, CommandError>;

fn finite(name: &str, x: f64) -> CommandResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CommandError::Usage(format!(
            "{name} must be finite, got {x}"
        )))
    }
}

fn check_settings(s: &ChshSettings) -> CommandResult<()> {
    for x in s.to_array() {
        finite("setting angle", x)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbsParams {
    pub theta1: f64,
    pub theta2: f64,
    pub eta: f64,
    pub alpha: f64,
}

/// Observed table from the state pipeline.
pub fn probs_table(p: &ProbsParams) -> CommandResult<JointProbabilityTable> {
    finite("theta1", p.theta1)?;
    finite("theta2", p.theta2)?;
    Ok(apply_alpha_confusion(
        &joint_table(p.theta1, p.theta2, p.eta)?,
        p.alpha,
    )?)
}

pub fn probs(p: &ProbsParams) -> CommandResult<OutputEnvelope> {
    let table = probs_table(p)?;
    let closed = apply_alpha_confusion(&reference_table(p.theta1, p.theta2, p.eta)?, p.alpha)?;
    let max_deviation = table
        .iter()
        .map(|(i, j, v)| (v - closed.entry(i, j)).abs())
        .fold(0.0, f64::max);
    let results = json!({
        "table": table_records(&table),
        "closed_form": closed.cells(),
        "max_deviation": max_deviation,
        "total": table.total(),
    });
    Ok(OutputEnvelope::new("probs", p, results)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationParams {
    pub psi1: f64,
    pub psi2: f64,
    pub eta: f64,
    pub alpha: f64,
}

pub fn correlation(p: &CorrelationParams) -> CommandResult<OutputEnvelope> {
    let psi = PsiAngles::new(finite("psi1", p.psi1)?, finite("psi2", p.psi2)?);
    let model = DetectorModel::new(p.alpha, p.eta)?;
    let closed = correlation_closed_form(psi, model);
    let table = correlation_via_table(psi, model)?;
    let results = json!({"closed_form": closed, "table": table, "difference": table - closed});
    Ok(OutputEnvelope::new("correlation", p, results)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshParams {
    pub settings: ChshSettingsRecord,
    pub eta: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshSettingsRecord {
    pub psi1: f64,
    pub psi1_prime: f64,
    pub psi2: f64,
    pub psi2_prime: f64,
}

impl From<ChshSettings> for ChshSettingsRecord {
    fn from(s: ChshSettings) -> Self {
        Self {
            psi1: s.psi1,
            psi1_prime: s.psi1_prime,
            psi2: s.psi2,
            psi2_prime: s.psi2_prime,
        }
    }
}

impl From<ChshSettingsRecord> for ChshSettings {
    fn from(s: ChshSettingsRecord) -> Self {
        ChshSettings::new(s.psi1, s.psi1_prime, s.psi2, s.psi2_prime)
    }
}

pub fn chsh_value(p: &ChshParams) -> CommandResult<OutputEnvelope> {
    let settings = ChshSettings::from(p.settings);
    check_settings(&settings)?;
    let model = DetectorModel::new(p.alpha, p.eta)?;
    let s = chsh(&settings, model);
    let terms: serde_json::Map<_, _> = SettingPair::ALL
        .iter()
        .map(|&pair| {
            (
                pair.label().to_owned(),
                json!(correlation_closed_form(settings.angles(pair), model)),
            )
        })
        .collect();
    let results = json!({"s": s, "margin": s - 2.0, "violates": s > 2.0, "correlations": terms});
    Ok(OutputEnvelope::new("chsh", p, results)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeParams {
    pub eta: f64,
    pub alpha: f64,
    pub starts: usize,
    pub tol: f64,
}

pub fn optimize(p: &OptimizeParams) -> CommandResult<OutputEnvelope> {
    let model = DetectorModel::new(p.alpha, p.eta)?;
    let r = parallel::maximize_chsh(model, &OptimizerOptions::with_starts(p.starts, p.tol), None)?;
    let results = json!({
        "best_value": r.best_value,
        "margin": r.best_value - 2.0,
        "settings": ChshSettingsRecord::from(r.settings),
        "starts_used": r.starts_used,
        "converged": r.converged,
    });
    Ok(OutputEnvelope::new("optimize", p, results)?)
}

/// Published thresholds by distinguishability, for side-by-side reporting.
pub const PUBLISHED_THRESHOLDS: [(f64, f64); 5] = [
    (1.0, 0.91),
    (0.0, 0.926),
    (0.5, 0.92),
    (0.75, 0.92),
    (0.875, 0.91),
];

pub fn published_threshold(alpha: f64) -> Option<f64> {
    PUBLISHED_THRESHOLDS
        .iter()
        .find(|(a, _)| (a - alpha).abs() < 1e-12)
        .map(|&(_, eta)| eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalEtaParams {
    pub alpha: f64,
    pub tol: f64,
    pub starts: usize,
}

pub fn critical_eta(p: &CriticalEtaParams) -> CommandResult<OutputEnvelope> {
    let mut opts = ThresholdOptions {
        tol: p.tol,
        ..ThresholdOptions::default()
    };
    opts.optimizer.starts = p.starts;
    let r = parallel::critical_efficiency(p.alpha, &opts)?;
    let exact = (p.alpha == 1.0).then(|| 4.0 / (3.0 + SQRT_2));
    let results = json!({
        "eta_critical": r.eta_critical,
        "bracket_width": r.bracket_width,
        "evaluations": r.evaluations,
        "settings": ChshSettingsRecord::from(r.settings),
        "exact": exact,
        "published": published_threshold(p.alpha),
    });
    Ok(OutputEnvelope::new("critical-eta", p, results)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomScanParams {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub theta2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomRow {
    pub theta1: f64,
    pub p43: f64,
    pub p53: f64,
    pub p63: f64,
}

fn hom_row(theta1: f64, theta2: f64) -> CommandResult<HomRow> {
    let h = hom_port_probabilities(theta1, theta2)?;
    Ok(HomRow {
        theta1,
        p43: h.split_first,
        p53: h.double_plus_first,
        p63: h.double_minus_first,
    })
}

pub fn hom_rows(p: &HomScanParams) -> CommandResult<Vec<HomRow>> {
    finite("start", p.start)?;
    finite("end", p.end)?;
    finite("theta2", p.theta2)?;
    if p.points < 2 {
        return Err(CommandError::Usage("a scan needs at least 2 points".into()));
    }
    let step = (p.end - p.start) / (p.points - 1) as f64;
    (0..p.points)
        .map(|k| hom_row(p.start + step * k as f64, p.theta2))
        .collect()
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_minimum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    while (b - a).abs() > 1e-12 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    (a + b) / 2.0
}

/// Grid scan of the station-1 bunching cells, plus the grid minimum of the
/// split cell refined between its neighbours.
pub fn hom_scan(p: &HomScanParams) -> CommandResult<OutputEnvelope> {
    let rows = hom_rows(p)?;
    let k = (0..rows.len())
        .min_by(|&a, &b| rows[a].p43.total_cmp(&rows[b].p43))
        .expect("at least 2 rows");
    let lo = rows[k.saturating_sub(1)].theta1;
    let hi = rows[(k + 1).min(rows.len() - 1)].theta1;
    let split =
        |t: f64| hom_port_probabilities(t, p.theta2).map_or(f64::INFINITY, |h| h.split_first);
    let theta_min = golden_minimum(split, lo.min(hi), lo.max(hi));
    let minimum = hom_row(theta_min, p.theta2)?;
    let results = json!({"rows": rows, "grid_minimum": rows[k], "minimum": minimum});
    Ok(OutputEnvelope::new("hom-scan", p, results)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleParams {
    pub seed: u64,
    pub n_per_setting: usize,
    pub eta: f64,
    pub alpha: f64,
    pub settings: ChshSettingsRecord,
}

impl SampleParams {
    pub fn config(&self) -> CommandResult<SamplerConfig> {
        let settings = ChshSettings::from(self.settings);
        check_settings(&settings)?;
        let cfg = SamplerConfig {
            seed: self.seed,
            n_per_setting: self.n_per_setting,
            model: DetectorModel::new(self.alpha, self.eta)?,
            settings,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn sample_events(p: &SampleParams) -> CommandResult<Vec<EventRecord>> {
    Ok(parallel::sample_events(&p.config()?)?)
}

/// Samples, optionally writes the events as CSV, and summarizes the CHSH estimate.
pub fn sample(p: &SampleParams, out: Option<&Path>) -> CommandResult<OutputEnvelope> {
    let cfg = p.config()?;
    let events = parallel::sample_events(&cfg)?;
    if let Some(path) = out {
        write_events_csv(BufWriter::new(File::create(path)?), &events)?;
    }
    let est = estimate_chsh(&events)?;
    let terms: serde_json::Map<_, _> = SettingPair::ALL
        .iter()
        .map(|&pair| {
            let t = est.terms[pair.ordinal()];
            (
                pair.label().to_owned(),
                json!({"mean": t.mean, "stderr": t.stderr, "n": t.n}),
            )
        })
        .collect();
    let results = json!({
        "s": est.s,
        "stderr": est.stderr,
        "exact": chsh(&cfg.settings, cfg.model),
        "events": events.len(),
        "terms": terms,
        "output": out.map(|p| p.display().to_string()),
    });
    Ok(OutputEnvelope::new("sample", p, results)?)
}

/// Runs the self-check suite; fails with [`CommandError::Validation`] after reporting.
pub fn validate() -> CommandResult<(OutputEnvelope, validate::Report)> {
    let report = validate::run()?;
    let envelope = OutputEnvelope::new("validate", json!({}), &report)?;
    Ok((envelope, report))
}
