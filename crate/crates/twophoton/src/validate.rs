//! Self-check suite behind the `validate` subcommand.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2, TAU};

use serde::Serialize;
use twophoton_core::bell::{
    chsh, correlation_closed_form, correlation_via_table, hom_port_probabilities, ChshSettings,
    PsiAngles,
};
use twophoton_core::detection::{
    apply_alpha_confusion, joint_table, reference_table, DetectorModel,
};
use twophoton_core::fock::Station;
use twophoton_core::fock::{ModeId, Port};
use twophoton_core::montecarlo::{self, SamplerConfig};
use twophoton_core::optics::{
    apply, beamsplitter_5050, build_experiment_state, initial_state, loss_channel,
    polarizer_rotation, ExperimentConfig,
};
use twophoton_core::optimize::{halton, maximize_chsh};
use twophoton_core::Result;

use crate::envelope::OutputEnvelope;
use crate::parallel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation, or 0 for pass/fail checks.
    pub deviation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// Ideal final state at `θ₁ = π/8, θ₂ = 0`, as a sorted ket list.
    pub sample_state: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const POINTS: u64 = 200;

/// Quasi-random `(θ₁, θ₂, η, α)` tuples from a Halton sequence.
fn sample_points() -> impl Iterator<Item = (f64, f64, f64, f64)> {
    (1..=POINTS).map(|k| {
        (
            TAU * halton(k, 2) - PI,
            TAU * halton(k, 3) - PI,
            0.05 + 0.95 * halton(k, 5),
            halton(k, 7),
        )
    })
}

fn bound(name: &'static str, tolerance: f64, deviations: impl Iterator<Item = f64>) -> Check {
    let deviation = deviations.fold(0.0, f64::max);
    Check {
        name,
        passed: deviation <= tolerance,
        deviation,
        tolerance,
    }
}

fn flag(name: &'static str, passed: bool) -> Check {
    Check {
        name,
        passed,
        deviation: 0.0,
        tolerance: 0.0,
    }
}

pub fn run() -> Result<Report> {
    let mut checks = Vec::new();
    let points: Vec<_> = sample_points().collect();

    let mut norms = Vec::new();
    for &(t1, t2, eta, _) in &points {
        norms.push(
            (build_experiment_state(&ExperimentConfig::lossy(t1, t2, eta))?.norm() - 1.0).abs(),
        );
    }
    checks.push(bound("state normalization", 1e-12, norms.into_iter()));

    let mut unitarity = vec![beamsplitter_5050().unitarity_deviation()];
    for &(t1, _, eta, _) in &points {
        unitarity.push(polarizer_rotation(Station::One, t1).unitarity_deviation());
        let detected = ModeId::Detected(Station::Two, Port::Perp);
        unitarity.push(
            loss_channel(detected, eta, ModeId::Lost(Station::Two, Port::Perp))?
                .unitarity_deviation(),
        );
    }
    checks.push(bound("transform unitarity", 1e-12, unitarity.into_iter()));

    let mid = apply(&beamsplitter_5050(), &initial_state())?;
    let mut commutation = Vec::new();
    for &(t1, t2, _, _) in &points {
        let (p1, p2) = (
            polarizer_rotation(Station::One, t1),
            polarizer_rotation(Station::Two, t2),
        );
        let a = apply(&p2, &apply(&p1, &mid)?)?;
        let b = apply(&p1, &apply(&p2, &mid)?)?;
        commutation.extend(a.iter().map(|(k, amp)| (b.amplitude(k) - amp).norm()));
    }
    checks.push(bound(
        "polarizer order independence",
        1e-12,
        commutation.into_iter(),
    ));

    let mut totals = Vec::new();
    let mut lost = Vec::new();
    let mut cancellation = Vec::new();
    let mut marginals = Vec::new();
    let mut closed_tables = Vec::new();
    for &(t1, t2, eta, alpha) in &points {
        let raw = joint_table(t1, t2, eta)?;
        let t = apply_alpha_confusion(&raw, alpha)?;
        totals.push((t.total() - 1.0).abs());
        lost.push((t.entry(3, 3) - (1.0 - eta).powi(2)).abs());
        cancellation.push((t.entry(1, 3) - t.entry(2, 3)).abs());
        cancellation.push((t.entry(3, 1) - t.entry(3, 2)).abs());
        for union in [[1, 6], [2, 5]] {
            let rows = |tab: &twophoton_core::detection::JointProbabilityTable| -> f64 {
                union
                    .iter()
                    .flat_map(|&i| (1..=6).map(move |j| tab.entry(i, j)))
                    .sum()
            };
            marginals.push((rows(&t) - rows(&raw)).abs());
        }
        let reference = reference_table(t1, t2, eta)?;
        closed_tables.extend(
            raw.iter()
                .map(|(i, j, p)| (p - reference.entry(i, j)).abs()),
        );
    }
    checks.push(bound("table sums to one", 1e-12, totals.into_iter()));
    checks.push(bound("both photons lost", 1e-12, lost.into_iter()));
    checks.push(bound(
        "one-sided loss cancellation",
        1e-12,
        cancellation.into_iter(),
    ));
    checks.push(bound(
        "confusion preserves marginals",
        1e-12,
        marginals.into_iter(),
    ));
    checks.push(bound(
        "tables match closed forms",
        1e-12,
        closed_tables.into_iter(),
    ));

    let mut routes = Vec::new();
    let mut scaling = Vec::new();
    let mut bounds = Vec::new();
    let mut periodic = Vec::new();
    for &(p1, p2, eta, alpha) in &points {
        let psi = PsiAngles::new(p1, p2);
        let model = DetectorModel::new(alpha, eta)?;
        let closed = correlation_closed_form(psi, model);
        routes.push((closed - correlation_via_table(psi, model)?).abs());
        let ideal = correlation_via_table(psi, DetectorModel::new(alpha, 1.0)?)?;
        scaling.push(
            (correlation_via_table(psi, model)? - (eta * eta * ideal + (1.0 - eta).powi(2))).abs(),
        );
        bounds.push((closed.abs() - 1.0).max(0.0));
        periodic.push(
            (correlation_closed_form(PsiAngles::new(p1 + TAU, p2 - TAU), model) - closed).abs(),
        );
    }
    checks.push(bound(
        "closed form matches table correlation",
        1e-10,
        routes.into_iter(),
    ));
    checks.push(bound(
        "efficiency enters as eta squared",
        1e-10,
        scaling.into_iter(),
    ));
    checks.push(bound(
        "correlation within [-1, 1]",
        1e-12,
        bounds.into_iter(),
    ));
    checks.push(bound(
        "correlation 2pi periodic",
        1e-12,
        periodic.into_iter(),
    ));

    let tsirelson = (1..=POINTS).map(|k| {
        let s = ChshSettings::new(
            TAU * halton(k, 2),
            TAU * halton(k, 3),
            TAU * halton(k, 5),
            TAU * halton(k, 7),
        );
        (chsh(&s, DetectorModel::IDEAL) - 2.0 * SQRT_2).max(0.0)
    });
    checks.push(bound("CHSH below 2 sqrt 2", 1e-12, tsirelson));

    let hom = hom_port_probabilities(FRAC_PI_4, 0.3)?;
    checks.push(bound(
        "single-port bunching at pi/4",
        1e-12,
        [
            hom.split_first,
            (hom.double_plus_first - 0.125).abs(),
            (hom.double_minus_first - 0.125).abs(),
        ]
        .into_iter(),
    ));

    let cfg = SamplerConfig {
        seed: 1,
        n_per_setting: 5000,
        model: DetectorModel::new(0.5, 0.9)?,
        settings: ChshSettings::standard(),
    };
    let first = montecarlo::sample_events(&cfg)?;
    let second = montecarlo::sample_events(&cfg)?;
    checks.push(flag(
        "sampler determinism",
        first == second && parallel::sample_events(&cfg)? == first,
    ));

    let estimate = montecarlo::estimate_chsh(&first)?;
    let envelope = OutputEnvelope::new(
        "validate",
        cfg.seed,
        serde_json::json!({"s": estimate.s, "n": first.len()}),
    );
    let reparsed = envelope
        .as_ref()
        .ok()
        .and_then(|e| OutputEnvelope::from_json(&e.to_json()).ok());
    checks.push(flag(
        "envelope round trip",
        envelope.is_ok() && reparsed.as_ref() == envelope.as_ref().ok(),
    ));

    let best = maximize_chsh(DetectorModel::IDEAL, 16, 1e-9)?;
    checks.push(bound(
        "optimizer reaches 1 + sqrt 2",
        1e-6,
        [(best.best_value - 1.0 - SQRT_2).abs()].into_iter(),
    ));

    let sample_state = build_experiment_state(&ExperimentConfig::ideal(PI / 8.0, 0.0))?.to_string();
    Ok(Report {
        sample_state,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correct_build_passes_every_check() {
        let report = run().unwrap();
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:?}");
        assert!(report.checks.len() >= 15);
        assert!(report.sample_state.contains("|c∥,d∥⟩"));
    }
}
