//! Multistart Nelder–Mead maximization of CHSH and bisection for the critical efficiency.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::bell::{chsh, ChshSettings};
use crate::detection::{check_alpha, DetectorModel};
use crate::error::{Error, Result};

pub const DEFAULT_STARTS: usize = 64;
/// Spread of simplex values at which a local search stops. Vertex coordinates
/// must agree to `√tol`, the resolution of an argument near a smooth extremum.
pub const DEFAULT_SIMPLEX_TOL: f64 = 1e-9;
pub const DEFAULT_ETA_TOL: f64 = 1e-4;
/// Local-realism bound on the CHSH combination.
pub const LOCAL_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub tol: f64,
    pub max_iterations: usize,
    /// Edge length of the initial simplex, radians.
    pub initial_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            starts: DEFAULT_STARTS,
            tol: DEFAULT_SIMPLEX_TOL,
            max_iterations: 20_000,
            initial_step: 0.5,
        }
    }
}

impl OptimizerOptions {
    pub fn with_starts(starts: usize, tol: f64) -> Self {
        Self {
            starts,
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidConfig("at least one start is required"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Outcome of a single local search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMaximum {
    pub settings: ChshSettings,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationResult {
    pub best_value: f64,
    /// Maximizing settings in canonical ranges.
    pub settings: ChshSettings,
    pub starts_used: usize,
    pub converged: bool,
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// First `n` points of the 4-d Halton sequence (bases 2, 3, 5, 7), skipping the origin,
/// scaled to `[0, 2π)⁴`.
pub fn start_points(n: usize) -> Vec<[f64; 4]> {
    (1..=n as u64)
        .map(|i| [2, 3, 5, 7].map(|base| TAU * halton(i, base)))
        .collect()
}

/// Result of a Nelder–Mead minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexMinimum {
    pub x: [f64; 4],
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn lerp(from: &[f64; 4], to: &[f64; 4], t: f64) -> [f64; 4] {
    core::array::from_fn(|k| from[k] + t * (to[k] - from[k]))
}

/// Largest deviation of any vertex from the best one: `(in value, in any coordinate)`.
fn spread(simplex: &[([f64; 4], f64); 5]) -> (f64, f64) {
    let (x0, f0) = &simplex[0];
    simplex[1..]
        .iter()
        .fold((0.0f64, 0.0f64), |(fs, xs), (x, f)| {
            let dx = x
                .iter()
                .zip(x0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (fs.max((f - f0).abs()), xs.max(dx))
        })
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction ½, shrink ½) in four dimensions.
///
/// Converged once vertex values agree within `tol` and coordinates within `√tol`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: [f64; 4],
    step: f64,
    tol: f64,
    max_iterations: usize,
) -> SimplexMinimum
where
    F: FnMut(&[f64; 4]) -> f64,
{
    let mut simplex: [([f64; 4], f64); 5] = core::array::from_fn(|i| {
        let mut x = x0;
        if i > 0 {
            x[i - 1] += step;
        }
        (x, f(&x))
    });
    let x_tol = libm::sqrt(tol);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_spread, x_spread) = spread(&simplex);
        if f_spread <= tol && x_spread <= x_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: [f64; 4] =
            core::array::from_fn(|k| simplex[..4].iter().map(|(x, _)| x[k]).sum::<f64>() / 4.0);
        let (worst, f_worst) = simplex[4];
        let reflected = lerp(&centroid, &worst, -1.0);
        let f_reflected = f(&reflected);
        if f_reflected < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let f_expanded = f(&expanded);
            simplex[4] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[3].1 {
            simplex[4] = (reflected, f_reflected);
            continue;
        }
        let (contracted, accept_below) = if f_reflected < f_worst {
            (lerp(&centroid, &reflected, 0.5), f_reflected)
        } else {
            (lerp(&centroid, &worst, 0.5), f_worst)
        };
        let f_contracted = f(&contracted);
        if f_contracted <= accept_below {
            simplex[4] = (contracted, f_contracted);
            continue;
        }
        let best = simplex[0].0;
        for vertex in simplex[1..].iter_mut() {
            let x = lerp(&best, &vertex.0, 0.5);
            *vertex = (x, f(&x));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    SimplexMinimum {
        x: simplex[0].0,
        value: simplex[0].1,
        converged,
        iterations,
    }
}

/// One local ascent of `S` from `start`.
pub fn local_maximum(
    model: DetectorModel,
    start: [f64; 4],
    opts: &OptimizerOptions,
) -> LocalMaximum {
    let found = nelder_mead(
        |x| -chsh(&ChshSettings::from_array(*x), model),
        start,
        opts.initial_step,
        opts.tol,
        opts.max_iterations,
    );
    LocalMaximum {
        settings: ChshSettings::from_array(found.x),
        value: -found.value,
        converged: found.converged,
        iterations: found.iterations,
    }
}

/// Best converged local maximum; ties go to the earliest start.
pub fn best_of<I>(model: DetectorModel, results: I) -> Result<OptimizationResult>
where
    I: IntoIterator<Item = LocalMaximum>,
{
    let mut starts_used = 0;
    let mut best: Option<LocalMaximum> = None;
    for r in results {
        starts_used += 1;
        if r.converged && best.is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let best = best.ok_or(Error::NoConvergence)?;
    let settings = best.settings.canonical();
    Ok(OptimizationResult {
        best_value: chsh(&settings, model),
        settings,
        starts_used,
        converged: true,
    })
}

/// Maximizes `S` over the four analyzer angles from `starts` Halton points.
pub fn maximize_chsh(model: DetectorModel, starts: usize, tol: f64) -> Result<OptimizationResult> {
    maximize_chsh_with(model, &OptimizerOptions::with_starts(starts, tol), None)
}

/// Like [`maximize_chsh`], with an optional warm start searched before the Halton points.
pub fn maximize_chsh_with(
    model: DetectorModel,
    opts: &OptimizerOptions,
    warm_start: Option<ChshSettings>,
) -> Result<OptimizationResult> {
    opts.validate()?;
    DetectorModel::new(model.alpha, model.eta)?;
    let starts = warm_start
        .map(|s| s.to_array())
        .into_iter()
        .chain(start_points(opts.starts));
    best_of(model, starts.map(|x| local_maximum(model, x, opts)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Final bracket width in `η`.
    pub tol: f64,
    pub lower: f64,
    pub upper: f64,
    pub optimizer: OptimizerOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_ETA_TOL,
            lower: 0.5,
            upper: 1.0,
            optimizer: OptimizerOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    pub alpha: f64,
    pub eta_critical: f64,
    /// Maximizing settings at the upper end of the final bracket.
    pub settings: ChshSettings,
    pub bracket_width: f64,
    pub evaluations: usize,
}

/// Smallest efficiency at which the maximal `S` exceeds 2, by bisection.
pub fn critical_efficiency(alpha: f64, tol: f64) -> Result<ThresholdResult> {
    let opts = ThresholdOptions {
        tol,
        ..ThresholdOptions::default()
    };
    critical_efficiency_with(alpha, &opts, |model, warm| {
        maximize_chsh_with(model, &opts.optimizer, warm)
    })
}

/// Bisection driver with a caller-supplied inner maximizer.
///
/// The maximizer receives the previous step's best settings as a warm start.
pub fn critical_efficiency_with<F>(
    alpha: f64,
    opts: &ThresholdOptions,
    mut maximize: F,
) -> Result<ThresholdResult>
where
    F: FnMut(DetectorModel, Option<ChshSettings>) -> Result<OptimizationResult>,
{
    check_alpha(alpha)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidConfig("tolerance must be positive"));
    }
    if !(opts.lower > 0.0 && opts.lower < opts.upper && opts.upper <= 1.0) {
        return Err(Error::InvalidConfig(
            "efficiency bracket must satisfy 0 < lower < upper <= 1",
        ));
    }
    let (mut lo, mut hi) = (opts.lower, opts.upper);
    let top = maximize(DetectorModel::new(alpha, hi)?, None)?;
    if top.best_value <= LOCAL_BOUND {
        return Err(Error::NoViolation {
            max_chsh: top.best_value,
        });
    }
    let mut evaluations = 1;
    let mut warm = top.settings;
    let bottom = maximize(DetectorModel::new(alpha, lo)?, Some(warm))?;
    evaluations += 1;
    if bottom.best_value > LOCAL_BOUND {
        return Err(Error::InvalidConfig(
            "lower end of the bracket already violates",
        ));
    }
    let mut at_threshold = top.settings;
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        let r = maximize(DetectorModel::new(alpha, mid)?, Some(warm))?;
        evaluations += 1;
        warm = r.settings;
        if r.best_value > LOCAL_BOUND {
            hi = mid;
            at_threshold = r.settings;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        alpha,
        eta_critical: 0.5 * (lo + hi),
        settings: at_threshold,
        bracket_width: hi - lo,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::SQRT_2;

    // Maxima from an independent BFGS multistart (300 random starts), frozen.
    const MAX_ALPHA_0: f64 = 2.3371173070873845;
    const MAX_ALPHA_HALF: f64 = 2.3637430609197594;

    fn model(alpha: f64, eta: f64) -> DetectorModel {
        DetectorModel::new(alpha, eta).unwrap()
    }

    #[test]
    fn halton_prefix() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert_abs_diff_eq!(halton(5, 3), 7.0 / 9.0, epsilon = 1e-15);
        let pts = start_points(64);
        assert_eq!(pts.len(), 64);
        assert!(pts.iter().flatten().all(|&v| (0.0..TAU).contains(&v)));
    }

    #[test]
    fn nelder_mead_on_quadratic() {
        let r = nelder_mead(
            |x| {
                (x[0] - 1.0).powi(2)
                    + 2.0 * (x[1] + 0.5).powi(2)
                    + x[2].powi(2)
                    + (x[3] - 3.0).powi(2)
            },
            [0.0; 4],
            0.5,
            1e-14,
            10_000,
        );
        assert!(r.converged);
        for (got, want) in r.x.iter().zip([1.0, -0.5, 0.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-6);
        }
    }

    #[test]
    fn maxima_at_full_efficiency() {
        let r = maximize_chsh(DetectorModel::IDEAL, 64, 1e-9).unwrap();
        assert_abs_diff_eq!(r.best_value, 1.0 + SQRT_2, epsilon = 1e-6);
        assert_eq!(r.starts_used, 64);
        let r = maximize_chsh(model(0.0, 1.0), 64, 1e-9).unwrap();
        assert_abs_diff_eq!(r.best_value, MAX_ALPHA_0, epsilon = 1e-9);
        let r = maximize_chsh(model(0.5, 1.0), 64, 1e-9).unwrap();
        assert_abs_diff_eq!(r.best_value, MAX_ALPHA_HALF, epsilon = 1e-9);
    }

    #[test]
    fn reported_settings_reproduce_value() {
        let m = model(0.2, 0.93);
        let r = maximize_chsh(m, 16, 1e-9).unwrap();
        assert_eq!(r.best_value, chsh(&r.settings, m));
        assert_eq!(r.settings, r.settings.canonical());
    }

    #[test]
    fn warm_start_is_counted() {
        let r = maximize_chsh_with(
            model(1.0, 1.0),
            &OptimizerOptions::with_starts(4, 1e-9),
            Some(ChshSettings::standard()),
        )
        .unwrap();
        assert_eq!(r.starts_used, 5);
        assert_abs_diff_eq!(r.best_value, 1.0 + SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn no_convergence_is_reported() {
        let opts = OptimizerOptions {
            max_iterations: 3,
            ..OptimizerOptions::with_starts(2, 1e-12)
        };
        assert_eq!(
            maximize_chsh_with(DetectorModel::IDEAL, &opts, None),
            Err(Error::NoConvergence)
        );
        assert!(maximize_chsh(DetectorModel::IDEAL, 0, 1e-9).is_err());
        assert!(maximize_chsh(DetectorModel::IDEAL, 4, 0.0).is_err());
    }

    #[test]
    fn critical_efficiency_full_distinguishability() {
        let r = critical_efficiency(1.0, 1e-5).unwrap();
        assert_abs_diff_eq!(r.eta_critical, 4.0 / (3.0 + SQRT_2), epsilon = 1e-5);
        assert!(r.bracket_width <= 1e-5);
    }

    #[test]
    fn critical_efficiency_matches_threshold_of_frozen_maximum() {
        // max S(η) = η²·M + 2(1−η)² crosses 2 at η = 4/(M+2)
        let r = critical_efficiency(0.0, 1e-5).unwrap();
        assert_abs_diff_eq!(r.eta_critical, 4.0 / (MAX_ALPHA_0 + 2.0), epsilon = 1e-5);
    }

    #[test]
    fn critical_efficiency_rejects_bad_input() {
        assert_eq!(critical_efficiency(1.5, 1e-4), Err(Error::BadAlpha(1.5)));
        assert!(critical_efficiency(0.5, 0.0).is_err());
        let opts = ThresholdOptions::default();
        let err = critical_efficiency_with(1.0, &opts, |m, _| {
            Ok(OptimizationResult {
                best_value: 1.9,
                settings: ChshSettings::standard(),
                starts_used: 1,
                converged: m.eta > 0.0,
            })
        });
        assert_eq!(err, Err(Error::NoViolation { max_chsh: 1.9 }));
    }
}
