//! Rayon front ends whose results match the sequential core routines exactly.

use rayon::prelude::*;
use twophoton_core::bell::{ChshSettings, SettingPair};
use twophoton_core::detection::DetectorModel;
use twophoton_core::montecarlo::{EventRecord, SamplerConfig, SettingSampler};
use twophoton_core::optimize::{
    best_of, critical_efficiency_with, local_maximum, start_points, OptimizationResult,
    OptimizerOptions, ThresholdOptions, ThresholdResult,
};
use twophoton_core::Result;

pub const THREADS_ENV: &str = "TWOPHOTON_THREADS";

/// A pool of `threads` workers, or rayon's default size when `None`.
pub fn thread_pool(
    threads: Option<usize>,
) -> std::result::Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
}

/// Same events, in the same order, as the sequential sampler.
pub fn sample_events(cfg: &SamplerConfig) -> Result<Vec<EventRecord>> {
    cfg.validate()?;
    let samplers = SettingPair::ALL.map(|pair| SettingSampler::new(cfg, pair));
    let samplers = samplers.into_iter().collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..samplers.len())
        .flat_map(|s| (0..cfg.chunk_count()).map(move |k| (s, k)))
        .collect();
    let chunks: Vec<Vec<EventRecord>> = jobs
        .par_iter()
        .map(|&(s, k)| samplers[s].chunk(k))
        .collect();
    Ok(chunks.concat())
}

/// Multistart maximization with the local searches spread across threads.
pub fn maximize_chsh(
    model: DetectorModel,
    opts: &OptimizerOptions,
    warm_start: Option<ChshSettings>,
) -> Result<OptimizationResult> {
    opts.validate()?;
    DetectorModel::new(model.alpha, model.eta)?;
    let starts: Vec<[f64; 4]> = warm_start
        .map(|s| s.to_array())
        .into_iter()
        .chain(start_points(opts.starts))
        .collect();
    let found: Vec<_> = starts
        .par_iter()
        .map(|&x| local_maximum(model, x, opts))
        .collect();
    best_of(model, found)
}

pub fn critical_efficiency(alpha: f64, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    critical_efficiency_with(alpha, opts, |model, warm| {
        maximize_chsh(model, &opts.optimizer, warm)
    })
}
