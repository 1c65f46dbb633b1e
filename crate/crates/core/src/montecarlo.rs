//! Seeded event sampling from the joint tables, with per-event click confusion.
//!
//! # Randomness contract
//!
//! Events for one setting pair are produced in chunks of [`CHUNK_SIZE`]. Chunk
//! `k` of pair `p` draws from a ChaCha8 generator whose 256-bit key holds the
//! user seed (little-endian, bytes 0..8) and the pair ordinal (bytes 8..16,
//! remaining bytes zero), positioned on stream `k`. Chunks therefore do not
//! depend on each other and can be generated in any order or in parallel
//! with identical results.
//!
//! Within a chunk each event consumes one uniform `f64` for the outcome cell
//! (inverse CDF over the 36 cells in lexicographic `(i, j)` order) and one
//! more per double-click outcome to decide confusion.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bell::{ChshSettings, PsiAngles, SettingPair};
use crate::detection::{joint_table, DetectorModel, StationOutcome, ValueAssignment};
use crate::error::{Error, Result};
use crate::fock::Station;

pub const CHUNK_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_per_setting: usize,
    pub model: DetectorModel,
    pub settings: ChshSettings,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_setting == 0 {
            return Err(Error::InvalidConfig("n_per_setting must be at least 1"));
        }
        DetectorModel::new(self.model.alpha, self.model.eta)?;
        Ok(())
    }

    pub fn chunk_count(&self) -> usize {
        self.n_per_setting.div_ceil(CHUNK_SIZE)
    }
}

/// One sampled detection event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub index: u64,
    pub setting: SettingPair,
    pub psi1: f64,
    pub psi2: f64,
    pub raw: (StationOutcome, StationOutcome),
    pub observed: (StationOutcome, StationOutcome),
    pub a: i8,
    pub b: i8,
}

impl EventRecord {
    pub fn product(&self) -> i8 {
        self.a * self.b
    }

    /// Observed outcomes differ from raw ones only by double → single relabeling,
    /// and the assigned values follow the observed outcomes.
    pub fn is_consistent(&self) -> bool {
        let ok = |raw: StationOutcome, obs: StationOutcome| raw == obs || raw.confused() == obs;
        let v = ValueAssignment::default();
        ok(self.raw.0, self.observed.0)
            && ok(self.raw.1, self.observed.1)
            && self.a == v.value(self.observed.0, Station::One)
            && self.b == v.value(self.observed.1, Station::Two)
    }
}

/// Inverse-CDF sampler over one setting pair's ideal-distinguishability table.
#[derive(Debug, Clone)]
pub struct SettingSampler {
    cfg: SamplerConfig,
    pair: SettingPair,
    psi: PsiAngles,
    cumulative: [f64; 36],
}

impl SettingSampler {
    pub fn new(cfg: &SamplerConfig, pair: SettingPair) -> Result<Self> {
        cfg.validate()?;
        let psi = cfg.settings.angles(pair);
        let (theta1, theta2) = psi.thetas();
        let table = joint_table(theta1, theta2, cfg.model.eta)?;
        let mut cumulative = [0.0; 36];
        let mut acc = 0.0;
        for (k, (_, _, p)) in table.iter().enumerate() {
            acc += p;
            cumulative[k] = acc;
        }
        Ok(Self {
            cfg: *cfg,
            pair,
            psi,
            cumulative,
        })
    }

    fn cell(&self, u: f64) -> (StationOutcome, StationOutcome) {
        let k = match self.cumulative.iter().position(|&c| u < c) {
            Some(k) => k,
            // u landed in the rounding gap above the last partial sum
            None => (0..36)
                .rev()
                .find(|&k| self.cumulative[k] > if k == 0 { 0.0 } else { self.cumulative[k - 1] })
                .unwrap_or(0),
        };
        (
            StationOutcome::from_index(k / 6 + 1).expect("row in range"),
            StationOutcome::from_index(k % 6 + 1).expect("column in range"),
        )
    }

    pub fn rng(&self, chunk: usize) -> ChaCha8Rng {
        stream_rng(self.cfg.seed, self.pair, chunk)
    }

    /// Events `[chunk·CHUNK_SIZE, (chunk+1)·CHUNK_SIZE)` of this setting, clipped to `n_per_setting`.
    pub fn chunk(&self, chunk: usize) -> Vec<EventRecord> {
        let start = chunk * CHUNK_SIZE;
        let end = (start + CHUNK_SIZE).min(self.cfg.n_per_setting);
        if start >= end {
            return Vec::new();
        }
        let miss = 1.0 - self.cfg.model.alpha;
        let values = ValueAssignment::default();
        let mut rng = self.rng(chunk);
        let base = (self.pair.ordinal() * self.cfg.n_per_setting) as u64;
        let mut events = Vec::with_capacity(end - start);
        for k in start..end {
            let raw = self.cell(rng.random::<f64>());
            let mut confuse = |o: StationOutcome| {
                if o.is_double() && rng.random::<f64>() < miss {
                    o.confused()
                } else {
                    o
                }
            };
            let observed = (confuse(raw.0), confuse(raw.1));
            events.push(EventRecord {
                index: base + k as u64,
                setting: self.pair,
                psi1: self.psi.psi1,
                psi2: self.psi.psi2,
                raw,
                observed,
                a: values.value(observed.0, Station::One),
                b: values.value(observed.1, Station::Two),
            });
        }
        events
    }
}

fn stream_rng(seed: u64, pair: SettingPair, chunk: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(pair.ordinal() as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk as u64);
    rng
}

/// All events, settings in CHSH order, each setting's events in index order.
pub fn sample_events(cfg: &SamplerConfig) -> Result<Vec<EventRecord>> {
    cfg.validate()?;
    let mut events = Vec::with_capacity(4 * cfg.n_per_setting);
    for pair in SettingPair::ALL {
        let sampler = SettingSampler::new(cfg, pair)?;
        for chunk in 0..cfg.chunk_count() {
            events.extend(sampler.chunk(chunk));
        }
    }
    Ok(events)
}

/// Sample mean of `a·b` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn estimate_correlation(events: &[EventRecord]) -> Result<Estimate> {
    let first = events.first().ok_or(Error::EmptyInput)?;
    if events.iter().any(|e| e.setting != first.setting) {
        return Err(Error::MixedSettings);
    }
    Ok(mean_and_stderr(
        events.iter().map(|e| f64::from(e.product())),
    ))
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> Estimate {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    let var = if n > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Estimate {
        mean,
        stderr: libm::sqrt(var / n as f64),
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshEstimate {
    pub s: f64,
    pub stderr: f64,
    /// Per-setting estimates in CHSH order.
    pub terms: [Estimate; 4],
}

/// `E_AB + E_A′B + E_AB′ − E_A′B′`, standard errors added in quadrature.
pub fn estimate_chsh(events: &[EventRecord]) -> Result<ChshEstimate> {
    let mut terms = [Estimate {
        mean: 0.0,
        stderr: 0.0,
        n: 0,
    }; 4];
    for pair in SettingPair::ALL {
        let values = events
            .iter()
            .filter(|e| e.setting == pair)
            .map(|e| f64::from(e.product()));
        if values.clone().next().is_none() {
            return Err(Error::MissingSetting(pair.label()));
        }
        terms[pair.ordinal()] = mean_and_stderr(values);
    }
    let s = SettingPair::ALL
        .iter()
        .map(|p| p.sign() * terms[p.ordinal()].mean)
        .sum();
    let stderr = libm::sqrt(terms.iter().map(|t| t.stderr * t.stderr).sum());
    Ok(ChshEstimate { s, stderr, terms })
}
