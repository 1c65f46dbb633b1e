//! Statistical behaviour of the event sampler.

use std::f64::consts::FRAC_PI_2;

use twophoton_core::bell::{chsh, correlation_closed_form, ChshSettings, SettingPair};
use twophoton_core::detection::{apply_alpha_confusion, joint_table, DetectorModel};
use twophoton_core::montecarlo::{
    estimate_chsh, estimate_correlation, sample_events, SamplerConfig, SettingSampler, CHUNK_SIZE,
};

fn config(seed: u64, alpha: f64, eta: f64, n: usize, settings: ChshSettings) -> SamplerConfig {
    SamplerConfig {
        seed,
        n_per_setting: n,
        model: DetectorModel::new(alpha, eta).unwrap(),
        settings,
    }
}

#[test]
fn chsh_estimate_within_five_standard_errors() {
    for (alpha, eta, settings) in [
        (1.0, 1.0, ChshSettings::standard()),
        (
            0.0,
            0.95,
            ChshSettings::new(2.93798, 4.25513, -0.20241, 1.11708),
        ),
        (0.6, 0.8, ChshSettings::new(0.3, 1.9, -2.2, 0.7)),
    ] {
        let cfg = config(11, alpha, eta, 200_000, settings);
        let est = estimate_chsh(&sample_events(&cfg).unwrap()).unwrap();
        let exact = chsh(&settings, cfg.model);
        assert!(
            (est.s - exact).abs() < 5.0 * est.stderr,
            "{est:?} vs {exact}"
        );
        for pair in SettingPair::ALL {
            let t = est.terms[pair.ordinal()];
            let e = correlation_closed_form(settings.angles(pair), cfg.model);
            assert!(
                (t.mean - e).abs() < 5.0 * t.stderr.max(1e-12),
                "{pair}: {t:?} vs {e}"
            );
        }
    }
}

#[test]
fn confusion_frequency_matches_one_minus_alpha() {
    let settings = ChshSettings::new(FRAC_PI_2, FRAC_PI_2, -FRAC_PI_2, -FRAC_PI_2);
    for alpha in [0.0, 0.3, 0.8] {
        let events = sample_events(&config(5, alpha, 1.0, 100_000, settings)).unwrap();
        let mut doubles = 0usize;
        let mut confused = 0usize;
        for e in &events {
            for (raw, obs) in [(e.raw.0, e.observed.0), (e.raw.1, e.observed.1)] {
                if raw.is_double() {
                    doubles += 1;
                    confused += usize::from(raw != obs);
                }
            }
        }
        let p = 1.0 - alpha;
        let freq = confused as f64 / doubles as f64;
        let sigma = (p * (1.0 - p) / doubles as f64).sqrt();
        assert!(
            (freq - p).abs() <= 3.0 * sigma + 1e-12,
            "alpha {alpha}: {freq} over {doubles}"
        );
    }
}

#[test]
fn observed_cell_frequencies_follow_confused_table() {
    let settings = ChshSettings::new(0.9, 0.0, -0.4, 0.0);
    let cfg = config(21, 0.4, 0.85, 300_000, settings);
    let sampler = SettingSampler::new(&cfg, SettingPair::AB).unwrap();
    let mut counts = [[0usize; 6]; 6];
    let mut n = 0usize;
    for chunk in 0..cfg.chunk_count() {
        for e in sampler.chunk(chunk) {
            counts[e.observed.0.index() - 1][e.observed.1.index() - 1] += 1;
            n += 1;
        }
    }
    let (t1, t2) = settings.angles(SettingPair::AB).thetas();
    let table = apply_alpha_confusion(&joint_table(t1, t2, 0.85).unwrap(), 0.4).unwrap();
    for (i, j, p) in table.iter() {
        let freq = counts[i - 1][j - 1] as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (freq - p).abs() <= 5.0 * sigma + 1e-12,
            "({i},{j}): {freq} vs {p}"
        );
    }
}

#[test]
fn chunks_are_independent_of_generation_order() {
    let cfg = config(3, 0.5, 0.9, 3 * CHUNK_SIZE + 17, ChshSettings::standard());
    let sampler = SettingSampler::new(&cfg, SettingPair::APrimeBPrime).unwrap();
    let forward: Vec<_> = (0..cfg.chunk_count())
        .flat_map(|k| sampler.chunk(k))
        .collect();
    let mut backward: Vec<_> = (0..cfg.chunk_count())
        .rev()
        .map(|k| sampler.chunk(k))
        .collect();
    backward.reverse();
    assert_eq!(forward, backward.concat());
    assert_eq!(forward.len(), cfg.n_per_setting);
    assert!(forward
        .iter()
        .enumerate()
        .all(|(k, e)| e.index as usize == 3 * cfg.n_per_setting + k));
}

#[test]
fn seeds_change_the_stream() {
    let a = sample_events(&config(1, 0.5, 0.9, 1000, ChshSettings::standard())).unwrap();
    let b = sample_events(&config(2, 0.5, 0.9, 1000, ChshSettings::standard())).unwrap();
    let c = sample_events(&config(1, 0.5, 0.9, 1000, ChshSettings::standard())).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, c);
    assert!(a.iter().all(|e| e.is_consistent()));
}

#[test]
fn per_setting_estimate_rejects_mixed_input() {
    let events = sample_events(&config(1, 1.0, 1.0, 10, ChshSettings::standard())).unwrap();
    assert!(estimate_correlation(&events).is_err());
    assert_eq!(estimate_correlation(&events[..10]).unwrap().n, 10);
}
