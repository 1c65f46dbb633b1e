use crate::fock::ModeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("photon number cap exceeded: a term would hold {photons} photons (max {max})")]
    CapacityExceeded { photons: usize, max: usize },
    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("mode {0} is not carried by the transform")]
    UnknownMode(ModeId),
    #[error("transform is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("transform shape mismatch: {0}")]
    Shape(&'static str),
    #[error("efficiency must lie in (0, 1], got {0}")]
    BadEfficiency(f64),
    #[error("distinguishability must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("confusion already applied to this table (alpha = {0})")]
    AlphaAlreadyApplied(f64),
    #[error("station shows {photons} detected photons")]
    ImpossibleCount { photons: usize },
    #[error("mode {0} is not a detector mode")]
    UndetectedMode(ModeId),
    #[error("no start satisfied the simplex tolerance")]
    NoConvergence,
    #[error("no violation at eta = 1 (max CHSH {max_chsh})")]
    NoViolation { max_chsh: f64 },
    #[error("empty event sequence")]
    EmptyInput,
    #[error("events mix several settings")]
    MixedSettings,
    #[error("no events for setting {0}")]
    MissingSetting(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
