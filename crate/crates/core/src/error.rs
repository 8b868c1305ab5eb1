use thiserror::Error;

/// Errors shared across the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation escaped the exp-safe region")]
    Escaped,
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("point lies on or within tolerance of the branch cut")]
    BranchAmbiguity,
    #[error("branch point singularity (logarithm of zero)")]
    BranchPoint,
    #[error("cylindrical lifts are not comparable: {0}")]
    NotComparable(&'static str),
    #[error("normalization not achieved after {doublings} doublings (last radius {last_radius})")]
    NormalizationFailed { doublings: u32, last_radius: f64 },
    #[error("pullback failed at depth {depth}: {source}")]
    Pullback {
        depth: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("base arc leaves the reference domain near t = {t}")]
    ArcLeavesW0 { t: f64 },
    #[error("forward orbit enters the closed reference disc or the cut at step {step}")]
    OrbitEntersD { step: usize },
    #[error("forward orbit overflowed off the real axis at step {step}")]
    OrbitOverflow { step: usize },
    #[error("newton iteration did not converge within {steps} steps (residual {residual:.3e})")]
    NoConvergence { steps: usize, residual: f64 },
    #[error("derivative blowup during newton iteration")]
    DerivativeBlowup,
    #[error("set is not expanding: eta = {eta} <= 1 for iterate k = {k}")]
    NotExpanding { k: usize, eta: f64 },
    #[error("candidate tree level {level} is empty")]
    EmptyLevel { level: usize },
    #[error("candidate tree level {level} exploded ({count} survivors)")]
    CandidateExplosion { level: usize, count: usize },
    #[error("missing base distance for label {label}")]
    MissingLabel { label: String },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
