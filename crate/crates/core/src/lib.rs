//! Numerical engine for symbolic dynamics of postsingularly bounded entire
//! maps: external addresses, iterated inverse branches, ray tracing, periodic
//! point location, and landing-theorem verification at desk scale.

pub mod address;
pub mod error;
pub mod model;
pub mod periodic;
pub mod portrait;
pub mod pullback;
pub mod ser;

pub use address::{cyclic_between, ExternalAddress, FiniteAddress};
pub use error::{Error, Result};
pub use model::{CylPoint, DomainLabel, EntireMap, Family, MapConfig, EXP_SAFE_RE};
pub use periodic::{
    build_hyperbolic_set, classify, newton_periodic, scan_periodic, Classification,
    HyperbolicSetApprox, PeriodicPoint, ScanOutcome, Window,
};
pub use portrait::{
    alphabet, candidate_tree, count_colanding, periodic_addresses, rays_to_point,
    uniform_landing_check, verify_landing_theorem, CandidateTree, PortraitParams, PortraitReport,
    UniformLandingReport,
};
pub use pullback::{
    escape_address, gap_decay_check, land, land_with_orbit, pullback_finite, pullback_point,
    pullback_sequence, trace_ray, GapDecayReport, LandOptions, LandStatus, LandingReport,
    PullbackOrbit, RayPolyline,
};
