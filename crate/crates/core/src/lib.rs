//! Blid maps, blid-based cutoffs and constructive Hartman–Grobman
//! linearization at hyperbolic fixed points, with sampled verification of
//! the resulting bounds and of the differentiability exponent.

pub mod blid;
pub mod bump;
pub mod commands;
pub mod conjugacy;
pub mod cutoff;
pub mod error;
pub mod poly;
pub mod scenario;
pub mod space;
pub mod spectral;
pub mod verify;

pub use blid::{BlidMap, BlidVariant, SupEstimate};
pub use bump::BumpFunction;
pub use cutoff::{globalize, GlobalizedMap, MapSpec};
pub use error::{Error, Result};
pub use poly::Nonlinearity;
pub use space::{LinearOp, Norm, Point, SpaceDesc};
pub use commands::{Outcome, PointSource};
pub use conjugacy::{ConjugacyKind, ConjugacySolver, SolverConfig};
pub use scenario::{builtin, Scenario, BUILTIN_IDS};
pub use spectral::{split, split_op, BandWidthReport, HyperbolicSplitting};
pub use verify::{fit_beta, BetaFit, FitTarget};
