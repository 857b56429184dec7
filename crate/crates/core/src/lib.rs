//! Structural observability of linear systems on directed graphs: which
//! states must be measured, how measuring agents must be networked, and a
//! networked estimator to exercise the result.
//!
//! The structural layers (`graph`, `matching`, `scc`, `classify`,
//! `netdesign`, `structural`) work on zero patterns only. The numerical layers
//! (`numeric`, `estimator`) are generic over the scalar: `numeric` over any
//! [`numeric::Field`] (the exact prime field [`Gf`] or `f32`/`f64`), the
//! estimator over real fields.

pub mod classify;
pub mod datasets;
pub mod estimator;
pub mod fixtures;
pub mod graph;
pub mod ingest;
pub mod matching;
pub mod netdesign;
pub mod numeric;
pub mod scc;
pub mod structural;

pub use classify::{place_agents, ObservationPlan, StructuralAnalysis};
pub use graph::{Digraph, StructuredMatrix};
pub use numeric::{FieldKind, Gf};
pub use structural::{check_centralized, check_distributed, ObservabilityVerdict};

/// Dense matrix over `GF(2^31 - 1)`.
pub type GfMatrix = nalgebra::DMatrix<Gf>;
/// Dense double-precision matrix.
pub type RealMatrix = nalgebra::DMatrix<f64>;
/// Realized networked system in double precision.
pub type System64 = estimator::DistributedSystem<f64>;
/// Realized networked system in single precision.
pub type System32 = estimator::DistributedSystem<f32>;
/// Gains for [`System64`].
pub type Gains64 = estimator::GainSchedule<f64>;
