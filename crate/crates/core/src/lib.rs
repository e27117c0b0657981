//! Space-filling designs from rotated lattices whose coordinate projections
//! stay well separated.
//!
//! A design is the set `{h (a^T G + delta) : a in Z^p}` clipped to the unit
//! cube, where `G = G_base R` is a classical packing or covering generator
//! times a rotation `R`. Rotations from the [`rotations`] module satisfy
//! exact number-theoretic side conditions under which every one-dimensional
//! projection (and, in power-of-two dimensions, every projection) keeps an
//! optimal-order separation distance. [`dpmpd::construct`] picks the best of
//! several such designs by a projection-aware score.

pub mod designgen;
pub mod dpmpd;
pub mod error;
pub mod exactnum;
pub mod lattices;
pub mod matcore;
pub mod metrics;
pub mod oracles;
pub mod rotations;
pub mod textfmt;

pub use designgen::{enumerate_points, find_delta, generate, Design, DesignMeta, PointSet};
pub use dpmpd::{construct, rate_study, ConstructConfig, RateStudy, RateStudyConfig, RotationPolicy, SearchReport};
pub use error::{Error, Result};
pub use exactnum::{IntMatrix, Rational};
pub use lattices::{BaseLattice, GeneratorMatrix, LatticeFamily};
pub use matcore::Matrix;
pub use metrics::{metrics_report, ProjectionMetrics};
pub use rotations::{ConditionReport, MagicRotationSpec};
