//! Coarse-to-fine lifted MAP inference for pairwise grid MRFs.
//!
//! Variables that look alike under an approximate symmetry test are grouped
//! into lifted pixels; the reduced model over the groups is solved first and
//! its solution handed, at unchanged energy, to successively finer models
//! until the original one is reached.

pub mod c2f;
pub mod color_passing;
pub mod error;
pub mod image;
pub mod mrf;
pub mod numeric;
pub mod partition;
pub mod pipelines;
pub mod solvers;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use mrf::{energy, Edge, Label, LabelSet, LabeledMrf, Pairwise};
pub use partition::{build_reduced, expand, lift_assignment, Partition, ReducedMrf};
pub use solvers::{SolveReport, StopReason, StoppingCriteria};
pub use trace::{AnytimeTrace, TraceEvent};
