//! Compile finite probabilistic occurrence nets into stochastic matrices.
//!
//! The pipeline is: a [`MarkedNet`] is split into structural branching
//! cells ([`scell`]), arranged into a layered parallel/sequential
//! [`decompose::CompositionTree`], translated into a typed [`Term`]
//! ([`compile`]), and interpreted as a row-stochastic [`KleisliArrow`]
//! given a [`DeltaTable`] of per-cell transaction probabilities
//! ([`kleisli`]). [`infer`] does forward and backward reasoning over the
//! resulting arrows, and [`oracle`] recomputes the same answers from the
//! event-structure view of the net, for cross-checking.

pub mod compile;
pub mod decompose;
pub mod dot;
pub mod error;
pub mod fixtures;
pub mod infer;
pub mod io;
pub mod kleisli;
pub mod net;
pub mod oracle;
pub mod scell;
pub mod term;

pub use compile::{compile_net, Compiler};
pub use decompose::{canonical_form, CompositionTree};
pub use error::{
    CompileError, DecomposeError, InferError, IoError, KleisliError, NetError, OracleError,
    TermError,
};
pub use kleisli::{DeltaTable, Dist, KleisliArrow, Wiring};
pub use net::{MarkedNet, Net, Node, PlaceId, PlaceSet, Process, TransitionId};
pub use scell::{scells, SCell};
pub use term::{ConstantKey, Term, TermType};

/// Absolute tolerance for row sums and distribution normalisation.
pub const STOCHASTIC_TOL: f64 = 1e-9;
