//! Khovanov homology of link diagrams with state-cycle detection,
//! Lee-theoretic tools and quasipositive modification.

pub mod cobordism;
pub mod complex;
pub mod diagram;
pub mod error;
pub mod fixtures;
pub mod homology;
pub mod linalg;
pub mod par;
pub mod polynomials;
pub mod qpmod;
pub mod resolution;
pub mod statecycle;
mod scan;
mod uf;

pub use diagram::{BraidWord, Crossing, Diagram};
pub use error::{Error, Result};
pub use polynomials::{Laurent, Laurent2};
pub use resolution::{State, TracedState};
