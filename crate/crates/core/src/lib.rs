//! Finite universal algebra workbench.

pub mod algebra;
pub mod congruence;
pub mod connector;
pub mod constructions;
pub mod corpus;
pub mod error;
pub mod extensions;
pub mod io;
pub mod maltsev_ops;
pub mod partition;
pub mod power;
pub mod relcalc;
pub mod suite;
pub mod term;
pub mod term_search;

pub use algebra::{Elem, FiniteAlgebra, Homomorphism};
pub use error::{Error, Result};
pub use partition::Partition;
