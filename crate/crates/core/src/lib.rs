//! Noether symmetries of time-dependent Hamiltonian systems on the extended
//! phase space: closed-form construction of symmetries from first integrals,
//! numerical verification of symmetry conditions and conservation laws, and
//! integrability-by-symmetries diagnostics.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod integrability;
pub mod jet;
pub mod jsonfmt;
pub mod noether;
pub mod sample;

pub use error::{Error, Result};
pub use expr::{eval_jet, fd_jet, parse_expression, Expression};
pub use geometry::{FieldValue, OneFormValue, PhasePoint, SystemSpec};
