//! Natural occupation numbers of few-fermion states, generalized Pauli
//! constraints and truncated pinning analysis.
//!
//! The crate is `no_std` and only needs an allocator. Everything here is a
//! pure function over immutable values. File formats, reports and the
//! command-line front end live in the `pinning` crate.
//!
//! Orbital indices are 1-based in every public interface and 0-based inside
//! the determinant bitmasks.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod constraints;
pub mod error;
pub mod fock;
pub mod harmonium;
pub mod hubbard;
pub mod linalg;
pub mod perturbation;
pub mod pinning;
pub mod qmp;
pub mod scalar;

pub use constraints::{AffineConstraint, ConstraintCatalog, ConstraintKind, Measure, Provenance};
pub use error::{Error, Result};
pub use fock::{FermionState, LadderMode, OneRdm, Setting, SlaterDeterminant, Spectrum};
