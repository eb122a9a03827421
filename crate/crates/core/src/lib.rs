//! Heat traces, asymptotic expansions, spectral zeta functions and quantum
//! double suspension for spectral triples given by their eigenvalue data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expansion;
pub mod par;
pub mod qds;
pub mod spectrum;
pub mod trace;
pub mod verify;
pub mod zeta;

pub use error::{Error, ErrorClass, Result};
