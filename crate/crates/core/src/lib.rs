//! Exact Hecke eigenvalues of level-one cusp forms and short-interval
//! statistics of their squares.

pub mod arithmetic;
pub mod error;
pub mod lfunc;
pub mod maassio;
pub mod majorant;
pub mod numeric;
pub mod par;
pub mod qmodforms;
pub mod trace;
pub mod variancelab;

pub use error::{LabError, Result};
