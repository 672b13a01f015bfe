//! Pseudo-spectral laboratory for the 2D deep-water gravity wave problem
//! in Zakharov form: Dirichlet-to-Neumann operator, good unknown, normal
//! form bookkeeping, diagnostics and dispersive measurements.

pub mod diagnostics;
pub mod dtn;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod normal_form;
pub mod spectral;
pub mod strichartz;

pub use error::{LabError, Result};
