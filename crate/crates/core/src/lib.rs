//! Two-branch fractional Maxwell viscoelastic models in the frequency domain:
//! evaluation, particle-swarm calibration against master curves, and local
//! and variance-based sensitivity analysis.

pub mod calibration;
pub mod dataio;
pub mod error;
pub mod grid;
pub mod gsa;
pub mod lsa;
pub mod presets;
pub mod pso;
pub mod viscomodel;

pub use error::{Error, Result};
pub use viscomodel::{BranchParams, FractionalModel, ModelKind, Moduli, Param};
