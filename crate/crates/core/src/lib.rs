//! Simulation and analysis of entanglement generated by collective
//! dissipation in networks of spin domains sharing engineered reservoirs.

pub mod error;
pub mod dynamics;
pub mod entanglement;
pub mod hilbert;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod run;
pub mod scenario;
pub mod validation;

pub use error::{Error, Result};
