//! Fixed-gain tracking observers for integrator-chain processes.
//!
//! The pipeline runs from a [`ProcessModel`] and a set of closed-loop poles
//! to gain vectors ([`design`]), then to four equivalent state-space
//! realizations and a transfer function ([`extract_transfer`]), which the
//! [`analysis`] module characterizes.

pub mod analysis;
pub mod error;
pub mod math;
pub mod pole_place;
pub mod process;
pub mod realization;

pub use analysis::TransferFunction;
pub use error::{Error, Result};
pub use math::{Complex, Matrix, Polynomial};
pub use pole_place::{design, DesignResult, ObserverSpec};
pub use process::ProcessModel;
pub use realization::{extract_transfer, Form, StateSpaceModel};
