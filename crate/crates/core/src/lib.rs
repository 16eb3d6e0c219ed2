//! Density-operator toolkit for composite quantum systems.
//!
//! The crate keeps a hard line between the state of a closed composite system
//! and the reduced states obtained from it by partial trace. Reduced states
//! are computed, tagged and compared, but never silently promoted to states
//! of subsystems.

pub mod classical;
pub mod decoherence;
pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod random;
pub mod reduction;
pub mod scenario;
pub mod states;
pub mod tensor;

pub use error::{Error, Result};
pub use states::{DensityOperator, Provenance, StateVector};
pub use tensor::{LinOp, SpaceSpec, C64};
