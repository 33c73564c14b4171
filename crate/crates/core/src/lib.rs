//! Nonlinear coherent states of deformed quantum oscillators.
//!
//! The crate builds NCS and circle NCS for a family of oscillator
//! deformations (with the trapped-ion Laguerre-ratio family as the flagship
//! case), their operator matrices and phase-space fields, and the measures
//! resolving unity over the state family. Factorial-like weights oscillate
//! over hundreds of orders of magnitude, so all of them live in sign-tracked
//! log space ([`logspace::LogWeight`]).

pub mod deformation;
pub mod error;
pub mod logspace;
pub mod measure;
pub mod phasespace;
pub mod specfun;
pub mod states;

pub use deformation::DeformationSpec;
pub use error::{NcsError, Result};
pub use logspace::LogWeight;
pub use phasespace::{Field, FieldKind, GridSpec};
pub use specfun::EvalResult;
pub use states::{NcsState, NormStatus, OperatorKind, OperatorMatrix, RabiConfig};
