//! Open-system dynamics of a driven qubit coupled to a spin-boson bath.

pub mod bath;
pub mod dissipators;
pub mod error;
pub mod evolve;
pub mod exec;
pub mod fidelity;
pub mod generators;
pub mod operators;
pub mod pulseopt;
pub mod quad;
pub mod special;
pub mod sweeps;

pub use error::{Error, Result};
pub use exec::Exec;
