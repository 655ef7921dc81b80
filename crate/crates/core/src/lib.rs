//! Thermodynamics of a qubit engine fuelled by two measurements in superposed order.

pub mod analytic;
pub mod channels;
pub mod circuit;
pub mod engine;
pub mod error;
pub mod qmat;
pub mod states;

pub use error::{Error, Result};
