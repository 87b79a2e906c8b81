//! Max-min throughput optimization for IRS-aided integrated data and energy
//! networks with an underlaid D2D tier.
pub mod conic;
pub mod error;
pub mod experiment;
pub mod model;
pub mod sca;
pub mod scenario;
pub mod surrogate;
pub mod verify;

pub use error::{Error, Result};
