pub mod cli;
pub mod config;
pub mod conformal;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod nonexistence;
pub mod spectral;
pub mod traveling;

pub use error::{Error, Result};
