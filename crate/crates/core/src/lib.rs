pub mod audit;
pub mod classifier;
pub mod cli;
pub mod error;
pub mod files;
pub mod instance;
pub mod measure;
pub mod nestedness;
pub mod plot;
pub mod regression;
pub mod transport;

pub use error::{Error, Result};
