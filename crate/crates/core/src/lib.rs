pub mod coupling;
pub mod direct;
pub mod distributions;
pub mod error;
pub mod mass;
pub mod stats;
pub mod urn;
pub mod rwre;
pub mod urn_process;

pub use error::{Error, Result};
