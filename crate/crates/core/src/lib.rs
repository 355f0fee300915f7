pub mod bell;
pub mod ensemble;
pub mod error;
pub mod fingerprint;
pub mod numeric;
pub mod oracle;
pub mod spectrum;
pub mod splitting;
pub mod sympoly;
pub mod verify;

pub use error::{Error, Result};
