//! Ehresmann connections on trivialized principal bundles and Cartan
//! connections on homogeneous-space bundles.

pub mod cartan;
pub mod em;
pub mod error;
pub mod fieldexpr;
pub mod lie;
pub mod models;
pub mod principal;
pub mod settings;
pub mod transport;

pub use error::{Error, Result};
pub use settings::NumericSettings;
