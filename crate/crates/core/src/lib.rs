pub mod access;
pub mod coverage;
pub mod error;
pub mod jackson;
pub mod metrics;
pub mod oracles;
pub mod pipeline;
pub mod mobility;
pub mod quadrature;
pub mod scenario;

pub use error::{ErrorClass, Result, UdnError};
