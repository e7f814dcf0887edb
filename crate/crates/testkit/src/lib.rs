//! Independent reference implementations and fixtures shared by the test suites. Nothing
//! here is used by the shipped crates.

pub mod engine_oracle;
pub mod fixtures;
mod transport;

pub use transport::transport_oracle;
