//! Configuration, orchestration and file output for laser-bound atom pairs
//! in a simple-cubic optical lattice. Numerics live in `quasimol-core`.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod registry;
pub mod scenario;
pub mod validate;

pub use config::RunConfig;
pub use error::RunError;
pub use scenario::Scenario;
