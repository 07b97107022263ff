//! Method of similar operators for one-dimensional Dirac operators
//! `i diag(1, -1) y' - P y` with a 2x2 matrix potential under periodic,
//! antiperiodic or Dirichlet-type boundary conditions.
//!
//! The examples are the main entry point, one per capability:
//!
//! - `derive_potential`: reading a potential and the derived scalars
//! - `transform_identities`: the transforms `J_k`, `Gamma_k`
//! - `similarity_pipeline`: the fixed point and the operators `U`, `V`
//! - `spectrum_asymptotics`: block eigenvalues against oracle and predictions
//! - `resonant_splitting`: pair splitting in the resonant branch
//! - `characteristic_roots`: eigenvalues from the monodromy matrix
//! - `group_evolution`: the group `e^{itL}` and its truncation bound
//! - `equiconvergence`: spectral projections against free ones
//! - `window_stability`: interior drift across windows
//! - `config_pipeline`: a TOML-driven run with in-memory artifacts
//!
//! ```text
//! cargo run --release --example spectrum_asymptotics
//! ```

pub mod blockmat;
pub mod bundled;
pub mod config;
pub mod error;
pub mod evolution;
pub mod freebasis;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod potential;
pub mod selftest;
pub mod simop;
pub mod spectrum;

pub use error::{Error, Result};
