//! Complexity and topological entropy per unit time and unit volume for
//! spatially extended dynamical systems on the integer lattice.
//!
//! The crate is organised bottom-up:
//!
//! - [`lattice`]: extended systems with commuting space-translation and
//!   time-evolution actions, measure samplers and the windowed sup metric.
//! - [`covering`]: finite quantizer coverings of windowed state spaces and
//!   the coding of orbits into symbol words.
//! - [`complexity`]: computable code-length functions on words together with
//!   an empirical harness for the "good complexity function" axioms.
//! - [`estimators`]: orbit complexity, its per-time and per-volume rates,
//!   distinguishable-orbit counting, topological entropy and the
//!   variational comparison.
//! - [`ergodic`]: admissible window sequences and windowed Birkhoff averages.
//! - [`experiment`]: configuration, CSV emission and run manifests used by
//!   the `extropy` command-line tool.

pub mod complexity;
pub mod covering;
pub mod ergodic;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod lattice;
pub mod window;

pub use error::{Error, Result};
pub use window::Window;
