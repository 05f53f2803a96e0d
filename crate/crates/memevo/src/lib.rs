//! Memetic evolutionary optimization of capacitated routing problems with
//! transferable learned memes.
//!
//! The crate solves capacitated vehicle routing (CVRP) and capacitated arc
//! routing (CARP) instances with a split-based memetic evolutionary solver,
//! and carries knowledge forward between instances: after solving, it learns
//! a positive-semidefinite task-space transformation (a *meme*) from the
//! optimized solution, stores it in a persistent pool, and on later
//! instances selects, blends and imitates pooled memes to seed the solver
//! with intelligently biased initial populations.
//!
//! The pieces, bottom up:
//!
//! - [`instance`]: benchmark parsing (TSPLIB CVRP, egl-style CARP DAT),
//!   all-pairs shortest paths, MDS embedding and task featurization.
//! - [`routing`]: solutions, cost evaluation, optimal giant-tour splitting,
//!   local search and the memetic [`routing::evolve`] solver.
//! - [`meme`]: HSIC dependence scoring and [`meme::learn_meme`], which
//!   distills a solved instance into a transferable meme.
//! - [`transfer`]: the meme pool, fitness-weighted selection, blending, and
//!   imitation into biased initial populations.
//! - [`experiment`]: config-driven sequence runner with per-run convergence
//!   traces, statistics and mode comparison.
//! - [`synth`]: generators for related synthetic instance families, used by
//!   the examples and the test suite.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `memevo` binary for the command-line interface.

pub mod error;
pub mod experiment;
pub mod instance;
pub mod meme;
pub mod routing;
pub mod synth;
pub mod transfer;

pub use error::{Error, Result};
