//! Simulation and regime analysis for a two-age-class stochastic forest model.
//!
//! * [`model`]: parameters, closed-form thresholds, stationary points, generator.
//! * [`regime`]: sustainability and decline predicates, classifier, sweeps.
//! * [`sde`]: integration schemes (selected by name), seeded noise, ensembles.
//! * [`analysis`]: time averages, ensemble statistics, occupation frequencies.
//! * [`cli`]: the `forest-sde` command-line front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod export;
pub mod model;
pub mod poly;
pub mod regime;
pub mod sde;

pub use error::{Error, Result};
pub use model::{ModelParams, State};
