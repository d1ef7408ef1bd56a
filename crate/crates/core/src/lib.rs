//! Spatio-temporal rainfall modelling with latent weather states.
//!
//! Daily gridded rainfall is explained by a binary local state at every
//! location and a ternary all-India state per day. [`mrf`] trains the states
//! and their parameters, [`zones`] groups locations into coherent zones,
//! [`sim`] draws new fields from six generative models, [`conditioning`]
//! drives those models with partial information, and [`metrics`] scores the
//! results. Everything numeric is generic over [`Real`]; the aliases below fix
//! the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditioning;
pub mod error;
pub mod grid;
pub mod io;
pub mod latent;
pub mod metrics;
pub mod mrf;
pub mod prob;
pub mod real;
pub mod sim;
pub mod synth;
pub mod zones;

pub use error::{Error, Result};
pub use grid::{DayLabel, GridManifest, NeighborSet};
pub use latent::LatentState;
pub use prob::RandomStream;
pub use real::Real;
pub use zones::ZonePartition;

pub type Field = grid::RainfallField<f64>;
pub type Params = mrf::ModelParams<f64>;
pub type ZoneParams = sim::ZoneParams<f64>;
pub type Simulation = sim::SimulationOutput<f64>;
pub type Observation = conditioning::PartialObservation<f64>;
pub type Synthetic = synth::SynthDataset<f64>;
