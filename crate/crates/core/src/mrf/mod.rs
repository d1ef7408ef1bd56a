//! Markov Random Field training of the latent weather states.
//!
//! The field couples every local state `Z(s, t)` to its temporal neighbours,
//! its grid neighbours, the all-India state `U(t)` and its own rainfall; each
//! `U(t)` is coupled to its temporal neighbours, to all local states of the
//! day and to the daily aggregate. Training runs per-location mixture EM for
//! an initial labelling, Gibbs sampling over the full graph, and finally a
//! smoothed MAP estimate of the simulation parameters from the posterior mode.

mod em;
mod gibbs;
mod params;
mod potentials;

use serde::{Deserialize, Serialize};

pub use em::{em_initialize, EmInit};
pub use gibbs::{run_gibbs, GibbsOutput, TraceEntry};
pub use params::{extract_map_params, LocationParams, MapEstimate, ModelParams, PARAMS_SCHEMA_VERSION};
pub use potentials::{build_potentials, gibbs_conditional_u, gibbs_conditional_z, Emissions, PotentialTable};

use crate::error::{Error, Result};
use crate::grid::{NeighborSet, RainfallField};
use crate::real::Real;

/// Training settings. Serialized as the `train` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub burn_in: usize,
    pub n_samples: usize,
    pub thin: usize,
    pub seed: u64,
    /// Same:different potential ratio on temporal edges between local states.
    pub temporal_ratio_z: f64,
    /// Same:different potential ratio on temporal edges of the U chain.
    pub temporal_ratio_u: f64,
    /// Rainfall below this is raised to it before any Gamma evaluation.
    pub rain_floor_mm: f64,
    pub em_max_iter: usize,
    pub em_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            burn_in: 50,
            n_samples: 50,
            thin: 5,
            seed: 0,
            temporal_ratio_z: 99.0,
            temporal_ratio_u: 99.0,
            rain_floor_mm: 0.1,
            em_max_iter: 200,
            em_tol: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if !(self.temporal_ratio_z > 0.0) || !(self.temporal_ratio_u > 0.0) {
            return Err(Error::Config("temporal ratios must be positive".into()));
        }
        if !(self.rain_floor_mm > 0.0) {
            return Err(Error::Config("rain_floor_mm must be positive".into()));
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.n_samples * self.thin
    }
}

/// Result of the full training pipeline.
#[derive(Debug, Clone)]
pub struct Trained<F> {
    pub em: EmInit<F>,
    pub gibbs: GibbsOutput<F>,
}

/// EM initialization followed by Gibbs sampling and MAP extraction.
pub fn train<F: Real>(field: &RainfallField<F>, nb: &NeighborSet, config: &TrainConfig) -> Result<Trained<F>> {
    config.validate()?;
    let em = em_initialize(field, config)?;
    let gibbs = run_gibbs(field, nb, &em.state, &em.emissions, config)?;
    Ok(Trained { em, gibbs })
}

pub(crate) fn floored<F: Real>(field: &RainfallField<F>, floor: F) -> Vec<F> {
    field.values().iter().map(|&x| x.max(floor)).collect()
}
