//! Generative rainfall models.
//!
//! Models 1 to 4 use per-location parameters only: independent states,
//! Markov states, states driven by the all-India series, and both together.
//! Models 5 and 6 add coherent zones; model 6 also draws rainfall per zone
//! and shares it out among the members.

mod local;
mod zonal;

use serde::{Deserialize, Serialize};

pub use local::{simulate_m1, simulate_m2, simulate_m3, simulate_m4};
pub use zonal::{learn_zone_params, simulate_m5, simulate_m6, ZoneModel, ZoneParams};

use crate::error::{Error, Result};
use crate::grid::{DayLabel, RainfallField};
use crate::latent::{LatentState, N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::mrf::ModelParams;
use crate::prob::{sample_categorical, RandomStream};
use crate::real::Real;
use crate::zones::ZonePartition;

const TAG_U: u64 = 1;
const TAG_LOC: u64 = 2;
const TAG_ZONE: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Model number, 1 to 6.
    pub model: u8,
    pub n_days: usize,
    pub seed: u64,
    /// Zero-based all-India states to use instead of sampling the U chain.
    /// Models 1 and 2 ignore it.
    pub u_override: Option<Vec<u8>>,
    /// Weight of the learned shares in model 6.
    pub q: f64,
    /// Concentration of the symmetric Dirichlet share noise in model 6.
    pub dirichlet_r: f64,
    /// First year of the day labels written with the output.
    pub start_year: i32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            model: 1,
            n_days: 122,
            seed: 0,
            u_override: None,
            q: 0.8,
            dirichlet_r: 1.0,
            start_year: 2000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.model) {
            return Err(Error::Config(format!("model must be 1 to 6, got {}", self.model)));
        }
        if self.n_days == 0 {
            return Err(Error::Config("n_days must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::Config(format!("q must lie in [0, 1], got {}", self.q)));
        }
        if !(self.dirichlet_r > 0.0) || !self.dirichlet_r.is_finite() {
            return Err(Error::Config("dirichlet_r must be positive".into()));
        }
        if let Some(u) = &self.u_override {
            if u.len() != self.n_days {
                return Err(Error::Config(format!(
                    "u override has {} days, simulation has {}",
                    u.len(),
                    self.n_days
                )));
            }
            if u.iter().any(|&l| l as usize >= N_GLOBAL_STATES) {
                return Err(Error::Config("u override has a state outside {1, 2, 3}".into()));
            }
        }
        Ok(())
    }
}

/// Cells whose rainfall is known: copied into the output instead of sampled,
/// together with their estimated local state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedCells<F> {
    n_locations: usize,
    n_days: usize,
    cells: Vec<Option<(F, u8)>>,
}

impl<F: Real> ObservedCells<F> {
    pub fn new(n_locations: usize, n_days: usize) -> Self {
        Self {
            n_locations,
            n_days,
            cells: vec![None; n_locations * n_days],
        }
    }

    pub fn insert(&mut self, s: usize, t: usize, x: F, z: u8) {
        self.cells[s * self.n_days + t] = Some((x, z));
    }

    pub fn get(&self, s: usize, t: usize) -> Option<(F, u8)> {
        self.cells[s * self.n_days + t]
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput<F> {
    pub field: RainfallField<F>,
    pub state: LatentState,
    pub model: u8,
    pub parameter_count: usize,
    /// Model 6 only: zone rainfall `W`, zone-major.
    pub zone_rain: Option<Vec<Vec<F>>>,
}

/// Number of free parameters of each model for `S` locations and `K` zones.
pub fn parameter_count(model: u8, n_locations: usize, n_zones: usize) -> usize {
    let (s, k) = (n_locations, n_zones);
    match model {
        1 => 5 * s,
        2 => 6 * s,
        3 => 7 * s + 6,
        4 => 10 * s + 6,
        5 => 5 * s + 6 * k + 7,
        6 => 10 * k + 2 * s + 7,
        _ => panic!("model {model} does not exist"),
    }
}

/// Runs the configured model. Models 5 and 6 need a partition and its zone
/// parameters.
pub fn simulate<F: Real>(
    params: &ModelParams<F>,
    zones: Option<(&ZonePartition, &ZoneParams<F>)>,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    config.validate()?;
    match (config.model, zones) {
        (1, _) => simulate_m1(params, config, observed),
        (2, _) => simulate_m2(params, config, observed),
        (3, _) => simulate_m3(params, config, observed),
        (4, _) => simulate_m4(params, config, observed),
        (5, Some((part, zp))) => simulate_m5(params, zp, part, config, observed),
        (6, Some((part, zp))) => simulate_m6(params, zp, part, config, observed),
        (m, None) => Err(Error::Usage(format!("model {m} needs a zone partition"))),
        _ => unreachable!("validated model id"),
    }
}

fn check_observed<F: Real>(obs: Option<&ObservedCells<F>>, n: usize, config: &SimulationConfig) -> Result<()> {
    if let Some(o) = obs {
        if o.n_locations() != n || o.n_days() != config.n_days {
            return Err(Error::Config(format!(
                "observations cover {}x{}, simulation is {n}x{}",
                o.n_locations(),
                o.n_days(),
                config.n_days
            )));
        }
    }
    Ok(())
}

/// All-India series: the override when present, else the `lambda` chain
/// started from `lambda_hat`.
fn u_series<F: Real>(params: &ModelParams<F>, u_override: Option<&Vec<u8>>, n_days: usize, root: &RandomStream) -> Result<Vec<u8>> {
    if let Some(u) = u_override {
        return Ok(u.clone());
    }
    let mut stream = root.split(&[TAG_U]);
    let mut u = Vec::with_capacity(n_days);
    let mut prev = sample_categorical(&mut stream, &params.lambda_hat)?;
    u.push(prev as u8);
    for _ in 1..n_days {
        prev = sample_categorical(&mut stream, params.lambda.row(prev))?;
        u.push(prev as u8);
    }
    Ok(u)
}

/// Draws state 0 with probability `probs[0]`.
fn draw_local<F: Real>(stream: &mut RandomStream, probs: &[F; N_LOCAL_STATES]) -> u8 {
    if stream.bernoulli(probs[0] / (probs[0] + probs[1])) {
        0
    } else {
        1
    }
}

fn positive<F: Real>(x: F) -> F {
    x.max(F::min_positive_value())
}

fn finish<F: Real>(
    values: Vec<F>,
    z: Vec<u8>,
    u: Vec<u8>,
    n: usize,
    config: &SimulationConfig,
    parameter_count: usize,
    zone_rain: Option<Vec<Vec<F>>>,
) -> Result<SimulationOutput<F>> {
    let days = DayLabel::monsoon_sequence(config.start_year, config.n_days);
    Ok(SimulationOutput {
        field: RainfallField::new(n, days, values)?,
        state: LatentState::new(n, config.n_days, z, u)?,
        model: config.model,
        parameter_count,
        zone_rain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_counts() {
        assert_eq!(parameter_count(1, 357, 0), 1785);
        assert_eq!(parameter_count(3, 357, 0), 2505);
        assert_eq!(parameter_count(4, 357, 0), 3576);
        assert_eq!(parameter_count(5, 357, 129), 2566);
        assert_eq!(parameter_count(6, 357, 129), 2011);
    }

    #[test]
    fn config_checks() {
        let mut c = SimulationConfig::default();
        c.q = 1.5;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = SimulationConfig {
            u_override: Some(vec![0; 3]),
            n_days: 4,
            ..SimulationConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SimulationConfig {
            model: 7,
            ..SimulationConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
