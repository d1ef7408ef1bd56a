//! Planted-truth synthetic datasets.
//!
//! The field is generated by model 4 (locations driven by the all-India
//! series) or model 5 (contiguous zones with agreement probability), from
//! known parameters, so trained models can be checked against the truth.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridManifest, RainfallField};
use crate::latent::{LatentState, N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::mrf::{LocationParams, ModelParams};
use crate::prob::{
    fit_gaussian, mean, population_sd, stationary_distribution, GammaParams, GaussianParams, RandomStream, TransitionMatrix,
};
use crate::real::Real;
use crate::sim::{simulate_m4, simulate_m5, SimulationConfig, ZoneModel, ZoneParams};
use crate::zones::{canonical_labels, ZonePartition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub n_days: usize,
    pub n_zones: usize,
    /// Generating model, 4 or 5.
    pub model: u8,
    pub seed: u64,
    /// Probability that a location's state equals its zone's state (model 5).
    pub agreement: f64,
    pub wet_shape: f64,
    pub wet_scale: f64,
    pub dry_shape: f64,
    pub dry_scale: f64,
    /// Each location's Gamma scales are multiplied by a factor drawn
    /// uniformly from `1 -/+ scale_jitter`.
    pub scale_jitter: f64,
    /// Diagonal of the all-India transition matrix.
    pub u_persistence: f64,
    /// Weight on repeating the previous local state in the planted `pi`.
    pub z_persistence: f64,
    /// Probability of the heavy state on active, break and normal days.
    pub heavy_given_u: [f64; N_GLOBAL_STATES],
    pub start_year: i32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            n_days: 200,
            n_zones: 3,
            model: 5,
            seed: 7,
            agreement: 0.95,
            wet_shape: 16.0,
            wet_scale: 1.5,
            dry_shape: 2.0,
            dry_scale: 0.5,
            scale_jitter: 0.2,
            u_persistence: 0.9,
            z_persistence: 0.05,
            heavy_given_u: [0.98, 0.02, 0.4],
            start_year: 2000,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.rows == 0 || self.cols == 0 {
            return bad("grid needs at least one row and column".into());
        }
        if self.n_zones == 0 || self.n_zones > self.rows * self.cols {
            return bad(format!("n_zones must be 1 to {}, got {}", self.rows * self.cols, self.n_zones));
        }
        if self.n_days < 2 {
            return bad("n_days must be at least 2".into());
        }
        if self.model != 4 && self.model != 5 {
            return bad(format!("synthetic data comes from model 4 or 5, got {}", self.model));
        }
        if !(self.agreement > 0.0 && self.agreement <= 1.0) {
            return bad("agreement must lie in (0, 1]".into());
        }
        for (name, v) in [
            ("wet_shape", self.wet_shape),
            ("wet_scale", self.wet_scale),
            ("dry_shape", self.dry_shape),
            ("dry_scale", self.dry_scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.scale_jitter) {
            return bad("scale_jitter must lie in [0, 1)".into());
        }
        if !(self.u_persistence > 0.0 && self.u_persistence < 1.0) {
            return bad("u_persistence must lie in (0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.z_persistence) {
            return bad("z_persistence must lie in [0, 1)".into());
        }
        if self.heavy_given_u.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return bad("heavy_given_u entries must lie in (0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset<F> {
    pub manifest: GridManifest,
    pub field: RainfallField<F>,
    pub truth: LatentState,
    /// Planted parameters. `tau`, `tau_hat` and `theta` are the marginals
    /// implied by the planted `pi` and `lambda`; the Gaussians are fitted to
    /// the generated aggregate.
    pub params: ModelParams<F>,
    pub partition: ZonePartition,
    pub zone_params: ZoneParams<F>,
}

pub fn generate<F: Real>(spec: &SynthSpec) -> Result<SynthDataset<F>> {
    spec.validate()?;
    let manifest = GridManifest::full(spec.rows, spec.cols);
    let nb = manifest.neighbor_sets();
    let n = manifest.n_locations();
    let root = RandomStream::new(spec.seed, 0x5e);

    let off = (1.0 - spec.u_persistence) / 2.0;
    let lambda_rows: Vec<Vec<F>> = (0..N_GLOBAL_STATES)
        .map(|l| {
            (0..N_GLOBAL_STATES)
                .map(|m| F::cst(if l == m { spec.u_persistence } else { off }))
                .collect()
        })
        .collect();
    let lambda = TransitionMatrix::new(lambda_rows)?;
    let lambda_hat = stationary_distribution(&lambda)?;

    let w = spec.z_persistence;
    let pi: [[[F; N_LOCAL_STATES]; N_GLOBAL_STATES]; N_LOCAL_STATES] = std::array::from_fn(|l| {
        std::array::from_fn(|m| {
            let heavy = w * f64::from(u8::from(l == 0)) + (1.0 - w) * spec.heavy_given_u[m];
            [F::cst(heavy), F::cst(1.0 - heavy)]
        })
    });
    let theta: [[F; N_LOCAL_STATES]; N_GLOBAL_STATES] =
        std::array::from_fn(|m| [F::cst(spec.heavy_given_u[m]), F::cst(1.0 - spec.heavy_given_u[m])]);
    let tau_rows: Vec<Vec<F>> = (0..N_LOCAL_STATES)
        .map(|l| {
            (0..N_LOCAL_STATES)
                .map(|k| (0..N_GLOBAL_STATES).map(|m| lambda_hat[m] * pi[l][m][k]).sum())
                .collect()
        })
        .collect();
    let tau = TransitionMatrix::new(tau_rows)?;
    let tau_hat = stationary_distribution(&tau)?;

    let mut jitter = root.split(&[1]);
    let mut factor = || F::cst(1.0 + spec.scale_jitter * (2.0 * jitter.unit::<f64>() - 1.0));
    let locations = (0..n)
        .map(|_| {
            let wet = GammaParams::new(F::cst(spec.wet_shape), F::cst(spec.wet_scale) * factor())?;
            let dry = GammaParams::new(F::cst(spec.dry_shape), F::cst(spec.dry_scale) * factor())?;
            Ok(LocationParams {
                gamma: [wet, dry],
                tau: tau.clone(),
                tau_hat: tau_hat.clone(),
                theta,
                pi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let placeholder = GaussianParams::new(F::zero(), F::one())?;
    let mut params = ModelParams {
        locations,
        lambda,
        lambda_hat,
        gauss: [placeholder; N_GLOBAL_STATES],
        u_posterior: None,
        rain_floor_mm: F::cst(0.1),
    };

    let h = canonical_labels(&grow_zones(&manifest, &nb, spec.n_zones, &mut root.split(&[2])));
    let mut members = vec![Vec::new(); spec.n_zones];
    for (s, &k) in h.iter().enumerate() {
        members[k].push(s);
    }
    let planted_zones = ZoneParams {
        zones: members
            .iter()
            .map(|m| {
                let size = F::from_usize(m.len()).unwrap();
                Ok(ZoneModel {
                    members: m.clone(),
                    pi,
                    gamma: [
                        GammaParams::new(F::cst(spec.wet_shape), F::cst(spec.wet_scale) * size)?,
                        GammaParams::new(F::cst(spec.dry_shape), F::cst(spec.dry_scale) * size)?,
                    ],
                    phi: vec![F::one() / size; m.len()],
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let constant = LatentState::constant(n, spec.n_days, 0, 0);
    let mut partition = ZonePartition::from_assignments(h.clone(), &constant, spec.agreement, 1.0)?;

    let config = SimulationConfig {
        model: spec.model,
        n_days: spec.n_days,
        seed: spec.seed,
        start_year: spec.start_year,
        ..SimulationConfig::default()
    };
    let out = match spec.model {
        4 => simulate_m4(&params, &config, None)?,
        _ => simulate_m5(&params, &planted_zones, &partition, &config, None)?,
    };

    let y = out.field.aggregate();
    let pooled_sd = population_sd(y.values());
    params.gauss = std::array::from_fn(|l| {
        let days: Vec<F> = (0..spec.n_days)
            .filter(|&t| out.state.u(t) as usize == l)
            .map(|t| y.values()[t])
            .collect();
        fit_gaussian(&days).unwrap_or_else(|_| {
            let m = if days.is_empty() { mean(y.values()) } else { mean(&days) };
            GaussianParams::new(m, if pooled_sd > F::zero() { pooled_sd } else { F::one() }).expect("positive sd")
        })
    });
    // canonical series from the generated states
    partition = ZonePartition::from_assignments(h, &out.state, spec.agreement, 1.0)?;
    let days = out.field.days().to_vec();
    let field = RainfallField::new(n, days, out.field.values().to_vec())?;
    Ok(SynthDataset {
        manifest,
        field,
        truth: out.state,
        params,
        partition,
        zone_params: planted_zones,
    })
}

/// Contiguous zones grown breadth-first from distinct random seed cells, one
/// cell per zone in turn.
fn grow_zones(manifest: &GridManifest, nb: &crate::grid::NeighborSet, k: usize, stream: &mut RandomStream) -> Vec<usize> {
    let n = manifest.n_locations();
    let mut cells: Vec<usize> = (0..n).collect();
    // partial Fisher-Yates for k distinct seeds
    for i in 0..k {
        let j = i + (stream.unit::<f64>() * (n - i) as f64) as usize;
        cells.swap(i, j.min(n - 1));
    }
    let mut h = vec![usize::MAX; n];
    let mut queues: Vec<VecDeque<usize>> = Vec::with_capacity(k);
    for (zone, &seed) in cells[..k].iter().enumerate() {
        h[seed] = zone;
        queues.push(VecDeque::from([seed]));
    }
    let mut active = true;
    while active {
        active = false;
        for zone in 0..k {
            // claim one unassigned neighbour of the zone's frontier
            while let Some(&front) = queues[zone].front() {
                if let Some(&next) = nb.of(front).iter().find(|&&o| h[o] == usize::MAX) {
                    h[next] = zone;
                    queues[zone].push_back(next);
                    active = true;
                    break;
                }
                queues[zone].pop_front();
            }
        }
    }
    h
}
