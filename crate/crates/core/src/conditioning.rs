//! Conditional simulation inputs: the all-India series decoded from daily
//! aggregate rainfall, or local states and the all-India series estimated
//! from partially revealed local rainfall.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RainfallField;
use crate::latent::{N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::mrf::ModelParams;
use crate::prob::{argmax, RandomStream};
use crate::real::Real;
use crate::sim::{ObservedCells, SimulationConfig};

/// Revealed rainfall cells `(s, t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialObservation<F> {
    n_locations: usize,
    n_days: usize,
    entries: Vec<(usize, usize, F)>,
}

impl<F: Real> PartialObservation<F> {
    pub fn new(n_locations: usize, n_days: usize, entries: Vec<(usize, usize, F)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for &(s, t, x) in &entries {
            if s >= n_locations || t >= n_days {
                return Err(Error::Dimension(format!(
                    "observation at (s={s}, t={t}) outside {n_locations}x{n_days}"
                )));
            }
            if !(x >= F::zero()) || !x.is_finite() {
                return Err(Error::Validation(format!("observation at (s={s}, t={t}) has value {x}")));
            }
            if !seen.insert((s, t)) {
                return Err(Error::Validation(format!("duplicate observation at (s={s}, t={t})")));
            }
        }
        Ok(Self {
            n_locations,
            n_days,
            entries,
        })
    }

    /// Reveals `round(fraction * S * T)` cells of `field` chosen uniformly.
    pub fn reveal(field: &RainfallField<F>, fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!("reveal fraction must lie in [0, 1], got {fraction}")));
        }
        let (n, t_len) = (field.n_locations(), field.n_days());
        let total = n * t_len;
        let k = (fraction * total as f64).round() as usize;
        let mut cells: Vec<usize> = (0..total).collect();
        let mut stream = RandomStream::new(seed, 0x7e);
        cells.shuffle(&mut stream);
        let mut chosen = cells[..k].to_vec();
        chosen.sort_unstable();
        let entries = chosen.into_iter().map(|i| (i / t_len, i % t_len, field.values()[i])).collect();
        Self::new(n, t_len, entries)
    }

    pub fn entries(&self) -> &[(usize, usize, F)] {
        &self.entries
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn reveal_fraction(&self) -> f64 {
        self.entries.len() as f64 / (self.n_locations * self.n_days).max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMethod {
    ViterbiFromY,
    ArgmaxFromZ,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UEstimate {
    /// Zero-based all-India states.
    pub u: Vec<u8>,
    pub method: UMethod,
}

/// Most probable all-India path for the aggregate series under the hidden
/// Markov model with start `lambda_hat`, transitions `lambda` and Gaussian
/// emissions. Ties go to the lower state.
pub fn infer_u_from_y<F: Real>(y: &[F], params: &ModelParams<F>) -> UEstimate {
    let t_len = y.len();
    if t_len == 0 {
        return UEstimate {
            u: Vec::new(),
            method: UMethod::ViterbiFromY,
        };
    }
    let log_a: Vec<Vec<F>> = params.lambda.rows.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
    let emit = |t: usize, k: usize| params.gauss[k].log_pdf(y[t]);
    let mut score: [F; N_GLOBAL_STATES] = std::array::from_fn(|k| params.lambda_hat[k].ln() + emit(0, k));
    let mut back = vec![[0u8; N_GLOBAL_STATES]; t_len];
    for t in 1..t_len {
        let mut next = [F::zero(); N_GLOBAL_STATES];
        for k in 0..N_GLOBAL_STATES {
            let mut best = 0;
            let mut best_v = score[0] + log_a[0][k];
            for (j, row) in log_a.iter().enumerate().skip(1) {
                let v = score[j] + row[k];
                if v > best_v {
                    best = j;
                    best_v = v;
                }
            }
            next[k] = best_v + emit(t, k);
            back[t][k] = best as u8;
        }
        score = next;
    }
    let mut u = vec![0u8; t_len];
    u[t_len - 1] = argmax(&score) as u8;
    for t in (1..t_len).rev() {
        u[t - 1] = back[t][u[t] as usize];
    }
    UEstimate {
        u,
        method: UMethod::ViterbiFromY,
    }
}

/// Local state estimates; `None` where nothing could be inferred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZEstimate {
    n_locations: usize,
    n_days: usize,
    z: Vec<Option<u8>>,
    /// Propagation rounds until the fixpoint.
    pub rounds: usize,
}

impl ZEstimate {
    pub fn get(&self, s: usize, t: usize) -> Option<u8> {
        self.z[s * self.n_days + t]
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn n_estimated(&self) -> usize {
        self.z.iter().filter(|z| z.is_some()).count()
    }
}

/// Observed cells take the state with the larger Gamma density at the
/// floored value. Estimates then spread along each location's days: in
/// every round, each unestimated day next to an estimated one takes the state
/// maximising the product of the available transition probabilities from the
/// left and into the right neighbour. Observed estimates are never revised.
pub fn estimate_z_from_partial<F: Real>(obs: &PartialObservation<F>, params: &ModelParams<F>) -> Result<ZEstimate> {
    let (n, t_len) = (obs.n_locations(), obs.n_days());
    if params.n_locations() != n {
        return Err(Error::Dimension(format!(
            "observations cover {n} locations, parameters {}",
            params.n_locations()
        )));
    }
    let floor = params.rain_floor_mm;
    let mut z: Vec<Option<u8>> = vec![None; n * t_len];
    for &(s, t, x) in obs.entries() {
        let g = &params.locations[s].gamma;
        let x = x.max(floor);
        let ll: [F; N_LOCAL_STATES] = std::array::from_fn(|k| g[k].log_pdf_unchecked(x));
        z[s * t_len + t] = Some(argmax(&ll) as u8);
    }
    let mut rounds = 0;
    loop {
        let mut updates = Vec::new();
        for s in 0..n {
            let tau = &params.locations[s].tau;
            let row = &z[s * t_len..(s + 1) * t_len];
            for t in 0..t_len {
                if row[t].is_some() {
                    continue;
                }
                let left = if t > 0 { row[t - 1] } else { None };
                let right = row.get(t + 1).copied().flatten();
                if left.is_none() && right.is_none() {
                    continue;
                }
                let w: [F; N_LOCAL_STATES] = std::array::from_fn(|k| {
                    let a = left.map_or(F::one(), |l| tau.get(l as usize, k));
                    let b = right.map_or(F::one(), |r| tau.get(k, r as usize));
                    a * b
                });
                updates.push((s * t_len + t, argmax(&w) as u8));
            }
        }
        if updates.is_empty() {
            break;
        }
        rounds += 1;
        for (i, k) in updates {
            z[i] = Some(k);
        }
    }
    Ok(ZEstimate {
        n_locations: n,
        n_days: t_len,
        z,
        rounds,
    })
}

/// `U(t) = argmax_l sum_s ln theta[s][l][Z(s, t)]` over estimated cells;
/// days without estimates take the mode of `lambda_hat`.
pub fn infer_u_from_z<F: Real>(zest: &ZEstimate, params: &ModelParams<F>) -> Result<UEstimate> {
    if params.n_locations() != zest.n_locations() {
        return Err(Error::Dimension(format!(
            "estimate covers {} locations, parameters {}",
            zest.n_locations(),
            params.n_locations()
        )));
    }
    let fallback = argmax(&params.lambda_hat) as u8;
    let u = (0..zest.n_days())
        .map(|t| {
            let mut score = [F::zero(); N_GLOBAL_STATES];
            let mut any = false;
            for (s, loc) in params.locations.iter().enumerate() {
                if let Some(k) = zest.get(s, t) {
                    any = true;
                    for (l, sc) in score.iter_mut().enumerate() {
                        *sc += loc.theta[l][k as usize].ln();
                    }
                }
            }
            if any {
                argmax(&score) as u8
            } else {
                fallback
            }
        })
        .collect();
    Ok(UEstimate {
        u,
        method: UMethod::ArgmaxFromZ,
    })
}

/// Injects the all-India estimate into `config` and turns the revealed cells
/// into a copy-through mask carrying their state estimates.
pub fn apply_conditioning<F: Real>(
    config: &SimulationConfig,
    n_locations: usize,
    u_estimate: Option<&UEstimate>,
    observed: Option<(&PartialObservation<F>, &ZEstimate)>,
) -> Result<(SimulationConfig, Option<ObservedCells<F>>)> {
    let mut out = config.clone();
    if let Some(est) = u_estimate {
        if est.u.len() != config.n_days {
            return Err(Error::Config(format!(
                "all-India estimate has {} days, simulation has {}",
                est.u.len(),
                config.n_days
            )));
        }
        out.u_override = Some(est.u.clone());
    }
    let mask = match observed {
        None => None,
        Some((obs, zest)) => {
            if obs.n_days() != config.n_days || obs.n_locations() != n_locations {
                return Err(Error::Config(format!(
                    "observations cover {}x{}, simulation is {n_locations}x{}",
                    obs.n_locations(),
                    obs.n_days(),
                    config.n_days
                )));
            }
            let mut mask = ObservedCells::new(n_locations, config.n_days);
            for &(s, t, x) in obs.entries() {
                let z = zest.get(s, t).expect("observed cells are always estimated");
                mask.insert(s, t, x, z);
            }
            Some(mask)
        }
    };
    out.validate()?;
    Ok((out, mask))
}
