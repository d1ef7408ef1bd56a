use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{NeighborSet, RainfallField};
use crate::latent::{LatentState, N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::prob::{fit_gamma_moments, fit_gaussian, RandomStream};
use crate::real::Real;

use super::params::{extract_map_params, MapEstimate};
use super::potentials::{build_potentials, Emissions, PotentialTable};
use super::{floored, TrainConfig};

const TAG_Z: u64 = 1;
const TAG_U: u64 = 2;

/// Occupancy summary of one sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub sweep: usize,
    pub n_heavy: usize,
    pub u_counts: [usize; N_GLOBAL_STATES],
}

#[derive(Debug, Clone)]
pub struct GibbsOutput<F> {
    /// Per-variable marginal mode over the collected samples, relabelled so
    /// state 1 is the heavier Gamma at every location.
    pub mode: LatentState,
    pub map: MapEstimate<F>,
    pub trace: Vec<TraceEntry>,
    /// Emission parameters after the final sweep.
    pub emissions: Emissions<F>,
}

/// Full sweeps over the field: every `Z(s, t)` in raster order, then every
/// `U(t)`. Emission parameters are refitted by moments after each sweep;
/// every `thin`-th sweep after `burn_in` is collected.
pub fn run_gibbs<F: Real>(
    field: &RainfallField<F>,
    nb: &NeighborSet,
    init: &LatentState,
    init_emissions: &Emissions<F>,
    config: &TrainConfig,
) -> Result<GibbsOutput<F>> {
    config.validate()?;
    let n = field.n_locations();
    let t_len = field.n_days();
    if init.n_locations() != n || init.n_days() != t_len {
        return Err(Error::Dimension(format!(
            "initial state is {}x{}, field is {n}x{t_len}",
            init.n_locations(),
            init.n_days()
        )));
    }
    let mut pots = build_potentials(field, nb, config, init_emissions.clone())?;
    let floor = F::cst(config.rain_floor_mm);
    let xs = floored(field, floor);
    let y = field.aggregate();
    let root = RandomStream::new(config.seed, 0);

    let mut state = init.clone();
    let mut z_counts = vec![[0u32; N_LOCAL_STATES]; n * t_len];
    let mut u_counts = vec![[0u32; N_GLOBAL_STATES]; t_len];
    let mut data = cache_data(&pots, &xs, n, t_len);
    let mut trace = Vec::with_capacity(config.total_sweeps());
    let mut collected = 0usize;

    for sweep in 0..config.total_sweeps() {
        let key = sweep as u64;
        for s in 0..n {
            for t in 0..t_len {
                let probs = pots.conditional_z_with(s, t, &state, data[s * t_len + t]);
                let mut sub = root.split(&[TAG_Z, key, s as u64, t as u64]);
                let k = draw(&mut sub, &probs);
                state.set_z(s, t, k);
            }
        }
        for t in 0..t_len {
            let probs = pots.conditional_u_with(t, &state, y.values()[t]);
            let mut sub = root.split(&[TAG_U, key, t as u64]);
            let l = draw(&mut sub, &probs);
            state.set_u(t, l);
        }

        refit_emissions(&mut pots.emissions, &state, &xs, y.values());
        data = cache_data(&pots, &xs, n, t_len);

        let mut u_tally = [0usize; N_GLOBAL_STATES];
        for &l in state.u_series() {
            u_tally[l as usize] += 1;
        }
        trace.push(TraceEntry {
            sweep,
            n_heavy: state.z_values().iter().filter(|&&k| k == 0).count(),
            u_counts: u_tally,
        });

        let after = sweep + 1;
        if after > config.burn_in && (after - config.burn_in).is_multiple_of(config.thin) {
            collected += 1;
            for (c, &k) in z_counts.iter_mut().zip(state.z_values()) {
                c[k as usize] += 1;
            }
            for (c, &l) in u_counts.iter_mut().zip(state.u_series()) {
                c[l as usize] += 1;
            }
        }
    }
    debug_assert_eq!(collected, config.n_samples);

    let z_mode: Vec<u8> = z_counts.iter().map(mode_of).collect();
    let u_mode: Vec<u8> = u_counts.iter().map(mode_of).collect();
    let mode = LatentState::new(n, t_len, z_mode, u_mode)?;
    let mut map = extract_map_params(&mode, field, floor)?;
    let total = F::from_usize(collected).unwrap();
    map.params.u_posterior = Some(u_counts.iter().map(|c| c.map(|v| F::from_u32(v).unwrap() / total)).collect());
    Ok(GibbsOutput {
        mode: map.mode.clone(),
        map,
        trace,
        emissions: pots.emissions,
    })
}

fn cache_data<F: Real>(pots: &PotentialTable<F>, xs: &[F], n: usize, t_len: usize) -> Vec<[F; N_LOCAL_STATES]> {
    let mut out = Vec::with_capacity(n * t_len);
    for s in 0..n {
        for t in 0..t_len {
            out.push(pots.local_data_loglik(s, xs[s * t_len + t]));
        }
    }
    out
}

fn draw<F: Real, const N: usize>(stream: &mut RandomStream, probs: &[F; N]) -> u8 {
    let u: F = stream.unit();
    let mut acc = F::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u8;
        }
    }
    (N - 1) as u8
}

/// Index of the largest count; ties go to the lower index.
fn mode_of<const N: usize>(counts: &[u32; N]) -> u8 {
    let mut best = 0;
    for i in 1..N {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    best as u8
}

/// Moment refit of every emission from the current occupancy. Cells with
/// fewer than two members or no spread keep their previous parameters.
fn refit_emissions<F: Real>(em: &mut Emissions<F>, state: &LatentState, xs: &[F], y: &[F]) {
    let t_len = state.n_days();
    let mut members: Vec<F> = Vec::with_capacity(t_len);
    for (s, gamma) in em.gamma.iter_mut().enumerate() {
        let series = &xs[s * t_len..(s + 1) * t_len];
        for (k, g) in gamma.iter_mut().enumerate() {
            members.clear();
            members.extend(
                series
                    .iter()
                    .zip(state.z_series(s))
                    .filter(|(_, &z)| z as usize == k)
                    .map(|(&x, _)| x),
            );
            if let Ok(fit) = fit_gamma_moments(&members) {
                *g = fit;
            }
        }
    }
    for (l, g) in em.gauss.iter_mut().enumerate() {
        members.clear();
        members.extend(y.iter().zip(state.u_series()).filter(|(_, &u)| u as usize == l).map(|(&v, _)| v));
        if let Ok(fit) = fit_gaussian(&members) {
            *g = fit;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DayLabel, GridManifest};
    use crate::mrf::em_initialize;

    fn small_field() -> RainfallField<f64> {
        let series: Vec<Vec<f64>> = (0..4)
            .map(|s| {
                (0..30)
                    .map(|t| {
                        if (t / 5 + s) % 2 == 0 {
                            15.0 + ((t * 7 + s) % 5) as f64
                        } else {
                            0.3 + 0.1 * ((t + s) % 3) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        RainfallField::from_series(&series, DayLabel::monsoon_sequence(2001, 30)).unwrap()
    }

    #[test]
    fn single_sample_mode_equals_sample() {
        let f = small_field();
        let nb = GridManifest::full(2, 2).neighbor_sets();
        let cfg = TrainConfig {
            burn_in: 0,
            n_samples: 1,
            thin: 1,
            ..TrainConfig::default()
        };
        let init = em_initialize(&f, &cfg).unwrap();
        let out = run_gibbs(&f, &nb, &init.state, &init.emissions, &cfg).unwrap();
        assert_eq!(out.trace.len(), 1);
        let post = out.map.params.u_posterior.as_ref().unwrap();
        for (t, row) in post.iter().enumerate() {
            assert_eq!(row[out.mode.u(t) as usize], 1.0);
        }
    }

    #[test]
    fn zero_samples_is_a_config_error() {
        let f = small_field();
        let nb = GridManifest::full(2, 2).neighbor_sets();
        let cfg = TrainConfig {
            n_samples: 0,
            ..TrainConfig::default()
        };
        let init = LatentState::constant(4, 30, 0, 0);
        let em = em_initialize(&f, &TrainConfig::default()).unwrap().emissions;
        assert!(matches!(run_gibbs(&f, &nb, &init, &em, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn same_seed_same_result() {
        let f = small_field();
        let nb = GridManifest::full(2, 2).neighbor_sets();
        let cfg = TrainConfig {
            burn_in: 5,
            n_samples: 5,
            thin: 2,
            seed: 11,
            ..TrainConfig::default()
        };
        let init = em_initialize(&f, &cfg).unwrap();
        let a = run_gibbs(&f, &nb, &init.state, &init.emissions, &cfg).unwrap();
        let b = run_gibbs(&f, &nb, &init.state, &init.emissions, &cfg).unwrap();
        assert_eq!(a.mode, b.mode);
        assert_eq!(a.map.params, b.map.params);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn mode_ties_go_to_lower_index() {
        assert_eq!(mode_of(&[3, 3]), 0);
        assert_eq!(mode_of(&[1, 2, 2]), 1);
    }
}
