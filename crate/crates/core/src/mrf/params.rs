use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RainfallField;
use crate::latent::{LatentState, N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::prob::{
    fit_gamma_moments, fit_gaussian, mean, population_sd, stationary_distribution, GammaParams, GaussianParams, TransitionMatrix,
};
use crate::real::Real;

use super::em::exponential_fallback;

pub const PARAMS_SCHEMA_VERSION: u32 = 1;

/// Per-location simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct LocationParams<F> {
    /// Gamma rainfall distribution for each local state.
    pub gamma: [GammaParams<F>; N_LOCAL_STATES],
    /// Local state transitions `tau[l][k] = P(Z_t = k | Z_{t-1} = l)`.
    pub tau: TransitionMatrix<F>,
    /// Stationary distribution of `tau`.
    pub tau_hat: Vec<F>,
    /// `theta[l][k] = P(Z_t = k | U_t = l)`.
    pub theta: [[F; N_LOCAL_STATES]; N_GLOBAL_STATES],
    /// `pi[l][m][k] = P(Z_t = k | Z_{t-1} = l, U_t = m)`.
    pub pi: [[[F; N_LOCAL_STATES]; N_GLOBAL_STATES]; N_LOCAL_STATES],
}

/// Everything learned by training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ModelParams<F> {
    pub locations: Vec<LocationParams<F>>,
    /// All-India state transitions.
    pub lambda: TransitionMatrix<F>,
    pub lambda_hat: Vec<F>,
    /// Gaussian law of the daily aggregate for each all-India state.
    pub gauss: [GaussianParams<F>; N_GLOBAL_STATES],
    /// Per-day posterior marginals of `U` from the collected Gibbs samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_posterior: Option<Vec<[F; N_GLOBAL_STATES]>>,
    pub rain_floor_mm: F,
}

impl<F: Real> ModelParams<F> {
    pub fn n_locations(&self) -> usize {
        self.locations.len()
    }

    /// Checks every probability table is stochastic and strictly positive.
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, row: &[F]| -> Result<()> {
            let total = row.iter().copied().sum::<F>();
            if (total - F::one()).abs().as_f64() > F::ROW_TOL || row.iter().any(|&p| !(p > F::zero())) {
                return Err(Error::Validation(format!("{name} row {row:?} is not a positive distribution")));
            }
            Ok(())
        };
        self.lambda.validate()?;
        for row in &self.lambda.rows {
            check("lambda", row)?;
        }
        check("lambda_hat", &self.lambda_hat)?;
        if self.lambda.n_states() != N_GLOBAL_STATES {
            return Err(Error::Dimension("lambda must be 3x3".into()));
        }
        for (s, loc) in self.locations.iter().enumerate() {
            loc.tau.validate()?;
            if loc.tau.n_states() != N_LOCAL_STATES {
                return Err(Error::Dimension(format!("tau at location {s} must be 2x2")));
            }
            for row in &loc.tau.rows {
                check("tau", row)?;
            }
            check("tau_hat", &loc.tau_hat)?;
            for row in &loc.theta {
                check("theta", row)?;
            }
            for plane in &loc.pi {
                for row in plane {
                    check("pi", row)?;
                }
            }
        }
        Ok(())
    }
}

/// MAP parameters together with the relabelled mode they were computed from.
#[derive(Debug, Clone)]
pub struct MapEstimate<F> {
    pub params: ModelParams<F>,
    /// Input mode after enforcing the label convention (state 1 has the larger
    /// Gamma mean at every location).
    pub mode: LatentState,
    /// `(location, state)` cells whose Gamma fell back to the pooled fit.
    pub pooled_fallbacks: Vec<(usize, u8)>,
    /// Locations whose labels were swapped.
    pub swapped: Vec<usize>,
}

/// Count-based MAP estimates with add-one smoothing, Gamma fits by moments
/// over each state's days and Gaussian fits over each all-India state's days.
pub fn extract_map_params<F: Real>(mode: &LatentState, field: &RainfallField<F>, rain_floor: F) -> Result<MapEstimate<F>> {
    if mode.n_locations() != field.n_locations() || mode.n_days() != field.n_days() {
        return Err(Error::Dimension(format!(
            "mode is {}x{}, field is {}x{}",
            mode.n_locations(),
            mode.n_days(),
            field.n_locations(),
            field.n_days()
        )));
    }
    let mut mode = mode.clone();
    let n_days = field.n_days();
    let mut pooled_fallbacks = Vec::new();
    let mut swapped = Vec::new();
    let mut gammas = Vec::with_capacity(field.n_locations());
    for s in 0..field.n_locations() {
        let xs: Vec<F> = field.series(s).iter().map(|&x| x.max(rain_floor)).collect();
        let mut g = fit_state_gammas(&xs, mode.z_series(s), |k| pooled_fallbacks.push((s, k)));
        if g[0].mean() < g[1].mean() {
            mode.swap_local_labels(s);
            g.swap(0, 1);
            swapped.push(s);
            for fb in pooled_fallbacks.iter_mut().filter(|fb| fb.0 == s) {
                fb.1 = 1 - fb.1;
            }
        }
        gammas.push(g);
    }

    let one = F::one();
    let mut locations = Vec::with_capacity(field.n_locations());
    for (s, gamma) in gammas.into_iter().enumerate() {
        let z = mode.z_series(s);
        let mut tau = [[one; N_LOCAL_STATES]; N_LOCAL_STATES];
        let mut theta = [[one; N_LOCAL_STATES]; N_GLOBAL_STATES];
        let mut pi = [[[one; N_LOCAL_STATES]; N_GLOBAL_STATES]; N_LOCAL_STATES];
        for t in 0..n_days {
            let k = z[t] as usize;
            let m = mode.u(t) as usize;
            theta[m][k] += one;
            if t > 0 {
                let l = z[t - 1] as usize;
                tau[l][k] += one;
                pi[l][m][k] += one;
            }
        }
        let tau = TransitionMatrix::from_counts(&tau.map(|r| r.to_vec()))?;
        let tau_hat = stationary_distribution(&tau)?;
        locations.push(LocationParams {
            gamma,
            tau,
            tau_hat,
            theta: theta.map(normalize),
            pi: pi.map(|plane| plane.map(normalize)),
        });
    }

    let mut lambda = [[one; N_GLOBAL_STATES]; N_GLOBAL_STATES];
    for t in 1..n_days {
        lambda[mode.u(t - 1) as usize][mode.u(t) as usize] += one;
    }
    let lambda = TransitionMatrix::from_counts(&lambda.map(|r| r.to_vec()))?;
    let lambda_hat = stationary_distribution(&lambda)?;

    let y = field.aggregate();
    let gauss = fit_gauss_pooled_fallback(y.values(), mode.u_series());

    let params = ModelParams {
        locations,
        lambda,
        lambda_hat,
        gauss,
        u_posterior: None,
        rain_floor_mm: rain_floor,
    };
    Ok(MapEstimate {
        params,
        mode,
        pooled_fallbacks,
        swapped,
    })
}

fn normalize<F: Real, const N: usize>(row: [F; N]) -> [F; N] {
    let total = row.iter().copied().sum::<F>();
    row.map(|c| c / total)
}

/// Gamma per state by moments; a state with fewer than two days or zero
/// spread uses the fit over the whole series.
pub(crate) fn fit_state_gammas<F: Real>(xs: &[F], labels: &[u8], mut on_fallback: impl FnMut(u8)) -> [GammaParams<F>; N_LOCAL_STATES] {
    let pooled = fit_gamma_moments(xs).unwrap_or_else(|_| exponential_fallback(mean(xs)));
    std::array::from_fn(|k| {
        let members: Vec<F> = xs.iter().zip(labels).filter(|(_, &z)| z as usize == k).map(|(&x, _)| x).collect();
        fit_gamma_moments(&members).unwrap_or_else(|_| {
            on_fallback(k as u8);
            pooled
        })
    })
}

fn fit_gauss_pooled_fallback<F: Real>(y: &[F], u: &[u8]) -> [GaussianParams<F>; N_GLOBAL_STATES] {
    let pooled = fit_gaussian(y).unwrap_or_else(|_| {
        let sd = population_sd(y);
        GaussianParams::new(mean(y), if sd > F::zero() { sd } else { F::one() }).expect("positive fallback sd")
    });
    std::array::from_fn(|l| {
        let members: Vec<F> = y.iter().zip(u).filter(|(_, &k)| k as usize == l).map(|(&v, _)| v).collect();
        fit_gaussian(&members).unwrap_or(pooled)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DayLabel;

    fn field(series: &[Vec<f64>]) -> RainfallField<f64> {
        RainfallField::from_series(series, DayLabel::monsoon_sequence(2000, series[0].len())).unwrap()
    }

    #[test]
    fn hand_counted_transitions() {
        // Z = [1,1,2,2,1] (zero-based [0,0,1,1,0]); rainfall tracks the state
        let f = field(&[vec![20.0, 25.0, 0.5, 1.0, 18.0]]);
        let mode = LatentState::new(1, 5, vec![0, 0, 1, 1, 0], vec![0, 0, 1, 1, 0]).unwrap();
        let est = extract_map_params(&mode, &f, 0.1).unwrap();
        let tau = &est.params.locations[0].tau;
        for l in 0..2 {
            for k in 0..2 {
                assert!((tau.get(l, k) - 0.5).abs() < 1e-15);
            }
        }
        est.params.validate().unwrap();
    }

    #[test]
    fn all_heavy_location_has_uniform_second_row() {
        let f = field(&[vec![20.0, 25.0, 30.0, 22.0]]);
        let mode = LatentState::new(1, 4, vec![0; 4], vec![0; 4]).unwrap();
        let est = extract_map_params(&mode, &f, 0.1).unwrap();
        let tau = &est.params.locations[0].tau;
        assert_eq!(tau.row(1), &[0.5, 0.5]);
        // 3 heavy->heavy transitions plus smoothing
        assert!((tau.get(0, 0) - 4.0 / 5.0).abs() < 1e-15);
        // light state has no days: pooled fallback
        assert_eq!(est.pooled_fallbacks, vec![(0, 1)]);
    }

    #[test]
    fn theta_smoothed_count() {
        for n in [1usize, 5, 50] {
            let xs: Vec<f64> = (0..n).map(|t| 10.0 + t as f64).collect();
            let mode = LatentState::new(1, n, vec![0; n], vec![0; n]).unwrap();
            let est = extract_map_params(&mode, &field(&[xs]), 0.1).unwrap();
            let theta = est.params.locations[0].theta;
            let expected = (n as f64 + 1.0) / (n as f64 + 2.0);
            assert!((theta[0][0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn label_convention_swaps_states() {
        // state "1" holds the dry days: must be swapped
        let f = field(&[vec![0.5, 0.7, 20.0, 30.0, 0.3, 25.0]]);
        let mode = LatentState::new(1, 6, vec![0, 0, 1, 1, 0, 1], vec![2; 6]).unwrap();
        let est = extract_map_params(&mode, &f, 0.1).unwrap();
        assert_eq!(est.swapped, vec![0]);
        assert_eq!(est.mode.z_series(0), &[1, 1, 0, 0, 1, 0]);
        let g = est.params.locations[0].gamma;
        assert!(g[0].mean() >= g[1].mean());
    }

    #[test]
    fn pi_counts_condition_on_u() {
        let f = field(&[vec![20.0, 25.0, 0.5, 1.0, 18.0, 0.2]]);
        let mode = LatentState::new(1, 6, vec![0, 0, 1, 1, 0, 1], vec![0, 0, 1, 1, 0, 1]).unwrap();
        let est = extract_map_params(&mode, &f, 0.1).unwrap();
        let pi = est.params.locations[0].pi;
        // (l=heavy, m=active): one heavy->heavy at t=1 -> (1+1)/(2+1)
        assert!((pi[0][0][0] - 2.0 / 3.0).abs() < 1e-15);
        // (l=light, m=break): light->light at t=3 -> 2/3
        assert!((pi[1][1][1] - 2.0 / 3.0).abs() < 1e-15);
        // unseen (l=light, m=normal): uniform
        assert_eq!(pi[1][2], [0.5, 0.5]);
    }
}
