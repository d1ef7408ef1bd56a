use log::warn;

use crate::error::Result;
use crate::latent::N_LOCAL_STATES;
use crate::mrf::{LocationParams, ModelParams};
use crate::prob::RandomStream;
use crate::real::Real;

use super::{
    check_observed, draw_local, finish, parameter_count, positive, u_series, ObservedCells, SimulationConfig, SimulationOutput, TAG_LOC,
};

/// Independent states from the stationary marginal `tau_hat`.
pub fn simulate_m1<F: Real>(
    params: &ModelParams<F>,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    run_local(params, config, observed, false, |loc, _, _, _| marginal(loc))
}

/// Markov chain per location: `tau_hat` on day one, then `tau`.
pub fn simulate_m2<F: Real>(
    params: &ModelParams<F>,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    run_local(params, config, observed, false, |loc, prev, _, _| match prev {
        None => marginal(loc),
        Some(l) => row2(loc.tau.row(l as usize)),
    })
}

/// States drawn from `theta` given the all-India series.
pub fn simulate_m3<F: Real>(
    params: &ModelParams<F>,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    run_local(params, config, observed, true, |loc, _, u, _| loc.theta[u as usize])
}

/// States drawn from `pi` given the previous state and the all-India state;
/// the previous state of day one is drawn from `tau_hat`.
pub fn simulate_m4<F: Real>(
    params: &ModelParams<F>,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    run_local(params, config, observed, true, |loc, prev, u, stream| {
        let l = prev.unwrap_or_else(|| draw_local(stream, &marginal(loc)));
        loc.pi[l as usize][u as usize]
    })
}

fn marginal<F: Real>(loc: &LocationParams<F>) -> [F; N_LOCAL_STATES] {
    row2(&loc.tau_hat)
}

fn row2<F: Real>(row: &[F]) -> [F; N_LOCAL_STATES] {
    [row[0], row[1]]
}

fn run_local<F: Real>(
    params: &ModelParams<F>,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
    uses_u: bool,
    next: impl Fn(&LocationParams<F>, Option<u8>, u8, &mut RandomStream) -> [F; N_LOCAL_STATES],
) -> Result<SimulationOutput<F>> {
    config.validate()?;
    let n = params.n_locations();
    let t_len = config.n_days;
    check_observed(observed, n, config)?;
    if !uses_u && config.u_override.is_some() {
        warn!("model {} cannot use an all-India series; override ignored", config.model);
    }
    let root = RandomStream::new(config.seed, u64::from(config.model));
    // models without U still simulate the chain for the latent output
    let u_override = config.u_override.as_ref().filter(|_| uses_u);
    let u = u_series(params, u_override, t_len, &root)?;

    let mut values = Vec::with_capacity(n * t_len);
    let mut z = Vec::with_capacity(n * t_len);
    for (s, loc) in params.locations.iter().enumerate() {
        let mut stream = root.split(&[TAG_LOC, s as u64]);
        let mut prev = None;
        for t in 0..t_len {
            let (x, k) = match observed.and_then(|o| o.get(s, t)) {
                Some(cell) => cell,
                None => {
                    let probs = next(loc, prev, u[t], &mut stream);
                    let k = draw_local(&mut stream, &probs);
                    (positive(loc.gamma[k as usize].sample(&mut stream)), k)
                }
            };
            values.push(x);
            z.push(k);
            prev = Some(k);
        }
    }
    finish(values, z, u, n, config, parameter_count(config.model, n, 0), None)
}
