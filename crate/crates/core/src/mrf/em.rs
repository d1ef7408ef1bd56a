use log::warn;

use crate::error::Result;
use crate::grid::RainfallField;
use crate::latent::{LatentState, ACTIVE, BREAK, HEAVY, LIGHT, NORMAL, N_GLOBAL_STATES};
use crate::prob::{fit_gamma_weighted, fit_gaussian, mean, population_sd, GammaParams, GaussianParams};
use crate::real::Real;

use super::potentials::Emissions;
use super::{floored, TrainConfig};

/// Initial labelling from independent per-location mixtures.
#[derive(Debug, Clone)]
pub struct EmInit<F> {
    pub state: LatentState,
    pub emissions: Emissions<F>,
    /// Locations whose (floored) series has fewer than two distinct values.
    pub degenerate: Vec<usize>,
    /// Locations where EM hit `em_max_iter` before the tolerance.
    pub unconverged: Vec<usize>,
}

struct MixtureFit<F> {
    components: [GammaParams<F>; 2],
    labels: Vec<u8>,
    converged: bool,
}

/// Ignores every spatial, temporal and scale edge: fits a two-component Gamma
/// mixture per location, and a three-component Gaussian mixture to the daily
/// aggregate started from its terciles. The component with the highest mean is
/// the active state, the lowest the break state, the middle one normal.
pub fn em_initialize<F: Real>(field: &RainfallField<F>, config: &TrainConfig) -> Result<EmInit<F>> {
    config.validate()?;
    let n = field.n_locations();
    let t_len = field.n_days();
    let floor = F::cst(config.rain_floor_mm);
    let xs = floored(field, floor);

    let mut z = Vec::with_capacity(n * t_len);
    let mut gamma = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    let mut unconverged = Vec::new();
    for s in 0..n {
        let series = &xs[s * t_len..(s + 1) * t_len];
        match fit_mixture(series, config.em_max_iter, F::cst(config.em_tol)) {
            Some(fit) => {
                if !fit.converged {
                    warn!("EM at location {s} stopped after {} iterations", config.em_max_iter);
                    unconverged.push(s);
                }
                z.extend_from_slice(&fit.labels);
                gamma.push(fit.components);
            }
            None => {
                warn!("location {s} has a degenerate rainfall series; all days set to state 1");
                degenerate.push(s);
                z.extend(std::iter::repeat_n(HEAVY, t_len));
                let g = exponential_fallback(mean(series).max(floor));
                gamma.push([g, g]);
            }
        }
    }

    let y = field.aggregate();
    let u = refine_u_mixture(y.values(), &tercile_states(y.values()), config.em_max_iter, F::cst(config.em_tol));
    let gauss = fit_gauss_by_state(y.values(), &u);
    let state = LatentState::new(n, t_len, z, u)?;
    Ok(EmInit {
        state,
        emissions: Emissions { gamma, gauss },
        degenerate,
        unconverged,
    })
}

pub(crate) fn exponential_fallback<F: Real>(mean: F) -> GammaParams<F> {
    GammaParams::new(F::one(), mean).expect("positive fallback mean")
}

/// Two-component Gamma mixture with moment-matching M-steps. Returns `None`
/// for series with fewer than two distinct values.
fn fit_mixture<F: Real>(xs: &[F], max_iter: usize, tol: F) -> Option<MixtureFit<F>> {
    let n = xs.len();
    let first = *xs.first()?;
    if xs.iter().all(|&x| x == first) {
        return None;
    }
    // start from a rank split: upper half heavy
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap().then(a.cmp(&b)));
    let mut resp = vec![[F::zero(); 2]; n];
    for (rank, &i) in order.iter().enumerate() {
        let heavy = rank >= n / 2;
        resp[i] = if heavy { [F::one(), F::zero()] } else { [F::zero(), F::one()] };
    }

    let mut components = None;
    let mut prev_ll = F::neg_infinity();
    let mut converged = false;
    for _ in 0..max_iter {
        let Some(step) = m_step(xs, &resp) else { break };
        let (weights, comps) = step;
        let mut ll = F::zero();
        for (i, &x) in xs.iter().enumerate() {
            let a = weights[0].ln() + comps[0].log_pdf_unchecked(x);
            let b = weights[1].ln() + comps[1].log_pdf_unchecked(x);
            let m = a.max(b);
            let total = m + ((a - m).exp() + (b - m).exp()).ln();
            resp[i] = [(a - total).exp(), (b - total).exp()];
            ll += total;
        }
        components = Some(comps);
        if (ll - prev_ll).abs() <= tol * (F::one() + ll.abs()) {
            converged = true;
            break;
        }
        prev_ll = ll;
    }
    let mut components = match components {
        Some(c) => c,
        None => {
            // even the rank split cannot be fitted (e.g. one distinct value per half)
            let g = exponential_fallback(mean(xs));
            [g, g]
        }
    };
    let mut labels: Vec<u8> = resp.iter().map(|r| if r[0] >= r[1] { HEAVY } else { LIGHT }).collect();
    if components[0].mean() < components[1].mean() {
        components.swap(0, 1);
        labels.iter_mut().for_each(|k| *k = 1 - *k);
    }
    Some(MixtureFit {
        components,
        labels,
        converged,
    })
}

fn m_step<F: Real>(xs: &[F], resp: &[[F; 2]]) -> Option<([F; 2], [GammaParams<F>; 2])> {
    let n = F::from_usize(xs.len()).unwrap();
    let mut weights = [F::zero(); 2];
    let mut comps = Vec::with_capacity(2);
    for k in 0..2 {
        let w: Vec<F> = resp.iter().map(|r| r[k]).collect();
        let total = w.iter().copied().sum::<F>();
        weights[k] = total / n;
        if !(weights[k] > F::cst(1e-12)) {
            return None;
        }
        comps.push(fit_gamma_weighted(xs, &w).ok()?);
    }
    Some((weights, [comps[0], comps[1]]))
}

/// Rank terciles of `y`: lowest third break, middle normal, top active.
/// Ties are ranked by day index.
pub(crate) fn tercile_states<F: Real>(y: &[F]) -> Vec<u8> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap().then(a.cmp(&b)));
    let mut u = vec![NORMAL; n];
    for (rank, &t) in order.iter().enumerate() {
        u[t] = match 3 * rank / n.max(1) {
            0 => BREAK,
            1 => NORMAL,
            _ => ACTIVE,
        };
    }
    u
}

/// Three-component Gaussian mixture EM on `y` from the hard labelling `init`.
/// Returns `init` unchanged if a component empties.
pub(crate) fn refine_u_mixture<F: Real>(y: &[F], init: &[u8], max_iter: usize, tol: F) -> Vec<u8> {
    let n = y.len();
    let pooled = population_sd(y);
    if n < N_GLOBAL_STATES || !(pooled > F::zero()) {
        return init.to_vec();
    }
    let sd_floor = pooled * F::cst(1e-3);
    let mut resp: Vec<[F; N_GLOBAL_STATES]> = init
        .iter()
        .map(|&l| std::array::from_fn(|k| if k == l as usize { F::one() } else { F::zero() }))
        .collect();
    let mut comps = [(F::zero(), F::zero(), F::one()); N_GLOBAL_STATES];
    let mut prev_ll = F::neg_infinity();
    for _ in 0..max_iter {
        for (k, comp) in comps.iter_mut().enumerate() {
            let w: F = resp.iter().map(|r| r[k]).sum();
            if !(w > F::cst(1e-9)) {
                return init.to_vec();
            }
            let mu = resp.iter().zip(y).map(|(r, &v)| r[k] * v).sum::<F>() / w;
            let var = resp.iter().zip(y).map(|(r, &v)| r[k] * (v - mu) * (v - mu)).sum::<F>() / w;
            *comp = (w / F::from_usize(n).unwrap(), mu, var.sqrt().max(sd_floor));
        }
        let mut ll = F::zero();
        for (r, &v) in resp.iter_mut().zip(y) {
            let lw: [F; N_GLOBAL_STATES] = std::array::from_fn(|k| {
                let (w, mu, sd) = comps[k];
                let z = (v - mu) / sd;
                w.ln() - sd.ln() - F::cst(0.5) * z * z
            });
            let m = lw.iter().copied().fold(F::neg_infinity(), F::max);
            let total = m + lw.iter().map(|&a| (a - m).exp()).sum::<F>().ln();
            *r = lw.map(|a| (a - total).exp());
            ll += total;
        }
        if (ll - prev_ll).abs() <= tol * (F::one() + ll.abs()) {
            break;
        }
        prev_ll = ll;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| comps[a].1.partial_cmp(&comps[b].1).unwrap());
    let mut state_of = [NORMAL; N_GLOBAL_STATES];
    state_of[order[0]] = BREAK;
    state_of[order[1]] = NORMAL;
    state_of[order[2]] = ACTIVE;
    resp.iter().map(|r| state_of[crate::prob::argmax(r)]).collect()
}

/// Gaussian per all-India state; states with fewer than two distinct days
/// borrow the pooled spread.
pub(crate) fn fit_gauss_by_state<F: Real>(y: &[F], u: &[u8]) -> [GaussianParams<F>; N_GLOBAL_STATES] {
    let pooled_mean = mean(y);
    let pooled_sd = population_sd(y);
    let fallback_sd = if pooled_sd > F::zero() { pooled_sd } else { F::one() };
    std::array::from_fn(|l| {
        let members: Vec<F> = y.iter().zip(u).filter(|(_, &k)| k as usize == l).map(|(&v, _)| v).collect();
        fit_gaussian(&members).unwrap_or_else(|_| {
            let m = if members.is_empty() { pooled_mean } else { mean(&members) };
            GaussianParams::new(m, fallback_sd).expect("positive fallback sd")
        })
    })
}
