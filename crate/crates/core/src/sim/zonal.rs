use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RainfallField;
use crate::latent::{LatentState, HEAVY, LIGHT, N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::mrf::ModelParams;
use crate::prob::{fit_gamma_moments, mean, sample_dirichlet, stationary_distribution, GammaParams, RandomStream, TransitionMatrix};
use crate::real::Real;
use crate::zones::ZonePartition;

use super::{
    check_observed, draw_local, finish, parameter_count, positive, u_series, ObservedCells, SimulationConfig, SimulationOutput, TAG_LOC,
    TAG_ZONE,
};

/// Parameters of one coherent zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ZoneModel<F> {
    /// Member location ids in increasing order.
    pub members: Vec<usize>,
    /// `pi[l][m][k] = P(C_t = k | C_{t-1} = l, U_t = m)`.
    pub pi: [[[F; N_LOCAL_STATES]; N_GLOBAL_STATES]; N_LOCAL_STATES],
    /// Gamma law of the zone's total rainfall in each state.
    pub gamma: [GammaParams<F>; N_LOCAL_STATES],
    /// Share of the zone's rainfall received by each member, aligned with
    /// `members`.
    pub phi: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ZoneParams<F> {
    pub zones: Vec<ZoneModel<F>>,
}

/// Zone parameters from a training mode: the zone state is the members'
/// per-day majority (ties light), `pi` comes from smoothed counts, the Gamma
/// from moments of the zone totals in each state and the shares from each
/// member's fraction of the zone total.
pub fn learn_zone_params<F: Real>(
    mode: &LatentState,
    field: &RainfallField<F>,
    partition: &ZonePartition,
    rain_floor: F,
) -> Result<ZoneParams<F>> {
    let n = field.n_locations();
    let t_len = field.n_days();
    if mode.n_locations() != n || mode.n_days() != t_len || partition.n_locations() != n {
        return Err(Error::Dimension(format!(
            "mode {}x{}, field {n}x{t_len}, partition over {} locations",
            mode.n_locations(),
            mode.n_days(),
            partition.n_locations()
        )));
    }
    let one = F::one();
    let mut zones = Vec::with_capacity(partition.n_zones());
    for k in 0..partition.n_zones() {
        let members = partition.members(k);
        let c: Vec<u8> = (0..t_len)
            .map(|t| {
                let heavy = members.iter().filter(|&&s| mode.z(s, t) == HEAVY).count();
                if 2 * heavy > members.len() {
                    HEAVY
                } else {
                    LIGHT
                }
            })
            .collect();
        let mut pi = [[[one; N_LOCAL_STATES]; N_GLOBAL_STATES]; N_LOCAL_STATES];
        for t in 1..t_len {
            pi[c[t - 1] as usize][mode.u(t) as usize][c[t] as usize] += one;
        }
        let pi = pi.map(|plane| {
            plane.map(|row| {
                let total = row[0] + row[1];
                row.map(|v| v / total)
            })
        });

        let w: Vec<F> = (0..t_len).map(|t| members.iter().map(|&s| field.get(s, t)).sum()).collect();
        let w_floor: Vec<F> = w.iter().map(|&x| x.max(rain_floor)).collect();
        let pooled = fit_gamma_moments(&w_floor).unwrap_or_else(|_| GammaParams::new(one, mean(&w_floor)).expect("positive floored mean"));
        let gamma = std::array::from_fn(|state| {
            let xs: Vec<F> = w_floor
                .iter()
                .zip(&c)
                .filter(|(_, &ck)| ck as usize == state)
                .map(|(&x, _)| x)
                .collect();
            fit_gamma_moments(&xs).unwrap_or(pooled)
        });

        let total: F = w.iter().copied().sum();
        let phi = if total > F::zero() {
            let raw: Vec<F> = members
                .iter()
                .map(|&s| field.series(s).iter().copied().sum::<F>() / total)
                .collect();
            // renormalise so rounding cannot drift the sum away from one
            let sum: F = raw.iter().copied().sum();
            raw.into_iter().map(|v| v / sum).collect()
        } else {
            vec![one / F::from_usize(members.len()).unwrap(); members.len()]
        };
        zones.push(ZoneModel { members, pi, gamma, phi });
    }
    Ok(ZoneParams { zones })
}

/// Zone states for all zones, zone-major.
fn zone_chains<F: Real>(params: &ModelParams<F>, zp: &ZoneParams<F>, u: &[u8], root: &RandomStream) -> Result<Vec<Vec<u8>>> {
    let mut out = Vec::with_capacity(zp.zones.len());
    for (k, zone) in zp.zones.iter().enumerate() {
        let mut stream = root.split(&[TAG_ZONE, k as u64, 0]);
        let start = zone_start_distribution(zone, &params.lambda_hat)?;
        let mut prev = draw_local(&mut stream, &start);
        let mut c = Vec::with_capacity(u.len());
        for &m in u {
            prev = draw_local(&mut stream, &zone.pi[prev as usize][m as usize]);
            c.push(prev);
        }
        out.push(c);
    }
    Ok(out)
}

/// Stationary law of the zone chain with the all-India state averaged out
/// under `lambda_hat`.
fn zone_start_distribution<F: Real>(zone: &ZoneModel<F>, lambda_hat: &[F]) -> Result<[F; N_LOCAL_STATES]> {
    let rows = (0..N_LOCAL_STATES)
        .map(|l| {
            (0..N_LOCAL_STATES)
                .map(|k| (0..N_GLOBAL_STATES).map(|m| lambda_hat[m] * zone.pi[l][m][k]).sum())
                .collect::<Vec<F>>()
        })
        .map(|row| {
            let total: F = row.iter().copied().sum();
            row.into_iter().map(|v| v / total).collect()
        })
        .collect();
    let pi = stationary_distribution(&TransitionMatrix::new(rows)?)?;
    Ok([pi[0], pi[1]])
}

fn check_zones<F: Real>(params: &ModelParams<F>, zp: &ZoneParams<F>, part: &ZonePartition) -> Result<()> {
    if part.n_locations() != params.n_locations() {
        return Err(Error::Dimension(format!(
            "partition covers {} locations, parameters {}",
            part.n_locations(),
            params.n_locations()
        )));
    }
    if zp.zones.len() != part.n_zones() {
        return Err(Error::Dimension(format!(
            "{} zone parameter sets for {} zones",
            zp.zones.len(),
            part.n_zones()
        )));
    }
    for (k, zone) in zp.zones.iter().enumerate() {
        if zone.members != part.members(k) || zone.phi.len() != zone.members.len() {
            return Err(Error::Dimension(format!("zone {k} parameters do not match the partition")));
        }
    }
    Ok(())
}

/// Zone states follow the zone chains; each location agrees with its zone
/// with probability `p` and draws rainfall from its own Gamma.
pub fn simulate_m5<F: Real>(
    params: &ModelParams<F>,
    zp: &ZoneParams<F>,
    partition: &ZonePartition,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    config.validate()?;
    check_zones(params, zp, partition)?;
    let n = params.n_locations();
    let t_len = config.n_days;
    check_observed(observed, n, config)?;
    let root = RandomStream::new(config.seed, u64::from(config.model));
    let u = u_series(params, config.u_override.as_ref(), t_len, &root)?;
    let c = zone_chains(params, zp, &u, &root)?;
    let p = F::cst(partition.p);

    let mut values = Vec::with_capacity(n * t_len);
    let mut z = Vec::with_capacity(n * t_len);
    for (s, loc) in params.locations.iter().enumerate() {
        let zone = &c[partition.h[s]];
        let mut stream = root.split(&[TAG_LOC, s as u64]);
        for t in 0..t_len {
            let (x, k) = match observed.and_then(|o| o.get(s, t)) {
                Some(cell) => cell,
                None => {
                    let k = if stream.bernoulli(p) { zone[t] } else { 1 - zone[t] };
                    (positive(loc.gamma[k as usize].sample(&mut stream)), k)
                }
            };
            values.push(x);
            z.push(k);
        }
    }
    let count = parameter_count(5, n, partition.n_zones());
    finish(values, z, u, n, config, count, None)
}

/// Zone rainfall `W` is drawn per zone state and split among members with
/// shares `q * phi + (1 - q) * Dirichlet(r)`; local states equal the zone
/// state.
pub fn simulate_m6<F: Real>(
    params: &ModelParams<F>,
    zp: &ZoneParams<F>,
    partition: &ZonePartition,
    config: &SimulationConfig,
    observed: Option<&ObservedCells<F>>,
) -> Result<SimulationOutput<F>> {
    config.validate()?;
    check_zones(params, zp, partition)?;
    let n = params.n_locations();
    let t_len = config.n_days;
    check_observed(observed, n, config)?;
    let root = RandomStream::new(config.seed, u64::from(config.model));
    let u = u_series(params, config.u_override.as_ref(), t_len, &root)?;
    let c = zone_chains(params, zp, &u, &root)?;
    let q = F::cst(config.q);
    let r = F::cst(config.dirichlet_r);

    let mut values = vec![F::zero(); n * t_len];
    let mut z = vec![0u8; n * t_len];
    let mut zone_rain = Vec::with_capacity(zp.zones.len());
    for (k, zone) in zp.zones.iter().enumerate() {
        let mut stream = root.split(&[TAG_ZONE, k as u64, 1]);
        let mut w_series = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let state = c[k][t];
            let w = positive(zone.gamma[state as usize].sample(&mut stream));
            let noise = sample_dirichlet(&mut stream, zone.members.len(), r);
            for ((&s, &phi), &g) in zone.members.iter().zip(&zone.phi).zip(&noise) {
                let share = q * phi + (F::one() - q) * g;
                values[s * t_len + t] = share * w;
                z[s * t_len + t] = state;
            }
            w_series.push(w);
        }
        zone_rain.push(w_series);
    }
    if let Some(obs) = observed {
        for s in 0..n {
            for t in 0..t_len {
                if let Some((x, _)) = obs.get(s, t) {
                    values[s * t_len + t] = x;
                }
            }
        }
    }
    let count = parameter_count(6, n, partition.n_zones());
    finish(values, z, u, n, config, count, Some(zone_rain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DayLabel;

    fn field(series: &[Vec<f64>]) -> RainfallField<f64> {
        RainfallField::from_series(series, DayLabel::monsoon_sequence(2000, series[0].len())).unwrap()
    }

    #[test]
    fn singleton_zone_shares() {
        let f = field(&[vec![1.0, 5.0, 0.0, 7.0]]);
        let mode = LatentState::new(1, 4, vec![1, 0, 1, 0], vec![2; 4]).unwrap();
        let part = ZonePartition::from_assignments(vec![0], &mode, 0.9, 1.0).unwrap();
        let zp = learn_zone_params(&mode, &f, &part, 0.1).unwrap();
        assert_eq!(zp.zones[0].phi, vec![1.0]);
    }

    #[test]
    fn equal_members_split_evenly() {
        let s = vec![1.0, 5.0, 0.0, 7.0];
        let f = field(&[s.clone(), s]);
        let mode = LatentState::new(2, 4, vec![1, 0, 1, 0, 1, 0, 1, 0], vec![2; 4]).unwrap();
        let part = ZonePartition::from_assignments(vec![0, 0], &mode, 0.9, 1.0).unwrap();
        let zp = learn_zone_params(&mode, &f, &part, 0.1).unwrap();
        assert_eq!(zp.zones[0].phi, vec![0.5, 0.5]);
        // zone states alternate, so every transition is light->heavy or heavy->light
        assert!((zp.zones[0].pi[1][2][0] - 3.0 / 4.0).abs() < 1e-15);
    }
}
