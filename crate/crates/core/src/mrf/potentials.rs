use crate::error::{Error, Result};
use crate::grid::{NeighborSet, RainfallField};
use crate::latent::{LatentState, N_GLOBAL_STATES, N_LOCAL_STATES};
use crate::prob::{log_normalize, pearson_correlation, GammaParams, GaussianParams};
use crate::real::Real;

use super::TrainConfig;

/// Data-edge parameters: Gamma per (location, local state) and Gaussian per
/// all-India state.
#[derive(Debug, Clone, PartialEq)]
pub struct Emissions<F> {
    pub gamma: Vec<[GammaParams<F>; N_LOCAL_STATES]>,
    pub gauss: [GaussianParams<F>; N_GLOBAL_STATES],
}

/// Potential functions of the field.
///
/// Every potential takes a high value when its two endpoints agree and a low
/// value otherwise; only the ratio matters. Spatial edges use
/// `exp(corr) : 1`, scale edges `exp(corr(X_s, Y)) : 1`, temporal edges the
/// configured ratios. A scale edge "agrees" when the local and all-India state
/// indices are equal, so the normal all-India state agrees with neither local
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable<F> {
    /// Per location, `(neighbor, corr)`; the agreement potential is `exp(corr)`.
    pub spatial: Vec<Vec<(usize, F)>>,
    /// Per location, the agreement potential `exp(corr(X_s, Y))`.
    pub scale: Vec<F>,
    pub temporal_ratio_z: F,
    pub temporal_ratio_u: F,
    pub emissions: Emissions<F>,
    pub rain_floor: F,
}

pub fn build_potentials<F: Real>(
    field: &RainfallField<F>,
    nb: &NeighborSet,
    config: &TrainConfig,
    emissions: Emissions<F>,
) -> Result<PotentialTable<F>> {
    let n = field.n_locations();
    if nb.len() != n {
        return Err(Error::Dimension(format!(
            "neighbor sets cover {} locations, field has {n}",
            nb.len()
        )));
    }
    if emissions.gamma.len() != n {
        return Err(Error::Dimension(format!(
            "{} gamma parameter pairs for {n} locations",
            emissions.gamma.len()
        )));
    }
    if field.n_days() < 2 {
        return Err(Error::Dimension("training needs at least 2 days".into()));
    }
    let y = field.aggregate();
    let mut spatial = Vec::with_capacity(n);
    let mut scale = Vec::with_capacity(n);
    for s in 0..n {
        let row = nb
            .of(s)
            .iter()
            .map(|&t| Ok((t, pearson_correlation(field.series(s), field.series(t))?)))
            .collect::<Result<Vec<_>>>()?;
        spatial.push(row);
        scale.push(pearson_correlation(field.series(s), y.values())?.exp());
    }
    Ok(PotentialTable {
        spatial,
        scale,
        temporal_ratio_z: F::cst(config.temporal_ratio_z),
        temporal_ratio_u: F::cst(config.temporal_ratio_u),
        emissions,
        rain_floor: F::cst(config.rain_floor_mm),
    })
}

impl<F: Real> PotentialTable<F> {
    /// Log data potential of both local states at a rainfall value.
    pub fn local_data_loglik(&self, s: usize, x: F) -> [F; N_LOCAL_STATES] {
        let x = x.max(self.rain_floor);
        let g = &self.emissions.gamma[s];
        [g[0].log_pdf_unchecked(x), g[1].log_pdf_unchecked(x)]
    }

    pub(crate) fn conditional_z_with(&self, s: usize, t: usize, state: &LatentState, data: [F; N_LOCAL_STATES]) -> [F; N_LOCAL_STATES] {
        let mut lw = data;
        let log_rz = self.temporal_ratio_z.ln();
        let mut temporal = |other: u8| lw[other as usize] += log_rz;
        if t > 0 {
            temporal(state.z(s, t - 1));
        }
        if t + 1 < state.n_days() {
            temporal(state.z(s, t + 1));
        }
        for &(nbr, corr) in &self.spatial[s] {
            lw[state.z(nbr, t) as usize] += corr;
        }
        let u = state.u(t) as usize;
        if u < N_LOCAL_STATES {
            lw[u] += self.scale[s].ln();
        }
        log_normalize(&mut lw);
        lw
    }

    pub(crate) fn conditional_u_with(&self, t: usize, state: &LatentState, y: F) -> [F; N_GLOBAL_STATES] {
        let mut lw = [F::zero(); N_GLOBAL_STATES];
        for (l, w) in lw.iter_mut().enumerate() {
            *w = self.emissions.gauss[l].log_pdf(y);
        }
        let log_ru = self.temporal_ratio_u.ln();
        if t > 0 {
            lw[state.u(t - 1) as usize] += log_ru;
        }
        if t + 1 < state.n_days() {
            lw[state.u(t + 1) as usize] += log_ru;
        }
        for s in 0..state.n_locations() {
            lw[state.z(s, t) as usize] += self.scale[s].ln();
        }
        log_normalize(&mut lw);
        lw
    }
}

/// Full conditional of `Z(s, t)` given every other variable.
pub fn gibbs_conditional_z<F: Real>(s: usize, t: usize, current: &LatentState, pots: &PotentialTable<F>, x: F) -> [F; N_LOCAL_STATES] {
    pots.conditional_z_with(s, t, current, pots.local_data_loglik(s, x))
}

/// Full conditional of `U(t)` given every other variable and the aggregate
/// rainfall `y` of that day.
pub fn gibbs_conditional_u<F: Real>(t: usize, current: &LatentState, pots: &PotentialTable<F>, y: F) -> [F; N_GLOBAL_STATES] {
    pots.conditional_u_with(t, current, y)
}
