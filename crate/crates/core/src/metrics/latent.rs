use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::NeighborSet;
use crate::latent::{LatentState, ACTIVE, BREAK, HEAVY};
use crate::prob::pearson_correlation;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct LatentMetrics<F> {
    /// Number of cells in state 1.
    pub zz1: usize,
    /// Mean fraction of a cell's grid neighbours sharing its state.
    pub scoh: F,
    /// Mean fraction of consecutive day pairs with the same state.
    pub tcoh: F,
    /// Correlation between the aggregate and the number of state-1 cells per day.
    pub spdiv: F,
    /// Mean number of state-1 cells on active days; absent without such days.
    pub nz1u1: Option<F>,
    /// Mean number of state-1 cells on break days; absent without such days.
    pub nz1u2: Option<F>,
}

pub fn latent_metrics<F: Real>(state: &LatentState, y: &[F], nb: &NeighborSet) -> Result<LatentMetrics<F>> {
    let (n, t_len) = (state.n_locations(), state.n_days());
    if y.len() != t_len || nb.len() != n {
        return Err(Error::Dimension(format!(
            "latent field {n}x{t_len}, aggregate of {} days, neighbor sets for {} locations",
            y.len(),
            nb.len()
        )));
    }
    let zz1 = state.z_values().iter().filter(|&&k| k == HEAVY).count();

    let mut frac_sum = F::zero();
    let mut frac_n = 0usize;
    for s in 0..n {
        let nbrs = nb.of(s);
        if nbrs.is_empty() {
            continue;
        }
        let deg = F::from_usize(nbrs.len()).unwrap();
        for t in 0..t_len {
            let k = state.z(s, t);
            let same = nbrs.iter().filter(|&&o| state.z(o, t) == k).count();
            frac_sum += F::from_usize(same).unwrap() / deg;
            frac_n += 1;
        }
    }
    let scoh = ratio(frac_sum, frac_n);

    let mut tcoh_sum = F::zero();
    if t_len >= 2 {
        for s in 0..n {
            let z = state.z_series(s);
            let same = z.windows(2).filter(|w| w[0] == w[1]).count();
            tcoh_sum += F::from_usize(same).unwrap() / F::from_usize(t_len - 1).unwrap();
        }
    }
    let tcoh = if t_len >= 2 { ratio(tcoh_sum, n) } else { F::zero() };

    let heavy: Vec<F> = (0..t_len).map(|t| F::from_usize(state.heavy_count(t)).unwrap()).collect();
    let spdiv = if t_len >= 2 { pearson_correlation(y, &heavy)? } else { F::zero() };

    let conditional_mean = |l: u8| {
        let days: Vec<F> = (0..t_len).filter(|&t| state.u(t) == l).map(|t| heavy[t]).collect();
        if days.is_empty() {
            None
        } else {
            Some(ratio(days.iter().copied().sum(), days.len()))
        }
    };
    Ok(LatentMetrics {
        zz1,
        scoh,
        tcoh,
        spdiv,
        nz1u1: conditional_mean(ACTIVE),
        nz1u2: conditional_mean(BREAK),
    })
}

fn ratio<F: Real>(sum: F, n: usize) -> F {
    if n == 0 {
        F::zero()
    } else {
        sum / F::from_usize(n).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridManifest;

    #[test]
    fn constant_field() {
        let nb = GridManifest::full(2, 3).neighbor_sets();
        let st = LatentState::constant(6, 5, HEAVY, ACTIVE);
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let m = latent_metrics(&st, &y, &nb).unwrap();
        assert_eq!(m.zz1, 30);
        assert_eq!(m.scoh, 1.0);
        assert_eq!(m.tcoh, 1.0);
        assert_eq!(m.nz1u1, Some(6.0));
        assert_eq!(m.nz1u2, None);
    }

    #[test]
    fn checkerboard_has_no_spatial_coherence() {
        let nb = GridManifest::full(3, 3).neighbor_sets();
        let z: Vec<u8> = (0..9)
            .flat_map(|s| {
                let (r, c) = (s / 3, s % 3);
                vec![((r + c) % 2) as u8; 2]
            })
            .collect();
        let st = LatentState::new(9, 2, z, vec![2, 2]).unwrap();
        let m = latent_metrics(&st, &[1.0, 2.0], &nb).unwrap();
        assert_eq!(m.scoh, 0.0);
    }

    #[test]
    fn hand_counted_case() {
        // 1x3 strip, 4 days
        // s0: 1 1 2 2   s1: 1 2 2 2   s2: 2 2 2 1   (one-based)
        let nb = GridManifest::full(1, 3).neighbor_sets();
        let z = vec![0, 0, 1, 1, 0, 1, 1, 1, 1, 1, 1, 0];
        let u = vec![0, 1, 0, 2];
        let st = LatentState::new(3, 4, z, u).unwrap();
        let y = [10.0f64, 4.0, 1.0, 3.0];
        let m = latent_metrics(&st, &y, &nb).unwrap();
        assert_eq!(m.zz1, 4);
        // s0 matches s1 on days 0,2,3 -> 3/4 cells of frac 1, day1 frac 0
        // s1 (2 nbrs): d0 1/2, d1 1/2, d2 1, d3 1/2
        // s2 (1 nbr): d0 0, d1 1, d2 1, d3 0
        let scoh = (3.0 + 2.5 + 2.0) / 12.0;
        assert!((m.scoh - scoh).abs() < 1e-15);
        // tcoh: s0 2/3, s1 2/3, s2 2/3
        assert!((m.tcoh - 2.0 / 3.0).abs() < 1e-15);
        // heavy counts per day: 2, 1, 0, 1
        let expected = pearson_correlation(&y, &[2.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((m.spdiv - expected).abs() < 1e-15);
        // active days 0 and 2: (2 + 0) / 2; break day 1: 1
        assert_eq!(m.nz1u1, Some(1.0));
        assert_eq!(m.nz1u2, Some(1.0));
    }
}
