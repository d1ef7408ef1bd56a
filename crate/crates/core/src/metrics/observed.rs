use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{NeighborSet, RainfallField};
use crate::prob::{mean, pearson_correlation, population_sd};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// A day is wet above this many mm.
    pub wet: f64,
    /// A cell is extreme above this many mm.
    pub extreme: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { wet: 10.0, extreme: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct ObservedMetrics<F> {
    /// Mean relative error of the per-location means.
    pub dmx: F,
    /// Mean relative error of the per-location standard deviations.
    pub dsx: F,
    /// Standard deviation of the simulated aggregate.
    pub sy: F,
    /// Cells above the extreme threshold.
    pub x100: usize,
    /// Mean wet-spell length; absent when no location has a wet day.
    pub wetln: Option<F>,
    /// Correlation of reference and simulated aggregates; absent when the
    /// periods differ in length.
    pub dcr: Option<F>,
    /// Mean correlation between neighbouring series.
    pub scr: Option<F>,
    /// Mean correlation between spatial patterns of consecutive days.
    pub tcr: Option<F>,
    /// Correlation between reference and simulated time-mean spatial patterns.
    pub spatcr: Option<F>,
}

/// Rescales `sim` so its grand mean equals that of `reference`.
pub fn standardize<F: Real>(sim: &RainfallField<F>, reference: &RainfallField<F>) -> Result<RainfallField<F>> {
    let gm = sim.grand_mean();
    if !(gm > F::zero()) {
        return Err(Error::Degenerate("cannot standardize a field with zero mean rainfall".into()));
    }
    Ok(sim.scaled(reference.grand_mean() / gm))
}

/// Standardizes `sim` against `reference`, then evaluates it.
pub fn observed_metrics<F: Real>(
    sim: &RainfallField<F>,
    reference: &RainfallField<F>,
    nb: &NeighborSet,
    thresholds: Thresholds,
) -> Result<ObservedMetrics<F>> {
    check(sim, reference, nb)?;
    observed_metrics_raw(&standardize(sim, reference)?, reference, nb, thresholds)
}

/// Evaluates `sim` as given, without standardization.
pub fn observed_metrics_raw<F: Real>(
    sim: &RainfallField<F>,
    reference: &RainfallField<F>,
    nb: &NeighborSet,
    thresholds: Thresholds,
) -> Result<ObservedMetrics<F>> {
    check(sim, reference, nb)?;
    let n = sim.n_locations();
    let t_len = sim.n_days();

    let mut dmx = Vec::new();
    let mut dsx = Vec::new();
    let mut sim_means = Vec::with_capacity(n);
    let mut ref_means = Vec::with_capacity(n);
    for s in 0..n {
        let (a, b) = (sim.series(s), reference.series(s));
        let (ma, mb) = (mean(a), mean(b));
        let (sa, sb) = (population_sd(a), population_sd(b));
        if mb > F::zero() {
            dmx.push((ma - mb).abs() / mb);
        }
        if sb > F::zero() {
            dsx.push((sa - sb).abs() / sb);
        }
        sim_means.push(ma);
        ref_means.push(mb);
    }
    let y_sim = sim.aggregate();
    let y_ref = reference.aggregate();

    let wet = F::cst(thresholds.wet);
    let extreme = F::cst(thresholds.extreme);
    let x100 = sim.values().iter().filter(|&&x| x > extreme).count();
    let spells: Vec<F> = (0..n).filter_map(|s| mean_run_length(sim.series(s), wet)).collect();

    let dcr = if t_len == reference.n_days() && t_len >= 2 {
        Some(pearson_correlation(y_ref.values(), y_sim.values())?)
    } else {
        None
    };
    let edges = nb.edges();
    let scr = if edges.is_empty() || t_len < 2 {
        None
    } else {
        let total = edges
            .iter()
            .map(|&(a, b)| pearson_correlation(sim.series(a), sim.series(b)))
            .sum::<Result<F>>()?;
        Some(total / F::from_usize(edges.len()).unwrap())
    };
    let tcr = if n < 2 || t_len < 2 {
        None
    } else {
        let mut total = F::zero();
        let mut prev = sim.day_pattern(0);
        for t in 1..t_len {
            let cur = sim.day_pattern(t);
            total += pearson_correlation(&cur, &prev)?;
            prev = cur;
        }
        Some(total / F::from_usize(t_len - 1).unwrap())
    };
    let spatcr = if n < 2 {
        None
    } else {
        Some(pearson_correlation(&ref_means, &sim_means)?)
    };

    Ok(ObservedMetrics {
        dmx: mean(&dmx),
        dsx: mean(&dsx),
        sy: population_sd(y_sim.values()),
        x100,
        wetln: if spells.is_empty() { None } else { Some(mean(&spells)) },
        dcr,
        scr,
        tcr,
        spatcr,
    })
}

fn check<F: Real>(sim: &RainfallField<F>, reference: &RainfallField<F>, nb: &NeighborSet) -> Result<()> {
    if sim.n_locations() != reference.n_locations() || nb.len() != sim.n_locations() {
        return Err(Error::Dimension(format!(
            "simulation has {} locations, reference {}, neighbor sets {}",
            sim.n_locations(),
            reference.n_locations(),
            nb.len()
        )));
    }
    Ok(())
}

/// Mean length of runs of values above `wet`; `None` without wet days.
fn mean_run_length<F: Real>(series: &[F], wet: F) -> Option<F> {
    let mut runs = Vec::new();
    let mut current = 0usize;
    for &x in series {
        if x > wet {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    if runs.is_empty() {
        return None;
    }
    let total: usize = runs.iter().sum();
    Some(F::from_usize(total).unwrap() / F::from_usize(runs.len()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DayLabel, GridManifest};

    fn field(series: &[Vec<f64>]) -> RainfallField<f64> {
        RainfallField::from_series(series, DayLabel::monsoon_sequence(2000, series[0].len())).unwrap()
    }

    #[test]
    fn identity() {
        let f = field(&[vec![1.0, 5.0, 2.0, 30.0], vec![3.0, 0.0, 12.0, 14.0]]);
        let nb = GridManifest::full(1, 2).neighbor_sets();
        let m = observed_metrics(&f, &f, &nb, Thresholds::default()).unwrap();
        assert_eq!(m.dmx, 0.0);
        assert_eq!(m.dsx, 0.0);
        assert!((m.dcr.unwrap() - 1.0).abs() < 1e-12);
        assert!((m.spatcr.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wet_runs() {
        let s = [12.0, 15.0, 3.0, 11.0, 0.0, 0.0, 20.0, 20.0, 20.0];
        assert_eq!(mean_run_length(&s, 10.0), Some(2.0));
        assert_eq!(mean_run_length(&[1.0, 2.0], 10.0), None);
    }

    #[test]
    fn extremes() {
        let f = field(&[vec![101.0, 99.9, 150.0]]);
        let nb = GridManifest::full(1, 1).neighbor_sets();
        let m = observed_metrics_raw(&f, &f, &nb, Thresholds::default()).unwrap();
        assert_eq!(m.x100, 2);
    }

    #[test]
    fn dry_field_has_no_wet_spells() {
        let f = field(&[vec![1.0, 2.0, 0.5]]);
        let nb = GridManifest::full(1, 1).neighbor_sets();
        let m = observed_metrics_raw(&f, &f, &nb, Thresholds::default()).unwrap();
        assert_eq!(m.wetln, None);
    }

    #[test]
    fn standardization_inverts_scale() {
        let f = field(&[vec![1.0, 5.0, 2.0], vec![3.0, 0.0, 12.0]]);
        let twice = f.scaled(2.0);
        let back = standardize(&twice, &f).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = field(&[vec![0.0; 3], vec![0.0; 3]]);
        assert!(standardize(&zero, &f).is_err());
    }

    #[test]
    fn mismatched_locations() {
        let a = field(&[vec![1.0, 2.0]]);
        let b = field(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let nb = GridManifest::full(1, 1).neighbor_sets();
        assert!(matches!(
            observed_metrics(&a, &b, &nb, Thresholds::default()),
            Err(Error::Dimension(_))
        ));
    }
}
