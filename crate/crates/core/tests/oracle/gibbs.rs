//! Brute-force reference for the Gibbs conditionals, shared with the
//! acceptance harness.
#![allow(dead_code)]

use rainfield::grid::{DayLabel, GridManifest, RainfallField};
use rainfield::latent::LatentState;
use rainfield::mrf::{build_potentials, gibbs_conditional_u, gibbs_conditional_z, Emissions, TrainConfig};
use rainfield::prob::{GammaParams, GaussianParams};
use rainfield::{NeighborSet, RandomStream};

pub struct Instance {
    pub field: RainfallField<f64>,
    pub nb: NeighborSet,
    pub emissions: Emissions<f64>,
    pub config: TrainConfig,
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn gamma_lpdf(shape: f64, scale: f64, x: f64) -> f64 {
    (shape - 1.0) * x.ln() - x / scale - libm::lgamma(shape) - shape * scale.ln()
}

fn normal_lpdf(mean: f64, sd: f64, y: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI).ln() - sd.ln() - (y - mean).powi(2) / (2.0 * sd * sd)
}

/// Unnormalized log joint of the field, written term by term over every
/// edge of the graph.
pub fn log_joint(inst: &Instance, state: &LatentState) -> f64 {
    let f = &inst.field;
    let (n, t_len) = (f.n_locations(), f.n_days());
    let y: Vec<f64> = (0..t_len).map(|t| (0..n).map(|s| f.get(s, t)).sum()).collect();
    let floor = inst.config.rain_floor_mm;
    let mut total = 0.0;
    for s in 0..n {
        let a_s = corr(f.series(s), &y);
        for t in 0..t_len {
            let k = state.z(s, t) as usize;
            let g = inst.emissions.gamma[s][k];
            total += gamma_lpdf(g.shape, g.scale, f.get(s, t).max(floor));
            if t > 0 && state.z(s, t) == state.z(s, t - 1) {
                total += inst.config.temporal_ratio_z.ln();
            }
            if state.z(s, t) == state.u(t) {
                total += a_s;
            }
        }
        for &o in inst.nb.of(s) {
            if o > s {
                let c = corr(f.series(s), f.series(o));
                total += (0..t_len).filter(|&t| state.z(s, t) == state.z(o, t)).count() as f64 * c;
            }
        }
    }
    for t in 0..t_len {
        let g = inst.emissions.gauss[state.u(t) as usize];
        total += normal_lpdf(g.mean, g.sd, y[t]);
        if t > 0 && state.u(t) == state.u(t - 1) {
            total += inst.config.temporal_ratio_u.ln();
        }
    }
    total
}

pub fn normalize(lw: &[f64]) -> Vec<f64> {
    let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn random_instance(rng: &mut RandomStream, rows: usize, cols: usize, t_len: usize) -> Instance {
    let n = rows * cols;
    let mut u = || rng.unit::<f64>();
    let mut values = Vec::with_capacity(n * t_len);
    for _ in 0..n * t_len {
        // Some exact zeros exercise the rainfall floor.
        let x = if u() < 0.15 { 0.0 } else { 40.0 * u() };
        values.push(x);
    }
    let series: Vec<Vec<f64>> = values.chunks(t_len).map(|c| c.to_vec()).collect();
    let field = RainfallField::from_series(&series, DayLabel::monsoon_sequence(1990, t_len)).unwrap();
    let gamma = (0..n)
        .map(|_| {
            [
                GammaParams::new(0.5 + 5.0 * u(), 1.0 + 10.0 * u()).unwrap(),
                GammaParams::new(0.5 + 2.0 * u(), 0.2 + 2.0 * u()).unwrap(),
            ]
        })
        .collect();
    let gauss = [0, 1, 2].map(|_| GaussianParams::new(200.0 * u(), 5.0 + 80.0 * u()).unwrap());
    let config = TrainConfig {
        temporal_ratio_z: 1.0 + 150.0 * u(),
        temporal_ratio_u: 1.0 + 150.0 * u(),
        ..TrainConfig::default()
    };
    Instance {
        field,
        nb: GridManifest::full(rows, cols).neighbor_sets(),
        emissions: Emissions { gamma, gauss },
        config,
    }
}

pub fn random_state(rng: &mut RandomStream, n: usize, t_len: usize) -> LatentState {
    let z = (0..n * t_len).map(|_| (rng.unit::<f64>() < 0.5) as u8).collect();
    let u = (0..t_len).map(|_| (rng.unit::<f64>() * 3.0) as u8).collect();
    LatentState::new(n, t_len, z, u).unwrap()
}

pub const SHAPES: [(usize, usize); 9] = [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (2, 3), (3, 2), (1, 4), (3, 3)];

/// Compares both conditionals with enumeration of the joint on random
/// instances with at most 12 cells; returns the number of instances checked.
pub fn check_conditionals(seed: u64, attempts: usize) -> Result<usize, String> {
    let mut rng = RandomStream::new(seed, 0);
    let mut instances = 0;
    for i in 0..attempts {
        let (rows, cols) = SHAPES[i % SHAPES.len()];
        let n = rows * cols;
        let max_t = 12 / n;
        if max_t < 2 {
            continue;
        }
        let t_len = 2 + (rng.unit::<f64>() * (max_t - 1) as f64) as usize;
        let inst = random_instance(&mut rng, rows, cols, t_len);
        let pots = build_potentials(&inst.field, &inst.nb, &inst.config, inst.emissions.clone()).unwrap();
        let state = random_state(&mut rng, n, t_len);
        let y = inst.field.aggregate();

        for s in 0..n {
            for t in 0..t_len {
                let got = gibbs_conditional_z(s, t, &state, &pots, inst.field.get(s, t));
                let lw: Vec<f64> = (0..2u8)
                    .map(|k| {
                        let mut alt = state.clone();
                        alt.set_z(s, t, k);
                        log_joint(&inst, &alt)
                    })
                    .collect();
                let want = normalize(&lw);
                for k in 0..2 {
                    if (got[k] - want[k]).abs() >= 1e-10 {
                        return Err(format!("instance {i} z({s},{t}): {got:?} vs {want:?}"));
                    }
                }
            }
        }
        for t in 0..t_len {
            let got = gibbs_conditional_u(t, &state, &pots, y.values()[t]);
            let lw: Vec<f64> = (0..3u8)
                .map(|l| {
                    let mut alt = state.clone();
                    alt.set_u(t, l);
                    log_joint(&inst, &alt)
                })
                .collect();
            let want = normalize(&lw);
            for l in 0..3 {
                if (got[l] - want[l]).abs() >= 1e-10 {
                    return Err(format!("instance {i} u({t}): {got:?} vs {want:?}"));
                }
            }
        }
        instances += 1;
    }
    Ok(instances)
}
