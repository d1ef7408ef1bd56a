//! Brute-force reference for the evaluation metrics, shared with the
//! acceptance harness.
#![allow(dead_code)]

use rainfield::grid::{DayLabel, GridManifest, GridSpec, LocationEntry, RainfallField};
use rainfield::latent::LatentState;
use rainfield::metrics::{latent_metrics, observed_metrics, Thresholds};
use rainfield::{NeighborSet, RandomStream};

pub const ROWS: usize = 4;
pub const COLS: usize = 4;
pub const DAYS: usize = 10;

pub struct Case {
    pub manifest: GridManifest,
    pub sim: Vec<Vec<f64>>,
    pub reference: Vec<Vec<f64>>,
    pub z: Vec<Vec<u8>>,
    pub u: Vec<u8>,
}

pub fn case(seed: u64) -> Case {
    let mut rng = RandomStream::new(seed, 99);
    let mut unit = || rng.unit::<f64>();
    // Drop a few cells so some locations have fewer neighbours.
    let mut entries = Vec::new();
    for r in 0..ROWS {
        for c in 0..COLS {
            if entries.is_empty() || unit() > 0.2 {
                entries.push(LocationEntry {
                    id: entries.len(),
                    row: r,
                    col: c,
                });
            }
        }
    }
    let grid = GridSpec {
        rows: ROWS,
        cols: COLS,
        lat0: 10.0,
        lon0: 70.0,
        dlat: 1.0,
        dlon: 1.0,
    };
    let manifest = GridManifest::new(grid, &entries).unwrap();
    let n = entries.len();
    let mut rain = |wet: f64| -> f64 {
        let v = unit();
        if v < 0.3 {
            0.0
        } else {
            wet * unit() * unit() * 4.0
        }
    };
    let sim = (0..n).map(|_| (0..DAYS).map(|_| rain(60.0)).collect()).collect();
    let reference = (0..n).map(|_| (0..DAYS).map(|_| rain(45.0) + 0.5).collect()).collect();
    let z = (0..n).map(|_| (0..DAYS).map(|_| (unit() < 0.45) as u8).collect()).collect();
    let u = (0..DAYS).map(|_| (unit() * 3.0) as u8).collect();
    Case {
        manifest,
        sim,
        reference,
        z,
        u,
    }
}

pub fn field(series: &[Vec<f64>]) -> RainfallField<f64> {
    RainfallField::from_series(series, DayLabel::monsoon_sequence(2001, DAYS)).unwrap()
}

pub fn avg(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sd(xs: &[f64]) -> f64 {
    let m = avg(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Correlation from raw sums; zero for a constant series.
pub fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let saa: f64 = a.iter().map(|x| x * x).sum();
    let sbb: f64 = b.iter().map(|y| y * y).sum();
    let va = saa - sa * sa / n;
    let vb = sbb - sb * sb / n;
    if va.abs() < 1e-12 * saa.max(1.0) || vb.abs() < 1e-12 * sbb.max(1.0) {
        return 0.0;
    }
    (sab - sa * sb / n) / (va * vb).sqrt()
}

pub fn neighbours(m: &GridManifest, s: usize) -> Vec<usize> {
    let a = m.locations()[s];
    m.locations()
        .iter()
        .filter(|b| a.row.abs_diff(b.row) + a.col.abs_diff(b.col) == 1)
        .map(|b| b.id)
        .collect()
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10
}

/// Like `assert!`, but returns the failure to the caller.
macro_rules! ensure {
    ($cond:expr $(,)?) => {
        if !$cond {
            return Err(format!("{} failed", stringify!($cond)));
        }
    };
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!("{}: {}", stringify!($cond), format!($($msg)+)));
        }
    };
}

/// Latent metrics against brute force on one random case per seed.
pub fn check_latent(seeds: std::ops::Range<u64>) -> Result<(), String> {
    for seed in seeds {
        let c = case(seed);
        let n = c.z.len();
        let nb: NeighborSet = c.manifest.neighbor_sets();
        let flat: Vec<u8> = c.z.iter().flatten().copied().collect();
        let state = LatentState::new(n, DAYS, flat, c.u.clone()).unwrap();
        let y: Vec<f64> = (0..DAYS).map(|t| c.reference.iter().map(|s| s[t]).sum()).collect();
        let got = latent_metrics(&state, &y, &nb).unwrap();

        let zz1 = c.z.iter().flatten().filter(|&&k| k == 0).count();
        let mut fracs = Vec::new();
        for s in 0..n {
            let nbr = neighbours(&c.manifest, s);
            if nbr.is_empty() {
                continue;
            }
            for t in 0..DAYS {
                let same = nbr.iter().filter(|&&o| c.z[o][t] == c.z[s][t]).count();
                fracs.push(same as f64 / nbr.len() as f64);
            }
        }
        let tcoh: Vec<f64> =
            c.z.iter()
                .map(|row| (1..DAYS).filter(|&t| row[t] == row[t - 1]).count() as f64 / (DAYS - 1) as f64)
                .collect();
        let count: Vec<f64> = (0..DAYS).map(|t| (0..n).filter(|&s| c.z[s][t] == 0).count() as f64).collect();
        let on = |l: u8| {
            let days: Vec<f64> = (0..DAYS).filter(|&t| c.u[t] == l).map(|t| count[t]).collect();
            (!days.is_empty()).then(|| avg(&days))
        };

        ensure!(got.zz1 == zz1, "seed {seed}");
        ensure!(close(got.scoh, avg(&fracs)), "seed {seed}");
        ensure!(close(got.tcoh, avg(&tcoh)), "seed {seed}");
        ensure!(close(got.spdiv, corr(&y, &count)), "seed {seed}");
        ensure!(got.nz1u1.is_some() == on(0).is_some());
        ensure!(got.nz1u2.is_some() == on(1).is_some());
        if let (Some(a), Some(b)) = (got.nz1u1, on(0)) {
            ensure!(close(a, b));
        }
        if let (Some(a), Some(b)) = (got.nz1u2, on(1)) {
            ensure!(close(a, b));
        }
    }
    Ok(())
}

/// Observed metrics against brute force on one random case per seed.
pub fn check_observed(seeds: std::ops::Range<u64>) -> Result<(), String> {
    for seed in seeds {
        let c = case(seed);
        let n = c.sim.len();
        let nb = c.manifest.neighbor_sets();
        let got = observed_metrics(&field(&c.sim), &field(&c.reference), &nb, Thresholds::default()).unwrap();

        let total = |f: &Vec<Vec<f64>>| f.iter().flatten().sum::<f64>();
        let k = total(&c.reference) / total(&c.sim);
        let sim: Vec<Vec<f64>> = c.sim.iter().map(|row| row.iter().map(|x| x * k).collect()).collect();

        let dmx = avg(&(0..n)
            .map(|s| (avg(&sim[s]) - avg(&c.reference[s])).abs() / avg(&c.reference[s]))
            .collect::<Vec<_>>());
        let dsx = avg(&(0..n)
            .map(|s| (sd(&sim[s]) - sd(&c.reference[s])).abs() / sd(&c.reference[s]))
            .collect::<Vec<_>>());
        let y_sim: Vec<f64> = (0..DAYS).map(|t| sim.iter().map(|r| r[t]).sum()).collect();
        let y_ref: Vec<f64> = (0..DAYS).map(|t| c.reference.iter().map(|r| r[t]).sum()).collect();
        let x100 = sim.iter().flatten().filter(|&&x| x > 100.0).count();

        let mut spell_means = Vec::new();
        for row in &sim {
            let mut runs = Vec::new();
            let mut t = 0;
            while t < DAYS {
                if row[t] > 10.0 {
                    let start = t;
                    while t < DAYS && row[t] > 10.0 {
                        t += 1;
                    }
                    runs.push((t - start) as f64);
                } else {
                    t += 1;
                }
            }
            if !runs.is_empty() {
                spell_means.push(avg(&runs));
            }
        }

        let mut pair_corrs = Vec::new();
        for s in 0..n {
            for o in neighbours(&c.manifest, s) {
                if o > s {
                    pair_corrs.push(corr(&sim[s], &sim[o]));
                }
            }
        }
        let pattern = |t: usize| sim.iter().map(|r| r[t]).collect::<Vec<f64>>();
        let tcr = avg(&(1..DAYS).map(|t| corr(&pattern(t), &pattern(t - 1))).collect::<Vec<_>>());
        let sim_means: Vec<f64> = sim.iter().map(|r| avg(r)).collect();
        let ref_means: Vec<f64> = c.reference.iter().map(|r| avg(r)).collect();

        ensure!(close(got.dmx, dmx), "seed {seed}: dmx {} vs {dmx}", got.dmx);
        ensure!(close(got.dsx, dsx), "seed {seed}");
        ensure!(close(got.sy, sd(&y_sim)), "seed {seed}");
        ensure!(got.x100 == x100, "seed {seed}");
        match got.wetln {
            Some(w) => ensure!(close(w, avg(&spell_means)), "seed {seed}"),
            None => ensure!(spell_means.is_empty()),
        }
        ensure!(close(got.dcr.unwrap(), corr(&y_ref, &y_sim)), "seed {seed}");
        match got.scr {
            Some(v) => ensure!(close(v, avg(&pair_corrs)), "seed {seed}"),
            None => ensure!(pair_corrs.is_empty()),
        }
        ensure!(close(got.tcr.unwrap(), tcr), "seed {seed}");
        ensure!(close(got.spatcr.unwrap(), corr(&ref_means, &sim_means)), "seed {seed}");
    }
    Ok(())
}
