//! Spatial domain and daily rainfall observations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Regular lat/lon lattice the locations are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub lat: f64,
    pub lon: f64,
}

/// Land locations of the domain. Sea cells are absent; ids are dense `0..S`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridManifest {
    grid: GridSpec,
    locations: Vec<Location>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationEntry {
    pub id: usize,
    pub row: usize,
    pub col: usize,
}

/// On-disk JSON form of a [`GridManifest`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub grid: GridSpec,
    pub locations: Vec<LocationEntry>,
}

impl GridManifest {
    pub fn new(grid: GridSpec, entries: &[LocationEntry]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("manifest has no locations".into()));
        }
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|e| e.id);
        let mut cells = BTreeSet::new();
        for (expected, e) in sorted.iter().enumerate() {
            if e.id != expected {
                return Err(Error::Validation(format!(
                    "location ids must be dense 0..{}; found id {} where {} was expected",
                    sorted.len(),
                    e.id,
                    expected
                )));
            }
            if e.row >= grid.rows || e.col >= grid.cols {
                return Err(Error::Validation(format!(
                    "location {} at ({}, {}) lies outside the {}x{} grid",
                    e.id, e.row, e.col, grid.rows, grid.cols
                )));
            }
            if !cells.insert((e.row, e.col)) {
                return Err(Error::Validation(format!(
                    "duplicate cell ({}, {}) at location {}",
                    e.row, e.col, e.id
                )));
            }
        }
        let locations = sorted
            .iter()
            .map(|e| Location {
                id: e.id,
                row: e.row,
                col: e.col,
                lat: grid.lat0 + e.row as f64 * grid.dlat,
                lon: grid.lon0 + e.col as f64 * grid.dlon,
            })
            .collect();
        Ok(Self { grid, locations })
    }

    /// Every cell of a `rows x cols` lattice, ids in row-major order.
    pub fn full(rows: usize, cols: usize) -> Self {
        let entries: Vec<LocationEntry> = (0..rows * cols)
            .map(|id| LocationEntry {
                id,
                row: id / cols,
                col: id % cols,
            })
            .collect();
        let grid = GridSpec {
            rows,
            cols,
            lat0: 0.0,
            lon0: 0.0,
            dlat: 1.0,
            dlon: 1.0,
        };
        Self::new(grid, &entries).expect("full lattice is a valid manifest")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn n_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn to_file(&self) -> ManifestFile {
        ManifestFile {
            grid: self.grid,
            locations: self
                .locations
                .iter()
                .map(|l| LocationEntry {
                    id: l.id,
                    row: l.row,
                    col: l.col,
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ManifestFile) -> Result<Self> {
        Self::new(file.grid, &file.locations)
    }

    /// 4-adjacency restricted to the locations present in the manifest.
    pub fn neighbor_sets(&self) -> NeighborSet {
        let index: BTreeMap<(usize, usize), usize> = self.locations.iter().map(|l| ((l.row, l.col), l.id)).collect();
        let lists = self
            .locations
            .iter()
            .map(|l| {
                let mut nb = Vec::with_capacity(4);
                let candidates = [
                    l.row.checked_sub(1).map(|r| (r, l.col)),
                    Some((l.row + 1, l.col)),
                    l.col.checked_sub(1).map(|c| (l.row, c)),
                    Some((l.row, l.col + 1)),
                ];
                for cell in candidates.into_iter().flatten() {
                    if let Some(&id) = index.get(&cell) {
                        nb.push(id);
                    }
                }
                nb.sort_unstable();
                nb
            })
            .collect();
        NeighborSet { lists }
    }
}

/// Per-location neighbor lists, sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSet {
    lists: Vec<Vec<usize>>,
}

impl NeighborSet {
    /// Builds from explicit lists, checking symmetry and id range.
    pub fn from_lists(mut lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        for (s, l) in lists.iter().enumerate() {
            for &t in l {
                if t >= n || t == s {
                    return Err(Error::Validation(format!("bad neighbor {t} of location {s}")));
                }
                if lists[t].binary_search(&s).is_err() {
                    return Err(Error::Validation(format!("neighbor relation {s} -> {t} is not symmetric")));
                }
            }
        }
        Ok(Self { lists })
    }

    pub fn of(&self, s: usize) -> &[usize] {
        &self.lists[s]
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Each undirected edge once, as `(s, s')` with `s < s'`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.lists
            .iter()
            .enumerate()
            .flat_map(|(s, l)| l.iter().filter(move |&&t| t > s).map(move |&t| (s, t)))
            .collect()
    }
}

/// Calendar label of a day. Carried through as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DayLabel {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

impl fmt::Display for DayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for DayLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != 3 {
            return Err(format!("day label {s:?} is not YYYY-MM-DD"));
        }
        let year = parts[0].parse().map_err(|_| format!("bad year in {s:?}"))?;
        let month: u32 = parts[1].parse().map_err(|_| format!("bad month in {s:?}"))?;
        let day: u32 = parts[2].parse().map_err(|_| format!("bad day in {s:?}"))?;
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(format!("day label {s:?} out of range"));
        }
        Ok(Self { year, month, day })
    }
}

const MONSOON_MONTHS: [(u32, u32); 4] = [(6, 30), (7, 31), (8, 31), (9, 30)];

impl DayLabel {
    /// `n` consecutive June–September labels starting on 1 June of
    /// `start_year`.
    pub fn monsoon_sequence(start_year: i32, n: usize) -> Vec<DayLabel> {
        let mut out = Vec::with_capacity(n);
        let mut year = start_year;
        'outer: loop {
            for &(month, days) in &MONSOON_MONTHS {
                for day in 1..=days {
                    if out.len() == n {
                        break 'outer;
                    }
                    out.push(DayLabel { year, month, day });
                }
            }
            year += 1;
        }
        out
    }
}

/// Daily rainfall `X(s, t)` in mm/day, stored location-major so each
/// location's series is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct RainfallField<F> {
    n_locations: usize,
    n_days: usize,
    values: Vec<F>,
    days: Vec<DayLabel>,
}

impl<F: Real> RainfallField<F> {
    pub fn new(n_locations: usize, days: Vec<DayLabel>, values: Vec<F>) -> Result<Self> {
        let n_days = days.len();
        if values.len() != n_locations * n_days {
            return Err(Error::Dimension(format!(
                "{} values for {} locations x {} days",
                values.len(),
                n_locations,
                n_days
            )));
        }
        for (i, &x) in values.iter().enumerate() {
            if !x.is_finite() || x < F::zero() {
                return Err(Error::Validation(format!(
                    "rainfall at (s={}, t={}) is {x}; values must be finite and >= 0",
                    i / n_days.max(1),
                    i % n_days.max(1)
                )));
            }
        }
        Ok(Self {
            n_locations,
            n_days,
            values,
            days,
        })
    }

    /// Builds from per-location series.
    pub fn from_series(series: &[Vec<F>], days: Vec<DayLabel>) -> Result<Self> {
        let values = series.iter().flat_map(|s| s.iter().copied()).collect();
        Self::new(series.len(), days, values)
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    pub fn days(&self) -> &[DayLabel] {
        &self.days
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    #[inline]
    pub fn get(&self, s: usize, t: usize) -> F {
        self.values[s * self.n_days + t]
    }

    pub fn series(&self, s: usize) -> &[F] {
        &self.values[s * self.n_days..(s + 1) * self.n_days]
    }

    /// Spatial pattern on day `t`.
    pub fn day_pattern(&self, t: usize) -> Vec<F> {
        (0..self.n_locations).map(|s| self.get(s, t)).collect()
    }

    /// `Y(t) = sum_s X(s, t)`.
    pub fn aggregate(&self) -> AggregateSeries<F> {
        let mut y = vec![F::zero(); self.n_days];
        for s in 0..self.n_locations {
            for (acc, &x) in y.iter_mut().zip(self.series(s)) {
                *acc += x;
            }
        }
        AggregateSeries(y)
    }

    pub fn grand_mean(&self) -> F {
        crate::prob::mean(&self.values)
    }

    pub fn scaled(&self, c: F) -> Self {
        Self {
            n_locations: self.n_locations,
            n_days: self.n_days,
            values: self.values.iter().map(|&x| x * c).collect(),
            days: self.days.clone(),
        }
    }

    /// Keeps the listed days in the given order.
    pub fn select_days(&self, keep: &[usize]) -> Self {
        let n_days = keep.len();
        let mut values = Vec::with_capacity(self.n_locations * n_days);
        for s in 0..self.n_locations {
            let series = self.series(s);
            values.extend(keep.iter().map(|&t| series[t]));
        }
        Self {
            n_locations: self.n_locations,
            n_days,
            values,
            days: keep.iter().map(|&t| self.days[t]).collect(),
        }
    }

    /// Restricts to days whose label matches the year and month filters;
    /// `None` accepts everything.
    pub fn filter_days(&self, years: Option<&[i32]>, months: Option<&[u32]>) -> Self {
        let keep: Vec<usize> = self
            .days
            .iter()
            .enumerate()
            .filter(|(_, d)| years.is_none_or(|ys| ys.contains(&d.year)))
            .filter(|(_, d)| months.is_none_or(|ms| ms.contains(&d.month)))
            .map(|(t, _)| t)
            .collect();
        self.select_days(&keep)
    }
}

/// Daily aggregate `Y(t)` over all locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct AggregateSeries<F>(pub Vec<F>);

impl<F> AggregateSeries<F> {
    pub fn values(&self) -> &[F] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
