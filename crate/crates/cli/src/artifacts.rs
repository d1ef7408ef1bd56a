//! On-disk JSON artifacts. Every artifact carries the command that wrote it,
//! the seed, and the fully resolved configuration.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use rainfield::mrf::TraceEntry;
use rainfield::zones::ZonePartition;
use rainfield::{Error, NeighborSet, Params, Result, ZoneParams};

pub const SCHEMA_VERSION: u32 = 1;

/// Day selection applied when the data file was read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFilter {
    pub years: Option<Vec<i32>>,
    pub months: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<DayFilter>,
    pub n_locations: usize,
    pub n_days: usize,
    pub params: Params,
    /// `(location, state)` pairs whose Gamma was fitted on pooled data.
    #[serde(default)]
    pub pooled_fallbacks: Vec<(usize, u8)>,
    /// Locations whose local labels were swapped to put the heavy state first.
    #[serde(default)]
    pub swapped: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub loc_id: usize,
    pub zone_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Canonical {
    pub zone_id: usize,
    /// One-based states.
    pub v: Vec<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZonesFile {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub p: f64,
    pub crp_alpha: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub assignments: Vec<Assignment>,
    pub canonical: Vec<Canonical>,
    /// Zone-level simulation parameters, present when the rainfall data was
    /// supplied to the zones command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_params: Option<ZoneParams>,
}

impl ZonesFile {
    pub fn new(command: &str, seed: u64, config: Value, part: &ZonePartition, zone_params: Option<ZoneParams>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            seed,
            config,
            p: part.p,
            crp_alpha: part.crp_alpha,
            k: part.n_zones(),
            assignments: part
                .h
                .iter()
                .enumerate()
                .map(|(loc_id, &zone_id)| Assignment { loc_id, zone_id })
                .collect(),
            canonical: part
                .v
                .iter()
                .enumerate()
                .map(|(zone_id, v)| Canonical {
                    zone_id,
                    v: v.iter().map(|k| k + 1).collect(),
                })
                .collect(),
            zone_params,
        }
    }

    /// Rebuilds the partition; with neighbour sets, also checks that every
    /// zone is connected.
    pub fn partition(&self, nb: Option<&NeighborSet>) -> Result<ZonePartition> {
        let n = self.assignments.len();
        if let Some(nb) = nb.filter(|nb| nb.len() != n) {
            return Err(Error::Dimension(format!("zones cover {n} locations, the grid has {}", nb.len())));
        }
        let mut h = vec![usize::MAX; n];
        for a in &self.assignments {
            if a.loc_id >= n || h[a.loc_id] != usize::MAX || a.zone_id >= self.k {
                return Err(Error::Validation(format!(
                    "assignment of location {} to zone {} is duplicated or out of range",
                    a.loc_id, a.zone_id
                )));
            }
            h[a.loc_id] = a.zone_id;
        }
        let mut v = vec![Vec::new(); self.k];
        for c in &self.canonical {
            if c.zone_id >= self.k {
                return Err(Error::Validation(format!("canonical series for unknown zone {}", c.zone_id)));
            }
            v[c.zone_id] =
                c.v.iter()
                    .map(|&k| match k {
                        1 | 2 => Ok(k - 1),
                        _ => Err(Error::Validation(format!("zone {} has state {k}", c.zone_id))),
                    })
                    .collect::<Result<_>>()?;
        }
        let n_days = v.first().map_or(0, Vec::len);
        let part = ZonePartition {
            h,
            v,
            p: self.p,
            crp_alpha: self.crp_alpha,
        };
        if let Some(nb) = nb {
            part.validate(nb, n_days)?;
        } else if part.v.iter().any(|v| v.len() != n_days) || part.sizes().contains(&0) {
            return Err(Error::Validation(
                "zones have canonical series of different lengths or no members".into(),
            ));
        }
        Ok(part)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conditioning {
    /// `none`, `u_override`, `observations`, or both joined by `+`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_method: Option<String>,
    pub observed_cells: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimMeta {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub model: u8,
    pub parameter_count: usize,
    pub n_locations: usize,
    pub n_days: usize,
    pub conditioning: Conditioning,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UEstimateMeta {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub method: String,
    pub n_days: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub kind: String,
    pub metrics: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub filter: DayFilter,
    pub rows: Vec<ReportRow>,
}
