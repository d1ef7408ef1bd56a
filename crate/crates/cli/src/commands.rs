use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use rainfield::conditioning::{apply_conditioning, estimate_z_from_partial, infer_u_from_y, infer_u_from_z, UEstimate, UMethod};
use rainfield::grid::{GridManifest, RainfallField};
use rainfield::io::{
    load_dataset, read_field, read_json, read_latent, read_manifest, read_observations, read_u_series, write_field, write_json,
    write_latent, write_manifest, write_text, write_u_series,
};
use rainfield::metrics::{latent_metrics, observed_metrics, render_report, MetricRow, Thresholds};
use rainfield::mrf::{train, TrainConfig};
use rainfield::sim::{learn_zone_params, simulate, SimulationConfig};
use rainfield::synth::{generate, SynthSpec};
use rainfield::zones::{run_sccrp, ZoneConfig};
use rainfield::{Error, Field, Observation, Params, Result};

use crate::artifacts::{Conditioning, DayFilter, ParamsFile, ReportFile, ReportRow, SimMeta, UEstimateMeta, ZonesFile, SCHEMA_VERSION};
use crate::{Cli, Command, EvaluateArgs, InferUArgs, SimulateArgs, SynthArgs, TrainArgs, ZonesArgs};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Zones(a) => zones(cli, a),
        Command::Simulate(a) => simulate_cmd(cli, a),
        Command::InferU(a) => infer_u(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
    }
}

fn load_config<T: DeserializeOwned + Default>(cli: &Cli) -> Result<T> {
    match &cli.config {
        None => Ok(T::default()),
        Some(path) => read_json(path).map_err(|e| match e {
            Error::Json { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        }),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("configurations serialize to JSON")
}

fn out_dir(path: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(path.to_path_buf())
}

fn filter(cli: &Cli) -> DayFilter {
    DayFilter {
        years: cli.years.clone(),
        months: Some(cli.months.clone()),
    }
}

fn load_filtered(cli: &Cli, manifest: &Path, data: &Path) -> Result<(GridManifest, Field)> {
    let (m, field) = load_dataset::<f64>(manifest, data)?;
    let field = field.filter_days(cli.years.as_deref(), Some(&cli.months));
    if field.n_days() == 0 {
        return Err(Error::Config("no days left after the year and month filters".into()));
    }
    info!("{} locations, {} days after filtering", field.n_locations(), field.n_days());
    Ok((m, field))
}

fn read_params(path: &Path) -> Result<Params> {
    let file: ParamsFile = read_json(path)?;
    file.params.validate()?;
    Ok(file.params)
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let mut spec: SynthSpec = load_config(cli)?;
    spec.rows = a.rows.unwrap_or(spec.rows);
    spec.cols = a.cols.unwrap_or(spec.cols);
    spec.n_days = a.days.unwrap_or(spec.n_days);
    spec.n_zones = a.zones.unwrap_or(spec.n_zones);
    spec.model = a.model.unwrap_or(spec.model);
    spec.seed = cli.seed.unwrap_or(spec.seed);
    let data = generate::<f64>(&spec)?;
    let dir = out_dir(&a.out)?;
    let config = to_value(&spec);

    write_manifest(&dir.join("manifest.json"), &data.manifest)?;
    write_field(&dir.join("data.csv"), &data.field)?;
    write_latent(&dir.join("truth_latent.csv"), &data.truth, data.field.days())?;
    write_json(
        &dir.join("truth_params.json"),
        &ParamsFile {
            schema_version: SCHEMA_VERSION,
            command: "synth".into(),
            seed: spec.seed,
            config: config.clone(),
            filter: None,
            n_locations: data.field.n_locations(),
            n_days: data.field.n_days(),
            params: data.params.clone(),
            pooled_fallbacks: Vec::new(),
            swapped: Vec::new(),
            trace: Vec::new(),
        },
    )?;
    write_json(
        &dir.join("truth_zones.json"),
        &ZonesFile::new("synth", spec.seed, config, &data.partition, Some(data.zone_params.clone())),
    )
}

fn train_cmd(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let mut config: TrainConfig = load_config(cli)?;
    config.seed = cli.seed.unwrap_or(config.seed);
    config.validate()?;
    let (m, field) = load_filtered(cli, &a.manifest, &a.data)?;
    let out = train(&field, &m.neighbor_sets(), &config)?;
    let dir = out_dir(&a.out)?;
    let map = out.gibbs.map;
    write_latent(&dir.join("latent.csv"), &map.mode, field.days())?;
    write_json(
        &dir.join("params.json"),
        &ParamsFile {
            schema_version: SCHEMA_VERSION,
            command: "train".into(),
            seed: config.seed,
            config: to_value(&config),
            filter: Some(filter(cli)),
            n_locations: field.n_locations(),
            n_days: field.n_days(),
            params: map.params,
            pooled_fallbacks: map.pooled_fallbacks,
            swapped: map.swapped,
            trace: out.gibbs.trace,
        },
    )
}

fn zones(cli: &Cli, a: &ZonesArgs) -> Result<()> {
    let mut config: ZoneConfig = load_config(cli)?;
    config.p = a.p.unwrap_or(config.p);
    config.seed = cli.seed.unwrap_or(config.seed);
    config.validate()?;
    let m = read_manifest(&a.manifest)?;
    let nb = m.neighbor_sets();
    let (state, _) = read_latent(&a.latent)?;
    let part = run_sccrp(&state, &nb, &config)?;
    info!("{} zones", part.n_zones());

    let zone_params = match &a.data {
        None => None,
        Some(data) => {
            let (_, field) = load_filtered(cli, &a.manifest, data)?;
            let floor = match &a.params {
                Some(p) => read_params(p)?.rain_floor_mm,
                None => TrainConfig::default().rain_floor_mm,
            };
            Some(learn_zone_params(&state, &field, &part, floor)?)
        }
    };
    let dir = out_dir(&a.out)?;
    write_json(
        &dir.join("zones.json"),
        &ZonesFile::new("zones", config.seed, to_value(&config), &part, zone_params),
    )
}

fn simulate_cmd(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut config: SimulationConfig = load_config(cli)?;
    config.model = a.model.unwrap_or(config.model);
    config.seed = cli.seed.unwrap_or(config.seed);
    let params = read_params(&a.params)?;
    let n = params.n_locations();

    let u_file = a.u_override.as_deref().map(read_u_series).transpose()?;
    config.n_days = match (a.days, &u_file) {
        (Some(d), _) => d,
        (None, Some(u)) => u.len(),
        (None, None) => config.n_days,
    };
    config.validate()?;

    let zones = match &a.zones {
        Some(path) => {
            let file: ZonesFile = read_json(path)?;
            let nb = a.manifest.as_deref().map(read_manifest).transpose()?.map(|m| m.neighbor_sets());
            let part = file.partition(nb.as_ref())?;
            if part.n_locations() != n {
                return Err(Error::Dimension(format!(
                    "zones cover {} locations, parameters {n}",
                    part.n_locations()
                )));
            }
            file.zone_params.map(|zp| (part, zp))
        }
        None => None,
    };
    if config.model >= 5 && zones.is_none() {
        return Err(Error::Usage(format!(
            "model {} needs --zones with zone parameters (run `zones` with --data)",
            config.model
        )));
    }

    let mut modes = Vec::new();
    let mut u_est = u_file.map(|u| {
        modes.push("u_override");
        UEstimate {
            u,
            method: UMethod::ViterbiFromY,
        }
    });
    let mut u_method = u_est.as_ref().map(|_| "file".to_string());
    let observed = match &a.observations {
        None => None,
        Some(path) => {
            modes.push("observations");
            let obs = Observation::new(n, config.n_days, read_observations(path)?)?;
            let zest = estimate_z_from_partial(&obs, &params)?;
            if u_est.is_none() {
                u_est = Some(infer_u_from_z(&zest, &params)?);
                u_method = Some("argmax_from_z".into());
            }
            Some((obs, zest))
        }
    };
    if config.model <= 2 && u_method.is_some() {
        u_method = Some("ignored".into());
    }
    let (config, mask) = apply_conditioning(&config, n, u_est.as_ref(), observed.as_ref().map(|(o, z)| (o, z)))?;
    let out = simulate(&params, zones.as_ref().map(|(p, zp)| (p, zp)), &config, mask.as_ref())?;

    let dir = out_dir(&a.out)?;
    let stem = format!("sim_{}", config.model);
    write_field(&dir.join(format!("{stem}.csv")), &out.field)?;
    write_latent(&dir.join(format!("{stem}_latent.csv")), &out.state, out.field.days())?;
    let mode = if modes.is_empty() { "none".to_string() } else { modes.join("+") };
    write_json(
        &dir.join(format!("{stem}_meta.json")),
        &SimMeta {
            schema_version: SCHEMA_VERSION,
            command: "simulate".into(),
            seed: config.seed,
            config: to_value(&config),
            model: config.model,
            parameter_count: out.parameter_count,
            n_locations: n,
            n_days: config.n_days,
            conditioning: Conditioning {
                mode,
                u_method,
                observed_cells: mask.as_ref().map_or(0, |m| m.count()),
            },
        },
    )
}

fn infer_u(cli: &Cli, a: &InferUArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let (est, config) = match (&a.data, &a.manifest, &a.observations, a.days) {
        (Some(data), Some(manifest), _, _) => {
            let (_, field) = load_filtered(cli, manifest, data)?;
            let est = infer_u_from_y(field.aggregate().values(), &params);
            (est, to_value(&filter(cli)))
        }
        (None, _, Some(path), Some(days)) => {
            let obs = Observation::new(params.n_locations(), days, read_observations(path)?)?;
            let zest = estimate_z_from_partial(&obs, &params)?;
            let config = serde_json::json!({ "days": days, "estimated_cells": zest.n_estimated(), "rounds": zest.rounds });
            (infer_u_from_z(&zest, &params)?, config)
        }
        _ => {
            return Err(Error::Usage(
                "infer-u needs --data with --manifest, or --observations with --days".into(),
            ))
        }
    };
    let dir = out_dir(&a.out)?;
    write_u_series(&dir.join("u_estimate.csv"), &est.u)?;
    write_json(
        &dir.join("u_estimate_meta.json"),
        &UEstimateMeta {
            schema_version: SCHEMA_VERSION,
            command: "infer-u".into(),
            config,
            method: match est.method {
                UMethod::ViterbiFromY => "viterbi_from_y".into(),
                UMethod::ArgmaxFromZ => "argmax_from_z".into(),
            },
            n_days: est.u.len(),
        },
    )
}

/// `dir/name.csv` -> `dir/name_latent.csv`.
fn latent_sibling(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_latent.csv"))
}

fn evaluate(cli: &Cli, a: &EvaluateArgs) -> Result<()> {
    let thresholds: Thresholds = load_config(cli)?;
    if !a.labels.is_empty() && a.labels.len() != a.sims.len() {
        return Err(Error::Usage(format!("{} labels for {} simulations", a.labels.len(), a.sims.len())));
    }
    if a.sims.is_empty() && a.latent.is_none() {
        return Err(Error::Usage("nothing to evaluate: pass --sim files or --latent".into()));
    }
    let (m, reference) = load_filtered(cli, &a.manifest, &a.data)?;
    let nb = m.neighbor_sets();
    let n = reference.n_locations();

    let mut observed_rows = Vec::new();
    let mut latent_rows = Vec::new();
    if let Some(path) = &a.latent {
        let (state, _) = read_latent(path)?;
        let y = reference.aggregate();
        latent_rows.push(("Reference".to_string(), MetricRow::Latent(latent_metrics(&state, y.values(), &nb)?)));
    }
    for (i, path) in a.sims.iter().enumerate() {
        let label = match a.labels.get(i) {
            Some(l) => l.clone(),
            None => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        };
        let sim: RainfallField<f64> = read_field(path, n)?;
        observed_rows.push((
            label.clone(),
            MetricRow::Observed(observed_metrics(&sim, &reference, &nb, thresholds)?),
        ));
        let latent = latent_sibling(path);
        if a.latent.is_some() && latent.exists() {
            let (state, _) = read_latent(&latent)?;
            let y = sim.aggregate();
            latent_rows.push((label, MetricRow::Latent(latent_metrics(&state, y.values(), &nb)?)));
        }
    }

    let dir = out_dir(&a.out)?;
    if !observed_rows.is_empty() {
        let report = render_report(&observed_rows)?;
        write_text(&dir.join("report.csv"), &report.csv)?;
        write_text(&dir.join("report.txt"), &report.text)?;
    }
    if !latent_rows.is_empty() {
        let report = render_report(&latent_rows)?;
        write_text(&dir.join("report_latent.csv"), &report.csv)?;
        write_text(&dir.join("report_latent.txt"), &report.text)?;
    }
    let rows = latent_rows
        .iter()
        .chain(&observed_rows)
        .map(|(label, row)| match row {
            MetricRow::Latent(m) => ReportRow {
                label: label.clone(),
                kind: "latent".into(),
                metrics: to_value(m),
            },
            MetricRow::Observed(m) => ReportRow {
                label: label.clone(),
                kind: "observed".into(),
                metrics: to_value(m),
            },
        })
        .collect();
    write_json(
        &dir.join("report.json"),
        &ReportFile {
            schema_version: SCHEMA_VERSION,
            command: "evaluate".into(),
            config: to_value(&thresholds),
            filter: filter(cli),
            rows,
        },
    )
}
