//! On-disk formats: manifest JSON, rainfall CSV, latent-state CSV,
//! observation and U-series CSVs, and JSON artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DayLabel, GridManifest, ManifestFile, RainfallField};
use crate::latent::LatentState;
use crate::real::Real;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::json(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::json(path, e))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<GridManifest> {
    let file: ManifestFile = read_json(path)?;
    GridManifest::from_file(&file)
}

pub fn write_manifest(path: &Path, manifest: &GridManifest) -> Result<()> {
    write_json(path, &manifest.to_file())
}

/// Reads and validates a manifest plus its rainfall CSV.
pub fn load_dataset<F: Real>(manifest_path: &Path, data_path: &Path) -> Result<(GridManifest, RainfallField<F>)> {
    let manifest = read_manifest(manifest_path)?;
    let field = read_field(data_path, manifest.n_locations())?;
    Ok((manifest, field))
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn records<R: Read>(path: &Path, r: R) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(r).records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            format_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(out.len() + 1, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

/// Reads `day,loc_0,...,loc_{S-1}`; `n_locations` must match the manifest.
pub fn read_field<F: Real>(path: &Path, n_locations: usize) -> Result<RainfallField<F>> {
    parse_field(path, open(path)?, n_locations)
}

pub fn parse_field<F: Real, R: Read>(path: &Path, r: R, n_locations: usize) -> Result<RainfallField<F>> {
    let rows = records(path, r)?;
    let Some((line, header)) = rows.first() else {
        return Err(format_err(path, 1, "empty file, expected a header row"));
    };
    let header_ok = header.get(0) == Some("day") && header.iter().skip(1).enumerate().all(|(i, name)| name == format!("loc_{i}"));
    if !header_ok {
        return Err(format_err(
            path,
            *line,
            "header must be `day,loc_0,loc_1,...` with consecutive location ids",
        ));
    }
    let n_cols = header.len() - 1;
    if n_cols != n_locations {
        return Err(Error::Dimension(format!(
            "{} has {n_cols} location columns but the manifest lists {n_locations} locations",
            path.display()
        )));
    }
    let n_days = rows.len() - 1;
    let mut values = vec![F::zero(); n_locations * n_days];
    let mut days = Vec::with_capacity(n_days);
    for (t, (line, rec)) in rows.iter().skip(1).enumerate() {
        if rec.len() != n_cols + 1 {
            return Err(Error::Dimension(format!(
                "{} line {line}: {} fields, expected {}",
                path.display(),
                rec.len(),
                n_cols + 1
            )));
        }
        let day = rec[0].parse::<DayLabel>().map_err(|m| format_err(path, *line, m))?;
        days.push(day);
        for s in 0..n_cols {
            let x: F = rec[s + 1]
                .parse()
                .map_err(|_| format_err(path, *line, format!("loc_{s}: {:?} is not a number", &rec[s + 1])))?;
            if !x.is_finite() || x < F::zero() {
                return Err(Error::Validation(format!(
                    "{} line {line}: rainfall at (s={s}, t={t}) is {x}; values must be finite and >= 0",
                    path.display()
                )));
            }
            values[s * n_days + t] = x;
        }
    }
    RainfallField::new(n_locations, days, values)
}

pub fn write_field<F: Real>(path: &Path, field: &RainfallField<F>) -> Result<()> {
    let mut w = create(path)?;
    render_field(&mut w, field).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Values use the shortest decimal form that round-trips exactly.
pub fn render_field<F: Real, W: Write>(w: &mut W, field: &RainfallField<F>) -> std::io::Result<()> {
    write!(w, "day")?;
    for s in 0..field.n_locations() {
        write!(w, ",loc_{s}")?;
    }
    writeln!(w)?;
    for t in 0..field.n_days() {
        write!(w, "{}", field.days()[t])?;
        for s in 0..field.n_locations() {
            write!(w, ",{}", field.get(s, t))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `day,u,z_loc_0,...` with one-based state codes.
pub fn write_latent(path: &Path, state: &LatentState, days: &[DayLabel]) -> Result<()> {
    let mut w = create(path)?;
    render_latent(&mut w, state, days).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn render_latent<W: Write>(w: &mut W, state: &LatentState, days: &[DayLabel]) -> std::io::Result<()> {
    write!(w, "day,u")?;
    for s in 0..state.n_locations() {
        write!(w, ",z_loc_{s}")?;
    }
    writeln!(w)?;
    for t in 0..state.n_days() {
        match days.get(t) {
            Some(d) => write!(w, "{d},{}", state.u(t) + 1)?,
            None => write!(w, "{t},{}", state.u(t) + 1)?,
        }
        for s in 0..state.n_locations() {
            write!(w, ",{}", state.z(s, t) + 1)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_latent(path: &Path) -> Result<(LatentState, Vec<DayLabel>)> {
    let rows = records(path, open(path)?)?;
    let Some((line, header)) = rows.first() else {
        return Err(format_err(path, 1, "empty file, expected a header row"));
    };
    let header_ok = header.get(0) == Some("day")
        && header.get(1) == Some("u")
        && header.iter().skip(2).enumerate().all(|(i, name)| name == format!("z_loc_{i}"));
    if !header_ok {
        return Err(format_err(path, *line, "header must be `day,u,z_loc_0,...`"));
    }
    let n_locations = header.len() - 2;
    let n_days = rows.len() - 1;
    let mut z = vec![0u8; n_locations * n_days];
    let mut u = Vec::with_capacity(n_days);
    let mut days = Vec::with_capacity(n_days);
    for (t, (line, rec)) in rows.iter().skip(1).enumerate() {
        if rec.len() != n_locations + 2 {
            return Err(Error::Dimension(format!(
                "{} line {line}: {} fields, expected {}",
                path.display(),
                rec.len(),
                n_locations + 2
            )));
        }
        if let Ok(d) = rec[0].parse::<DayLabel>() {
            days.push(d);
        }
        u.push(parse_state(path, *line, &rec[1], 3)?);
        for s in 0..n_locations {
            z[s * n_days + t] = parse_state(path, *line, &rec[s + 2], 2)?;
        }
    }
    if days.len() != n_days {
        days.clear();
    }
    Ok((LatentState::new(n_locations, n_days, z, u)?, days))
}

fn parse_state(path: &Path, line: usize, raw: &str, n: u8) -> Result<u8> {
    match raw.parse::<u8>() {
        Ok(v) if (1..=n).contains(&v) => Ok(v - 1),
        _ => Err(format_err(path, line, format!("state {raw:?} is not in 1..={n}"))),
    }
}

/// `t,u` rows, zero-based day index and one-based state.
pub fn write_u_series(path: &Path, u: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    let res: std::io::Result<()> = (|| {
        writeln!(w, "t,u")?;
        for (t, &l) in u.iter().enumerate() {
            writeln!(w, "{t},{}", l + 1)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn read_u_series(path: &Path) -> Result<Vec<u8>> {
    let rows = records(path, open(path)?)?;
    let Some((line, header)) = rows.first() else {
        return Err(format_err(path, 1, "empty file, expected a header row"));
    };
    if header.iter().collect::<Vec<_>>() != ["t", "u"] {
        return Err(format_err(path, *line, "header must be `t,u`"));
    }
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (i, (line, rec)) in rows.iter().skip(1).enumerate() {
        let t: usize = rec
            .get(0)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format_err(path, *line, "bad day index"))?;
        if t != i {
            return Err(format_err(path, *line, format!("expected day index {i}, found {t}")));
        }
        let raw = rec.get(1).unwrap_or("");
        out.push(parse_state(path, *line, raw, 3)?);
    }
    Ok(out)
}

/// `s,t,x` rows of revealed rainfall.
pub fn read_observations<F: Real>(path: &Path) -> Result<Vec<(usize, usize, F)>> {
    let rows = records(path, open(path)?)?;
    let Some((line, header)) = rows.first() else {
        return Err(format_err(path, 1, "empty file, expected a header row"));
    };
    if header.iter().collect::<Vec<_>>() != ["s", "t", "x"] {
        return Err(format_err(path, *line, "header must be `s,t,x`"));
    }
    rows.iter()
        .skip(1)
        .map(|(line, rec)| {
            let field = |i: usize| rec.get(i).unwrap_or("");
            let s = field(0).parse().map_err(|_| format_err(path, *line, "bad location index"))?;
            let t = field(1).parse().map_err(|_| format_err(path, *line, "bad day index"))?;
            let x = field(2).parse().map_err(|_| format_err(path, *line, "bad rainfall value"))?;
            Ok((s, t, x))
        })
        .collect()
}

pub fn write_observations<F: Real>(path: &Path, entries: &[(usize, usize, F)]) -> Result<()> {
    let mut w = create(path)?;
    let res: std::io::Result<()> = (|| {
        writeln!(w, "s,t,x")?;
        for (s, t, x) in entries {
            writeln!(w, "{s},{t},{x}")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
