use std::fmt::Write;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{LatentMetrics, ObservedMetrics};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricRow<F> {
    Latent(LatentMetrics<F>),
    Observed(ObservedMetrics<F>),
}

/// Rendered table: CSV and aligned text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub csv: String,
    pub text: String,
}

const LATENT_HEADER: [&str; 7] = ["Model", "ZZ1", "SCoh", "TCoh", "SpDiv", "nZ1U1", "nZ1U2"];
const OBSERVED_HEADER: [&str; 9] = ["Model", "dMX", "dSX", "SY", "X100", "wetln", "dcr", "scr", "tcr"];

/// One row per label. All rows must be of the same kind.
pub fn render_report<F: Real>(rows: &[(String, MetricRow<F>)]) -> Result<Report> {
    let Some((_, first)) = rows.first() else {
        return Err(Error::Usage("a report needs at least one row".into()));
    };
    let latent = matches!(first, MetricRow::Latent(_));
    let mut table: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let header: &[&str] = if latent { &LATENT_HEADER } else { &OBSERVED_HEADER };
    table.push(header.iter().map(|s| s.to_string()).collect());
    for (label, row) in rows {
        let cells = match (row, latent) {
            (MetricRow::Latent(m), true) => vec![
                m.zz1.to_string(),
                num(m.scoh),
                num(m.tcoh),
                num(m.spdiv),
                opt(m.nz1u1),
                opt(m.nz1u2),
            ],
            (MetricRow::Observed(m), false) => vec![
                num(m.dmx),
                num(m.dsx),
                num(m.sy),
                m.x100.to_string(),
                opt(m.wetln),
                opt(m.dcr),
                opt(m.scr),
                opt(m.tcr),
            ],
            _ => return Err(Error::Usage("latent and observed rows cannot share a report".into())),
        };
        let mut line = vec![label.clone()];
        line.extend(cells);
        table.push(line);
    }

    let mut csv = String::new();
    for line in &table {
        csv.push_str(&line.join(","));
        csv.push('\n');
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| table.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut text = String::new();
    for line in &table {
        for (c, cell) in line.iter().enumerate() {
            if c == 0 {
                write!(text, "{cell:<w$}", w = widths[c]).unwrap();
            } else {
                write!(text, "  {cell:>w$}", w = widths[c]).unwrap();
            }
        }
        text.push('\n');
    }
    Ok(Report { csv, text })
}

fn num<F: Real>(x: F) -> String {
    format!("{:.4}", x.as_f64())
}

fn opt<F: Real>(x: Option<F>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(d: f64) -> ObservedMetrics<f64> {
        ObservedMetrics {
            dmx: d,
            dsx: 0.1,
            sy: 5.0,
            x100: 3,
            wetln: None,
            dcr: Some(0.8),
            scr: Some(0.5),
            tcr: Some(0.4),
            spatcr: Some(0.9),
        }
    }

    #[test]
    fn two_observed_rows() {
        let r = render_report(&[
            ("Model1".into(), MetricRow::Observed(obs(0.0))),
            ("Model2".into(), MetricRow::Observed(obs(0.2))),
        ])
        .unwrap();
        let lines: Vec<&str> = r.csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "Model,dMX,dSX,SY,X100,wetln,dcr,scr,tcr");
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
        assert!(lines[1].contains("NA"));
    }

    #[test]
    fn empty_and_mixed_are_rejected() {
        assert!(matches!(render_report::<f64>(&[]), Err(Error::Usage(_))));
        let latent = LatentMetrics {
            zz1: 1,
            scoh: 1.0,
            tcoh: 1.0,
            spdiv: 0.0,
            nz1u1: None,
            nz1u2: None,
        };
        let rows = [
            ("a".to_string(), MetricRow::Latent(latent)),
            ("b".to_string(), MetricRow::Observed(obs(0.0))),
        ];
        assert!(matches!(render_report(&rows), Err(Error::Usage(_))));
    }
}
