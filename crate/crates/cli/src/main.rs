use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod artifacts;
mod commands;

/// Latent-state models of daily gridded rainfall.
#[derive(Debug, Parser)]
#[command(name = "rainfield", version, about)]
pub struct Cli {
    /// JSON file with the command's configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Random seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Years to keep when reading rainfall data, e.g. `2000,2002,2004-2011`.
    #[arg(long, global = true, value_parser = parse_list::<i32>)]
    pub years: Option<::std::vec::Vec<i32>>,

    /// Months to keep when reading rainfall data.
    #[arg(long, global = true, value_parser = parse_list::<u32>, default_value = "6-9")]
    pub months: ::std::vec::Vec<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-truth dataset.
    Synth(SynthArgs),
    /// Fit the latent-state field and estimate model parameters.
    Train(TrainArgs),
    /// Cluster locations into spatially coherent zones.
    Zones(ZonesArgs),
    /// Simulate rainfall from one of the six models.
    Simulate(SimulateArgs),
    /// Estimate the all-India state series.
    InferU(InferUArgs),
    /// Compare simulations with reference data.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub zones: Option<usize>,
    /// Generating model, 4 or 5.
    #[arg(long)]
    pub model: Option<u8>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ZonesArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Latent states, usually the training mode.
    #[arg(long)]
    pub latent: PathBuf,
    /// Rainfall data; when given, zone simulation parameters are learned too.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Trained parameters, for the rainfall floor.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Agreement probability.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub model: Option<u8>,
    /// Zones artifact; required by models 5 and 6.
    #[arg(long)]
    pub zones: Option<PathBuf>,
    /// Grid manifest, used to check that the zones are connected.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub days: Option<usize>,
    /// All-India series to drive the simulation (`t,u` CSV).
    #[arg(long)]
    pub u_override: Option<PathBuf>,
    /// Revealed rainfall cells (`s,t,x` CSV) copied into the output.
    #[arg(long)]
    pub observations: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferUArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Decode from the daily aggregate of this data (needs `--manifest`).
    #[arg(long, requires = "manifest")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Estimate from revealed cells instead (needs `--days`).
    #[arg(long, conflicts_with = "data", requires = "days")]
    pub observations: Option<PathBuf>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Reference rainfall.
    #[arg(long)]
    pub data: PathBuf,
    /// Simulated fields; a `<name>_latent.csv` next to each is picked up.
    #[arg(long = "sim", num_args = 1..)]
    pub sims: Vec<PathBuf>,
    /// Row labels, one per simulation; defaults to the file stems.
    #[arg(long = "label", num_args = 1..)]
    pub labels: Vec<String>,
    /// Reference latent states, enabling the latent table.
    #[arg(long)]
    pub latent: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_list<T>(raw: &str) -> Result<Vec<T>, String>
where
    T: std::str::FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + From<u8>,
{
    let mut out = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("cannot read {part:?} as a value or an a-b range");
        match part.split_once('-') {
            Some((a, b)) if !a.is_empty() => {
                let (a, b): (T, T) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                let mut v = a;
                while v <= b {
                    out.push(v);
                    v = v + T::from(1);
                }
            }
            _ => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

/// Process exit code for each error category.
fn exit_code(err: &rainfield::Error) -> u8 {
    use rainfield::Error as E;
    match err {
        E::Usage(_) => 2,
        E::Config(_) => 3,
        E::Format { .. } | E::Json { .. } => 4,
        E::Dimension(_) => 5,
        E::Validation(_) => 6,
        E::Io { .. } => 7,
        E::Domain(_) | E::Degenerate(_) | E::Sampling(_) | E::Convergence { .. } => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(
            parse_list::<i32>("2000,2002,2004-2006").unwrap(),
            vec![2000, 2002, 2004, 2005, 2006]
        );
        assert_eq!(parse_list::<u32>("6-9").unwrap(), vec![6, 7, 8, 9]);
        assert!(parse_list::<u32>("9-6").is_err());
        assert!(parse_list::<u32>("june").is_err());
    }

    #[test]
    fn command_line_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
