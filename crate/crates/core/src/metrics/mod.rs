//! Evaluation measures for latent state fields and simulated rainfall.

mod latent;
mod observed;
mod report;

pub use latent::{latent_metrics, LatentMetrics};
pub use observed::{observed_metrics, observed_metrics_raw, standardize, ObservedMetrics, Thresholds};
pub use report::{render_report, MetricRow, Report};
