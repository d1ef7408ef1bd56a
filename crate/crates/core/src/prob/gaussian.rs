use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct GaussianParams<F> {
    pub mean: F,
    pub sd: F,
}

impl<F: Real> GaussianParams<F> {
    pub fn new(mean: F, sd: F) -> Result<Self> {
        if !(sd > F::zero() && sd.is_finite()) || !mean.is_finite() {
            return Err(Error::Domain(format!(
                "gaussian needs finite mean and positive sd (mean={mean}, sd={sd})"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn log_pdf(&self, x: F) -> F {
        let z = (x - self.mean) / self.sd;
        -F::cst(0.5) * z * z - self.sd.ln() - F::cst(0.5 * (2.0 * std::f64::consts::PI).ln())
    }
}

/// Maximum-likelihood Gaussian fit (population sd).
pub fn fit_gaussian<F: Real>(samples: &[F]) -> Result<GaussianParams<F>> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples for a gaussian fit, got {}",
            samples.len()
        )));
    }
    let n = F::from_usize(samples.len()).unwrap();
    let mean = samples.iter().copied().sum::<F>() / n;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>() / n;
    if !(var > F::zero()) {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    GaussianParams::new(mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_at_zero() {
        let g = GaussianParams::new(0.0, 1.0).unwrap();
        let expected = -(2.0 * std::f64::consts::PI).sqrt().ln();
        assert!((g.log_pdf(0.0) - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_sd() {
        assert!(GaussianParams::new(1.0, 0.0).is_err());
        assert!(fit_gaussian(&[2.0, 2.0]).is_err());
    }
}
