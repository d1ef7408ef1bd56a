use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::RandomStream;

/// Gamma distribution in shape-scale form: mean = shape * scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Real")]
pub struct GammaParams<F> {
    pub shape: F,
    pub scale: F,
}

impl<F: Real> GammaParams<F> {
    pub fn new(shape: F, scale: F) -> Result<Self> {
        if !(shape > F::zero() && shape.is_finite()) || !(scale > F::zero() && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma parameters must be positive and finite (shape={shape}, scale={scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> F {
        self.shape * self.scale
    }

    pub fn variance(&self) -> F {
        self.shape * self.scale * self.scale
    }

    /// Log density at `x`. Rainfall must be floored to a positive value first.
    pub fn log_pdf(&self, x: F) -> Result<F> {
        if !(x > F::zero()) {
            return Err(Error::Domain(format!("gamma density evaluated at x={x} <= 0")));
        }
        Ok(self.log_pdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn log_pdf_unchecked(&self, x: F) -> F {
        (self.shape - F::one()) * x.ln() - x / self.scale - self.shape.ln_gamma() - self.shape * self.scale.ln()
    }

    pub fn sample(&self, stream: &mut RandomStream) -> F {
        F::sample_gamma(self.shape, self.scale, stream)
    }
}

/// Method-of-moments fit: shape = mean^2 / var, scale = var / mean, using the
/// population (1/n) variance.
pub fn fit_gamma_moments<F: Real>(samples: &[F]) -> Result<GammaParams<F>> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 samples for a gamma fit, got {}",
            samples.len()
        )));
    }
    let n = F::from_usize(samples.len()).unwrap();
    let mean = samples.iter().copied().sum::<F>() / n;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>() / n;
    from_moments(mean, var)
}

/// Weighted method-of-moments fit, used as the M-step of mixture EM.
pub fn fit_gamma_weighted<F: Real>(samples: &[F], weights: &[F]) -> Result<GammaParams<F>> {
    if samples.len() != weights.len() {
        return Err(Error::Dimension(format!("{} samples vs {} weights", samples.len(), weights.len())));
    }
    let total = weights.iter().copied().sum::<F>();
    if !(total > F::zero()) {
        return Err(Error::Degenerate("weights sum to zero".into()));
    }
    let mean = samples.iter().zip(weights).map(|(&x, &w)| w * x).sum::<F>() / total;
    let var = samples.iter().zip(weights).map(|(&x, &w)| w * (x - mean) * (x - mean)).sum::<F>() / total;
    from_moments(mean, var)
}

fn from_moments<F: Real>(mean: F, var: F) -> Result<GammaParams<F>> {
    if !(var > F::zero()) {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    if !(mean > F::zero()) {
        return Err(Error::Degenerate(format!("sample mean {mean} is not positive")));
    }
    GammaParams::new(mean * mean / var, var / mean)
}
