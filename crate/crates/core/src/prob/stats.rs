use crate::error::{Error, Result};
use crate::real::Real;

pub fn mean<F: Real>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    xs.iter().copied().sum::<F>() / F::from_usize(xs.len()).unwrap()
}

pub fn population_sd<F: Real>(xs: &[F]) -> F {
    if xs.is_empty() {
        return F::zero();
    }
    let m = mean(xs);
    let var = xs.iter().map(|&x| (x - m) * (x - m)).sum::<F>() / F::from_usize(xs.len()).unwrap();
    var.sqrt()
}

/// Pearson correlation. A constant series has undefined correlation, which is
/// reported as 0.
pub fn pearson_correlation<F: Real>(a: &[F], b: &[F]) -> Result<F> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "correlation of series with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Dimension(format!("correlation needs at least 2 points, got {}", a.len())));
    }
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == F::zero() || sbb == F::zero() {
        return Ok(F::zero());
    }
    let r = sab / (saa.sqrt() * sbb.sqrt());
    Ok(r.max(-F::one()).min(F::one()))
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<F: Real>(xs: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Turns log-weights into a probability vector in place.
pub fn log_normalize<F: Real>(logw: &mut [F]) {
    let max = logw.iter().copied().fold(F::neg_infinity(), F::max);
    let mut total = F::zero();
    for w in logw.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in logw.iter_mut() {
        *w /= total;
    }
}
