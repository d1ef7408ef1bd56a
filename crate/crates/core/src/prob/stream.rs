use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

/// Seeded, splittable random stream.
///
/// A stream is identified by `(seed, stream_id)`; the underlying ChaCha8
/// generator is portable, so the same identity and call sequence produce the
/// same draws on every platform. [`RandomStream::split`] derives independent
/// sub-streams from integer keys such as `(sweep, location, day)`, which lets
/// callers draw for a site without depending on visit order.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Sub-stream keyed by `keys`, independent of how much of `self` has been
    /// consumed.
    pub fn split(&self, keys: &[u64]) -> RandomStream {
        let mut h = splitmix(self.stream_id ^ 0x5851_f42d_4c95_7f2d);
        for &k in keys {
            h = splitmix(h ^ splitmix(k));
        }
        RandomStream::new(self.seed, h)
    }

    pub fn unit<F: Real>(&mut self) -> F {
        F::sample_unit(self)
    }

    pub fn bernoulli<F: Real>(&mut self, p: F) -> bool {
        self.unit::<F>() < p
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws index `i` with probability `weights[i] / sum(weights)`.
pub fn sample_categorical<F: Real>(stream: &mut RandomStream, weights: &[F]) -> Result<usize> {
    let total = weights.iter().copied().sum::<F>();
    if !(total > F::zero()) || !total.is_finite() {
        return Err(Error::Sampling(format!(
            "categorical weights must have a positive finite sum, got {total}"
        )));
    }
    let mut u = stream.unit::<F>() * total;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > F::zero() {
            if u < w {
                return Ok(i);
            }
            u -= w;
            last_positive = i;
        }
    }
    // rounding left a sliver of mass past the end
    Ok(last_positive)
}

/// Symmetric Dirichlet(r) draw of dimension `n`.
pub fn sample_dirichlet<F: Real>(stream: &mut RandomStream, n: usize, r: F) -> Vec<F> {
    if n == 1 {
        return vec![F::one()];
    }
    let mut g: Vec<F> = (0..n).map(|_| F::sample_gamma(r, F::one(), stream)).collect();
    let total = g.iter().copied().sum::<F>();
    if total > F::zero() {
        g.iter_mut().for_each(|x| *x /= total);
    } else {
        // every gamma underflowed (tiny r); fall back to a vertex
        g.iter_mut().for_each(|x| *x = F::zero());
        g[0] = F::one();
    }
    g
}
