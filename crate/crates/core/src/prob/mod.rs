//! Probability primitives: Gamma and Gaussian densities, moment fitting,
//! Markov-chain stationary distributions, correlation, and seeded streams.

mod gamma;
mod gaussian;
mod markov;
mod stats;
mod stream;

pub use gamma::{fit_gamma_moments, fit_gamma_weighted, GammaParams};
pub use gaussian::{fit_gaussian, GaussianParams};
pub use markov::{stationary_distribution, TransitionMatrix};
pub use stats::{argmax, log_normalize, mean, pearson_correlation, population_sd};
pub use stream::{sample_categorical, sample_dirichlet, RandomStream};
