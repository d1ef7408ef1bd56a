//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All models are generic over [`Real`]; `f64` is the working precision of the
//! CLI and the aliases in the crate root, `f32` is supported for memory-bound
//! experiments on large grids.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar usable throughout the library.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Tolerance used when checking that a probability row sums to one.
    const ROW_TOL: f64;

    /// Converts an `f64` literal into this scalar type.
    fn cst(x: f64) -> Self;

    /// Natural log of the Gamma function.
    fn ln_gamma(self) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma draw with shape-scale parametrization. Arguments must be positive.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self;

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const ROW_TOL: f64 = 1e-12;

    #[inline]
    fn cst(x: f64) -> Self {
        x
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgamma(self)
    }

    #[inline]
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }

    fn sample_gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self {
        let dist = rand_distr::Gamma::new(shape, scale).expect("positive gamma parameters");
        rng.sample(dist)
    }
}

impl Real for f32 {
    const ROW_TOL: f64 = 1e-5;

    #[inline]
    fn cst(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn ln_gamma(self) -> Self {
        libm::lgammaf(self)
    }

    #[inline]
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }

    fn sample_gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self {
        let dist = rand_distr::Gamma::new(shape, scale).expect("positive gamma parameters");
        rng.sample(dist)
    }
}
