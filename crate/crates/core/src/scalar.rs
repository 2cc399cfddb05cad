//! Scalar abstraction: every numeric kernel in this crate is generic over
//! [`Real`], so the same code runs in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::distributions::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + SampleUniform
    + Display
    + FromStr
    + Debug
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal not representable in scalar type")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }

    /// One standard-normal draw.
    fn std_normal<G: rand::Rng + ?Sized>(rng: &mut G) -> Self;
}

impl Real for f32 {
    fn std_normal<G: rand::Rng + ?Sized>(rng: &mut G) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}

impl Real for f64 {
    fn std_normal<G: rand::Rng + ?Sized>(rng: &mut G) -> Self {
        rng.sample(rand_distr::StandardNormal)
    }
}
