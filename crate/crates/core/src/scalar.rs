//! Scalar abstraction shared by every numeric module.
//!
//! All signal-processing code is written against [`Real`], which is
//! implemented for `f32` and `f64`. Complex baseband quantities are
//! `num_complex::Complex<T>`; antenna-domain vectors are plain slices of them.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar usable throughout the simulator: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + rustfft::FftNum
    + 'static
{
    /// Lossy conversion from `f64`; every value used by the simulator fits.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex antenna-domain vector.
pub type CVec<T> = Vec<Complex<T>>;

/// Hermitian inner product `a^H b`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr())
}

pub fn norm<T: Real>(a: &[Complex<T>]) -> T {
    norm_sqr(a).sqrt()
}

pub fn scale<T: Real>(a: &[Complex<T>], s: T) -> CVec<T> {
    a.iter().map(|x| x.scale(s)).collect()
}

/// `wa * a + wb * b` with real weights.
pub fn weighted_sum<T: Real>(wa: T, a: &[Complex<T>], wb: T, b: &[Complex<T>]) -> CVec<T> {
    a.iter().zip(b).map(|(x, y)| x.scale(wa) + y.scale(wb)).collect()
}

pub fn zeros<T: Real>(n: usize) -> CVec<T> {
    vec![Complex::new(T::zero(), T::zero()); n]
}

/// Linear power ratio to decibels.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
