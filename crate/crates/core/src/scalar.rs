//! Scalar abstraction.
//!
//! All numerics are written against [`Real`], a real floating-point type, with
//! matrix entries in `Complex<R>`. `f64` is the working precision; `f32` is
//! supported for the same code paths; fixed thresholds pass through
//! [`Real::tol`] so they never sit below round-off.

use std::fmt::{Debug, Display};

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by every routine in the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `max(x, 256 ε)` with `ε` the machine epsilon of `Self`.
    #[inline]
    fn tol(x: f64) -> Self {
        let eps = if std::mem::size_of::<Self>() == 4 { f32::EPSILON as f64 } else { f64::EPSILON };
        Self::lit(x.max(256.0 * eps))
    }

    #[inline]
    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<R> = Complex<R>;
pub type CMat<R> = DMatrix<Complex<R>>;
pub type CVec<R> = DVector<Complex<R>>;

#[inline]
pub fn cr<R: Real>(x: R) -> C<R> {
    Complex::new(x, R::zero())
}

#[inline]
pub fn c64_to<R: Real>(re: f64, im: f64) -> C<R> {
    Complex::new(R::lit(re), R::lit(im))
}

#[inline]
pub fn modulus<R: Real>(z: C<R>) -> R {
    z.norm_sqr().sqrt()
}

/// Identity of dimension `n`.
pub fn eye<R: Real>(n: usize) -> CMat<R> {
    CMat::<R>::identity(n, n)
}

/// Kronecker product `a ⊗ b` with `a` as the more significant factor.
pub fn kron<R: Real>(a: &CMat<R>, b: &CMat<R>) -> CMat<R> {
    a.kronecker(b)
}
