//! Scalar abstraction: the numeric tower is generic over the real field,
//! with `f64` as the working instantiation (see the aliases in `lib.rs`).

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the library is generic over: `f32` or `f64`.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: RealField + FromPrimitive + ToPrimitive + Copy + Default + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn r64<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Complex constant from `f64` parts.
#[inline]
pub fn c64<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(r64(re), r64(im))
}

/// Real scalar promoted to complex.
#[inline]
pub fn cr<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Imaginary scalar promoted to complex.
#[inline]
pub fn ci<T: Real>(x: T) -> Complex<T> {
    Complex::new(T::zero(), x)
}

/// Finiteness test that works for any `Real` (NaN and ±∞ both fail).
#[inline]
pub fn is_finite<T: Real>(x: T) -> bool {
    (x - x).is_zero()
}

/// Complex exponential for generic scalars.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    nalgebra::ComplexField::exp(z)
}

/// Principal complex logarithm for generic scalars.
#[inline]
pub fn cln<T: Real>(z: Complex<T>) -> Complex<T> {
    nalgebra::ComplexField::ln(z)
}

/// Modulus for generic complex scalars.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

/// Square root of the spectral parameter on the branch used throughout:
/// cut along `[0, ∞)` with boundary values from above, so `Im √λ ≥ 0`,
/// real `λ > 0` maps to `+√λ` and real `λ < 0` maps to `i√|λ|`.
///
/// A spectral parameter with an exactly zero imaginary part is read as the
/// `λ + i0` limit; callers wanting the lower edge pass a small negative
/// imaginary part explicitly.
pub fn sqrt_lambda<T: Real>(lambda: Complex<T>) -> Complex<T> {
    if lambda.im.is_zero() {
        if lambda.re >= T::zero() {
            Complex::new(lambda.re.sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), (-lambda.re).sqrt())
        }
    } else {
        // i · principal_sqrt(−λ): moves the principal cut from (−∞,0] to [0,∞)
        // and lands in the upper half plane.
        let s = nalgebra::ComplexField::sqrt(-lambda);
        Complex::new(-s.im, s.re)
    }
}
