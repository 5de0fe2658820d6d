//! Small dense-matrix helpers shared across the crate. Everything here is
//! sized for the n ≤ few regime of matrix potentials; clarity over blocking.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{is_finite, r64, Real};

pub type RMat<T> = DMatrix<T>;
pub type CMat<T> = DMatrix<Complex<T>>;

/// Complex identity matrix.
pub fn identity_c<T: Real>(n: usize) -> CMat<T> {
    CMat::<T>::identity(n, n)
}

/// Lift a real matrix into the complex plane.
pub fn to_complex<T: Real>(m: &RMat<T>) -> CMat<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

/// Spectral (operator 2-) norm via the Hermitian eigendecomposition of AᴴA.
pub fn spectral_norm<T: Real>(m: &CMat<T>) -> T {
    if m.iter().all(|z| z.norm_sqr().is_zero()) {
        return T::zero();
    }
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    let mut max = T::zero();
    for &v in eig.eigenvalues.iter() {
        if v > max {
            max = v;
        }
    }
    max.sqrt()
}

/// Spectral norm of a real matrix.
pub fn spectral_norm_real<T: Real>(m: &RMat<T>) -> T {
    spectral_norm(&to_complex(m))
}

/// Singular values, descending.
pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    let gram = m.adjoint() * m;
    let eig = gram.symmetric_eigen();
    let mut sv: Vec<T> = eig
        .eigenvalues
        .iter()
        .map(|&v| if v > T::zero() { v.sqrt() } else { T::zero() })
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Hermitian part (A + Aᴴ)/2.
pub fn hermitian_part<T: Real>(m: &CMat<T>) -> CMat<T> {
    let half = r64::<T>(0.5);
    (m + m.adjoint()).map(|z| z * half)
}

/// Largest entry modulus.
pub fn max_abs<T: Real>(m: &CMat<T>) -> T {
    let mut max = T::zero();
    for z in m.iter() {
        let a = z.norm_sqr().sqrt();
        if a > max {
            max = a;
        }
    }
    max
}

/// Largest imaginary part in modulus.
pub fn max_imag<T: Real>(m: &CMat<T>) -> T {
    let mut max = T::zero();
    for z in m.iter() {
        let a = z.im.abs();
        if a > max {
            max = a;
        }
    }
    max
}

/// Real part of a complex matrix.
pub fn real_part<T: Real>(m: &CMat<T>) -> RMat<T> {
    m.map(|z| z.re)
}

/// The block matrix J = [[0, −I], [I, 0]] of size 2n×2n.
pub fn symplectic_form<T: Real>(n: usize) -> RMat<T> {
    let mut j = RMat::<T>::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -T::one();
        j[(n + i, i)] = T::one();
    }
    j
}

/// Determinant through LU with partial pivoting.
pub fn det<T: Real>(m: &CMat<T>) -> Complex<T> {
    m.clone().lu().determinant()
}

/// Inverse through LU; error when numerically singular.
pub fn inverse<T: Real>(m: &CMat<T>) -> Result<CMat<T>> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Evaluation("matrix numerically singular".into()))
}

/// Eigenvalues of a general complex matrix.
///
/// Schur iteration first; if it stalls, falls back to Durand–Kerner on the
/// characteristic polynomial (adequate for the small n used here).
pub fn complex_eigenvalues<T: Real>(m: &CMat<T>) -> Result<Vec<Complex<T>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let scale = max_abs(m).max(T::one());
    if let Some(schur) = m.clone().try_schur(r64::<T>(1e-14) * scale, 200 * n) {
        let (_, t) = schur.unpack();
        return Ok(t.diagonal().iter().copied().collect());
    }
    durand_kerner(&char_poly(m))
}

/// Characteristic polynomial coefficients c₀ + c₁λ + … + λⁿ by
/// Faddeev–LeVerrier.
fn char_poly<T: Real>(m: &CMat<T>) -> Vec<Complex<T>> {
    let n = m.nrows();
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n + 1];
    coeffs[n] = Complex::new(T::one(), T::zero());
    let mut aux = identity_c::<T>(n);
    for k in 1..=n {
        if k > 1 {
            aux = m * &aux;
            for i in 0..n {
                aux[(i, i)] += coeffs[n - k + 1];
            }
        }
        let prod = m * &aux;
        let mut tr = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            tr += prod[(i, i)];
        }
        coeffs[n - k] = -tr / Complex::new(r64::<T>(k as f64), T::zero());
    }
    coeffs
}

fn durand_kerner<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let deg = coeffs.len() - 1;
    let eval = |z: Complex<T>| {
        let mut acc = coeffs[deg];
        for k in (0..deg).rev() {
            acc = acc * z + coeffs[k];
        }
        acc
    };
    // deterministic seed ring avoiding symmetry
    let mut roots: Vec<Complex<T>> = (0..deg)
        .map(|k| {
            let ang = r64::<T>(0.4) + r64::<T>(2.0) * T::pi() * r64::<T>(k as f64 / deg as f64);
            Complex::new(ang.cos(), ang.sin()) * r64::<T>(1.3)
        })
        .collect();
    for _ in 0..200 {
        let mut shift = T::zero();
        for i in 0..deg {
            let mut denom = Complex::new(T::one(), T::zero());
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            let s = step.norm_sqr().sqrt();
            if s > shift {
                shift = s;
            }
        }
        if shift < r64::<T>(1e-15) {
            break;
        }
    }
    for r in &roots {
        if !is_finite(r.re) || !is_finite(r.im) {
            return Err(Error::Evaluation("eigenvalue iteration diverged".into()));
        }
    }
    Ok(roots)
}
