//! Scattering data for compactly supported potentials: coefficient pairs of
//! the Neumann and Jost solutions against the plane-wave basis past the
//! support, negative-spectrum location through the determinant of the
//! growing-mode coefficient, and residuals of the algebraic identities the
//! data must satisfy on the positive axis.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    complex_eigenvalues, det, identity_c, max_abs, singular_values, spectral_norm, CMat,
};
use crate::potential::{birman_bound, MatrixPotential};
use crate::propagator::{
    gauge_solution, gauge_to_jost, neumann_solution_with, CauchyData, OdeOptions,
};
use crate::real::{cabs, cexp, ci, cr, r64, sqrt_lambda, Real};

/// Scattering record at one spectral parameter: `u = v⁺A + v⁻B` for the
/// Neumann solution and `w = v⁺P + v⁻S` for the Jost solution.
#[derive(Clone, Debug)]
pub struct ScatteringData<T: Real> {
    pub lambda: Complex<T>,
    pub a: CMat<T>,
    pub b: CMat<T>,
    pub p: CMat<T>,
    pub s: CMat<T>,
    pub det_s: Complex<T>,
    pub match_x: T,
}

/// Splits Cauchy data past the support into plane-wave coefficients:
/// `value = e^{i√λ m} C⁺ + e^{−i√λ m} C⁻`.
pub fn match_plane_waves<T: Real>(d: &CauchyData<T>) -> Result<(CMat<T>, CMat<T>)> {
    if d.lambda.re.is_zero() && d.lambda.im.is_zero() {
        return Err(Error::BranchPoint);
    }
    let sq = sqrt_lambda(d.lambda);
    let i_sq = sq * ci(T::one());
    let up = cexp(-(i_sq * cr(d.x)));
    let dn = cexp(i_sq * cr(d.x));
    let half = cr(r64::<T>(0.5));
    let shifted = &d.derivative * (Complex::new(T::one(), T::zero()) / i_sq);
    let cplus = (&d.value + &shifted) * (up * half);
    let cminus = (&d.value - &shifted) * (dn * half);
    Ok((cplus, cminus))
}

/// Full scattering data with matching at `support_end + 1`.
pub fn scattering_data<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
) -> Result<ScatteringData<T>> {
    scattering_data_with(p, lambda, &OdeOptions::default())
}

pub fn scattering_data_with<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    opts: &OdeOptions<T>,
) -> Result<ScatteringData<T>> {
    if lambda.re.is_zero() && lambda.im.is_zero() {
        return Err(Error::BranchPoint);
    }
    let support = p.compact_support_end()?;
    let m = support + T::one();
    let sq = sqrt_lambda(lambda);
    if sq.im * m > r64(300.0) {
        return Err(Error::Parameter(
            "plane-wave coefficients not representable this deep in the plane; \
             use jost_transmission for the transmission matrix"
                .into(),
        ));
    }
    let u = neumann_solution_with(p, lambda, m, opts)?;
    let (a, b) = match_plane_waves(&u)?;
    // the Jost pair goes through the bounded gauge
    let (z, zdot) = gauge_solution(p, lambda, m, opts)?;
    let w = gauge_to_jost(&z, &zdot, lambda, m)?;
    let (pp, s) = match_plane_waves(&w)?;
    let det_s = det(&s);
    Ok(ScatteringData {
        lambda,
        a,
        b,
        p: pp,
        s,
        det_s,
        match_x: m,
    })
}

/// Transmission matrix alone, extracted in the bounded gauge; valid at any
/// depth in the cut plane (used by the asymptotic-expansion machinery).
pub fn jost_transmission<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    opts: &OdeOptions<T>,
) -> Result<CMat<T>> {
    if lambda.re.is_zero() && lambda.im.is_zero() {
        return Err(Error::BranchPoint);
    }
    let support = p.compact_support_end()?;
    let m = support + T::one();
    let (z, zdot) = gauge_solution(p, lambda, m, opts)?;
    let i_sq = sqrt_lambda(lambda) * ci(T::one());
    // z = e^{2i√λ x} P + S  ⇒  S = z − ż/(2i√λ)
    Ok(&z - &zdot * (Complex::new(T::one(), T::zero()) / (i_sq * cr(r64(2.0)))))
}

/// Coefficient of the growing plane wave in the Neumann solution; its
/// determinant vanishes exactly at the negative eigenvalues.
pub fn neumann_b<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    opts: &OdeOptions<T>,
) -> Result<CMat<T>> {
    let support = p.compact_support_end()?;
    let m = support + T::one();
    let u = neumann_solution_with(p, lambda, m, opts)?;
    let (_, b) = match_plane_waves(&u)?;
    Ok(b)
}

/// One located eigenvalue with the kernel dimension of B at the root.
#[derive(Clone, Copy, Debug)]
pub struct BoundState<T> {
    pub lambda: T,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Default)]
pub struct BoundStates<T> {
    pub states: Vec<BoundState<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> BoundStates<T> {
    /// Eigenvalues repeated according to multiplicity, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut out = Vec::new();
        for s in &self.states {
            for _ in 0..s.multiplicity {
                out.push(s.lambda);
            }
        }
        out
    }
}

/// Scans `det B(λ)` over `(Λ₀, 0)` on an adaptive grid, bisects the sign
/// changes, and flags non-sign-changing dips as candidate double roots.
pub fn bound_states<T: Real>(p: &MatrixPotential<T>, tol: T) -> Result<BoundStates<T>> {
    let opts = OdeOptions::default();
    let det_b = |lam: T| -> Result<T> {
        let b = neumann_b(p, Complex::new(lam, T::zero()), &opts)?;
        real_determinant(det(&b), lam)
    };
    let (roots, warnings) = negative_axis_roots(p, det_b, tol)?;
    let mut out = BoundStates { warnings, ..Default::default() };
    for lam in roots {
        let b = neumann_b(p, Complex::new(lam, T::zero()), &opts)?;
        let sv = singular_values(&b);
        let cut = r64::<T>(1e-8) * sv.first().copied().unwrap_or(T::one());
        let multiplicity = sv.iter().filter(|&&s| s < cut).count().max(1);
        out.states.push(BoundState {
            lambda: lam,
            multiplicity,
        });
    }
    Ok(out)
}

/// Negative-axis zeros of `det S(λ)`: the point spectrum of the problem
/// extended by zero through the origin, which is where the transmission
/// determinant actually vanishes (they sit strictly above the corresponding
/// Neumann eigenvalues; the trace and boundary-value identities consume
/// these).
pub fn transmission_zeros<T: Real>(p: &MatrixPotential<T>, tol: T) -> Result<BoundStates<T>> {
    let opts = OdeOptions::default();
    let det_s = |lam: T| -> Result<T> {
        let s = jost_transmission(p, Complex::new(lam, T::zero()), &opts)?;
        real_determinant(det(&s), lam)
    };
    let (roots, warnings) = negative_axis_roots(p, det_s, tol)?;
    let mut out = BoundStates { warnings, ..Default::default() };
    for lam in roots {
        let s = jost_transmission(p, Complex::new(lam, T::zero()), &opts)?;
        let sv = singular_values(&s);
        let cut = r64::<T>(1e-8) * sv.first().copied().unwrap_or(T::one());
        let multiplicity = sv.iter().filter(|&&s| s < cut).count().max(1);
        out.states.push(BoundState {
            lambda: lam,
            multiplicity,
        });
    }
    Ok(out)
}

fn real_determinant<T: Real>(d: Complex<T>, lam: T) -> Result<T> {
    if d.im.abs() > r64::<T>(1e-9) * (cabs(d) + T::one()) {
        // the branch keeps everything real on the negative axis
        return Err(Error::Evaluation(format!(
            "determinant unexpectedly complex at λ = {:?}",
            lam.to_f64()
        )));
    }
    Ok(d.re)
}

fn negative_axis_roots<T: Real>(
    p: &MatrixPotential<T>,
    det_fn: impl Fn(T) -> Result<T>,
    tol: T,
) -> Result<(Vec<T>, Vec<String>)> {
    let lambda0 = birman_bound(p)?.lambda0;
    let mut warnings = Vec::new();
    let det_b = det_fn;

    let steps = 100usize;
    let lo = lambda0;
    let hi = -lambda0.abs() * r64::<T>(1e-6);
    let mut grid = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = r64::<T>(i as f64 / steps as f64);
        grid.push(lo + (hi - lo) * t);
    }
    let vals: Vec<T> = grid.iter().map(|&l| det_b(l)).collect::<Result<_>>()?;

    let mut roots: Vec<(T, usize)> = Vec::new();
    for i in 0..steps {
        let (mut a, mut b) = (grid[i], grid[i + 1]);
        let (mut fa, mut fb) = (vals[i], vals[i + 1]);
        if fa == T::zero() {
            roots.push((a, i));
            continue;
        }
        if (fa > T::zero()) != (fb > T::zero()) {
            // bisection to the requested width
            while (b - a).abs() > tol {
                let mid = (a + b) * r64::<T>(0.5);
                let fm = det_b(mid)?;
                if fm == T::zero() {
                    a = mid;
                    b = mid;
                    break;
                }
                if (fa > T::zero()) != (fm > T::zero()) {
                    b = mid;
                    fb = fm;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            let _ = fb;
            let root = (a + b) * r64::<T>(0.5);
            if i == 0 || i == steps - 1 {
                warnings
                    .push(format!("root near the scan boundary at λ = {:?}", root.to_f64()));
            }
            roots.push((root, i));
        }
    }

    // non-sign-changing dips: |det B| local minimum below threshold
    for i in 1..steps {
        let prev = vals[i - 1].abs();
        let here = vals[i].abs();
        let next = vals[i + 1].abs();
        if here < prev && here < next && (vals[i - 1] > T::zero()) == (vals[i + 1] > T::zero()) {
            let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
            // golden-section on |det B|
            let gr = r64::<T>(0.618_033_988_749_894_8);
            let mut x1 = b - (b - a) * gr;
            let mut x2 = a + (b - a) * gr;
            let mut f1 = det_b(x1)?.abs();
            let mut f2 = det_b(x2)?.abs();
            for _ in 0..80 {
                if f1 > f2 {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + (b - a) * gr;
                    f2 = det_b(x2)?.abs();
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - (b - a) * gr;
                    f1 = det_b(x1)?.abs();
                }
            }
            let lam = (a + b) * r64::<T>(0.5);
            if f1.min(f2) < r64(1e-10) {
                warnings.push(format!(
                    "non-sign-changing determinant dip at λ = {:?}: double root",
                    lam.to_f64()
                ));
                roots.push((lam, i));
            }
        }
    }

    roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    roots.dedup_by(|a, b| (a.0 - b.0).abs() < tol * r64(4.0));
    Ok((roots.into_iter().map(|(lam, _)| lam).collect(), warnings))
}

/// Residual norms of the algebraic identities satisfied for λ > 0.
#[derive(Clone, Debug)]
pub struct IdentityResiduals<T> {
    /// ‖S̄ᵗS − P̄ᵗP − I‖ (energy conservation)
    pub energy: T,
    /// ‖AᵗB − BᵗA‖ (pseudo-commutativity)
    pub pseudo: T,
    /// ‖A − B̄‖ (reality of the Neumann solution)
    pub conj: T,
    /// ‖B − (S + P̄)/2‖
    pub half: T,
    /// min |μⱼ(S)| − 1 (every eigenvalue lies outside the unit disk)
    pub eigmin: T,
    /// 1 + ‖P‖ − ‖S‖ (≥ 0 up to tolerance; energy conservation gives
    /// ‖S‖² = 1 + ‖P‖² exactly, so ‖S‖ never exceeds 1 + ‖P‖)
    pub chain_margin_low: T,
    /// |det S| − ‖S‖ (≥ 0 up to tolerance; every singular value of S is ≥ 1)
    pub chain_margin_high: T,
    pub norm_chain: (bool, bool),
}

pub fn identity_residuals<T: Real>(sd: &ScatteringData<T>) -> Result<IdentityResiduals<T>> {
    if !(sd.lambda.im.is_zero() && sd.lambda.re > T::zero()) {
        return Err(Error::Domain(
            "identity residuals are defined for real λ > 0".into(),
        ));
    }
    let n = sd.s.nrows();
    let id = identity_c::<T>(n);
    let energy = spectral_norm(&(sd.s.adjoint() * &sd.s - sd.p.adjoint() * &sd.p - &id));
    let pseudo = spectral_norm(&(sd.a.transpose() * &sd.b - sd.b.transpose() * &sd.a));
    let conj = max_abs(&(&sd.a - sd.b.map(|z| z.conj())));
    let half = spectral_norm(
        &(&sd.b - (&sd.s + sd.p.map(|z| z.conj())) * cr(r64::<T>(0.5))),
    );
    let eigs = complex_eigenvalues(&sd.s)?;
    let mut eigmin = T::max_value().unwrap_or_else(T::one);
    for e in eigs {
        let m = cabs(e) - T::one();
        if m < eigmin {
            eigmin = m;
        }
    }
    let ns = spectral_norm(&sd.s);
    let np = spectral_norm(&sd.p);
    let chain_margin_low = T::one() + np - ns;
    let chain_margin_high = cabs(sd.det_s) - ns;
    let tol = r64::<T>(1e-7);
    Ok(IdentityResiduals {
        energy,
        pseudo,
        conj,
        half,
        eigmin,
        chain_margin_low,
        chain_margin_high,
        norm_chain: (chain_margin_low >= -tol, chain_margin_high >= -tol),
    })
}
