//! Matrix ODE propagation for `−ψ̈ + vψ = λψ`.
//!
//! The integrator is an adaptive embedded Dormand–Prince 5(4) pair acting on
//! the pair (ψ, ψ̇) of n×n complex matrices, with a hard step bound
//! `h ≤ c/(1 + √|λ| + ‖v‖^½)` so oscillation at large |λ| stays resolved.
//! A gauge variant integrates `z = e^{i√λx}·w`, whose modes stay bounded in
//! the upper half plane; the scattering layer leans on it for deep |λ|.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    identity_c, max_abs, spectral_norm, symplectic_form, to_complex, CMat,
};
use crate::potential::MatrixPotential;
use crate::real::{cexp, ci, cr, is_finite, r64, sqrt_lambda, Real};

/// Matrix solution snapshot: value and derivative at one point.
#[derive(Clone, Debug)]
pub struct CauchyData<T: Real> {
    pub value: CMat<T>,
    pub derivative: CMat<T>,
    pub x: T,
    pub lambda: Complex<T>,
}

impl<T: Real> CauchyData<T> {
    pub fn new(value: CMat<T>, derivative: CMat<T>, x: T, lambda: Complex<T>) -> Self {
        CauchyData {
            value,
            derivative,
            x,
            lambda,
        }
    }

    pub fn dim(&self) -> usize {
        self.value.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.value
            .iter()
            .chain(self.derivative.iter())
            .all(|z| is_finite(z.re) && is_finite(z.im))
    }
}

/// Transfer matrix of the canonical first-order system, `M(0,0) = I`.
#[derive(Clone, Debug)]
pub struct TransferMatrix<T: Real> {
    pub matrix: CMat<T>,
    pub lambda: Complex<T>,
    pub x: T,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Constant c in the oscillation step bound.
    pub max_step_factor: T,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        OdeOptions {
            rel_tol: r64(1e-11),
            abs_tol: r64(1e-14),
            max_step_factor: r64(0.5),
        }
    }
}

impl<T: Real> OdeOptions<T> {
    pub fn tight() -> Self {
        OdeOptions {
            rel_tol: r64(1e-13),
            abs_tol: r64(1e-16),
            max_step_factor: r64(0.4),
        }
    }
}

#[derive(Clone)]
struct Pair<T: Real> {
    u: CMat<T>,
    v: CMat<T>,
}

impl<T: Real> Pair<T> {
    fn zeros(n: usize) -> Self {
        Pair {
            u: CMat::zeros(n, n),
            v: CMat::zeros(n, n),
        }
    }

    fn axpy(&mut self, c: Complex<T>, other: &Pair<T>) {
        self.u.zip_apply(&other.u, |a, b| *a += b * c);
        self.v.zip_apply(&other.v, |a, b| *a += b * c);
    }

    fn clone_from_pair(&mut self, other: &Pair<T>) {
        self.u.copy_from(&other.u);
        self.v.copy_from(&other.v);
    }
}

enum Rhs<'a, T: Real> {
    /// (ψ, ψ̇)' = (ψ̇, (v − λ)ψ)
    Schrodinger {
        pot: &'a MatrixPotential<T>,
        lambda: Complex<T>,
    },
    /// z = e^{i√λ x} w:  (z, ż)' = (ż, 2i√λ ż + v z)
    Gauge {
        pot: &'a MatrixPotential<T>,
        two_i_sqrt: Complex<T>,
    },
}

impl<T: Real> Rhs<'_, T> {
    fn eval(&self, x: T, y: &Pair<T>, out: &mut Pair<T>) -> Result<()> {
        match self {
            Rhs::Schrodinger { pot, lambda } => {
                out.u.copy_from(&y.v);
                let vx = to_complex(&pot.eval(x, 0)?);
                vx.mul_to(&y.u, &mut out.v);
                out.v.zip_apply(&y.u, |a, b| *a -= b * *lambda);
            }
            Rhs::Gauge { pot, two_i_sqrt } => {
                out.u.copy_from(&y.v);
                let vx = to_complex(&pot.eval(x, 0)?);
                vx.mul_to(&y.u, &mut out.v);
                out.v.zip_apply(&y.v, |a, b| *a += b * *two_i_sqrt);
            }
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// b − b̂ (5th-order weights minus the embedded 4th-order ones)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct Integrator<'a, T: Real> {
    rhs: Rhs<'a, T>,
    opts: OdeOptions<T>,
    h_max: T,
}

impl<T: Real> Integrator<'_, T> {
    /// `breaks` lists abscissae (in traversal order) where the potential is
    /// only piecewise-analytic; steps land on them exactly and the stage
    /// derivative restarts on the far side.
    fn solve(&self, x0: T, x1: T, y0: &Pair<T>, breaks: &[T]) -> Result<Pair<T>> {
        let n = y0.u.nrows();
        let dir = if x1 >= x0 { T::one() } else { -T::one() };
        let mut y = y0.clone();
        if x0 == x1 {
            return Ok(y);
        }
        let mut k: Vec<Pair<T>> = (0..7).map(|_| Pair::zeros(n)).collect();
        let mut stage = Pair::zeros(n);
        let mut ynew = Pair::zeros(n);
        let mut x = x0;
        self.rhs.eval(x, &y, &mut k[0])?;
        let span = (x1 - x0).abs();
        let mut h = dir * self.h_max.min(span);
        let mut fsal_valid = true;
        let mut next_break = 0usize;
        let tiny = r64::<T>(64.0) * T::default_epsilon();

        for _step in 0..10_000_000usize {
            // land exactly on the endpoint / the next discontinuity
            let mut lands_on = None;
            if (x + h * r64(1.01) - x1) * dir > T::zero() {
                h = x1 - x;
                lands_on = Some(x1);
            }
            while next_break < breaks.len() && (breaks[next_break] - x) * dir <= T::zero() {
                next_break += 1;
            }
            if next_break < breaks.len() && (x + h - breaks[next_break]) * dir >= T::zero() {
                h = breaks[next_break] - x;
                lands_on = Some(breaks[next_break]);
            }
            if h.abs() < tiny * x.abs().max(T::one()) {
                return Err(Error::Stiffness {
                    x: x.to_f64().unwrap_or(f64::NAN),
                });
            }
            if !fsal_valid {
                // restart on the far side of a discontinuity
                let nudge = dir * r64::<T>(1e-13) * (x.abs() + T::one());
                self.rhs.eval(x + nudge, &y, &mut k[0])?;
                fsal_valid = true;
            }
            for s in 0..6 {
                stage.clone_from_pair(&y);
                for j in 0..=s {
                    let a = A[s][j];
                    if a != 0.0 {
                        stage.axpy(cr(h * r64(a)), &k[j]);
                    }
                }
                let (head, tail) = k.split_at_mut(s + 1);
                let _ = head;
                self.rhs.eval(x + h * r64(C[s]), &stage, &mut tail[0])?;
            }
            // 5th-order solution = stage construction with the A[5] row (FSAL);
            // k[6] already holds the derivative at (x+h, ynew)
            ynew.clone_from_pair(&y);
            for j in 0..6 {
                let a = A[5][j];
                if a != 0.0 {
                    ynew.axpy(cr(h * r64(a)), &k[j]);
                }
            }

            // scaled rms error from the embedded pair
            let mut err_sq = T::zero();
            let count = r64::<T>((2 * n * n) as f64);
            for (idx, (yo, yn)) in y
                .u
                .iter()
                .chain(y.v.iter())
                .zip(ynew.u.iter().chain(ynew.v.iter()))
                .enumerate()
            {
                let mut e = Complex::new(T::zero(), T::zero());
                for (j, kj) in k.iter().enumerate() {
                    let c = E[j];
                    if c != 0.0 {
                        let kv = if idx < n * n {
                            kj.u[idx]
                        } else {
                            kj.v[idx - n * n]
                        };
                        e += kv * r64::<T>(c);
                    }
                }
                let e = e * h;
                let scale = self.opts.abs_tol
                    + self.opts.rel_tol
                        * (yo.norm_sqr().sqrt()).max(yn.norm_sqr().sqrt());
                let ratio = e.norm_sqr().sqrt() / scale;
                err_sq += ratio * ratio;
            }
            let err = (err_sq / count).sqrt();

            if err <= T::one() {
                x = lands_on.unwrap_or(x + h);
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                if next_break < breaks.len() && x == breaks[next_break] {
                    fsal_valid = false;
                    next_break += 1;
                }
                if !y.u.iter().chain(y.v.iter()).all(|z| is_finite(z.re) && is_finite(z.im))
                {
                    return Err(Error::Evaluation(format!(
                        "solution overflowed near x = {:?}",
                        x.to_f64()
                    )));
                }
                if (x - x1) * dir >= T::zero() {
                    return Ok(y);
                }
                let fac = r64::<T>(0.9) * err.max(r64(1e-10)).powf(r64(-0.2));
                h *= fac.min(r64(5.0)).max(r64(0.2));
            } else {
                let fac = r64::<T>(0.9) * err.powf(r64(-0.2));
                h *= fac.min(T::one()).max(r64(0.2));
                fsal_valid = true; // k[0] still holds f(x, y)
            }
            if h.abs() > self.h_max {
                h = dir * self.h_max;
            }
        }
        Err(Error::Stiffness {
            x: x0.to_f64().unwrap_or(f64::NAN),
        })
    }
}

fn collect_breaks<T: Real>(p: &MatrixPotential<T>, x0: T, x1: T) -> Vec<T> {
    let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    let mut b: Vec<T> = p
        .breakpoints()
        .into_iter()
        .filter(|&t| t > lo && t < hi)
        .collect();
    b.sort_by(|a, b| a.partial_cmp(b).unwrap());
    b.dedup();
    if x1 < x0 {
        b.reverse();
    }
    b
}

fn step_bound<T: Real>(p: &MatrixPotential<T>, lambda: Complex<T>, opts: &OdeOptions<T>) -> T {
    let mag = lambda.norm_sqr().sqrt();
    opts.max_step_factor / (T::one() + mag.sqrt() + p.sup_norm_hint().sqrt())
}

/// Solves the matrix equation from `init` at `x0` to `x1`.
pub fn propagate<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x0: T,
    x1: T,
    init: &CauchyData<T>,
    opts: &OdeOptions<T>,
) -> Result<CauchyData<T>> {
    if init.x != x0 {
        return Err(Error::Contract(format!(
            "initial data anchored at {:?}, not x0 = {:?}",
            init.x.to_f64(),
            x0.to_f64()
        )));
    }
    if init.lambda != lambda {
        return Err(Error::Contract(
            "initial data carries a different spectral parameter".into(),
        ));
    }
    if init.value.nrows() != p.dim() {
        return Err(Error::Contract("dimension mismatch".into()));
    }
    let integ = Integrator {
        rhs: Rhs::Schrodinger { pot: p, lambda },
        opts: *opts,
        h_max: step_bound(p, lambda, opts),
    };
    let y0 = Pair {
        u: init.value.clone(),
        v: init.derivative.clone(),
    };
    let y = integ.solve(x0, x1, &y0, &collect_breaks(p, x0, x1))?;
    Ok(CauchyData::new(y.u, y.v, x1, lambda))
}

/// Gauge propagation of `z = e^{i√λx} w` from `(I, 0)` at the origin;
/// both characteristic modes are bounded for `Im √λ ≥ 0`.
pub(crate) fn gauge_solution<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
    opts: &OdeOptions<T>,
) -> Result<(CMat<T>, CMat<T>)> {
    let n = p.dim();
    let two_i_sqrt = sqrt_lambda(lambda) * c2i::<T>();
    let integ = Integrator {
        rhs: Rhs::Gauge { pot: p, two_i_sqrt },
        opts: *opts,
        h_max: step_bound(p, lambda, opts),
    };
    let y0 = Pair {
        u: identity_c::<T>(n),
        v: CMat::zeros(n, n),
    };
    let y = integ.solve(T::zero(), x, &y0, &collect_breaks(p, T::zero(), x))?;
    Ok((y.u, y.v))
}

fn c2i<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), r64(2.0))
}

/// Solution with Neumann data `u(0) = I, u̇(0) = 0` evaluated at `x`.
pub fn neumann_solution<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
) -> Result<CauchyData<T>> {
    neumann_solution_with(p, lambda, x, &OdeOptions::default())
}

pub fn neumann_solution_with<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
    opts: &OdeOptions<T>,
) -> Result<CauchyData<T>> {
    if x < T::zero() {
        return Err(Error::Parameter("evaluation point must be ≥ 0".into()));
    }
    let n = p.dim();
    let init = CauchyData::new(identity_c::<T>(n), CMat::zeros(n, n), T::zero(), lambda);
    propagate(p, lambda, T::zero(), x, &init, opts)
}

/// Jost-normalized solution `w(0) = I, ẇ(0) = −i√λ·I` evaluated at `x`.
pub fn jost_solution<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
) -> Result<CauchyData<T>> {
    jost_solution_with(p, lambda, x, &OdeOptions::default())
}

pub fn jost_solution_with<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
    opts: &OdeOptions<T>,
) -> Result<CauchyData<T>> {
    if lambda.re.is_zero() && lambda.im.is_zero() {
        return Err(Error::BranchPoint);
    }
    if x < T::zero() {
        return Err(Error::Parameter("evaluation point must be ≥ 0".into()));
    }
    let n = p.dim();
    let sq = sqrt_lambda(lambda);
    let deriv = identity_c::<T>(n) * (-(sq * ci(T::one())));
    let init = CauchyData::new(identity_c::<T>(n), deriv, T::zero(), lambda);
    propagate(p, lambda, T::zero(), x, &init, opts)
}

/// The solution normalized to `e^{i√λx}·I` beyond the support, continued
/// into the interaction region by backward integration.
pub fn decaying_solution<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
) -> Result<CauchyData<T>> {
    decaying_solution_with(p, lambda, x, &OdeOptions::default())
}

pub fn decaying_solution_with<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
    opts: &OdeOptions<T>,
) -> Result<CauchyData<T>> {
    if lambda.re.is_zero() && lambda.im.is_zero() {
        return Err(Error::BranchPoint);
    }
    let s = p.compact_support_end()?;
    let n = p.dim();
    let sq = sqrt_lambda(lambda);
    let i_sq = sq * ci(T::one());
    let plane = |at: T| -> CauchyData<T> {
        let phase = cexp(i_sq * cr(at));
        CauchyData::new(
            identity_c::<T>(n) * phase,
            identity_c::<T>(n) * (phase * i_sq),
            at,
            lambda,
        )
    };
    if x >= s {
        return Ok(plane(x));
    }
    let init = plane(s);
    propagate(p, lambda, s, x, &init, opts)
}

/// Transfer matrix `M(0, x)` assembled by propagating the canonical basis
/// of Cauchy data.
pub fn transfer_matrix<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
) -> Result<TransferMatrix<T>> {
    transfer_matrix_with(p, lambda, x, &OdeOptions::default())
}

pub fn transfer_matrix_with<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x: T,
    opts: &OdeOptions<T>,
) -> Result<TransferMatrix<T>> {
    if x < T::zero() {
        return Err(Error::Parameter("transfer matrix needs x ≥ 0".into()));
    }
    let n = p.dim();
    let first = {
        let init = CauchyData::new(identity_c::<T>(n), CMat::zeros(n, n), T::zero(), lambda);
        propagate(p, lambda, T::zero(), x, &init, opts)?
    };
    let second = {
        let init = CauchyData::new(CMat::zeros(n, n), identity_c::<T>(n), T::zero(), lambda);
        propagate(p, lambda, T::zero(), x, &init, opts)?
    };
    let mut m = CMat::<T>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&first.value);
    m.view_mut((n, 0), (n, n)).copy_from(&first.derivative);
    m.view_mut((0, n), (n, n)).copy_from(&second.value);
    m.view_mut((n, n), (n, n)).copy_from(&second.derivative);
    Ok(TransferMatrix {
        matrix: m,
        lambda,
        x,
    })
}

/// `‖MᵀJM − J‖` in the spectral norm (plain transpose; the flow preserves
/// the bilinear symplectic form even at complex λ).
pub fn symplectic_defect<T: Real>(m: &TransferMatrix<T>) -> T {
    let n = m.matrix.nrows() / 2;
    let j = to_complex(&symplectic_form::<T>(n));
    let defect = m.matrix.transpose() * &j * &m.matrix - &j;
    spectral_norm(&defect)
}

/// Matrix Wronskian `W(a, b) = ḃᵀ a − bᵀ ȧ`.
pub fn wronskian<T: Real>(a: &CauchyData<T>, b: &CauchyData<T>) -> Result<CMat<T>> {
    if a.x != b.x {
        return Err(Error::Contract(format!(
            "Wronskian arguments anchored at different points {:?} and {:?}",
            a.x.to_f64(),
            b.x.to_f64()
        )));
    }
    if a.lambda != b.lambda {
        return Err(Error::Contract(
            "Wronskian arguments carry different spectral parameters".into(),
        ));
    }
    Ok(b.derivative.transpose() * &a.value - b.value.transpose() * &a.derivative)
}

/// Propagates from the origin collecting snapshots every `spacing` up to
/// `x_end` (the audit hook for drift checks).
pub fn propagate_checkpoints<T: Real>(
    p: &MatrixPotential<T>,
    lambda: Complex<T>,
    x_end: T,
    init: &CauchyData<T>,
    spacing: T,
    opts: &OdeOptions<T>,
) -> Result<Vec<CauchyData<T>>> {
    let mut out = vec![init.clone()];
    let mut x = init.x;
    while x < x_end {
        let next = (x + spacing).min(x_end);
        let cur = out.last().unwrap();
        let step = propagate(p, lambda, x, next, cur, opts)?;
        out.push(step);
        x = next;
    }
    Ok(out)
}

/// Largest imaginary component across value and derivative; real-input
/// propagation should keep this at roundoff level.
pub fn imaginary_residue<T: Real>(d: &CauchyData<T>) -> T {
    let mut m = T::zero();
    for z in d.value.iter().chain(d.derivative.iter()) {
        if z.im.abs() > m {
            m = z.im.abs();
        }
    }
    m
}

/// Reconstructs the plain-gauge Jost data from a gauge pair when the phase
/// factor is representable.
pub(crate) fn gauge_to_jost<T: Real>(
    z: &CMat<T>,
    zdot: &CMat<T>,
    lambda: Complex<T>,
    x: T,
) -> Result<CauchyData<T>> {
    let sq = sqrt_lambda(lambda);
    let exponent = sq.im * x;
    if exponent > r64(650.0) {
        return Err(Error::Evaluation(
            "Jost phase factor overflows at this depth; use the gauge form".into(),
        ));
    }
    let i_sq = sq * ci(T::one());
    let phase = cexp(-(i_sq * cr(x)));
    let value = z * phase;
    let derivative = (zdot - z * i_sq) * phase;
    Ok(CauchyData::new(value, derivative, x, lambda))
}

pub(crate) fn _max_abs_pair<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    max_abs(a).max(max_abs(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{MatrixPotential, PotentialTerm, Profile};
    use crate::real::c64;
    use nalgebra::DMatrix;

    fn free(n: usize) -> MatrixPotential<f64> {
        MatrixPotential::zero(n)
    }

    fn box_well() -> MatrixPotential<f64> {
        MatrixPotential::new(
            1,
            vec![PotentialTerm::Scaled {
                profile: Profile::ConstantBox { a: 0.0, b: 1.0 },
                matrix: DMatrix::from_element(1, 1, -2.0),
            }],
        )
        .unwrap()
    }

    fn ident(n: usize) -> CMat<f64> {
        identity_c::<f64>(n)
    }

    #[test]
    fn free_cosine_at_pi() {
        let p = free(2);
        let lam = c64(1.0, 0.0);
        let init = CauchyData::new(ident(2), CMat::zeros(2, 2), 0.0, lam);
        let out = propagate(&p, lam, 0.0, std::f64::consts::PI, &init, &Default::default())
            .unwrap();
        assert!(max_abs(&(&out.value + ident(2))) < 1e-9);
        assert!(max_abs(&out.derivative) < 1e-9);
    }

    #[test]
    fn box_interior_frequency() {
        let p = box_well();
        let lam = c64(-1.0, 0.0);
        let init = CauchyData::new(ident(1), CMat::zeros(1, 1), 0.0, lam);
        let out = propagate(&p, lam, 0.0, 1.0, &init, &Default::default()).unwrap();
        assert!((out.value[(0, 0)].re - 1.0f64.cos()).abs() < 1e-9);
        assert!((out.derivative[(0, 0)].re + 1.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn free_plane_wave() {
        let p = free(2);
        let lam = c64(4.0, 0.0);
        let init = CauchyData::new(ident(2), ident(2) * c64(0.0, -2.0), 0.0, lam);
        let out = propagate(
            &p,
            lam,
            0.0,
            std::f64::consts::FRAC_PI_4,
            &init,
            &Default::default(),
        )
        .unwrap();
        assert!(max_abs(&(&out.value - ident(2) * c64(0.0, -1.0))) < 1e-10);
        assert!(max_abs(&(&out.derivative + ident(2) * c64(2.0, 0.0))) < 1e-10);
    }

    #[test]
    fn transfer_matrix_examples() {
        let p = free(1);
        let m = transfer_matrix(&p, c64(1.0, 0.0), std::f64::consts::FRAC_PI_2).unwrap();
        let want = CMat::<f64>::from_row_slice(
            2,
            2,
            &[c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)],
        );
        assert!(max_abs(&(&m.matrix - want)) < 1e-10);

        let m0 = transfer_matrix(&box_well(), c64(7.0, 0.0), 0.0).unwrap();
        assert!(max_abs(&(&m0.matrix - identity_c::<f64>(2))) < 1e-14);

        let mlin = transfer_matrix(&p, c64(0.0, 0.0), 2.0).unwrap();
        let want = CMat::<f64>::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(2.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
        );
        assert!(max_abs(&(&mlin.matrix - want)) < 1e-10);
    }

    #[test]
    fn symplectic_defect_examples() {
        let id = TransferMatrix {
            matrix: identity_c::<f64>(2),
            lambda: c64(1.0, 0.0),
            x: 0.0,
        };
        assert_eq!(symplectic_defect(&id), 0.0);

        let rot = TransferMatrix {
            matrix: CMat::<f64>::from_row_slice(
                2,
                2,
                &[c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)],
            ),
            lambda: c64(1.0, 0.0),
            x: 0.0,
        };
        assert!(symplectic_defect(&rot) < 1e-15);

        let m = transfer_matrix(&box_well(), c64(2.0, 0.0), 3.0).unwrap();
        assert!(symplectic_defect(&m) <= 1e-9, "{}", symplectic_defect(&m));
    }

    #[test]
    fn wronskian_identities() {
        let k = 1.3f64;
        let x = 0.7f64;
        let lam = c64(k * k, 0.0);
        let a = CauchyData::new(
            ident(1) * c64((k * x).cos(), 0.0),
            ident(1) * c64(-k * (k * x).sin(), 0.0),
            x,
            lam,
        );
        let b = CauchyData::new(
            ident(1) * c64((k * x).sin() / k, 0.0),
            ident(1) * c64((k * x).cos(), 0.0),
            x,
            lam,
        );
        let w = wronskian(&a, &b).unwrap();
        assert!(max_abs(&(&w - ident(1))) < 1e-14);

        // plane-wave pair: W(v⁻, v⁺) = 2i√λ·I
        let sq = 1.0f64;
        let vm = CauchyData::new(
            ident(1) * c64((sq * x).cos(), -(sq * x).sin()),
            ident(1) * (c64::<f64>((sq * x).cos(), -(sq * x).sin()) * c64::<f64>(0.0, -sq)),
            x,
            lam_of(sq),
        );
        let vp = CauchyData::new(
            ident(1) * c64((sq * x).cos(), (sq * x).sin()),
            ident(1) * (c64::<f64>((sq * x).cos(), (sq * x).sin()) * c64::<f64>(0.0, sq)),
            x,
            lam_of(sq),
        );
        let w = wronskian(&vm, &vp).unwrap();
        assert!(max_abs(&(&w - ident(1) * c64(0.0, 2.0))) < 1e-14);

        // Lagrangian data has vanishing self-Wronskian along the flow
        let p = box_well();
        let lam2 = c64(0.8, 0.0);
        let u0 = CauchyData::new(ident(1), CMat::zeros(1, 1), 0.0, lam2);
        let u = propagate(&p, lam2, 0.0, 4.0, &u0, &Default::default()).unwrap();
        let w = wronskian(&u, &u).unwrap();
        assert!(max_abs(&w) < 1e-10);
    }

    fn lam_of(sq: f64) -> num_complex::Complex<f64> {
        c64(sq * sq, 0.0)
    }

    #[test]
    fn wronskian_contract_errors() {
        let lam = c64(1.0, 0.0);
        let a = CauchyData::new(ident(1), ident(1), 0.5, lam);
        let b = CauchyData::new(ident(1), ident(1), 0.6, lam);
        assert!(matches!(wronskian(&a, &b), Err(Error::Contract(_))));
        let c = CauchyData::new(ident(1), ident(1), 0.5, c64(2.0, 0.0));
        assert!(matches!(wronskian(&a, &c), Err(Error::Contract(_))));
    }

    #[test]
    fn neumann_examples() {
        let out = neumann_solution(&free(1), c64(1.0, 0.0), std::f64::consts::PI).unwrap();
        assert!((out.value[(0, 0)].re + 1.0).abs() < 1e-10);

        let out = neumann_solution(&free(1), c64(-1.0, 0.0), 1.0).unwrap();
        assert!((out.value[(0, 0)].re - 1.0f64.cosh()).abs() < 1e-10);

        // interior closed form at the square-well bound-state energy
        let lam = -1.2078f64;
        let omega = (2.0 + lam).sqrt();
        let out = neumann_solution(&box_well(), c64(lam, 0.0), 1.0).unwrap();
        assert!((out.value[(0, 0)].re - omega.cos()).abs() < 1e-9);
    }

    #[test]
    fn jost_examples() {
        let out = jost_solution(&free(1), c64(4.0, 0.0), std::f64::consts::FRAC_PI_4).unwrap();
        assert!((out.value[(0, 0)] - c64(0.0, -1.0)).norm() < 1e-10);

        let out = jost_solution(&free(1), c64(-1.0, 0.0), 2.0).unwrap();
        assert!((out.value[(0, 0)].re - 2.0f64.exp()).abs() < 1e-8);

        let out = jost_solution(&free(1), c64(1.0, 0.0), 0.0).unwrap();
        assert!((out.value[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!((out.derivative[(0, 0)] - c64(0.0, -1.0)).norm() < 1e-14);

        assert!(matches!(
            jost_solution(&free(1), c64(0.0, 0.0), 1.0),
            Err(Error::BranchPoint)
        ));
    }

    #[test]
    fn right_linearity() {
        let p = box_well();
        let lam = c64(2.5, 0.0);
        let q = CMat::<f64>::from_row_slice(1, 1, &[c64(0.3, -1.1)]);
        let init = CauchyData::new(ident(1), ident(1) * c64(0.2, 0.0), 0.0, lam);
        let direct = propagate(&p, lam, 0.0, 3.0, &init, &Default::default()).unwrap();
        let scaled_init = CauchyData::new(&init.value * &q, &init.derivative * &q, 0.0, lam);
        let scaled = propagate(&p, lam, 0.0, 3.0, &scaled_init, &Default::default()).unwrap();
        assert!(max_abs(&(&scaled.value - &direct.value * &q)) < 1e-10);
        assert!(max_abs(&(&scaled.derivative - &direct.derivative * &q)) < 1e-10);
    }

    #[test]
    fn reality_preserved() {
        let out = neumann_solution(&box_well(), c64(5.0, 0.0), 4.0).unwrap();
        assert!(imaginary_residue(&out) <= 1e-12);
    }

    #[test]
    fn gauge_matches_plain_jost() {
        let p = box_well();
        for lam in [c64(3.0, 0.0), c64(-4.0, 0.0), c64(2.0, 1.5)] {
            let (z, zd) = gauge_solution(&p, lam, 2.0, &Default::default()).unwrap();
            let via_gauge = gauge_to_jost(&z, &zd, lam, 2.0).unwrap();
            let plain = jost_solution(&p, lam, 2.0).unwrap();
            let scale = max_abs(&plain.value).max(1.0);
            assert!(max_abs(&(&via_gauge.value - &plain.value)) / scale < 1e-9);
            assert!(
                max_abs(&(&via_gauge.derivative - &plain.derivative)) / (scale * 3.0) < 1e-9
            );
        }
    }

    #[test]
    fn checkpoints_cover_range() {
        let p = box_well();
        let lam = c64(1.0, 0.0);
        let init = CauchyData::new(ident(1), CMat::zeros(1, 1), 0.0, lam);
        let pts =
            propagate_checkpoints(&p, lam, 3.5, &init, 1.0, &Default::default()).unwrap();
        assert_eq!(pts.len(), 5);
        assert_eq!(pts.last().unwrap().x, 3.5);
    }
}
