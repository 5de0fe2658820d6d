//! Matrix-valued B-spline interpolation on a uniform grid (cubic or quintic)
//! with natural end conditions, solved by a no-pivot banded elimination in
//! the de Boor style. Quintic interpolation is C⁴, so low-order derivatives
//! of sampled potentials stay smooth across panel joins.

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::real::{r64, Real};

/// Cardinal B-spline of degree `k` on uniform unit knots, support `[0, k+1)`,
/// differentiated `d` times.
fn bspline<T: Real>(k: usize, d: usize, x: T) -> T {
    if d > 0 {
        return bspline::<T>(k - 1, d - 1, x) - bspline::<T>(k - 1, d - 1, x - T::one());
    }
    if k == 0 {
        return if x >= T::zero() && x < T::one() {
            T::one()
        } else {
            T::zero()
        };
    }
    let kf = r64::<T>(k as f64);
    (x / kf) * bspline::<T>(k - 1, 0, x)
        + ((r64::<T>((k + 1) as f64) - x) / kf) * bspline::<T>(k - 1, 0, x - T::one())
}

/// Banded square system with the diagonal on every row, eliminated without
/// pivoting (collocation matrices here are safely conditioned for that).
struct Banded<T> {
    n: usize,
    lower: usize,
    width: usize,
    data: Vec<T>, // row r, column c stored at [r*width + (c - r + lower)]
}

impl<T: Real> Banded<T> {
    fn new(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1; // room for elimination fill
        Banded {
            n,
            lower,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    fn set(&mut self, r: usize, c: usize, v: T) {
        let off = c as isize - r as isize + self.lower as isize;
        assert!(off >= 0 && (off as usize) < self.width, "outside band");
        self.data[r * self.width + off as usize] = v;
    }

    fn get(&self, r: usize, c: usize) -> T {
        let off = c as isize - r as isize + self.lower as isize;
        if off < 0 || off as usize >= self.width {
            T::zero()
        } else {
            self.data[r * self.width + off as usize]
        }
    }

    /// Solves A·X = RHS in place; `rhs` holds `m` right-hand sides row-major.
    fn solve(&mut self, rhs: &mut [T], m: usize) -> Result<()> {
        let n = self.n;
        for c in 0..n {
            let piv = self.get(c, c);
            if piv.abs() < r64::<T>(1e-12) {
                return Err(Error::Schema(
                    "spline collocation matrix near-singular".into(),
                ));
            }
            for r in (c + 1)..n.min(c + self.lower + 1) {
                let factor = self.get(r, c) / piv;
                if factor.is_zero() {
                    continue;
                }
                for cc in c..n.min(c + self.width - self.lower) {
                    let v = self.get(r, cc) - factor * self.get(c, cc);
                    self.set(r, cc, v);
                }
                for j in 0..m {
                    rhs[r * m + j] = rhs[r * m + j] - factor * rhs[c * m + j];
                }
            }
        }
        for r in (0..n).rev() {
            for cc in (r + 1)..n.min(r + self.width - self.lower) {
                let a = self.get(r, cc);
                if a.is_zero() {
                    continue;
                }
                for j in 0..m {
                    rhs[r * m + j] = rhs[r * m + j] - a * rhs[cc * m + j];
                }
            }
            let piv = self.get(r, r);
            for j in 0..m {
                rhs[r * m + j] /= piv;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MatrixSpline<T: Real> {
    x0: T,
    h: T,
    npts: usize,
    degree: usize,
    n: usize,
    /// Control matrices c_j, j = −degree .. npts−2, stored shifted by +degree.
    coeffs: Vec<RMat<T>>,
}

impl<T: Real> MatrixSpline<T> {
    /// Interpolates sampled symmetric matrices on the uniform grid `x0 + i·h`.
    /// Degree must be 3 or 5.
    pub fn interpolate(x0: T, h: T, values: &[RMat<T>], degree: usize) -> Result<Self> {
        if degree != 3 && degree != 5 {
            return Err(Error::Schema(format!(
                "interpolation order {degree} unsupported (use 3 or 5)"
            )));
        }
        let npts = values.len();
        if npts < degree + 2 {
            return Err(Error::Schema(format!(
                "grid_sampled needs at least {} nodes for order {degree}",
                degree + 2
            )));
        }
        if h <= T::zero() {
            return Err(Error::Schema("grid spacing must be positive".into()));
        }
        let n = values[0].nrows();
        let k = degree;
        let ki = k as isize;
        let unknowns = npts + k - 1;
        // natural end conditions: s''=0 (cubic) plus s'''=0 (quintic) per end
        let left_orders: &[usize] = if k == 5 { &[2, 3] } else { &[2] };
        let right_orders: &[usize] = if k == 5 { &[3, 2] } else { &[2] };

        let mut band = Banded::<T>::new(unknowns, 4, 4);
        let m = n * n;
        let mut rhs = vec![T::zero(); unknowns * m];
        let mut row = 0usize;
        for &d in left_orders {
            for j in -ki..=-1 {
                let t = (j + ki) as usize;
                band.set(row, t, bspline::<T>(k, d, r64(-j as f64)));
            }
            row += 1;
        }
        for i in 0..npts {
            let ii = i as isize;
            for j in (ii - ki)..=(ii - 1) {
                let t = (j + ki) as usize;
                band.set(row, t, bspline::<T>(k, 0, r64((ii - j) as f64)));
            }
            let v = &values[i];
            for (e, &x) in v.iter().enumerate() {
                rhs[row * m + e] = x;
            }
            row += 1;
        }
        let last = (npts - 1) as isize;
        for &d in right_orders {
            for j in (last - ki)..=(last - 1) {
                let t = (j + ki) as usize;
                band.set(row, t, bspline::<T>(k, d, r64((last - j) as f64)) / h.powi(0));
            }
            row += 1;
        }
        debug_assert_eq!(row, unknowns);
        band.solve(&mut rhs, m)?;
        let coeffs = (0..unknowns)
            .map(|t| RMat::<T>::from_iterator(n, n, rhs[t * m..(t + 1) * m].iter().copied()))
            .collect();
        Ok(MatrixSpline {
            x0,
            h,
            npts,
            degree,
            n,
            coeffs,
        })
    }

    pub fn support(&self) -> (T, T) {
        (
            self.x0,
            self.x0 + self.h * r64::<T>((self.npts - 1) as f64),
        )
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Evaluates the d-th derivative; zero outside the sampled range.
    pub fn eval(&self, x: T, d: usize) -> RMat<T> {
        let k = self.degree;
        let ki = k as isize;
        let u = (x - self.x0) / self.h;
        let mut out = RMat::<T>::zeros(self.n, self.n);
        if u < T::zero() || u > r64::<T>((self.npts - 1) as f64) {
            return out;
        }
        let base = u.floor().to_f64().unwrap_or(0.0) as isize;
        let scale = T::one() / self.h.powi(d as i32);
        for j in (base - ki)..=base {
            let t = j + ki;
            if t < 0 || t as usize >= self.coeffs.len() {
                continue;
            }
            let w = bspline::<T>(k, d, u - r64::<T>(j as f64)) * scale;
            if !w.is_zero() {
                out += &self.coeffs[t as usize] * w;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> RMat<f64> {
        RMat::from_element(1, 1, v)
    }

    #[test]
    fn cardinal_values_at_knots() {
        // quintic cardinal B-spline at interior knots: (1, 26, 66, 26, 1)/120
        let want = [1.0, 26.0, 66.0, 26.0, 1.0];
        for (i, w) in want.iter().enumerate() {
            let v: f64 = bspline(5, 0, (i + 1) as f64);
            assert!((v - w / 120.0).abs() < 1e-14, "B5({}) = {v}", i + 1);
        }
        let sum: f64 = (0..=6).map(|i| bspline::<f64>(5, 0, i as f64)).sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reproduces_smooth_samples() {
        // sample a flat-ended bump and check interpolation and derivatives
        let f = |x: f64| {
            let u: f64 = (x - 1.5) / 1.5;
            if u.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - u * u)).exp()
            }
        };
        let h = 0.01;
        let npts = 301;
        let values: Vec<_> = (0..npts).map(|i| scalar(f(i as f64 * h))).collect();
        let sp = MatrixSpline::interpolate(0.0, h, &values, 5).unwrap();
        for &x in &[0.31, 0.777, 1.5, 2.003, 2.64] {
            assert!((sp.eval(x, 0)[(0, 0)] - f(x)).abs() < 1e-10, "value at {x}");
            let fd = (f(x + 1e-4) - f(x - 1e-4)) / 2e-4;
            assert!((sp.eval(x, 1)[(0, 0)] - fd).abs() < 1e-6, "slope at {x}");
        }
        // node reproduction is exact up to the linear solve
        for i in [0, 57, 150, 300] {
            let x = i as f64 * h;
            assert!((sp.eval(x, 0)[(0, 0)] - f(x)).abs() < 1e-12);
        }
        assert_eq!(sp.eval(-0.5, 0)[(0, 0)], 0.0);
        assert_eq!(sp.eval(3.5, 0)[(0, 0)], 0.0);
    }

    #[test]
    fn cubic_degree_supported() {
        let values: Vec<_> = (0..40)
            .map(|i| scalar(((i as f64) * 0.1).sin()))
            .collect();
        let sp = MatrixSpline::interpolate(0.0, 0.1, &values, 3).unwrap();
        assert!((sp.eval(1.234, 0)[(0, 0)] - (1.234f64).sin()).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_degree() {
        let values: Vec<_> = (0..10).map(|i| scalar(i as f64)).collect();
        assert!(MatrixSpline::interpolate(0.0, 0.1, &values, 4).is_err());
    }
}
