//! Truncated Taylor ("jet") arithmetic.
//!
//! A jet carries the coefficients `c[k] = f⁽ᵏ⁾(x)/k!` of a function expanded
//! at one point. Composing jets through the recurrences below yields exact
//! analytic derivatives of the potential profiles to any requested order,
//! which the derivative-hungry parts of the crate (differential-polynomial
//! trace integrals, J-functionals) rely on.

use crate::real::{r64, Real};

#[derive(Clone, Debug)]
pub struct Jet<T> {
    c: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(value: T, order: usize) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = value;
        Jet { c }
    }

    /// The identity function expanded at `x`.
    pub fn variable(x: T, order: usize) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = x;
        if order >= 1 {
            c[1] = T::one();
        }
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// d-th derivative: c[d]·d!.
    pub fn derivative(&self, d: usize) -> T {
        let mut fact = T::one();
        for k in 2..=d {
            fact *= r64::<T>(k as f64);
        }
        self.c[d] * fact
    }

    pub fn scale(&self, s: T) -> Self {
        Jet {
            c: self.c.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Jet {
            c: self
                .c
                .iter()
                .zip(other.c.iter())
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Jet {
            c: self
                .c
                .iter()
                .zip(other.c.iter())
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.c.len();
        let mut c = vec![T::zero(); n];
        for k in 0..n {
            let mut acc = T::zero();
            for j in 0..=k {
                acc += self.c[j] * other.c[k - j];
            }
            c[k] = acc;
        }
        Jet { c }
    }

    pub fn neg(&self) -> Self {
        Jet {
            c: self.c.iter().map(|&x| -x).collect(),
        }
    }

    /// Reciprocal by power-series inversion; requires a nonzero constant term.
    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let mut c = vec![T::zero(); n];
        c[0] = T::one() / self.c[0];
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += self.c[j] * c[k - j];
            }
            c[k] = -acc / self.c[0];
        }
        Jet { c }
    }

    /// exp(self) via the ODE recurrence e' = u'·e.
    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut c = vec![T::zero(); n];
        c[0] = self.c[0].exp();
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += r64::<T>(j as f64) * self.c[j] * c[k - j];
            }
            c[k] = acc / r64::<T>(k as f64);
        }
        Jet { c }
    }

    /// ln(self); requires a positive constant term.
    pub fn ln(&self) -> Self {
        let n = self.c.len();
        let q = self.recip();
        let mut c = vec![T::zero(); n];
        c[0] = self.c[0].ln();
        for k in 1..n {
            // l' = u'·(1/u), coefficient k−1 of the product
            let mut acc = T::zero();
            for j in 0..k {
                acc += r64::<T>((j + 1) as f64) * self.c[j + 1] * q.c[k - 1 - j];
            }
            c[k] = acc / r64::<T>(k as f64);
        }
        Jet { c }
    }

    /// self^p for real exponent, via exp(p·ln self).
    pub fn powf(&self, p: T) -> Self {
        self.ln().scale(p).exp()
    }
}

/// Evaluate a polynomial Σ aⱼ uʲ on a jet by Horner's rule.
pub fn poly_eval<T: Real>(coeffs: &[T], u: &Jet<T>) -> Jet<T> {
    let order = u.order();
    let mut acc = Jet::constant(T::zero(), order);
    for &a in coeffs.iter().rev() {
        acc = acc.mul(u).add(&Jet::constant(a, order));
    }
    acc
}
