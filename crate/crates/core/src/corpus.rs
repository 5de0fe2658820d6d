//! Named example potentials used across the test suites and the docs.
//! Amplitudes are chosen so the corpus exercises both signs, bound and
//! unbound spectra, commuting and non-commuting matrix structure, and a
//! slowly decaying tail.

use crate::linalg::RMat;
use crate::potential::{MatrixPotential, PotentialTerm, Profile};
use crate::real::{r64, Real};

pub fn free<T: Real>(n: usize) -> MatrixPotential<T> {
    MatrixPotential::zero(n)
}

fn scaled<T: Real>(profile: Profile<T>, matrix: RMat<T>) -> PotentialTerm<T> {
    PotentialTerm::scaled(profile, matrix).expect("corpus matrices are symmetric")
}

fn rotated<T: Real>(theta: f64, d1: f64, d2: f64) -> RMat<T> {
    let (s, c) = theta.sin_cos();
    let r = RMat::<T>::from_row_slice(2, 2, &[r64(c), r64(-s), r64(s), r64(c)]);
    let d = RMat::<T>::from_row_slice(2, 2, &[r64(d1), T::zero(), T::zero(), r64(d2)]);
    let m = &r * d * r.transpose();
    (&m + m.transpose()) * r64::<T>(0.5)
}

/// Square well: −2 on [0, 1], scalar.
pub fn scalar_box<T: Real>() -> MatrixPotential<T> {
    MatrixPotential::new(
        1,
        vec![scaled(
            Profile::ConstantBox {
                a: T::zero(),
                b: T::one(),
            },
            RMat::from_element(1, 1, r64(-2.0)),
        )],
    )
    .unwrap()
}

/// Repulsive scalar C∞ bump on [0, 3]; positive operator, no bound states.
pub fn weak_bump<T: Real>() -> MatrixPotential<T> {
    MatrixPotential::new(
        1,
        vec![scaled(
            Profile::SmoothBump {
                a: T::zero(),
                b: r64(3.0),
            },
            RMat::from_element(1, 1, r64(0.4)),
        )],
    )
    .unwrap()
}

/// Attractive scalar C∞ bump on [0, 3] deep enough for one bound state.
pub fn deep_well<T: Real>() -> MatrixPotential<T> {
    MatrixPotential::new(
        1,
        vec![scaled(
            Profile::SmoothBump {
                a: T::zero(),
                b: r64(3.0),
            },
            RMat::from_element(1, 1, r64(-1.5)),
        )],
    )
    .unwrap()
}

/// Block-diagonal well: the scalar box in the first channel, nothing in the
/// second.
pub fn diag_box_2x2<T: Real>() -> MatrixPotential<T> {
    let m = RMat::<T>::from_row_slice(2, 2, &[r64(-2.0), T::zero(), T::zero(), T::zero()]);
    MatrixPotential::new(
        2,
        vec![scaled(
            Profile::ConstantBox {
                a: T::zero(),
                b: T::one(),
            },
            m,
        )],
    )
    .unwrap()
}

/// Two overlapping smooth bumps whose coefficient matrices do not commute.
pub fn rotated_pair_2x2<T: Real>() -> MatrixPotential<T> {
    MatrixPotential::new(
        2,
        vec![
            scaled(
                Profile::SmoothBump {
                    a: T::zero(),
                    b: r64(2.0),
                },
                rotated(0.5, -1.2, -0.4),
            ),
            scaled(
                Profile::SmoothBump {
                    a: T::one(),
                    b: r64(3.0),
                },
                rotated(-0.7, -0.8, -0.3),
            ),
        ],
    )
    .unwrap()
}

/// 3×3 smooth bump with full coupling.
pub fn bump_3x3<T: Real>() -> MatrixPotential<T> {
    let m = RMat::<T>::from_row_slice(
        3,
        3,
        &[
            r64(-0.9),
            r64(0.25),
            r64(0.1),
            r64(0.25),
            r64(-0.5),
            r64(-0.15),
            r64(0.1),
            r64(-0.15),
            r64(-0.3),
        ],
    );
    MatrixPotential::new(
        3,
        vec![scaled(
            Profile::SmoothBump {
                a: T::zero(),
                b: r64(2.5),
            },
            m,
        )],
    )
    .unwrap()
}

/// Scalar smooth bump resampled onto a uniform grid (quintic interpolation).
pub fn sampled_bump<T: Real>() -> MatrixPotential<T> {
    let analytic = deep_well::<T>();
    let h = r64::<T>(0.005);
    let npts = 601usize; // covers [0, 3]
    let values: Vec<RMat<T>> = (0..npts)
        .map(|i| analytic.eval(h * r64(i as f64), 0).unwrap())
        .collect();
    let spline = crate::spline::MatrixSpline::interpolate(T::zero(), h, &values, 5).unwrap();
    MatrixPotential::new(1, vec![PotentialTerm::GridSampled { spline }]).unwrap()
}

/// Slowly decaying scalar tail `0.15·(1+x)^{−0.7}`: finite J₁, not compact.
pub fn slow_decay<T: Real>() -> MatrixPotential<T> {
    MatrixPotential::new(
        1,
        vec![scaled(
            Profile::PowerLaw {
                exponent: r64(0.7),
            },
            RMat::from_element(1, 1, r64(0.15)),
        )],
    )
    .unwrap()
}

/// 2×2 slowly decaying tail `(1+x)^{−0.7}·M₀` with a small symmetric M₀.
pub fn slow_decay_2x2<T: Real>() -> MatrixPotential<T> {
    let m = RMat::<T>::from_row_slice(2, 2, &[r64(0.12), r64(0.04), r64(0.04), r64(0.08)]);
    MatrixPotential::new(
        2,
        vec![scaled(
            Profile::PowerLaw {
                exponent: r64(0.7),
            },
            m,
        )],
    )
    .unwrap()
}

/// Gaussian bump centered at 3 (infinite support), for potential-level ops.
pub fn gaussian_example<T: Real>() -> MatrixPotential<T> {
    MatrixPotential::new(
        1,
        vec![scaled(
            Profile::GaussianBump {
                center: r64(3.0),
                width: T::one(),
            },
            RMat::from_element(1, 1, r64(-2.0)),
        )],
    )
    .unwrap()
}

/// The six-potential audit corpus from the verification suites.
pub fn audit_corpus<T: Real>() -> Vec<(&'static str, MatrixPotential<T>)> {
    vec![
        ("scalar_box", scalar_box()),
        ("weak_bump", weak_bump()),
        ("diag_box_2x2", diag_box_2x2()),
        ("rotated_pair_2x2", rotated_pair_2x2()),
        ("bump_3x3", bump_3x3()),
        ("sampled_bump", sampled_bump()),
    ]
}

/// Smooth compact potentials for the trace-formula suites.
pub fn smooth_corpus<T: Real>() -> Vec<(&'static str, MatrixPotential<T>)> {
    vec![
        ("weak_bump", weak_bump()),
        ("deep_well", deep_well()),
        ("rotated_pair_2x2", rotated_pair_2x2()),
        ("bump_3x3", bump_3x3()),
    ]
}

/// Potentials tuned for the asymptotic-fit cross checks: substantial second
/// expansion coefficients with tame higher ones, so the f64 fit resolves
/// them to the stated tolerance.
pub fn fit_corpus<T: Real>() -> Vec<(&'static str, MatrixPotential<T>)> {
    let scalar = |amp: f64, b: f64| -> MatrixPotential<T> {
        MatrixPotential::new(
            1,
            vec![scaled(
                Profile::SmoothBump {
                    a: T::zero(),
                    b: r64(b),
                },
                RMat::from_element(1, 1, r64(amp)),
            )],
        )
        .unwrap()
    };
    let pair = MatrixPotential::new(
        2,
        vec![
            scaled(
                Profile::SmoothBump {
                    a: T::zero(),
                    b: r64(4.0),
                },
                rotated(0.5, -1.6, -0.9),
            ),
            scaled(
                Profile::SmoothBump {
                    a: T::one(),
                    b: r64(5.0),
                },
                rotated(-0.4, -1.1, -0.5),
            ),
        ],
    )
    .unwrap();
    vec![
        ("fit_scalar_repulsive", scalar(1.4, 3.0)),
        ("fit_scalar_attractive", scalar(-2.2, 4.0)),
        ("fit_scalar_wide", scalar(-2.4, 4.5)),
        ("fit_pair_2x2", pair),
    ]
}
