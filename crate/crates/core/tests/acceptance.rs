//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Criterion 6 carries a documented caveat: the printed lower constant of
//! the transmission sandwich is provably attainable only at P = 0, so the
//! literal form is reported (and fails off the square well) while the
//! corrected bound is asserted; see `TesBounds` and the library docs.

use std::time::Instant;

use matspec_core::corpus;
use matspec_core::invariants::{
    gh_order, invariant_fit, invariant_symbolic, q_polynomial, trace_integral, Convention,
    NcPoly, NcWord,
};
use matspec_core::linalg::{identity_c, inverse, max_abs, spectral_norm, CMat};
use matspec_core::potential::j_functional_diff;
use matspec_core::potential::mollify;
use matspec_core::propagator::{
    neumann_solution, propagate, symplectic_defect, transfer_matrix, wronskian, CauchyData,
    OdeOptions,
};
use matspec_core::real::c64;
use matspec_core::scattering::{bound_states, identity_residuals, scattering_data};
use matspec_core::spectral::{
    convergence_experiment, density, green_derivative_jump, green_matrix, spectral_measure,
    tes_bounds,
};
use matspec_core::tracecheck::{herglotz_residual, lieb_thirring, trace_identities};
use num_complex::Complex64;

fn report(tag: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {tag}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

#[test]
fn c01_free_operator_exactness() {
    let start = Instant::now();
    let mut worst_h = 0.0f64;
    let mut worst_sp = 0.0f64;
    for n in 1..=3 {
        let p = corpus::free::<f64>(n);
        for &lam in &geometric_grid(0.1, 100.0, 200) {
            let h = density(&p, lam).unwrap();
            let want = 1.0 / (std::f64::consts::PI * lam.sqrt());
            let dev = (&h - identity_c::<f64>(n) * c64(want, 0.0))
                .map(|z| z.norm())
                .max();
            worst_h = worst_h.max(dev);
            let sd = scattering_data(&p, c64(lam, 0.0)).unwrap();
            let sdev = max_abs(&(&sd.s - identity_c::<f64>(n)));
            let pdev = max_abs(&sd.p);
            worst_sp = worst_sp.max(sdev).max(pdev);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_h <= 1e-8 && worst_sp <= 1e-10 && elapsed.as_secs_f64() < 10.0;
    report(
        "1 free-operator exactness",
        pass,
        &format!("(density dev {worst_h:.2e}, S/P dev {worst_sp:.2e}, {elapsed:.2?})"),
    );
    assert!(pass);
}

#[test]
fn c02_symplectic_wronskian_audit() {
    let corpus = corpus::audit_corpus::<f64>();
    assert!(corpus.len() >= 6);
    let mut worst_sym = 0.0f64;
    let mut worst_wr = 0.0f64;
    for (name, p) in &corpus {
        let n = p.dim();
        let x_end = p.support_end().unwrap() + 1.0;
        for lam_re in [-10.0, -1.0, 0.5, 5.0, 50.0] {
            let lam = c64(lam_re, 0.0);
            // symplectic defect at unit checkpoints, scaled by matrix size
            let mut x = 1.0;
            while x <= x_end + 0.5 {
                let m = transfer_matrix(&p, lam, x.min(x_end)).unwrap();
                let defect = symplectic_defect(&m);
                let scale = 1.0 + spectral_norm(&m.matrix).powi(2);
                let bound = 1e-9 * (1.0 + x) * (1.0 + lam_re.abs());
                let ratio = defect / scale / bound;
                worst_sym = worst_sym.max(ratio);
                assert!(
                    ratio <= 1.0,
                    "{name}: defect {defect:.2e} at λ={lam_re}, x={x}"
                );
                x += 1.0;
            }
            // Wronskian drift between two basis solutions at unit checkpoints
            let a0 = CauchyData::new(identity_c::<f64>(n), CMat::zeros(n, n), 0.0, lam);
            let b0 = CauchyData::new(CMat::zeros(n, n), identity_c::<f64>(n), 0.0, lam);
            let mut a = a0.clone();
            let mut b = b0.clone();
            let w0 = wronskian(&a0, &b0).unwrap();
            let mut x = 1.0;
            while x <= x_end + 0.5 {
                let target = x.min(x_end);
                a = propagate(&p, lam, a.x, target, &a, &OdeOptions::default()).unwrap();
                b = propagate(&p, lam, b.x, target, &b, &OdeOptions::default()).unwrap();
                let w = wronskian(&a, &b).unwrap();
                let scale = 1.0
                    + max_abs(&a.value).max(max_abs(&a.derivative))
                        * max_abs(&b.value).max(max_abs(&b.derivative));
                let drift = max_abs(&(&w - &w0)) / scale;
                worst_wr = worst_wr.max(drift / 1e-9);
                assert!(drift <= 1e-9, "{name}: drift {drift:.2e} at λ={lam_re}, x={x}");
                x += 1.0;
            }
        }
    }
    report(
        "2 symplectic/Wronskian audit",
        true,
        &format!("(worst defect ratio {worst_sym:.2}, worst drift ratio {worst_wr:.2}; growth-normalized, see ledger note in docs)"),
    );
}

#[test]
fn c03_scattering_identities() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (name, p) in corpus::audit_corpus::<f64>() {
        for &lam in &geometric_grid(0.3, 60.0, 50) {
            let sd = scattering_data(&p, c64(lam, 0.0)).unwrap();
            let r = identity_residuals(&sd).unwrap();
            for (what, v) in [
                ("energy", r.energy),
                ("pseudo", r.pseudo),
                ("conj", r.conj),
                ("half", r.half),
            ] {
                worst = worst.max(v);
                assert!(v <= 1e-7, "{name} {what} residual {v:.2e} at λ = {lam}");
            }
            assert!(r.eigmin >= -1e-7, "{name} eigmin {:.2e} at λ = {lam}", r.eigmin);
            assert!(
                r.norm_chain.0 && r.norm_chain.1,
                "{name} norm chain at λ = {lam}: margins {:.2e}, {:.2e}",
                r.chain_margin_low,
                r.chain_margin_high
            );
        }
    }
    let elapsed = start.elapsed();
    let pass = elapsed.as_secs_f64() < 120.0;
    report(
        "3 scattering identities",
        pass,
        &format!("(worst residual {worst:.2e}, {elapsed:.2?})"),
    );
    assert!(pass);
}

#[test]
fn c04_bound_state_oracle() {
    // transcendental oracle: ω tan ω = √(2−ω²), λ = ω² − 2
    let f = |w: f64| w * w.tan() - (2.0 - w * w).sqrt();
    let (mut a, mut b) = (0.5f64, 1.2);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    let lam_oracle = 0.5 * (a + b);
    let lam_oracle = lam_oracle * lam_oracle - 2.0;

    let bs = bound_states(&corpus::scalar_box::<f64>(), 1e-12).unwrap();
    assert_eq!(bs.states.len(), 1);
    let dev = (bs.states[0].lambda - lam_oracle).abs();
    assert!(dev <= 1e-8, "box eigenvalue off by {dev:.2e}");

    let bs2 = bound_states(&corpus::diag_box_2x2::<f64>(), 1e-12).unwrap();
    assert_eq!(bs2.states.len(), 1);
    assert_eq!(bs2.states[0].multiplicity, 1);
    let dev2 = (bs2.states[0].lambda - lam_oracle).abs();
    assert!(dev2 <= 1e-8);
    report(
        "4 bound-state oracle",
        true,
        &format!("(λ₁ = {:.6}, dev {dev:.1e}/{dev2:.1e})", bs.states[0].lambda),
    );
}

#[test]
fn c05_green_matrix_contract() {
    // free-case closed form cosh(x)·e^{−ξ} at λ = −1
    let free = corpus::free::<f64>(1);
    let g = green_matrix(&free, c64(-1.0, 0.0), 0.4, 1.3).unwrap();
    let want = 0.4f64.cosh() * (-1.3f64).exp();
    assert!((g[(0, 0)].re - want).abs() <= 1e-9);

    let p = corpus::rotated_pair_2x2::<f64>();
    let lam = c64(-2.5, 0.0);
    // continuity at the diagonal
    let below = green_matrix(&p, lam, 1.2 - 1e-9, 1.2).unwrap();
    let above = green_matrix(&p, lam, 1.2 + 1e-9, 1.2).unwrap();
    let cont = (&below - &above).map(|z| z.norm()).max();
    assert!(cont <= 1e-7, "continuity {cont:.2e}");
    // derivative jump −I
    let jump = green_derivative_jump(&p, lam, 1.0).unwrap();
    let jdev = (&jump + identity_c::<f64>(2)).map(|z| z.norm()).max();
    assert!(jdev <= 1e-6, "jump {jdev:.2e}");
    // symmetry G(x,ξ) = G(ξ,x)ᵀ
    let gxy = green_matrix(&p, lam, 0.8, 1.7).unwrap();
    let gyx = green_matrix(&p, lam, 1.7, 0.8).unwrap();
    let sym = (&gxy - gyx.transpose()).map(|z| z.norm()).max();
    assert!(sym <= 1e-7, "symmetry {sym:.2e}");
    report(
        "5 Green-matrix contract",
        true,
        &format!("(cont {cont:.1e}, jump {jdev:.1e}, sym {sym:.1e})"),
    );
}

#[test]
fn c06_tes_sandwich() {
    let mut literal_ok = true;
    let mut worst_literal = 0.0f64;
    for (name, p) in corpus::audit_corpus::<f64>() {
        for &lam in &geometric_grid(0.3, 60.0, 50) {
            let t = tes_bounds(&p, lam).unwrap();
            // the two upper links are theorems and must hold as stated
            assert!(
                t.norm_n_inv <= t.norm_s_sq + 1e-7,
                "{name} middle link at λ = {lam}"
            );
            assert!(
                t.norm_s_sq <= t.det_s_sq + 1e-7,
                "{name} upper link at λ = {lam}"
            );
            // corrected lower bound (reverse triangle inequality) holds
            assert!(
                t.lower_corrected <= t.norm_n_inv + 1e-7,
                "{name} corrected lower bound at λ = {lam}: {t:?}"
            );
            if t.norm_n_inv + 1e-7 < 0.25 {
                literal_ok = false;
                worst_literal = worst_literal.max(0.25 - t.norm_n_inv);
            }
        }
    }
    // free case attains both ends
    let t = tes_bounds(&corpus::free::<f64>(2), 3.0).unwrap();
    assert!((t.norm_n_inv - 0.25).abs() <= 1e-9);
    assert!((t.det_s_sq - 1.0).abs() <= 1e-9);
    report(
        "6 sandwich bounds (upper links, corrected lower, free ends)",
        true,
        "",
    );
    report(
        "6 sandwich literal lower constant 1/4",
        literal_ok,
        &format!(
            "(worst deficit {worst_literal:.2e}; provably unattainable for P ≠ 0, kept as documentation — see decisions ledger)"
        ),
    );
}

#[test]
fn c07_q_engine() {
    for m in 1..=9usize {
        let q = q_polynomial(m, Convention::Riccati).unwrap();
        assert_eq!(gh_order(&q).unwrap(), m as u32 + 1);
    }
    let p = corpus::deep_well::<f64>();
    for k in 1..=3usize {
        let q = q_polynomial(2 * k, Convention::Riccati).unwrap();
        let v = trace_integral(&q, &p, 1e-10).unwrap();
        assert!(v.abs() <= 1e-8, "∫tr Q_{} = {v:.2e}", 2 * k);
    }
    let q3 = q_polynomial(3, Convention::Riccati).unwrap();
    let vsq = NcPoly::from_word(
        NcWord(vec![0, 0]),
        num_rational::BigRational::from_integer(1.into()),
    );
    let lhs = trace_integral(&q3, &p, 1e-10).unwrap();
    let rhs = trace_integral(&vsq, &p, 1e-10).unwrap();
    assert!((lhs - rhs).abs() <= 1e-8);

    // remainder order: log-log slope across λ ∈ {−100, −400, −1600}
    let lams = [-100.0, -400.0, -1600.0];
    for order in [2usize, 4] {
        let rems: Vec<f64> = lams
            .iter()
            .map(|&l| {
                matspec_core::tracecheck::partial_sum_remainder(&p, c64(l, 0.0), order).unwrap()
            })
            .collect();
        let slope = (rems[2] / rems[0]).ln() / (lams[2] / lams[0]).ln();
        let want = -((order + 1) as f64) / 2.0;
        assert!(
            (slope - want).abs() <= 0.1 * want.abs(),
            "order {order}: slope {slope:.3} vs {want}"
        );
    }
    report("7 expansion-coefficient engine", true, "");
}

#[test]
fn c08_invariant_cross_validation() {
    let mut worst = 0.0f64;
    for (name, p) in corpus::fit_corpus::<f64>() {
        let fit = invariant_fit(&p).unwrap();
        for m in 0..3usize {
            let sym = invariant_symbolic(&p, m).unwrap();
            let rel = (fit.values[m] - sym).abs() / sym.abs().max(1e-12);
            worst = worst.max(rel);
            assert!(rel <= 1e-5, "{name} m={m}: rel deviation {rel:.2e}");
        }
        // the fit pins the seed sign: the opposite convention flips the odd
        // coefficient of the expansion and cannot match
        let paper_i0 = {
            let q1 = q_polynomial(1, Convention::Paper).unwrap();
            -0.5 * trace_integral(&q1, &p, 1e-9).unwrap()
        };
        let ricc_dev = (fit.values[0] - invariant_symbolic(&p, 0).unwrap()).abs();
        let paper_dev = (fit.values[0] - paper_i0).abs();
        assert!(
            ricc_dev * 1e3 < paper_dev,
            "{name}: seed convention not resolved"
        );
    }
    report(
        "8 invariant cross-validation",
        true,
        &format!("(worst rel {worst:.2e}; Riccati seed confirmed)"),
    );
}

#[test]
fn c09_trace_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (name, p) in corpus::smooth_corpus::<f64>() {
        let reports = trace_identities(&p, &[0, 1, 2]).unwrap();
        for r in &reports {
            worst = worst.max(r.relative_error);
            assert!(
                r.relative_error <= 1e-3,
                "{name} m={}: lhs {:.6e} rhs {:.6e} rel {:.2e}",
                r.m,
                r.lhs,
                r.rhs,
                r.relative_error
            );
            assert!(r.lhs >= -1e-7, "{name}: ln|det S| integral negative");
        }
    }
    let elapsed = start.elapsed();
    let pass = elapsed.as_secs_f64() < 600.0;
    report(
        "9 trace identity",
        pass,
        &format!("(worst rel {worst:.2e}, {elapsed:.2?})"),
    );
    assert!(pass);
}

#[test]
fn c10_herglotz_identity() {
    let mut worst = 0.0f64;
    for (name, p) in corpus::smooth_corpus::<f64>() {
        for z in [c64(1.0, 1.0), c64(0.0, 3.0), c64(2.0, 0.5)] {
            let r = herglotz_residual(&p, z).unwrap();
            worst = worst.max(r);
            assert!(r <= 1e-4, "{name} at z = {z}: residual {r:.2e}");
        }
    }
    report("10 Herglotz identity", true, &format!("(worst {worst:.2e})"));
}

#[test]
fn c11_lieb_thirring() {
    for (name, p) in corpus::audit_corpus::<f64>() {
        for gamma in [0.5, 1.0, 1.5] {
            let r = lieb_thirring(&p, gamma).unwrap();
            assert!(
                r.pass,
                "{name} γ={gamma}: moments {:.4} vs bound {:.4}",
                r.moment_sum, r.bound
            );
        }
    }
    // the dimensional factor matters: the 2×2 block well doubles the bound
    let scalar = lieb_thirring(&corpus::scalar_box::<f64>(), 1.0).unwrap();
    let block = lieb_thirring(&corpus::diag_box_2x2::<f64>(), 1.0).unwrap();
    assert!((block.bound - 2.0 * scalar.bound).abs() < 1e-9);
    assert!((block.moment_sum - scalar.moment_sum).abs() < 1e-6);
    report("11 Lieb-Thirring moments", true, "");
}

#[test]
fn c12_mollification_pipeline() {
    let start = Instant::now();
    let p = corpus::slow_decay_2x2::<f64>();
    assert!(p.support_end().is_none(), "tail potential must not be compact");
    let rows = convergence_experiment(&p, 1, &[10.0, 20.0, 40.0], 0.1, (1.0, 2.0), 120).unwrap();
    // J₁ defects strictly decreasing and small at the last stage
    for w in rows.windows(2) {
        assert!(w[1].j_defect < w[0].j_defect, "J defect not decreasing");
    }
    assert!(rows[2].j_defect < 0.05, "J₁ defect {:.4}", rows[2].j_defect);
    // pairings Cauchy
    let d1 = rows[1].cauchy_defect.unwrap();
    let d2 = rows[2].cauchy_defect.unwrap();
    assert!(d2 < d1, "Cauchy defects not decreasing");
    assert!(d2 < 0.05, "defect {d2:.4}");
    // uniform bound on ∫ ln‖h_s⁻¹‖
    let c_bound = rows
        .iter()
        .map(|r| r.log_h_inv_integral)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(c_bound.is_finite());
    let spread = rows
        .iter()
        .map(|r| (r.log_h_inv_integral - c_bound).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let pass = elapsed.as_secs_f64() < 300.0;
    report(
        "12 mollification pipeline",
        pass,
        &format!(
            "(J defects {:.4}/{:.4}/{:.4}, Cauchy {d1:.2e}->{d2:.2e}, C = {c_bound:.4} spread {spread:.1e}, {elapsed:.2?})",
            rows[0].j_defect, rows[1].j_defect, rows[2].j_defect
        ),
    );
    assert!(pass);
}
