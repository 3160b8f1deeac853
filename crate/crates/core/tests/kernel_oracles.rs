use proptest::prelude::*;
use smithwilson::kernel::{energy_coeff, energy_coeff_quadrature, energy_matrix, wilson_g1, wilson_g2, wilson_w, wilson_w_dt};
use smithwilson::numerics::LuFactorization;
use smithwilson::KernelParams;

const TAUS: [f64; 5] = [1.0, 5.0, 10.0, 20.0, 30.0];
const ALPHAS: [f64; 3] = [0.05, 0.1, 0.2];

fn f_infs() -> [f64; 2] {
    [0.0, 1.039f64.ln()]
}

/// `e^{f∞t} W(t, τ)` evaluated from the kernel.
fn h(t: f64, tau: f64, p: &KernelParams<f64>) -> f64 {
    (p.f_inf() * t).exp() * wilson_w(t, tau, p)
}

#[test]
fn energy_coeff_matches_quadrature_on_grid() {
    for &a in &ALPHAS {
        for f in f_infs() {
            let p = KernelParams::new(a, f).unwrap();
            for &k in &TAUS {
                for &l in &TAUS {
                    let closed = energy_coeff(k, l, &p);
                    let quad = energy_coeff_quadrature(k, l, &p).unwrap();
                    assert!((closed - quad).abs() <= 1e-8 * closed.abs(), "α={a} f={f} ({k},{l}): {closed} vs {quad}");
                }
            }
        }
    }
}

#[test]
fn energy_coeff_reproduces_kernel() {
    for &a in &ALPHAS {
        for f in f_infs() {
            let p = KernelParams::new(a, f).unwrap();
            for &k in &TAUS {
                for &l in &TAUS {
                    let d = (energy_coeff(k, l, &p) - wilson_w(k, l, &p)).abs();
                    assert!(d <= 1e-8, "α={a} f={f} ({k},{l}): {d}");
                }
            }
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let p = KernelParams::new(0.1, 0.03).unwrap();
    let step = 1e-4;
    for &tau in &[2.0, 10.0] {
        for &t in &[0.5, 1.7, 6.0, 14.0, 40.0] {
            let fd1 = (h(t + step, tau, &p) - h(t - step, tau, &p)) / (2.0 * step);
            assert!((fd1 - wilson_g1(t, tau, &p)).abs() <= 1e-8, "g1 t={t} τ={tau}");
            let fd2 = (wilson_g1(t + step, tau, &p) - wilson_g1(t - step, tau, &p)) / (2.0 * step);
            assert!((fd2 - wilson_g2(t, tau, &p)).abs() <= 1e-8, "g2 t={t} τ={tau}");
            let fdw = (wilson_w(t + step, tau, &p) - wilson_w(t - step, tau, &p)) / (2.0 * step);
            assert!((fdw - wilson_w_dt(t, tau, &p)).abs() <= 1e-9, "w_dt t={t} τ={tau}");
        }
    }
}

#[test]
fn kernel_solves_fourth_order_ode_off_the_knot() {
    // (e^{f∞t}W)'''' = α² (e^{f∞t}W)'' away from t = τ.
    let a = 0.15;
    let p = KernelParams::new(a, 0.02).unwrap();
    let tau = 8.0;
    let step = 1e-3;
    for &t in &[1.0, 3.0, 6.5, 9.5, 15.0, 30.0] {
        let g = |x: f64| wilson_g2(x, tau, &p);
        let g4 = (g(t + step) - 2.0 * g(t) + g(t - step)) / (step * step);
        let scale = g(t).abs().max(1e-6);
        assert!((g4 - a * a * g(t)).abs() <= 1e-6 * scale, "t={t}");
    }
}

#[test]
fn kernel_vanishes_at_zero_and_flattens_at_infinity() {
    let p = KernelParams::new(0.1, 0.0).unwrap();
    for &tau in &TAUS {
        assert_eq!(h(0.0, tau, &p), 0.0);
        assert!(wilson_g1(200.0, tau, &p).abs() <= 1e-8);
        assert!(wilson_g2(200.0, tau, &p).abs() <= 1e-9);
    }
}

#[test]
fn energy_matrix_is_positive_definite() {
    let p = KernelParams::new(0.1, 1.039f64.ln()).unwrap();
    let times: Vec<f64> = (1..=12).map(|k| k as f64 * 2.5).collect();
    let ew = energy_matrix(&times, &p).unwrap();
    assert!(ew.entries().is_symmetric(0.0));
    // Cholesky without pivoting succeeds only for positive definite input.
    let n = times.len();
    let m = ew.entries();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[(i, i)] - s;
                assert!(d > 0.0, "pivot {i}: {d}");
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[(i, j)] - s) / l[j][j];
            }
        }
    }
    assert!(LuFactorization::new(m).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_symmetric(t in 0.0f64..80.0, u in 0.0f64..80.0, a in 0.01f64..1.0, f in -0.05f64..0.1) {
        let p = KernelParams::new(a, f).unwrap();
        prop_assert_eq!(wilson_w(t, u, &p), wilson_w(u, t, &p));
    }

    #[test]
    fn ufr_enters_only_through_prefactor(k in 0.1f64..40.0, l in 0.1f64..40.0, f in -0.02f64..0.08) {
        let p0 = KernelParams::new(0.1, 0.0).unwrap();
        let pf = KernelParams::new(0.1, f).unwrap();
        let lhs = energy_coeff(k, l, &pf);
        let rhs = (-f * (k + l)).exp() * energy_coeff(k, l, &p0);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1e-300));
    }

    #[test]
    fn quadratic_form_nonnegative(z in proptest::collection::vec(-10.0f64..10.0, 6)) {
        let p = KernelParams::new(0.12, 0.03).unwrap();
        let ew = energy_matrix(&[0.5, 2.0, 3.0, 7.0, 11.0, 25.0], &p).unwrap();
        prop_assert!(ew.quadratic_form(&z) >= -1e-14);
    }
}
