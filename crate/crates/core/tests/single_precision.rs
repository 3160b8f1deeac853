mod common;

use common::*;
use smithwilson::finite::fit_finite_convergence;
use smithwilson::fit::{fit_weighted, fit_zcb_exact};
use smithwilson::kernel::{energy_coeff, wilson_w};
use smithwilson::{CurveConfig, FitMode, Instrument, KernelParams};

#[test]
fn kernel_in_f32_tracks_f64() {
    let p32 = KernelParams::<f32>::new(0.1, 0.03).unwrap();
    let p64 = KernelParams::<f64>::new(0.1, 0.03).unwrap();
    for &(t, u) in &[(1.0, 5.0), (10.0, 10.0), (30.0, 2.0)] {
        let w32 = wilson_w(t as f32, u as f32, &p32) as f64;
        let w64 = wilson_w(t, u, &p64);
        assert!((w32 - w64).abs() <= 1e-5 * w64.abs());
        let e32 = energy_coeff(t as f32, u as f32, &p32) as f64;
        assert!((e32 - w64).abs() <= 1e-4 * w64.abs());
    }
}

#[test]
fn fits_in_f32_track_f64() {
    let times = [1.0, 2.0, 5.0, 10.0];
    let p64 = zcb_prices(&times);
    let p32: Vec<(f32, f32)> = p64.iter().map(|&(t, p)| (t as f32, p as f32)).collect();
    let c64 = fit_zcb_exact(&p64, &classic()).unwrap();
    let cfg32 = CurveConfig::<f32>::classic(0.1, 1.039f32.ln()).unwrap();
    let c32 = fit_zcb_exact(&p32, &cfg32).unwrap();
    for k in 0..=40 {
        let t = k as f64;
        assert!((c32.price(t as f32) as f64 - c64.price(t)).abs() <= 1e-4, "t={t}");
    }

    let ins32: Vec<Instrument<f32>> = p32
        .iter()
        .enumerate()
        .map(|(i, &(t, p))| {
            let mode = if i == 3 { FitMode::Weighted(100.0) } else { FitMode::Exact };
            Instrument::zcb(format!("z{i}"), t, p).unwrap().with_mode(mode).unwrap()
        })
        .collect();
    let (w32, d32) = fit_weighted(&ins32, &cfg32).unwrap();
    assert!(d32.constraint_residual <= 1e-5);
    assert!(w32.price(3.0) > 0.0);

    let fcfg = CurveConfig::<f32>::new(0.1, 1.039f32.ln(), Some(40.0)).unwrap();
    let exact32: Vec<_> = ins32.into_iter().map(|i| i.with_mode(FitMode::Exact).unwrap()).collect();
    let f32_curve = fit_finite_convergence(&exact32, &fcfg).unwrap();
    assert!((f32_curve.forward_instantaneous(40.0).unwrap() - 1.039f32.ln()).abs() <= 1e-4);
}
