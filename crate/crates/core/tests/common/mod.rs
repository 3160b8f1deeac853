#![allow(dead_code)]

use smithwilson::marketio::parswap_to_cashflows;
use smithwilson::{CurveConfig, FitMode, Instrument};

/// Synthetic EUR-like par rates at the EIOPA tenors, plus a 30y point.
pub const PAR_RATES: [(u32, f64); 14] = [
    (1, -0.0030),
    (2, -0.0025),
    (3, -0.0018),
    (4, -0.0010),
    (5, -0.0002),
    (6, 0.0007),
    (7, 0.0015),
    (8, 0.0024),
    (9, 0.0032),
    (10, 0.0040),
    (12, 0.0053),
    (15, 0.0067),
    (20, 0.0078),
    (30, 0.0080),
];

pub fn ufr() -> f64 {
    1.039f64.ln()
}

pub fn classic() -> CurveConfig<f64> {
    CurveConfig::classic(0.1, ufr()).unwrap()
}

pub fn swap(m: u32, rate: f64, mode: FitMode<f64>) -> Instrument<f64> {
    let (cf, price) = parswap_to_cashflows(m, rate).unwrap();
    Instrument::new(format!("s{m:02}"), cf, price, mode).unwrap()
}

/// Par swaps at tenors up to 20y, all exact.
pub fn eiopa_swaps() -> Vec<Instrument<f64>> {
    PAR_RATES
        .iter()
        .filter(|&&(m, _)| m <= 20)
        .map(|&(m, r)| swap(m, r, FitMode::Exact))
        .collect()
}

/// EIOPA swaps plus the 30y point in the given mode.
pub fn with_30y(mode: FitMode<f64>) -> Vec<Instrument<f64>> {
    let mut v = eiopa_swaps();
    v.push(swap(30, PAR_RATES[13].1, mode));
    v
}

/// Zero-coupon prices from a smooth Nelson-Siegel-like curve.
pub fn zcb_prices(times: &[f64]) -> Vec<(f64, f64)> {
    times
        .iter()
        .map(|&t| {
            let x = t / 3.0;
            let y = 0.01 + 0.015 * (1.0 - (-x).exp()) / x - 0.02 * (-x).exp();
            (t, (-y * t).exp())
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on a copy, written
/// independently of the library solver.
pub fn naive_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &x)| r.iter().copied().chain([x]).collect()).collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let pivot_row = m[c].clone();
        for row in m.iter_mut().skip(c + 1) {
            let f = row[c] / pivot_row[c];
            row.iter_mut().zip(&pivot_row).skip(c).for_each(|(x, p)| *x -= f * p);
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

/// Max absolute price difference on the 60-point mesh 1..=60.
pub fn mesh_distance(p: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64) -> f64 {
    (1..=60)
        .map(|i| (p(i as f64) - q(i as f64)).abs())
        .fold(0.0, f64::max)
}
