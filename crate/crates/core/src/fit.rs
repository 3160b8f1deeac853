//! Exact and weighted Smith-Wilson fits.
//!
//! Curves are expanded as `P(t) = e^{−f∞ t} + Σ_l ζ_l W(t, t_l)` over the
//! distinct cash-flow times `t_l` of all instruments. Exact instruments give
//! linear constraints `C^e ζ = P̃r^e`; weighted instruments add
//! `½ ‖C^w ζ − P̃r^w‖²` to the energy `½ ζᵀ EW ζ`. The minimizer and a
//! multiplier `λ` solve
//!
//! ```text
//! [ EW + (C^w)ᵀC^w   (C^e)ᵀ ] [ζ]   [ (C^w)ᵀ P̃r^w ]
//! [ C^e              0      ] [λ] = [ P̃r^e        ]
//! ```
//!
//! The solver uses the equivalent augmented system with `μ_i = w_i (C'_i ζ −
//! p̃_i)`, where `C'` and `p̃` are the rows and residual prices without the
//! `√w` scaling:
//!
//! ```text
//! [ EW   (C^e)ᵀ  C'ᵀ  ] [ζ]   [ 0   ]
//! [ C^e  0       0    ] [λ] = [ p̃^e ]
//! [ C'   0      −W⁻¹  ] [μ]   [ p̃   ]
//! ```
//!
//! Eliminating `μ` gives the block system above; unlike it, this one has a
//! finite limit as the weights grow.

use std::collections::BTreeSet;

use log::warn;

use crate::curve::{build_grid, grid_position, CurveConfig, FitMode, FittedCurve, Instrument};
use crate::error::{CurveError, FitError, ValidationError};
use crate::kernel::{energy_matrix, validate_grid, wilson_w};
use crate::numerics::{dependent_rows, max_abs, DenseMatrix, LuFactorization};
use crate::Scalar;

/// Row tolerance used to detect linearly dependent exact cash-flow rows.
const DEPENDENCE_TOL: f64 = 1e-12;

/// Design matrices and residual prices of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices<T> {
    /// `C^e_il = Σ_k cf^e_i(t_k) W(t_k, t_l)`, one row per exact instrument.
    pub c_exact: DenseMatrix<T>,
    /// `C^w_il = √w_i Σ_k cf^w_i(t_k) W(t_k, t_l)`.
    pub c_weighted: DenseMatrix<T>,
    /// `Pr^e_i − Σ_k cf^e_i(t_k) e^{−f∞ t_k}`.
    pub pr_exact: Vec<T>,
    /// `√w_i (Pr^w_i − Σ_k cf^w_i(t_k) e^{−f∞ t_k})`.
    pub pr_weighted: Vec<T>,
    pub exact_ids: Vec<String>,
    pub weighted_ids: Vec<String>,
}

/// Energy, penalty and solver residuals of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics<T> {
    /// `½ ζᵀ EW ζ`.
    pub energy: T,
    /// `½ Σ w_i (model_i − Pr_i)²` over weighted instruments.
    pub penalty: T,
    /// Max-norm residual of the stationarity rows `EW ζ + (C^e)ᵀ λ + C'ᵀ μ`
    /// and the penalty rows `C' ζ − μ / w − p̃` of the augmented system.
    pub stationarity_residual: T,
    /// `‖C^e ζ − P̃r^e‖∞`.
    pub constraint_residual: T,
    /// Max of the two residuals above.
    pub kkt_residual: T,
    /// 1-norm condition number of the solved system.
    pub condition_estimate: T,
    /// Lagrange multipliers, one per exact instrument (in `exact_ids` order).
    pub multipliers: Vec<T>,
    pub exact_ids: Vec<String>,
    pub weighted_ids: Vec<String>,
}

/// Classic fit to zero-coupon prices `(t_j, P_j)`: solves `W ζ = P − e^{−f∞ t}`.
pub fn fit_zcb_exact<T: Scalar>(
    prices: &[(T, T)],
    config: &CurveConfig<T>,
) -> Result<FittedCurve<T>, FitError> {
    let times: Vec<T> = prices.iter().map(|&(t, _)| t).collect();
    validate_grid(&times)?;
    if let Some(j) = prices.iter().position(|&(_, p)| !(p > T::zero() && p.is_finite())) {
        return Err(ValidationError::new("prices", format!("entry {j} is not a positive finite price")).into());
    }
    let kp = config.kernel_params();
    let n = times.len();
    let w = DenseMatrix::from_fn(n, n, |j, k| wilson_w(times[j], times[k], &kp));
    let rhs: Vec<T> = prices
        .iter()
        .map(|&(t, p)| p - (-config.f_inf() * t).exp())
        .collect();
    let zeta = LuFactorization::new(&w)?.solve(&rhs)?;
    Ok(FittedCurve::classic(times, zeta, *config)?)
}

/// Cash-flow amounts of each instrument on `grid`; amounts falling on the
/// same grid point are summed.
pub(crate) fn cashflow_matrix<T: Scalar>(instruments: &[Instrument<T>], grid: &[T]) -> DenseMatrix<T> {
    let mut m = DenseMatrix::zeros(instruments.len(), grid.len());
    for (i, ins) in instruments.iter().enumerate() {
        for &(t, a) in ins.cashflows().flows() {
            let k = grid_position(grid, t).expect("grid built from these instruments");
            m[(i, k)] += a;
        }
    }
    m
}

/// Sorts instruments by id so the assembled matrices do not depend on input
/// order. Ids must be unique.
pub(crate) fn canonical_order<T: Scalar>(instruments: &[Instrument<T>]) -> Result<Vec<Instrument<T>>, ValidationError> {
    let mut sorted = instruments.to_vec();
    sorted.sort_by(|a, b| a.id().cmp(b.id()));
    if let Some(w) = sorted.windows(2).find(|w| w[0].id() == w[1].id()) {
        return Err(ValidationError::new("instruments", format!("duplicate id {}", w[0].id())));
    }
    Ok(sorted)
}

/// Assembles `C^e`, `C^w` and the residual prices on `grid`.
pub fn build_design<T: Scalar>(
    instruments: &[Instrument<T>],
    grid: &[T],
    config: &CurveConfig<T>,
) -> Result<DesignMatrices<T>, FitError> {
    validate_grid(grid)?;
    let kp = config.kernel_params();
    let n = grid.len();
    let w = DenseMatrix::from_fn(n, n, |k, l| wilson_w(grid[k], grid[l], &kp));

    let mut exact = Vec::new();
    let mut weighted = Vec::new();
    for ins in instruments {
        if let Some(&(t, _)) = ins
            .cashflows()
            .flows()
            .iter()
            .find(|&&(t, _)| grid_position(grid, t).is_none())
        {
            return Err(ValidationError::new(
                format!("instrument {}", ins.id()),
                format!("cash flow at {t} is not on the grid"),
            )
            .into());
        }
        match ins.mode() {
            FitMode::Exact => exact.push(ins),
            FitMode::Weighted(wt) if wt > T::zero() && wt.is_finite() => weighted.push((ins, wt.sqrt())),
            FitMode::Weighted(wt) => {
                return Err(ValidationError::new(
                    format!("weight of {}", ins.id()),
                    format!("must be finite and > 0, got {wt}"),
                )
                .into())
            }
        }
    }

    let f = config.f_inf();
    let residual = |ins: &Instrument<T>| ins.price() - ins.cashflows().present_value(|t| (-f * t).exp());

    let exact_owned: Vec<Instrument<T>> = exact.iter().map(|&i| i.clone()).collect();
    let weighted_owned: Vec<Instrument<T>> = weighted.iter().map(|(i, _)| (*i).clone()).collect();
    let c_exact = cashflow_matrix(&exact_owned, grid).matmul(&w)?;
    let mut c_weighted = cashflow_matrix(&weighted_owned, grid).matmul(&w)?;
    for (i, (_, root_w)) in weighted.iter().enumerate() {
        for l in 0..n {
            c_weighted[(i, l)] *= *root_w;
        }
    }
    Ok(DesignMatrices {
        c_exact,
        c_weighted,
        pr_exact: exact.iter().map(|i| residual(i)).collect(),
        pr_weighted: weighted.iter().map(|(i, rw)| *rw * residual(i)).collect(),
        exact_ids: exact.iter().map(|i| i.id().to_string()).collect(),
        weighted_ids: weighted.iter().map(|(i, _)| i.id().to_string()).collect(),
    })
}

/// Weighted Smith-Wilson fit. Exact instruments are repriced exactly;
/// weighted ones are penalized. Instruments with zero weight are dropped.
pub fn fit_weighted<T: Scalar>(
    instruments: &[Instrument<T>],
    config: &CurveConfig<T>,
) -> Result<(FittedCurve<T>, FitDiagnostics<T>), FitError> {
    if config.t2().is_some() {
        return Err(FitError::Unsupported(
            "weighted fitting with a finite convergence term".into(),
        ));
    }
    if instruments.is_empty() {
        return Err(ValidationError::new("instruments", "no instruments to fit").into());
    }
    let mut kept = Vec::with_capacity(instruments.len());
    for ins in instruments {
        match ins.mode() {
            FitMode::Weighted(w) if w == T::zero() => {
                warn!("instrument {} has zero weight and is ignored", ins.id());
            }
            _ => kept.push(ins.clone()),
        }
    }
    if kept.is_empty() {
        return Err(ValidationError::new("instruments", "every instrument has zero weight").into());
    }
    let kept = canonical_order(&kept)?;
    let grid = build_grid(&kept);
    let n = grid.len();
    let ew = energy_matrix(&grid, &config.kernel_params())?;
    let design = build_design(&kept, &grid, config)?;

    let exact: Vec<Instrument<T>> = kept.iter().filter(|i| i.is_exact()).cloned().collect();
    if !exact.is_empty() {
        let dependent = dependent_rows(&cashflow_matrix(&exact, &grid), T::lit(DEPENDENCE_TOL));
        if !dependent.is_empty() {
            return Err(FitError::RedundantExact {
                ids: dependent.iter().map(|&r| exact[r].id().to_string()).collect(),
            });
        }
    }

    // Augmented form: with `μ_i = w_i (C'_i ζ − p̃_i)` on the unscaled rows
    // `C'`, the system stays well conditioned as `w → ∞` and tends to the
    // all-exact one.
    let weighted: Vec<(Instrument<T>, T)> = kept
        .iter()
        .filter_map(|i| match i.mode() {
            FitMode::Weighted(w) => Some((i.clone(), w)),
            FitMode::Exact => None,
        })
        .collect();
    let kp = config.kernel_params();
    let wmat = DenseMatrix::from_fn(n, n, |k, l| wilson_w(grid[k], grid[l], &kp));
    let weighted_only: Vec<Instrument<T>> = weighted.iter().map(|(i, _)| i.clone()).collect();
    let c_w = cashflow_matrix(&weighted_only, &grid).matmul(&wmat)?;
    let f = config.f_inf();
    let p_w: Vec<T> = weighted
        .iter()
        .map(|(i, _)| i.price() - i.cashflows().present_value(|t| (-f * t).exp()))
        .collect();

    let ne = design.c_exact.rows();
    let nw = weighted.len();
    let ew_m = ew.entries();
    let size = n + ne + nw;
    let system = DenseMatrix::from_fn(size, size, |i, j| {
        if i < n {
            if j < n {
                ew_m[(i, j)]
            } else if j < n + ne {
                design.c_exact[(j - n, i)]
            } else {
                c_w[(j - n - ne, i)]
            }
        } else if i < n + ne {
            if j < n {
                design.c_exact[(i - n, j)]
            } else {
                T::zero()
            }
        } else if j < n {
            c_w[(i - n - ne, j)]
        } else if j == i {
            -weighted[i - n - ne].1.recip()
        } else {
            T::zero()
        }
    });
    let mut rhs = vec![T::zero(); n];
    rhs.extend(&design.pr_exact);
    rhs.extend(&p_w);
    let lu = LuFactorization::new(&system)?;
    let solution = lu.solve(&rhs)?;
    let zeta = &solution[..n];
    let multipliers = &solution[n..n + ne];
    let mu = &solution[n + ne..];

    let mut stationarity: Vec<T> = {
        let ez = ew_m.mul_vec(zeta)?;
        let ce = design.c_exact.tr_mul_vec(multipliers)?;
        let cw = c_w.tr_mul_vec(mu)?;
        ez.iter().zip(&ce).zip(&cw).map(|((&a, &b), &c)| a + b + c).collect()
    };
    stationarity.extend(
        c_w.mul_vec(zeta)?
            .iter()
            .zip(mu)
            .zip(&weighted)
            .zip(&p_w)
            .map(|(((&cz, &m), (_, w)), &p)| cz - m / *w - p),
    );
    let constraint: Vec<T> = design
        .c_exact
        .mul_vec(zeta)?
        .iter()
        .zip(&design.pr_exact)
        .map(|(&c, &p)| c - p)
        .collect();

    let curve = FittedCurve::classic(grid, zeta.to_vec(), *config)?;
    let energy = ew.quadratic_form(zeta) / T::lit(2.0);
    let penalty = weighted_penalty(&curve, &kept);
    let stationarity_residual = max_abs(&stationarity);
    let constraint_residual = max_abs(&constraint);
    let diagnostics = FitDiagnostics {
        energy,
        penalty,
        stationarity_residual,
        constraint_residual,
        kkt_residual: stationarity_residual.max(constraint_residual),
        condition_estimate: lu.condition_one(),
        multipliers: multipliers.to_vec(),
        exact_ids: design.exact_ids,
        weighted_ids: design.weighted_ids,
    };
    Ok((curve, diagnostics))
}

/// Classic generalized Smith-Wilson fit: every instrument repriced exactly,
/// whatever its mode.
pub fn fit_exact<T: Scalar>(
    instruments: &[Instrument<T>],
    config: &CurveConfig<T>,
) -> Result<(FittedCurve<T>, FitDiagnostics<T>), FitError> {
    let exact = instruments
        .iter()
        .map(|i| i.clone().with_mode(FitMode::Exact))
        .collect::<Result<Vec<_>, _>>()?;
    fit_weighted(&exact, config)
}

fn weighted_penalty<T: Scalar>(curve: &FittedCurve<T>, instruments: &[Instrument<T>]) -> T {
    instruments
        .iter()
        .filter_map(|i| match i.mode() {
            FitMode::Weighted(w) => {
                let err = i.model_price(curve) - i.price();
                Some(w * err * err / T::lit(2.0))
            }
            FitMode::Exact => None,
        })
        .sum()
}

/// Smith-Wilson energy `½ ζᵀ EW ζ` of a classic curve.
pub fn energy_value<T: Scalar>(curve: &FittedCurve<T>) -> Result<T, FitError> {
    if !curve.is_classic() {
        return Err(CurveError::Unsupported("energy of a finite-convergence curve").into());
    }
    if curve.grid().is_empty() {
        return Ok(T::zero());
    }
    let ew = energy_matrix(curve.grid(), &curve.config().kernel_params())?;
    Ok(ew.quadratic_form(curve.zeta()) / T::lit(2.0))
}

/// Energy plus `½ Σ w_i (model_i − Pr_i)²` over the weighted instruments.
pub fn evsw_value<T: Scalar>(curve: &FittedCurve<T>, instruments: &[Instrument<T>]) -> Result<T, FitError> {
    Ok(energy_value(curve)? + weighted_penalty(curve, instruments))
}

/// Ids of the instruments named in `ids` that are absent from `instruments`.
pub fn missing_ids<'a, T: Scalar>(instruments: &[Instrument<T>], ids: &'a [String]) -> Vec<&'a str> {
    let present: BTreeSet<&str> = instruments.iter().map(|i| i.id()).collect();
    ids.iter()
        .map(String::as_str)
        .filter(|id| !present.contains(id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CashflowSchedule;

    fn cfg() -> CurveConfig<f64> {
        CurveConfig::classic(0.1, 1.039f64.ln()).unwrap()
    }

    #[test]
    fn single_flat_zcb() {
        let c = cfg();
        let t = 7.0;
        let curve = fit_zcb_exact(&[(t, (-c.f_inf() * t).exp())], &c).unwrap();
        assert_eq!(curve.zeta().len(), 1);
        assert!(curve.zeta()[0].abs() < 1e-15);
    }

    #[test]
    fn zcb_validation() {
        let c = cfg();
        assert!(fit_zcb_exact(&[(1.0, 0.9), (1.0, 0.8)], &c).is_err());
        assert!(fit_zcb_exact(&[(1.0, -0.9)], &c).is_err());
        assert!(fit_zcb_exact::<f64>(&[], &c).is_err());
    }

    #[test]
    fn design_single_exact_zcb() {
        let c = cfg();
        let t = 4.0;
        let p = 0.9;
        let ins = Instrument::zcb("z", t, p).unwrap();
        let d = build_design(&[ins], &[t], &c).unwrap();
        let kp = c.kernel_params();
        assert_eq!(d.c_exact.as_slice(), &[wilson_w(t, t, &kp)]);
        assert!((d.pr_exact[0] - (p - (-c.f_inf() * t).exp())).abs() < 1e-16);
        assert_eq!(d.c_weighted.rows(), 0);
    }

    #[test]
    fn design_weight_scaling() {
        let c = cfg();
        let cf = CashflowSchedule::new(vec![(1.0, 0.02), (2.0, 1.02)]).unwrap();
        let unit = Instrument::new("s", cf.clone(), 1.0, FitMode::Weighted(1.0)).unwrap();
        let exact = Instrument::new("s", cf.clone(), 1.0, FitMode::Exact).unwrap();
        let grid = [1.0, 2.0];
        let du = build_design(&[unit], &grid, &c).unwrap();
        let de = build_design(&[exact], &grid, &c).unwrap();
        assert_eq!(du.c_weighted.as_slice(), de.c_exact.as_slice());
        assert_eq!(du.pr_weighted, de.pr_exact);

        let one = Instrument::new("s", cf.clone(), 1.0, FitMode::Weighted(3.0)).unwrap();
        let two = Instrument::new("s", cf, 1.0, FitMode::Weighted(6.0)).unwrap();
        let d1 = build_design(&[one], &grid, &c).unwrap();
        let d2 = build_design(&[two], &grid, &c).unwrap();
        let r2 = 2f64.sqrt();
        for (a, b) in d1.c_weighted.as_slice().iter().zip(d2.c_weighted.as_slice()) {
            assert!((a * r2 - b).abs() <= 1e-15 * b.abs());
        }
        assert!((d1.pr_weighted[0] * r2 - d2.pr_weighted[0]).abs() <= 1e-15 * d2.pr_weighted[0].abs());
    }

    #[test]
    fn design_rejects_zero_weight_and_off_grid() {
        let c = cfg();
        let z = Instrument::zcb("z", 3.0, 0.9).unwrap().with_mode(FitMode::Weighted(0.0)).unwrap();
        assert!(build_design(&[z], &[3.0], &c).is_err());
        let off = Instrument::zcb("z", 3.0, 0.9).unwrap();
        assert!(build_design(&[off], &[2.0], &c).is_err());
    }

    #[test]
    fn fit_weighted_errors() {
        let c = cfg();
        assert!(matches!(fit_weighted::<f64>(&[], &c), Err(FitError::Validation(_))));
        let a = Instrument::zcb("a", 3.0, 0.9).unwrap();
        let b = Instrument::zcb("b", 3.0, 0.9).unwrap();
        match fit_weighted(&[a.clone(), b], &c) {
            Err(FitError::RedundantExact { ids }) => assert_eq!(ids, vec!["b".to_string()]),
            other => panic!("expected redundancy error, got {other:?}"),
        }
        let dup = Instrument::zcb("a", 5.0, 0.8).unwrap();
        assert!(matches!(fit_weighted(&[a.clone(), dup], &c), Err(FitError::Validation(_))));
        let finite = CurveConfig::new(0.1, 0.03, Some(60.0)).unwrap();
        assert!(matches!(fit_weighted(&[a], &finite), Err(FitError::Unsupported(_))));
        let zero = Instrument::zcb("z", 3.0, 0.9).unwrap().with_mode(FitMode::Weighted(0.0)).unwrap();
        assert!(matches!(fit_weighted(&[zero], &c), Err(FitError::Validation(_))));
    }

    #[test]
    fn energy_of_zero_and_scaling() {
        let c = cfg();
        let zero = FittedCurve::classic(vec![1.0, 4.0], vec![0.0, 0.0], c).unwrap();
        assert_eq!(energy_value(&zero).unwrap(), 0.0);
        let z = FittedCurve::classic(vec![1.0, 4.0], vec![0.3, -0.1], c).unwrap();
        let z3 = z.with_zeta(vec![0.9, -0.3]).unwrap();
        let e = energy_value(&z).unwrap();
        assert!((energy_value(&z3).unwrap() - 9.0 * e).abs() < 1e-15);
        assert!(e > 0.0);
    }

    #[test]
    fn energy_unsupported_for_finite() {
        let c = CurveConfig::new(0.1, 0.03, Some(60.0)).unwrap();
        let curve = FittedCurve::finite(vec![1.0], vec![0.1], c).unwrap();
        assert!(matches!(energy_value(&curve), Err(FitError::Curve(CurveError::Unsupported(_)))));
    }

    #[test]
    fn evsw_without_weighted_is_energy() {
        let c = cfg();
        let ins = vec![
            Instrument::zcb("a", 2.0, 0.95).unwrap(),
            Instrument::zcb("b", 8.0, 0.8).unwrap(),
        ];
        let (curve, diag) = fit_weighted(&ins, &c).unwrap();
        assert_eq!(evsw_value(&curve, &ins).unwrap(), energy_value(&curve).unwrap());
        assert_eq!(diag.penalty, 0.0);
    }

    #[test]
    fn missing_ids_listed() {
        let ins = vec![Instrument::zcb("a", 2.0, 0.95).unwrap()];
        let ids = vec!["a".to_string(), "b".to_string()];
        assert_eq!(missing_ids(&ins, &ids), vec!["b"]);
    }
}
