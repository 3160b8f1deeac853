//! Instruments, fitted curves and curve evaluation.

use crate::error::{CurveError, ValidationError};
use crate::finite::KernelCoeffs;
use crate::kernel::{wilson_w, wilson_w_dt, KernelParams};
use crate::Scalar;

/// Cash-flow times closer than this are treated as the same grid point.
pub const GRID_MERGE_TOL: f64 = 1e-9;

/// Minimum gap between the last cash flow and the convergence term.
pub const MIN_T2_GAP: f64 = 1e-6;

/// Converts an annually compounded UFR (e.g. 0.039) to its continuous form.
pub fn ufr_from_annual<T: Scalar>(annual: T) -> T {
    annual.ln_1p()
}

/// Parameters every kernel and fit is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveConfig<T> {
    alpha: T,
    f_inf: T,
    t2: Option<T>,
}

impl<T: Scalar> CurveConfig<T> {
    /// `alpha` in 1/years, `f_inf` the continuously compounded UFR, `t2` the
    /// optional term at which the forward rate must reach `f_inf`.
    pub fn new(alpha: T, f_inf: T, t2: Option<T>) -> Result<Self, ValidationError> {
        KernelParams::new(alpha, f_inf)?;
        if let Some(t2) = t2 {
            if !(t2 > T::zero() && t2.is_finite()) {
                return Err(ValidationError::new("t2", format!("must be finite and > 0, got {t2}")));
            }
        }
        Ok(Self { alpha, f_inf, t2 })
    }

    pub fn classic(alpha: T, f_inf: T) -> Result<Self, ValidationError> {
        Self::new(alpha, f_inf, None)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn f_inf(&self) -> T {
        self.f_inf
    }

    pub fn t2(&self) -> Option<T> {
        self.t2
    }

    pub fn kernel_params(&self) -> KernelParams<T> {
        KernelParams::new(self.alpha, self.f_inf).expect("validated at construction")
    }
}

/// Dated cash flows of one instrument, per unit notional.
#[derive(Debug, Clone, PartialEq)]
pub struct CashflowSchedule<T> {
    flows: Vec<(T, T)>,
}

impl<T: Scalar> CashflowSchedule<T> {
    /// Requires a nonempty list of `(time, amount)` with strictly increasing
    /// positive times and finite amounts.
    pub fn new(flows: Vec<(T, T)>) -> Result<Self, ValidationError> {
        if flows.is_empty() {
            return Err(ValidationError::new("cashflows", "schedule is empty"));
        }
        for (i, &(t, a)) in flows.iter().enumerate() {
            if !(t > T::zero() && t.is_finite()) {
                return Err(ValidationError::new(
                    "cashflows",
                    format!("time {t} at position {i} is not a positive finite term"),
                ));
            }
            if !a.is_finite() {
                return Err(ValidationError::new(
                    "cashflows",
                    format!("amount at position {i} is not finite"),
                ));
            }
        }
        if let Some(i) = flows.windows(2).position(|w| !(w[0].0 < w[1].0)) {
            return Err(ValidationError::new(
                "cashflows",
                format!("times at positions {} and {} are not strictly increasing", i, i + 1),
            ));
        }
        Ok(Self { flows })
    }

    /// A single unit payment at `t`.
    pub fn zero_coupon(t: T) -> Result<Self, ValidationError> {
        Self::new(vec![(t, T::one())])
    }

    pub fn flows(&self) -> &[(T, T)] {
        &self.flows
    }

    pub fn last_time(&self) -> T {
        self.flows.last().expect("nonempty").0
    }

    /// `Σ amount · P(time)` for a discount function `P`.
    pub fn present_value(&self, discount: impl Fn(T) -> T) -> T {
        self.flows.iter().map(|&(t, a)| a * discount(t)).sum()
    }
}

/// How an instrument's price enters a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMode<T> {
    /// Repriced exactly (infinite weight).
    Exact,
    /// Penalized with weight `w`; `w = 0` means the instrument is ignored.
    Weighted(T),
}

/// A calibration instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct Instrument<T> {
    id: String,
    cashflows: CashflowSchedule<T>,
    price: T,
    mode: FitMode<T>,
}

impl<T: Scalar> Instrument<T> {
    pub fn new(
        id: impl Into<String>,
        cashflows: CashflowSchedule<T>,
        price: T,
        mode: FitMode<T>,
    ) -> Result<Self, ValidationError> {
        let id = id.into();
        if !(price > T::zero() && price.is_finite()) {
            return Err(ValidationError::new(
                format!("price of {id}"),
                format!("must be finite and > 0, got {price}"),
            ));
        }
        if let FitMode::Weighted(w) = mode {
            if !(w >= T::zero() && w.is_finite()) {
                return Err(ValidationError::new(
                    format!("weight of {id}"),
                    format!("must be finite and >= 0, got {w}; use exact mode for infinite weight"),
                ));
            }
        }
        Ok(Self {
            id,
            cashflows,
            price,
            mode,
        })
    }

    /// Exact zero-coupon bond paying 1 at `t`.
    pub fn zcb(id: impl Into<String>, t: T, price: T) -> Result<Self, ValidationError> {
        Self::new(id, CashflowSchedule::zero_coupon(t)?, price, FitMode::Exact)
    }

    pub fn with_mode(mut self, mode: FitMode<T>) -> Result<Self, ValidationError> {
        let id = std::mem::take(&mut self.id);
        Self::new(id, self.cashflows, self.price, mode)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn cashflows(&self) -> &CashflowSchedule<T> {
        &self.cashflows
    }

    pub fn price(&self) -> T {
        self.price
    }

    pub fn mode(&self) -> FitMode<T> {
        self.mode
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.mode, FitMode::Exact)
    }

    /// Present value of the cash flows on `curve`.
    pub fn model_price(&self, curve: &FittedCurve<T>) -> T {
        self.cashflows.present_value(|t| curve.price(t))
    }
}

/// Sorted distinct cash-flow times of `instruments`, merging times that lie
/// within [`GRID_MERGE_TOL`] of the previous grid point.
pub fn build_grid<T: Scalar>(instruments: &[Instrument<T>]) -> Vec<T> {
    let mut times: Vec<T> = instruments
        .iter()
        .flat_map(|i| i.cashflows.flows.iter().map(|&(t, _)| t))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("validated finite times"));
    let tol = T::lit(GRID_MERGE_TOL);
    let mut grid: Vec<T> = Vec::with_capacity(times.len());
    for t in times {
        match grid.last() {
            Some(&last) if t - last <= tol => {}
            _ => grid.push(t),
        }
    }
    grid
}

/// Position of `t` on `grid` up to [`GRID_MERGE_TOL`].
pub fn grid_position<T: Scalar>(grid: &[T], t: T) -> Option<usize> {
    let tol = T::lit(GRID_MERGE_TOL);
    let i = grid.partition_point(|&g| g < t - tol);
    (i < grid.len() && (grid[i] - t).abs() <= tol).then_some(i)
}

/// Which kernel a curve is expanded in.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelKind<T> {
    /// Wilson's kernel on `(0, ∞)`.
    Classic,
    /// Finite-convergence kernel on `(0, T2)`, one coefficient set per grid
    /// time, extended with a flat forward `f∞` beyond `T2`.
    FiniteConvergence { t2: T, coeffs: Vec<KernelCoeffs<T>> },
}

/// `P(t) = e^{−f∞ t} + Σ_k ζ_k K(t, t_k)` for the curve's kernel `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCurve<T> {
    kind: KernelKind<T>,
    grid: Vec<T>,
    zeta: Vec<T>,
    config: CurveConfig<T>,
}

impl<T: Scalar> FittedCurve<T> {
    /// Classic curve. The grid may be empty, giving the flat UFR curve.
    pub fn classic(grid: Vec<T>, zeta: Vec<T>, config: CurveConfig<T>) -> Result<Self, ValidationError> {
        check_expansion(&grid, &zeta)?;
        Ok(Self {
            kind: KernelKind::Classic,
            grid,
            zeta,
            config,
        })
    }

    /// Finite-convergence curve; `config.t2()` must be set and exceed every
    /// grid time by at least [`MIN_T2_GAP`].
    pub fn finite(grid: Vec<T>, zeta: Vec<T>, config: CurveConfig<T>) -> Result<Self, ValidationError> {
        check_expansion(&grid, &zeta)?;
        let t2 = config
            .t2()
            .ok_or_else(|| ValidationError::new("t2", "finite-convergence curve needs a convergence term"))?;
        if let Some(&last) = grid.last() {
            if !(last + T::lit(MIN_T2_GAP) <= t2) {
                return Err(ValidationError::new(
                    "t2",
                    format!("convergence term {t2} must exceed the last cash flow {last}"),
                ));
            }
        }
        let coeffs = grid
            .iter()
            .map(|&u| KernelCoeffs::closed_form(u, t2, config.alpha()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            kind: KernelKind::FiniteConvergence { t2, coeffs },
            grid,
            zeta,
            config,
        })
    }

    /// Same kernel and grid with different coefficients.
    pub fn with_zeta(&self, zeta: Vec<T>) -> Result<Self, ValidationError> {
        check_expansion(&self.grid, &zeta)?;
        Ok(Self {
            zeta,
            ..self.clone()
        })
    }

    pub fn kind(&self) -> &KernelKind<T> {
        &self.kind
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn zeta(&self) -> &[T] {
        &self.zeta
    }

    pub fn config(&self) -> &CurveConfig<T> {
        &self.config
    }

    pub fn is_classic(&self) -> bool {
        matches!(self.kind, KernelKind::Classic)
    }

    /// Discount factor at `t ≥ 0`.
    pub fn price(&self, t: T) -> T {
        let f = self.config.f_inf();
        match &self.kind {
            KernelKind::Classic => {
                let p = self.config.kernel_params();
                (-f * t).exp()
                    + self
                        .grid
                        .iter()
                        .zip(&self.zeta)
                        .map(|(&tk, &z)| z * wilson_w(t, tk, &p))
                        .sum::<T>()
            }
            KernelKind::FiniteConvergence { t2, coeffs } => {
                if t > *t2 {
                    return (-f * (t - *t2)).exp() * self.price(*t2);
                }
                let a = self.config.alpha();
                (-f * t).exp()
                    + coeffs
                        .iter()
                        .zip(&self.grid)
                        .zip(&self.zeta)
                        .map(|((c, &u), &z)| z * c.value(t, u, a, f))
                        .sum::<T>()
            }
        }
    }

    /// Analytic `∂_t P(t)`. At `T2` the interior formula is used; the
    /// boundary conditions make it agree with the flat extension.
    pub fn price_dt(&self, t: T) -> T {
        let f = self.config.f_inf();
        match &self.kind {
            KernelKind::Classic => {
                let p = self.config.kernel_params();
                -f * (-f * t).exp()
                    + self
                        .grid
                        .iter()
                        .zip(&self.zeta)
                        .map(|(&tk, &z)| z * wilson_w_dt(t, tk, &p))
                        .sum::<T>()
            }
            KernelKind::FiniteConvergence { t2, coeffs } => {
                if t > *t2 {
                    return -f * self.price(t);
                }
                let a = self.config.alpha();
                -f * (-f * t).exp()
                    + coeffs
                        .iter()
                        .zip(&self.grid)
                        .zip(&self.zeta)
                        .map(|((c, &u), &z)| z * c.derivative(t, u, a, f))
                        .sum::<T>()
            }
        }
    }

    fn positive_price(&self, t: T) -> Result<T, CurveError> {
        let p = self.price(t);
        if p > T::zero() {
            Ok(p)
        } else {
            Err(CurveError::NonPositivePrice {
                term: t.to_f64().unwrap_or(f64::NAN),
                price: p.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// `−ln P(t) / t` for `t > 0`.
    pub fn spot_continuous(&self, t: T) -> Result<T, CurveError> {
        if !(t > T::zero()) {
            return Err(CurveError::Domain {
                term: t.to_f64().unwrap_or(f64::NAN),
                reason: "spot rates need a positive term",
            });
        }
        Ok(-self.positive_price(t)?.ln() / t)
    }

    /// `P(t)^{−1/t} − 1` for `t > 0`.
    pub fn spot_annual(&self, t: T) -> Result<T, CurveError> {
        Ok(self.spot_continuous(t)?.exp_m1())
    }

    /// Instantaneous forward `−∂_t P / P`. Defined at `t = 0` as the
    /// one-sided limit.
    pub fn forward_instantaneous(&self, t: T) -> Result<T, CurveError> {
        if !(t >= T::zero()) {
            return Err(CurveError::Domain {
                term: t.to_f64().unwrap_or(f64::NAN),
                reason: "negative term",
            });
        }
        let p = self.positive_price(t)?;
        Ok(-self.price_dt(t) / p)
    }
}

fn check_expansion<T: Scalar>(grid: &[T], zeta: &[T]) -> Result<(), ValidationError> {
    if grid.len() != zeta.len() {
        return Err(ValidationError::new(
            "zeta",
            format!("length {} does not match grid length {}", zeta.len(), grid.len()),
        ));
    }
    if !grid.is_empty() {
        crate::kernel::validate_grid(grid)?;
    }
    if zeta.iter().any(|z| !z.is_finite()) {
        return Err(ValidationError::new("zeta", "non-finite coefficient"));
    }
    Ok(())
}
