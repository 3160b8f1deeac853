//! Finite-convergence kernel: the forward rate reaches `f∞` exactly, with
//! zero slope, at the convergence term `T2`.
//!
//! For a singular point `u ∈ (0, T2)` the kernel is
//!
//! ```text
//! W̃(t, u) = e^{−f∞ t} (a₀ e^{−αt} + b₀ e^{αt} + c₀ t + d₀)   for t ∈ (0, u)
//! W̃(t, u) = e^{−f∞ t} (a₁ e^{−αt} + b₁ e^{αt} + c₁ t + d₁)   for t ∈ (u, T2)
//! ```
//!
//! with eight coefficients fixed by `W̃(0,u) = 0` and the natural condition
//! `g''(0) = 0` at the left end (`g = e^{f∞ t} W̃`), `g'(T2) = g''(T2) = 0` at
//! the right end, and at `t = u` continuity of `g, g', g''` plus a jump `λ` in
//! `−a e^{−αu} + b e^{αu}` (i.e. `α⁻³ g'''`). The kernel is not symmetric in
//! `(t, u)`.

use crate::curve::{build_grid, grid_position, CurveConfig, FittedCurve, Instrument, MIN_T2_GAP};
use crate::error::{FitError, NumericsError, ValidationError};
use crate::numerics::{dependent_rows, solve_dense, DenseMatrix};
use crate::Scalar;

/// Piecewise coefficients of `W̃(·, u)`: `(a₀, b₀, c₀, d₀)` on `(0, u)` and
/// `(a₁, b₁, c₁, d₁)` on `(u, T2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCoeffs<T> {
    pub a0: T,
    pub b0: T,
    pub c0: T,
    pub d0: T,
    pub a1: T,
    pub b1: T,
    pub c1: T,
    pub d1: T,
}

/// Jump height of the closed-form normalization, `1 − e^{−2αT2}`.
pub fn closed_form_jump<T: Scalar>(t2: T, alpha: T) -> T {
    -(-T::lit(2.0) * alpha * t2).exp_m1()
}

fn check_domain<T: Scalar>(u: T, t2: T, alpha: T) -> Result<(), ValidationError> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(ValidationError::new("alpha", format!("must be finite and > 0, got {alpha}")));
    }
    if !(t2.is_finite() && u > T::zero() && u < t2) {
        return Err(ValidationError::new(
            "u",
            format!("singular point {u} must lie strictly inside (0, {t2})"),
        ));
    }
    Ok(())
}

impl<T: Scalar> KernelCoeffs<T> {
    /// Closed-form coefficients with jump `1 − e^{−2αT2}` (unit `λ` after
    /// factoring that term out).
    pub fn closed_form(u: T, t2: T, alpha: T) -> Result<Self, ValidationError> {
        check_domain(u, t2, alpha)?;
        let two = T::lit(2.0);
        let s = (alpha * u).sinh();
        let e_t2 = (-alpha * t2).exp();
        let e_2t2 = e_t2 * e_t2;
        let a0 = ((-alpha * u).exp() - e_2t2 * (alpha * u).exp()) / two;
        let coeffs = Self {
            a0,
            b0: -a0,
            c0: alpha * (T::one() - e_2t2 - two * e_t2 * s),
            d0: T::zero(),
            a1: -s,
            b1: e_2t2 * s,
            c1: -two * alpha * e_t2 * s,
            d1: closed_form_jump(t2, alpha) * alpha * u,
        };
        debug_assert!(
            Self::oracle_with_jump(u, t2, alpha, closed_form_jump(t2, alpha))
                .map(|o| coeffs.scaled_distance(&o, u, t2, alpha) <= T::lit(1e-8).max(T::epsilon() * T::lit(1e4)))
                .unwrap_or(true),
            "closed form disagrees with the linear-system oracle at u = {u}, T2 = {t2}, alpha = {alpha}"
        );
        Ok(coeffs)
    }

    /// Solves the eight defining linear conditions with unit jump.
    pub fn oracle(u: T, t2: T, alpha: T) -> Result<Self, FitError> {
        Self::oracle_with_jump(u, t2, alpha, T::one())
    }

    /// Solves the eight defining linear conditions with jump `jump`.
    ///
    /// The unknowns are solved for in a locally scaled basis (`b₀ e^{αu}`,
    /// `a₁ e^{−αu}`, `b₁ e^{αT2}`) so the matrix entries stay `O(1)` even
    /// when `αT2` is large; the result is mapped back afterwards.
    pub fn oracle_with_jump(u: T, t2: T, alpha: T, jump: T) -> Result<Self, FitError> {
        check_domain(u, t2, alpha)?;
        let (a, scale) = Self::system(u, t2, alpha);
        let mut rhs = vec![T::zero(); 8];
        rhs[7] = jump;
        let scaled = a.clone();
        // Column scaling: x = D x'.
        let scaled = DenseMatrix::from_fn(8, 8, |i, j| scaled[(i, j)] * scale[j]);
        let x = solve_dense(&scaled, &rhs)?;
        let v: Vec<T> = x.iter().zip(&scale).map(|(&xi, &s)| xi * s).collect();
        Ok(Self::from_slice(&v))
    }

    /// The 8×8 condition matrix in unknown order `(a₀,b₀,c₀,d₀,a₁,b₁,c₁,d₁)`
    /// and the column scales of the well-conditioned basis. The right-hand
    /// side is zero except for the jump in the last row.
    fn system(u: T, t2: T, alpha: T) -> (DenseMatrix<T>, [T; 8]) {
        let one = T::one();
        let zero = T::zero();
        let em = (-alpha * u).exp();
        let ep = (alpha * u).exp();
        let emt = (-alpha * t2).exp();
        let ept = (alpha * t2).exp();
        #[rustfmt::skip]
        let rows = vec![
            // W̃(0,u) = 0
            one, one, zero, one, zero, zero, zero, zero,
            // g''(0) = 0
            one, one, zero, zero, zero, zero, zero, zero,
            // g'(T2) = 0
            zero, zero, zero, zero, -alpha * emt, alpha * ept, one, zero,
            // g''(T2) = 0
            zero, zero, zero, zero, emt, ept, zero, zero,
            // value continuous at u
            -em, -ep, -u, -one, em, ep, u, one,
            // first derivative continuous at u
            alpha * em, -alpha * ep, -one, zero, -alpha * em, alpha * ep, one, zero,
            // second derivative continuous at u
            -em, -ep, zero, zero, em, ep, zero, zero,
            // third-derivative jump
            em, -ep, zero, zero, -em, ep, zero, zero,
        ];
        let m = DenseMatrix::from_fn(8, 8, |i, j| rows[8 * i + j]);
        let scale = [one, em, one, one, ep, emt, one, one];
        (m, scale)
    }

    fn from_slice(v: &[T]) -> Self {
        Self {
            a0: v[0],
            b0: v[1],
            c0: v[2],
            d0: v[3],
            a1: v[4],
            b1: v[5],
            c1: v[6],
            d1: v[7],
        }
    }

    pub fn to_array(&self) -> [T; 8] {
        [self.a0, self.b0, self.c0, self.d0, self.a1, self.b1, self.c1, self.d1]
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self::from_slice(&self.to_array().map(|c| c * factor))
    }

    /// Coefficients in the scaled basis `(a₀, b₀e^{αu}, c₀, d₀, a₁e^{−αu},
    /// b₁e^{αT2}, c₁, d₁)`, in which every entry is `O(1)`.
    pub fn scaled_basis(&self, u: T, t2: T, alpha: T) -> [T; 8] {
        let (_, scale) = Self::system(u, t2, alpha);
        let mut out = self.to_array();
        for (o, s) in out.iter_mut().zip(scale) {
            *o /= s;
        }
        out
    }

    /// Max-abs difference of two coefficient sets in the scaled basis,
    /// relative to the larger scaled magnitude.
    pub fn scaled_distance(&self, other: &Self, u: T, t2: T, alpha: T) -> T {
        let x = self.scaled_basis(u, t2, alpha);
        let y = other.scaled_basis(u, t2, alpha);
        let size = x.iter().chain(y.iter()).fold(T::zero(), |m, v| m.max(v.abs()));
        let diff = x
            .iter()
            .zip(&y)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        if size > T::zero() {
            diff / size
        } else {
            diff
        }
    }

    /// Residuals of the eight defining conditions for jump `jump`, each
    /// divided by the largest term magnitude appearing in that condition.
    pub fn condition_residuals(&self, u: T, t2: T, alpha: T, jump: T) -> [T; 8] {
        let (m, _) = Self::system(u, t2, alpha);
        let x = self.to_array();
        let mut out = [T::zero(); 8];
        for (i, o) in out.iter_mut().enumerate() {
            let target = if i == 7 { jump } else { T::zero() };
            let terms: Vec<T> = m.row(i).iter().zip(&x).map(|(&a, &c)| a * c).collect();
            let size = terms
                .iter()
                .fold(target.abs(), |s, v| s.max(v.abs()))
                .max(T::min_positive_value());
            *o = (terms.iter().copied().sum::<T>() - target).abs() / size;
        }
        out
    }

    /// `W̃(t, u)` for `0 ≤ t ≤ T2`.
    pub fn value(&self, t: T, u: T, alpha: T, f_inf: T) -> T {
        let (a, b, c, d) = self.piece(t, u);
        (-f_inf * t).exp() * (a * (-alpha * t).exp() + b * (alpha * t).exp() + c * t + d)
    }

    /// `∂_t W̃(t, u)` for `0 ≤ t ≤ T2`; the left piece is used at `t = u`.
    pub fn derivative(&self, t: T, u: T, alpha: T, f_inf: T) -> T {
        let (a, b, c, d) = self.piece(t, u);
        let em = (-alpha * t).exp();
        let ep = (alpha * t).exp();
        let g = a * em + b * ep + c * t + d;
        let dg = -alpha * a * em + alpha * b * ep + c;
        (-f_inf * t).exp() * (dg - f_inf * g)
    }

    fn piece(&self, t: T, u: T) -> (T, T, T, T) {
        if t <= u {
            (self.a0, self.b0, self.c0, self.d0)
        } else {
            (self.a1, self.b1, self.c1, self.d1)
        }
    }
}

/// Closed-form coefficients of `W̃(·, u)`.
pub fn wtilde_coeffs<T: Scalar>(u: T, t2: T, alpha: T) -> Result<KernelCoeffs<T>, ValidationError> {
    KernelCoeffs::closed_form(u, t2, alpha)
}

/// Coefficients of `W̃(·, u)` with unit jump from the 8×8 linear system.
pub fn wtilde_coeffs_oracle<T: Scalar>(u: T, t2: T, alpha: T) -> Result<KernelCoeffs<T>, FitError> {
    KernelCoeffs::oracle(u, t2, alpha)
}

/// `W̃(t, u)` under the closed-form normalization.
pub fn wtilde<T: Scalar>(t: T, u: T, config: &CurveConfig<T>) -> Result<T, ValidationError> {
    let t2 = config
        .t2()
        .ok_or_else(|| ValidationError::new("t2", "finite-convergence kernel needs a convergence term"))?;
    if !(t >= T::zero() && t <= t2) {
        return Err(ValidationError::new("t", format!("{t} outside [0, {t2}]")));
    }
    let c = KernelCoeffs::closed_form(u, t2, config.alpha())?;
    Ok(c.value(t, u, config.alpha(), config.f_inf()))
}

/// Exact fit with the finite-convergence kernel.
///
/// Instruments are expanded as in the generalized Smith-Wilson method:
/// `ζ = D Cᵀ η` where `C` holds the cash flows on the grid, `D =
/// diag(e^{−f∞ t_l})`, and `η` solves `(C K D Cᵀ) η = Pr − C e^{−f∞ t}` with
/// `K_kl = W̃(t_k, t_l)`. `D` only matters for coupon instruments: it makes
/// `K D` tend to the classic kernel as `T2 → ∞`. For zero-coupon inputs
/// this is `K ζ = P − e^{−f∞ t}`, whatever the kernel normalization.
pub fn fit_finite_convergence<T: Scalar>(
    instruments: &[Instrument<T>],
    config: &CurveConfig<T>,
) -> Result<FittedCurve<T>, FitError> {
    let t2 = config
        .t2()
        .ok_or_else(|| ValidationError::new("t2", "finite-convergence fit needs a convergence term"))?;
    if instruments.is_empty() {
        return Err(ValidationError::new("instruments", "no instruments to fit").into());
    }
    if let Some(i) = instruments.iter().find(|i| !i.is_exact()) {
        return Err(FitError::Unsupported(format!(
            "instrument {} is weighted; the finite-convergence fit only supports exact instruments",
            i.id()
        )));
    }
    for i in instruments {
        if !(i.cashflows().last_time() + T::lit(MIN_T2_GAP) <= t2) {
            return Err(ValidationError::new(
                format!("instrument {}", i.id()),
                format!("cash flow at {} is not before the convergence term {t2}", i.cashflows().last_time()),
            )
            .into());
        }
    }
    let sorted = crate::fit::canonical_order(instruments)?;

    let grid = build_grid(&sorted);
    let n = grid.len();
    let alpha = config.alpha();
    let f = config.f_inf();
    let coeffs = grid
        .iter()
        .map(|&u| KernelCoeffs::closed_form(u, t2, alpha))
        .collect::<Result<Vec<_>, _>>()?;
    let kernel = DenseMatrix::from_fn(n, n, |k, l| coeffs[l].value(grid[k], grid[l], alpha, f));

    let cash = crate::fit::cashflow_matrix(&sorted, &grid);
    let rhs: Vec<T> = sorted
        .iter()
        .map(|i| i.price() - i.cashflows().present_value(|t| (-f * t).exp()))
        .collect();
    let damp: Vec<T> = grid.iter().map(|&u| (-f * u).exp()).collect();
    let damped_ct = DenseMatrix::from_fn(n, sorted.len(), |l, i| damp[l] * cash[(i, l)]);
    let system = cash.matmul(&kernel)?.matmul(&damped_ct)?;
    let eta = match solve_dense(&system, &rhs) {
        Ok(eta) => eta,
        Err(e @ NumericsError::Singular { .. }) => {
            let dependent = dependent_rows(&cash, T::lit(1e-12));
            if dependent.is_empty() {
                return Err(e.into());
            }
            return Err(FitError::RedundantExact {
                ids: dependent.iter().map(|&r| sorted[r].id().to_string()).collect(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let zeta = damped_ct.mul_vec(&eta)?;
    debug_assert!(sorted
        .iter()
        .flat_map(|i| i.cashflows().flows())
        .all(|&(t, _)| grid_position(&grid, t).is_some()));
    Ok(FittedCurve::finite(grid, zeta, *config)?)
}
