//! The Wilson kernel and the Smith-Wilson energy coefficients.
//!
//! With `g(t) = e^{f∞ t} W(t, τ)` the kernel solves
//! `α⁻³ g'''' − α⁻¹ g'' = δ_τ` on `(0, ∞)`, so between cash-flow times every
//! curve is a combination of `e^{αt}`, `e^{−αt}`, `t` and `1` (after undoing
//! the `e^{f∞ t}` factor). The energy
//!
//! ```text
//! E(P) = 1/(2α³) ∫ |∂²(e^{f∞t} P)|² dt + 1/(2α) ∫ |∂(e^{f∞t} P)|² dt
//! ```
//!
//! of `P = e^{−f∞ t} + Σ ζ_k W(·, τ_k)` is `½ ζᵀ EW ζ`.

use crate::error::{NumericsError, ValidationError};
use crate::numerics::{integrate, DenseMatrix, QuadratureSpec};
use crate::Scalar;

/// Term-scale `α` and continuously compounded UFR `f∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    alpha: T,
    f_inf: T,
}

impl<T: Scalar> KernelParams<T> {
    pub fn new(alpha: T, f_inf: T) -> Result<Self, ValidationError> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(ValidationError::new("alpha", format!("must be finite and > 0, got {alpha}")));
        }
        if !f_inf.is_finite() {
            return Err(ValidationError::new("f_inf", "must be finite"));
        }
        Ok(Self { alpha, f_inf })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn f_inf(&self) -> T {
        self.f_inf
    }
}

// Above this argument the plain sinh/cosh path risks overflow.
const LARGE_ARG: f64 = 300.0;

/// `e^{−y} sinh(x)` for `0 ≤ x ≤ y`.
#[inline]
fn damped_sinh<T: Scalar>(x: T, y: T) -> T {
    if y > T::lit(LARGE_ARG) {
        ((x - y).exp() - (-(x + y)).exp()) / T::lit(2.0)
    } else {
        (-y).exp() * x.sinh()
    }
}

/// `e^{−y} cosh(x)` for `0 ≤ x ≤ y`.
#[inline]
fn damped_cosh<T: Scalar>(x: T, y: T) -> T {
    if y > T::lit(LARGE_ARG) {
        ((x - y).exp() + (-(x + y)).exp()) / T::lit(2.0)
    } else {
        (-y).exp() * x.cosh()
    }
}

/// Wilson's function
/// `W(t, τ) = e^{−(t+τ) f∞} (α min(t,τ) − e^{−α max(t,τ)} sinh(α min(t,τ)))`.
pub fn wilson_w<T: Scalar>(t: T, tau: T, p: &KernelParams<T>) -> T {
    let (lo, hi) = if t < tau { (t, tau) } else { (tau, t) };
    let a = p.alpha;
    (-(t + tau) * p.f_inf).exp() * (a * lo - damped_sinh(a * lo, a * hi))
}

/// `∂_t (e^{f∞ t} W(t, τ))`. At `t = τ` the left branch is used; both agree.
pub fn wilson_g1<T: Scalar>(t: T, tau: T, p: &KernelParams<T>) -> T {
    let a = p.alpha;
    let scale = a * (-tau * p.f_inf).exp();
    if t <= tau {
        scale * (T::one() - damped_cosh(a * t, a * tau))
    } else {
        scale * damped_sinh(a * tau, a * t)
    }
}

/// `∂²_t (e^{f∞ t} W(t, τ)) = −α² e^{−τ f∞} e^{−α max} sinh(α min)`.
pub fn wilson_g2<T: Scalar>(t: T, tau: T, p: &KernelParams<T>) -> T {
    let (lo, hi) = if t < tau { (t, tau) } else { (tau, t) };
    let a = p.alpha;
    -a * a * (-tau * p.f_inf).exp() * damped_sinh(a * lo, a * hi)
}

/// `∂_t W(t, τ)`, from `W = e^{−f∞ t} g` so `W' = e^{−f∞ t} g' − f∞ W`.
pub fn wilson_w_dt<T: Scalar>(t: T, tau: T, p: &KernelParams<T>) -> T {
    (-p.f_inf * t).exp() * wilson_g1(t, tau, p) - p.f_inf * wilson_w(t, tau, p)
}

/// Closed-form energy coefficient `EW_kl = 2 ⟨W(·,τ_k), W(·,τ_l)⟩`.
///
/// Composed as `α⁻³ I₂ + α⁻¹ I₁` where `I₂` and `I₁` are the integrals of the
/// products of second and first derivatives of `e^{f∞t} W`, each evaluated on
/// `(0, τ_k) ∪ (τ_k, τ_l) ∪ (τ_l, ∞)` with `τ_k ≤ τ_l`.
pub fn energy_coeff<T: Scalar>(tau_k: T, tau_l: T, p: &KernelParams<T>) -> T {
    let (k, l) = if tau_k <= tau_l { (tau_k, tau_l) } else { (tau_l, tau_k) };
    let a = p.alpha;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let e = |x: T| x.exp();
    let prefactor = e(-(k + l) * p.f_inf);
    let sk = (a * k).sinh();
    let sl = (a * l).sinh();
    let s2k = (two * a * k).sinh();

    let second = a * a * a / four
        * prefactor
        * (e(-a * (k + l)) * (s2k - two * k * a)
            + e(-a * l) * two * sk * a * (l - k)
            + sk * e(-a * l) * (e(-two * a * l) - e(-two * a * k))
            + four * sk * sl * half * e(-two * a * l));

    let first = a * a
        * prefactor
        * ((k - (e(-a * k) + e(-a * l)) / a * sk + e(-a * (k + l)) * (half * k + s2k / (four * a)))
            + sk * (-(e(-a * l) - e(-a * k)) / a - half * e(-a * l) * (l - k)
                + (e(-T::lit(3.0) * a * l) - e(-a * (two * k + l))) / (four * a))
            + sk * sl / (two * a) * e(-two * a * l));

    second / (a * a * a) + first / a
}

/// `EW_kl` by adaptive quadrature of the defining integrals, split at both
/// cash-flow times. Independent of the closed form in [`energy_coeff`].
pub fn energy_coeff_quadrature<T: Scalar>(
    tau_k: T,
    tau_l: T,
    p: &KernelParams<T>,
) -> Result<T, NumericsError> {
    let knots = [tau_k.min(tau_l), tau_k.max(tau_l)];
    let spec = QuadratureSpec::for_decay(p.alpha, &knots);
    let second = integrate(
        |t| wilson_g2(t, tau_k, p) * wilson_g2(t, tau_l, p),
        &knots,
        &spec,
    )?;
    let first = integrate(
        |t| wilson_g1(t, tau_k, p) * wilson_g1(t, tau_l, p),
        &knots,
        &spec,
    )?;
    let a = p.alpha;
    Ok(second.value / (a * a * a) + first.value / a)
}

/// Symmetric matrix of energy coefficients over a cash-flow grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMatrix<T> {
    times: Vec<T>,
    entries: DenseMatrix<T>,
}

impl<T: Scalar> EnergyMatrix<T> {
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn entries(&self) -> &DenseMatrix<T> {
        &self.entries
    }

    /// `ζᵀ EW ζ`.
    pub fn quadratic_form(&self, zeta: &[T]) -> T {
        let ew_zeta = self.entries.mul_vec(zeta).expect("zeta length matches grid");
        crate::numerics::dot(zeta, &ew_zeta)
    }
}

/// Builds `EW` over strictly increasing positive times.
pub fn energy_matrix<T: Scalar>(
    times: &[T],
    p: &KernelParams<T>,
) -> Result<EnergyMatrix<T>, ValidationError> {
    validate_grid(times)?;
    let n = times.len();
    let mut entries = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = energy_coeff(times[i], times[j], p);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(EnergyMatrix {
        times: times.to_vec(),
        entries,
    })
}

pub(crate) fn validate_grid<T: Scalar>(times: &[T]) -> Result<(), ValidationError> {
    if times.is_empty() {
        return Err(ValidationError::new("times", "empty grid"));
    }
    if let Some(i) = times.iter().position(|&t| !(t > T::zero() && t.is_finite())) {
        return Err(ValidationError::new("times", format!("entry {i} is not a positive finite term")));
    }
    if let Some(i) = times.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(ValidationError::new(
            "times",
            format!("entries {} and {} are not strictly increasing", i, i + 1),
        ));
    }
    Ok(())
}
