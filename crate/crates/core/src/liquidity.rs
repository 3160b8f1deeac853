//! Liquidity ratios and the weights they map to.

use crate::curve::FitMode;
use crate::error::ValidationError;
use crate::Scalar;

/// Ratios this close to 1 are treated as fully liquid.
pub const EXACT_PROMOTION_TOL: f64 = 1e-12;

/// A liquidity observation: measure `L` against threshold `T_L`, with the
/// weight scale `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquidityRecord<T> {
    pub measure: T,
    pub threshold: T,
    pub scale: T,
}

impl<T: Scalar> LiquidityRecord<T> {
    pub fn new(measure: T, threshold: T, scale: T) -> Result<Self, ValidationError> {
        if !(measure >= T::zero() && measure.is_finite()) {
            return Err(ValidationError::new("liquidity measure", format!("must be finite and >= 0, got {measure}")));
        }
        check_positive("liquidity threshold", threshold)?;
        check_positive("weight scale C", scale)?;
        Ok(Self {
            measure,
            threshold,
            scale,
        })
    }

    pub fn ratio(&self) -> T {
        liquidity_ratio(self.measure, self.threshold).expect("validated at construction")
    }

    pub fn mode(&self) -> LiquidityMode<T> {
        weight_from_ratio(self.ratio(), self.scale).expect("ratio lies in [0, 1]")
    }
}

fn check_positive<T: Scalar>(field: &str, v: T) -> Result<(), ValidationError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ValidationError::new(field, format!("must be finite and > 0, got {v}")))
    }
}

/// What an instrument becomes after liquidity mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiquidityMode<T> {
    Exact,
    Weighted(T),
    /// Zero liquidity: the instrument does not enter the fit.
    Excluded,
}

impl<T: Scalar> LiquidityMode<T> {
    /// The fit mode, or `None` when excluded.
    pub fn fit_mode(self) -> Option<FitMode<T>> {
        match self {
            LiquidityMode::Exact => Some(FitMode::Exact),
            LiquidityMode::Weighted(w) => Some(FitMode::Weighted(w)),
            LiquidityMode::Excluded => None,
        }
    }
}

/// `R = min(1, L / T_L)`.
pub fn liquidity_ratio<T: Scalar>(measure: T, threshold: T) -> Result<T, ValidationError> {
    check_positive("liquidity threshold", threshold)?;
    if !(measure >= T::zero() && measure.is_finite()) {
        return Err(ValidationError::new("liquidity measure", format!("must be finite and >= 0, got {measure}")));
    }
    Ok((measure / threshold).min(T::one()))
}

/// `R = 1` → exact, `R = 0` → excluded, otherwise weight `−C ln(1 − R)`.
pub fn weight_from_ratio<T: Scalar>(ratio: T, scale: T) -> Result<LiquidityMode<T>, ValidationError> {
    check_positive("weight scale C", scale)?;
    if !(ratio >= T::zero() && ratio <= T::one()) {
        return Err(ValidationError::new("liquidity ratio", format!("must lie in [0, 1], got {ratio}")));
    }
    if ratio == T::zero() {
        return Ok(LiquidityMode::Excluded);
    }
    if T::one() - ratio <= T::lit(EXACT_PROMOTION_TOL) {
        return Ok(LiquidityMode::Exact);
    }
    Ok(LiquidityMode::Weighted(-scale * (-ratio).ln_1p()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ratio_examples() {
        assert_eq!(liquidity_ratio(0.0, 4.0).unwrap(), 0.0);
        assert_eq!(liquidity_ratio(4.0, 4.0).unwrap(), 1.0);
        assert_eq!(liquidity_ratio(2.0, 4.0).unwrap(), 0.5);
        assert_eq!(liquidity_ratio(9.0, 4.0).unwrap(), 1.0);
        assert!(liquidity_ratio(1.0, 0.0).is_err());
        assert!(liquidity_ratio(-1.0, 1.0).is_err());
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight_from_ratio(1.0, 1.0).unwrap(), LiquidityMode::Exact);
        assert_eq!(weight_from_ratio(0.0, 1.0).unwrap(), LiquidityMode::Excluded);
        match weight_from_ratio(0.5, 1.0).unwrap() {
            LiquidityMode::Weighted(w) => assert!((w - std::f64::consts::LN_2).abs() < 1e-16),
            other => panic!("{other:?}"),
        }
        assert_eq!(weight_from_ratio(1.0 - 1e-13, 1.0).unwrap(), LiquidityMode::Exact);
        assert!(weight_from_ratio(1.5, 1.0).is_err());
        assert!(weight_from_ratio(-0.1, 1.0).is_err());
        assert!(weight_from_ratio(0.5, 0.0).is_err());
    }

    #[test]
    fn record_roundtrip() {
        let r = LiquidityRecord::new(1.0, 2.0, 10.0).unwrap();
        assert_eq!(r.ratio(), 0.5);
        assert_eq!(r.mode().fit_mode(), Some(FitMode::Weighted(10.0 * std::f64::consts::LN_2)));
        assert!(LiquidityRecord::new(1.0, 2.0, -1.0).is_err());
        assert_eq!(LiquidityRecord::new(0.0, 2.0, 1.0).unwrap().mode().fit_mode(), None);
    }

    fn weight(r: f64, c: f64) -> f64 {
        match weight_from_ratio(r, c).unwrap() {
            LiquidityMode::Weighted(w) => w,
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn weight_strictly_increasing(r1 in 1e-6f64..0.999, dr in 1e-6f64..0.5, c in 1e-3f64..1e3) {
            let r2 = (r1 + dr).min(1.0 - 1e-9);
            prop_assume!(r2 > r1);
            prop_assert!(weight(r2, c) > weight(r1, c));
        }

        #[test]
        fn scale_is_linear(r in 0.0f64..=1.0, c in 1e-3f64..1e3, k in 1e-2f64..1e2) {
            match (weight_from_ratio(r, c).unwrap(), weight_from_ratio(r, c * k).unwrap()) {
                (LiquidityMode::Weighted(a), LiquidityMode::Weighted(b)) => {
                    prop_assert!((a * k - b).abs() <= 1e-12 * b.abs());
                }
                (a, b) => prop_assert_eq!(std::mem::discriminant(&a), std::mem::discriminant(&b)),
            }
        }
    }

    #[test]
    fn diverges_near_one() {
        assert!(weight(1.0 - 1e-10, 1.0) > 20.0);
    }
}
