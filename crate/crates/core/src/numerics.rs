//! Small dense linear algebra and adaptive quadrature.
//!
//! Everything here is sized for the problems this crate produces: systems of
//! at most a few hundred unknowns and one-dimensional integrals over
//! `(0, ∞)` whose integrands are smooth between known knots.

use std::ops::{Index, IndexMut};

use crate::error::NumericsError;
use crate::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Wraps row-major entries. Fails on a size mismatch or a non-finite entry.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>, NumericsError> {
        if x.len() != self.cols {
            return Err(NumericsError::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Aᵀ x`.
    pub fn tr_mul_vec(&self, x: &[T]) -> Result<Vec<T>, NumericsError> {
        if x.len() != self.rows {
            return Err(NumericsError::DimensionMismatch {
                expected: self.rows,
                found: x.len(),
            });
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    /// `A B`.
    pub fn matmul(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Max-abs entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Induced infinity norm (max row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// LU factorization with partial (row) pivoting, `P A = L U`.
///
/// `L` has a unit diagonal and is stored below the diagonal of `lu`.
#[derive(Debug, Clone)]
pub struct LuFactorization<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    norm_one: T,
}

impl<T: Scalar> LuFactorization<T> {
    /// Factorizes a square matrix.
    ///
    /// A pivot whose magnitude does not exceed `n · ε · max|A|` is reported as
    /// [`NumericsError::Singular`] carrying that pivot.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self, NumericsError> {
        if !a.is_square() {
            return Err(NumericsError::NotSquare {
                rows: a.rows,
                cols: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = T::from_count(n.max(1)) * T::epsilon() * a.max_abs();

        for k in 0..n {
            // First row with the largest magnitude wins; keeps ties deterministic.
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= threshold || best == T::zero() {
                return Err(NumericsError::Singular {
                    step: k,
                    pivot: best.to_f64().unwrap_or(0.0),
                });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            norm_one: a.norm_one(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves `A x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, NumericsError> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `Aᵀ x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_transpose(&self, b: &[T]) -> Result<Vec<T>, NumericsError> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }

    /// 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`, computed from the explicit
    /// inverse columns. Cubic cost; fine at the sizes used here.
    pub fn condition_one(&self) -> T {
        let n = self.dim();
        let mut inv_norm = T::zero();
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e).expect("dimension checked");
            inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
        }
        self.norm_one * inv_norm
    }
}

/// Solves `A x = b` for square `A` by LU with partial pivoting.
///
/// The factorization is backward stable in practice: the residual satisfies
/// `‖A x − b‖∞ ≲ n · ε · ‖A‖∞ · ‖x‖∞`, which for the well-conditioned systems
/// built in this crate means `‖A x − b‖∞ ≤ 1e-10 · ‖b‖∞`.
pub fn solve_dense<T: Scalar>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, NumericsError> {
    if a.is_square() && b.len() != a.rows {
        return Err(NumericsError::DimensionMismatch {
            expected: a.rows,
            found: b.len(),
        });
    }
    LuFactorization::new(a)?.solve(b)
}

/// Indices of rows of `m` that are (numerically) linear combinations of
/// earlier rows, found by modified Gram-Schmidt with a relative tolerance.
pub fn dependent_rows<T: Scalar>(m: &DenseMatrix<T>, rel_tol: T) -> Vec<usize> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut dependent = Vec::new();
    for i in 0..m.rows() {
        let row = m.row(i);
        let norm0 = dot(row, row).sqrt();
        let mut v = row.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(x, &qj)| *x -= c * qj);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm0 == T::zero() || norm <= rel_tol * norm0 {
            dependent.push(i);
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    dependent
}

/// Tolerances and truncation for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Upper limit replacing `∞`.
    pub tail_cutoff: T,
    /// Maximum number of panels before giving up.
    pub max_panels: usize,
}

impl<T: Scalar> QuadratureSpec<T> {
    /// Defaults for integrands decaying like `e^{-2αt}` past the last knot:
    /// cutoff at `max knot + 40/α`, tolerances `1e-12` absolute and `1e-10`
    /// relative.
    pub fn for_decay(alpha: T, knots: &[T]) -> Self {
        let last = knots.iter().copied().fold(T::zero(), T::max);
        Self {
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-10),
            tail_cutoff: last + T::lit(40.0) / alpha,
            max_panels: 4000,
        }
    }

    fn validate(&self, knots: &[T]) -> Result<(), NumericsError> {
        if !(self.abs_tol > T::zero() && self.rel_tol > T::zero()) {
            return Err(NumericsError::InvalidSpec("tolerances must be positive".into()));
        }
        if self.max_panels == 0 {
            return Err(NumericsError::InvalidSpec("panel budget must be positive".into()));
        }
        if knots.iter().any(|&k| !(k < self.tail_cutoff)) {
            return Err(NumericsError::InvalidSpec(
                "tail cutoff must exceed every knot".into(),
            ));
        }
        Ok(())
    }
}

/// Value and error estimate from [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
}

/// Integrates `f` over `(0, spec.tail_cutoff)`, splitting exactly at `knots`.
pub fn integrate<T: Scalar>(
    f: impl Fn(T) -> T,
    knots: &[T],
    spec: &QuadratureSpec<T>,
) -> Result<Quadrature<T>, NumericsError> {
    integrate_between(f, T::zero(), spec.tail_cutoff, knots, spec)
}

/// Integrates `f` over `(lo, hi)`, splitting at every knot strictly inside.
pub fn integrate_between<T: Scalar>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    knots: &[T],
    spec: &QuadratureSpec<T>,
) -> Result<Quadrature<T>, NumericsError> {
    spec.validate(knots)?;
    if !(lo < hi) {
        return Ok(Quadrature {
            value: T::zero(),
            error: T::zero(),
            panels: 0,
        });
    }
    let mut breaks = vec![lo];
    let mut inner: Vec<T> = knots.iter().copied().filter(|&k| k > lo && k < hi).collect();
    inner.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    inner.dedup();
    breaks.extend(inner);
    breaks.push(hi);

    let mut panels: Vec<Panel<T>> = breaks
        .windows(2)
        .map(|w| Panel::new(&f, w[0], w[1]))
        .collect();

    loop {
        let value: T = panels.iter().map(|p| p.value).sum();
        let error: T = panels.iter().map(|p| p.error).sum();
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                panels: panels.len(),
            });
        }
        if panels.len() >= spec.max_panels {
            return Err(NumericsError::NoConvergence {
                estimate: value.to_f64().unwrap_or(f64::NAN),
                error_bound: error.to_f64().unwrap_or(f64::NAN),
                panels: panels.len(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, be), (i, p)| {
                if p.error > be {
                    (i, p.error)
                } else {
                    (bi, be)
                }
            });
        let p = panels.swap_remove(worst);
        let mid = (p.lo + p.hi) / T::lit(2.0);
        if !(mid > p.lo && mid < p.hi) {
            // Cannot split further in this precision.
            return Err(NumericsError::NoConvergence {
                estimate: value.to_f64().unwrap_or(f64::NAN),
                error_bound: error.to_f64().unwrap_or(f64::NAN),
                panels: panels.len() + 1,
            });
        }
        panels.push(Panel::new(&f, p.lo, mid));
        panels.push(Panel::new(&f, mid, p.hi));
        // Restore a canonical order so summation order, and hence the bits of
        // the result, never depend on the refinement history's swap pattern.
        panels.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite panel bounds"));
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss 7-point weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

impl<T: Scalar> Panel<T> {
    fn new(f: &impl Fn(T) -> T, lo: T, hi: T) -> Self {
        let half = (hi - lo) / T::lit(2.0);
        let center = (hi + lo) / T::lit(2.0);
        let fc = f(center);
        let mut kronrod = fc * T::lit(WGK[7]);
        let mut gauss = fc * T::lit(WG[3]);
        for i in 0..7 {
            let dx = half * T::lit(XGK[i]);
            let pair = f(center - dx) + f(center + dx);
            kronrod += pair * T::lit(WGK[i]);
            if i % 2 == 1 {
                gauss += pair * T::lit(WG[i / 2]);
            }
        }
        Self {
            lo,
            hi,
            value: kronrod * half,
            error: ((kronrod - gauss) * half).abs(),
        }
    }
}
