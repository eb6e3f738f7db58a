//! Field abstraction shared by the exact-rational and complex-float paths.
//!
//! The convolution calculus is implemented once, generically; exact rational
//! coefficients are used where identities must hold bit-for-bit, complex
//! doubles everywhere eigenvalues enter.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Field:
    Clone
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    /// |x| as an f64, with a log-scale fallback for huge rationals.
    fn abs_f64(&self) -> f64;
    /// ln|x|; `-inf` for zero.
    fn ln_abs(&self) -> f64;
    /// Pivot quality for elimination (bigger is better).
    fn pivot_size(&self) -> f64 {
        self.ln_abs()
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn abs_f64(&self) -> f64 {
        self.norm()
    }
    fn ln_abs(&self) -> f64 {
        if Field::is_zero(self) {
            f64::NEG_INFINITY
        } else {
            self.norm().ln()
        }
    }
    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).norm() <= tol * (1.0 + self.norm().max(other.norm()))
    }
}

/// ln of a positive BigInt without overflowing f64.
fn ln_bigint(x: &BigInt) -> f64 {
    let mag = x.magnitude();
    if mag.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = mag.bits();
    if bits <= 1023 {
        mag.to_f64().unwrap().ln()
    } else {
        let shift = bits - 64;
        let top = (mag >> shift).to_f64().unwrap();
        top.ln() + (shift as f64) * std::f64::consts::LN_2
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn abs_f64(&self) -> f64 {
        match self.to_f64() {
            Some(v) if v.is_finite() => v.abs(),
            _ => self.ln_abs().exp(),
        }
    }
    fn ln_abs(&self) -> f64 {
        if Zero::is_zero(self) {
            f64::NEG_INFINITY
        } else {
            ln_bigint(&self.numer().abs()) - ln_bigint(&self.denom().abs())
        }
    }
    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

/// Solves `A x = b` by Gaussian elimination with best-pivot selection.
/// `a` is row-major, `n x n`.
pub fn solve_linear<F: Field>(a: &[Vec<F>], b: &[F]) -> Result<Vec<F>> {
    let n = b.len();
    let mut m: Vec<Vec<F>> = a
        .iter()
        .map(|row| {
            assert_eq!(row.len(), n);
            row.clone()
        })
        .collect();
    assert_eq!(m.len(), n);
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                m[i][col]
                    .pivot_size()
                    .partial_cmp(&m[j][col].pivot_size())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot][col].is_zero() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        let inv = F::one() / m[col][col].clone();
        for row in col + 1..n {
            if m[row][col].is_zero() {
                continue;
            }
            let factor = m[row][col].clone() * inv.clone();
            for k in col..n {
                let delta = factor.clone() * m[col][k].clone();
                m[row][k] = m[row][k].clone() - delta;
            }
            let delta = factor * rhs[col].clone();
            rhs[row] = rhs[row].clone() - delta;
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for k in row + 1..n {
            acc = acc - m[row][k].clone() * x[k].clone();
        }
        x[row] = acc / m[row][row].clone();
    }
    Ok(x)
}

/// Least squares via normal equations; adequate for the small systems here.
pub fn solve_least_squares<F: Field>(a: &[Vec<F>], b: &[F]) -> Result<Vec<F>> {
    let rows = a.len();
    assert_eq!(rows, b.len());
    if rows == 0 {
        return Ok(Vec::new());
    }
    let cols = a[0].len();
    if cols == 0 {
        return Ok(Vec::new());
    }
    // A^T A and A^T b. For complex data this should conjugate; all call
    // sites with complex scalars pass real-valued designs.
    let mut ata = vec![vec![F::zero(); cols]; cols];
    let mut atb = vec![F::zero(); cols];
    for r in 0..rows {
        for i in 0..cols {
            if a[r][i].is_zero() {
                continue;
            }
            for j in 0..cols {
                ata[i][j] = ata[i][j].clone() + a[r][i].clone() * a[r][j].clone();
            }
            atb[i] = atb[i].clone() + a[r][i].clone() * b[r].clone();
        }
    }
    solve_linear(&ata, &atb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_rational_exact() {
        let q = |n: i64, d: i64| {
            BigRational::new(BigInt::from(n), BigInt::from(d))
        };
        let a = vec![
            vec![q(2, 1), q(1, 1)],
            vec![q(1, 1), q(3, 1)],
        ];
        let b = vec![q(5, 1), q(10, 1)];
        let x = solve_linear(&a, &b).unwrap();
        assert_eq!(x[0], q(1, 1));
        assert_eq!(x[1], q(3, 1));
    }

    #[test]
    fn solve_complex() {
        let c = |re: f64| Complex64::new(re, 0.0);
        let a = vec![vec![c(1.0), c(1.0)], vec![c(1.0), c(-1.0)]];
        let b = vec![c(3.0), c(1.0)];
        let x = solve_linear(&a, &b).unwrap();
        assert!((x[0] - c(2.0)).norm() < 1e-12);
        assert!((x[1] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn ln_abs_huge_rational() {
        let big = BigRational::from_integer(BigInt::from(4).pow(600));
        let expect = 600.0 * 4f64.ln();
        assert!((Field::ln_abs(&big) - expect).abs() < 1e-6);
    }
}
