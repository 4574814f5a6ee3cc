use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use super::matrix::nan_max;

/// Relative cutoff below which top coefficients are dropped when normalizing degree.
pub const TRIM_RELATIVE: f64 = 1e-12;

/// Univariate polynomial with complex coefficients, stored in ascending degree.
///
/// The zero polynomial has no stored coefficients. Otherwise the last stored
/// coefficient is the leading one and is nonzero (relative to the largest
/// coefficient, see [`TRIM_RELATIVE`]).
#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, nan_max);
        if max == 0.0 {
            coeffs.clear();
        } else {
            let cutoff = TRIM_RELATIVE * max;
            while coeffs.last().is_some_and(|c| c.norm() < cutoff) {
                coeffs.pop();
            }
        }
        Poly { coeffs }
    }

    /// Builds a polynomial without trimming; the caller guarantees the invariant
    /// or deliberately keeps a fixed-length coefficient vector.
    pub(crate) fn from_raw(coeffs: Vec<Complex64>) -> Self {
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// `c * s^k`
    pub fn monomial(c: Complex64, k: usize) -> Self {
        let mut coeffs = vec![Complex64::zero(); k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    /// The monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::zero(); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        Poly::from_raw(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `s^k`; zero beyond the degree.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_else(Complex64::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_else(Complex64::zero)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, nan_max)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::zero(), |acc, &c| acc * s + c)
    }

    pub fn scale(&self, factor: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    pub fn is_monic(&self, tol: f64) -> bool {
        (self.leading() - Complex64::new(1.0, 0.0)).norm() <= tol
    }

    /// Divides by the leading coefficient when it exceeds `min_leading`,
    /// otherwise returns `None`.
    pub fn to_monic(&self, min_leading: f64) -> Option<Poly> {
        let lead = self.leading();
        if lead.norm() <= min_leading {
            return None;
        }
        let mut out: Vec<Complex64> = self.coeffs.iter().map(|&c| c / lead).collect();
        if let Some(last) = out.last_mut() {
            *last = Complex64::new(1.0, 0.0);
        }
        Some(Poly::from_raw(out))
    }

    /// Projective representative: divide by the coefficient of largest
    /// magnitude (lowest index on ties), which becomes exactly one.
    pub fn normalized_max(&self) -> Poly {
        let Some(idx) = argmax_abs(&self.coeffs) else {
            return Poly::zero();
        };
        let pivot = self.coeffs[idx];
        let mut out: Vec<Complex64> = self.coeffs.iter().map(|&c| c / pivot).collect();
        out[idx] = Complex64::new(1.0, 0.0);
        Poly::new(out)
    }

    /// Coefficients of the even part as a polynomial in `s^2`.
    pub fn even_part(&self) -> Poly {
        Poly::new(self.coeffs.iter().step_by(2).copied().collect())
    }

    /// Largest odd coefficient relative to the largest coefficient overall.
    pub fn odd_relative(&self) -> f64 {
        let max = self.max_abs_coeff();
        if max == 0.0 {
            return 0.0;
        }
        self.coeffs.iter().skip(1).step_by(2).map(|c| c.norm()).fold(0.0, nan_max) / max
    }

    /// Max coefficient difference, comparing up to the larger degree.
    pub fn max_coeff_diff(&self, other: &Poly) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len).map(|k| (self.coeff(k) - other.coeff(k)).norm()).fold(0.0, nan_max)
    }

    /// Coefficientwise relative error against a reference polynomial.
    pub fn relative_error(&self, reference: &Poly) -> f64 {
        let scale = reference.max_abs_coeff().max(f64::MIN_POSITIVE);
        self.max_coeff_diff(reference) / scale
    }

    /// Smallest relative difference between `self` and any scalar multiple of
    /// `other`, using the coefficient of largest magnitude to fix the scalar.
    pub fn projective_distance(&self, other: &Poly) -> f64 {
        let a = self.normalized_max();
        let b = other.normalized_max();
        match (argmax_abs(a.coeffs()), b.is_zero()) {
            (Some(idx), false) => {
                let scale = b.coeff(idx);
                if scale.norm() == 0.0 {
                    return f64::INFINITY;
                }
                a.max_coeff_diff(&b.scale(scale.inv()))
            }
            _ => {
                if a.is_zero() && b.is_zero() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

pub(crate) fn argmax_abs(values: &[Complex64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        let m = v.norm();
        if m > 0.0 && best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    best.map(|(i, _)| i)
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})s")?,
                _ => write!(f, "({c})s^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::from_raw(self.coeffs.iter().map(|&c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
