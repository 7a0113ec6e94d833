//! Dense univariate polynomials in `q` over big rationals.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    // ascending degree, no trailing zeros
    coeffs: Vec<BigRational>,
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl Poly {
    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| int(c)).collect())
    }

    /// `q`
    pub fn q() -> Self {
        Self::from_ints(&[0, 1])
    }

    /// `1 - q`
    pub fn one_minus_q() -> Self {
        Self::from_ints(&[1, -1])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| a * int(i as i64))
                .collect(),
        )
    }

    /// Multiply by `q`.
    pub fn shift_up(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(BigRational::zero());
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Poly) -> (Poly, Poly) {
        let d_deg = divisor.degree().expect("division by the zero polynomial");
        let d_lead = divisor.coeffs[d_deg].clone();
        let mut rem = self.coeffs.clone();
        let Some(r_deg) = self.degree() else {
            return (Poly::zero(), Poly::zero());
        };
        if r_deg < d_deg {
            return (Poly::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); r_deg - d_deg + 1];
        for i in (d_deg..=r_deg).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let factor = &rem[i] / &d_lead;
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                let idx = i - d_deg + j;
                rem[idx] = &rem[idx] - &factor * dc;
            }
            quot[i - d_deg] = factor;
        }
        (Poly::from_coeffs(quot), Poly::from_coeffs(rem))
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        match a.leading().cloned() {
            Some(lead) => a.scale(&(BigRational::one() / lead)),
            None => a,
        }
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn eval_exact(&self, q: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * q + c)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn all_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_coeffs((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::from_coeffs((0..len).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::from_coeffs(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_basics() {
        let a = Poly::from_ints(&[1, 2, 1]); // (1 + q)^2
        let b = Poly::from_ints(&[1, 1]);
        assert_eq!(&b * &b, a);
        assert_eq!(b.pow(2), a);
        assert_eq!(&a - &a, Poly::zero());
        assert_eq!(a.derivative(), Poly::from_ints(&[2, 2]));
        assert_eq!(Poly::one_minus_q().pow(3), Poly::from_ints(&[1, -3, 3, -1]));
        assert_eq!(b.shift_up(), Poly::from_ints(&[0, 1, 1]));
    }

    #[test]
    fn division_and_gcd() {
        let a = &Poly::from_ints(&[1, 1]) * &Poly::from_ints(&[2, 0, 1]);
        let (quot, rem) = a.div_rem(&Poly::from_ints(&[1, 1]));
        assert_eq!(quot, Poly::from_ints(&[2, 0, 1]));
        assert!(rem.is_zero());
        let c = &Poly::from_ints(&[1, 1]) * &Poly::from_ints(&[3, -1]);
        assert_eq!(Poly::gcd(&a, &c), Poly::from_ints(&[1, 1]));
        assert!(Poly::gcd(&Poly::from_ints(&[1, 1]), &Poly::from_ints(&[2, 1])).is_one());
    }

    #[test]
    fn horner_matches_exact() {
        let p = Poly::from_ints(&[3, -2, 0, 5]);
        let exact = p.eval_exact(&BigRational::new(1.into(), 4.into()));
        assert!((horner(&p.to_f64_coeffs(), 0.25) - exact.to_f64().unwrap()).abs() < 1e-15);
    }
}
