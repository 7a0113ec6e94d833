//! Exact rational functions of `q = e^{-2ρ}`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::poly::{horner, Poly};
use crate::error::{Error, Result};

/// Denominators smaller than this in magnitude are reported as pole proximity.
pub const POLE_THRESHOLD: f64 = 1e-280;

/// `numerator(q) / denominator(q)` in lowest terms.
///
/// The denominator is kept factored as `(1 - q)^k · cofactor(q)` with the
/// cofactor normalized to constant term 1 (or leading coefficient 1 when it
/// vanishes at zero), so that evaluation near the pole `q = 1` can use an
/// accurately computed `1 - q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QRational {
    numerator: Poly,
    denominator: Poly,
    pole_order: u32,
    cofactor: Poly,
}

impl QRational {
    pub fn new(numerator: Poly, denominator: Poly) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let g = Poly::gcd(&numerator, &denominator);
        let (mut num, mut den) = (numerator.div_rem(&g).0, denominator.div_rem(&g).0);

        let mut pole_order = 0;
        let mut cofactor = den.clone();
        loop {
            let (quot, rem) = cofactor.div_rem(&Poly::one_minus_q());
            if !rem.is_zero() {
                break;
            }
            cofactor = quot;
            pole_order += 1;
        }

        let c0 = cofactor.coeff(0);
        let norm = if c0.is_zero() {
            cofactor.leading().cloned().unwrap_or_else(BigRational::one)
        } else {
            c0
        };
        let inv = BigRational::one() / norm;
        num = num.scale(&inv);
        den = den.scale(&inv);
        cofactor = cofactor.scale(&inv);
        if num.is_zero() {
            // 0 / anything is canonically 0 / 1
            den = Poly::one();
            cofactor = Poly::one();
            pole_order = 0;
        }
        Ok(Self {
            numerator: num,
            denominator: den,
            pole_order,
            cofactor,
        })
    }

    pub fn from_poly(p: Poly) -> Self {
        Self::new(p, Poly::one()).expect("unit denominator")
    }

    pub fn numerator(&self) -> &Poly {
        &self.numerator
    }

    pub fn denominator(&self) -> &Poly {
        &self.denominator
    }

    /// Multiplicity of the root `q = 1` of the denominator.
    pub fn pole_order(&self) -> u32 {
        self.pole_order
    }

    /// Denominator with the `(1 - q)^k` factor removed.
    pub fn cofactor(&self) -> &Poly {
        &self.cofactor
    }

    pub fn add(&self, other: &QRational) -> Self {
        let num = &(&self.numerator * &other.denominator) + &(&other.numerator * &self.denominator);
        Self::new(num, &self.denominator * &other.denominator).expect("nonzero product")
    }

    pub fn sub(&self, other: &QRational) -> Self {
        let num = &(&self.numerator * &other.denominator) - &(&other.numerator * &self.denominator);
        Self::new(num, &self.denominator * &other.denominator).expect("nonzero product")
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.numerator.scale(c), self.denominator.clone()).expect("nonzero denominator")
    }

    pub fn derivative(&self) -> Self {
        let (n, d) = (&self.numerator, &self.denominator);
        let num = &(&n.derivative() * d) - &(n * &d.derivative());
        Self::new(num, d * d).expect("nonzero square")
    }

    /// The Euler operator `q·d/dq`.
    pub fn q_derivative(&self) -> Self {
        let d = self.derivative();
        Self::new(d.numerator.shift_up(), d.denominator).expect("nonzero denominator")
    }

    pub fn eval_exact(&self, q: &BigRational) -> Result<BigRational> {
        let den = self.denominator.eval_exact(q);
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(self.numerator.eval_exact(q) / den)
    }

    /// Evaluation at `q` in `[0, 1)` with `1 - q` formed directly.
    pub fn eval(&self, q: f64) -> Result<f64> {
        self.eval_with_gap(q, 1.0 - q)
    }

    /// Evaluation when `gap = 1 - q` is known more accurately than `q`
    /// itself (for example `gap = -expm1(-2ρ)`).
    pub fn eval_with_gap(&self, q: f64, gap: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::Domain {
                name: "q",
                value: q,
                expected: "0 <= q < 1",
            });
        }
        let num = horner(&self.numerator.to_f64_coeffs(), q);
        let den = horner(&self.cofactor.to_f64_coeffs(), q) * gap.powi(self.pole_order as i32);
        if !den.is_finite() || den.abs() < POLE_THRESHOLD {
            return Err(Error::PoleProximity { q, value: den });
        }
        Ok(num / den)
    }

    /// Evaluation at `q = e^{-2ρ}`.
    pub fn eval_at_rho(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::Domain {
                name: "rho",
                value: rho,
                expected: "rho > 0",
            });
        }
        self.eval_with_gap((-2.0 * rho).exp(), -(-2.0 * rho).exp_m1())
    }
}

fn format_coeff(c: &BigRational) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("({}/{})", c.numer(), c.denom())
    }
}

fn format_poly(p: &Poly) -> (String, usize) {
    let mut out = String::new();
    let mut terms = 0;
    for (deg, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let body = match (deg, mag.is_one()) {
            (0, _) => format_coeff(&mag),
            (1, true) => "q".to_string(),
            (1, false) => format!("{}q", format_coeff(&mag)),
            (_, true) => format!("q^{deg}"),
            (_, false) => format!("{}q^{deg}", format_coeff(&mag)),
        };
        match (terms, c.is_negative()) {
            (0, false) => out.push_str(&body),
            (0, true) => {
                out.push('-');
                out.push_str(&body);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
        terms += 1;
    }
    if terms == 0 {
        out.push('0');
    }
    (out, terms)
}

/// Canonical form `P(q) / (1-q)^k`, numerator in ascending degree.
///
/// A nontrivial cofactor is appended as `/ ((1-q)^k (C(q)))`.
impl fmt::Display for QRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (num, terms) = format_poly(&self.numerator);
        if terms > 1 {
            write!(f, "({num})")?;
        } else {
            write!(f, "{num}")?;
        }
        if self.cofactor.is_one() {
            write!(f, " / (1-q)^{}", self.pole_order)
        } else {
            let (cof, _) = format_poly(&self.cofactor);
            write!(f, " / ((1-q)^{} ({cof}))", self.pole_order)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn reduces_common_factors() {
        // (q - q^2) / (1 - q)^2 == q / (1 - q)
        let num = Poly::from_ints(&[0, 1, -1]);
        let den = Poly::one_minus_q().pow(2);
        let x = QRational::new(num, den).unwrap();
        assert_eq!(x.numerator(), &Poly::q());
        assert_eq!(x.pole_order(), 1);
        assert!(x.cofactor().is_one());
        assert_eq!(x.to_string(), "q / (1-q)^1");
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(
            QRational::new(Poly::one(), Poly::zero()),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn evaluates_simple_forms() {
        let a = QRational::new(Poly::q(), Poly::one_minus_q()).unwrap();
        assert_eq!(a.eval(0.5).unwrap(), 1.0);
        let b = QRational::new(Poly::q(), Poly::one_minus_q().pow(2)).unwrap();
        assert_eq!(b.eval(0.5).unwrap(), 2.0);
        // (1 - q)^{-2} - 1 evaluated at q = 0
        let inv = QRational::new(Poly::one(), Poly::one_minus_q().pow(2)).unwrap();
        let c = inv.sub(&QRational::from_poly(Poly::one()));
        assert_eq!(c.eval(0.0).unwrap(), 0.0);
        assert_eq!(c.to_string(), "(2q - q^2) / (1-q)^2");
    }

    #[test]
    fn eval_rejects_bad_arguments() {
        let a = QRational::new(Poly::q(), Poly::one_minus_q()).unwrap();
        assert!(matches!(a.eval(1.0), Err(Error::Domain { .. })));
        assert!(matches!(a.eval(-0.1), Err(Error::Domain { .. })));
        let steep = QRational::new(Poly::one(), Poly::one_minus_q().pow(40)).unwrap();
        assert!(matches!(
            steep.eval_with_gap(1.0 - 1e-8, 1e-8),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn q_derivative_of_geometric_series() {
        let s0 = QRational::new(Poly::q(), Poly::one_minus_q()).unwrap();
        let s1 = s0.q_derivative();
        assert_eq!(s1.to_string(), "q / (1-q)^2");
        let s2 = s1.q_derivative();
        assert_eq!(s2.to_string(), "(q + q^2) / (1-q)^3");
        assert_eq!(s2.eval_exact(&r(1, 2)).unwrap(), r(6, 1));
    }

    #[test]
    fn display_non_integer_and_cofactor() {
        let x = QRational::new(
            Poly::from_coeffs(vec![r(1, 2), r(-3, 1)]),
            Poly::from_ints(&[1, 1]),
        )
        .unwrap();
        assert_eq!(x.to_string(), "((1/2) - 3q) / ((1-q)^0 (1 + q))");
        let zero = QRational::new(Poly::zero(), Poly::from_ints(&[1, -1])).unwrap();
        assert_eq!(zero.to_string(), "0 / (1-q)^0");
    }
}
