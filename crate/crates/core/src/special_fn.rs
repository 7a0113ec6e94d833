//! Scalar special functions: Gegenbauer polynomials, generalized binomial
//! coefficients, log-gamma helpers and the exponential integral `Γ(0, x)`.
//!
//! # Normalization
//!
//! Gegenbauer polynomials are normalized so that
//!
//! ```text
//! C_l^λ(1) = binom(l + 2λ - 1, l)
//! ```
//!
//! which is the classical (Szegő) convention. The variance formulas in
//! [`crate::localization`] assume exactly this normalization; other
//! conventions (e.g. `C_l^λ(1) = 1`) rescale every coefficient by a
//! degree-dependent factor and will give wrong variances.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Switch point between the power series and the continued fraction in [`gamma0`].
pub const GAMMA0_BRANCH_SWITCH: f64 = 1.5;

/// Gegenbauer order `λ = (n - 1) / 2` attached to the sphere `S^n`.
///
/// Only integer dimensions `n >= 2` are representable, so `λ` is always a
/// positive half-integer and `2λ` is an exact integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lambda {
    n: u32,
}

impl Lambda {
    pub fn from_dimension(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Dimension(n as i64));
        }
        Ok(Self { n })
    }

    /// Sphere dimension `n`.
    pub fn dimension(self) -> u32 {
        self.n
    }

    pub fn value(self) -> f64 {
        f64::from(self.n - 1) / 2.0
    }

    /// `2λ = n - 1`, always an integer.
    pub fn twice(self) -> u32 {
        self.n - 1
    }

    /// The order `λ + k`, which belongs to the sphere of dimension `n + 2k`.
    pub fn raised(self, k: u32) -> Self {
        Self { n: self.n + 2 * k }
    }

    /// `binom(l + 2λ - 1, l)` as a short product `Π_{j=1}^{2λ-1} (l + j) / j`.
    ///
    /// This is the hot-loop form used by the series code; it carries a
    /// relative rounding error of at most `2·(2λ)·ε`.
    pub fn binom_weight(self, l: u64) -> f64 {
        let l = l as f64;
        let mut acc = 1.0;
        for j in 1..self.twice() {
            let j = f64::from(j);
            acc *= (l + j) / j;
        }
        acc
    }
}

fn check_argument(t: f64) -> Result<()> {
    if t.is_nan() || t.abs() > 1.0 {
        return Err(Error::ArgumentOutOfRange(t));
    }
    Ok(())
}

/// `C_l^λ(t)` by the three-term recurrence
/// `l·C_l = 2(l + λ - 1)·t·C_{l-1} - (l + 2λ - 2)·C_{l-2}`.
pub fn gegenbauer_eval(l: u64, lam: Lambda, t: f64) -> Result<f64> {
    check_argument(t)?;
    let lam = lam.value();
    let mut prev = 1.0;
    if l == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * lam * t;
    for k in 2..=l {
        let kf = k as f64;
        let next = (2.0 * (kf + lam - 1.0) * t * cur - (kf + 2.0 * lam - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `Σ_l coeffs[l]·C_l^λ(t)` in a single forward recurrence pass.
pub fn gegenbauer_series(coeffs: &[f64], lam: Lambda, t: f64) -> Result<f64> {
    check_argument(t)?;
    Ok(gegenbauer_series_unchecked(coeffs, lam.value(), t))
}

pub(crate) fn gegenbauer_series_unchecked(coeffs: &[f64], lam: f64, t: f64) -> f64 {
    let Some((&a0, rest)) = coeffs.split_first() else {
        return 0.0;
    };
    let mut sum = a0;
    let mut prev = 1.0;
    let mut cur = 2.0 * lam * t;
    for (i, &a) in rest.iter().enumerate() {
        let k = i + 1;
        if k >= 2 {
            let kf = k as f64;
            let next = (2.0 * (kf + lam - 1.0) * t * cur - (kf + 2.0 * lam - 2.0) * prev) / kf;
            prev = cur;
            cur = next;
        }
        sum += a * cur;
    }
    sum
}

// Stirling series coefficients B_{2k} / (2k (2k - 1)).
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

const STIRLING_MIN_ARG: f64 = 15.0;

fn stirling_tail(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    let mut pow = 1.0 / x;
    let mut acc = 0.0;
    for c in STIRLING {
        acc += c * pow;
        pow *= inv2;
    }
    acc
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            expected: "x > 0",
        });
    }
    let mut x = x;
    let mut shift = 1.0;
    while x < STIRLING_MIN_ARG {
        shift *= x;
        x += 1.0;
    }
    let half_ln_two_pi = 0.918_938_533_204_672_8;
    Ok((x - 0.5) * x.ln() - x + half_ln_two_pi + stirling_tail(x) - shift.ln())
}

/// `ln Γ(x + a) - ln Γ(x)` for `x > 0`, `a >= 0`, without forming the two
/// large log-gammas separately.
pub fn ln_gamma_ratio(x: f64, a: f64) -> Result<f64> {
    if !(x > 0.0) || !(a >= 0.0) || !x.is_finite() || !a.is_finite() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            expected: "x > 0 and a >= 0",
        });
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let mut x = x;
    let mut shift = 1.0;
    while x < STIRLING_MIN_ARG {
        shift *= (x + a) / x;
        x += 1.0;
    }
    let main = (x - 0.5) * (a / x).ln_1p() + a * (x + a).ln() - a;
    Ok(main + stirling_tail(x + a) - stirling_tail(x) - shift.ln())
}

/// Generalized binomial `binom(l + 2λ - 1, l) = Γ(l + 2λ) / (Γ(l + 1) Γ(2λ))`
/// through log-gamma.
pub fn gen_binomial(l: u64, lam: Lambda) -> Result<f64> {
    let two_lam = f64::from(lam.twice());
    let log = ln_gamma_ratio(l as f64 + 1.0, two_lam - 1.0)? - ln_gamma(two_lam)?;
    if log > f64::MAX.ln() {
        return Err(Error::Overflow(format!(
            "binom({l} + 2λ - 1, {l}) with 2λ = {two_lam}"
        )));
    }
    Ok(log.exp())
}

/// Exact integer path for `binom(l + 2λ - 1, l)`; valid because `2λ` is an
/// integer for every supported dimension.
pub fn gen_binomial_exact(l: u64, lam: Lambda) -> Result<u128> {
    let overflow = || Error::Overflow(format!("binom({l} + {} - 1, {l})", lam.twice()));
    let mut acc: u128 = 1;
    for j in 1..u128::from(lam.twice()) {
        // acc == binom(l + j - 1, j - 1) here, so the division is exact.
        acc = acc.checked_mul(u128::from(l) + j).ok_or_else(overflow)? / j;
    }
    Ok(acc)
}

/// Upper incomplete gamma `Γ(0, x) = E₁(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Uses the convergent power series around zero for `x <= 1.5` and the
/// Lentz-evaluated continued fraction above.
pub fn gamma0(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain {
            name: "x",
            value: x,
            expected: "x > 0",
        });
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x <= GAMMA0_BRANCH_SWITCH {
        Ok(gamma0_series(x))
    } else {
        Ok(gamma0_continued_fraction(x))
    }
}

pub(crate) fn gamma0_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x - Σ_{k>=1} (-x)^k / (k·k!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = f64::from(k);
        term *= -x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

pub(crate) fn gamma0_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -f64::from(i) * f64::from(i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// Exact check of `l + 1/2 - 1/(8l) <= √(l(l+1)) <= l + 1/2 - 1/(8l) + 1/(16l²)`.
///
/// Both sides are squared and compared as integers, so the answer does not
/// depend on floating-point rounding (the gaps are `O(l^-2)` while `ulp(l)`
/// is `O(l·ε)`).
pub fn sqrt_product_sandwich_holds(l: u64) -> bool {
    if l == 0 {
        return false;
    }
    let l = BigUint::from(l);
    let one = BigUint::from(1u32);
    let lp1 = &l + &one;
    // lower: ((8l² + 4l - 1) / (8l))² <= l(l+1)
    let lower_num = BigUint::from(8u32) * &l * &l + BigUint::from(4u32) * &l - &one;
    let lower_ok = &lower_num * &lower_num <= BigUint::from(64u32) * l.pow(3) * &lp1;
    // upper: ((16l³ + 8l² - 2l + 1) / (16l²))² >= l(l+1)
    let upper_num = BigUint::from(16u32) * l.pow(3) + BigUint::from(8u32) * &l * &l + &one
        - BigUint::from(2u32) * &l;
    let upper_ok = &upper_num * &upper_num >= BigUint::from(256u32) * l.pow(5) * &lp1;
    lower_ok && upper_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn lam(n: u32) -> Lambda {
        Lambda::from_dimension(n).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    /// Explicit sum C_l^λ(t) = Σ_k (-1)^k (λ)_{l-k} / (k! (l-2k)!) (2t)^{l-2k},
    /// evaluated in exact rational arithmetic.
    fn gegenbauer_exact(l: u64, twice_lambda: i64, t: &BigRational) -> BigRational {
        let lam = rat(twice_lambda, 2);
        let fact = |m: u64| (1..=m).fold(BigRational::one(), |acc, j| acc * rat(j as i64, 1));
        let poch =
            |m: u64| (0..m).fold(BigRational::one(), |acc, j| acc * (&lam + rat(j as i64, 1)));
        let two_t = t * rat(2, 1);
        let mut sum = BigRational::zero();
        for k in 0..=l / 2 {
            let mut term = poch(l - k) / (fact(k) * fact(l - 2 * k));
            for _ in 0..(l - 2 * k) {
                term *= &two_t;
            }
            if k % 2 == 1 {
                term = -term;
            }
            sum += term;
        }
        sum
    }

    #[test]
    fn lambda_rejects_degenerate_dimension() {
        assert_eq!(Lambda::from_dimension(1), Err(Error::Dimension(1)));
        assert!(Lambda::from_dimension(0).is_err());
        assert_eq!(lam(2).value(), 0.5);
        assert_eq!(lam(5).twice(), 4);
        assert_eq!(lam(3).raised(1).value(), 2.0);
    }

    #[test]
    fn gegenbauer_low_degree_values() {
        assert_eq!(gegenbauer_eval(0, lam(4), 0.3).unwrap(), 1.0);
        assert_eq!(gegenbauer_eval(1, lam(2), 0.5).unwrap(), 0.5);
        assert!((gegenbauer_eval(2, lam(2), 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gegenbauer_matches_exact_explicit_sum() {
        let t = rat(7, 10);
        let exact = gegenbauer_exact(5, 3, &t).to_f64().unwrap();
        let got = gegenbauer_eval(5, lam(4), 0.7).unwrap();
        assert!(rel(got, exact) < 1e-13, "{got} vs {exact}");
        for (l, n, p) in [(12, 2, -3), (20, 6, 9), (33, 3, 1)] {
            let t = rat(p, 10);
            let exact = gegenbauer_exact(l, n as i64 - 1, &t).to_f64().unwrap();
            let got = gegenbauer_eval(l, lam(n), p as f64 / 10.0).unwrap();
            assert!(
                (got - exact).abs() < 1e-11 * exact.abs().max(1.0),
                "l={l} n={n}"
            );
        }
    }

    #[test]
    fn gegenbauer_rejects_argument_outside_interval() {
        assert!(matches!(
            gegenbauer_eval(3, lam(3), 1.5),
            Err(Error::ArgumentOutOfRange(_))
        ));
        assert!(gegenbauer_eval(3, lam(3), f64::NAN).is_err());
        assert!(gegenbauer_series(&[1.0], lam(3), -1.01).is_err());
    }

    #[test]
    fn series_evaluation_agrees_with_single_terms() {
        let coeffs = [0.3, -1.2, 0.0, 2.5, 0.75];
        let t = -0.37;
        let direct: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(l, a)| a * gegenbauer_eval(l as u64, lam(5), t).unwrap())
            .sum();
        let series = gegenbauer_series(&coeffs, lam(5), t).unwrap();
        assert!((direct - series).abs() < 1e-13);
        assert_eq!(gegenbauer_series(&[], lam(5), t).unwrap(), 0.0);
    }

    #[test]
    fn value_at_one_is_generalized_binomial() {
        for n in 2..=6 {
            for l in 0..=200 {
                let c = gegenbauer_eval(l, lam(n), 1.0).unwrap();
                let b = gen_binomial(l, lam(n)).unwrap();
                assert!(rel(c, b) < 1e-10, "n={n} l={l}: {c} vs {b}");
            }
        }
    }

    #[test]
    fn generalized_binomial_examples() {
        assert!((gen_binomial(0, lam(3)).unwrap() - 1.0).abs() < 1e-14);
        assert!((gen_binomial(3, lam(3)).unwrap() - 4.0).abs() < 1e-13);
        assert!((gen_binomial(4, lam(2)).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(gen_binomial_exact(3, lam(3)).unwrap(), 4);
        assert_eq!(gen_binomial_exact(4, lam(2)).unwrap(), 1);
        assert_eq!(gen_binomial_exact(10, lam(6)).unwrap(), 1001);
    }

    #[test]
    fn log_gamma_and_integer_paths_agree() {
        for n in 2..=6 {
            for l in 0..=500 {
                let exact = gen_binomial_exact(l, lam(n)).unwrap() as f64;
                let logp = gen_binomial(l, lam(n)).unwrap();
                let fast = lam(n).binom_weight(l);
                assert!(rel(logp, exact) < 1e-12, "n={n} l={l}: {logp} vs {exact}");
                assert!(rel(fast, exact) < 1e-14, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn binomial_overflow_is_reported() {
        let big = lam(400);
        assert!(matches!(
            gen_binomial(10_000_000, big),
            Err(Error::Overflow(_))
        ));
        assert!(matches!(
            gen_binomial_exact(10_000_000, big),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-14);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-14);
        assert!((ln_gamma(0.5).unwrap() - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln(20!) = 42.335616460753485...
        assert!(rel(ln_gamma(21.0).unwrap(), 42.335_616_460_753_485) < 1e-15);
        assert!(ln_gamma(0.0).is_err());
        assert!((ln_gamma_ratio(4.0, 2.0).unwrap() - 20f64.ln()).abs() < 1e-14);
    }

    /// E₁(1) from the 50-digit Euler constant and an exact rational
    /// evaluation of Σ_{k>=1} (-1)^{k+1} / (k·k!).
    fn e1_at_one_oracle() -> f64 {
        let mut sum = BigRational::zero();
        let mut fact = BigRational::one();
        for k in 1..=40i64 {
            fact *= rat(k, 1);
            let term = BigRational::one() / (rat(k, 1) * &fact);
            if k % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        let gamma = BigRational::new(
            "57721566490153286060651209008240243104215933593992"
                .parse::<BigInt>()
                .unwrap(),
            BigInt::from(10u32).pow(50),
        );
        (sum - gamma).to_f64().unwrap()
    }

    #[test]
    fn gamma0_at_one() {
        let oracle = e1_at_one_oracle();
        assert!(rel(oracle, 0.219_383_934_395_520_27) < 1e-15);
        assert!(rel(gamma0(1.0).unwrap(), oracle) < 1e-12);
    }

    #[test]
    fn gamma0_large_argument() {
        let x = 50.0;
        let v = gamma0(x).unwrap();
        let leading = (-x).exp() / x;
        assert!(rel(leading, v) < 0.02);
        // asymptotic series e^{-x}/x Σ (-1)^k k!/x^k, truncated near its
        // smallest term (k = 20 gives 20!/50^20 ≈ 3e-16)
        let mut s = 0.0;
        let mut t = 1.0;
        for k in 0..20 {
            s += t;
            t *= -(f64::from(k) + 1.0) / x;
        }
        assert!(rel(v, leading * s) < 1e-13);
    }

    #[test]
    fn gamma0_small_argument() {
        let x = 1e-8;
        let v = gamma0(x).unwrap();
        assert!(rel(v, -EULER_GAMMA - x.ln()) < 1e-8);
        assert!(rel(v, -EULER_GAMMA - x.ln() + x) < 1e-15);
    }

    #[test]
    fn gamma0_branches_agree_on_overlap() {
        let mut x = 1.0;
        while x <= 2.0 {
            let s = gamma0_series(x);
            let c = gamma0_continued_fraction(x);
            assert!(rel(s, c) < 1e-13, "x={x}: {s} vs {c}");
            x += 0.05;
        }
    }

    #[test]
    fn gamma0_rejects_nonpositive() {
        assert!(gamma0(0.0).is_err());
        assert!(gamma0(-1.0).is_err());
        assert!(gamma0(f64::NAN).is_err());
    }

    #[test]
    fn gamma0_positive_and_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let x = 1e-6 * (50.0f64 / 1e-6).powf(f64::from(i) / 400.0);
            let v = gamma0(x).unwrap();
            assert!(v > 0.0 && v < prev, "x={x}");
            prev = v;
        }
    }

    #[test]
    fn sandwich_holds_exactly() {
        assert!(!sqrt_product_sandwich_holds(0));
        for l in (1..=1_000).chain([999_999, 1_000_000]) {
            assert!(sqrt_product_sandwich_holds(l), "l={l}");
        }
    }
}
