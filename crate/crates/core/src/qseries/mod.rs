//! The auxiliary series
//!
//! ```text
//! S_{n,m}(ρ) = Σ_{l>=1} binom(l + 2λ - 1, l) · l^m · e^{-2ρl}
//! ```
//!
//! evaluated two ways: numerically with a certified tail, and exactly as a
//! rational function `R_{n,m}(q)` of `q = e^{-2ρ}`. The closed forms start
//! from `R_{n,0}(q) = (1 - q)^{1-n} - 1` and apply the Euler operator
//! `q·d/dq` once per power of `l`; in the `ρ` variable this operator is
//! `-½·d/dρ`.

mod poly;
mod rational;
mod summation;

use serde::Serialize;

pub use poly::Poly;
pub use rational::{QRational, POLE_THRESHOLD};
pub use summation::{
    sum_certified, sum_finite, CompensatedSum, Majorant, SummationResult, TERM_BUDGET,
};

use crate::error::{Error, Result};
use crate::special_fn::{gamma0, Lambda};

/// Smallest `ρ` accepted by numeric summation; below it the term count
/// runs past [`TERM_BUDGET`].
pub const RHO_FLOOR: f64 = 1e-8;

/// Largest `m` accepted by [`s_closed_form`] callers that print forms.
pub const MAX_CLOSED_FORM_POWER: u32 = 12;

/// Number of halvings in the `S_{n,-1}·ρ^{n-2}` growth ladder.
pub const GROWTH_RUNGS: usize = 6;

/// Index triple `(n, m, ρ)` of one `S_{n,m}(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesIndex {
    lam: Lambda,
    m: i32,
    rho: f64,
}

impl SeriesIndex {
    pub fn new(n: u32, m: i32, rho: f64) -> Result<Self> {
        let lam = Lambda::from_dimension(n)?;
        if m < -1 {
            return Err(Error::Domain {
                name: "m",
                value: f64::from(m),
                expected: "m >= -1",
            });
        }
        check_rho(rho)?;
        Ok(Self { lam, m, rho })
    }

    pub fn lambda(&self) -> Lambda {
        self.lam
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain {
            name: "rho",
            value: rho,
            expected: "0 < rho < inf",
        });
    }
    Ok(())
}

pub(crate) fn check_rho_floor(rho: f64) -> Result<()> {
    check_rho(rho)?;
    if rho < RHO_FLOOR {
        return Err(Error::RhoBelowFloor {
            rho,
            floor: RHO_FLOOR,
        });
    }
    Ok(())
}

/// Rounding bound for one term `binom·l^m·e^{-2ρl}`.
fn term_error(lam: Lambda, m: i32) -> f64 {
    f64::from(2 * lam.twice() + m.unsigned_abs() + 6) * f64::EPSILON
}

/// `S_{n,m}(ρ)` by direct summation with a certified tail.
///
/// The terms are their own majorant, so the stopping rule uses the exact
/// ratio bound `(l + 2λ)/(l + 1) · ((l + 1)/l)^m · e^{-2ρ}`.
pub fn s_numeric(idx: &SeriesIndex, tol: f64) -> Result<SummationResult> {
    check_rho_floor(idx.rho)?;
    let lam = idx.lam;
    let (m, rho) = (idx.m, idx.rho);
    let majorant = Majorant {
        scale: 1.0,
        binom_order: lam.twice(),
        power: f64::from(m),
        rate: 2.0 * rho,
    };
    sum_certified(
        1,
        |l| lam.binom_weight(l) * (l as f64).powi(m) * (-2.0 * rho * l as f64).exp(),
        &majorant,
        tol,
        term_error(lam, m),
    )
}

/// Exact `R_{n,m}(q)` with `S_{n,m}(ρ) = R_{n,m}(e^{-2ρ})`.
pub fn s_closed_form(n: u32, m: u32) -> Result<QRational> {
    let lam = Lambda::from_dimension(n)?;
    let pole = Poly::one_minus_q().pow(lam.twice());
    let mut r = QRational::new(&Poly::one() - &pole, pole)?;
    for _ in 0..m {
        r = r.q_derivative();
    }
    Ok(r)
}

/// Closed forms `R_{n,0}, …, R_{n,max_m}` built by one chain of derivatives.
pub fn s_closed_forms(n: u32, max_m: u32) -> Result<Vec<QRational>> {
    let mut out = vec![s_closed_form(n, 0)?];
    for m in 1..=max_m as usize {
        let next = out[m - 1].q_derivative();
        out.push(next);
    }
    Ok(out)
}

/// Horner evaluation of a closed form at `q ∈ [0, 1)`.
pub fn qrational_eval(r: &QRational, q: f64) -> Result<f64> {
    r.eval(q)
}

/// `S_{2,-1}(ρ) = Σ e^{-2ρl}/l = -ln(1 - e^{-2ρ})`.
pub fn s2_minus1_closed(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let q = (-2.0 * rho).exp();
    if q < 0.5 {
        Ok(-(-q).ln_1p())
    } else {
        Ok(-(-(-2.0 * rho).exp_m1()).ln())
    }
}

/// Outcome of [`s_minus1_bound_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinusOneBoundReport {
    pub n: u32,
    pub rho: f64,
    /// Numeric `S_{2,-1}(ρ)`.
    pub s2_minus1: SummationResult,
    /// `e^{-2ρ} + Γ(0, 2ρ)`.
    pub upper: f64,
    /// `S_{n,-1}(ρ_k)·ρ_k^{n-2}` along the halving ladder `ρ_k = ρ/2^k`
    /// (only for `n > 2`).
    pub growth: Option<GrowthLadder>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthLadder {
    pub rhos: Vec<f64>,
    pub scaled: Vec<f64>,
    /// Largest scaled value seen on the ladder.
    pub constant: f64,
    pub last_increment: f64,
}

/// Checks `0 <= S_{2,-1}(ρ) <= e^{-2ρ} + Γ(0, 2ρ)` and, for `n > 2`, that
/// `S_{n,-1}(ρ)·ρ^{n-2}` levels off as `ρ` is halved.
///
/// The ladder counts as bounded when the last increment is at most a tenth
/// of the largest value seen; a `ρ^{-1}` blow-up would keep the increments
/// at half the current value.
pub fn s_minus1_bound_check(n: u32, rho: f64, tol: f64) -> Result<MinusOneBoundReport> {
    Lambda::from_dimension(n)?;
    check_rho_floor(rho)?;
    let s2 = s_numeric(&SeriesIndex::new(2, -1, rho)?, tol)?;
    let upper = (-2.0 * rho).exp() + gamma0(2.0 * rho)?;
    if s2.value - s2.tail_bound < 0.0 || s2.value + s2.tail_bound > upper {
        return Err(Error::BoundViolation {
            rho,
            detail: format!(
                "S_(2,-1) = {} ± {} not in [0, {upper}]",
                s2.value, s2.tail_bound
            ),
        });
    }

    let growth = if n > 2 {
        let rhos: Vec<f64> = (0..GROWTH_RUNGS)
            .map(|k| rho / f64::from(1u32 << k))
            .collect();
        let scaled = rhos
            .iter()
            .map(|&r| {
                let s = s_numeric(&SeriesIndex::new(n, -1, r)?, tol)?;
                Ok(s.value * r.powi(n as i32 - 2))
            })
            .collect::<Result<Vec<f64>>>()?;
        let constant = scaled.iter().copied().fold(0.0, f64::max);
        let last_increment = (scaled[GROWTH_RUNGS - 1] - scaled[GROWTH_RUNGS - 2]).abs();
        if last_increment > 0.1 * constant {
            return Err(Error::BoundViolation {
                rho: rhos[GROWTH_RUNGS - 1],
                detail: format!(
                    "S_({n},-1)·rho^{} still growing: increment {last_increment} vs max {constant}",
                    n - 2
                ),
            });
        }
        Some(GrowthLadder {
            rhos,
            scaled,
            constant,
            last_increment,
        })
    } else {
        None
    };

    Ok(MinusOneBoundReport {
        n,
        rho,
        s2_minus1: s2,
        upper,
        growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2_HALF: f64 = std::f64::consts::LN_2 / 2.0;

    fn num(n: u32, m: i32, rho: f64) -> SummationResult {
        s_numeric(&SeriesIndex::new(n, m, rho).unwrap(), 1e-14).unwrap()
    }

    #[test]
    fn numeric_geometric_examples() {
        let s = num(2, 0, LN2_HALF);
        assert!((s.value - 1.0).abs() <= s.tail_bound + 1e-15);
        let s = num(2, 1, LN2_HALF);
        assert!((s.value - 2.0).abs() <= s.tail_bound + 2e-15);
    }

    #[test]
    fn numeric_matches_closed_form_example() {
        let s = num(3, 2, 0.5);
        let c = qrational_eval(&s_closed_form(3, 2).unwrap(), (-1.0f64).exp()).unwrap();
        assert!((s.value - c).abs() <= 1e-12 * c);
    }

    #[test]
    fn index_validation() {
        assert!(SeriesIndex::new(1, 0, 0.5).is_err());
        assert!(SeriesIndex::new(3, -2, 0.5).is_err());
        assert!(SeriesIndex::new(3, 0, 0.0).is_err());
        assert!(SeriesIndex::new(3, 0, f64::NAN).is_err());
        let tiny = SeriesIndex::new(3, 0, 1e-9).unwrap();
        assert!(matches!(
            s_numeric(&tiny, 1e-12),
            Err(Error::RhoBelowFloor { .. })
        ));
    }

    #[test]
    fn closed_form_strings() {
        assert_eq!(s_closed_form(2, 0).unwrap().to_string(), "q / (1-q)^1");
        assert_eq!(s_closed_form(2, 1).unwrap().to_string(), "q / (1-q)^2");
        assert_eq!(
            s_closed_form(3, 0).unwrap().to_string(),
            "(2q - q^2) / (1-q)^2"
        );
    }

    #[test]
    fn closed_form_n2_m4_against_numeric() {
        let c = s_closed_form(2, 4).unwrap().eval(0.5).unwrap();
        let s = num(2, 4, LN2_HALF);
        assert!((s.value - c).abs() <= s.tail_bound + 1e-12 * c);
        // Σ l^4 / 2^l = 150
        assert!((c - 150.0).abs() < 1e-12);
    }

    #[test]
    fn pole_order_grows_with_m() {
        for n in 2..=6 {
            for (m, form) in s_closed_forms(n, 6).unwrap().iter().enumerate() {
                assert_eq!(form.pole_order(), n - 1 + m as u32, "n={n} m={m}");
                assert!(form.cofactor().is_one());
                assert!(form.numerator().is_integral());
            }
        }
    }

    #[test]
    fn closed_form_series_agree_with_chain() {
        let chain = s_closed_forms(4, 4).unwrap();
        for m in 0..=4 {
            assert_eq!(chain[m as usize], s_closed_form(4, m).unwrap());
        }
    }

    #[test]
    fn log_series_closed_values() {
        assert!((s2_minus1_closed(LN2_HALF).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let direct: f64 = (1..60).map(|l| (-2.0 * l as f64).exp() / l as f64).sum();
        assert!((s2_minus1_closed(1.0).unwrap() - direct).abs() < 1e-14);
        assert!((s2_minus1_closed(1.0).unwrap() - 0.145_413).abs() < 1e-6);
        let big = s2_minus1_closed(20.0).unwrap();
        assert!((big / (-40.0f64).exp() - 1.0).abs() < 1e-15);
        let s = num(2, -1, 0.5);
        assert!((s.value - s2_minus1_closed(0.5).unwrap()).abs() <= s.tail_bound + 1e-15);
    }

    #[test]
    fn minus_one_bound_examples() {
        let r = s_minus1_bound_check(2, 0.5, 1e-14).unwrap();
        assert!((r.s2_minus1.value - 0.458_675).abs() < 1e-6);
        assert!((r.upper - (0.367_879 + 0.219_384)).abs() < 1e-6);
        assert!(r.growth.is_none());

        let r = s_minus1_bound_check(2, 5.0, 1e-14).unwrap();
        assert!(r.s2_minus1.value <= r.upper);
        assert!(r.s2_minus1.value / (-10.0f64).exp() < 1.0 + 1e-4);

        for rho in [0.1, 0.05, 0.025] {
            let r = s_minus1_bound_check(4, rho, 1e-12).unwrap();
            let g = r.growth.unwrap();
            assert!(g.scaled.iter().all(|&v| v <= g.constant));
            // S_{4,-1}·ρ² tends to 1/8
            assert!((g.scaled[GROWTH_RUNGS - 1] - 0.125).abs() < 0.02);
        }
    }

    #[test]
    fn all_series_positive() {
        for n in 2..=6 {
            for m in 0..=4 {
                for rho in [0.05, 1.0, 10.0] {
                    assert!(num(n, m, rho).value > 0.0);
                    assert!(
                        s_closed_form(n, m as u32)
                            .unwrap()
                            .eval_at_rho(rho)
                            .unwrap()
                            > 0.0
                    );
                }
            }
        }
    }
}
