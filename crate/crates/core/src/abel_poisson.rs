//! The Abel–Poisson wavelet `Ψ_ρ^A` with Gegenbauer coefficients
//! `((λ+l)/λ)·√(2ρl)·e^{-ρl}`.
//!
//! With `q = e^{-2ρ}` and `S_m = S_{n,m}(ρ)` the variances reduce to
//!
//! ```text
//! A = S_2/λ + S_1
//! B = Σ_{l>=1} ((l+2λ)/λ)·binom(l+2λ-1, l)·√(l(l+1))·q^l
//! C = S_4/λ + 3S_3 + 2λS_2
//! var_S = (e^ρ·A/B)² - 1,    var_M = C/A.
//! ```
//!
//! `A` and `C` come from the exact closed forms; `B` has none and is summed.
//! Writing `B = S_2/λ + (1/(2λ) + 2)S_1 + (1 - 1/(8λ))S_0 + R` defines the
//! rest term `R`, and `R = α/ρ^{n-2}` with `S_0` replaced by `(1-q)^{1-n}`
//! defines `α`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::localization::{
    report, space_from_ratio, CoefficientSequence, ComputationPath, DecayBound, Estimate,
    LocalizationReport,
};
use crate::qseries::{
    check_rho, check_rho_floor, s2_minus1_closed, s_closed_form, s_numeric, sum_certified,
    Majorant, QRational, SeriesIndex, SummationResult,
};
use crate::special_fn::Lambda;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbelPoissonWavelet {
    n: u32,
    rho: f64,
    #[serde(skip)]
    lam: Lambda,
}

impl AbelPoissonWavelet {
    pub fn new(n: u32, rho: f64) -> Result<Self> {
        let lam = Lambda::from_dimension(n)?;
        check_rho(rho)?;
        Ok(Self { n, rho, lam })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> Lambda {
        self.lam
    }

    pub fn coefficient(&self, l: u64) -> f64 {
        coefficient(self.lam.value(), self.rho, l)
    }

    /// `K = (1 + 1/λ)·√(2ρ)`, `p = 3/2`, `δ = ρ`.
    pub fn decay_bound(&self) -> DecayBound {
        DecayBound {
            scale: (1.0 + 1.0 / self.lam.value()) * (2.0 * self.rho).sqrt(),
            power: 1.5,
            rate: self.rho,
        }
    }
}

fn coefficient(lam: f64, rho: f64, l: u64) -> f64 {
    let lf = l as f64;
    (lam + lf) / lam * (2.0 * rho * lf).sqrt() * (-rho * lf).exp()
}

pub fn ap_coefficients(w: &AbelPoissonWavelet) -> CoefficientSequence {
    let (lam, rho) = (w.lam.value(), w.rho);
    CoefficientSequence::analytic(move |l| coefficient(lam, rho, l), w.decay_bound())
        .expect("the Abel-Poisson coefficients satisfy their own decay bound")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ABCValues {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_err: f64,
    pub b_err: f64,
    pub c_err: f64,
}

fn closed_form(n: u32, m: u32) -> Result<QRational> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), QRational>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().expect("cache lock").get(&(n, m)) {
        return Ok(r.clone());
    }
    let r = s_closed_form(n, m)?;
    cache.lock().expect("cache lock").insert((n, m), r.clone());
    Ok(r)
}

/// `S_{n,m}(ρ)` from the closed form, with an evaluation error bound.
///
/// For `m >= 1` every numerator coefficient is nonnegative, so Horner
/// evaluation has no cancellation.
fn s_closed(n: u32, m: u32, rho: f64) -> Result<Estimate> {
    let r = closed_form(n, m)?;
    let value = r.eval_at_rho(rho)?;
    let ops = r.numerator().degree().unwrap_or(0)
        + r.cofactor().degree().unwrap_or(0)
        + r.pole_order() as usize;
    Ok(Estimate {
        value,
        error: (2 * ops + 8) as f64 * f64::EPSILON * value.abs(),
    })
}

fn combine(parts: &[(f64, Estimate)]) -> Estimate {
    parts.iter().fold(
        Estimate {
            value: 0.0,
            error: 0.0,
        },
        |acc, (c, s)| Estimate {
            value: acc.value + c * s.value,
            error: acc.error + c.abs() * s.error + 2.0 * f64::EPSILON * (c * s.value).abs(),
        },
    )
}

fn b_series(w: &AbelPoissonWavelet, tol: f64) -> Result<SummationResult> {
    check_rho_floor(w.rho)?;
    let lam = w.lam;
    let lv = lam.value();
    let rho = w.rho;
    sum_certified(
        1,
        |l| {
            let lf = l as f64;
            (lf + 2.0 * lv) / lv
                * lam.binom_weight(l)
                * (lf * (lf + 1.0)).sqrt()
                * (-2.0 * rho * lf).exp()
        },
        &Majorant {
            scale: 2.0 * (1.0 + 2.0 * lv) / lv,
            binom_order: lam.twice(),
            power: 2.0,
            rate: 2.0 * rho,
        },
        tol,
        f64::from(2 * lam.twice() + 12) * f64::EPSILON,
    )
}

pub fn ap_abc(w: &AbelPoissonWavelet, tol: f64) -> Result<ABCValues> {
    let (n, rho) = (w.n, w.rho);
    let lv = w.lam.value();
    let s: Vec<Estimate> = (1..=4)
        .map(|m| s_closed(n, m, rho))
        .collect::<Result<_>>()?;
    let a = combine(&[(1.0 / lv, s[1]), (1.0, s[0])]);
    let c = combine(&[(1.0 / lv, s[3]), (3.0, s[2]), (2.0 * lv, s[1])]);
    let b = b_series(w, tol)?;
    Ok(ABCValues {
        a: a.value,
        b: b.value,
        c: c.value,
        a_err: a.error,
        b_err: b.tail_bound,
        c_err: c.error,
    })
}

fn var_space_from_abc(w: &AbelPoissonWavelet, abc: &ABCValues, tol: f64) -> Result<Estimate> {
    let scale = w.rho.exp();
    space_from_ratio(
        scale * abc.a,
        scale * abc.a_err + f64::EPSILON * scale * abc.a,
        abc.b,
        abc.b_err,
        tol,
    )
}

pub fn ap_var_space_estimate(w: &AbelPoissonWavelet, tol: f64) -> Result<Estimate> {
    var_space_from_abc(w, &ap_abc(w, tol)?, tol)
}

/// `(e^ρ·A/B)² - 1`.
pub fn ap_var_space(w: &AbelPoissonWavelet, tol: f64) -> Result<f64> {
    ap_var_space_estimate(w, tol).map(|e| e.value)
}

/// `C/A` from the series decomposition.
pub fn ap_var_momentum_series(w: &AbelPoissonWavelet) -> Result<Estimate> {
    let lv = w.lam.value();
    let s: Vec<Estimate> = (1..=4)
        .map(|m| s_closed(w.n, m, w.rho))
        .collect::<Result<_>>()?;
    let a = combine(&[(1.0 / lv, s[1]), (1.0, s[0])]);
    let c = combine(&[(1.0 / lv, s[3]), (3.0, s[2]), (2.0 * lv, s[1])]);
    let value = c.value / a.value;
    Ok(Estimate {
        value,
        error: value * (c.error / c.value + a.error / a.value + f64::EPSILON),
    })
}

/// `n(n+1)[n + (n+3)E + E²]E / ([n-1 + (n+1)E](E-1)²)` with `E = e^{2ρ}`,
/// evaluated in `e^{-2ρ}` so that it neither overflows nor cancels.
pub fn ap_var_momentum_closed(w: &AbelPoissonWavelet) -> f64 {
    let n = f64::from(w.n);
    let e = (-2.0 * w.rho).exp();
    let gap = -(-2.0 * w.rho).exp_m1();
    n * (n + 1.0) * (n * e * e + (n + 3.0) * e + 1.0) / (((n - 1.0) * e + n + 1.0) * gap * gap)
}

fn momentum_closed_estimate(w: &AbelPoissonWavelet) -> Estimate {
    let value = ap_var_momentum_closed(w);
    Estimate {
        value,
        error: 16.0 * f64::EPSILON * value,
    }
}

/// `√(var_S·var_M)` with `var_S` from the series route and `var_M` closed.
pub fn ap_uncertainty(w: &AbelPoissonWavelet, tol: f64) -> Result<f64> {
    ap_report(w, tol).map(|r| r.uncertainty)
}

pub fn ap_report(w: &AbelPoissonWavelet, tol: f64) -> Result<LocalizationReport> {
    let space = ap_var_space_estimate(w, tol)?;
    Ok(report(
        w.n,
        space,
        momentum_closed_estimate(w),
        ComputationPath::CoefficientLemma,
    ))
}

/// `½·√((n+1)(n+2)(n²-3n+3)/(n(n-1)))`, the value of `U` as `ρ → 0`.
pub fn ap_limit_uncertainty(n: u32) -> Result<f64> {
    Lambda::from_dimension(n)?;
    let n = f64::from(n);
    Ok(0.5 * ((n + 1.0) * (n + 2.0) * (n * n - 3.0 * n + 3.0) / (n * (n - 1.0))).sqrt())
}

/// Small-`ρ` predictions `(var_S ≈ c·ρ², var_M ≈ a/ρ² + b/ρ)`.
pub fn ap_asymptotics(n: u32, rho: f64) -> Result<(f64, f64)> {
    Lambda::from_dimension(n)?;
    check_rho(rho)?;
    let n = f64::from(n);
    let var_s = (n * n - 3.0 * n + 3.0) / (n * (n - 1.0)) * rho * rho;
    let var_m = (n * n + 3.0 * n + 2.0) / (4.0 * rho * rho) + (n * n - 1.0) / (2.0 * n * rho);
    Ok((var_s, var_m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestTerm {
    pub r: f64,
    /// `¼·S_{n,-1}(ρ)`.
    pub bound: f64,
    pub r_err: f64,
    pub bound_err: f64,
}

/// `S_{n,-1}(ρ)`, closed for `n = 2` and summed otherwise.
pub fn s_minus1(n: u32, rho: f64, tol: f64) -> Result<Estimate> {
    if n == 2 {
        let value = s2_minus1_closed(rho)?;
        return Ok(Estimate {
            value,
            error: 8.0 * f64::EPSILON * value,
        });
    }
    let s = s_numeric(&SeriesIndex::new(n, -1, rho)?, tol)?;
    Ok(Estimate {
        value: s.value,
        error: s.tail_bound,
    })
}

/// `R(ρ)` summed term by term as
/// `Σ binom·q^l·[((l+2λ)/λ)·δ_l - 1/(4l)]` with
/// `δ_l = √(l(l+1)) - l - ½ + 1/(8l) = (√(l(l+1)) - l + ½) / (8l(√(l(l+1)) + l + ½))`.
fn rest_series(w: &AbelPoissonWavelet, tol: f64) -> Result<SummationResult> {
    check_rho_floor(w.rho)?;
    let lam = w.lam;
    let lv = lam.value();
    let rho = w.rho;
    sum_certified(
        1,
        |l| {
            let lf = l as f64;
            let s = (lf * (lf + 1.0)).sqrt();
            let s_minus_l = lf / (s + lf);
            let delta = (s_minus_l + 0.5) / (8.0 * lf * (s + lf + 0.5));
            let bracket = (lf + 2.0 * lv) / lv * delta - 0.25 / lf;
            lam.binom_weight(l) * (-2.0 * rho * lf).exp() * bracket
        },
        &Majorant {
            scale: 0.25,
            binom_order: lam.twice(),
            power: -1.0,
            rate: 2.0 * rho,
        },
        tol,
        f64::from(2 * lam.twice() + 24) * f64::EPSILON,
    )
}

/// `R(ρ)` together with the bound `¼·S_{n,-1}(ρ)`; a violation of
/// `|R| <= ¼·S_{n,-1}` beyond the error estimates is an error.
pub fn ap_rest_term(n: u32, rho: f64, tol: f64) -> Result<RestTerm> {
    let w = AbelPoissonWavelet::new(n, rho)?;
    let r = rest_series(&w, tol)?;
    let s = s_minus1(n, rho, tol)?;
    let out = RestTerm {
        r: r.value,
        bound: 0.25 * s.value,
        r_err: r.tail_bound,
        bound_err: 0.25 * s.error,
    };
    if out.r.abs() > out.bound + out.r_err + out.bound_err {
        return Err(Error::BoundViolation {
            rho,
            detail: format!(
                "n = {n}: |R| = {:e} (± {:e}) exceeds S_{{n,-1}}/4 = {:e} (± {:e})",
                out.r.abs(),
                out.r_err,
                out.bound,
                out.bound_err
            ),
        });
    }
    Ok(out)
}

/// `B - [S_2/λ + (1/(2λ) + 2)S_1 + (1 - 1/(8λ))S_0]`, by subtraction.
///
/// Loses relative accuracy as `ρ → 0`; used as an independent check of
/// the term-by-term route.
pub fn rest_term_by_subtraction(w: &AbelPoissonWavelet, tol: f64) -> Result<f64> {
    let lv = w.lam.value();
    let b = b_series(w, tol)?;
    let s0 = closed_form(w.n, 0)?.eval_at_rho(w.rho)?;
    let s1 = s_closed(w.n, 1, w.rho)?.value;
    let s2 = s_closed(w.n, 2, w.rho)?.value;
    Ok(b.value - (s2 / lv + (0.5 / lv + 2.0) * s1 + (1.0 - 0.125 / lv) * s0))
}

/// `α(ρ) = R̃(ρ)·ρ^{n-2}`, where `R̃ = R - (1 - 1/(8λ))` is the rest term
/// once `S_0 = (1-q)^{1-n} - 1` is replaced by `(1-q)^{1-n}`.
pub fn ap_alpha_extract(n: u32, rho: f64, tol: f64) -> Result<f64> {
    let lam = Lambda::from_dimension(n)?;
    let rest = ap_rest_term(n, rho, tol)?;
    let shifted = rest.r - (1.0 - 0.125 / lam.value());
    Ok(shifted * rho.powi(n as i32 - 2))
}

/// `var_S` from the closed expression in `ρ`, `e^{2ρ}` and `α(ρ)`:
///
/// ```text
/// P = ρ^n·[1 - 2(4n²-6n+3)E - (4n-5)E²] + 4(n-1)(1-e^{-2ρ})^n·α·ρ²·(E - E²)
/// var_S = 16(n-1)²·[n-1 + (n+1)E]²·ρ^{2n}·E / P² - 1
/// ```
pub fn ap_var_space_from_alpha(n: u32, rho: f64, alpha: f64) -> Result<f64> {
    Lambda::from_dimension(n)?;
    check_rho(rho)?;
    let nf = f64::from(n);
    let big_e = (2.0 * rho).exp();
    let rho_n = rho.powi(n as i32);
    let gap_n = (-(-2.0 * rho).exp_m1()).powi(n as i32);
    let p = rho_n
        * (1.0 - 2.0 * (4.0 * nf * nf - 6.0 * nf + 3.0) * big_e - (4.0 * nf - 5.0) * big_e * big_e)
        + 4.0 * (nf - 1.0) * gap_n * alpha * rho * rho * (big_e - big_e * big_e);
    let r = 4.0 * (nf - 1.0) * (nf - 1.0 + (nf + 1.0) * big_e) * rho_n * rho.exp() / p.abs();
    Ok((r - 1.0) * (r + 1.0))
}
