//! Space and momentum variances of zonal functions on `S^n`.
//!
//! A zonal `f` is given by its Gegenbauer coefficients,
//! `f(cos ϑ) = Σ_l ĥ(l)·C_l^λ(cos ϑ)` with `λ = (n - 1)/2`. Two independent
//! routes are provided:
//!
//! * the coefficient identities
//!   ```text
//!   ‖f‖²    ∝ Σ_{l>=0} λ/(l+λ) · binom(l+2λ-1, l) · ĥ(l)²
//!   ∫x₁|f|² ∝ Σ_{l>=0} binom(l+2λ, l) · λ² · 2ĥ(l)ĥ(l+1) / ((l+λ)(l+λ+1))
//!   -⟨Δ*f, f⟩ ∝ Σ_{l>=1} l(l+2λ) · λ/(l+λ) · binom(l+2λ-1, l) · ĥ(l)²
//!   ```
//!   giving `var_S = (‖f‖²/∫x₁|f|²)² - 1` and `var_M = -⟨Δ*f, f⟩/‖f‖²`;
//! * one-dimensional quadrature of the integral definitions in `ϑ`, with
//!   derivatives taken term by term through `d/dt C_l^λ = 2λ·C_{l-1}^{λ+1}`.
//!
//! Coefficients are real throughout.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qseries::{sum_certified, sum_finite, Majorant, SummationResult};
use crate::quadrature::{integrate_adaptive, GaussLegendre, Tolerance, PANEL_BUDGET};
use crate::special_fn::{gegenbauer_series_unchecked, Lambda};

/// Number of leading degrees checked against a supplied decay bound.
pub const DECAY_SPOT_CHECK: u64 = 10_000;

/// Distance from the poles excluded from the momentum integral.
///
/// The zonal integrand `Δ*f·f·sin^{n-1}ϑ` is bounded, so the two excluded
/// caps carry at most `2ε^n/n` times its supremum, below `1e-12` for `n >= 2`.
pub const POLE_CUTOFF: f64 = 1e-6;

/// `|ĥ(l)| <= scale · l^power · e^{-rate·l}` for every `l >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    pub scale: f64,
    pub power: f64,
    pub rate: f64,
}

impl DecayBound {
    pub fn at(&self, l: u64) -> f64 {
        if l == 0 {
            return self.scale;
        }
        let lf = l as f64;
        self.scale * (self.power * lf.ln() - self.rate * lf).exp()
    }

    fn admits(&self, l: u64, value: f64) -> bool {
        // subnormals carry no relative precision to compare against
        if value.abs() < f64::MIN_POSITIVE {
            return true;
        }
        let lf = l as f64;
        let log_bound = self.scale.ln() + self.power * lf.ln() - self.rate * lf;
        value.abs().ln() <= log_bound + 1e-12
    }
}

type CoeffFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Finite(Vec<f64>),
    Analytic { coeff: CoeffFn, bound: DecayBound },
}

/// Real Gegenbauer coefficients `l ↦ ĥ(l)`.
#[derive(Clone)]
pub struct CoefficientSequence {
    kind: Kind,
}

impl fmt::Debug for CoefficientSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Finite(c) => f.debug_tuple("Finite").field(c).finish(),
            Kind::Analytic { bound, .. } => {
                f.debug_struct("Analytic").field("bound", bound).finish()
            }
        }
    }
}

impl CoefficientSequence {
    /// Finitely many coefficients `ĥ(0), …, ĥ(L)`, zero beyond.
    pub fn finite(coeffs: Vec<f64>) -> Self {
        Self {
            kind: Kind::Finite(coeffs),
        }
    }

    /// `ĥ(l0) = value`, every other coefficient zero.
    pub fn single_mode(l0: usize, value: f64) -> Self {
        let mut c = vec![0.0; l0 + 1];
        c[l0] = value;
        Self::finite(c)
    }

    /// An infinite sequence with an exponential decay certificate.
    ///
    /// The bound is spot-checked for `1 <= l <= 10⁴`.
    pub fn analytic<F>(coeff: F, bound: DecayBound) -> Result<Self>
    where
        F: Fn(u64) -> f64 + Send + Sync + 'static,
    {
        if !(bound.rate > 0.0) || !bound.rate.is_finite() {
            return Err(Error::Domain {
                name: "decay rate",
                value: bound.rate,
                expected: "0 < rate < inf",
            });
        }
        if !(bound.scale >= 0.0) || !bound.scale.is_finite() || !bound.power.is_finite() {
            return Err(Error::Domain {
                name: "decay scale",
                value: bound.scale,
                expected: "finite scale >= 0 and finite power",
            });
        }
        for l in 1..=DECAY_SPOT_CHECK {
            let v = coeff(l);
            if !v.is_finite() || !bound.admits(l, v) {
                return Err(Error::DecayCertificate {
                    degree: l,
                    value: v.abs(),
                    bound: bound.at(l),
                });
            }
        }
        Ok(Self {
            kind: Kind::Analytic {
                coeff: Arc::new(coeff),
                bound,
            },
        })
    }

    pub fn coeff(&self, l: u64) -> f64 {
        match &self.kind {
            Kind::Finite(c) => usize::try_from(l)
                .ok()
                .and_then(|i| c.get(i))
                .copied()
                .unwrap_or(0.0),
            Kind::Analytic { coeff, .. } => coeff(l),
        }
    }

    pub fn decay(&self) -> Option<&DecayBound> {
        match &self.kind {
            Kind::Finite(_) => None,
            Kind::Analytic { bound, .. } => Some(bound),
        }
    }

    /// Highest degree that can be nonzero, `None` for infinite sequences.
    pub fn last_degree(&self) -> Option<u64> {
        match &self.kind {
            Kind::Finite(c) => Some(c.len().saturating_sub(1) as u64),
            Kind::Analytic { .. } => None,
        }
    }

    /// Every coefficient multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match &self.kind {
            Kind::Finite(v) => Self::finite(v.iter().map(|x| x * c).collect()),
            Kind::Analytic { coeff, bound } => {
                let inner = Arc::clone(coeff);
                Self {
                    kind: Kind::Analytic {
                        coeff: Arc::new(move |l| c * inner(l)),
                        bound: DecayBound {
                            scale: bound.scale * c.abs(),
                            ..*bound
                        },
                    },
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputationPath {
    CoefficientLemma,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub n: u32,
    pub var_space: f64,
    pub var_momentum: f64,
    pub uncertainty: f64,
    pub path: ComputationPath,
    /// Absolute error estimate for `uncertainty`.
    pub error_estimate: f64,
}

impl LocalizationReport {
    /// `U - n/2`.
    pub fn lower_bound_margin(&self) -> f64 {
        self.uncertainty - f64::from(self.n) / 2.0
    }

    pub fn satisfies_lower_bound(&self) -> bool {
        self.lower_bound_margin() >= -self.error_estimate
    }
}

/// A value together with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn term_error(lam: Lambda) -> f64 {
    f64::from(4 * lam.twice() + 16) * f64::EPSILON
}

/// `Σ_{l>=first} term(l)`, finite or certified according to the sequence.
fn lemma_sum<F>(
    seq: &CoefficientSequence,
    first: u64,
    finite_last: impl Fn(u64) -> Option<u64>,
    term: F,
    majorant: impl Fn(&DecayBound) -> Majorant,
    lam: Lambda,
    tol: f64,
) -> Result<SummationResult>
where
    F: FnMut(u64) -> f64,
{
    match (&seq.kind, seq.last_degree()) {
        (Kind::Analytic { bound, .. }, _) => {
            sum_certified(first, term, &majorant(bound), tol, term_error(lam))
        }
        (Kind::Finite(_), Some(last)) => match finite_last(last) {
            Some(last) if last >= first => Ok(sum_finite(first, last, term, term_error(lam))),
            _ => Ok(SummationResult::exact(0.0, 0)),
        },
        (Kind::Finite(_), None) => unreachable!("finite sequences have a last degree"),
    }
}

fn norm_series(seq: &CoefficientSequence, lam: Lambda, tol: f64) -> Result<SummationResult> {
    let lv = lam.value();
    lemma_sum(
        seq,
        0,
        Some,
        |l| {
            let h = seq.coeff(l);
            lv / (l as f64 + lv) * lam.binom_weight(l) * h * h
        },
        |b| Majorant {
            scale: b.scale * b.scale,
            binom_order: lam.twice(),
            power: 2.0 * b.power,
            rate: 2.0 * b.rate,
        },
        lam,
        tol,
    )
}

fn moment_series(seq: &CoefficientSequence, lam: Lambda, tol: f64) -> Result<SummationResult> {
    let lv = lam.value();
    // binom(l + 2λ, l) is the weight of the order λ + 1/2
    let up = Lambda::from_dimension(lam.dimension() + 1)?;
    lemma_sum(
        seq,
        0,
        |last| last.checked_sub(1),
        |l| {
            let lf = l as f64;
            let hh = seq.coeff(l) * seq.coeff(l + 1);
            up.binom_weight(l) * lv * lv * 2.0 * hh / ((lf + lv) * (lf + lv + 1.0))
        },
        |b| Majorant {
            scale: 2.0 * b.scale * b.scale * 2f64.powf(b.power.max(0.0)) * (-b.rate).exp(),
            binom_order: up.twice(),
            power: 2.0 * b.power,
            rate: 2.0 * b.rate,
        },
        lam,
        tol,
    )
}

fn momentum_series(seq: &CoefficientSequence, lam: Lambda, tol: f64) -> Result<SummationResult> {
    let lv = lam.value();
    lemma_sum(
        seq,
        1,
        Some,
        |l| {
            let lf = l as f64;
            let h = seq.coeff(l);
            // the norm term times the eigenvalue l(l + 2λ), which is exact in f64
            lv / (lf + lv) * lam.binom_weight(l) * h * h * (lf * (lf + 2.0 * lv))
        },
        |b| Majorant {
            scale: 2.0 * lv * b.scale * b.scale,
            binom_order: lam.twice(),
            power: 2.0 * b.power + 1.0,
            rate: 2.0 * b.rate,
        },
        lam,
        tol,
    )
}

fn nonzero_norm(norm: &SummationResult) -> Result<()> {
    if norm.value <= norm.tail_bound || norm.value <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(())
}

/// `(N/M)² - 1` with clamping of rounding-level negatives.
pub(crate) fn space_from_ratio(
    norm: f64,
    norm_err: f64,
    moment: f64,
    moment_err: f64,
    tol: f64,
) -> Result<Estimate> {
    let r = norm / moment;
    let rel = norm_err / norm + moment_err / moment.abs() + 4.0 * f64::EPSILON;
    // (r - 1)(r + 1) keeps the relative accuracy of r - 1 near r = 1
    let value = (r.abs() - 1.0) * (r.abs() + 1.0);
    let error = 2.0 * r * r * rel;
    if value < 0.0 {
        if value >= -tol.max(error) {
            log::warn!("clamping var_S = {value:e} to zero (error estimate {error:e})");
            return Ok(Estimate { value: 0.0, error });
        }
        return Err(Error::NegativeVariance {
            value,
            tolerance: tol.max(error),
        });
    }
    Ok(Estimate { value, error })
}

pub fn var_space_coeff_estimate(
    seq: &CoefficientSequence,
    lam: Lambda,
    tol: f64,
) -> Result<Estimate> {
    let norm = norm_series(seq, lam, tol)?;
    nonzero_norm(&norm)?;
    let moment = moment_series(seq, lam, tol)?;
    if moment.value.abs() <= moment.tail_bound {
        return Err(Error::CenterOfMassZero {
            moment: moment.value,
            bound: moment.tail_bound,
        });
    }
    space_from_ratio(
        norm.value,
        norm.tail_bound,
        moment.value,
        moment.tail_bound,
        tol,
    )
}

pub fn var_momentum_coeff_estimate(
    seq: &CoefficientSequence,
    lam: Lambda,
    tol: f64,
) -> Result<Estimate> {
    let norm = norm_series(seq, lam, tol)?;
    nonzero_norm(&norm)?;
    let num = momentum_series(seq, lam, tol)?;
    let value = num.value / norm.value;
    let error = value
        * (num.tail_bound / num.value.abs().max(f64::MIN_POSITIVE) + norm.tail_bound / norm.value)
        + if num.value == 0.0 {
            num.tail_bound / norm.value
        } else {
            0.0
        };
    Ok(Estimate { value, error })
}

/// `var_S` through the coefficient identities.
pub fn var_space_coeff(seq: &CoefficientSequence, lam: Lambda, tol: f64) -> Result<f64> {
    var_space_coeff_estimate(seq, lam, tol).map(|e| e.value)
}

/// `var_M` through the coefficient identities.
pub fn var_momentum_coeff(seq: &CoefficientSequence, lam: Lambda, tol: f64) -> Result<f64> {
    var_momentum_coeff_estimate(seq, lam, tol).map(|e| e.value)
}

pub(crate) fn report(
    n: u32,
    space: Estimate,
    momentum: Estimate,
    path: ComputationPath,
) -> LocalizationReport {
    let uncertainty = (space.value * momentum.value).sqrt();
    let rel = 0.5 * (space.error / space.value + momentum.error / momentum.value);
    let error_estimate = if rel.is_finite() {
        uncertainty * rel
    } else {
        f64::INFINITY
    };
    LocalizationReport {
        n,
        var_space: space.value,
        var_momentum: momentum.value,
        uncertainty,
        path,
        error_estimate,
    }
}

pub fn uncertainty_product(
    seq: &CoefficientSequence,
    lam: Lambda,
    tol: f64,
) -> Result<LocalizationReport> {
    let space = var_space_coeff_estimate(seq, lam, tol)?;
    let momentum = var_momentum_coeff_estimate(seq, lam, tol)?;
    Ok(report(
        lam.dimension(),
        space,
        momentum,
        ComputationPath::CoefficientLemma,
    ))
}

/// A zonal function truncated at degree `L`, with its first two
/// derivatives in `t = cos ϑ`.
#[derive(Debug, Clone)]
pub struct ZonalFunction {
    coefficients: CoefficientSequence,
    lam: Lambda,
    truncation_degree: u64,
    truncation_bound: f64,
    values: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl ZonalFunction {
    /// Truncates where the neglected part of `Σ |ĥ(l)|·C_l^λ(1)·(1 + l(l+2λ))`,
    /// which dominates `f` and its `ϑ`-derivatives in sup norm, falls below
    /// `tol/10` of the kept part.
    pub fn new(coefficients: CoefficientSequence, lam: Lambda, tol: f64) -> Result<Self> {
        let lv = lam.value();
        let (last, tail) = match (coefficients.decay(), coefficients.last_degree()) {
            (_, Some(last)) => (last, 0.0),
            (Some(b), None) => {
                let majorant = Majorant {
                    scale: b.scale * (2.0 + 2.0 * lv),
                    binom_order: lam.twice(),
                    power: b.power + 2.0,
                    rate: b.rate,
                };
                let res = sum_certified(
                    0,
                    |l| {
                        let lf = l as f64;
                        coefficients.coeff(l).abs()
                            * lam.binom_weight(l)
                            * (1.0 + lf * (lf + 2.0 * lv))
                    },
                    &majorant,
                    tol / 10.0,
                    term_error(lam),
                )?;
                (
                    res.terms_used - 1,
                    res.tail_bound / res.value.abs().max(f64::MIN_POSITIVE),
                )
            }
            (None, None) => unreachable!("infinite sequences carry a decay bound"),
        };
        let values: Vec<f64> = (0..=last).map(|l| coefficients.coeff(l)).collect();
        let first = values.iter().skip(1).map(|a| 2.0 * lv * a).collect();
        let second = values
            .iter()
            .skip(2)
            .map(|a| 4.0 * lv * (lv + 1.0) * a)
            .collect();
        Ok(Self {
            coefficients,
            lam,
            truncation_degree: last,
            truncation_bound: tail,
            values,
            first,
            second,
        })
    }

    pub fn lambda(&self) -> Lambda {
        self.lam
    }

    pub fn coefficients(&self) -> &CoefficientSequence {
        &self.coefficients
    }

    pub fn truncation_degree(&self) -> u64 {
        self.truncation_degree
    }

    /// Relative sup-norm bound on the discarded tail.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    /// `F(t) = Σ_{l<=L} ĥ(l)·C_l^λ(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        gegenbauer_series_unchecked(&self.values, self.lam.value(), t)
    }

    /// `F'(t) = 2λ·Σ ĥ(l+1)·C_l^{λ+1}(t)`.
    pub fn d1(&self, t: f64) -> f64 {
        gegenbauer_series_unchecked(&self.first, self.lam.raised(1).value(), t)
    }

    /// `F''(t) = 4λ(λ+1)·Σ ĥ(l+2)·C_l^{λ+2}(t)`.
    pub fn d2(&self, t: f64) -> f64 {
        gegenbauer_series_unchecked(&self.second, self.lam.raised(2).value(), t)
    }
}

fn sin_power(theta: f64, k: u32) -> f64 {
    theta.sin().powi(k as i32)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    Ok(())
}

fn quadrature_norm(f: &ZonalFunction, rule: &GaussLegendre, tol: f64) -> Result<Estimate> {
    let k = f.lam.twice();
    let res = integrate_adaptive(
        rule,
        |th: f64| {
            let v = f.eval(th.cos());
            v * v * sin_power(th, k)
        },
        0.0,
        std::f64::consts::PI,
        Tolerance::Relative(tol),
        PANEL_BUDGET,
    )?;
    if !(res.value > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(Estimate {
        value: res.value,
        error: res.error_estimate + f.truncation_bound * 2.0 * res.value,
    })
}

pub fn var_space_quadrature_estimate(f: &ZonalFunction, tol: f64) -> Result<Estimate> {
    check_tol(tol)?;
    let rule = GaussLegendre::default();
    let norm = quadrature_norm(f, &rule, tol)?;
    let k = f.lam.twice();
    let moment = integrate_adaptive(
        &rule,
        |th: f64| {
            let t = th.cos();
            let v = f.eval(t);
            t * v * v * sin_power(th, k)
        },
        0.0,
        std::f64::consts::PI,
        Tolerance::Absolute(tol * norm.value),
        PANEL_BUDGET,
    )?;
    let bound = moment.error_estimate + tol * norm.value;
    if moment.value.abs() <= bound {
        return Err(Error::CenterOfMassZero {
            moment: moment.value,
            bound,
        });
    }
    space_from_ratio(norm.value, norm.error, moment.value, bound, tol)
}

pub fn var_momentum_quadrature_estimate(f: &ZonalFunction, tol: f64) -> Result<Estimate> {
    check_tol(tol)?;
    let rule = GaussLegendre::default();
    let norm = quadrature_norm(f, &rule, tol)?;
    let k = f.lam.twice();
    let n = f64::from(f.lam.dimension());
    let energy = integrate_adaptive(
        &rule,
        |th: f64| {
            let (s, c) = th.sin_cos();
            let d1 = f.d1(c);
            // f' = -sin ϑ·F', f'' = sin²ϑ·F'' - cos ϑ·F'
            let fp = -s * d1;
            let fpp = s * s * f.d2(c) - c * d1;
            let lap = fpp + (n - 1.0) * (c / s) * fp;
            -lap * f.eval(c) * sin_power(th, k)
        },
        POLE_CUTOFF,
        std::f64::consts::PI - POLE_CUTOFF,
        Tolerance::Relative(tol),
        PANEL_BUDGET,
    )?;
    let value = energy.value / norm.value;
    let error = energy.error_estimate / norm.value + value.abs() * (tol + norm.error / norm.value);
    Ok(Estimate { value, error })
}

/// `var_S` from the integral definition.
pub fn var_space_quadrature(f: &ZonalFunction, tol: f64) -> Result<f64> {
    var_space_quadrature_estimate(f, tol).map(|e| e.value)
}

/// `var_M` from the integral definition.
pub fn var_momentum_quadrature(f: &ZonalFunction, tol: f64) -> Result<f64> {
    var_momentum_quadrature_estimate(f, tol).map(|e| e.value)
}

pub fn uncertainty_product_quadrature(f: &ZonalFunction, tol: f64) -> Result<LocalizationReport> {
    let space = var_space_quadrature_estimate(f, tol)?;
    let momentum = var_momentum_quadrature_estimate(f, tol)?;
    Ok(report(
        f.lam.dimension(),
        space,
        momentum,
        ComputationPath::Quadrature,
    ))
}
