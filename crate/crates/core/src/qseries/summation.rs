//! Truncated summation of positive-rate exponential series with a certified
//! geometric tail bound.

use serde::Serialize;

use crate::error::{Error, Result};

/// Hard cap on the number of terms any certified sum may use.
pub const TERM_BUDGET: u64 = 1 << 28;

/// A truncated series value.
///
/// `tail_bound` covers the discarded tail plus a floating-point allowance for
/// the kept terms, so the exact sum lies in `value ± tail_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummationResult {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: u64,
}

impl SummationResult {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tail_bound
    }

    pub fn exact(value: f64, terms_used: u64) -> Self {
        Self {
            value,
            tail_bound: 0.0,
            terms_used,
        }
    }
}

/// Dominating sequence `g(l) = scale · binom(l + k - 1, l) · l^power · e^{-rate·l}`.
///
/// With `k >= 1` the ratio `g(l+1)/g(l)` is bounded above, for every
/// `l >= L >= 1`, by `(L + k)/(L + 1) · max(1, ((L+1)/L)^power) · e^{-rate}`.
/// `k = 1` drops the binomial factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Majorant {
    pub scale: f64,
    pub binom_order: u32,
    pub power: f64,
    pub rate: f64,
}

impl Majorant {
    pub fn at(&self, l: u64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        if l == 0 {
            return if self.power > 0.0 { 0.0 } else { self.scale };
        }
        let lf = l as f64;
        let mut log = self.scale.ln() + self.power * lf.ln() - self.rate * lf;
        for j in 1..self.binom_order {
            let j = f64::from(j);
            log += ((lf + j) / j).ln();
        }
        log.exp()
    }

    pub fn ratio_bound(&self, from: u64) -> f64 {
        let l = from.max(1) as f64;
        let k = f64::from(self.binom_order.max(1));
        let binom = (l + k) / (l + 1.0);
        let power = if self.power > 0.0 {
            ((l + 1.0) / l).powf(self.power)
        } else {
            1.0
        };
        binom * power * (-self.rate).exp()
    }

    pub fn tail_after(&self, l: u64) -> Option<f64> {
        let r = self.ratio_bound(l);
        (r < 1.0).then(|| self.at(l) * r / (1.0 - r))
    }
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums `term(l)` for `l = first, first + 1, …` until the majorant certifies
/// a tail below `tol · |partial sum|` (or below `tol` while the partial sum is
/// still zero).
///
/// `term_rel_err` is the caller's bound on the relative rounding error of a
/// single evaluated term; it feeds the floating-point part of `tail_bound`.
/// `majorant` must dominate `|term(l)|` for every `l >= 1` past the stopping
/// index.
pub fn sum_certified<F>(
    first: u64,
    term: F,
    majorant: &Majorant,
    tol: f64,
    term_rel_err: f64,
) -> Result<SummationResult>
where
    F: FnMut(u64) -> f64,
{
    sum_certified_within(first, term, majorant, tol, term_rel_err, TERM_BUDGET)
}

pub(crate) fn sum_certified_within<F>(
    first: u64,
    mut term: F,
    majorant: &Majorant,
    tol: f64,
    term_rel_err: f64,
    budget: u64,
) -> Result<SummationResult>
where
    F: FnMut(u64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut l = first;
    let mut used = 0u64;
    loop {
        let a = term(l);
        acc.add(a);
        abs_sum += a.abs();
        used += 1;
        if l >= 1 {
            if let Some(tail) = majorant.tail_after(l) {
                let partial = acc.value();
                let threshold = if partial != 0.0 {
                    tol * partial.abs()
                } else {
                    tol
                };
                if tail <= threshold {
                    let rounding = (term_rel_err + 2.0 * f64::EPSILON) * abs_sum;
                    return Ok(SummationResult {
                        value: partial,
                        tail_bound: tail + rounding,
                        terms_used: used,
                    });
                }
            }
        }
        if used >= budget {
            return Err(Error::SummationBudget { budget });
        }
        l += 1;
    }
}

/// Exact finite sum over `first..=last` with the same rounding allowance.
pub fn sum_finite<F>(first: u64, last: u64, mut term: F, term_rel_err: f64) -> SummationResult
where
    F: FnMut(u64) -> f64,
{
    let mut acc = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut used = 0;
    for l in first..=last {
        let a = term(l);
        acc.add(a);
        abs_sum += a.abs();
        used += 1;
    }
    SummationResult {
        value: acc.value(),
        tail_bound: (term_rel_err + 2.0 * f64::EPSILON) * abs_sum,
        terms_used: used,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_is_certified() {
        let q: f64 = 0.5;
        let maj = Majorant {
            scale: 1.0,
            binom_order: 1,
            power: 0.0,
            rate: -q.ln(),
        };
        let res = sum_certified(1, |l| q.powi(l as i32), &maj, 1e-14, 4.0 * f64::EPSILON).unwrap();
        assert!(res.contains(1.0));
        assert!(res.tail_bound < 1e-13);
    }

    #[test]
    fn ratio_bound_dominates_actual_ratio() {
        let maj = Majorant {
            scale: 2.0,
            binom_order: 4,
            power: 3.0,
            rate: 0.1,
        };
        for from in 1..200 {
            let r = maj.ratio_bound(from);
            for l in from..from + 50 {
                assert!(maj.at(l + 1) <= r * maj.at(l) * (1.0 + 1e-12));
            }
        }
        let neg = Majorant { power: -1.0, ..maj };
        for l in 1..100 {
            assert!(neg.at(l + 1) <= neg.ratio_bound(l) * neg.at(l) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let maj = Majorant {
            scale: 1.0,
            binom_order: 1,
            power: 0.0,
            rate: 0.0,
        };
        let mut calls = 0u64;
        let res = sum_certified_within(
            1,
            |_| {
                calls += 1;
                0.0
            },
            &maj,
            1e-12,
            0.0,
            10_000,
        );
        assert_eq!(res, Err(Error::SummationBudget { budget: 10_000 }));
        assert_eq!(calls, 10_000);
    }
}
