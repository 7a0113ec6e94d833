//! Adaptive composite Gauss–Legendre quadrature on a finite interval.
//!
//! Each panel is compared against the sum over its two halves; a panel is
//! accepted once the two estimates differ by less than its share
//! `abs_tol·width/(b - a)` of the absolute tolerance.

use crate::error::{Error, Result};
use crate::qseries::CompensatedSum;

pub const DEFAULT_ORDER: usize = 20;
pub const INITIAL_PANELS: usize = 16;
pub const PANEL_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights of the `order`-point rule on `[-1, 1]`, by Newton
    /// iteration on `P_order`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let nf = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if order == 1 { x } else { p1 };
                let pm1 = if order == 1 { 1.0 } else { p0 };
                deriv = nf * (x * p - pm1) / (x * x - 1.0);
                let dx = p / deriv;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = x;
            weights[i] = w;
            nodes[order - 1 - i] = -x;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = CompensatedSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(mid + half * x));
        }
        half * acc.value()
    }
}

impl Default for GaussLegendre {
    fn default() -> Self {
        Self::new(DEFAULT_ORDER)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Relative to a coarse first estimate of the integral.
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Sum of accepted panel refinement differences.
    pub error_estimate: f64,
    pub panels: usize,
}

pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    budget: usize,
) -> Result<QuadratureResult> {
    if !(b > a) {
        return Err(Error::Domain {
            name: "b - a",
            value: b - a,
            expected: "b > a",
        });
    }
    let width = b - a;
    let step = width / INITIAL_PANELS as f64;
    let mut stack: Vec<(f64, f64, f64)> = (0..INITIAL_PANELS)
        .map(|i| {
            let x0 = a + step * i as f64;
            let x1 = if i + 1 == INITIAL_PANELS {
                b
            } else {
                x0 + step
            };
            (x0, x1, rule.integrate(&f, x0, x1))
        })
        .collect();
    let abs_tol = match tol {
        Tolerance::Absolute(t) => t,
        Tolerance::Relative(t) => {
            let coarse: f64 = stack.iter().map(|p| p.2).sum();
            t * coarse.abs()
        }
    };
    let mut panels = INITIAL_PANELS;
    let mut value = CompensatedSum::default();
    let mut error = 0.0;
    while let Some((x0, x1, whole)) = stack.pop() {
        let mid = 0.5 * (x0 + x1);
        let left = rule.integrate(&f, x0, mid);
        let right = rule.integrate(&f, mid, x1);
        panels += 2;
        let diff = (left + right - whole).abs();
        let share = abs_tol * (x1 - x0) / width;
        // the second clause stops refinement once the panel is at rounding level
        if diff <= share || (x1 - x0) <= 64.0 * f64::EPSILON * x0.abs().max(x1.abs()) {
            value.add(left + right);
            error += diff;
            continue;
        }
        if panels >= budget {
            return Err(Error::QuadratureBudget { budget });
        }
        stack.push((mid, x1, right));
        stack.push((x0, mid, left));
    }
    Ok(QuadratureResult {
        value: value.value(),
        error_estimate: error,
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(DEFAULT_ORDER);
        let total: f64 = rule.weights().iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // ∫_0^1 x^39 dx = 1/40, degree 2·20 - 1
        let v = rule.integrate(&|x: f64| x.powi(39), 0.0, 1.0);
        assert!((v - 1.0 / 40.0).abs() < 1e-15);
        let three = GaussLegendre::new(3);
        assert!((three.nodes()[0] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((three.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let rule = GaussLegendre::default();
        // ∫_0^π e^{-(x/0.01)^2} dx ≈ 0.01·√π/2
        let res = integrate_adaptive(
            &rule,
            |x| (-(x / 0.01).powi(2)).exp(),
            0.0,
            std::f64::consts::PI,
            Tolerance::Relative(1e-12),
            PANEL_BUDGET,
        )
        .unwrap();
        let exact = 0.01 * std::f64::consts::PI.sqrt() / 2.0;
        assert!((res.value - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn budget_is_enforced() {
        let rule = GaussLegendre::new(2);
        let res = integrate_adaptive(
            &rule,
            |x: f64| (1.0 / x).sin(),
            1e-9,
            1.0,
            Tolerance::Absolute(1e-15),
            200,
        );
        assert_eq!(res, Err(Error::QuadratureBudget { budget: 200 }));
    }

    #[test]
    fn rejects_empty_interval() {
        let rule = GaussLegendre::default();
        assert!(
            integrate_adaptive(&rule, |x| x, 1.0, 1.0, Tolerance::Absolute(1e-9), 100).is_err()
        );
    }
}
