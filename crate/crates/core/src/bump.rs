//! Smooth scalar bump functions.
//!
//! The construction is the mollifier quotient
//! `h(τ) = g(r₂ − |τ|) / (g(r₂ − |τ|) + g(|τ| − r₁))` with `g(s) = exp(−1/s)`
//! for `s > 0` and `g(s) = 0` otherwise. On the transition band it is
//! evaluated in the equivalent logistic form `h = 1 / (1 + e^{ψ})` with
//! `ψ(u) = 1/(r₂ − u) − 1/(u − r₁)`, which never forms `0/0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points used by [`BumpFunction::sup_abs_deriv`].
pub const SUP_GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    plateau_radius: f64,
    support_radius: f64,
    derivative_sup_order1: f64,
}

/// Result of a sampled sup estimate of `|h^{(k)}|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivSup {
    /// Largest value found; a lower bound for the true supremum.
    pub value: f64,
    /// Where it was attained.
    pub argmax: f64,
    /// Spacing of the sampling grid before polishing.
    pub resolution: f64,
}

impl BumpFunction {
    /// Builds the bump equal to 1 on `|τ| ≤ r₁` and 0 on `|τ| ≥ r₂`.
    pub fn new(plateau_radius: f64, support_radius: f64) -> Result<Self> {
        if !(plateau_radius > 0.0 && plateau_radius.is_finite()) {
            return Err(Error::config(format!(
                "bump plateau radius must be positive, got {plateau_radius}"
            )));
        }
        if !(support_radius > plateau_radius && support_radius.is_finite()) {
            return Err(Error::config(format!(
                "bump support radius {support_radius} must exceed plateau radius {plateau_radius}"
            )));
        }
        let mut h = BumpFunction {
            plateau_radius,
            support_radius,
            derivative_sup_order1: 0.0,
        };
        h.derivative_sup_order1 = h.sup_abs_deriv_with(1, SUP_GRID_POINTS).value;
        Ok(h)
    }

    pub fn plateau_radius(&self) -> f64 {
        self.plateau_radius
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Cached estimate of `sup |h′|`.
    pub fn sup_deriv1(&self) -> f64 {
        self.derivative_sup_order1
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let u = tau.abs();
        if u <= self.plateau_radius {
            1.0
        } else if u >= self.support_radius {
            0.0
        } else {
            1.0 / (1.0 + self.exponent(u).exp())
        }
    }

    /// Analytic derivative of order 1 or 2. Zero on the plateau and outside
    /// the support, where all one-sided limits vanish.
    pub fn deriv(&self, tau: f64, order: u8) -> f64 {
        let u = tau.abs();
        if u <= self.plateau_radius || u >= self.support_radius {
            return 0.0;
        }
        let (r1, r2) = (self.plateau_radius, self.support_radius);
        let p = self.exponent(u);
        let h = 1.0 / (1.0 + p.exp());
        let one_minus_h = 1.0 / (1.0 + (-p).exp());
        let (a, b) = (r2 - u, u - r1);
        let dp = 1.0 / (a * a) + 1.0 / (b * b);
        let hh = h * one_minus_h;
        let d1 = -hh * dp;
        match order {
            1 => tau.signum() * d1,
            2 => {
                let d2p = 2.0 / (a * a * a) - 2.0 / (b * b * b);
                // (h(1-h))' = h'(1-2h)
                -(d1 * (1.0 - 2.0 * h) * dp + hh * d2p)
            }
            _ => panic!("bump derivative order must be 1 or 2, got {order}"),
        }
    }

    /// Sup of `|h^{(order)}|` over the transition band by dense sampling
    /// followed by golden-section polish around the sampled maximizer.
    pub fn sup_abs_deriv(&self, order: u8) -> DerivSup {
        self.sup_abs_deriv_with(order, SUP_GRID_POINTS)
    }

    pub fn sup_abs_deriv_with(&self, order: u8, grid_points: usize) -> DerivSup {
        assert!(order == 1 || order == 2, "order must be 1 or 2");
        let (r1, r2) = (self.plateau_radius, self.support_radius);
        let n = grid_points.max(3);
        let step = (r2 - r1) / n as f64;
        let f = |u: f64| self.deriv(u, order).abs();

        let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
        for i in 1..n {
            let v = f(r1 + step * i as f64);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        let lo = r1 + step * (best_i as f64 - 1.0);
        let hi = r1 + step * (best_i as f64 + 1.0);
        let (arg, val) = golden_max(f, lo, hi, 1e-13);
        let (value, argmax) = if val >= best {
            (val, arg)
        } else {
            (best, r1 + step * best_i as f64)
        };
        DerivSup {
            value,
            argmax,
            resolution: step,
        }
    }

    fn exponent(&self, u: f64) -> f64 {
        1.0 / (self.support_radius - u) - 1.0 / (u - self.plateau_radius)
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
