//! Constructive linearization of the globalized map `F̃ = Λ + f̃`.
//!
//! The conjugacy is `Φ = id + φ` with `Φ∘F̃ = Λ∘Φ`. Two solutions are
//! available. The bounded one ([`ConjugacyKind::Bounded`]) is the unique
//! solution with `φ` bounded, given by two convergent series:
//!
//! ```text
//! φ_u(x) =  Σ_{k≥0} P_u Λ^{−(k+1)} f̃(F̃^k(x))
//! φ_s(x) = −Σ_{k≥0} P_s Λ^k        f̃(F̃^{−(k+1)}(x))
//! ```
//!
//! Both are truncated once a geometric tail bound drops below the series
//! tolerance. It is in general only Hölder at 0: near the fixed point `φ`
//! has a log-periodic part of linear order. The normalized one
//! ([`ConjugacyKind::Normalized`], see [`chart`]) is tangent to the identity.
//!
//! The inverse `Ψ = Φ⁻¹` satisfies `Ψ∘Λ = F̃∘Ψ`; writing
//! `z = Ψ(y)`, the orbit relation `Ψ(Λ^k y) = F̃^k(z)` turns the split series
//! for `ψ` into `ψ(y) = −φ(z)`, so `z` is the fixed point of `z ↦ y − φ(z)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::GlobalizedMap;
use crate::error::{Error, Result};
use crate::space::{LinearOp, Norm, Point};
use crate::spectral::{geometric_bound, GeometricBound, HyperbolicSplitting, ADAPTED_POWER};

mod chart;

/// Which solution of `Φ∘F̃ = Λ∘Φ` the solver returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugacyKind {
    /// `Φ = id + O(‖x‖^{1+β})`, from linearizing charts on the invariant
    /// manifolds.
    #[default]
    Normalized,
    /// The unique conjugacy with `Φ − id` bounded.
    Bounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub kind: ConjugacyKind,
    pub series_tol: f64,
    pub max_terms: usize,
    /// Relative: inversion stops once `‖F̃(x) − y‖ ≤ inversion_tol·max(1, ‖y‖)`.
    pub inversion_tol: f64,
    pub inversion_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            kind: ConjugacyKind::Normalized,
            series_tol: 1e-10,
            max_terms: 5_000,
            inversion_tol: 1e-14,
            inversion_max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConjugacySolver {
    map: GlobalizedMap,
    splitting: HyperbolicSplitting,
    config: SolverConfig,
    stable_bound: GeometricBound,
    unstable_bound: GeometricBound,
    sup_f: f64,
    stable_terms: usize,
    unstable_terms: usize,
    ops: SplitOps,
    chart_len: usize,
}

/// `ΛP_s`, `Λ⁻¹P_s`, `ΛP_u`, `Λ⁻¹P_u` and the projectors.
#[derive(Debug, Clone)]
struct SplitOps {
    a_s: LinearOp,
    b_s: LinearOp,
    a_u: LinearOp,
    b_u: LinearOp,
    p_s: LinearOp,
    p_u: LinearOp,
}

impl ConjugacySolver {
    pub fn new(map: GlobalizedMap, splitting: HyperbolicSplitting, config: SolverConfig) -> Result<Self> {
        let n = map.space().dim();
        if splitting.dim() != n {
            return Err(Error::config(format!(
                "splitting has dimension {}, map has {n}",
                splitting.dim()
            )));
        }
        if splitting.linear().to_dense() != map.base().linear.to_dense() {
            return Err(Error::config("splitting was computed for a different linear part"));
        }
        if !(config.series_tol > 0.0 && config.inversion_tol > 0.0) {
            return Err(Error::config("solver tolerances must be positive"));
        }
        let norm = map.space().norm();
        let inv_norm = splitting.linear_inverse().op_norm(norm);
        let lip = map.lipschitz_bound();
        let budget = lip * inv_norm;
        if budget >= 1.0 {
            return Err(Error::config(format!(
                "contraction budget violated: Lip(f~) * ||Lambda^-1|| <= {lip} * {inv_norm} = {budget} >= 1"
            )));
        }
        let stable_bound = geometric_bound(&splitting.stable_part(), ADAPTED_POWER, norm)?;
        let unstable_bound = geometric_bound(&splitting.unstable_inverse_part(), ADAPTED_POWER, norm)?;
        let sup_f = map.sup_f_tilde_bound();
        let half = 0.5 * config.series_tol;
        // φ_s uses powers 0.., φ_u uses powers 1..
        let stable_terms = terms_needed(&stable_bound, sup_f, half, 0);
        let unstable_terms = terms_needed(&unstable_bound, sup_f, half, 1);
        let ops = SplitOps {
            a_s: splitting.stable_part(),
            b_s: splitting.linear_inverse().compose(splitting.p_s()),
            a_u: splitting.linear().compose(splitting.p_u()),
            b_u: splitting.unstable_inverse_part(),
            p_s: splitting.p_s().clone(),
            p_u: splitting.p_u().clone(),
        };
        let chart_len = chart::base_len(&stable_bound, &unstable_bound, config.series_tol);
        Ok(ConjugacySolver {
            map,
            splitting,
            config,
            stable_bound,
            unstable_bound,
            sup_f,
            stable_terms,
            unstable_terms,
            ops,
            chart_len,
        })
    }

    pub fn map(&self) -> &GlobalizedMap {
        &self.map
    }

    pub fn splitting(&self) -> &HyperbolicSplitting {
        &self.splitting
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn norm(&self) -> Norm {
        self.map.space().norm()
    }

    /// Terms summed in the stable and unstable series.
    pub fn series_terms(&self) -> (usize, usize) {
        (self.stable_terms, self.unstable_terms)
    }

    /// A priori bound on `sup ‖φ‖` for the bounded conjugacy.
    pub fn phi_sup_bound(&self) -> f64 {
        self.sup_f * (self.stable_bound.tail(0) + self.unstable_bound.tail(1))
    }

    /// Solves `F̃(x) = y` by iterating `x ← Λ⁻¹(y − f̃(x))` from `x₀ = Λ⁻¹y`.
    pub fn invert_f(&self, y: &Point) -> Result<Point> {
        self.map.space().check_point(y)?;
        self.invert_unchecked(y)
    }

    fn invert_unchecked(&self, y: &Point) -> Result<Point> {
        let lin = self.splitting.linear();
        let inv = self.splitting.linear_inverse();
        let norm = self.norm();
        // The residual is a difference of values of the bounded `f̃`, so the
        // target is absolute: deep backward orbits have huge strong-stable
        // coordinates that must not swamp the weak ones.
        let target = self.config.inversion_tol;
        let mut x = inv.apply(y);
        let mut residual = f64::INFINITY;
        for _ in 0..self.config.inversion_max_iters {
            let next = inv.apply(&(y - self.map.f_tilde(&x)));
            // F̃(x) − y = Λ(x − next)
            residual = norm.of(&lin.apply(&(&x - &next)));
            if !residual.is_finite() {
                break;
            }
            x = next;
            if residual <= target {
                return Ok(x);
            }
        }
        Err(Error::Numerical {
            context: "inverting F~",
            detail: format!("no convergence within {} iterations", self.config.inversion_max_iters),
            residual,
        })
    }

    fn check_terms(&self) -> Result<()> {
        let needed = self.stable_terms.max(self.unstable_terms);
        if needed > self.config.max_terms {
            return Err(Error::Numerical {
                context: "conjugacy series",
                detail: format!(
                    "tail bound needs {needed} terms, max_terms is {}",
                    self.config.max_terms
                ),
                residual: self.sup_f,
            });
        }
        Ok(())
    }

    /// `(P_s φ(x), P_u φ(x))`.
    pub fn phi_parts(&self, x: &Point) -> Result<(Point, Point)> {
        self.map.space().check_point(x)?;
        self.check_terms()?;
        let (phi_s, phi_u) = match self.config.kind {
            ConjugacyKind::Bounded => self.bounded_parts(x)?,
            ConjugacyKind::Normalized => self.normalized_parts(x)?,
        };
        if phi_s.iter().chain(phi_u.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                context: "conjugacy series",
                detail: "non-finite series term".into(),
                residual: f64::NAN,
            });
        }
        Ok((phi_s, phi_u))
    }

    fn bounded_parts(&self, x: &Point) -> Result<(Point, Point)> {
        let n = x.len();

        let mut phi_u = Point::zeros(n);
        if self.unstable_terms > 0 {
            let a_u = self.splitting.unstable_inverse_part();
            let mut orbit = x.clone();
            let mut values = Vec::with_capacity(self.unstable_terms);
            for k in 0..self.unstable_terms {
                if k > 0 {
                    orbit = self.map.eval_f_unchecked(&orbit);
                }
                values.push(self.map.f_tilde(&orbit));
            }
            // A_u(w₀ + A_u(w₁ + …))
            for w in values.iter().rev() {
                phi_u = a_u.apply(&(w + &phi_u));
            }
        }

        let mut phi_s = Point::zeros(n);
        if self.stable_terms > 0 {
            let a_s = self.splitting.stable_part();
            let mut orbit = x.clone();
            let mut values = Vec::with_capacity(self.stable_terms);
            for _ in 0..self.stable_terms {
                orbit = self.invert_unchecked(&orbit)?;
                values.push(self.map.f_tilde(&orbit));
            }
            // P_s(w₀ + A_s(w₁ + A_s(…))), since A_s^k = Λ^k P_s for k ≥ 1
            for w in values.iter().rev() {
                phi_s = w + a_s.apply(&phi_s);
            }
            phi_s = -self.splitting.p_s().apply(&phi_s);
        }
        Ok((phi_s, phi_u))
    }

    /// `φ(x) = Φ(x) − x`.
    pub fn phi(&self, x: &Point) -> Result<Point> {
        let (s, u) = self.phi_parts(x)?;
        Ok(s + u)
    }

    /// `Φ(x) = x + φ(x)`.
    pub fn conjugacy(&self, x: &Point) -> Result<Point> {
        Ok(x + self.phi(x)?)
    }

    /// `Ψ(y) = Φ⁻¹(y)`, from the fixed point of `z ↦ y − φ(z)`.
    pub fn phi_inverse(&self, y: &Point) -> Result<Point> {
        self.map.space().check_point(y)?;
        let norm = self.norm();
        let mut z = y.clone();
        let mut residual = f64::INFINITY;
        for _ in 0..self.config.inversion_max_iters {
            let next = y - self.phi(&z)?;
            // Φ(z) − y = z − next
            residual = norm.of(&(&z - &next));
            if !residual.is_finite() {
                break;
            }
            if residual <= self.config.series_tol {
                return Ok(z);
            }
            z = next;
        }
        Err(Error::Numerical {
            context: "inverting the conjugacy",
            detail: format!("no convergence within {} iterations", self.config.inversion_max_iters),
            residual,
        })
    }

    /// `‖Φ(F̃(x)) − ΛΦ(x)‖`.
    pub fn residual(&self, x: &Point) -> Result<f64> {
        self.map.space().check_point(x)?;
        let fx = self.map.eval_f_unchecked(x);
        let lhs = self.conjugacy(&fx)?;
        let rhs = self.splitting.linear().apply(&self.conjugacy(x)?);
        Ok(self.norm().of(&(lhs - rhs)))
    }

    /// `‖Φ(Ψ(y)) − y‖`.
    pub fn inverse_error(&self, y: &Point) -> Result<f64> {
        let z = self.phi_inverse(y)?;
        Ok(self.norm().of(&(self.conjugacy(&z)? - y)))
    }

    pub fn phi_batch(&self, xs: &[Point]) -> Result<Vec<Point>> {
        xs.par_iter().map(|x| self.phi(x)).collect()
    }

    pub fn residual_batch(&self, xs: &[Point]) -> Result<Vec<f64>> {
        xs.par_iter().map(|x| self.residual(x)).collect()
    }
}

/// Smallest `K` with `sup_f·Σ_{j ≥ K + offset} ‖A^j‖ < tol`.
fn terms_needed(bound: &GeometricBound, sup_f: f64, tol: f64, offset: usize) -> usize {
    if sup_f == 0.0 || bound.constant == 0.0 {
        return 0;
    }
    if bound.rate == 0.0 {
        // nilpotent: powers vanish from ADAPTED_POWER on
        return ADAPTED_POWER as usize;
    }
    let mut k = 0usize;
    while sup_f * bound.tail(k + offset) >= tol {
        k += 1;
        if k > 1_000_000 {
            break;
        }
    }
    k
}
