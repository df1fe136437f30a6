//! Linearizing charts on the invariant manifolds of `F̃`, and the conjugacy
//! tangent to the identity built from them.
//!
//! For `ζ ∈ E_s`, the point of the stable manifold above `ζ` and its forward
//! orbit `x_n` solve a Lyapunov–Perron system. The Koenigs sum along that
//! orbit,
//!
//! ```text
//! k_s(ζ) = ζ + Σ_{n≥0} Λ^{−(n+1)} P_s f̃(x_n),
//! ```
//!
//! linearizes `F̃` on the stable manifold: `k_s(P_s F̃ x) = Λ k_s(P_s x)` for
//! `x` on it. `k_u` is the mirror image along backward orbits on the unstable
//! manifold. Both are the identity up to `O(‖·‖^{1+α})`, and so is
//!
//! ```text
//! Φ(x) = lim_J Λ^{−J} k_u(P_u F̃^J x) + lim_J Λ^J k_s(P_s F̃^{−J} x).
//! ```
//!
//! The limits converge geometrically because `k_u∘P_u` is exactly
//! equivariant on the unstable manifold and forward orbits approach it (and
//! symmetrically for the stable part).

use super::{ConjugacySolver, SplitOps};
use crate::error::{Error, Result};
use crate::space::{LinearOp, Point};
use crate::spectral::GeometricBound;

/// Lyapunov–Perron iterations stop once the values of `f̃` along the orbit
/// move by less than this fraction of `series_tol`.
const ORBIT_TOL_FACTOR: f64 = 1e-3;
/// Iterations run past the stopping test, to settle strongly contracted
/// components whose weight in the Koenigs sum is large.
const ORBIT_EXTRA_ITERS: usize = 2;
/// Smallest depth at which the limits are tested.
const MIN_LIMIT_DEPTH: usize = 8;
/// Koenigs tails must fall below this fraction of `series_tol`.
const CHART_TOL_FACTOR: f64 = 1e-2;
/// Successive limit estimates must agree to this fraction of `series_tol`.
const LIMIT_TOL_FACTOR: f64 = 0.1;

/// Orbit length that takes a point of norm at most one down to
/// `ORBIT_TOL_FACTOR·series_tol` under the slower of the two contractions.
pub(super) fn base_len(stable: &GeometricBound, unstable: &GeometricBound, series_tol: f64) -> usize {
    let rate = stable.rate.max(unstable.rate);
    let constant = stable.constant.max(unstable.constant).max(1.0);
    if rate <= 0.0 {
        return 1;
    }
    let target = ORBIT_TOL_FACTOR * series_tol / constant;
    (target.ln() / rate.ln()).ceil().max(1.0) as usize
}

/// `a^times·v`, applied step by step so that huge powers of a factor never
/// meet tiny vectors.
fn apply_times(a: &LinearOp, v: &Point, times: usize) -> Point {
    (0..times).fold(v.clone(), |w, _| a.apply(&w))
}

/// Stopping rule of the Lyapunov–Perron iteration.
struct OrbitSettle {
    tol: f64,
    max_iters: usize,
    iters: usize,
    extra: usize,
    change: f64,
}

impl OrbitSettle {
    fn new(solver: &ConjugacySolver) -> Self {
        OrbitSettle {
            tol: ORBIT_TOL_FACTOR * solver.config.series_tol,
            max_iters: solver.config.inversion_max_iters,
            iters: 0,
            extra: 0,
            change: f64::INFINITY,
        }
    }

    /// `Some(true)` when settled, `Some(false)` on failure, `None` to go on.
    fn step(&mut self, change: f64) -> Option<bool> {
        self.iters += 1;
        self.change = change;
        if !change.is_finite() {
            return Some(false);
        }
        if change <= self.tol {
            self.extra += 1;
            if self.extra > ORBIT_EXTRA_ITERS {
                return Some(true);
            }
        }
        (self.iters >= self.max_iters).then_some(false)
    }
}

impl SplitOps {
    fn stable_step(&self, s: &Point, f: &Point) -> Point {
        self.a_s.apply(s) + self.p_s.apply(f)
    }
}

impl ConjugacySolver {
    fn orbit_len(&self, scale: f64) -> Result<usize> {
        let rate = self.stable_bound.rate.max(self.unstable_bound.rate);
        let reach = self.map.reach();
        let entry = if scale > reach && rate > 0.0 {
            ((scale / reach).ln() / -rate.ln()).ceil() as usize
        } else {
            0
        };
        let len = self.chart_len + entry;
        if len > self.config.max_terms {
            return Err(Error::Numerical {
                context: "invariant manifold orbit",
                detail: format!("orbit needs {len} points, max_terms is {}", self.config.max_terms),
                residual: scale,
            });
        }
        Ok(len)
    }

    /// Forward orbit `x_0..=x_len` on the stable manifold with `P_s x_0 = ζ`.
    fn stable_orbit(&self, zeta: &Point, len: usize) -> Result<Vec<Point>> {
        let ops = &self.ops;
        if self.splitting.unstable_dim() == 0 {
            let mut xs = Vec::with_capacity(len + 1);
            xs.push(zeta.clone());
            for k in 0..len {
                xs.push(self.map.eval_f_unchecked(&xs[k]));
            }
            return Ok(xs);
        }
        let n = zeta.len();
        let mut xs = Vec::with_capacity(len + 1);
        xs.push(zeta.clone());
        for k in 0..len {
            let next = ops.a_s.apply(&xs[k]);
            xs.push(next);
        }
        let mut fs: Vec<Point> = xs[..len].iter().map(|x| self.map.f_tilde(x)).collect();
        let mut settle = OrbitSettle::new(self);
        loop {
            let mut s = Vec::with_capacity(len + 1);
            s.push(zeta.clone());
            for k in 0..len {
                let next = ops.stable_step(&s[k], &fs[k]);
                s.push(next);
            }
            let mut u = Point::zeros(n);
            for k in (0..=len).rev() {
                if k < len {
                    u = ops.b_u.apply(&(&u - &fs[k]));
                }
                xs[k] = &s[k] + &u;
            }
            let next: Vec<Point> = xs[..len].iter().map(|x| self.map.f_tilde(x)).collect();
            let done = settle.step(self.max_change(&fs, &next));
            fs = next;
            match done {
                Some(true) => return Ok(xs),
                Some(false) => break,
                None => {}
            }
        }
        Err(Error::Numerical {
            context: "stable manifold orbit",
            detail: format!("no convergence within {} iterations", self.config.inversion_max_iters),
            residual: settle.change,
        })
    }

    /// Backward orbit `y_0..=y_len` on the unstable manifold with `P_u y_0 = η`.
    fn unstable_orbit(&self, eta: &Point, len: usize) -> Result<Vec<Point>> {
        let ops = &self.ops;
        if self.splitting.stable_dim() == 0 {
            let mut ys = Vec::with_capacity(len + 1);
            ys.push(eta.clone());
            for m in 0..len {
                let prev = self.invert_unchecked(&ys[m])?;
                ys.push(prev);
            }
            return Ok(ys);
        }
        let n = eta.len();
        let mut ys = Vec::with_capacity(len + 1);
        ys.push(eta.clone());
        for m in 0..len {
            let prev = ops.b_u.apply(&ys[m]);
            ys.push(prev);
        }
        // fs[m] = f̃(y_{m+1})
        let mut fs: Vec<Point> = ys[1..].iter().map(|y| self.map.f_tilde(y)).collect();
        let mut settle = OrbitSettle::new(self);
        loop {
            let mut u = Vec::with_capacity(len + 1);
            u.push(eta.clone());
            for m in 0..len {
                // y_m = F̃(y_{m+1}) ⇒ P_u y_{m+1} = Λ⁻¹P_u(y_m − f̃(y_{m+1}))
                let prev = ops.b_u.apply(&(&u[m] - &fs[m]));
                u.push(prev);
            }
            let mut s = Point::zeros(n);
            for m in (0..=len).rev() {
                if m < len {
                    s = ops.stable_step(&s, &fs[m]);
                }
                ys[m] = &s + &u[m];
            }
            let next: Vec<Point> = ys[1..].iter().map(|y| self.map.f_tilde(y)).collect();
            let done = settle.step(self.max_change(&fs, &next));
            fs = next;
            match done {
                Some(true) => return Ok(ys),
                Some(false) => break,
                None => {}
            }
        }
        Err(Error::Numerical {
            context: "unstable manifold orbit",
            detail: format!("no convergence within {} iterations", self.config.inversion_max_iters),
            residual: settle.change,
        })
    }

    fn max_change(&self, old: &[Point], new: &[Point]) -> f64 {
        let norm = self.norm();
        old.iter()
            .zip(new)
            .map(|(a, b)| norm.of(&(b - a)))
            .fold(0.0, f64::max)
    }

    fn chart_tail_error(&self, last: f64, scale: f64, context: &'static str) -> Result<()> {
        let tol = CHART_TOL_FACTOR * self.config.series_tol * scale.max(1.0);
        if last.is_finite() && last <= tol {
            return Ok(());
        }
        Err(Error::Numerical {
            context,
            detail: format!(
                "Koenigs sum has not converged (last term {last:e}); the spectral annulus may be too wide for this chart"
            ),
            residual: last,
        })
    }

    /// `k_s(ζ)` for `ζ ∈ E_s`.
    pub(super) fn stable_chart(&self, zeta: &Point) -> Result<Point> {
        if self.splitting.stable_dim() == 0 {
            return Ok(Point::zeros(zeta.len()));
        }
        let scale = self.norm().of(zeta);
        let len = self.orbit_len(scale)?;
        let xs = self.stable_orbit(zeta, len)?;
        let b_s = &self.ops.b_s;
        let mut acc = Point::zeros(zeta.len());
        let mut last = Point::zeros(zeta.len());
        for k in (0..len).rev() {
            let w = self.map.f_tilde(&xs[k]);
            if k == len - 1 {
                last = w.clone();
            }
            acc = b_s.apply(&(w + acc));
        }
        let tail = self.norm().of(&apply_times(b_s, &last, len));
        self.chart_tail_error(tail, scale, "stable chart")?;
        Ok(zeta + acc)
    }

    /// `k_u(η)` for `η ∈ E_u`.
    pub(super) fn unstable_chart(&self, eta: &Point) -> Result<Point> {
        if self.splitting.unstable_dim() == 0 {
            return Ok(Point::zeros(eta.len()));
        }
        let scale = self.norm().of(eta);
        let len = self.orbit_len(scale)?;
        let ys = self.unstable_orbit(eta, len)?;
        let ops = &self.ops;
        let mut acc = Point::zeros(eta.len());
        let mut last = Point::zeros(eta.len());
        for m in (1..=len).rev() {
            let w = ops.p_u.apply(&self.map.f_tilde(&ys[m]));
            if m == len {
                last = w.clone();
            }
            acc = w + ops.a_u.apply(&acc);
        }
        let tail = self.norm().of(&apply_times(&ops.a_u, &last, len - 1));
        self.chart_tail_error(tail, scale, "unstable chart")?;
        Ok(eta - acc)
    }

    /// `(P_s φ(x), P_u φ(x))` for the normalized conjugacy.
    pub(super) fn normalized_parts(&self, x: &Point) -> Result<(Point, Point)> {
        let ops = &self.ops;
        if self.splitting.unstable_dim() == 0 {
            return Ok((self.stable_chart(x)? - x, Point::zeros(x.len())));
        }
        if self.splitting.stable_dim() == 0 {
            return Ok((Point::zeros(x.len()), self.unstable_chart(x)? - x));
        }
        let big_u = self.limit(x, &ops.b_u, &ops.p_u, |y| Ok(self.map.eval_f_unchecked(y)), |eta| {
            self.unstable_chart(eta)
        })?;
        let big_s = self.limit(x, &ops.a_s, &ops.p_s, |z| self.invert_unchecked(z), |zeta| {
            self.stable_chart(zeta)
        })?;
        Ok((big_s - ops.p_s.apply(x), big_u - ops.p_u.apply(x)))
    }

    /// `lim_J A^J chart(P T^J x)`, checked by agreement of depths `J` and
    /// `J + 1`. Testing starts once the orbit has left the region where `f̃`
    /// can be nonzero, and never below [`MIN_LIMIT_DEPTH`].
    fn limit(
        &self,
        x: &Point,
        a: &LinearOp,
        p: &LinearOp,
        step: impl Fn(&Point) -> Result<Point>,
        chart: impl Fn(&Point) -> Result<Point>,
    ) -> Result<Point> {
        let tol = LIMIT_TOL_FACTOR * self.config.series_tol;
        let norm = self.norm();
        let exit = 2.0 * self.map.reach();
        let mut orbit = x.clone();
        let mut reached = 0usize;
        while reached < self.config.max_terms && norm.of(&p.apply(&orbit)) <= exit && norm.of(&orbit) > 0.0 {
            if reached >= MIN_LIMIT_DEPTH && norm.of(&p.apply(&orbit)) == 0.0 {
                break;
            }
            orbit = step(&orbit)?;
            reached += 1;
        }
        let mut depth = reached.max(MIN_LIMIT_DEPTH);
        let mut diff = f64::INFINITY;
        while depth < self.config.max_terms {
            while reached < depth {
                orbit = step(&orbit)?;
                reached += 1;
            }
            let next = step(&orbit)?;
            let power = a.pow(depth as u32);
            let here = power.apply(&chart(&p.apply(&orbit))?);
            let there = a.compose(&power).apply(&chart(&p.apply(&next))?);
            diff = self.norm().of(&(&there - &here));
            if diff <= tol {
                return Ok(there);
            }
            depth += depth.div_ceil(2);
        }
        Err(Error::Numerical {
            context: "conjugacy limit",
            detail: format!("no agreement within {} iterates", self.config.max_terms),
            residual: diff,
        })
    }
}
