//! Globalization of a locally defined nonlinearity through a blid map,
//! `f̃(x) = f(δ·H(x/δ))`, and the sampled checks that the smallness and
//! Hölder bounds on `Df` carry over to `Df̃`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blid::{BlidMap, SupEstimate, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::poly::Nonlinearity;
use crate::space::{log_spaced, LinearOp, Point, SpaceDesc};

/// Relative slack allowed when an empirical sup is compared with a declared bound.
pub const BOUND_REL_TOL: f64 = 1e-9;
/// Points closer to the origin than this are skipped by the Hölder quotient.
pub const QUOTIENT_MIN_NORM: f64 = 1e-10;

/// `F = Λ + f` together with the constants declared for `Df` on the ball
/// `‖x‖ ≤ domain_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub space: SpaceDesc,
    pub linear: LinearOp,
    pub nonlinear: Nonlinearity,
    /// Hölder exponent `α ∈ (0, 1]`.
    pub alpha: f64,
    pub domain_radius: f64,
    /// Declared `M ≥ sup ‖Df(x)‖ / ‖x‖^α` on the ball.
    pub holder_constant: f64,
    /// Declared `δ_η ≥ sup ‖Df(x)‖` on the ball.
    pub smallness: f64,
}

impl MapSpec {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        let n = self.space.dim();
        if self.linear.dim() != n {
            return Err(Error::config(format!(
                "linear part has dimension {}, space has {n}",
                self.linear.dim()
            )));
        }
        if let LinearOp::Dense(m) = &self.linear {
            if !m.is_square() {
                return Err(Error::config("linear part must be square"));
            }
        }
        self.nonlinear.validate(&self.space)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.domain_radius > 0.0 && self.domain_radius.is_finite()) {
            return Err(Error::config("domain_radius must be positive"));
        }
        if !(self.holder_constant >= 0.0 && self.holder_constant.is_finite()) {
            return Err(Error::config("holder constant M must be non-negative"));
        }
        if !(self.smallness > 0.0 && self.smallness.is_finite()) {
            return Err(Error::config("smallness bound delta_eta must be positive"));
        }
        Ok(())
    }

    pub fn eval_f(&self, x: &Point) -> Point {
        self.nonlinear.eval(x)
    }
}

#[derive(Debug, Clone)]
pub struct GlobalizedMap {
    base: MapSpec,
    blid: BlidMap,
    delta: f64,
    m_bound: f64,
}

/// Builds `f̃(x) = f(δ·H(x/δ))`.
///
/// Refuses cutoff scales with `δ·c₀ > domain_radius`, since `f` would then be
/// evaluated outside the ball where its constants were declared.
pub fn globalize(base: MapSpec, blid: BlidMap, delta: f64) -> Result<GlobalizedMap> {
    base.validate()?;
    if blid.space() != &base.space {
        return Err(Error::config("blid map and nonlinear map live on different spaces"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::config(format!("cutoff scale delta must be positive, got {delta}")));
    }
    let reach = delta * blid.c0();
    if reach > base.domain_radius {
        return Err(Error::config(format!(
            "cutoff budget violated: delta * c0 = {reach} exceeds domain_radius = {}",
            base.domain_radius
        )));
    }
    // two branches: ratio 1 below the identity radius, c0/δ₀ above it
    let m_bound = blid.c1().max(blid.c0() / blid.identity_radius());
    Ok(GlobalizedMap {
        base,
        blid,
        delta,
        m_bound,
    })
}

/// The cutoff scale that places `δ·c₀` at half the declared domain radius.
pub fn default_delta(base: &MapSpec, blid: &BlidMap) -> f64 {
    base.domain_radius / (2.0 * blid.c0())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(empirical: f64, bound: f64) -> Self {
        let pass = empirical.is_finite() && empirical <= bound * (1.0 + BOUND_REL_TOL);
        BoundCheck {
            empirical,
            bound,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MEstimate {
    pub estimate: SupEstimate,
    /// `max(c₁, c₀/δ₀)`.
    pub bound: f64,
    /// Samples that fell inside the identity region `‖x‖ < δ·δ₀`.
    pub identity_samples: usize,
    /// Every identity-region sample had ratio exactly 1.
    pub identity_branch_ok: bool,
    /// Every sample with `‖x/δ‖ ≥ δ₀` had ratio at most `c₀·δ/‖x‖`.
    pub far_branch_ok: bool,
    /// Largest ratio among samples at the top of the sweep, `‖x‖ = 10⁴·δ`.
    pub far_ratio: f64,
}

impl MEstimate {
    pub fn pass(&self) -> bool {
        self.estimate.value.is_finite()
            && self.estimate.value <= self.bound * (1.0 + BOUND_REL_TOL)
            && self.identity_samples > 0
            && self.identity_branch_ok
            && self.far_branch_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreconditionCheck {
    /// Sampled `sup ‖Df‖` on the declared ball against `δ_η`.
    pub smallness: BoundCheck,
    /// Sampled `sup ‖Df(x)‖/‖x‖^α` on the declared ball against `M`.
    pub holder: BoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub precondition: PreconditionCheck,
    /// `sup ‖Df̃‖` over the whole space against `δ_η·c₁`.
    pub smallness: BoundCheck,
    /// `sup ‖Df̃(x)‖/‖x‖^α` against `M·c₁·m^α`.
    pub holder: BoundCheck,
    pub m: MEstimate,
    pub c1: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
}

impl TransferReport {
    /// Both transferred inequalities hold.
    pub fn pass(&self) -> bool {
        self.smallness.pass && self.holder.pass && self.m.pass()
    }
}

impl GlobalizedMap {
    pub fn base(&self) -> &MapSpec {
        &self.base
    }

    pub fn blid(&self) -> &BlidMap {
        &self.blid
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn space(&self) -> &SpaceDesc {
        &self.base.space
    }

    /// Declared bound on `sup ‖δH(x/δ)‖/‖x‖`.
    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    /// Radius of the ball on which `f̃ = f`.
    pub fn identity_radius(&self) -> f64 {
        self.delta * self.blid.identity_radius()
    }

    /// Every argument handed to `f` lies in the ball of this radius.
    pub fn reach(&self) -> f64 {
        self.delta * self.blid.c0()
    }

    /// `δ_η·c₁`, the declared Lipschitz bound of `f̃`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.base.smallness * self.blid.c1()
    }

    /// Upper bound of `sup ‖f̃‖`, read off the coefficient table.
    pub fn sup_f_tilde_bound(&self) -> f64 {
        self.base
            .nonlinear
            .sup_bound_on_ball(self.reach(), self.space().norm())
    }

    pub fn f_tilde(&self, x: &Point) -> Point {
        let y = self.blid.scaled_eval(x, self.delta);
        self.base.nonlinear.eval(&y)
    }

    /// `Df̃(x) = Df(δH(x/δ))·DH(x/δ)`.
    pub fn f_tilde_jacobian(&self, x: &Point) -> LinearOp {
        let u = x / self.delta;
        let y = self.blid.scaled_eval(x, self.delta);
        self.base
            .nonlinear
            .jacobian(&y)
            .compose(&self.blid.jacobian(&u))
    }

    pub fn f_tilde_dderiv(&self, x: &Point, v: &Point) -> Result<Point> {
        self.space().check_point(x)?;
        self.space().check_point(v)?;
        Ok(self.f_tilde_jacobian(x).apply(v))
    }

    /// `F̃(x) = Λx + f̃(x)`.
    pub fn eval_f(&self, x: &Point) -> Result<Point> {
        self.space().check_point(x)?;
        Ok(self.eval_f_unchecked(x))
    }

    pub(crate) fn eval_f_unchecked(&self, x: &Point) -> Point {
        self.base.linear.apply(x) + self.f_tilde(x)
    }

    /// Empirical `sup ‖δH(x/δ)‖/‖x‖` over radii from `10⁻⁸·δ` to `10⁴·δ`.
    pub fn estimate_m(&self, samples: usize, seed: u64) -> Result<MEstimate> {
        check_samples(samples)?;
        let pts = self.sweep(samples, 1e-8 * self.delta, 1e4 * self.delta, seed);
        let space = *self.space();
        let id_r = self.identity_radius();
        let eps = self.blid.identity_radius();
        let c0 = self.blid.c0();
        let top = 1e4 * self.delta;

        let rows: Vec<(f64, f64)> = pts
            .par_iter()
            .map(|x| {
                let nx = space.norm_of(x);
                (nx, space.norm_of(&self.blid.scaled_eval(x, self.delta)) / nx)
            })
            .collect();

        let mut value = 0.0f64;
        let mut identity_samples = 0;
        let mut identity_branch_ok = true;
        let mut far_branch_ok = true;
        let mut far_ratio = 0.0f64;
        for &(nx, ratio) in &rows {
            value = value.max(ratio);
            if nx < id_r {
                identity_samples += 1;
                identity_branch_ok &= ratio == 1.0;
            }
            if nx / self.delta >= eps {
                far_branch_ok &= ratio <= c0 * self.delta / nx * (1.0 + 1e-12);
            }
            if nx >= top * (1.0 - 1e-12) {
                far_ratio = far_ratio.max(ratio);
            }
        }
        Ok(MEstimate {
            estimate: SupEstimate {
                value,
                samples: rows.len(),
                seed,
            },
            bound: self.m_bound,
            identity_samples,
            identity_branch_ok,
            far_branch_ok,
            far_ratio,
        })
    }

    /// Sampled verification that the smallness and Hölder conditions hold
    /// for `f̃` with constants `δ_η·c₁` and `M·c₁·m^α`.
    pub fn check_transfer(&self, samples: usize, seed: u64) -> Result<TransferReport> {
        check_samples(samples)?;
        let base = &self.base;
        let space = *self.space();
        let norm = space.norm();
        let alpha = base.alpha;

        // declared data of f on its ball
        let local = self.sweep(samples, QUOTIENT_MIN_NORM, base.domain_radius, seed ^ 0x5151);
        let (df_sup, df_quot) = local
            .par_iter()
            .map(|x| {
                let d = base.nonlinear.jacobian(x).op_norm(norm);
                (d, d / space.norm_of(x).powf(alpha))
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        let precondition = PreconditionCheck {
            smallness: BoundCheck::new(df_sup, base.smallness),
            holder: BoundCheck::new(df_quot, base.holder_constant),
        };

        // the globalized map, over the whole space
        let global = self.sweep(samples, QUOTIENT_MIN_NORM.max(1e-8 * self.delta), 1e4 * self.delta, seed);
        let (dft_sup, dft_quot) = global
            .par_iter()
            .map(|x| {
                let d = self.f_tilde_jacobian(x).op_norm(norm);
                (d, d / space.norm_of(x).powf(alpha))
            })
            .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

        let m = self.estimate_m(samples, seed ^ 0xa5a5)?;
        let c1 = self.blid.c1();
        Ok(TransferReport {
            precondition,
            smallness: BoundCheck::new(dft_sup, base.smallness * c1),
            holder: BoundCheck::new(dft_quot, base.holder_constant * c1 * m.bound.powf(alpha)),
            m,
            c1,
            delta: self.delta,
            samples,
            seed,
        })
    }

    /// `count` points with norms log-spaced over `[lo, hi]`, random directions.
    fn sweep(&self, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = *self.space();
        log_spaced(lo, hi, count)
            .into_iter()
            .map(|r| space.random_direction(&mut rng) * r)
            .collect()
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::usage(format!(
            "sampled checks need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}
