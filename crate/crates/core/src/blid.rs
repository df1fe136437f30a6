//! Blid maps: globally bounded maps `H: X → X` equal to the identity near 0.
//!
//! Two constructions are offered:
//!
//! * **radial** (Euclidean `ℝⁿ`): `H(x) = h(‖x‖²)·x`. Using the squared norm
//!   keeps `H` smooth at the origin.
//! * **pointwise** (grid functions, or `ℝⁿ` with the sup norm):
//!   `H(x)(tᵢ) = h(x(tᵢ))·x(tᵢ)`, applied sample by sample.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::BumpFunction;
use crate::error::{Error, Result};
use crate::space::{log_spaced, LinearOp, Norm, Point, SpaceDesc};

/// Smallest sample budget accepted by the sup estimators.
pub const MIN_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlidVariant {
    Radial,
    Pointwise,
}

/// An empirical supremum together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlidMap {
    space: SpaceDesc,
    variant: BlidVariant,
    bump: BumpFunction,
    identity_radius: f64,
    c0: f64,
    c1: f64,
}

impl BlidMap {
    /// `H(x) = h(‖x‖²)·x` on Euclidean `ℝⁿ`.
    pub fn radial(space: SpaceDesc, bump: BumpFunction) -> Result<Self> {
        match space {
            SpaceDesc::FiniteDim {
                norm: Norm::Euclidean,
                ..
            } => {}
            _ => {
                return Err(Error::config(
                    "radial blid requires a finite_dim space with the euclidean norm",
                ))
            }
        }
        Ok(BlidMap {
            space,
            variant: BlidVariant::Radial,
            bump,
            identity_radius: bump.plateau_radius().sqrt(),
            c0: bump.support_radius().sqrt(),
            c1: radial_derivative_bound(&bump),
        })
    }

    /// Sample-wise `H(x)(tᵢ) = h(x(tᵢ))·x(tᵢ)` on grid functions or sup-norm `ℝⁿ`.
    pub fn pointwise(space: SpaceDesc, bump: BumpFunction) -> Result<Self> {
        if space.norm() != Norm::Sup {
            return Err(Error::config(
                "pointwise blid requires a grid_function space or a sup-norm finite_dim space",
            ));
        }
        Ok(BlidMap {
            space,
            variant: BlidVariant::Pointwise,
            bump,
            identity_radius: bump.plateau_radius(),
            c0: bump.support_radius(),
            c1: bump.support_radius() * bump.sup_deriv1() + 1.0,
        })
    }

    pub fn new(space: SpaceDesc, bump: BumpFunction, variant: BlidVariant) -> Result<Self> {
        match variant {
            BlidVariant::Radial => Self::radial(space, bump),
            BlidVariant::Pointwise => Self::pointwise(space, bump),
        }
    }

    /// Replaces the declared sup bounds. Used when a scenario states its own
    /// constants; the estimators then check against these.
    pub fn with_declared_bounds(mut self, c0: Option<f64>, c1: Option<f64>) -> Self {
        if let Some(c0) = c0 {
            self.c0 = c0;
        }
        if let Some(c1) = c1 {
            self.c1 = c1;
        }
        self
    }

    pub fn space(&self) -> &SpaceDesc {
        &self.space
    }

    pub fn variant(&self) -> BlidVariant {
        self.variant
    }

    pub fn bump(&self) -> &BumpFunction {
        &self.bump
    }

    /// `H(x) = x` whenever `‖x‖ < δ₀`.
    pub fn identity_radius(&self) -> f64 {
        self.identity_radius
    }

    /// Declared bound on `sup ‖H‖`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Declared bound on `sup ‖DH‖`.
    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        self.space.check_point(x)?;
        Ok(self.scaled_eval(x, 1.0))
    }

    /// `DH(x)·v`.
    pub fn dderiv(&self, x: &Point, v: &Point) -> Result<Point> {
        self.space.check_point(x)?;
        self.space.check_point(v)?;
        Ok(self.jacobian(x).apply(v))
    }

    /// `δ·H(x/δ)`, returning `x` itself wherever the bump is on its plateau so
    /// that the identity region is reproduced bit for bit.
    pub(crate) fn scaled_eval(&self, x: &Point, delta: f64) -> Point {
        let h = &self.bump;
        match self.variant {
            BlidVariant::Pointwise => x.map(|xi| {
                let u = xi / delta;
                let w = h.eval(u);
                if w == 1.0 {
                    xi
                } else {
                    delta * (w * u)
                }
            }),
            BlidVariant::Radial => {
                let u = x / delta;
                let w = h.eval(u.norm_squared());
                if w == 1.0 {
                    x.clone()
                } else {
                    u * (delta * w)
                }
            }
        }
    }

    /// `DH(u)` as an operator.
    pub fn jacobian(&self, u: &Point) -> LinearOp {
        let h = &self.bump;
        match self.variant {
            BlidVariant::Pointwise => {
                LinearOp::Diagonal(u.map(|ui| h.deriv(ui, 1) * ui + h.eval(ui)))
            }
            BlidVariant::Radial => {
                let s = u.norm_squared();
                let n = u.len();
                let mut m = nalgebra::DMatrix::identity(n, n) * h.eval(s);
                let dh = h.deriv(s, 1);
                if dh != 0.0 {
                    m += (u * u.transpose()) * (2.0 * dh);
                }
                LinearOp::Dense(m)
            }
        }
    }

    /// Empirical `sup ‖H(x)‖` over deterministic samples.
    ///
    /// Radii sweep log-uniformly over `[δ₀/10, 10·r₂·max(1, √n)]`; one extra
    /// sample sits just inside the identity ball.
    pub fn estimate_c0(&self, samples: usize, seed: u64) -> Result<SupEstimate> {
        check_samples(samples)?;
        let points = self.sample_points(samples, seed);
        let value = points
            .par_iter()
            .map(|x| self.space.norm_of(&self.scaled_eval(x, 1.0)))
            .reduce(|| 0.0, f64::max);
        Ok(SupEstimate {
            value,
            samples: points.len(),
            seed,
        })
    }

    /// Empirical `sup ‖DH(x)v‖ / ‖v‖` over sampled `(x, v)` pairs.
    pub fn estimate_c1(&self, samples: usize, seed: u64) -> Result<SupEstimate> {
        check_samples(samples)?;
        let points = self.sample_points(samples, seed);
        let dirs = self.test_directions(&points, seed ^ 0x9e37_79b9_7f4a_7c15);
        let norm = self.space.norm();
        let value = points
            .par_iter()
            .zip(dirs.par_iter())
            .map(|(x, vs)| {
                let jac = self.jacobian(x);
                vs.iter()
                    .map(|v| norm.of(&jac.apply(v)) / norm.of(v))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        Ok(SupEstimate {
            value,
            samples: points.len(),
            seed,
        })
    }

    /// Upper end of the radius sweep used by the estimators.
    fn sweep_max_radius(&self) -> f64 {
        let n = self.space.dim() as f64;
        let scale = match self.space {
            SpaceDesc::FiniteDim { .. } => n.sqrt().max(1.0),
            SpaceDesc::GridFunction { .. } => 1.0,
        };
        10.0 * self.bump.support_radius() * scale
    }

    fn sample_points(&self, samples: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radii = log_spaced(
            self.identity_radius / 10.0,
            self.sweep_max_radius(),
            samples - 1,
        );
        let mut pts: Vec<Point> = radii
            .iter()
            .map(|&r| self.space.random_direction(&mut rng) * r)
            .collect();
        let inner = self.space.random_direction(&mut rng) * (self.identity_radius * (1.0 - 1e-13));
        pts.push(inner);
        pts
    }

    /// Per-point test vectors: random unit directions plus, for the radial
    /// map, the radial direction, and for the pointwise map a `±1` vector.
    fn test_directions(&self, points: &[Point], seed: u64) -> Vec<Vec<Point>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        points
            .iter()
            .map(|x| {
                let mut vs = vec![self.space.random_direction(&mut rng)];
                match self.variant {
                    BlidVariant::Radial => {
                        let len = x.norm();
                        if len > 0.0 {
                            vs.push(x / len);
                        }
                    }
                    BlidVariant::Pointwise => vs.push(self.space.random_sign_vector(&mut rng)),
                }
                vs
            })
            .collect()
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::usage(format!(
            "sup estimates need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// `sup_s max(|h(s)|, |h(s) + 2s·h′(s)|)`: the operator norm of
/// `h(s)·I + 2h′(s)·x xᵀ` with `s = ‖x‖²`, maximized on a dense grid of `s`.
fn radial_derivative_bound(h: &BumpFunction) -> f64 {
    let (r1, r2) = (h.plateau_radius(), h.support_radius());
    let n = 20_000;
    let step = (r2 - r1) / n as f64;
    let f = |s: f64| (h.eval(s) + 2.0 * s * h.deriv(s, 1)).abs();
    let (mut best, mut best_s) = (1.0f64, r1);
    for i in 0..=n {
        let s = r1 + step * i as f64;
        let v = f(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    // polish on the neighbouring cells
    let mut lo = (best_s - step).max(r1);
    let mut hi = (best_s + step).min(r2);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) > f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// Convenience for tests and the CLI: a constant grid function.
pub fn constant_function(space: &SpaceDesc, value: f64) -> Point {
    DVector::from_element(space.dim(), value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn bump12() -> BumpFunction {
        BumpFunction::new(1.0, 2.0).unwrap()
    }

    fn central_diff(h: &BlidMap, x: &Point, v: &Point, eps: f64) -> Point {
        (h.eval(&(x + v * eps)).unwrap() - h.eval(&(x - v * eps)).unwrap()) / (2.0 * eps)
    }

    #[test]
    fn radial_identity_and_cutoff() {
        let space = SpaceDesc::finite(2, Norm::Euclidean).unwrap();
        let h = BlidMap::radial(space, bump12()).unwrap();
        let x = Point::from_vec(vec![0.5, 0.0]);
        assert_eq!(h.eval(&x).unwrap(), x);
        let far = Point::from_vec(vec![10.0, 0.0]);
        assert_eq!(h.eval(&far).unwrap(), Point::zeros(2));
        assert_eq!(h.eval(&Point::zeros(2)).unwrap(), Point::zeros(2));
    }

    #[test]
    fn radial_matches_scalar_formula() {
        let space = SpaceDesc::finite(1, Norm::Euclidean).unwrap();
        let b = bump12();
        let h = BlidMap::radial(space, b).unwrap();
        let got = h.eval(&Point::from_vec(vec![1.2])).unwrap()[0];
        assert!((got - b.eval(1.44) * 1.2).abs() < 1e-15);
    }

    #[test]
    fn radial_rejects_sup_norm_and_grids() {
        assert!(BlidMap::radial(SpaceDesc::finite(2, Norm::Sup).unwrap(), bump12()).is_err());
        assert!(BlidMap::radial(SpaceDesc::grid(8).unwrap(), bump12()).is_err());
        assert!(BlidMap::pointwise(SpaceDesc::finite(2, Norm::Euclidean).unwrap(), bump12()).is_err());
    }

    #[test]
    fn pointwise_constant_functions() {
        let space = SpaceDesc::grid(64).unwrap();
        let h = BlidMap::pointwise(space, bump12()).unwrap();
        let half = constant_function(&space, 0.5);
        assert_eq!(h.eval(&half).unwrap(), half);
        let ten = constant_function(&space, 10.0);
        assert_eq!(h.eval(&ten).unwrap(), Point::zeros(64));
    }

    #[test]
    fn pointwise_bound_on_large_functions() {
        let space = SpaceDesc::grid(64).unwrap();
        let h = BlidMap::pointwise(space, bump12()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = space.random_direction(&mut rng) * 5.0;
            assert!(space.norm_of(&h.eval(&x).unwrap()) <= 2.0);
        }
    }

    #[test]
    fn pointwise_mixed_samples_match_scalar() {
        let space = SpaceDesc::grid(5).unwrap();
        let b = bump12();
        let h = BlidMap::pointwise(space, b).unwrap();
        let x = Point::from_vec(vec![0.3, 1.2, -1.7, 2.5, -0.9]);
        let y = h.eval(&x).unwrap();
        for i in 0..5 {
            assert_eq!(y[i], b.eval(x[i]) * x[i]);
        }
    }

    #[test]
    fn dimension_mismatch_is_usage_error() {
        let h = BlidMap::pointwise(SpaceDesc::grid(4).unwrap(), bump12()).unwrap();
        assert!(matches!(h.eval(&Point::zeros(3)), Err(Error::Usage(_))));
        assert!(matches!(
            h.dderiv(&Point::zeros(4), &Point::zeros(5)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn derivative_identity_and_far_field() {
        let space = SpaceDesc::finite(3, Norm::Euclidean).unwrap();
        let h = BlidMap::radial(space, bump12()).unwrap();
        let v = Point::from_vec(vec![0.3, -1.0, 2.0]);
        let near = Point::from_vec(vec![0.1, 0.2, -0.3]);
        assert_eq!(h.dderiv(&near, &v).unwrap(), v);
        let far = Point::from_vec(vec![5.0, 0.0, 1.0]);
        assert_eq!(h.dderiv(&far, &v).unwrap(), Point::zeros(3));

        let g = BlidMap::pointwise(SpaceDesc::grid(3).unwrap(), bump12()).unwrap();
        let v = Point::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(g.dderiv(&Point::from_vec(vec![0.5, -0.9, 0.0]), &v).unwrap(), v);
        assert_eq!(g.dderiv(&Point::from_vec(vec![4.0, -9.0, 3.0]), &v).unwrap(), Point::zeros(3));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let maps = [
            BlidMap::radial(SpaceDesc::finite(2, Norm::Euclidean).unwrap(), bump12()).unwrap(),
            BlidMap::pointwise(SpaceDesc::grid(16).unwrap(), bump12()).unwrap(),
            BlidMap::pointwise(SpaceDesc::finite(3, Norm::Sup).unwrap(), bump12()).unwrap(),
        ];
        for h in &maps {
            let space = *h.space();
            for _ in 0..1000 {
                let r = rng.random_range(0.0..2.5);
                let x = space.random_direction(&mut rng) * r;
                let v = space.random_direction(&mut rng);
                let an = h.dderiv(&x, &v).unwrap();
                let fd = central_diff(h, &x, &v, 1e-5);
                let err = space.norm_of(&(&an - &fd));
                let tol = 1e-6_f64.max(1e-4 * space.norm_of(&an));
                assert!(err <= tol, "{:?}: err {err} > {tol}", h.variant());
            }
        }
    }

    #[test]
    fn c0_estimates_respect_bounds() {
        let p = BlidMap::pointwise(SpaceDesc::grid(64).unwrap(), bump12()).unwrap();
        let est = p.estimate_c0(2000, 1).unwrap();
        assert!(est.value <= 2.0);
        assert!(est.value >= p.identity_radius() * (1.0 - 1e-12));

        let r = BlidMap::radial(SpaceDesc::finite(2, Norm::Euclidean).unwrap(), bump12()).unwrap();
        let est = r.estimate_c0(2000, 1).unwrap();
        // 1-D oracle: max_s h(s²)·s on a fine grid
        let b = bump12();
        let oracle = (0..=400_000)
            .map(|i| {
                let s = 2.0 * i as f64 / 400_000.0;
                b.eval(s * s) * s
            })
            .fold(0.0, f64::max);
        assert!(est.value <= 2f64.sqrt());
        assert!(est.value <= oracle * (1.0 + 1e-9));
        assert!(est.value >= r.identity_radius() * (1.0 - 1e-12));
    }

    #[test]
    fn c1_estimates_respect_bounds() {
        let b = bump12();
        let p = BlidMap::pointwise(SpaceDesc::grid(64).unwrap(), b).unwrap();
        let est = p.estimate_c1(2000, 2).unwrap();
        assert!(est.value <= 2.0 * b.sup_deriv1() + 1.0 + 1e-9);
        assert!(est.value >= 1.0 - 1e-9);

        let r = BlidMap::radial(SpaceDesc::finite(2, Norm::Euclidean).unwrap(), b).unwrap();
        let e1 = r.estimate_c1(4000, 10).unwrap().value;
        let e2 = r.estimate_c1(4000, 20).unwrap().value;
        assert!(((e1 - e2) / e1).abs() < 0.05, "{e1} vs {e2}");
        assert!(e1 <= r.c1() * (1.0 + 1e-9));
    }

    #[test]
    fn estimators_refuse_small_budgets() {
        let p = BlidMap::pointwise(SpaceDesc::grid(8).unwrap(), bump12()).unwrap();
        assert!(p.estimate_c0(999, 0).is_err());
        assert!(p.estimate_c1(10, 0).is_err());
    }

    #[test]
    fn local_identity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let maps = [
            BlidMap::radial(SpaceDesc::finite(4, Norm::Euclidean).unwrap(), bump12()).unwrap(),
            BlidMap::pointwise(SpaceDesc::grid(32).unwrap(), bump12()).unwrap(),
        ];
        for h in &maps {
            for _ in 0..1000 {
                let r = rng.random_range(0.0..h.identity_radius());
                let x = h.space().random_direction(&mut rng) * r;
                assert_eq!(h.eval(&x).unwrap(), x);
            }
        }
    }
}
