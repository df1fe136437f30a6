//! Normed spaces, points and the linear operators that act on them.
//!
//! Everything is finite dimensional after discretization: a grid function on
//! `[0, 1]` is the vector of its samples at `t_i = i / (N - 1)`, measured in
//! the sup norm.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    Euclidean,
    Sup,
}

impl Norm {
    pub fn of(self, x: &Point) -> f64 {
        match self {
            Norm::Euclidean => x.norm(),
            Norm::Sup => x.amax(),
        }
    }

    /// Induced operator norm of a dense matrix.
    pub fn of_matrix(self, m: &DMatrix<f64>) -> f64 {
        if m.is_empty() {
            return 0.0;
        }
        match self {
            Norm::Euclidean => m.clone().singular_values().max(),
            Norm::Sup => m
                .row_iter()
                .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceDesc {
    FiniteDim { dim: usize, norm: Norm },
    GridFunction { grid_size: usize },
}

impl SpaceDesc {
    pub fn finite(dim: usize, norm: Norm) -> Result<Self> {
        let s = SpaceDesc::FiniteDim { dim, norm };
        s.validate()?;
        Ok(s)
    }

    pub fn grid(grid_size: usize) -> Result<Self> {
        let s = SpaceDesc::GridFunction { grid_size };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceDesc::FiniteDim { dim, .. } if dim < 1 => {
                Err(Error::config("finite_dim space needs dim >= 1"))
            }
            SpaceDesc::GridFunction { grid_size } if grid_size < 2 => {
                Err(Error::config("grid_function space needs grid_size >= 2"))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            SpaceDesc::FiniteDim { dim, .. } => dim,
            SpaceDesc::GridFunction { grid_size } => grid_size,
        }
    }

    pub fn norm(&self) -> Norm {
        match *self {
            SpaceDesc::FiniteDim { norm, .. } => norm,
            SpaceDesc::GridFunction { .. } => Norm::Sup,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, SpaceDesc::GridFunction { .. })
    }

    /// Grid nodes `t_i = i / (N - 1)`; empty for finite-dimensional spaces.
    pub fn nodes(&self) -> Vec<f64> {
        match *self {
            SpaceDesc::GridFunction { grid_size } => (0..grid_size)
                .map(|i| i as f64 / (grid_size - 1) as f64)
                .collect(),
            SpaceDesc::FiniteDim { .. } => Vec::new(),
        }
    }

    pub fn norm_of(&self, x: &Point) -> f64 {
        self.norm().of(x)
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::usage(format!(
                "point has {} coordinates, space has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// A direction of unit norm drawn from `rng`.
    ///
    /// Euclidean directions are uniform on the sphere. Sup-norm directions
    /// have uniform coordinates in `[-1, 1]` rescaled so the largest one has
    /// modulus exactly one.
    pub fn random_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let n = self.dim();
        loop {
            let v = match self.norm() {
                Norm::Euclidean => Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)),
                Norm::Sup => Point::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)),
            };
            let len = self.norm_of(&v);
            if len > 1e-12 {
                return v / len;
            }
        }
    }

    /// A direction whose coordinates are all `±1`: the extremal test vector
    /// for diagonal operators in the sup norm.
    pub fn random_sign_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::from_fn(self.dim(), |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
    }
}

/// `count` radii spaced log-uniformly over `[lo, hi]`, both ends included.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Jacobians and other linear maps. Sample-wise maps on grid functions stay
/// diagonal so that large grids never allocate dense matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOp {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl LinearOp {
    pub fn dim(&self) -> usize {
        match self {
            LinearOp::Diagonal(d) => d.len(),
            LinearOp::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, v: &Point) -> Point {
        match self {
            LinearOp::Diagonal(d) => d.component_mul(v),
            LinearOp::Dense(m) => m * v,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearOp) -> LinearOp {
        match (self, other) {
            (LinearOp::Diagonal(a), LinearOp::Diagonal(b)) => LinearOp::Diagonal(a.component_mul(b)),
            _ => LinearOp::Dense(self.to_dense() * other.to_dense()),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearOp::Diagonal(d) => DMatrix::from_diagonal(d),
            LinearOp::Dense(m) => m.clone(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, LinearOp::Diagonal(_))
    }

    pub fn identity(n: usize) -> LinearOp {
        LinearOp::Diagonal(DVector::from_element(n, 1.0))
    }

    pub fn inverse(&self) -> Option<LinearOp> {
        match self {
            LinearOp::Diagonal(d) => {
                if d.iter().any(|&v| v == 0.0) {
                    None
                } else {
                    Some(LinearOp::Diagonal(d.map(|v| 1.0 / v)))
                }
            }
            LinearOp::Dense(m) => m.clone().try_inverse().map(LinearOp::Dense),
        }
    }

    pub fn pow(&self, k: u32) -> LinearOp {
        match self {
            LinearOp::Diagonal(d) => LinearOp::Diagonal(d.map(|v| v.powi(k as i32))),
            LinearOp::Dense(m) => LinearOp::Dense(m.pow(k)),
        }
    }

    pub fn sub(&self, other: &LinearOp) -> LinearOp {
        match (self, other) {
            (LinearOp::Diagonal(a), LinearOp::Diagonal(b)) => LinearOp::Diagonal(a - b),
            _ => LinearOp::Dense(self.to_dense() - other.to_dense()),
        }
    }

    pub fn op_norm(&self, norm: Norm) -> f64 {
        match self {
            LinearOp::Diagonal(d) => d.amax(),
            LinearOp::Dense(m) => norm.of_matrix(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_nodes_cover_unit_interval() {
        let s = SpaceDesc::grid(5).unwrap();
        assert_eq!(s.nodes(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(s.norm(), Norm::Sup);
    }

    #[test]
    fn rejects_degenerate_spaces() {
        assert!(SpaceDesc::grid(1).is_err());
        assert!(SpaceDesc::finite(0, Norm::Sup).is_err());
    }

    #[test]
    fn directions_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for space in [
            SpaceDesc::finite(4, Norm::Euclidean).unwrap(),
            SpaceDesc::finite(4, Norm::Sup).unwrap(),
            SpaceDesc::grid(16).unwrap(),
        ] {
            for _ in 0..50 {
                let v = space.random_direction(&mut rng);
                assert!((space.norm_of(&v) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sup_operator_norm_is_max_row_sum() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 0.25]);
        assert_eq!(Norm::Sup.of_matrix(&m), 3.0);
        let d = LinearOp::Diagonal(DVector::from_vec(vec![0.5, -3.0]));
        assert_eq!(d.op_norm(Norm::Sup), 3.0);
        assert_eq!(d.op_norm(Norm::Euclidean), 3.0);
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let r = log_spaced(1e-6, 1e-2, 5);
        assert!((r[0] - 1e-6).abs() < 1e-20);
        assert!((r[4] - 1e-2).abs() < 1e-16);
        assert!((r[1] - 1e-5).abs() < 1e-18);
    }
}
