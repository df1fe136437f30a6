//! Polynomial nonlinear parts given as coefficient tables.
//!
//! Every monomial must have total degree at least 2, which is what makes
//! `f(0) = 0` and `Df(0) = 0` hold by construction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{LinearOp, Norm, Point, SpaceDesc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarTerm {
    pub coef: f64,
    pub power: u32,
}

/// The nonlinear part `f` of `F = Λ + f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    /// One list of monomials per output coordinate.
    Polynomial(Vec<Vec<Monomial>>),
    /// Sample-wise composition `x(t) ↦ g(x(t))` with a scalar polynomial `g`.
    Nemytskii(Vec<ScalarTerm>),
}

impl Nonlinearity {
    pub fn validate(&self, space: &SpaceDesc) -> Result<()> {
        match self {
            Nonlinearity::Zero => Ok(()),
            Nonlinearity::Polynomial(rows) => {
                if space.is_grid() {
                    return Err(Error::config(
                        "grid_function spaces take a nemytskii nonlinearity, not a polynomial table",
                    ));
                }
                let n = space.dim();
                if rows.len() != n {
                    return Err(Error::config(format!(
                        "polynomial has {} components, space has dimension {n}",
                        rows.len()
                    )));
                }
                for (i, row) in rows.iter().enumerate() {
                    for m in row {
                        if m.powers.len() != n {
                            return Err(Error::config(format!(
                                "component {i}: monomial has {} exponents, expected {n}",
                                m.powers.len()
                            )));
                        }
                        if m.powers.iter().sum::<u32>() < 2 {
                            return Err(Error::config(format!(
                                "component {i}: monomial degree must be at least 2 so that f(0) = 0 and Df(0) = 0"
                            )));
                        }
                        check_coef(m.coef)?;
                    }
                }
                Ok(())
            }
            Nonlinearity::Nemytskii(terms) => {
                for t in terms {
                    if t.power < 2 {
                        return Err(Error::config(
                            "nemytskii terms must have power at least 2 so that g(0) = 0 and g'(0) = 0",
                        ));
                    }
                    check_coef(t.coef)?;
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Nonlinearity::Zero => true,
            Nonlinearity::Polynomial(rows) => rows.iter().flatten().all(|m| m.coef == 0.0),
            Nonlinearity::Nemytskii(terms) => terms.iter().all(|t| t.coef == 0.0),
        }
    }

    pub fn eval(&self, x: &Point) -> Point {
        match self {
            Nonlinearity::Zero => Point::zeros(x.len()),
            Nonlinearity::Polynomial(rows) => Point::from_iterator(
                rows.len(),
                rows.iter()
                    .map(|row| row.iter().map(|m| m.coef * monomial(x, &m.powers, None)).sum()),
            ),
            Nonlinearity::Nemytskii(terms) => x.map(|xi| scalar(terms, xi)),
        }
    }

    pub fn jacobian(&self, x: &Point) -> LinearOp {
        let n = x.len();
        match self {
            Nonlinearity::Zero => LinearOp::Diagonal(DVector::zeros(n)),
            Nonlinearity::Polynomial(rows) => {
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in rows.iter().enumerate() {
                    for mono in row {
                        for j in 0..n {
                            if mono.powers[j] > 0 {
                                m[(i, j)] += mono.coef * monomial(x, &mono.powers, Some(j));
                            }
                        }
                    }
                }
                LinearOp::Dense(m)
            }
            Nonlinearity::Nemytskii(terms) => LinearOp::Diagonal(x.map(|xi| scalar_deriv(terms, xi))),
        }
    }

    /// Upper bound of `‖f(y)‖` over the ball `‖y‖ ≤ radius`, from the
    /// coefficient table (each coordinate is at most `Σ|c|·radius^deg`).
    pub fn sup_bound_on_ball(&self, radius: f64, norm: Norm) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Polynomial(rows) => {
                let per_row: Vec<f64> = rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|m| {
                                // in the euclidean ball every |y_j| ≤ radius as well
                                m.coef.abs() * radius.powi(m.powers.iter().sum::<u32>() as i32)
                            })
                            .sum()
                    })
                    .collect();
                match norm {
                    Norm::Sup => per_row.iter().copied().fold(0.0, f64::max),
                    Norm::Euclidean => per_row.iter().map(|v| v * v).sum::<f64>().sqrt(),
                }
            }
            Nonlinearity::Nemytskii(terms) => terms
                .iter()
                .map(|t| t.coef.abs() * radius.powi(t.power as i32))
                .sum(),
        }
    }
}

fn check_coef(c: f64) -> Result<()> {
    if c.is_finite() {
        Ok(())
    } else {
        Err(Error::config("polynomial coefficients must be finite"))
    }
}

/// `∏ x_j^{p_j}`, or its partial derivative in coordinate `d`.
fn monomial(x: &Point, powers: &[u32], d: Option<usize>) -> f64 {
    let mut v = 1.0;
    for (j, (&xj, &p)) in x.iter().zip(powers).enumerate() {
        if Some(j) == d {
            v *= p as f64 * xj.powi(p as i32 - 1);
        } else if p > 0 {
            v *= xj.powi(p as i32);
        }
    }
    v
}

fn scalar(terms: &[ScalarTerm], x: f64) -> f64 {
    terms.iter().map(|t| t.coef * x.powi(t.power as i32)).sum()
}

fn scalar_deriv(terms: &[ScalarTerm], x: f64) -> f64 {
    terms
        .iter()
        .map(|t| t.coef * t.power as f64 * x.powi(t.power as i32 - 1))
        .sum()
}
