//! Scenario documents: one JSON file describing a space, a map `F = Λ + f`,
//! its declared constants, the blid construction and the numerical
//! tolerances. A scenario either parses and validates completely or is
//! rejected with a diagnostic naming the line or field.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::blid::{BlidMap, BlidVariant};
use crate::bump::BumpFunction;
use crate::conjugacy::{ConjugacyKind, ConjugacySolver, SolverConfig};
use crate::cutoff::{default_delta, globalize, GlobalizedMap, MapSpec};
use crate::error::{Error, Result};
use crate::poly::{Monomial, Nonlinearity, ScalarTerm};
use crate::space::{log_spaced, LinearOp, Norm, SpaceDesc};
use crate::spectral::{band_width_check, split_op, BandWidthReport, HyperbolicSplitting, DEFAULT_HYPERBOLICITY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSpec {
    Diagonal(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub plateau_radius: f64,
    pub support_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlidSpec {
    pub variant: BlidVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_c1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub series_tol: f64,
    pub inversion_tol: f64,
    pub hyperbolicity_tol: f64,
    pub max_terms: usize,
    pub inversion_max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolverConfig::default();
        Tolerances {
            series_tol: s.series_tol,
            inversion_tol: s.inversion_tol,
            hyperbolicity_tol: DEFAULT_HYPERBOLICITY_TOL,
            max_terms: s.max_terms,
            inversion_max_iters: s.inversion_max_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub directions: usize,
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec {
            r_min: 1e-6,
            r_max: 1e-2,
            count: 24,
            directions: 8,
        }
    }
}

fn default_samples() -> usize {
    2_000
}

fn default_predicate() -> String {
    "gap_ratio".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub space: SpaceDesc,
    pub linear: LinearSpec,
    pub nonlinear: Nonlinearity,
    pub bump: BumpSpec,
    pub blid: BlidSpec,
    /// Cutoff scale; defaults to `domain_radius / (2·c₀)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub alpha: f64,
    pub holder_constant: f64,
    pub smallness: f64,
    pub domain_radius: f64,
    /// Which conjugacy the solver builds.
    #[serde(default)]
    pub conjugacy: ConjugacyKind,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default = "default_predicate")]
    pub predicate: String,
    /// Exponent the fit is judged against; defaults to the predicted one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_target: Option<f64>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| {
            Error::config(format!("scenario line {}, column {}: {e}", e.line(), e.column()))
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Semantic checks that the JSON schema alone cannot express.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| match e {
            Error::Config(m) => Error::config(format!("field '{name}': {m}")),
            other => other,
        };
        if self.id.is_empty() {
            return Err(Error::config("field 'id': must not be empty"));
        }
        self.space.validate().map_err(|e| field("space", e))?;
        self.linear_op().map_err(|e| field("linear", e))?;
        self.bump_function().map_err(|e| field("bump", e))?;
        self.blid_map().map_err(|e| field("blid", e))?;
        self.map_spec()?.validate().map_err(|e| field("map", e))?;
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config("field 'delta': must be positive"));
            }
        }
        let t = &self.tolerances;
        if !(t.series_tol > 0.0 && t.inversion_tol > 0.0 && t.hyperbolicity_tol >= 0.0) {
            return Err(Error::config("field 'tolerances': tolerances must be positive"));
        }
        if t.max_terms == 0 || t.inversion_max_iters == 0 {
            return Err(Error::config("field 'tolerances': iteration limits must be positive"));
        }
        let f = &self.fit;
        if !(f.r_min > 0.0 && f.r_max > f.r_min && f.count >= 2) {
            return Err(Error::config("field 'fit': need 0 < r_min < r_max and count >= 2"));
        }
        if let Some(b) = self.beta_target {
            if !(b > 0.0 && b <= self.alpha) {
                return Err(Error::config("field 'beta_target': must lie in (0, alpha]"));
            }
        }
        Ok(())
    }

    pub fn linear_op(&self) -> Result<LinearOp> {
        let n = self.space.dim();
        let op = match &self.linear {
            LinearSpec::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::config(format!("diagonal has {} entries, space has dimension {n}", d.len())));
                }
                LinearOp::Diagonal(DVector::from_column_slice(d))
            }
            LinearSpec::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::config(format!("rows must form a {n}x{n} matrix")));
                }
                LinearOp::Dense(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        };
        let finite = match &op {
            LinearOp::Diagonal(d) => d.iter().all(|v| v.is_finite()),
            LinearOp::Dense(m) => m.iter().all(|v| v.is_finite()),
        };
        if !finite {
            return Err(Error::config("entries must be finite"));
        }
        Ok(op)
    }

    pub fn bump_function(&self) -> Result<BumpFunction> {
        BumpFunction::new(self.bump.plateau_radius, self.bump.support_radius)
    }

    pub fn blid_map(&self) -> Result<BlidMap> {
        let h = BlidMap::new(self.space, self.bump_function()?, self.blid.variant)?;
        Ok(h.with_declared_bounds(self.blid.declared_c0, self.blid.declared_c1))
    }

    pub fn map_spec(&self) -> Result<MapSpec> {
        Ok(MapSpec {
            space: self.space,
            linear: self.linear_op()?,
            nonlinear: self.nonlinear.clone(),
            alpha: self.alpha,
            domain_radius: self.domain_radius,
            holder_constant: self.holder_constant,
            smallness: self.smallness,
        })
    }

    pub fn globalized(&self) -> Result<GlobalizedMap> {
        let base = self.map_spec()?;
        let blid = self.blid_map()?;
        let delta = self.delta.unwrap_or_else(|| default_delta(&base, &blid));
        globalize(base, blid, delta)
    }

    pub fn splitting(&self) -> Result<HyperbolicSplitting> {
        split_op(&self.linear_op()?, self.tolerances.hyperbolicity_tol)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let t = &self.tolerances;
        SolverConfig {
            kind: self.conjugacy,
            series_tol: t.series_tol,
            max_terms: t.max_terms,
            inversion_tol: t.inversion_tol,
            inversion_max_iters: t.inversion_max_iters,
        }
    }

    pub fn solver(&self) -> Result<ConjugacySolver> {
        ConjugacySolver::new(self.globalized()?, self.splitting()?, self.solver_config())
    }

    pub fn band_width(&self) -> Result<BandWidthReport> {
        band_width_check(&self.splitting()?, self.alpha, &self.predicate)
    }

    /// Declared target, or the predicted exponent when none is declared.
    pub fn beta_target(&self) -> Result<Option<f64>> {
        match self.beta_target {
            Some(b) => Ok(Some(b)),
            None => Ok(self.band_width()?.beta_predicted),
        }
    }

    pub fn fit_radii(&self) -> Vec<f64> {
        log_spaced(self.fit.r_min, self.fit.r_max, self.fit.count)
    }
}

pub const BUILTIN_IDS: &[&str] = &[
    "koenigs-1d",
    "quad-1d",
    "saddle-2d",
    "band-3d",
    "c01-nemytskii",
    "c01-nemytskii-256",
    "c01-nemytskii-1024",
    "c01-blid-eps2",
];

fn mono(coef: f64, powers: &[u32]) -> Monomial {
    Monomial {
        coef,
        powers: powers.to_vec(),
    }
}

fn base(id: &str, space: SpaceDesc, linear: LinearSpec, nonlinear: Nonlinearity, variant: BlidVariant) -> Scenario {
    Scenario {
        id: id.into(),
        space,
        linear,
        nonlinear,
        bump: BumpSpec {
            plateau_radius: 1.0,
            support_radius: 2.0,
        },
        blid: BlidSpec {
            variant,
            declared_c0: None,
            declared_c1: None,
        },
        delta: None,
        conjugacy: ConjugacyKind::Normalized,
        alpha: 1.0,
        holder_constant: 0.0,
        smallness: 0.0,
        domain_radius: 0.0,
        tolerances: Tolerances::default(),
        seed: 20_240_601,
        samples: default_samples(),
        fit: FitSpec::default(),
        predicate: default_predicate(),
        beta_target: None,
    }
}

/// Multiplication by `λ(t)`, with `λ` sweeping `[0.3, 0.7)` on `t < 1/2`
/// and `[1.5, 2.5]` on `t ≥ 1/2`.
pub fn split_multiplier(grid_size: usize) -> Vec<f64> {
    (0..grid_size)
        .map(|i| {
            let t = i as f64 / (grid_size - 1) as f64;
            if t < 0.5 {
                0.3 + 0.8 * t
            } else {
                1.5 + 2.0 * (t - 0.5)
            }
        })
        .collect()
}

fn nemytskii(id: &str, grid_size: usize) -> Scenario {
    // g(x) = 0.05x²: |g'(x)| = 0.1|x| ≤ 0.1R on the ball of radius R = 0.4
    let mut sc = base(
        id,
        SpaceDesc::GridFunction { grid_size },
        LinearSpec::Diagonal(split_multiplier(grid_size)),
        Nonlinearity::Nemytskii(vec![ScalarTerm { coef: 0.05, power: 2 }]),
        BlidVariant::Pointwise,
    );
    sc.domain_radius = 0.4;
    sc.smallness = 0.04;
    sc.holder_constant = 0.1;
    sc.tolerances.series_tol = 1e-8;
    sc.samples = 1_000;
    sc.fit.r_min = 1e-4;
    sc.fit.r_max = 5e-2;
    sc
}

/// The builtin scenario library.
pub fn builtin(id: &str) -> Result<Scenario> {
    let sup = |dim| SpaceDesc::FiniteDim { dim, norm: Norm::Sup };
    let sc = match id {
        "koenigs-1d" => {
            // f = 0.1x²: |f'| = 0.2|x| ≤ 0.08 on |x| ≤ 0.4
            let mut sc = base(
                id,
                sup(1),
                LinearSpec::Diagonal(vec![0.5]),
                Nonlinearity::Polynomial(vec![vec![mono(0.1, &[2])]]),
                BlidVariant::Pointwise,
            );
            sc.domain_radius = 0.4;
            sc.smallness = 0.08;
            sc.holder_constant = 0.2;
            sc
        }
        "quad-1d" => {
            // f = x²: |f'| = 2|x| ≤ 0.08 on |x| ≤ 0.04
            let mut sc = base(
                id,
                sup(1),
                LinearSpec::Diagonal(vec![0.5]),
                Nonlinearity::Polynomial(vec![vec![mono(1.0, &[2])]]),
                BlidVariant::Pointwise,
            );
            sc.domain_radius = 0.04;
            sc.smallness = 0.08;
            sc.holder_constant = 2.0;
            sc.fit.r_max = 5e-3;
            sc
        }
        "saddle-2d" => {
            // f = (0.1xy + 0.05y², 0.05x²): ‖Df‖₂ ≤ ‖Df‖_F ≤ √0.03·‖(x, y)‖ < 0.18‖(x, y)‖
            let mut sc = base(
                id,
                SpaceDesc::FiniteDim { dim: 2, norm: Norm::Euclidean },
                LinearSpec::Diagonal(vec![0.5, 2.0]),
                Nonlinearity::Polynomial(vec![
                    vec![mono(0.1, &[1, 1]), mono(0.05, &[0, 2])],
                    vec![mono(0.05, &[2, 0])],
                ]),
                BlidVariant::Radial,
            );
            sc.domain_radius = 0.3;
            sc.smallness = 0.054;
            sc.holder_constant = 0.18;
            sc
        }
        "band-3d" => {
            // f = (0.05xy, 0.025y² + 0.025xz, 0.05x²): max row sum of
            // |Df| ≤ 0.1‖·‖_∞. The strongly contracting x-direction is not
            // driven by y² (0.9² > 0.2), which keeps the stable chart summable.
            let mut sc = base(
                id,
                sup(3),
                LinearSpec::Diagonal(vec![0.2, 0.9, 2.0]),
                Nonlinearity::Polynomial(vec![
                    vec![mono(0.05, &[1, 1, 0])],
                    vec![mono(0.025, &[0, 2, 0]), mono(0.025, &[1, 0, 1])],
                    vec![mono(0.05, &[2, 0, 0])],
                ]),
                BlidVariant::Pointwise,
            );
            sc.domain_radius = 0.3;
            sc.smallness = 0.03;
            sc.holder_constant = 0.1;
            sc
        }
        "c01-nemytskii" => nemytskii(id, 64),
        "c01-nemytskii-256" => nemytskii(id, 256),
        "c01-nemytskii-1024" => nemytskii(id, 1024),
        "c01-blid-eps2" => {
            let mut sc = base(
                id,
                SpaceDesc::GridFunction { grid_size: 256 },
                LinearSpec::Diagonal(split_multiplier(256)),
                Nonlinearity::Zero,
                BlidVariant::Pointwise,
            );
            sc.domain_radius = 1.0;
            sc.smallness = 1e-3;
            sc.holder_constant = 0.0;
            sc.tolerances.series_tol = 1e-8;
            sc
        }
        other => {
            return Err(Error::config(format!(
                "unknown builtin scenario '{other}' (known: {})",
                BUILTIN_IDS.join(", ")
            )))
        }
    };
    sc.validate()?;
    Ok(sc)
}
