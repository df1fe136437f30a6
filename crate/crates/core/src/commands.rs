//! The five verification commands, independent of any front end. Each one
//! takes a validated scenario and returns an [`Outcome`]: printable report
//! lines, flattened checks, and the artifacts to write.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blid::{constant_function, MIN_SAMPLES};
use crate::cutoff::{BoundCheck, BOUND_REL_TOL};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::space::Point;
use crate::verify::{emit_report, fit_beta, CheckSummary, FitTarget, ScenarioFit};

pub const LINEARIZE_CSV: &str = "linearize.csv";
/// Points evaluated by `linearize` when no points are given.
pub const DEFAULT_LINEARIZE_SAMPLES: usize = 100;
/// Residual and inverse-error budget, in units of `series_tol`.
pub const RESIDUAL_FACTOR: f64 = 10.0;

/// Per-point output of `linearize`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizeRow {
    pub x: Point,
    pub phi: Point,
    pub phi_inverse: Point,
    pub residual: f64,
    pub inverse_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: &'static str,
    pub scenario_id: String,
    pub lines: Vec<String>,
    pub checks: Vec<CheckSummary>,
    pub fits: Vec<ScenarioFit>,
    pub points: Vec<LinearizeRow>,
}

impl Outcome {
    fn new(command: &'static str, sc: &Scenario) -> Self {
        Outcome {
            command,
            scenario_id: sc.id.clone(),
            lines: Vec::new(),
            checks: Vec::new(),
            fits: Vec::new(),
            points: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, empirical: f64, bound: f64, pass: bool) {
        self.lines.push(format!(
            "{:<4} {name}: empirical {empirical:.6e}, bound {bound:.6e}",
            if pass { "ok" } else { "FAIL" }
        ));
        self.checks.push(CheckSummary {
            scenario_id: self.scenario_id.clone(),
            name: name.into(),
            empirical,
            bound,
            pass,
        });
    }

    fn bound_check(&mut self, name: &str, c: &BoundCheck) {
        self.check(name, c.empirical, c.bound, c.pass);
    }

    /// True when every check and every fit passed.
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.fits.iter().all(|f| f.fit.confirms(f.beta_target))
    }

    /// Writes `fits.csv` and `summary.json`, plus `linearize.csv` when the
    /// command evaluated points. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let (csv, json) = emit_report(&self.fits, &self.checks, dir)?;
        let mut written = vec![csv, json];
        if !self.points.is_empty() {
            let path = dir.join(LINEARIZE_CSV);
            fs::write(&path, linearize_csv(&self.points)).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }
}

fn linearize_csv(rows: &[LinearizeRow]) -> String {
    let mut out = String::from("index,component,x,phi,phi_inverse,residual,inverse_error\n");
    for (i, r) in rows.iter().enumerate() {
        for c in 0..r.x.len() {
            writeln!(
                out,
                "{i},{c},{:e},{:e},{:e},{:e},{:e}",
                r.x[c], r.phi[c], r.phi_inverse[c], r.residual, r.inverse_error
            )
            .unwrap();
        }
    }
    out
}

/// Local identity on `‖x‖ < δ₀` and the `c₀`, `c₁` bounds of the blid map.
pub fn check_blid(sc: &Scenario) -> Result<Outcome> {
    let h = sc.blid_map()?;
    let space = sc.space;
    let samples = sc.samples;
    if samples < MIN_SAMPLES {
        return Err(Error::usage(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let mut out = Outcome::new("check-blid", sc);
    out.lines.push(format!(
        "blid {:?} on {} (dim {}): delta0 {:e}, c0 {:e}, c1 {:e}",
        h.variant(),
        if space.is_grid() { "grid" } else { "finite_dim" },
        space.dim(),
        h.identity_radius(),
        h.c0(),
        h.c1()
    ));

    let delta0 = h.identity_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed ^ 0x1d);
    let mut inside: Vec<Point> = (0..samples)
        .map(|_| space.random_direction(&mut rng) * (delta0 * rng.random::<f64>()))
        .collect();
    inside.push(space.random_direction(&mut rng) * (delta0 * (1.0 - 1e-12)));
    inside.push(constant_function(&space, 0.0));
    let deviation = inside
        .par_iter()
        .map(|x| Ok(space.norm_of(&(h.eval(x)? - x))))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    out.check("local_identity", deviation, 0.0, deviation == 0.0);

    let c0 = h.estimate_c0(samples, sc.seed)?;
    // a pointwise algebraic bound: no tolerance
    out.check("c0", c0.value, h.c0(), c0.value <= h.c0());
    let c1 = h.estimate_c1(samples, sc.seed)?;
    out.check("c1", c1.value, h.c1(), c1.value <= h.c1() * (1.0 + BOUND_REL_TOL));
    Ok(out)
}

/// Smallness and Hölder conditions for the globalized map.
pub fn cutoff_verify(sc: &Scenario) -> Result<Outcome> {
    let g = sc.globalized()?;
    let report = g.check_transfer(sc.samples, sc.seed)?;
    let mut out = Outcome::new("cutoff-verify", sc);
    out.lines.push(format!(
        "delta {:e}, identity radius {:e}, reach {:e}, c1 {:e}, m bound {:e}",
        report.delta,
        g.identity_radius(),
        g.reach(),
        report.c1,
        report.m.bound
    ));
    out.bound_check("declared_smallness", &report.precondition.smallness);
    out.bound_check("declared_holder", &report.precondition.holder);
    out.bound_check("smallness", &report.smallness);
    out.bound_check("holder", &report.holder);
    let m = &report.m;
    out.check("m", m.estimate.value, m.bound, m.pass());
    out.lines.push(format!(
        "     m branches: {} identity samples (ratio 1: {}), far branch within c0*delta/|x|: {}",
        m.identity_samples, m.identity_branch_ok, m.far_branch_ok
    ));
    Ok(out)
}

/// Where `linearize` takes its points from.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSource {
    /// Explicit points, e.g. read with [`parse_points`].
    Given(Vec<Point>),
    /// Seeded samples in the identity ball of the globalized map.
    Sample(usize),
}

/// Parses one point per line, coordinates separated by commas. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_points(text: &str, dim: usize) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::usage(format!("points line {}: {e}", lineno + 1)))?;
        if coords.len() != dim {
            return Err(Error::usage(format!(
                "points line {}: expected {dim} coordinates, got {}",
                lineno + 1,
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage(format!("points line {}: non-finite coordinate", lineno + 1)));
        }
        points.push(Point::from_vec(coords));
    }
    if points.is_empty() {
        return Err(Error::usage("points file contains no points"));
    }
    Ok(points)
}

/// Evaluates `Φ`, `Φ⁻¹` and the conjugacy residual at the requested points.
pub fn linearize(sc: &Scenario, source: &PointSource) -> Result<Outcome> {
    let solver = sc.solver()?;
    let space = sc.space;
    let points = match source {
        PointSource::Given(p) => {
            for x in p {
                space.check_point(x)?;
            }
            p.clone()
        }
        PointSource::Sample(n) => {
            if *n == 0 {
                return Err(Error::usage("--sample needs at least one point"));
            }
            let radius = solver.map().identity_radius();
            let mut rng = ChaCha8Rng::seed_from_u64(sc.seed ^ 0x11);
            (0..*n)
                .map(|_| space.random_direction(&mut rng) * (radius * rng.random::<f64>()))
                .collect()
        }
    };
    let rows = points
        .into_par_iter()
        .map(|x| {
            let phi = solver.conjugacy(&x)?;
            let phi_inverse = solver.phi_inverse(&x)?;
            let inverse_error = space.norm_of(&(solver.conjugacy(&phi_inverse)? - &x));
            let residual = solver.residual(&x)?;
            Ok(LinearizeRow {
                x,
                phi,
                phi_inverse,
                residual,
                inverse_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Outcome::new("linearize", sc);
    let (ks, ku) = solver.series_terms();
    out.lines.push(format!(
        "{} points, series terms (stable {ks}, unstable {ku}), series_tol {:e}",
        rows.len(),
        sc.tolerances.series_tol
    ));
    let budget = RESIDUAL_FACTOR * sc.tolerances.series_tol;
    let max_res = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_inv = rows.iter().map(|r| r.inverse_error).fold(0.0, f64::max);
    out.check("residual", max_res, budget, max_res <= budget);
    out.check("inverse_error", max_inv, budget, max_inv <= budget);
    out.points = rows;
    Ok(out)
}

/// Log-log fits of the deviation of `Φ` and `Φ⁻¹` from the identity.
pub fn fit(sc: &Scenario) -> Result<Outcome> {
    let solver = sc.solver()?;
    let beta_target = sc.beta_target()?.ok_or_else(|| {
        Error::config("band width predicate gives no exponent; declare 'beta_target'")
    })?;
    let radii = sc.fit_radii();
    let mut out = Outcome::new("fit-beta", sc);
    for target in [FitTarget::Phi, FitTarget::PhiInverse] {
        let fit = fit_beta(&solver, &radii, sc.fit.directions, target, sc.seed)?;
        let kept = fit.fitted.iter().filter(|&&k| k).count();
        let pass = fit.confirms(beta_target);
        out.lines.push(format!(
            "{:<4} {}: slope {:.4} ± {:.4}, beta {:.4} (target {:.4} - 0.1), {kept}/{} radii above noise floor {:e}",
            if pass { "ok" } else { "FAIL" },
            target.as_str(),
            fit.slope,
            fit.slope_stderr,
            fit.beta_empirical,
            beta_target,
            radii.len(),
            fit.noise_floor
        ));
        out.fits.push(ScenarioFit {
            scenario_id: sc.id.clone(),
            fit,
            beta_target,
            series_tol: sc.tolerances.series_tol,
        });
    }
    Ok(out)
}

/// Hyperbolic splitting, annuli and the band width prediction.
pub fn spectral(sc: &Scenario) -> Result<Outcome> {
    let s = sc.splitting()?;
    let report = sc.band_width()?;
    let mut out = Outcome::new("spectral", sc);
    out.lines.push(format!(
        "hyperbolic: stable dim {}, unstable dim {}, gap {:e}",
        s.stable_dim(),
        s.unstable_dim(),
        s.gap()
    ));
    out.lines.push(format!(
        "projector defect {:e}, commutation defect {:e}",
        s.projector_defect(),
        s.commutation_defect()
    ));
    if let Some((a, b)) = report.annuli.stable {
        out.lines.push(format!("stable annulus [{a}, {b}]"));
        if a < b {
            out.lines.push(format!("  ln({a})/ln({b}) - 1 = {}", a.ln() / b.ln() - 1.0));
        }
    }
    if let Some((c, d)) = report.annuli.unstable {
        out.lines.push(format!("unstable annulus [{c}, {d}]"));
        if c < d {
            out.lines.push(format!("  ln({d})/ln({c}) - 1 = {}", d.ln() / c.ln() - 1.0));
        }
    }
    let beta = report.beta_predicted.unwrap_or(0.0);
    out.lines.push(format!(
        "predicate {}: alpha {}, beta_predicted {}",
        report.predicate_name,
        report.alpha,
        report.beta_predicted.map_or("none".into(), |b| b.to_string())
    ));
    out.check("band_width", beta, report.alpha, report.satisfied);
    Ok(out)
}
