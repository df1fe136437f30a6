//! Empirical check of `Φ(x) = x + O(‖x‖^{1+β})`: a log-log least-squares fit
//! of the worst deviation `sup ‖Φ(x) − x‖` over spheres of shrinking radius,
//! and the CSV/JSON reports that record it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugacy::ConjugacySolver;
use crate::error::{Error, Result};
use crate::space::Point;

/// Tolerance on `β_empirical ≥ β_target − SLOPE_TOL`.
pub const SLOPE_TOL: f64 = 0.1;
/// Radii whose deviation is below `NOISE_FLOOR_FACTOR·series_tol` are not fitted.
pub const NOISE_FLOOR_FACTOR: f64 = 100.0;
pub const MIN_DIRECTIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    Phi,
    PhiInverse,
}

impl FitTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            FitTarget::Phi => "phi",
            FitTarget::PhiInverse => "phi_inverse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaFit {
    pub target: FitTarget,
    pub radii: Vec<f64>,
    pub sup_deviation: Vec<f64>,
    /// Which radii cleared the noise floor and entered the fit.
    pub fitted: Vec<bool>,
    pub noise_floor: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub beta_empirical: f64,
    pub directions: usize,
    pub seed: u64,
}

impl BetaFit {
    /// The `O(‖x‖^{1+β})` claim holds at this resolution.
    pub fn confirms(&self, beta_target: f64) -> bool {
        self.beta_empirical >= beta_target - SLOPE_TOL
    }
}

/// Least-squares line through `(x, y)`: `(slope, intercept, slope_stderr)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if x.len() > 2 {
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Fits the exponent of `sup_{‖x‖=r} ‖Φ(x) − x‖` (or of `Φ⁻¹`) against `r`.
pub fn fit_beta(
    solver: &ConjugacySolver,
    radii: &[f64],
    directions_per_radius: usize,
    target: FitTarget,
    seed: u64,
) -> Result<BetaFit> {
    if directions_per_radius < MIN_DIRECTIONS {
        return Err(Error::usage(format!(
            "fit needs at least {MIN_DIRECTIONS} directions per radius, got {directions_per_radius}"
        )));
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] <= 0.0 {
        return Err(Error::usage("fit radii must be positive and strictly increasing"));
    }
    let limit = solver.map().identity_radius();
    if *radii.last().unwrap() >= limit {
        return Err(Error::usage(format!(
            "fit radii must stay inside the identity region (radius {limit})"
        )));
    }
    let space = *solver.map().space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(usize, Point)> = radii
        .iter()
        .enumerate()
        .flat_map(|(i, &r)| {
            (0..directions_per_radius)
                .map(|_| (i, space.random_direction(&mut rng) * r))
                .collect::<Vec<_>>()
        })
        .collect();
    let deviations: Vec<(usize, f64)> = points
        .par_iter()
        .map(|(i, x)| {
            let image = match target {
                FitTarget::Phi => solver.conjugacy(x)?,
                FitTarget::PhiInverse => solver.phi_inverse(x)?,
            };
            Ok((*i, space.norm_of(&(image - x))))
        })
        .collect::<Result<_>>()?;
    let mut sup_deviation = vec![0.0f64; radii.len()];
    for (i, d) in deviations {
        sup_deviation[i] = sup_deviation[i].max(d);
    }

    let noise_floor = NOISE_FLOOR_FACTOR * solver.config().series_tol;
    let fitted: Vec<bool> = sup_deviation.iter().map(|&d| d > noise_floor).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&sup_deviation)
        .zip(&fitted)
        .filter(|(_, &keep)| keep)
        .map(|((r, d), _)| (r.ln(), d.ln()))
        .unzip();
    if lx.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} radii clear the noise floor {noise_floor:e}",
            lx.len(),
            radii.len()
        )));
    }
    let (slope, _, slope_stderr) = least_squares(&lx, &ly);
    Ok(BetaFit {
        target,
        radii: radii.to_vec(),
        sup_deviation,
        fitted,
        noise_floor,
        slope,
        slope_stderr,
        beta_empirical: slope - 1.0,
        directions: directions_per_radius,
        seed,
    })
}

/// A fit tagged with its scenario and the exponent it is judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFit {
    pub scenario_id: String,
    pub fit: BetaFit,
    pub beta_target: f64,
    pub series_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub scenario_id: String,
    pub target: FitTarget,
    pub slope: f64,
    pub slope_stderr: f64,
    pub beta_empirical: f64,
    pub beta_target: f64,
    pub pass: bool,
    pub seed: u64,
    pub series_tol: f64,
}

impl From<&ScenarioFit> for FitSummary {
    fn from(f: &ScenarioFit) -> Self {
        FitSummary {
            scenario_id: f.scenario_id.clone(),
            target: f.fit.target,
            slope: f.fit.slope,
            slope_stderr: f.fit.slope_stderr,
            beta_empirical: f.fit.beta_empirical,
            beta_target: f.beta_target,
            pass: f.fit.confirms(f.beta_target),
            seed: f.fit.seed,
            series_tol: f.series_tol,
        }
    }
}

/// One named inequality check, flattened for the summary file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub scenario_id: String,
    pub name: String,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Summary<'a> {
    fits: Vec<FitSummary>,
    checks: &'a [CheckSummary],
}

pub const FITS_CSV: &str = "fits.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// Writes `fits.csv` (one row per radius per fit) and `summary.json` into
/// `dir`, creating it if needed. Output depends only on the inputs.
pub fn emit_report(fits: &[ScenarioFit], checks: &[CheckSummary], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;

    let mut csv = String::from("scenario_id,target,radius,sup_deviation\n");
    for f in fits {
        for (r, d) in f.fit.radii.iter().zip(&f.fit.sup_deviation) {
            writeln!(csv, "{},{},{:e},{:e}", f.scenario_id, f.fit.target.as_str(), r, d).unwrap();
        }
    }
    let csv_path = dir.join(FITS_CSV);
    fs::write(&csv_path, csv).map_err(io(&csv_path))?;

    let summary = Summary {
        fits: fits.iter().map(FitSummary::from).collect(),
        checks,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    let json_path = dir.join(SUMMARY_JSON);
    fs::write(&json_path, json).map_err(io(&json_path))?;
    Ok((csv_path, json_path))
}
