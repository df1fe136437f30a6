//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs under `cargo test` (no libtest harness).

mod common;

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use blid_core::commands::{self, PointSource};
use blid_core::space::log_spaced;
use blid_core::{
    builtin, fit_beta, split, BlidMap, BumpFunction, Error, FitTarget, Norm, Point, Scenario, SpaceDesc,
    BUILTIN_IDS,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = fn() -> blid_core::Result<Verdict>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("blid bounds on C[0,1] grids", blid_bounds),
        ("local identity", local_identity),
        ("smallness and Hoelder transfer through the cutoff", condition_transfer),
        ("conjugacy residual", conjugacy_residual),
        ("Koenigs oracle equivalence", koenigs_equivalence),
        ("inverse consistency", inverse_consistency),
        ("differentiability exponent", differentiability_exponent),
        ("spectral splitting", spectral_splitting),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = run().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        if !verdict.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} - {name}: {} [{secs:.1} s]",
            i + 1,
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Random grid functions of magnitudes `10⁻⁴ … 10⁸`, in several shapes.
fn grid_functions(n: usize, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = SpaceDesc::grid(n).unwrap().nodes();
    (0..count)
        .map(|k| {
            let magnitude = 10f64.powf(rng.random_range(-4.0..8.0));
            let shape = match k % 4 {
                0 => Point::from_fn(n, |_, _| rng.random_range(-1.0..=1.0)),
                1 => Point::from_fn(n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }),
                2 => {
                    let (a, b, c) = (rng.random_range(0.5..8.0), rng.random_range(0.0..6.3), rng.random_range(-1.0..1.0));
                    Point::from_iterator(n, nodes.iter().map(|t| (a * t + b).sin() + c * t))
                }
                _ => {
                    // a spike on a quiet background
                    let mut v = Point::from_fn(n, |_, _| 1e-3 * rng.random_range(-1.0..=1.0));
                    v[rng.random_range(0..n)] = 1.0;
                    v
                }
            };
            shape * magnitude
        })
        .collect()
}

fn blid_bounds() -> blid_core::Result<Verdict> {
    let start = Instant::now();
    let bump = BumpFunction::new(1.0, 2.0)?;
    let c1_bound = 2.0 * bump.sup_deriv1() + 1.0 + 1e-9;
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [64, 256, 1024] {
        let space = SpaceDesc::grid(n)?;
        let h = BlidMap::pointwise(space, bump)?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ n as u64);
        let mut sup_h = 0.0f64;
        let mut sup_dh = 0.0f64;
        for x in grid_functions(n, 1_000, SEED + n as u64) {
            sup_h = sup_h.max(space.norm_of(&h.eval(&x)?));
            // exact operator norm of the (diagonal) derivative, plus probes
            sup_dh = sup_dh.max(h.jacobian(&x).op_norm(Norm::Sup));
            let v = space.random_sign_vector(&mut rng);
            sup_dh = sup_dh.max(space.norm_of(&h.dderiv(&x, &v)?) / space.norm_of(&v));
        }
        let est_h = h.estimate_c0(1_000, SEED)?.value;
        let est_dh = h.estimate_c1(1_000, SEED)?.value;
        sup_h = sup_h.max(est_h);
        sup_dh = sup_dh.max(est_dh);
        ok &= sup_h <= 2.0 && sup_dh <= c1_bound;
        notes.push(format!("N={n}: sup|H| {sup_h}, sup|DH| {sup_dh:.9}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    Ok(Verdict::new(
        ok,
        format!("{}; bounds 2 and {c1_bound:.9}; runtime {secs:.2} s < 10 s", notes.join("; ")),
    ))
}

fn local_identity() -> blid_core::Result<Verdict> {
    let bump = BumpFunction::new(1.0, 2.0)?;
    let mut cases = Vec::new();
    for dim in [1, 2, 3, 8, 16] {
        cases.push(("radial", BlidMap::radial(SpaceDesc::finite(dim, Norm::Euclidean)?, bump)?));
    }
    for dim in [1, 3, 16] {
        cases.push(("pointwise", BlidMap::pointwise(SpaceDesc::finite(dim, Norm::Sup)?, bump)?));
    }
    for n in [64, 1024] {
        cases.push(("pointwise", BlidMap::pointwise(SpaceDesc::grid(n)?, bump)?));
    }
    let mut ok = true;
    let mut checked = 0;
    for (k, (_, h)) in cases.iter().enumerate() {
        let r = h.identity_radius();
        let mut pts = common::ball_points(h.space(), r, 1_000, SEED + k as u64);
        // points crowding the edge of the identity ball
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ k as u64);
        for j in 1..=12 {
            pts.push(h.space().random_direction(&mut rng) * (r * (1.0 - 10f64.powi(-j))));
        }
        for x in &pts {
            ok &= h.space().norm_of(x) < r && h.eval(x)? == *x;
        }
        checked += pts.len();
    }
    Ok(Verdict::new(
        ok,
        format!("H(x) == x bit-exactly at {checked} points of the open identity balls (radial and pointwise variants)"),
    ))
}

fn condition_transfer() -> blid_core::Result<Verdict> {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for id in ["quad-1d", "saddle-2d"] {
        let sc = builtin(id)?;
        let r = sc.globalized()?.check_transfer(sc.samples, sc.seed)?;
        let pass = r.pass() && r.m.estimate.value.is_finite() && r.m.bound.is_finite();
        ok &= pass;
        notes.push(format!(
            "{id}: sup|Df~| {:.4e} <= {:.4e}, Hoelder {:.4e} <= {:.4e}, m {:.4} <= {:.4} (identity samples {}, far branch {})",
            r.smallness.empirical,
            r.smallness.bound,
            r.holder.empirical,
            r.holder.bound,
            r.m.estimate.value,
            r.m.bound,
            r.m.identity_samples,
            r.m.far_branch_ok
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    Ok(Verdict::new(ok, format!("{}; runtime {secs:.2} s < 30 s", notes.join("; "))))
}

fn conjugacy_residual() -> blid_core::Result<Verdict> {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for (id, tol) in [("koenigs-1d", 1e-10), ("saddle-2d", 1e-10), ("c01-nemytskii", 1e-8)] {
        let mut sc = builtin(id)?;
        sc.tolerances.series_tol = tol;
        let solver = sc.solver()?;
        let pts = common::ball_points(&sc.space, solver.map().identity_radius(), 100, SEED);
        let worst = solver.residual_batch(&pts)?.into_iter().fold(0.0, f64::max);
        ok &= worst <= 10.0 * tol;
        notes.push(format!("{id}: {worst:.3e} <= {:.0e}", 10.0 * tol));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    Ok(Verdict::new(ok, format!("{}; runtime {secs:.1} s < 120 s", notes.join("; "))))
}

fn koenigs_equivalence() -> blid_core::Result<Verdict> {
    let sc = builtin("koenigs-1d")?;
    let solver = sc.solver()?;
    // F(x) = x/2 + x²/10, written out independently of the scenario
    let f = |x: f64| 0.5 * x + 0.1 * x * x;
    let mut worst = 0.0f64;
    for i in 0..50 {
        let x = -0.1 + 0.2 * i as f64 / 49.0;
        let phi = solver.conjugacy(&Point::from_element(1, x))?[0];
        worst = worst.max((phi - common::koenigs(f, 0.5, x)).abs());
    }
    Ok(Verdict::new(
        worst <= 1e-8,
        format!("max |Phi(x) - lim 2^n F^n(x)| = {worst:.3e} <= 1e-8 over 50 points in [-0.1, 0.1]"),
    ))
}

fn inverse_consistency() -> blid_core::Result<Verdict> {
    let mut ok = true;
    let mut notes = Vec::new();
    for id in BUILTIN_IDS {
        let sc = builtin(id)?;
        let solver = sc.solver()?;
        let ys = common::ball_points(&sc.space, solver.map().identity_radius(), 100, SEED ^ 0x6);
        let mut worst = 0.0f64;
        for y in &ys {
            let back = solver.conjugacy(&solver.phi_inverse(y)?)?;
            worst = worst.max(sc.space.norm_of(&(back - y)));
        }
        ok &= worst <= 1e-7;
        notes.push(format!("{id} {worst:.1e}"));
    }
    Ok(Verdict::new(ok, format!("max |Phi(Psi(y)) - y| <= 1e-7: {}", notes.join(", "))))
}

fn differentiability_exponent() -> blid_core::Result<Verdict> {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();

    let sc = builtin("koenigs-1d")?;
    let solver = sc.solver()?;
    let radii = log_spaced(1e-6, 1e-2, 24);
    for target in [FitTarget::Phi, FitTarget::PhiInverse] {
        let fit = fit_beta(&solver, &radii, 8, target, SEED)?;
        ok &= (fit.slope - 2.0).abs() <= 0.1;
        notes.push(format!("koenigs-1d {} slope {:.4} (2 +- 0.1)", target.as_str(), fit.slope));
    }

    let sc = builtin("saddle-2d")?;
    let solver = sc.solver()?;
    let beta = sc.band_width()?.beta_predicted;
    match beta {
        Some(beta) => {
            for target in [FitTarget::Phi, FitTarget::PhiInverse] {
                let fit = fit_beta(&solver, &sc.fit_radii(), sc.fit.directions, target, SEED)?;
                ok &= fit.slope >= 1.0 + beta - 0.1;
                notes.push(format!(
                    "saddle-2d {} slope {:.4} (>= {:.4})",
                    target.as_str(),
                    fit.slope,
                    1.0 + beta - 0.1
                ));
            }
        }
        None => {
            ok = false;
            notes.push("saddle-2d: predicate gives no exponent".into());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    Ok(Verdict::new(ok, format!("{}; runtime {secs:.1} s < 120 s", notes.join("; "))))
}

fn spectral_splitting() -> blid_core::Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_proj = 0.0f64;
    let mut worst_comm = 0.0f64;
    let mut dims_ok = true;
    for k in 0..100 {
        let n = 2 + k % 15;
        let m = common::random_hyperbolic(n, &mut rng);
        let s = split(&m, 1e-6)?;
        let n_stable = common::eigen_moduli(&m).iter().filter(|r| **r < 1.0).count();
        dims_ok &= s.stable_dim() == n_stable && s.unstable_dim() == n - n_stable;
        worst_proj = worst_proj.max(s.projector_defect());
        worst_comm = worst_comm.max(s.commutation_defect());
    }
    let rejected = matches!(
        split(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 1.0])), 1e-6),
        Err(Error::NonHyperbolic { .. })
    );
    let ok = dims_ok && worst_proj <= 1e-10 && worst_comm <= 1e-10 && rejected;
    Ok(Verdict::new(
        ok,
        format!(
            "100 random hyperbolic matrices (dims 2-16): projector defect {worst_proj:.2e}, \
             invariance defect {worst_comm:.2e} (<= 1e-10), dimensions match eigenvalue count: {dims_ok}; \
             diag(0.5, 1.0) rejected: {rejected}"
        ),
    ))
}

/// Every command on `sc`, written to `dir`.
fn run_all(sc: &Scenario, linearize_points: usize, dir: &std::path::Path) -> blid_core::Result<()> {
    commands::check_blid(sc)?.write(&dir.join("check-blid"))?;
    commands::cutoff_verify(sc)?.write(&dir.join("cutoff-verify"))?;
    commands::spectral(sc)?.write(&dir.join("spectral"))?;
    commands::linearize(sc, &PointSource::Sample(linearize_points))?.write(&dir.join("linearize"))?;
    if sc.beta_target()?.is_some() && !matches!(sc.nonlinear, blid_core::Nonlinearity::Zero) {
        commands::fit(sc)?.write(&dir.join("fit-beta"))?;
    }
    Ok(())
}

fn files_under(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> blid_core::Result<Verdict> {
    let mut ok = true;
    let mut files = 0;
    let mut differing = Vec::new();
    for id in BUILTIN_IDS {
        let mut sc = builtin(id)?;
        // the large grids rerun with smaller sample budgets to bound runtime
        let points = if sc.space.dim() > 64 {
            sc.fit.count = 6;
            10
        } else {
            commands::DEFAULT_LINEARIZE_SAMPLES
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_all(&sc, points, a.path())?;
        run_all(&sc, points, b.path())?;
        let (fa, fb) = (files_under(a.path()), files_under(b.path()));
        files += fa.len();
        if fa != fb || fa.is_empty() {
            ok = false;
            differing.push(*id);
        }
    }
    Ok(Verdict::new(
        ok,
        if differing.is_empty() {
            format!("{files} report files byte-identical across reruns of all {} builtins", BUILTIN_IDS.len())
        } else {
            format!("reports differ for {}", differing.join(", "))
        },
    ))
}
