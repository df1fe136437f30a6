//! Independent oracles and samplers shared by the integration tests.
#![allow(dead_code)]

use blid_core::{Point, SpaceDesc};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Koenigs linearization `lim λ⁻ⁿ Fⁿ(x)` of a 1-D contraction with `F'(0) = λ`.
///
/// Iterates until the orbit underflows the scale at which `F` is linear to
/// machine precision, so the truncation error is far below `1e-14·|x|`.
pub fn koenigs(f: impl Fn(f64) -> f64, lambda: f64, x: f64) -> f64 {
    let mut y = x;
    let mut scale = 1.0;
    for _ in 0..2_000 {
        if y.abs() < 1e-30 * x.abs().max(1e-300) || y == 0.0 {
            break;
        }
        y = f(y);
        scale /= lambda;
    }
    y * scale
}

/// Solves `g(x) = y` for increasing `g` on `[lo, hi]` by bisection.
pub fn bisect(g: impl Fn(f64) -> f64, y: f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(g(lo) <= y && y <= g(hi), "target outside bracket");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `count` points of the open ball of `radius`, uniform in direction and radius.
pub fn ball_points(space: &SpaceDesc, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| space.random_direction(&mut rng) * (radius * rng.random::<f64>()))
        .collect()
}

/// A random real matrix of size `n` whose eigenvalue moduli avoid
/// `[0.8, 1.25]`, with both a stable and an unstable part when `n ≥ 2`.
///
/// Built as `S·B·S⁻¹` with `B` block diagonal (real eigenvalues and 2×2
/// rotation–scaling blocks) and `S` a well-conditioned random perturbation
/// of the identity.
pub fn random_hyperbolic(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut b = DMatrix::<f64>::zeros(n, n);
    let n_stable = rng.random_range(1..n);
    let mut i = 0;
    while i < n {
        let stable = i < n_stable;
        let modulus = if stable {
            rng.random_range(0.05..0.8)
        } else {
            rng.random_range(1.25..4.0)
        };
        let fits_block = if stable { i + 1 < n_stable } else { i + 1 < n };
        if fits_block && rng.random::<bool>() {
            let theta: f64 = rng.random_range(0.1..3.0);
            b[(i, i)] = modulus * theta.cos();
            b[(i, i + 1)] = -modulus * theta.sin();
            b[(i + 1, i)] = modulus * theta.sin();
            b[(i + 1, i + 1)] = modulus * theta.cos();
            i += 2;
        } else {
            b[(i, i)] = if rng.random::<bool>() { modulus } else { -modulus };
            i += 1;
        }
    }
    loop {
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let s = DMatrix::<f64>::identity(n, n) + g * (0.5 / (n as f64).sqrt());
        if let Some(inv) = s.clone().try_inverse() {
            let sv = s.singular_values();
            if sv.max() / sv.min() < 20.0 {
                return &s * &b * inv;
            }
        }
    }
}

/// Moduli of the eigenvalues of `m`.
pub fn eigen_moduli(m: &DMatrix<f64>) -> Vec<f64> {
    m.complex_eigenvalues().iter().map(|z| z.norm()).collect()
}
