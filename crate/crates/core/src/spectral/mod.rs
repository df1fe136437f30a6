//! Hyperbolic analysis of the linear part: stable/unstable splitting,
//! spectral projectors and annuli, contraction rates and the band width
//! predicate that predicts the differentiability exponent.

mod schur;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{LinearOp, Norm};

pub use schur::{ordered_schur, OrderedSchur};

/// Default distance from the unit circle below which an eigenvalue counts
/// as non-hyperbolic.
pub const DEFAULT_HYPERBOLICITY_TOL: f64 = 1e-6;
/// Power used for adapted operator norms and series bounds.
pub const ADAPTED_POWER: u32 = 64;

/// Invariant splitting `X = E_s ⊕ E_u` of a hyperbolic linear map.
#[derive(Debug, Clone)]
pub struct HyperbolicSplitting {
    linear: LinearOp,
    linear_inv: LinearOp,
    p_s: LinearOp,
    p_u: LinearOp,
    stable_block: DMatrix<f64>,
    unstable_block: DMatrix<f64>,
    stable_moduli: Vec<f64>,
    unstable_moduli: Vec<f64>,
    gap: f64,
}

/// `a ≤ |λ| ≤ b < 1` on the stable side and `1 < c ≤ |λ| ≤ d` on the
/// unstable side; a side is `None` when its subspace is trivial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annuli {
    pub stable: Option<(f64, f64)>,
    pub unstable: Option<(f64, f64)>,
}

/// Computes the splitting of a dense matrix. Diagonal input takes a direct
/// route without any factorization.
pub fn split(linear: &DMatrix<f64>, tol: f64) -> Result<HyperbolicSplitting> {
    if !linear.is_square() {
        return Err(Error::InvalidInput("linear part must be square".into()));
    }
    let n = linear.nrows();
    let off_diagonal_zero = (0..n).all(|i| (0..n).all(|j| i == j || linear[(i, j)] == 0.0));
    if off_diagonal_zero {
        split_op(&LinearOp::Diagonal(linear.diagonal()), tol)
    } else {
        split_op(&LinearOp::Dense(linear.clone()), tol)
    }
}

pub fn split_op(linear: &LinearOp, tol: f64) -> Result<HyperbolicSplitting> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::config("hyperbolicity tolerance must be non-negative"));
    }
    if let LinearOp::Dense(m) = linear {
        if !m.is_square() {
            return Err(Error::InvalidInput("linear part must be square".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("linear part has non-finite entries".into()));
        }
    }
    match linear {
        LinearOp::Diagonal(d) => split_diagonal(d, tol),
        LinearOp::Dense(m) => split_dense(m, tol),
    }
}

fn check_moduli(moduli: &[f64], scale: f64, tol: f64) -> Result<f64> {
    let mut gap = f64::INFINITY;
    for &md in moduli {
        if !md.is_finite() {
            return Err(Error::InvalidInput("linear part has non-finite entries".into()));
        }
        if md <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidInput("linear part is singular".into()));
        }
        let dist = (md - 1.0).abs();
        if dist <= tol {
            return Err(Error::NonHyperbolic { modulus: md, tol });
        }
        gap = gap.min(dist);
    }
    Ok(gap)
}

fn split_diagonal(d: &DVector<f64>, tol: f64) -> Result<HyperbolicSplitting> {
    let moduli: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let gap = check_moduli(&moduli, d.amax(), tol)?;
    let mask = d.map(|v| if v.abs() < 1.0 { 1.0 } else { 0.0 });
    let stable: Vec<f64> = d.iter().copied().filter(|v| v.abs() < 1.0).collect();
    let unstable: Vec<f64> = d.iter().copied().filter(|v| v.abs() > 1.0).collect();
    Ok(HyperbolicSplitting {
        linear: LinearOp::Diagonal(d.clone()),
        linear_inv: LinearOp::Diagonal(d.map(|v| 1.0 / v)),
        p_s: LinearOp::Diagonal(mask.clone()),
        p_u: LinearOp::Diagonal(mask.map(|v| 1.0 - v)),
        stable_moduli: stable.iter().map(|v| v.abs()).collect(),
        unstable_moduli: unstable.iter().map(|v| v.abs()).collect(),
        stable_block: DMatrix::from_diagonal(&DVector::from_vec(stable)),
        unstable_block: DMatrix::from_diagonal(&DVector::from_vec(unstable)),
        gap,
    })
}

fn split_dense(m: &DMatrix<f64>, tol: f64) -> Result<HyperbolicSplitting> {
    let n = m.nrows();
    let os = ordered_schur(m)?;
    let gap = check_moduli(&os.moduli, m.amax(), tol)?;
    let k = os.stable_dim;
    let t11 = os.t.view((0, 0), (k, k)).clone_owned();
    let t22 = os.t.view((k, k), (n - k, n - k)).clone_owned();
    let t12 = os.t.view((0, k), (k, n - k)).clone_owned();

    let unstable_blocks: Vec<usize> = {
        let mut acc = 0;
        os.blocks
            .iter()
            .copied()
            .filter(|&s| {
                let keep = acc >= k;
                acc += s;
                keep
            })
            .collect()
    };
    let y = solve_sylvester(&t11, &t22, &(-&t12), &unstable_blocks)?;

    // Schur coordinates: P_s = [[I, −Y], [0, 0]]
    let mut ps_schur = DMatrix::zeros(n, n);
    ps_schur.view_mut((0, 0), (k, k)).fill_with_identity();
    ps_schur.view_mut((0, k), (k, n - k)).copy_from(&(-&y));
    let p_s = &os.z * ps_schur * os.z.transpose();
    let p_u = DMatrix::identity(n, n) - &p_s;

    let linear_inv = m.clone().try_inverse().ok_or_else(|| Error::InvalidInput("linear part is singular".into()))?;

    let mut stable_moduli = Vec::new();
    let mut unstable_moduli = Vec::new();
    for (&s, &md) in os.blocks.iter().zip(&os.moduli) {
        let side = if md < 1.0 { &mut stable_moduli } else { &mut unstable_moduli };
        side.extend(std::iter::repeat_n(md, s));
    }
    Ok(HyperbolicSplitting {
        linear: LinearOp::Dense(m.clone()),
        linear_inv: LinearOp::Dense(linear_inv),
        p_s: LinearOp::Dense(p_s),
        p_u: LinearOp::Dense(p_u),
        stable_block: t11,
        unstable_block: t22,
        stable_moduli,
        unstable_moduli,
        gap,
    })
}

/// Solves `T₁₁Y − YT₂₂ = C` for quasi-triangular `T₁₁`, `T₂₂` by sweeping
/// the diagonal blocks of `T₂₂` left to right.
fn solve_sylvester(
    t11: &DMatrix<f64>,
    t22: &DMatrix<f64>,
    c: &DMatrix<f64>,
    t22_blocks: &[usize],
) -> Result<DMatrix<f64>> {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut y = DMatrix::zeros(k, m);
    if k == 0 || m == 0 {
        return Ok(y);
    }
    let singular = || Error::Numerical {
        context: "spectral projector",
        detail: "stable and unstable blocks share an eigenvalue".into(),
        residual: f64::NAN,
    };
    let mut j = 0;
    for &s in t22_blocks {
        let rhs_col = |col: usize, y: &DMatrix<f64>| {
            let mut r = c.column(col).clone_owned();
            for i in 0..j {
                r += y.column(i) * t22[(i, col)];
            }
            r
        };
        if s == 1 {
            let a = t11 - DMatrix::identity(k, k) * t22[(j, j)];
            let sol = a.lu().solve(&rhs_col(j, &y)).ok_or_else(singular)?;
            y.set_column(j, &sol);
        } else {
            let mut a = DMatrix::zeros(2 * k, 2 * k);
            let id = DMatrix::<f64>::identity(k, k);
            a.view_mut((0, 0), (k, k)).copy_from(&(t11 - &id * t22[(j, j)]));
            a.view_mut((0, k), (k, k)).copy_from(&(&id * -t22[(j + 1, j)]));
            a.view_mut((k, 0), (k, k)).copy_from(&(&id * -t22[(j, j + 1)]));
            a.view_mut((k, k), (k, k)).copy_from(&(t11 - &id * t22[(j + 1, j + 1)]));
            let mut rhs = DVector::zeros(2 * k);
            rhs.rows_mut(0, k).copy_from(&rhs_col(j, &y));
            rhs.rows_mut(k, k).copy_from(&rhs_col(j + 1, &y));
            let sol = a.lu().solve(&rhs).ok_or_else(singular)?;
            y.set_column(j, &sol.rows(0, k));
            y.set_column(j + 1, &sol.rows(k, k));
        }
        j += s;
    }
    Ok(y)
}

impl HyperbolicSplitting {
    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn stable_dim(&self) -> usize {
        self.stable_moduli.len()
    }

    pub fn unstable_dim(&self) -> usize {
        self.unstable_moduli.len()
    }

    pub fn linear(&self) -> &LinearOp {
        &self.linear
    }

    pub fn linear_inverse(&self) -> &LinearOp {
        &self.linear_inv
    }

    pub fn p_s(&self) -> &LinearOp {
        &self.p_s
    }

    pub fn p_u(&self) -> &LinearOp {
        &self.p_u
    }

    /// `Λ` restricted to the stable subspace, in an orthonormal basis of it.
    pub fn stable_block(&self) -> &DMatrix<f64> {
        &self.stable_block
    }

    /// `Λ` restricted to the unstable subspace (quasi-triangular form).
    pub fn unstable_block(&self) -> &DMatrix<f64> {
        &self.unstable_block
    }

    /// `min | |λ| − 1 |` over the spectrum.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn annuli(&self) -> Annuli {
        let range = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some((
                    v.iter().copied().fold(f64::INFINITY, f64::min),
                    v.iter().copied().fold(0.0, f64::max),
                ))
            }
        };
        Annuli {
            stable: range(&self.stable_moduli),
            unstable: range(&self.unstable_moduli),
        }
    }

    /// `Λ∘P_s`, which acts as `Λ_s` on the stable subspace and as 0 elsewhere.
    pub fn stable_part(&self) -> LinearOp {
        self.linear.compose(&self.p_s)
    }

    /// `Λ⁻¹∘P_u`.
    pub fn unstable_inverse_part(&self) -> LinearOp {
        self.linear_inv.compose(&self.p_u)
    }

    /// Largest deviation from `P_s + P_u = I`, `P² = P`, `P_sP_u = 0`.
    pub fn projector_defect(&self) -> f64 {
        let n = self.dim();
        let ps = self.p_s.to_dense();
        let pu = self.p_u.to_dense();
        let id = DMatrix::<f64>::identity(n, n);
        [
            (&ps + &pu - &id).amax(),
            (&ps * &ps - &ps).amax(),
            (&pu * &pu - &pu).amax(),
            (&ps * &pu).amax(),
            (&pu * &ps).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// `max(‖ΛP_s − P_sΛ‖, ‖ΛP_u − P_uΛ‖)` in max-entry norm.
    pub fn commutation_defect(&self) -> f64 {
        let l = self.linear.to_dense();
        let ps = self.p_s.to_dense();
        let pu = self.p_u.to_dense();
        (&l * &ps - &ps * &l).amax().max((&l * &pu - &pu * &l).amax())
    }

    /// Checks `‖Λ_s^k‖^{1/k} ∈ [a(1−tol), b(1+tol)]` and the unstable analogue.
    pub fn radius_bounds_hold(&self, k: u32, norm: Norm, tol: f64) -> bool {
        let (rs, ru) = adapted_operator_norms(self, k, norm);
        let ann = self.annuli();
        let stable_ok = ann
            .stable
            .is_none_or(|(a, b)| rs >= a * (1.0 - tol) && rs <= b * (1.0 + tol));
        let unstable_ok = ann
            .unstable
            .is_none_or(|(c, d)| ru >= (1.0 / d) * (1.0 - tol) && ru <= (1.0 / c) * (1.0 + tol));
        stable_ok && unstable_ok
    }
}

/// `ρ_s = ‖Λ_s^k‖^{1/k}` and `ρ_u = ‖Λ_u^{−k}‖^{1/k}`, measured as
/// `‖(ΛP_s)^k‖^{1/k}` and `‖(Λ⁻¹P_u)^k‖^{1/k}` in the given norm. A trivial
/// side reports 0.
pub fn adapted_operator_norms(s: &HyperbolicSplitting, k: u32, norm: Norm) -> (f64, f64) {
    let k = k.max(1);
    let rate = |op: LinearOp| op.pow(k).op_norm(norm).powf(1.0 / k as f64);
    (rate(s.stable_part()), rate(s.unstable_inverse_part()))
}

/// `‖A^k‖^{1/k}` for a bare matrix.
pub fn power_norm_rate(a: &DMatrix<f64>, k: u32, norm: Norm) -> f64 {
    let k = k.max(1);
    norm.of_matrix(&a.pow(k)).powf(1.0 / k as f64)
}

/// Constants with `‖A^j‖ ≤ constant·rate^j` for every `j ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricBound {
    pub rate: f64,
    pub constant: f64,
}

impl GeometricBound {
    /// Bound on `Σ_{j ≥ from} ‖A^j‖`.
    pub fn tail(&self, from: usize) -> f64 {
        if self.constant == 0.0 {
            return 0.0;
        }
        self.constant * self.rate.powi(from as i32) / (1.0 - self.rate)
    }
}

/// Geometric bound built from `ρ = ‖A^K‖^{1/K}` and the first `K` powers:
/// submultiplicativity gives `‖A^{qK+r}‖ ≤ ‖A^r‖·ρ^{qK}`.
pub fn geometric_bound(a: &LinearOp, k: u32, norm: Norm) -> Result<GeometricBound> {
    let k = k.max(1);
    let n = a.dim();
    let mut power = LinearOp::identity(n);
    let mut norms = Vec::with_capacity(k as usize + 1);
    for _ in 0..=k {
        norms.push(power.op_norm(norm));
        power = power.compose(a);
    }
    let top = norms[k as usize];
    if top == 0.0 {
        // nilpotent (or zero): only the first k powers contribute
        let constant = norms.iter().copied().fold(0.0, f64::max);
        return Ok(GeometricBound {
            rate: 0.0,
            constant: if constant > 0.0 && norms[1..].iter().all(|&v| v == 0.0) {
                0.0
            } else {
                constant
            },
        });
    }
    let rate = top.powf(1.0 / k as f64);
    if rate >= 1.0 {
        return Err(Error::Numerical {
            context: "geometric series bound",
            detail: format!("adapted rate {rate} is not below 1 at power {k}"),
            residual: rate,
        });
    }
    let constant = norms[..k as usize]
        .iter()
        .enumerate()
        .map(|(j, &v)| v / rate.powi(j as i32))
        .fold(1.0f64, f64::max);
    Ok(GeometricBound { rate, constant })
}

/// Spectral band width condition, as a swappable rule that turns the annuli
/// and the Hölder exponent into a predicted exponent `β ∈ (0, α]`.
pub trait BandWidthPredicate: Send + Sync {
    fn name(&self) -> &str;
    /// Unclamped prediction; `None` when the predicate does not apply.
    fn predict(&self, annuli: &Annuli, alpha: f64) -> Option<f64>;
}

/// `β = min(α, ln a/ln b − 1, ln d/ln c − 1)`. A side whose annulus is a
/// single circle (`a = b`, `c = d`) or which is empty imposes nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct GapRatio;

impl BandWidthPredicate for GapRatio {
    fn name(&self) -> &str {
        "gap_ratio"
    }

    fn predict(&self, annuli: &Annuli, alpha: f64) -> Option<f64> {
        let term = |lo: f64, hi: f64, numerator_is_lo: bool| {
            if (hi - lo).abs() <= 1e-12 * hi {
                f64::INFINITY
            } else if numerator_is_lo {
                lo.ln() / hi.ln() - 1.0
            } else {
                hi.ln() / lo.ln() - 1.0
            }
        };
        let stable = annuli.stable.map_or(f64::INFINITY, |(a, b)| term(a, b, true));
        let unstable = annuli.unstable.map_or(f64::INFINITY, |(c, d)| term(c, d, false));
        Some(alpha.min(stable).min(unstable))
    }
}

/// Looks up a predicate by identifier.
pub fn predicate_by_name(name: &str) -> Result<Box<dyn BandWidthPredicate>> {
    match name {
        "gap_ratio" => Ok(Box::new(GapRatio)),
        other => Err(Error::config(format!(
            "unknown band width predicate '{other}' (known: gap_ratio)"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandWidthReport {
    pub alpha: f64,
    pub beta_predicted: Option<f64>,
    pub predicate_name: String,
    pub satisfied: bool,
    pub annuli: Annuli,
}

pub fn band_width_check(s: &HyperbolicSplitting, alpha: f64, predicate: &str) -> Result<BandWidthReport> {
    let p = predicate_by_name(predicate)?;
    band_width_check_with(s, alpha, p.as_ref())
}

pub fn band_width_check_with(
    s: &HyperbolicSplitting,
    alpha: f64,
    predicate: &dyn BandWidthPredicate,
) -> Result<BandWidthReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let annuli = s.annuli();
    let beta = predicate
        .predict(&annuli, alpha)
        .map(|b| b.min(alpha))
        .filter(|b| *b > 0.0);
    Ok(BandWidthReport {
        alpha,
        beta_predicted: beta,
        predicate_name: predicate.name().to_string(),
        satisfied: beta.is_some(),
        annuli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn diagonal_saddle() {
        let s = split(&diag(&[0.5, 2.0]), DEFAULT_HYPERBOLICITY_TOL).unwrap();
        assert_eq!(s.p_s().to_dense(), diag(&[1.0, 0.0]));
        assert_eq!(s.p_u().to_dense(), diag(&[0.0, 1.0]));
        let a = s.annuli();
        assert_eq!(a.stable, Some((0.5, 0.5)));
        assert_eq!(a.unstable, Some((2.0, 2.0)));
        for k in [1, 7, 64] {
            assert_eq!(adapted_operator_norms(&s, k, Norm::Sup), (0.5, 0.5));
        }
    }

    #[test]
    fn dense_saddle_matches_diagonal() {
        // same saddle in a rotated basis
        let th = 0.3f64;
        let r = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]);
        let m = &r * diag(&[0.5, 2.0]) * r.transpose();
        let s = split(&m, 1e-6).unwrap();
        assert!(s.projector_defect() < 1e-12);
        assert!(s.commutation_defect() < 1e-12);
        let ps_expected = &r * diag(&[1.0, 0.0]) * r.transpose();
        assert!((s.p_s().to_dense() - ps_expected).amax() < 1e-12);
    }

    #[test]
    fn scaled_rotation_is_entirely_stable() {
        let th = std::f64::consts::PI / 6.0;
        let m = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]) * 0.5;
        let s = split(&m, 1e-6).unwrap();
        assert_eq!(s.stable_dim(), 2);
        assert_eq!(s.unstable_dim(), 0);
        let a = s.annuli();
        let (lo, hi) = a.stable.unwrap();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 0.5).abs() < 1e-14);
        assert_eq!(a.unstable, None);
        assert!((s.p_s().to_dense() - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn unit_modulus_is_rejected() {
        let err = split(&diag(&[0.5, 1.0]), DEFAULT_HYPERBOLICITY_TOL).unwrap_err();
        assert!(matches!(err, Error::NonHyperbolic { .. }));
        let near = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 1.0 + 1e-8]);
        assert!(matches!(split(&near, 1e-6), Err(Error::NonHyperbolic { .. })));
    }

    #[test]
    fn singular_is_invalid_input() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 4.0, 2.0]);
        assert!(matches!(split(&m, 1e-6), Err(Error::InvalidInput(_))));
        assert!(matches!(split(&diag(&[0.0, 3.0]), 1e-6), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn jordan_block_rate() {
        let j = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        let direct = {
            let mut p = DMatrix::<f64>::identity(2, 2);
            for _ in 0..64 {
                p = &p * &j;
            }
            p.clone().singular_values().max().powf(1.0 / 64.0)
        };
        let rate = power_norm_rate(&j, 64, Norm::Euclidean);
        assert!((rate - direct).abs() < 1e-12);
        assert!((rate - 0.5).abs() / 0.5 < 0.1);
        let s = split(&j, 1e-6).unwrap();
        let (rs, ru) = adapted_operator_norms(&s, 64, Norm::Euclidean);
        assert!((rs - 0.5).abs() / 0.5 < 0.1);
        assert_eq!(ru, 0.0);
    }

    #[test]
    fn rate_monotone_for_normal_stable_part() {
        let th = 0.9f64;
        let m = DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]) * 0.7;
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let r = power_norm_rate(&m, k, Norm::Euclidean);
            assert!(r <= prev * (1.0 + 1e-12));
            prev = r;
        }
    }

    #[test]
    fn geometric_bound_dominates_powers() {
        let a = LinearOp::Dense(DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]));
        let g = geometric_bound(&a, 64, Norm::Euclidean).unwrap();
        let mut p = LinearOp::identity(2);
        for j in 0..300 {
            assert!(p.op_norm(Norm::Euclidean) <= g.constant * g.rate.powi(j) * (1.0 + 1e-9));
            p = p.compose(&a);
        }
        let zero = geometric_bound(&LinearOp::Diagonal(DVector::zeros(3)), 64, Norm::Sup).unwrap();
        assert_eq!(zero.tail(0), 0.0);
    }

    #[test]
    fn band_width_examples() {
        let s = split(&diag(&[0.5, 2.0]), 1e-6).unwrap();
        let r = band_width_check(&s, 1.0, "gap_ratio").unwrap();
        assert_eq!(r.beta_predicted, Some(1.0));
        assert!(r.satisfied);
        assert_eq!(r.predicate_name, "gap_ratio");

        let s = split(&diag(&[0.5, 0.9, 2.0]), 1e-6).unwrap();
        let term = 0.5f64.ln() / 0.9f64.ln() - 1.0;
        assert!((term - 5.578_813_478_960_585).abs() < 1e-12);
        let r = band_width_check(&s, 1.0, "gap_ratio").unwrap();
        assert_eq!(r.beta_predicted, Some(1.0));

        let s = split(&diag(&[0.2, 0.9, 2.0]), 1e-6).unwrap();
        assert_eq!(band_width_check(&s, 1.0, "gap_ratio").unwrap().beta_predicted, Some(1.0));
        assert_eq!(band_width_check(&s, 0.3, "gap_ratio").unwrap().beta_predicted, Some(0.3));

        // narrow stable band: ln(0.5)/ln(0.55) − 1 ≈ 0.159 caps α = 1
        let s = split(&diag(&[0.5, 0.55, 3.0]), 1e-6).unwrap();
        let b = band_width_check(&s, 1.0, "gap_ratio").unwrap().beta_predicted.unwrap();
        assert!((b - (0.5f64.ln() / 0.55f64.ln() - 1.0)).abs() < 1e-12);

        assert!(matches!(band_width_check(&s, 1.0, "sharp"), Err(Error::Config(_))));
        assert!(band_width_check(&s, 0.0, "gap_ratio").is_err());
    }

    #[test]
    fn custom_predicates_plug_in() {
        struct Never;
        impl BandWidthPredicate for Never {
            fn name(&self) -> &str {
                "never"
            }
            fn predict(&self, _: &Annuli, _: f64) -> Option<f64> {
                None
            }
        }
        let s = split(&diag(&[0.5, 2.0]), 1e-6).unwrap();
        let r = band_width_check_with(&s, 1.0, &Never).unwrap();
        assert!(!r.satisfied);
        assert_eq!(r.beta_predicted, None);
        assert_eq!(r.predicate_name, "never");
    }

    #[test]
    fn random_hyperbolic_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut tested = 0;
        while tested < 40 {
            let n = rng.random_range(2..=16);
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) * (3.0 / (n as f64).sqrt());
            let s = match split(&m, 0.05) {
                Ok(s) => s,
                Err(Error::NonHyperbolic { .. }) | Err(Error::InvalidInput(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(s.projector_defect() < 1e-10, "n={n}: {}", s.projector_defect());
            let lnorm = m.amax();
            assert!(s.commutation_defect() <= 1e-10 * lnorm);
            assert_eq!(s.stable_dim() + s.unstable_dim(), n);
            tested += 1;
        }
    }
}
