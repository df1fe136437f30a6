//! Real Schur form with the diagonal blocks reordered so that every
//! eigenvalue inside the unit circle comes first.
//!
//! Adjacent blocks are exchanged by direct swapping: solve the small
//! Sylvester equation `A₁₁X − XA₂₂ = A₁₂`, then rotate with the orthogonal
//! factor of `[[−X, I], [I, 0]]`.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `m = Z·T·Zᵀ` with `T` quasi upper triangular and `blocks` the sizes of
/// its diagonal blocks, top to bottom.
#[derive(Debug, Clone)]
pub struct OrderedSchur {
    pub z: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub blocks: Vec<usize>,
    /// Modulus of each block's eigenvalue(s), aligned with `blocks`.
    pub moduli: Vec<f64>,
    /// Number of leading rows/columns belonging to stable blocks.
    pub stable_dim: usize,
}

const SCHUR_MAX_ITERS: usize = 100_000;

pub fn ordered_schur(m: &DMatrix<f64>) -> Result<OrderedSchur> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITERS).ok_or(Error::Numerical {
        context: "real Schur decomposition",
        detail: "QR iteration did not converge".into(),
        residual: f64::NAN,
    })?;
    let (mut z, mut t) = schur.unpack();

    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && is_coupled(&t, i) {
            if two_by_two_is_real(&t, i) {
                split_real_pair(&mut t, &mut z, i);
                blocks.push(1);
                blocks.push(1);
            } else {
                blocks.push(2);
            }
            i += 2;
        } else {
            if i + 1 < n {
                t[(i + 1, i)] = 0.0;
            }
            blocks.push(1);
            i += 1;
        }
    }

    // bubble stable blocks to the top
    let nb = blocks.len();
    for _ in 0..nb {
        let mut swapped = false;
        let mut start = 0;
        for b in 0..nb.saturating_sub(1) {
            let (p, q) = (blocks[b], blocks[b + 1]);
            let s1 = block_modulus(&t, start, p) < 1.0;
            let s2 = block_modulus(&t, start + p, q) < 1.0;
            if !s1 && s2 {
                swap_blocks(&mut t, &mut z, start, p, q)?;
                blocks.swap(b, b + 1);
                swapped = true;
                start += q;
            } else {
                start += p;
            }
        }
        if !swapped {
            break;
        }
    }
    clean_below_blocks(&mut t, &blocks);

    let mut moduli = Vec::with_capacity(nb);
    let mut start = 0;
    let mut stable_dim = 0;
    for &s in &blocks {
        let md = block_modulus(&t, start, s);
        if md < 1.0 {
            stable_dim += s;
        }
        moduli.push(md);
        start += s;
    }
    Ok(OrderedSchur {
        z,
        t,
        blocks,
        moduli,
        stable_dim,
    })
}

fn is_coupled(t: &DMatrix<f64>, i: usize) -> bool {
    let sub = t[(i + 1, i)].abs();
    sub > 4.0 * f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs()).max(f64::MIN_POSITIVE)
}

fn two_by_two_is_real(t: &DMatrix<f64>, i: usize) -> bool {
    let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let half = 0.5 * (a - d);
    half * half + b * c >= 0.0
}

/// Triangularizes a 2×2 diagonal block whose eigenvalues are real.
fn split_real_pair(t: &mut DMatrix<f64>, z: &mut DMatrix<f64>, i: usize) {
    let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
    let half = 0.5 * (a - d);
    let root = (half * half + b * c).max(0.0).sqrt();
    let lambda = 0.5 * (a + d) + if half >= 0.0 { root } else { -root };
    // eigenvector of [[a, b], [c, d]] for lambda
    let v1 = (b, lambda - a);
    let v2 = (lambda - d, c);
    let (x, y) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
    let len = x.hypot(y);
    let (cs, sn) = (x / len, y / len);
    let g = DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
    apply_similarity(t, z, i, &g);
    t[(i + 1, i)] = 0.0;
}

fn block_modulus(t: &DMatrix<f64>, start: usize, size: usize) -> f64 {
    if size == 1 {
        t[(start, start)].abs()
    } else {
        let (a, b, c, d) = (
            t[(start, start)],
            t[(start, start + 1)],
            t[(start + 1, start)],
            t[(start + 1, start + 1)],
        );
        (a * d - b * c).abs().sqrt()
    }
}

/// `T ← QᵀTQ`, `Z ← ZQ` with `Q` acting on indices `start..start + k`.
fn apply_similarity(t: &mut DMatrix<f64>, z: &mut DMatrix<f64>, start: usize, q: &DMatrix<f64>) {
    let k = q.nrows();
    let cols = t.columns(start, k) * q;
    t.columns_mut(start, k).copy_from(&cols);
    let rows = q.transpose() * t.rows(start, k);
    t.rows_mut(start, k).copy_from(&rows);
    let zc = z.columns(start, k) * q;
    z.columns_mut(start, k).copy_from(&zc);
}

fn swap_blocks(t: &mut DMatrix<f64>, z: &mut DMatrix<f64>, start: usize, p: usize, q: usize) -> Result<()> {
    let a11 = t.view((start, start), (p, p)).clone_owned();
    let a22 = t.view((start + p, start + p), (q, q)).clone_owned();
    let a12 = t.view((start, start + p), (p, q)).clone_owned();

    // (I_q ⊗ A11 − A22ᵀ ⊗ I_p) vec(X) = vec(A12)
    let pq = p * q;
    let mut k = DMatrix::zeros(pq, pq);
    for jc in 0..q {
        for ic in 0..p {
            let row = jc * p + ic;
            for l in 0..p {
                k[(row, jc * p + l)] += a11[(ic, l)];
            }
            for l in 0..q {
                k[(row, l * p + ic)] -= a22[(l, jc)];
            }
        }
    }
    let rhs = DVector::from_iterator(pq, a12.iter().copied());
    let x = k.lu().solve(&rhs).ok_or(Error::Numerical {
        context: "Schur block swap",
        detail: "blocks share an eigenvalue".into(),
        residual: f64::NAN,
    })?;
    let x = DMatrix::from_column_slice(p, q, x.as_slice());

    let s = p + q;
    let mut m = DMatrix::zeros(s, s);
    m.view_mut((0, 0), (p, q)).copy_from(&(-&x));
    m.view_mut((0, q), (p, p)).fill_with_identity();
    m.view_mut((p, 0), (q, q)).fill_with_identity();
    let qm = m.qr().q();
    apply_similarity(t, z, start, &qm);

    let leak = t.view((start + q, start), (p, q)).amax();
    let scale = t.view((start, start), (s, s)).amax().max(1.0);
    if leak > 1e-8 * scale {
        return Err(Error::Numerical {
            context: "Schur block swap",
            detail: "swap is ill conditioned".into(),
            residual: leak,
        });
    }
    t.view_mut((start + q, start), (p, q)).fill(0.0);
    Ok(())
}

fn clean_below_blocks(t: &mut DMatrix<f64>, blocks: &[usize]) {
    let n = t.nrows();
    let mut start = 0;
    for &s in blocks {
        for col in start..start + s {
            for row in start + s..n {
                t[(row, col)] = 0.0;
            }
        }
        start += s;
    }
}
