//! Small dense helpers shared by the engines.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use num_complex::Complex64 as C64;

pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// σ⁻ = |0⟩⟨1|, lowering |1⟩ to |0⟩.
pub fn sigma_minus() -> Mat2 {
    Mat2::new(ZERO, ONE, ZERO, ZERO)
}

/// Projector onto the computational basis state `bit`.
pub fn projector(bit: u8) -> Mat2 {
    if bit == 0 {
        Mat2::new(ONE, ZERO, ZERO, ZERO)
    } else {
        Mat2::new(ZERO, ZERO, ZERO, ONE)
    }
}

/// |+⟩⟨+|
pub fn plus_projector() -> Mat2 {
    Mat2::from_element(c(0.5))
}

/// Kronecker product `a ⊗ b` in row-major index order `(i, j) ↦ 2i + j`.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

pub fn max_abs<'a, I: IntoIterator<Item = &'a C64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Von Neumann entropy in bits of a set of non-negative weights, normalized
/// to unit sum. Negative round-off is clamped to zero.
pub fn entropy_bits(weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let s = weights
        .iter()
        .map(|w| w.max(0.0) / total)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.log2())
        .sum::<f64>();
    s.max(0.0)
}

/// Singular value decomposition with singular values sorted in descending
/// order. Thin factors: `u` is m×k, `vt` is k×n with k = min(m, n).
///
/// The LAPACK-style bidiagonal routine occasionally misconverges on
/// rank-deficient complex input, so its result is checked and replaced by a
/// one-sided Jacobi decomposition when the reconstruction is off.
pub fn svd_sorted(m: DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let scale = m.norm();
    if scale == 0.0 || !scale.is_finite() {
        return jacobi_svd(&m);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let (u, sv, vt) = sort_triplet(u, sv, vt);
    let sm = DMatrix::from_diagonal(&DVector::from_iterator(sv.len(), sv.iter().map(|&x| c(x))));
    let resid = (&u * sm * &vt - &m).norm();
    let ortho = (u.adjoint() * &u - DMatrix::identity(u.ncols(), u.ncols())).norm()
        + (&vt * vt.adjoint() - DMatrix::identity(vt.nrows(), vt.nrows())).norm();
    if resid <= 1e-11 * scale && ortho <= 1e-10 {
        (u, sv, vt)
    } else {
        jacobi_svd(&m)
    }
}

fn sort_triplet(
    u: DMatrix<C64>,
    sv: Vec<f64>,
    vt: DMatrix<C64>,
) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap_or(std::cmp::Ordering::Equal));
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return (u, sv, vt);
    }
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |r, col| u[(r, order[col])]);
    let vt_sorted = DMatrix::from_fn(order.len(), vt.ncols(), |r, col| vt[(order[r], col)]);
    let s_sorted = order.iter().map(|&o| sv[o]).collect();
    (u_sorted, s_sorted, vt_sorted)
}

/// One-sided (Hestenes) Jacobi SVD. Slower than the bidiagonal routine but
/// accurate for any rank.
pub fn jacobi_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    if m.nrows() < m.ncols() {
        let (u, s, vt) = jacobi_svd(&m.adjoint());
        return (vt.adjoint(), s, u.adjoint());
    }
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<C64>::identity(cols, cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let ph = phase.conj();
                for r in 0..rows {
                    let ap = a[(r, p)];
                    let aq = a[(r, q)] * ph;
                    a[(r, p)] = ap * cs - aq * sn;
                    a[(r, q)] = ap * sn + aq * cs;
                }
                for r in 0..cols {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)] * ph;
                    v[(r, p)] = vp * cs - vq * sn;
                    v[(r, q)] = vp * sn + vq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let mut u = DMatrix::<C64>::zeros(rows, cols);
    let mut filled = vec![false; cols];
    for j in 0..cols {
        if sv[j] > smax * 1e-300 && sv[j] > 0.0 {
            let col = a.column(j) / c(sv[j]);
            u.set_column(j, &col);
            filled[j] = true;
        }
    }
    // Complete the basis for null directions.
    let mut e = 0;
    for j in 0..cols {
        if filled[j] {
            continue;
        }
        while e < rows {
            let mut cand = DVector::<C64>::zeros(rows);
            cand[e] = ONE;
            e += 1;
            for _ in 0..2 {
                for k in 0..cols {
                    if filled[k] {
                        let proj = u.column(k).dotc(&cand);
                        cand -= u.column(k) * proj;
                    }
                }
            }
            let nrm = cand.norm();
            if nrm > 1e-8 {
                u.set_column(j, &(cand / c(nrm)));
                filled[j] = true;
                break;
            }
        }
    }
    sort_triplet(u, sv, v.adjoint())
}

/// Singular values only, descending.
pub fn singular_values(m: DMatrix<C64>) -> Vec<f64> {
    svd_sorted(m).1
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * c(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Row-major copy of a matrix's entries.
pub fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            out.push(m[(r, col)]);
        }
    }
    out
}
