//! Dense complex matrix helpers on top of nalgebra.
//!
//! Everything operates on dynamically sized `DMatrix<Complex<f64>>`; the
//! composite-index convention is row-major throughout: a vector on
//! `C^a ⊗ C^b` stores component `(p, q)` at index `p·b + q`, matching
//! `kron(A, B)` with the first factor on the left.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Complex scalar from real and imaginary parts.
#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Real scalar as a complex number.
#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

/// Matrix unit E_{ab} of size n×n.
pub fn matrix_unit(n: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(a, b)] = cr(1.0);
    m
}

/// Kronecker product, first factor on the left (row-major composite index).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// True when every entry is finite.
pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Hilbert–Schmidt inner product ⟨a, b⟩ = tr(a† b).
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius (Hilbert–Schmidt) norm.
pub fn fro_norm(m: &CMat) -> f64 {
    m.norm()
}

/// Operator norm (largest singular value), from the Gram matrix on the
/// smaller side.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let (vals, _) = hermitian_eigen_sorted(&gram);
    vals.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Rank of an arbitrary matrix at singular-value threshold `eps`.
pub fn rank(m: &CMat, eps: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let (vals, _) = hermitian_eigen_sorted(&gram);
    vals.iter().filter(|&&v| v > eps * eps).count()
}

/// Residual ‖m − m†‖_F.
pub fn hermiticity_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

/// Residual ‖m†m − 1‖_F; zero for unitaries.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - identity(n)).norm()
}

/// Direct sum ⊕ of square blocks.
pub fn direct_sum(blocks: &[CMat]) -> CMat {
    let n: usize = blocks.iter().map(CMat::nrows).sum();
    let mut out = CMat::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
        off += b.nrows();
    }
    out
}

/// Swap unitary S: C^a ⊗ C^b → C^b ⊗ C^a with S(x⊗y) = y⊗x.
pub fn swap_matrix(a: usize, b: usize) -> CMat {
    let mut s = CMat::zeros(a * b, a * b);
    for p in 0..a {
        for q in 0..b {
            s[(q * a + p, p * b + q)] = cr(1.0);
        }
    }
    s
}

/// Permutation matrix P with P e_i = e_{perm[i]}.
pub fn perm_matrix(perm: &[usize]) -> CMat {
    let n = perm.len();
    let mut p = CMat::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        p[(j, i)] = cr(1.0);
    }
    p
}

/// Partial trace over the right factor of C^{da} ⊗ C^{db}.
pub fn ptrace_right(m: &CMat, da: usize, db: usize) -> CMat {
    debug_assert_eq!(m.nrows(), da * db);
    let mut out = CMat::zeros(da, da);
    for a in 0..da {
        for a2 in 0..da {
            let mut acc = C64::default();
            for q in 0..db {
                acc += m[(a * db + q, a2 * db + q)];
            }
            out[(a, a2)] = acc;
        }
    }
    out
}

/// Partial trace over the left factor of C^{da} ⊗ C^{db}.
pub fn ptrace_left(m: &CMat, da: usize, db: usize) -> CMat {
    debug_assert_eq!(m.nrows(), da * db);
    let mut out = CMat::zeros(db, db);
    for q in 0..db {
        for q2 in 0..db {
            let mut acc = C64::default();
            for p in 0..da {
                acc += m[(p * db + q, p * db + q2)];
            }
            out[(q, q2)] = acc;
        }
    }
    out
}

/// Row-major vectorization: index a·cols + b holds m[(a, b)].
pub fn vec_r(m: &CMat) -> CVec {
    let (r, c_) = m.shape();
    CVec::from_fn(r * c_, |i, _| m[(i / c_, i % c_)])
}

/// Inverse of [`vec_r`] for square matrices of size n.
pub fn unvec_r(v: &CVec, n: usize) -> CMat {
    debug_assert_eq!(v.len(), n * n);
    CMat::from_fn(n, n, |a, b| v[a * n + b])
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations, with
/// eigenpairs sorted by descending eigenvalue (ties broken by sweep order).
/// Fully deterministic: fixed rotation order, no pivoting heuristics.
pub fn hermitian_eigen_sorted(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let mut a = m.clone();
    let mut v = identity(n);
    let scale = a.norm().max(1e-300);
    let thresh = scale * 1e-15;

    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                let babs = b.norm();
                if babs <= thresh {
                    continue;
                }
                rotated = true;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = b / cr(babs);
                let tau = (app - aqq) / (2.0 * babs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;

                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * cr(cth) + aiq * phase.conj() * cr(sth);
                    a[(i, q)] = aiq * cr(cth) - aip * phase * cr(sth);
                    a[(p, i)] = a[(i, p)].conj();
                    a[(q, i)] = a[(i, q)].conj();
                }
                let shift = 2.0 * cth * sth * babs;
                a[(p, p)] = cr(cth * cth * app + sth * sth * aqq + shift);
                a[(q, q)] = cr(sth * sth * app + cth * cth * aqq - shift);
                a[(p, q)] = cr(0.0);
                a[(q, p)] = cr(0.0);

                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cr(cth) + viq * phase.conj() * cr(sth);
                    v[(i, q)] = viq * cr(cth) - vip * phase * cr(sth);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re).then(i.cmp(&j)));
    let vals: Vec<f64> = idx.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &v.column(i));
    }
    (vals, vecs)
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let (vals, vecs) = hermitian_eigen_sorted(m);
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let v = vecs.column(k);
        let fv = f(lam);
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] += fv * v[a] * v[b].conj();
            }
        }
    }
    out
}

/// Inverse square root of a positive definite Hermitian matrix.
///
/// Fails when the smallest eigenvalue is below `floor`.
pub fn psd_inv_sqrt(m: &CMat, floor: f64) -> Option<CMat> {
    let (vals, _) = hermitian_eigen_sorted(m);
    if vals.last().copied().unwrap_or(0.0) < floor {
        return None;
    }
    Some(hermitian_fn(m, |lam| cr(1.0 / lam.sqrt())))
}

/// Modified Gram–Schmidt over the given candidate vectors; keeps those whose
/// residual against the running span exceeds `tol` (relative to the candidate
/// norm). Returns a matrix with orthonormal columns spanning the candidates.
pub fn orthonormal_span(cands: &[CVec], tol: f64) -> CMat {
    let dim = cands.first().map_or(0, CVec::len);
    let mut cols: Vec<CVec> = Vec::new();
    for cand in cands {
        let scale = cand.norm().max(1.0);
        let mut v = cand.clone();
        // two MGS passes for numerical orthogonality
        for _ in 0..2 {
            for q in &cols {
                let coef = q.dotc(&v);
                v -= q * coef;
            }
        }
        if v.norm() > tol * scale {
            let nrm = v.norm();
            cols.push(v / cr(nrm));
        }
    }
    let mut out = CMat::zeros(dim, cols.len());
    for (k, q) in cols.iter().enumerate() {
        out.set_column(k, q);
    }
    out
}

/// Extends a set of orthonormal columns to a full orthonormal basis by
/// Gram–Schmidt over the canonical basis vectors, scanned in index order.
pub fn complete_orthonormal_basis(cols: &CMat) -> CMat {
    let n = cols.nrows();
    let k = cols.ncols();
    let mut basis: Vec<CVec> = (0..k).map(|j| cols.column(j).into_owned()).collect();
    let mut e = 0;
    while basis.len() < n {
        assert!(e < n, "orthonormal completion exhausted the canonical basis");
        let mut v = CVec::zeros(n);
        v[e] = cr(1.0);
        for _ in 0..2 {
            for q in &basis {
                let coef = q.dotc(&v);
                v -= q * coef;
            }
        }
        let nrm = v.norm();
        if nrm > 1e-6 {
            basis.push(v / cr(nrm));
        }
        e += 1;
    }
    let mut out = CMat::zeros(n, n);
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}
