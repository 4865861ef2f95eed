//! Small complex linear algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CVec = DVector<Complex64>;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `|aᴴ b|²`
pub fn abs2_inner(a: &CVec, b: &CVec) -> f64 {
    a.dotc(b).norm_sqr()
}

/// `xᴴ M x` for Hermitian `M` (real part only).
pub fn quad_form(m: &CMat, x: &CVec) -> f64 {
    x.dotc(&(m * x)).re
}

pub fn outer(a: &CVec) -> CMat {
    a * a.adjoint()
}

/// Forces exact Hermitian symmetry.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `Re tr(A B)` for Hermitian `A`.
pub fn trace_prod(a: &CMat, b: &CMat) -> f64 {
    // tr(AB) = Σ conj(A_kl) B_kl when A is Hermitian
    a.dotc(b).re
}

pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order.
pub fn eigh_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitize(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `λ₂ / λ₁` of a PSD matrix; a zero matrix reports 0.
pub fn rank_ratio(vals_desc: &[f64]) -> f64 {
    match vals_desc {
        [] | [_] => 0.0,
        [l1, l2, ..] => {
            if *l1 <= 0.0 {
                0.0
            } else {
                (l2.max(0.0)) / l1
            }
        }
    }
}

/// Orthonormal basis (as columns) of `span{a, b}`; directions with relative
/// norm below `1e-10` are dropped, so the result has 0, 1 or 2 columns.
pub fn span_basis(a: &CVec, b: &CVec) -> CMat {
    let n = a.len();
    let scale = a.norm().max(b.norm());
    let mut cols: Vec<CVec> = Vec::with_capacity(2);
    if scale == 0.0 {
        return CMat::zeros(n, 0);
    }
    for v in [a, b] {
        let mut r = v.clone();
        for u in &cols {
            let proj = u.dotc(&r);
            r -= u * proj;
        }
        let norm = r.norm();
        if norm > 1e-10 * scale {
            cols.push(r / num_complex::Complex64::new(norm, 0.0));
        }
    }
    CMat::from_columns(&cols)
}

pub fn cvec_from_parts(parts: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(parts.len(), parts.iter().map(|&(re, im)| Complex64::new(re, im)))
}

pub fn ensure_same_len(a: &CVec, b: &CVec) -> crate::Result<()> {
    if a.len() != b.len() {
        return Err(crate::Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}
