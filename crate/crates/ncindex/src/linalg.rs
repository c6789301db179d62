//! Thin helpers over `faer` dense complex matrices.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};

use crate::error::{Error, Result};

pub use faer::c64;
pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

#[inline]
pub fn cr(x: f64) -> c64 {
    c64::new(x, 0.0)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn eye(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn diag_real(d: &[f64]) -> CMat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { cr(d[i]) } else { c64::new(0.0, 0.0) })
}

pub fn diag(d: &[c64]) -> CMat {
    Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { c64::new(0.0, 0.0) })
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn scale(a: &CMat, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn mul(a: &CMat, b: &CMat) -> CMat {
    let mut out = zeros(a.nrows(), b.ncols());
    mul_into(&mut out, a, b);
    out
}

/// `out = a * b`, sequential (the hot loops call this many thousand times).
pub fn mul_into(out: &mut CMat, a: &CMat, b: &CMat) {
    matmul(out.as_mut(), Accum::Replace, a.as_ref(), b.as_ref(), cr(1.0), Par::Seq);
}

pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Tr(a b) without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn fro(a: &CMat) -> f64 {
    a.norm_l2()
}

/// Largest singular value.
pub fn opnorm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    match a.singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => fro(a),
    }
}

pub fn herm_defect(a: &CMat) -> f64 {
    fro(&(a - a.adjoint()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (n, m) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * n, a.ncols() * m, |i, j| a[(i / n, j / m)] * b[(i % n, j % m)])
}

/// Hermitian eigendecomposition: ascending eigenvalues, unitary eigenvector columns.
pub fn eigh(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((vec![], zeros(0, 0)));
    }
    let sym = Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let e = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("eigensolver: {e:?}")))?;
    let vals = (0..n).map(|i| e.S().column_vector()[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

/// Full SVD `a = U diag(s) V*` with `s` descending; `U` is n×n and `V` is m×m.
pub fn svd_full(a: &CMat) -> Result<(Vec<f64>, CMat, CMat)> {
    let (n, m) = (a.nrows(), a.ncols());
    if n == 0 || m == 0 {
        return Ok((vec![], eye(n), eye(m)));
    }
    let s = a.svd().map_err(|e| Error::LinAlg(format!("svd: {e:?}")))?;
    let k = n.min(m);
    let vals = (0..k).map(|i| s.S().column_vector()[i].re).collect();
    Ok((vals, s.U().to_owned(), s.V().to_owned()))
}

/// Orthonormal basis (columns) for the range of a Hermitian projection.
pub fn range_basis(p: &CMat) -> Result<CMat> {
    let (vals, vecs) = eigh(p)?;
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    Ok(Mat::from_fn(p.nrows(), cols.len(), |i, j| vecs[(i, cols[j])]))
}

pub fn pauli() -> [CMat; 3] {
    let z = c64::new(0.0, 0.0);
    let one = cr(1.0);
    let s1 = Mat::from_fn(2, 2, |i, j| if i != j { one } else { z });
    let s2 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => -I,
        (1, 0) => I,
        _ => z,
    });
    let s3 = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => one,
        (1, 1) => -one,
        _ => z,
    });
    [s1, s2, s3]
}
