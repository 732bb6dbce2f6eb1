//! Dense complex matrices, norms, decompositions and span arithmetic.
//!
//! Every rank decision in the crate goes through [`Tolerance`]: singular
//! values are kept when they exceed `eps_rank` times the largest singular
//! value (floored at a caller-supplied scale for products), and membership
//! or equality tests compare Frobenius residuals against `eps_eq`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Comparison thresholds shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Entrywise and residual comparisons.
    pub eps_eq: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub eps_rank: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps_eq: 1e-9, eps_rank: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(eps_eq: f64, eps_rank: f64) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x < 1.0;
        if !ok(eps_eq) || !ok(eps_rank) {
            return Err(Error::InvalidTolerance { eps_eq, eps_rank });
        }
        Ok(Tolerance { eps_eq, eps_rank })
    }

    /// `eps_eq` scaled by `max(1, scale)`.
    pub fn eq_threshold(&self, scale: f64) -> f64 {
        self.eps_eq * scale.max(1.0)
    }
}

/// A dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    /// The `n x n` matrix with a single one at `(i, j)`.
    pub fn matrix_unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.0[(i, j)] = ONE;
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        ComplexMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        ComplexMatrix(m)
    }

    /// Builds a matrix from row-major nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::ShapeMismatch("matrix must have at least one row and column".into()));
        }
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::ShapeMismatch(format!(
                "row {bad} has length {} but row 0 has length {c}",
                rows[bad].len()
            )));
        }
        let m = ComplexMatrix(DMatrix::from_fn(r, c, |i, j| rows[i][j]));
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    /// Real-valued convenience constructor (row-major).
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "from_real: data length");
        ComplexMatrix(DMatrix::from_fn(rows, cols, |i, j| C64::new(data[i * cols + j], 0.0)))
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect()).collect()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.0[(i, j)] = v;
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix(&self.0 * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Trace inner product `tr(self* other)`.
    pub fn inner(&self, other: &ComplexMatrix) -> C64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && (self - &self.adjoint()).frobenius_norm() <= tol
    }

    pub fn sub_block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        ComplexMatrix(self.0.view((r0, c0), (nr, nc)).into_owned())
    }

    pub fn set_sub_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        self.0.view_mut((r0, c0), block.shape()).copy_from(&block.0);
    }

    /// Column-major flattening; the trace inner product becomes the
    /// standard Hermitian inner product of the flattened vectors.
    pub fn vectorized(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        ComplexMatrix(self.0.kronecker(&other.0))
    }

    /// Direct sum `self ⊕ other` as a block diagonal matrix.
    pub fn direct_sum(blocks: &[ComplexMatrix]) -> Self {
        let r: usize = blocks.iter().map(ComplexMatrix::rows).sum();
        let c: usize = blocks.iter().map(ComplexMatrix::cols).sum();
        let mut out = Self::zeros(r, c);
        let (mut i, mut j) = (0, 0);
        for b in blocks {
            out.set_sub_block(i, j, b);
            i += b.rows();
            j += b.cols();
        }
        out
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(C64::new(0.5, 0.0))
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows() {
            write!(f, "[")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                let f: fn(&DMatrix<C64>, &DMatrix<C64>) -> DMatrix<C64> = $body;
                ComplexMatrix(f(&self.0, &rhs.0))
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
        impl $tr<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| a + b);
binop!(Sub, sub, |a, b| a - b);
binop!(Mul, mul, |a, b| a * b);

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> =
            rows.into_iter().map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect()).collect();
        ComplexMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Thin singular value decomposition `m = u diag(s) v*` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd { u: ComplexMatrix::zeros(r, 0), singular_values: Vec::new(), v: ComplexMatrix::zeros(c, 0) };
    }
    let dec = to_faer(m).thin_svd().expect("svd did not converge");
    let s = dec.S().column_vector();
    Svd {
        u: from_faer(dec.U()),
        singular_values: (0..k).map(|i| s[i].re).collect(),
        v: from_faer(dec.V()),
    }
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows().min(m.cols()) == 0 {
        return Vec::new();
    }
    to_faer(m).singular_values().expect("svd did not converge")
}

fn to_faer(m: &ComplexMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.rows(), m.cols(), |i, j| m.0[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]))
}

/// Largest singular value.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Number of singular values above `eps_rank` times the largest one.
pub fn numerical_rank(m: &ComplexMatrix, tol: &Tolerance) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol.eps_rank * top).count()
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    assert!(m.is_square(), "hermitian_eigen: square matrix required");
    let n = m.rows();
    if n == 0 {
        return (Vec::new(), ComplexMatrix::zeros(0, 0));
    }
    let eig = to_faer(&m.hermitian_part())
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigen-decomposition did not converge");
    let vals = eig.S().column_vector();
    ((0..n).map(|i| vals[i].re).collect(), from_faer(eig.U()))
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    hermitian_eigen(m).0.first().copied().unwrap_or(0.0)
}

/// Polar decomposition with the default tolerance.
pub fn polar_decompose(m: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    polar_decompose_with(m, &Tolerance::default())
}

/// `m = u p` with `u` a partial isometry whose rank is the numerical rank of
/// `m`, and `p = (m* m)^{1/2}`.
pub fn polar_decompose_with(m: &ComplexMatrix, tol: &Tolerance) -> (ComplexMatrix, ComplexMatrix) {
    let Svd { u, singular_values: s, v } = svd(m);
    let top = s.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 { 0 } else { s.iter().filter(|&&x| x > tol.eps_rank * top).count() };
    let mut iso = ComplexMatrix::zeros(m.rows(), m.cols());
    for k in 0..rank {
        iso = iso + outer(&column(&u, k), &column(&v, k));
    }
    let mut p = ComplexMatrix::zeros(m.cols(), m.cols());
    for (k, &sk) in s.iter().enumerate() {
        let vk = column(&v, k);
        p = p + outer(&vk, &vk).scale(C64::new(sk, 0.0));
    }
    (iso, p)
}

fn column(m: &ComplexMatrix, j: usize) -> ComplexMatrix {
    ComplexMatrix(m.0.columns(j, 1).into_owned())
}

fn outer(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * &b.adjoint()
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn column_space(m: &ComplexMatrix, tol: &Tolerance) -> ComplexMatrix {
    let Svd { u, singular_values: s, .. } = svd(m);
    let top = s.first().copied().unwrap_or(0.0);
    let r = if top == 0.0 { 0 } else { s.iter().filter(|&&x| x > tol.eps_rank * top).count() };
    u.sub_block(0, 0, m.rows(), r)
}

/// Orthonormal columns spanning the orthogonal complement of the
/// orthonormal columns `q` inside `C^n`.
pub fn orthonormal_complement(q: &ComplexMatrix) -> ComplexMatrix {
    let n = q.rows();
    if q.cols() == 0 {
        return ComplexMatrix::identity(n);
    }
    let proj = ComplexMatrix::identity(n) - q * &q.adjoint();
    let (vals, vecs) = hermitian_eigen(&proj);
    let keep: Vec<usize> = (0..n).filter(|&j| vals[j] > 0.5).collect();
    ComplexMatrix::from_fn(n, keep.len(), |i, j| vecs.get(i, keep[j]))
}

/// Random matrices for generators and property tests.
pub mod random {
    use super::*;

    pub fn gaussian_scalar<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    }

    pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_scalar(rng))
    }

    /// Haar-distributed unitary via QR of a Ginibre matrix with the phases
    /// of `R`'s diagonal folded back into `Q`.
    pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
        let g = gaussian_matrix(rng, n, n);
        let qr = g.0.qr();
        let (q, r) = (qr.q(), qr.r());
        let phases = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                let d = r[(i, i)];
                if d.norm() == 0.0 { ONE } else { d / d.norm() }
            } else {
                ZERO
            }
        });
        ComplexMatrix(q * phases)
    }

    pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
    }
}

/// Linear span of square matrices with an orthonormal basis under the trace
/// inner product.
#[derive(Clone, Debug)]
pub struct MatrixSpan {
    dim: usize,
    basis: Vec<ComplexMatrix>,
    // d^2 x k, columns are the vectorized basis elements.
    frame: DMatrix<C64>,
    tol: Tolerance,
}

impl PartialEq for MatrixSpan {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.basis == other.basis
    }
}

impl MatrixSpan {
    pub fn zero(dim: usize, tol: Tolerance) -> Self {
        MatrixSpan { dim, basis: Vec::new(), frame: DMatrix::zeros(dim * dim, 0), tol }
    }

    /// Span of `mats` (all `dim x dim`). Directions whose singular value in
    /// the vectorized stack is below `eps_rank * max(sigma_max, scale)` are
    /// dropped; `scale = 0` gives a purely relative cutoff.
    pub fn from_matrices<'a>(
        dim: usize,
        mats: impl IntoIterator<Item = &'a ComplexMatrix>,
        scale: f64,
        tol: Tolerance,
    ) -> Result<Self> {
        let mut cols: Vec<C64> = Vec::new();
        let mut n = 0;
        for m in mats {
            if m.shape() != (dim, dim) {
                return Err(Error::ShapeMismatch(format!(
                    "span over {dim}x{dim} matrices got a {}x{} matrix",
                    m.rows(),
                    m.cols()
                )));
            }
            cols.extend_from_slice(m.vectorized());
            n += 1;
        }
        if n == 0 || dim == 0 {
            return Ok(Self::zero(dim, tol));
        }
        let stack = DMatrix::from_column_slice(dim * dim, n, &cols);
        Ok(Self::from_stack(dim, ComplexMatrix(stack), scale, tol))
    }

    fn from_stack(dim: usize, stack: ComplexMatrix, scale: f64, tol: Tolerance) -> Self {
        let Svd { u, singular_values: s, .. } = svd(&stack);
        let top = s.first().copied().unwrap_or(0.0);
        let cutoff = tol.eps_rank * top.max(scale);
        let r = if top == 0.0 { 0 } else { s.iter().filter(|&&x| x > cutoff).count() };
        let frame = u.0.columns(0, r).into_owned();
        let basis = (0..r)
            .map(|k| ComplexMatrix(DMatrix::from_column_slice(dim, dim, frame.column(k).as_slice())))
            .collect();
        MatrixSpan { dim, basis, frame, tol }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    fn check_dim(&self, m: &ComplexMatrix) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::ShapeMismatch(format!(
                "span over {0}x{0} matrices cannot hold a {1}x{2} matrix",
                self.dim,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    /// Coordinates of the orthogonal projection of `m` onto the span.
    pub fn coefficients(&self, m: &ComplexMatrix) -> Vec<C64> {
        self.basis.iter().map(|b| b.inner(m)).collect()
    }

    pub fn combine(&self, coeffs: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (c, b) in coeffs.iter().zip(&self.basis) {
            out = out + b.scale(*c);
        }
        out
    }

    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.combine(&self.coefficients(m))
    }

    /// Frobenius norm of the component of `m` orthogonal to the span.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        if self.frame.ncols() == 0 {
            return m.frobenius_norm();
        }
        let v = nalgebra::DVector::from_column_slice(m.vectorized());
        let coeffs = self.frame.adjoint() * &v;
        (v - &self.frame * coeffs).norm()
    }

    pub fn contains(&self, m: &ComplexMatrix) -> bool {
        m.shape() == (self.dim, self.dim)
            && self.residual(m) < self.tol.eq_threshold(m.frobenius_norm())
    }

    pub fn contains_span(&self, other: &MatrixSpan) -> bool {
        other.dim == self.dim && other.basis.iter().all(|b| self.contains(b))
    }

    /// Largest residual of either span's basis against the other span.
    pub fn distance(&self, other: &MatrixSpan) -> f64 {
        let a = other.basis.iter().map(|b| self.residual(b)).fold(0.0, f64::max);
        let b = self.basis.iter().map(|b| other.residual(b)).fold(0.0, f64::max);
        a.max(b)
    }

    pub fn adjoint(&self) -> MatrixSpan {
        let adj: Vec<ComplexMatrix> = self.basis.iter().map(ComplexMatrix::adjoint).collect();
        MatrixSpan::from_matrices(self.dim, &adj, 1.0, self.tol).expect("adjoint keeps shape")
    }

    pub fn sum(&self, other: &MatrixSpan) -> Result<MatrixSpan> {
        self.same_ambient(other)?;
        MatrixSpan::from_matrices(self.dim, self.basis.iter().chain(&other.basis), 1.0, self.tol)
    }

    /// Span of `m * b` over the basis.
    pub fn left_mul(&self, m: &ComplexMatrix) -> Result<MatrixSpan> {
        self.check_dim(m)?;
        let prods: Vec<ComplexMatrix> = self.basis.iter().map(|b| m * b).collect();
        MatrixSpan::from_matrices(self.dim, &prods, m.frobenius_norm(), self.tol)
    }

    /// Span of `b * m` over the basis.
    pub fn right_mul(&self, m: &ComplexMatrix) -> Result<MatrixSpan> {
        self.check_dim(m)?;
        let prods: Vec<ComplexMatrix> = self.basis.iter().map(|b| b * m).collect();
        MatrixSpan::from_matrices(self.dim, &prods, m.frobenius_norm(), self.tol)
    }

    pub fn product(&self, other: &MatrixSpan) -> Result<MatrixSpan> {
        self.same_ambient(other)?;
        let prods: Vec<ComplexMatrix> =
            self.basis.iter().flat_map(|a| other.basis.iter().map(move |b| a * b)).collect();
        MatrixSpan::from_matrices(self.dim, &prods, 1.0, self.tol)
    }

    /// Orthonormal columns spanning the union of the column spaces of the
    /// basis, i.e. the subspace `S·H`.
    pub fn range_space(&self) -> ComplexMatrix {
        if self.basis.is_empty() {
            return ComplexMatrix::zeros(self.dim, 0);
        }
        let mut stack = ComplexMatrix::zeros(self.dim, self.dim * self.basis.len());
        for (k, b) in self.basis.iter().enumerate() {
            stack.set_sub_block(0, k * self.dim, b);
        }
        column_space(&stack, &self.tol)
    }

    /// Orthogonal projection onto `S·H`.
    pub fn range_projection(&self) -> ComplexMatrix {
        let q = self.range_space();
        &q * &q.adjoint()
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> ComplexMatrix {
        let coeffs: Vec<C64> = self.basis.iter().map(|_| random::gaussian_scalar(rng)).collect();
        self.combine(&coeffs)
    }

    fn same_ambient(&self, other: &MatrixSpan) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "spans over different ambient dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// Span of a non-empty list of equally sized square matrices.
pub fn span_of(mats: &[ComplexMatrix], tol: &Tolerance) -> Result<MatrixSpan> {
    let first = mats
        .first()
        .ok_or_else(|| Error::ShapeMismatch("span_of needs at least one matrix".into()))?;
    if !first.is_square() {
        return Err(Error::ShapeMismatch("span_of needs square matrices".into()));
    }
    MatrixSpan::from_matrices(first.rows(), mats, 0.0, *tol)
}

pub fn span_contains(s: &MatrixSpan, m: &ComplexMatrix) -> bool {
    s.contains(m)
}

pub fn span_equal(s1: &MatrixSpan, s2: &MatrixSpan) -> Result<bool> {
    s1.same_ambient(s2)?;
    Ok(s1.contains_span(s2) && s2.contains_span(s1))
}

pub fn span_product(s1: &MatrixSpan, s2: &MatrixSpan) -> Result<MatrixSpan> {
    s1.product(s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: usize, i: usize, j: usize) -> ComplexMatrix {
        ComplexMatrix::matrix_unit(n, i, j)
    }

    #[test]
    fn operator_norm_simple_cases() {
        assert!((operator_norm(&ComplexMatrix::identity(3)) - 1.0).abs() < 1e-14);
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((operator_norm(&m) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polar_of_nilpotent() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        let (u, p) = polar_decompose(&m);
        assert!((&u - &e(2, 0, 1)).frobenius_norm() < 1e-12);
        let expected_p = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 2.0]);
        assert!((&p - &expected_p).frobenius_norm() < 1e-12);
    }

    #[test]
    fn polar_of_unitary_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random::haar_unitary(&mut rng, 3);
        let (u, p) = polar_decompose(&q);
        assert!((&u - &q).frobenius_norm() < 1e-10);
        assert!((&p - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-10);
        let (u0, p0) = polar_decompose(&ComplexMatrix::zeros(2, 3));
        assert_eq!(u0.frobenius_norm(), 0.0);
        assert_eq!(p0.frobenius_norm(), 0.0);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..5 {
            let u = random::haar_unitary(&mut rng, n);
            assert!((&u * &u.adjoint() - ComplexMatrix::identity(n)).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn span_dimensions() {
        let tol = Tolerance::default();
        let id = ComplexMatrix::identity(2);
        let s = span_of(&[id.clone(), id.scale(C64::new(2.0, 0.0))], &tol).unwrap();
        assert_eq!(s.dim(), 1);
        let full = span_of(&[e(2, 0, 0), e(2, 0, 1), e(2, 1, 0), e(2, 1, 1)], &tol).unwrap();
        assert_eq!(full.dim(), 4);
    }

    #[test]
    fn span_membership_and_product() {
        let tol = Tolerance::default();
        let s11 = span_of(&[e(2, 0, 0)], &tol).unwrap();
        assert!(span_contains(&s11, &e(2, 0, 0)));
        assert!(!span_contains(&s11, &e(2, 0, 1)));
        let s12 = span_of(&[e(2, 0, 1)], &tol).unwrap();
        let s21 = span_of(&[e(2, 1, 0)], &tol).unwrap();
        let prod = span_product(&s12, &s21).unwrap();
        assert!(span_equal(&prod, &s11).unwrap());
    }

    #[test]
    fn span_shape_errors() {
        let tol = Tolerance::default();
        assert!(span_of(&[e(2, 0, 0), e(3, 0, 0)], &tol).is_err());
        assert!(span_of(&[], &tol).is_err());
        let a = span_of(&[e(2, 0, 0)], &tol).unwrap();
        let b = span_of(&[e(3, 0, 0)], &tol).unwrap();
        assert!(span_equal(&a, &b).is_err());
        assert!(span_product(&a, &b).is_err());
    }

    #[test]
    fn zero_products_do_not_create_noise_directions() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random::haar_unitary(&mut rng, 2);
        // (u E12 u*)^2 = 0 up to rounding.
        let x = &u * &e(2, 0, 1) * u.adjoint();
        let s = span_of(&[x], &tol).unwrap();
        assert_eq!(s.product(&s).unwrap().dim(), 0);
    }

    #[test]
    fn invalid_tolerance_rejected() {
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-9, 1.5).is_err());
        assert!(Tolerance::new(1e-9, 1e-8).is_ok());
    }

    #[test]
    fn json_roundtrip_is_row_major_pairs() {
        let m = ComplexMatrix::from_rows(&[vec![C64::new(1.0, 2.0), ZERO], vec![ZERO, I]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,2.0],[0.0,0.0]],[[0.0,0.0],[0.0,1.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
