//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] stores its entries in **column-major** order: entry
//! `(i, j)` of an `r x c` matrix lives at offset `i + j * r`. This is the
//! same order as the column-stacking vectorization used for superoperators,
//! so `vec(X)` is just the storage of `X`.
//!
//! Decompositions live in submodules:
//! - [`hermitian`]: cyclic Jacobi for Hermitian matrices,
//! - [`eig`]: balancing, Hessenberg reduction, shifted complex QR and
//!   triangular back-substitution for general matrices,
//! - [`lu`]: LU with partial pivoting for solves and inverses.

pub mod eig;
pub mod hermitian;
pub mod lu;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use eig::{general_eig, general_eig_with_limit, GeneralEig, ILL_CONDITIONED_LIMIT};
pub use hermitian::{hermitian_eig, HermitianEig};
pub use lu::{inverse, solve, Lu};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Columns of the right-hand factor processed per pass in [`ComplexMatrix::matmul`].
const MATMUL_ROWS: usize = 64;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = ONE;
        }
        m
    }

    /// Wraps column-major storage, checking the shape and that every entry is
    /// finite.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "from_col_major",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % rows,
                col: pos / rows,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices, the way matrices are usually written
    /// down by hand.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.as_ref().len());
        if nr == 0 || nc == 0 {
            return Err(Error::EmptyMatrix { rows: nr, cols: nc });
        }
        let mut data = vec![ZERO; nr * nc];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != nc {
                return Err(Error::ShapeMismatch {
                    op: "from_rows",
                    left: (1, nc),
                    right: (1, row.len()),
                });
            }
            for (j, &z) in row.iter().enumerate() {
                data[i + j * nr] = z;
            }
        }
        Self::from_col_major(nr, nc, data)
    }

    /// Real-valued convenience constructor, row by row.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + j * rows] = f(i, j);
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i + i * n] = z;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&diag)
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column-major storage.
    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [C64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    fn ensure_same_shape(&self, rhs: &Self, op: &'static str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_square(&self, op: &'static str) -> Result<usize> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch {
                op,
                left: self.shape(),
                right: (self.cols, self.rows),
            });
        }
        Ok(self.rows)
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (m, k_dim, n) = (self.rows, self.cols, rhs.cols);
        let mut out = Self::zeros(m, n);
        if m < 2 * MATMUL_ROWS {
            for j in 0..n {
                for k in 0..k_dim {
                    let b = rhs.data[k + j * k_dim];
                    if b != ZERO {
                        axpy(b, &self.data[k * m..(k + 1) * m], &mut out.data[j * m..(j + 1) * m]);
                    }
                }
            }
            return Ok(out);
        }
        // A panel of MATMUL_ROWS rows of `self` is split into real and
        // imaginary parts so the inner loops vectorize, then reused for all
        // output columns.
        let mut pre = vec![[0.0; MATMUL_ROWS]; k_dim];
        let mut pim = vec![[0.0; MATMUL_ROWS]; k_dim];
        for ib in (0..m).step_by(MATMUL_ROWS) {
            let ie = (ib + MATMUL_ROWS).min(m);
            for k in 0..k_dim {
                pre[k] = [0.0; MATMUL_ROWS];
                pim[k] = [0.0; MATMUL_ROWS];
                for (i, z) in self.data[k * m + ib..k * m + ie].iter().enumerate() {
                    pre[k][i] = z.re;
                    pim[k][i] = z.im;
                }
            }
            let mut j = 0;
            while j + 1 < n {
                let b0 = &rhs.data[j * k_dim..(j + 1) * k_dim];
                let b1 = &rhs.data[(j + 1) * k_dim..(j + 2) * k_dim];
                let mut re0 = [0.0; MATMUL_ROWS];
                let mut im0 = [0.0; MATMUL_ROWS];
                let mut re1 = [0.0; MATMUL_ROWS];
                let mut im1 = [0.0; MATMUL_ROWS];
                for k in 0..k_dim {
                    let (br0, bi0, br1, bi1) = (b0[k].re, b0[k].im, b1[k].re, b1[k].im);
                    let (ar, ai) = (&pre[k], &pim[k]);
                    for i in 0..MATMUL_ROWS {
                        re0[i] += ar[i] * br0 - ai[i] * bi0;
                        im0[i] += ar[i] * bi0 + ai[i] * br0;
                        re1[i] += ar[i] * br1 - ai[i] * bi1;
                        im1[i] += ar[i] * bi1 + ai[i] * br1;
                    }
                }
                for (i, o) in out.data[j * m + ib..j * m + ie].iter_mut().enumerate() {
                    *o = C64::new(re0[i], im0[i]);
                }
                for (i, o) in out.data[(j + 1) * m + ib..(j + 1) * m + ie].iter_mut().enumerate() {
                    *o = C64::new(re1[i], im1[i]);
                }
                j += 2;
            }
            if j < n {
                let b = &rhs.data[j * k_dim..(j + 1) * k_dim];
                let mut acc_re = [0.0; MATMUL_ROWS];
                let mut acc_im = [0.0; MATMUL_ROWS];
                for k in 0..k_dim {
                    let (br, bi) = (b[k].re, b[k].im);
                    let (ar, ai) = (&pre[k], &pim[k]);
                    for i in 0..MATMUL_ROWS {
                        acc_re[i] += ar[i] * br - ai[i] * bi;
                        acc_im[i] += ar[i] * bi + ai[i] * br;
                    }
                }
                for (i, o) in out.data[j * m + ib..j * m + ie].iter_mut().enumerate() {
                    *o = C64::new(acc_re[i], acc_im[i]);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if self.cols != x.len() {
            return Err(Error::ShapeMismatch {
                op: "matvec",
                left: self.shape(),
                right: (x.len(), 1),
            });
        }
        let mut y = vec![ZERO; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != ZERO {
                axpy(xj, self.column(j), &mut y);
            }
        }
        Ok(y)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.ensure_same_shape(rhs, "add")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.ensure_same_shape(rhs, "sub")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * s).collect(),
            ..*self
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            data: self.data.iter().map(|z| z * s).collect(),
            ..*self
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let (r, c) = self.shape();
        let mut out = Self::zeros(c, r);
        for j in 0..c {
            for i in 0..r {
                out.data[j + i * c] = self.data[i + j * r].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = self.shape();
        let mut out = Self::zeros(c, r);
        for j in 0..c {
            for i in 0..r {
                out.data[j + i * c] = self.data[i + j * r];
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            data: self.data.iter().map(|z| z.conj()).collect(),
            ..*self
        }
    }

    pub fn trace(&self) -> Result<C64> {
        let n = self.ensure_square("trace")?;
        Ok((0..n).map(|i| self.data[i + i * n]).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus, `||A||_max`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Induced 1-norm (largest column sum of moduli).
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Induced infinity-norm (largest row sum of moduli).
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.rows];
        for j in 0..self.cols {
            for (s, z) in sums.iter_mut().zip(self.column(j)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Kronecker product with block layout
    /// `(A ⊗ B)[i*rB + k, j*cB + l] = A[i, j] * B[k, l]`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (ra, ca) = self.shape();
        let (rb, cb) = rhs.shape();
        let rows = ra * rb;
        let mut out = Self::zeros(rows, ca * cb);
        for j in 0..ca {
            for i in 0..ra {
                let a = self.data[i + j * ra];
                if a == ZERO {
                    continue;
                }
                for l in 0..cb {
                    let col = j * cb + l;
                    let dst = &mut out.data[col * rows + i * rb..col * rows + (i + 1) * rb];
                    for (d, b) in dst.iter_mut().zip(rhs.column(l)) {
                        *d = a * b;
                    }
                }
            }
        }
        out
    }

    /// `A B - B A`.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.matmul(rhs)?.sub(&rhs.matmul(self)?)
    }

    /// `A B + B A`.
    pub fn anticommutator(&self, rhs: &Self) -> Result<Self> {
        self.matmul(rhs)?.add(&rhs.matmul(self)?)
    }

    /// `max |A - A^H|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.rows;
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                let d = self.data[i + j * n] - self.data[j + i * n].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `(A + A^H) / 2`, exactly Hermitian.
    pub fn hermitian_part(&self) -> Result<Self> {
        let n = self.ensure_square("hermitian_part")?;
        let mut out = self.clone();
        for j in 0..n {
            out.data[j + j * n] = C64::new(self.data[j + j * n].re, 0.0);
            for i in 0..j {
                let h = 0.5 * (self.data[i + j * n] + self.data[j + i * n].conj());
                out.data[i + j * n] = h;
                out.data[j + i * n] = h.conj();
            }
        }
        Ok(out)
    }

    /// `max |A - B|`, or infinity on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        if self.shape() != rhs.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, " ")?;
            for j in 0..self.cols.min(8) {
                let z = self[(i, j)];
                write!(f, " {:+.4e}{:+.4e}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Operator sugar for code paths where shapes are known to agree. These panic
// on mismatch; use the named methods to get a `Result`.

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix::add(self, rhs).expect("shape mismatch in +")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix::sub(self, rhs).expect("shape mismatch in -")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in *")
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// `y += a * x`.
#[inline]
pub(crate) fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Unconjugated dot product `sum x_i y_i`.
#[inline]
pub(crate) fn dotu(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Conjugated dot product `sum conj(x_i) y_i`.
#[inline]
pub(crate) fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn vector_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|re| + |im|`, the cheap modulus LAPACK uses for convergence tests.
#[inline]
pub(crate) fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Multiplies `v` by a unit phase so its largest-modulus component is real
/// and positive. Among near-equal maxima the lowest index wins.
pub(crate) fn fix_phase(v: &mut [C64]) {
    let max = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .expect("non-empty vector");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = C64::new(v[pivot].re, 0.0);
}
