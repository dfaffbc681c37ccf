//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.
//!
//! The matrices this crate diagonalizes this way are Hilbert-space sized
//! (at most a few dozen rows), where Jacobi is fast and gives eigenvectors
//! that are orthonormal to machine precision.

use super::{fix_phase, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Relative Hermiticity tolerance accepted on input.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`, with its
    /// largest-modulus component made real and positive.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn eigenvector(&self, k: usize) -> &[C64] {
        self.eigenvectors.column(k)
    }

    /// `V diag(w) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| v[(i, j)] * self.eigenvalues[j]);
        &scaled * &v.adjoint()
    }
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    let n = a.ensure_square("hermitian_eig")?;
    let scale = a.max_abs();
    let residual = a.hermiticity_residual();
    let bound = HERMITIAN_TOL * scale;
    if residual > bound {
        return Err(Error::NotHermitian { residual, bound });
    }

    let mut m = a.hermitian_part()?;
    let mut v = ComplexMatrix::identity(n);
    let data_n = n;

    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for j in 0..data_n {
            for i in 0..j {
                s += m[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    };

    let total = m.frobenius_norm();
    let mut converged = total == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { iterations: sweeps });
        }
        sweeps += 1;
        for q in 1..n {
            for p in 0..q {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off_norm(&m) <= f64::EPSILON * total;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eigenvectors.column_mut(dst);
        col.copy_from_slice(v.column(src));
        fix_phase(col);
    }
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Annihilates the `(p, q)` entry of the Hermitian matrix `m` with a unitary
/// `J`, updating `m <- J^H m J` and `v <- v J`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Tiny off-diagonal relative to both diagonals: zero it outright.
    if b < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        m[(p, q)] = ZERO;
        m[(q, p)] = ZERO;
        return;
    }
    // phase e^{i phi} = apq / |apq|; rotating in the plane after removing the
    // phase reduces to the real symmetric Jacobi step.
    let phase = apq / b;
    let zeta = (aqq - app) / (2.0 * b);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let t = if zeta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on coordinates (p, q).
    let jpp = C64::new(c, 0.0);
    let jpq = phase * s;
    let jqp = -phase.conj() * s;
    let jqq = C64::new(c, 0.0);

    let n = m.nrows();
    // m <- m J (columns p, q)
    for i in 0..n {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = x * jpp + y * jqp;
        m[(i, q)] = x * jpq + y * jqq;
    }
    // m <- J^H m (rows p, q)
    for j in 0..n {
        let x = m[(p, j)];
        let y = m[(q, j)];
        m[(p, j)] = jpp.conj() * x + jqp.conj() * y;
        m[(q, j)] = jpq.conj() * x + jqq.conj() * y;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);

    for i in 0..n {
        let x = v[(i, p)];
        let y = v[(i, q)];
        v[(i, p)] = x * jpp + y * jqp;
        v[(i, q)] = x * jpq + y * jqq;
    }
}
