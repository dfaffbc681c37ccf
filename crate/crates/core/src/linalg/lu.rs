//! LU factorization with partial pivoting.

use super::{ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lu {
    /// Unit-lower `L` below the diagonal, `U` on and above it.
    factors: ComplexMatrix,
    /// `pivots[k]` is the row swapped with row `k` at step `k`.
    pivots: Vec<usize>,
}

impl Lu {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let n = a.ensure_square("lu")?;
        let mut f = a.clone();
        let mut pivots = Vec::with_capacity(n);
        let scale = a.max_abs();
        for k in 0..n {
            let col = f.column(k);
            let (p, pmax) = (k..n)
                .map(|i| (i, col[i].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= f64::EPSILON * scale * n as f64 || pmax == 0.0 {
                return Err(Error::Singular { pivot: k });
            }
            pivots.push(p);
            if p != k {
                let data = f.as_mut_slice();
                for j in 0..n {
                    data.swap(k + j * n, p + j * n);
                }
            }
            let inv = ONE / f[(k, k)];
            for v in &mut f.column_mut(k)[k + 1..] {
                *v *= inv;
            }
            let data = f.as_mut_slice();
            let (left, right) = data.split_at_mut((k + 1) * n);
            let lcol = &left[k * n + k + 1..k * n + n];
            for j in 0..n - k - 1 {
                let col = &mut right[j * n..(j + 1) * n];
                let ukj = col[k];
                if ukj != ZERO {
                    for (x, l) in col[k + 1..].iter_mut().zip(lcol) {
                        *x -= ukj * l;
                    }
                }
            }
        }
        Ok(Self { factors: f, pivots })
    }

    pub fn dim(&self) -> usize {
        self.factors.nrows()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::ShapeMismatch {
                op: "lu_solve",
                left: (n, n),
                right: (b.len(), 1),
            });
        }
        for (k, &p) in self.pivots.iter().enumerate() {
            b.swap(k, p);
        }
        let f = &self.factors;
        for k in 0..n {
            let bk = b[k];
            if bk != ZERO {
                for (x, l) in b[k + 1..].iter_mut().zip(&f.column(k)[k + 1..]) {
                    *x -= bk * l;
                }
            }
        }
        for k in (0..n).rev() {
            b[k] /= f[(k, k)];
            let bk = b[k];
            if bk != ZERO {
                for (x, u) in b[..k].iter_mut().zip(&f.column(k)[..k]) {
                    *x -= bk * u;
                }
            }
        }
        Ok(())
    }

    /// Solves `Aᵀ x = b` in place (plain transpose, no conjugation).
    pub fn solve_transpose_in_place(&self, b: &mut [C64]) -> Result<()> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::ShapeMismatch {
                op: "lu_solve_transpose",
                left: (n, n),
                right: (b.len(), 1),
            });
        }
        let f = &self.factors;
        // Uᵀ y = b
        for k in 0..n {
            let s: C64 = f.column(k)[..k]
                .iter()
                .zip(&b[..k])
                .map(|(u, x)| u * x)
                .sum();
            b[k] = (b[k] - s) / f[(k, k)];
        }
        // Lᵀ z = y
        for k in (0..n).rev() {
            let s: C64 = f.column(k)[k + 1..]
                .iter()
                .zip(&b[k + 1..])
                .map(|(l, x)| l * x)
                .sum();
            b[k] -= s;
        }
        for (k, &p) in self.pivots.iter().enumerate().rev() {
            b.swap(k, p);
        }
        Ok(())
    }

    pub fn solve_matrix(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut x = b.clone();
        for j in 0..b.ncols() {
            self.solve_in_place(x.column_mut(j))?;
        }
        Ok(x)
    }

    pub fn inverse(&self) -> ComplexMatrix {
        self.solve_matrix(&ComplexMatrix::identity(self.dim()))
            .expect("identity has matching shape")
    }
}

pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    Lu::new(a)?.solve_matrix(b)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(Lu::new(a)?.inverse())
}
