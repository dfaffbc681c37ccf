//! Eigendecomposition of general (non-Hermitian) complex matrices.
//!
//! Pipeline: diagonal balancing, Householder reduction to upper Hessenberg
//! form, single-shift complex QR to Schur form `A = Z T Z^H`, eigenvectors of
//! the triangular factor `T = Y Λ Y⁻¹` by back-substitution, and finally
//! `V = D Z Y` and `V⁻¹ = Y⁻¹ Z^H D⁻¹`. The inverse is assembled from the
//! triangular factor, so `W V = 1` holds to rounding without a separate
//! dense inversion.
//!
//! Everything is column-major and written so that the innermost loops walk
//! down contiguous columns. In the QR sweep this means row rotations are not
//! applied eagerly; each column is brought up to date with the pending
//! rotations right before it is needed.

use super::{abs1, axpy, dotc, ComplexMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Condition estimates above this are reported as an ill-conditioned basis.
pub const ILL_CONDITIONED_LIMIT: f64 = 1e10;

const BLOCK: usize = 32;

#[derive(Debug, Clone)]
pub struct GeneralEig {
    /// In the order the QR iteration deflated them; callers sort as needed.
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub right: ComplexMatrix,
    /// `right⁻¹`; row `k` is the left eigenvector paired with column `k`.
    pub left: ComplexMatrix,
    /// `||V||_1 ||V⁻¹||_1`.
    pub condition: f64,
}

impl GeneralEig {
    /// `max_k ||A v_k - λ_k v_k||_2`, with unit-norm `v_k`.
    pub fn max_residual(&self, a: &ComplexMatrix) -> f64 {
        let av = a * &self.right;
        let mut worst: f64 = 0.0;
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let r: f64 = av
                .column(k)
                .iter()
                .zip(self.right.column(k))
                .map(|(x, v)| (x - lambda * v).norm_sqr())
                .sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }

    /// `max |W V - 1|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let wv = &self.left * &self.right;
        wv.max_abs_diff(&ComplexMatrix::identity(wv.nrows()))
    }
}

/// Full eigendecomposition; fails with [`Error::IllConditionedBasis`] when
/// the condition estimate exceeds [`ILL_CONDITIONED_LIMIT`].
pub fn general_eig(a: &ComplexMatrix) -> Result<GeneralEig> {
    general_eig_with_limit(a, ILL_CONDITIONED_LIMIT)
}

/// As [`general_eig`] with a caller-chosen condition limit. Callers that can
/// cope with an ill-conditioned basis pass a larger limit and inspect
/// [`GeneralEig::condition`] themselves.
pub fn general_eig_with_limit(a: &ComplexMatrix, limit: f64) -> Result<GeneralEig> {
    let n = a.ensure_square("general_eig")?;
    if n == 1 {
        return Ok(GeneralEig {
            eigenvalues: vec![a[(0, 0)]],
            right: ComplexMatrix::identity(1),
            left: ComplexMatrix::identity(1),
            condition: 1.0,
        });
    }

    let mut h = a.clone();
    let d = balance(&mut h);
    let mut z = hessenberg(&mut h);
    schur(&mut h, &mut z)?;
    let t = h;
    let eigenvalues = t.diagonal();

    let y = triangular_eigenvectors(&t);
    let y_inv = upper_inverse(&y)?;

    let mut v = times_upper(&z, &y);
    let mut col_norms = vec![0.0; n];
    for (k, norm) in col_norms.iter_mut().enumerate() {
        let col = v.column_mut(k);
        for (x, &di) in col.iter_mut().zip(&d) {
            *x *= di;
        }
        *norm = super::vector_norm(col);
        if !norm.is_finite() || *norm == 0.0 {
            return Err(Error::IllConditionedBasis {
                condition: f64::INFINITY,
            });
        }
        let inv = 1.0 / *norm;
        for x in col.iter_mut() {
            *x *= inv;
        }
    }

    let mut w = upper_times(&y_inv, &z.adjoint());
    for (j, dj) in d.iter().enumerate() {
        let inv_d = 1.0 / dj;
        for (x, &c) in w.column_mut(j).iter_mut().zip(&col_norms) {
            *x *= c * inv_d;
        }
    }

    let condition = v.norm_one() * w.norm_one();
    if !condition.is_finite() || condition > limit {
        return Err(Error::IllConditionedBasis { condition });
    }
    Ok(GeneralEig {
        eigenvalues,
        right: v,
        left: w,
        condition,
    })
}

/// Scales `a <- D⁻¹ a D` with power-of-two diagonal `D` so that row and
/// column norms are comparable. Returns the diagonal of `D`.
fn balance(a: &mut ComplexMatrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    const MAX_SWEEPS: usize = 100;
    let n = a.nrows();
    let mut scale = vec![1.0; n];
    for _ in 0..MAX_SWEEPS {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[(j, i)]);
                    r += abs1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for x in a.column_mut(i) {
                    *x *= f;
                }
            }
        }
        if done {
            break;
        }
    }
    scale
}

/// Householder vector in the LAPACK `zlarfg` convention: returns `(v, tau,
/// beta)` with `v[0] = 1` and `(I - tau v v^H)^H x = beta e_1`.
fn householder(x: &[C64]) -> (Vec<C64>, C64, f64) {
    let alpha = x[0];
    let xnorm = super::vector_norm(&x[1..]);
    let mut v = vec![ZERO; x.len()];
    v[0] = ONE;
    if xnorm == 0.0 && alpha.im == 0.0 {
        return (v, ZERO, alpha.re);
    }
    let mut beta = alpha.norm().hypot(xnorm);
    if alpha.re >= 0.0 {
        beta = -beta;
    }
    let tau = (C64::new(beta, 0.0) - alpha) / beta;
    let inv = ONE / (alpha - beta);
    for (vi, xi) in v[1..].iter_mut().zip(&x[1..]) {
        *vi = xi * inv;
    }
    (v, tau, beta)
}

/// Reduces `a` to upper Hessenberg form in place and returns the unitary `Q`
/// with `a_original = Q a_reduced Q^H`.
fn hessenberg(a: &mut ComplexMatrix) -> ComplexMatrix {
    let n = a.nrows();
    let mut reflectors: Vec<(Vec<C64>, C64)> = Vec::with_capacity(n.saturating_sub(2));
    let mut y = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let (v, tau, beta) = householder(&a.column(k)[k + 1..]);
        if tau != ZERO {
            let col = a.column_mut(k);
            col[k + 1] = C64::new(beta, 0.0);
            col[k + 2..].fill(ZERO);

            // Left: rows k+1.. of columns k+1.. get (I - conj(tau) v v^H).
            let ctau = tau.conj();
            for j in k + 1..n {
                let col = &mut a.column_mut(j)[k + 1..];
                let w = dotc(&v, col);
                axpy(-ctau * w, &v, col);
            }
            // Right: columns k+1.. get (I - tau v v^H).
            y.fill(ZERO);
            for (p, &vp) in v.iter().enumerate() {
                axpy(vp, a.column(k + 1 + p), &mut y);
            }
            for (p, &vp) in v.iter().enumerate() {
                axpy(-tau * vp.conj(), &y, a.column_mut(k + 1 + p));
            }
        }
        reflectors.push((v, tau));
    }

    // Q = H_0 H_1 ... accumulated from the right-most reflector outwards.
    let mut q = ComplexMatrix::identity(n);
    for (k, (v, tau)) in reflectors.iter().enumerate().rev() {
        if *tau == ZERO {
            continue;
        }
        for j in k + 1..n {
            let col = &mut q.column_mut(j)[k + 1..];
            let w = dotc(v, col);
            axpy(-tau * w, v, col);
        }
    }
    q
}

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with `G (f, g)^T = (r, 0)^T`.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    c: f64,
    s: C64,
}

impl Rotation {
    fn zeroing(f: C64, g: C64) -> (Self, C64) {
        if g == ZERO {
            return (Self { c: 1.0, s: ZERO }, f);
        }
        let gn = g.norm();
        if f == ZERO {
            return (
                Self {
                    c: 0.0,
                    s: g.conj() / gn,
                },
                C64::new(gn, 0.0),
            );
        }
        let fn_ = f.norm();
        let rho = fn_.hypot(gn);
        let phase = f / fn_;
        (
            Self {
                c: fn_ / rho,
                s: phase * g.conj() / rho,
            },
            phase * rho,
        )
    }

    /// `(x, y) <- G (x, y)`.
    #[inline(always)]
    fn left(&self, x: &mut C64, y: &mut C64) {
        let (a, b) = (*x, *y);
        *x = a * self.c + self.s * b;
        *y = b * self.c - self.s.conj() * a;
    }
}

/// Applies rotations `rots[q]` acting on rows `(first + q, first + q + 1)`
/// to one column, in order.
#[inline]
fn apply_pending(col: &mut [C64], first: usize, rots: &[Rotation]) {
    for (q, rot) in rots.iter().enumerate() {
        let p = first + q;
        let (head, tail) = col.split_at_mut(p + 1);
        rot.left(&mut head[p], &mut tail[0]);
    }
}

/// Applies `G^H` from the right to columns `(j, j + 1)` restricted to `rows`.
#[inline]
fn apply_right(m: &mut ComplexMatrix, j: usize, rows: std::ops::Range<usize>, rot: &Rotation) {
    let n = m.nrows();
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut((j + 1) * n);
    let a = &mut left[j * n + rows.start..j * n + rows.end];
    let b = &mut right[rows.start..rows.end];
    let (c, sr, si) = (rot.c, rot.s.re, rot.s.im);
    // x' = c x + conj(s) y,  y' = c y - s x, unrolled over real parts so the
    // loop vectorizes.
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xr, xi, yr, yi) = (x.re, x.im, y.re, y.im);
        x.re = c * xr + sr * yr + si * yi;
        x.im = c * xi + sr * yi - si * yr;
        y.re = c * yr - sr * xr + si * xi;
        y.im = c * yi - sr * xi - si * xr;
    }
}

/// The eigenvalue of the 2x2 block `[[a00, a01], [a10, a11]]` closer to `a11`.
fn wilkinson_shift(a00: C64, a01: C64, a10: C64, a11: C64) -> C64 {
    let s = abs1(a00) + abs1(a01) + abs1(a10) + abs1(a11);
    if s == 0.0 {
        return ZERO;
    }
    let (b00, b01, b10, b11) = (a00 / s, a01 / s, a10 / s, a11 / s);
    let tr = (b00 + b11) * 0.5;
    let det = (b00 - tr) * (b00 - tr) + b01 * b10;
    let rt = det.sqrt();
    let (s1, s2) = ((tr + rt) * s, (tr - rt) * s);
    if abs1(s1 - a11) <= abs1(s2 - a11) {
        s1
    } else {
        s2
    }
}

/// Single-shift complex QR on an upper Hessenberg matrix, producing the
/// upper triangular Schur factor in place and accumulating into `z`.
///
/// Deflation and exceptional-shift rules follow LAPACK's `zlahqr`.
fn schur(h: &mut ComplexMatrix, z: &mut ComplexMatrix) -> Result<()> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / eps);
    let itmax = 30 * n.max(10);
    let mut total_iterations = 0usize;

    let mut rots: Vec<Rotation> = Vec::with_capacity(n);
    let mut istop = n;
    let mut istart = 0;
    let mut its = 0;
    let mut k_defl = 0usize;

    while istop > 1 {
        // Find the top of the unreduced block ending at istop - 1.
        for i in (istart + 1..istop).rev() {
            let sub = abs1(h[(i, i - 1)]);
            if sub < smlnum {
                h[(i, i - 1)] = ZERO;
                istart = i;
                break;
            }
            let mut tst = abs1(h[(i - 1, i - 1)]) + abs1(h[(i, i)]);
            if tst == 0.0 {
                if i >= 2 {
                    tst += abs1(h[(i - 1, i - 2)]);
                }
                if i + 1 < n {
                    tst += abs1(h[(i + 1, i)]);
                }
            }
            if sub <= eps * tst {
                let sup = abs1(h[(i - 1, i)]);
                let ab = sub.max(sup);
                let ba = sub.min(sup);
                let diff = abs1(h[(i, i)] - h[(i - 1, i - 1)]);
                let hii = abs1(h[(i, i)]);
                let aa = hii.max(diff);
                let bb = hii.min(diff);
                let s = aa + ab;
                if ba * (ab / s) <= smlnum.max(eps * (bb * (aa / s))) {
                    h[(i, i - 1)] = ZERO;
                    istart = i;
                    break;
                }
            }
        }

        if istart + 1 >= istop {
            // 1x1 block at the bottom has converged.
            istop -= 1;
            istart = 0;
            its = 0;
            k_defl = 0;
            continue;
        }

        its += 1;
        total_iterations += 1;
        if its > itmax {
            return Err(Error::NoConvergence {
                iterations: total_iterations,
            });
        }
        k_defl += 1;

        let shift = if k_defl.is_multiple_of(10) {
            let mut s = h[(istop - 1, istop - 2)].norm();
            if istop > 2 {
                s += h[(istop - 2, istop - 3)].norm();
            }
            let a00 = h[(istop - 1, istop - 1)] + 0.75 * s;
            wilkinson_shift(a00, C64::new(s, 0.0), C64::new(-0.4375 * s, 0.0), a00)
        } else {
            wilkinson_shift(
                h[(istop - 2, istop - 2)],
                h[(istop - 2, istop - 1)],
                h[(istop - 1, istop - 2)],
                h[(istop - 1, istop - 1)],
            )
        };

        rots.clear();
        for i in istart..istop - 1 {
            let rot = if i == istart {
                Rotation::zeroing(h[(i, i)] - shift, h[(i + 1, i)]).0
            } else {
                let (rot, r) = Rotation::zeroing(h[(i, i - 1)], h[(i + 1, i - 1)]);
                h[(i, i - 1)] = r;
                h[(i + 1, i - 1)] = ZERO;
                rot
            };
            rots.push(rot);

            // Column i already carries rotations before this one; column
            // i + 1 has seen none of this sweep yet.
            apply_pending(h.column_mut(i), i, &rots[i - istart..]);
            apply_pending(h.column_mut(i + 1), istart, &rots);

            let row_end = (i + 3).min(istop);
            apply_right(h, i, 0..row_end, &rot);
            apply_right(z, i, 0..n, &rot);
        }
        for j in istop..n {
            apply_pending(h.column_mut(j), istart, &rots);
        }
    }

    // Clean out the strictly lower part left by deflation.
    for j in 0..n {
        h.column_mut(j)[j + 1..].fill(ZERO);
    }
    Ok(())
}

/// Eigenvectors of an upper triangular matrix: column `k` solves
/// `(T - t_kk) y = 0` with `y_k = 1` (before overflow rescaling).
fn triangular_eigenvectors(t: &ComplexMatrix) -> ComplexMatrix {
    const BIG: f64 = 1e150;
    let n = t.nrows();
    let smlnum = f64::MIN_POSITIVE * (n as f64 / f64::EPSILON);
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (f64::EPSILON * abs1(lambda)).max(smlnum);
        let tk = t.column(k);
        let col = y.column_mut(k);
        col[k] = ONE;
        for i in 0..k {
            col[i] = -tk[i];
        }
        for i in (0..k).rev() {
            let mut d = t[(i, i)] - lambda;
            if abs1(d) < smin {
                d = C64::new(smin, 0.0);
            }
            col[i] /= d;
            let xi = col[i];
            if xi.norm() > BIG {
                let s = 1.0 / xi.norm();
                for x in &mut col[..=k] {
                    *x *= s;
                }
            }
            let xi = col[i];
            axpy(-xi, &t.column(i)[..i], &mut col[..i]);
        }
    }
    y
}

fn upper_inverse(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = u.nrows();
    let mut x = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        if u[(k, k)] == ZERO {
            return Err(Error::IllConditionedBasis {
                condition: f64::INFINITY,
            });
        }
    }
    for k in 0..n {
        let col = x.column_mut(k);
        col[k] = ONE;
        for j in (0..=k).rev() {
            col[j] /= u[(j, j)];
            let xj = col[j];
            if xj != ZERO {
                axpy(-xj, &u.column(j)[..j], &mut col[..j]);
            }
        }
    }
    Ok(x)
}

/// `a * u` for upper triangular `u`.
fn times_upper(a: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    let (m, n) = (a.nrows(), u.ncols());
    let mut out = ComplexMatrix::zeros(m, n);
    for jb in (0..n).step_by(BLOCK) {
        let je = (jb + BLOCK).min(n);
        for p in 0..je {
            let ap = a.column(p);
            for k in jb.max(p)..je {
                let upk = u[(p, k)];
                if upk != ZERO {
                    axpy(upk, ap, out.column_mut(k));
                }
            }
        }
    }
    out
}

/// `u * b` for upper triangular `u`.
fn upper_times(u: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (m, n) = (u.nrows(), b.ncols());
    let mut out = ComplexMatrix::zeros(m, n);
    for jb in (0..n).step_by(BLOCK) {
        let je = (jb + BLOCK).min(n);
        for k in 0..u.ncols() {
            let uk = &u.column(k)[..=k];
            for j in jb..je {
                let bkj = b[(k, j)];
                if bkj != ZERO {
                    axpy(bkj, uk, &mut out.column_mut(j)[..=k]);
                }
            }
        }
    }
    out
}
