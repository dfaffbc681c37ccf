//! Unitary pre-rotations that remove an initial pure state's overlap with the
//! slowest decaying mode.
//!
//! With `ℓ_1 = Σ_k α_k |φ_k⟩⟨φ_k|` (mode 1 in the zero-based indexing of
//! [`crate::spectral`]), a unitary `U_1` first maps `|ψ⟩` onto the
//! eigenvector `|φ_1⟩` of largest-modulus eigenvalue. A rotation
//! `U(s) = exp(-i s F)` with `F = |φ_1⟩⟨φ_n| + |φ_n⟩⟨φ_1|` then mixes in an
//! eigenvector of opposite sign, giving the overlap
//! `α_1 cos²s + α_n sin²s`, which vanishes at `s̄ = arctan √|α_1/α_n|`. If
//! no opposite sign exists but some `α_h` is zero, a transposition
//! `φ_1 ↔ φ_h` is used instead.

use crate::error::{Error, Result};
use crate::linalg::{dotc, hermitian_eig, vector_norm, ComplexMatrix, C64, I, ONE, ZERO};
use crate::spectral::{hermitize_slow_mode, SpectralDecomposition};

/// Eigenvalues with `|α| ≤ TOL_ALPHA · max |α|` count as zero.
pub const TOL_ALPHA: f64 = 1e-10;

/// Normalization tolerance on input state vectors.
pub const STATE_NORM_TOL: f64 = 1e-12;

/// Spectral form of a Hermitian slow left mode.
#[derive(Debug, Clone)]
pub struct SlowModeSpectrum {
    /// Descending.
    alphas: Vec<f64>,
    /// Column `k` is `|φ_k⟩`.
    phis: ComplexMatrix,
    index_1: usize,
    index_n: Option<usize>,
    zero_index: Option<usize>,
    tol_alpha: f64,
}

impl SlowModeSpectrum {
    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn phis(&self) -> &ComplexMatrix {
        &self.phis
    }

    pub fn phi(&self, k: usize) -> &[C64] {
        self.phis.column(k)
    }

    /// Position of `α_1`, the eigenvalue of largest modulus.
    pub fn index_1(&self) -> usize {
        self.index_1
    }

    /// Position of `α_n`, the largest-modulus eigenvalue of sign opposite to
    /// `α_1`, if any.
    pub fn index_n(&self) -> Option<usize> {
        self.index_n
    }

    /// Position of the eigenvalue closest to zero when it lies within
    /// `tol_alpha`.
    pub fn zero_index(&self) -> Option<usize> {
        self.zero_index
    }

    pub fn zero_branch(&self) -> bool {
        self.zero_index.is_some()
    }

    pub fn tol_alpha(&self) -> f64 {
        self.tol_alpha
    }

    pub fn alpha_1(&self) -> f64 {
        self.alphas[self.index_1]
    }

    pub fn alpha_n(&self) -> Option<f64> {
        self.index_n.map(|k| self.alphas[k])
    }

    /// `⟨ψ|ℓ|ψ⟩` evaluated in the eigenbasis.
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        (0..self.dim())
            .map(|k| self.alphas[k] * dotc(self.phi(k), psi).norm_sqr())
            .sum()
    }
}

/// Eigen-decomposes a Hermitian `ℓ` and selects `α_1` and `α_n`.
///
/// `α_1` has the largest modulus, with a tie between `±a` resolved towards
/// the positive value. `α_n` has the largest modulus among the eigenvalues of
/// opposite sign.
pub fn slow_mode_spectrum(ell: &ComplexMatrix) -> Result<SlowModeSpectrum> {
    let eig = hermitian_eig(ell)?;
    let d = eig.eigenvalues.len();
    let alphas: Vec<f64> = eig.eigenvalues.iter().rev().copied().collect();
    let phis = ComplexMatrix::from_fn(d, d, |i, k| eig.eigenvectors[(i, d - 1 - k)]);

    let (first, last) = (alphas[0], alphas[d - 1]);
    let max_abs = first.abs().max(last.abs());
    if max_abs == 0.0 {
        return Err(Error::NoOppositeSign);
    }
    let tol_alpha = TOL_ALPHA * max_abs;
    let index_1 = if last.abs() > first.abs() + tol_alpha {
        d - 1
    } else {
        0
    };
    let alpha_1 = alphas[index_1];
    let index_n = if alpha_1 > 0.0 {
        (last < -tol_alpha).then_some(d - 1)
    } else {
        (first > tol_alpha).then_some(0)
    };
    let zero_index = (0..d)
        .min_by(|&a, &b| alphas[a].abs().total_cmp(&alphas[b].abs()))
        .filter(|&k| alphas[k].abs() <= tol_alpha);
    if index_n.is_none() && zero_index.is_none() {
        return Err(Error::NoOppositeSign);
    }
    Ok(SlowModeSpectrum {
        alphas,
        phis,
        index_1,
        index_n,
        zero_index,
        tol_alpha,
    })
}

/// Orthonormal basis whose first column is `psi`.
///
/// The remaining columns come from Gram–Schmidt (applied twice) on the
/// standard basis vectors in index order, skipping the one with the largest
/// `|⟨e_j|ψ⟩|` (first such index on ties).
pub fn complete_basis(psi: &[C64]) -> Result<ComplexMatrix> {
    let d = psi.len();
    if d == 0 {
        return Err(Error::EmptyMatrix { rows: 0, cols: 1 });
    }
    let norm = vector_norm(psi);
    if !((norm - 1.0).abs() <= STATE_NORM_TOL) {
        return Err(Error::NotNormalized { norm });
    }
    let skip = (0..d).fold(0, |best, j| if psi[j].norm() > psi[best].norm() { j } else { best });
    let mut basis = ComplexMatrix::zeros(d, d);
    basis.column_mut(0).copy_from_slice(psi);
    for (filled, j) in (1..).zip((0..d).filter(|&j| j != skip)) {
        let mut v = vec![ZERO; d];
        v[j] = ONE;
        for _ in 0..2 {
            for k in 0..filled {
                let q = basis.column(k);
                let c = dotc(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let nv = vector_norm(&v);
        for (dst, x) in basis.column_mut(filled).iter_mut().zip(&v) {
            *dst = x / nv;
        }
    }
    Ok(basis)
}

/// `U_1 = Σ_k |φ_{π(k)}⟩⟨ψ_k|` with `{ψ_k}` from [`complete_basis`].
///
/// `ψ_1 = ψ` maps to column `target` of `phis`; the remaining `ψ_k` map to the
/// other columns in ascending order.
pub fn build_u1(psi: &[C64], phis: &ComplexMatrix, target: usize) -> Result<ComplexMatrix> {
    let d = psi.len();
    if phis.shape() != (d, d) {
        return Err(Error::ShapeMismatch {
            op: "build_u1",
            left: (d, 1),
            right: phis.shape(),
        });
    }
    if target >= d {
        return Err(Error::IndexOutOfRange { index: target, dim: d });
    }
    let aux = complete_basis(psi)?;
    let images = std::iter::once(target).chain((0..d).filter(|&k| k != target));
    let mut u = ComplexMatrix::zeros(d, d);
    for (k, img) in images.enumerate() {
        let phi = phis.column(img);
        let chi = aux.column(k);
        for j in 0..d {
            let c = chi[j].conj();
            for i in 0..d {
                u[(i, j)] += phi[i] * c;
            }
        }
    }
    Ok(u)
}

/// `s̄ = arctan √|α_1/α_n|`, the zero of `α_1 cos²s + α_n sin²s`.
pub fn rotation_angle(alpha_1: f64, alpha_n: f64) -> Result<f64> {
    if !(alpha_1 * alpha_n < 0.0) {
        return Err(Error::SameSign {
            first: alpha_1,
            second: alpha_n,
        });
    }
    Ok((alpha_1 / alpha_n).abs().sqrt().atan())
}

/// `F = |φ_1⟩⟨φ_n| + |φ_n⟩⟨φ_1|`.
pub fn rotation_generator(spec: &SlowModeSpectrum) -> Result<ComplexMatrix> {
    let n = spec.index_n.ok_or(Error::ZeroBranch)?;
    let (p1, pn) = (spec.phi(spec.index_1), spec.phi(n));
    Ok(&ComplexMatrix::outer(p1, pn) + &ComplexMatrix::outer(pn, p1))
}

/// `U(s) = 1 + (cos s - 1) F² - i sin s F`.
///
/// Fails with [`Error::ZeroBranch`] when `ℓ` has no eigenvalue of sign
/// opposite to `α_1`.
pub fn build_rotation(spec: &SlowModeSpectrum, s: f64) -> Result<ComplexMatrix> {
    let n = spec.index_n.ok_or(Error::ZeroBranch)?;
    let (p1, pn) = (spec.phi(spec.index_1), spec.phi(n));
    let f = &ComplexMatrix::outer(p1, pn) + &ComplexMatrix::outer(pn, p1);
    let f2 = &ComplexMatrix::outer(p1, p1) + &ComplexMatrix::outer(pn, pn);
    let mut u = ComplexMatrix::identity(spec.dim());
    u = &u + &f2.scale_real(s.cos() - 1.0);
    Ok(&u - &f.scale(I * s.sin()))
}

/// Transposition `|φ_1⟩ ↔ |φ_h⟩` onto the zero eigenvalue `α_h`, identity on
/// the rest.
pub fn build_permutation(spec: &SlowModeSpectrum) -> Result<ComplexMatrix> {
    let h = spec.zero_index.ok_or(Error::NoZeroEigenvalue)?;
    let (p1, ph) = (spec.phi(spec.index_1), spec.phi(h));
    let mut u = ComplexMatrix::identity(spec.dim());
    u = &u - &ComplexMatrix::outer(p1, p1);
    u = &u - &ComplexMatrix::outer(ph, ph);
    u = &u + &ComplexMatrix::outer(p1, ph);
    Ok(&u + &ComplexMatrix::outer(ph, p1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Rotation,
    Permutation,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Rotation => "rotation",
            Branch::Permutation => "permutation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MpembaRotation {
    pub spectrum: SlowModeSpectrum,
    pub u1: ComplexMatrix,
    /// `s̄`, rotation branch only.
    pub s_bar: Option<f64>,
    /// `F`, rotation branch only.
    pub generator: Option<ComplexMatrix>,
    /// `U = U_2 U_1`.
    pub u: ComplexMatrix,
    pub branch: Branch,
    /// `⟨ψ|ℓ|ψ⟩` before any rotation.
    pub overlap_before: f64,
    /// `|⟨ψ|U† ℓ U|ψ⟩|`.
    pub residual_overlap: f64,
    /// `||U†U - 1||_max`.
    pub unitarity_residual: f64,
}

impl MpembaRotation {
    /// `U ρ U†`.
    pub fn rotate(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.u.matmul(rho)?.matmul(&self.u.adjoint())
    }

    /// `U|ψ⟩`.
    pub fn rotate_state(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.u.matvec(psi)
    }
}

/// Builds `U` for a Hermitian `ℓ` and a normalized `ψ`, preferring the
/// rotation branch whenever an opposite-sign eigenvalue exists.
pub fn mpemba_unitary(ell: &ComplexMatrix, psi: &[C64]) -> Result<MpembaRotation> {
    let spectrum = slow_mode_spectrum(ell)?;
    if psi.len() != spectrum.dim() {
        return Err(Error::ShapeMismatch {
            op: "mpemba_unitary",
            left: ell.shape(),
            right: (psi.len(), 1),
        });
    }
    let u1 = build_u1(psi, spectrum.phis(), spectrum.index_1())?;
    let (u2, s_bar, generator, branch) = match spectrum.alpha_n() {
        Some(alpha_n) => {
            let s_bar = rotation_angle(spectrum.alpha_1(), alpha_n)?;
            (
                build_rotation(&spectrum, s_bar)?,
                Some(s_bar),
                Some(rotation_generator(&spectrum)?),
                Branch::Rotation,
            )
        }
        None => (build_permutation(&spectrum)?, None, None, Branch::Permutation),
    };
    let u = u2.matmul(&u1)?;
    let rotated = u.matvec(psi)?;
    let residual_overlap = spectrum.expectation(&rotated).abs();
    let overlap_before = spectrum.expectation(psi);
    let unitarity_residual = unitarity_residual(&u)?;
    Ok(MpembaRotation {
        spectrum,
        u1,
        s_bar,
        generator,
        u,
        branch,
        overlap_before,
        residual_overlap,
        unitarity_residual,
    })
}

/// [`mpemba_unitary`] on the Hermitized slow left mode of `dec`, which must
/// pass its assumption checks.
pub fn optimal_unitary(dec: &SpectralDecomposition, psi: &[C64]) -> Result<MpembaRotation> {
    dec.check_assumptions()?;
    let ell = hermitize_slow_mode(dec)?;
    mpemba_unitary(&ell, psi)
}

/// `||U†U - 1||_max`.
pub fn unitarity_residual(u: &ComplexMatrix) -> Result<f64> {
    let g = u.adjoint().matmul(u)?;
    Ok(g.max_abs_diff(&ComplexMatrix::identity(u.nrows())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub s: f64,
    /// `Tr(ℓ U(s) U_1 ρ_0 U_1† U(s)†)` computed from the matrices.
    pub overlap: f64,
    /// `α_1 cos²s + α_n sin²s`.
    pub analytic: f64,
}

#[derive(Debug, Clone)]
pub struct OverlapScan {
    pub alpha_1: f64,
    pub alpha_n: f64,
    pub s_bar: f64,
    /// `⟨ψ|ℓ|ψ⟩` of the un-rotated state.
    pub unrotated: f64,
    /// `|overlap(s̄)|`.
    pub residual: f64,
    pub points: Vec<ScanPoint>,
}

/// Overlap of the rotated state with `ℓ` along `s_grid`, for a Hermitian `ℓ`.
pub fn overlap_scan_for(ell: &ComplexMatrix, psi: &[C64], s_grid: &[f64]) -> Result<OverlapScan> {
    let spectrum = slow_mode_spectrum(ell)?;
    let u1 = build_u1(psi, spectrum.phis(), spectrum.index_1())?;
    let alpha_1 = spectrum.alpha_1();
    let alpha_n = spectrum.alpha_n().ok_or(Error::ZeroBranch)?;
    let s_bar = rotation_angle(alpha_1, alpha_n)?;
    let base = u1.matvec(psi)?;
    let overlap_at = |s: f64| -> Result<f64> {
        let chi = build_rotation(&spectrum, s)?.matvec(&base)?;
        let l_chi = ell.matvec(&chi)?;
        Ok(dotc(&chi, &l_chi).re)
    };
    let points = s_grid
        .iter()
        .map(|&s| {
            let (c, sn) = (s.cos(), s.sin());
            Ok(ScanPoint {
                s,
                overlap: overlap_at(s)?,
                analytic: alpha_1 * c * c + alpha_n * sn * sn,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapScan {
        alpha_1,
        alpha_n,
        s_bar,
        unrotated: spectrum.expectation(psi),
        residual: overlap_at(s_bar)?.abs(),
        points,
    })
}

/// [`overlap_scan_for`] on the Hermitized slow left mode of `dec`.
pub fn overlap_scan(dec: &SpectralDecomposition, psi: &[C64], s_grid: &[f64]) -> Result<OverlapScan> {
    dec.check_assumptions()?;
    let ell = hermitize_slow_mode(dec)?;
    overlap_scan_for(&ell, psi, s_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::random_pure_state;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn real_diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(v)
    }

    /// Random unitary from Gram–Schmidt on a seeded matrix.
    fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
        let cols: Vec<Vec<C64>> = (0..d)
            .map(|k| random_pure_state(d - 1, seed * 1000 + k as u64).unwrap())
            .map(|v| v.iter().map(|z| z - c(0.5, 0.5) / (d as f64).sqrt()).collect())
            .collect();
        let mut q = ComplexMatrix::zeros(d, d);
        for (k, col) in cols.iter().enumerate() {
            let mut v = col.clone();
            for _ in 0..2 {
                for j in 0..k {
                    let cj = dotc(q.column(j), &v);
                    let qj = q.column(j).to_vec();
                    v.iter_mut().zip(&qj).for_each(|(x, y)| *x -= cj * y);
                }
            }
            let n = vector_norm(&v);
            q.column_mut(k).iter_mut().zip(&v).for_each(|(x, y)| *x = y / n);
        }
        q
    }

    fn random_hermitian(d: usize, seed: u64) -> ComplexMatrix {
        let u = random_unitary(d, seed);
        let diag: Vec<f64> = (0..d).map(|k| (k as f64 * 0.731 + seed as f64).sin()).collect();
        u.matmul(&real_diag(&diag)).unwrap().matmul(&u.adjoint()).unwrap().hermitian_part().unwrap()
    }

    #[test]
    fn two_level_selection() {
        let spec = slow_mode_spectrum(&real_diag(&[1.0, -1.0])).unwrap();
        assert_eq!(spec.alpha_1(), 1.0);
        assert_eq!(spec.alpha_n(), Some(-1.0));
        assert!(!spec.zero_branch());
        let spec = slow_mode_spectrum(&real_diag(&[-1.0, 1.0])).unwrap();
        assert_eq!(spec.alpha_1(), 1.0);
    }

    #[test]
    fn zero_eigenvalue_is_flagged() {
        let spec = slow_mode_spectrum(&real_diag(&[2.0, 0.0, -1.0])).unwrap();
        assert!(spec.zero_branch());
        assert_eq!(spec.alphas()[spec.zero_index().unwrap()], 0.0);
        // an opposite-sign partner exists, so the rotation stays available
        assert_eq!(spec.alpha_n(), Some(-1.0));
    }

    #[test]
    fn opposite_sign_selection() {
        let spec = slow_mode_spectrum(&real_diag(&[3.0, 1.0, -1.0])).unwrap();
        assert_eq!(spec.alpha_1(), 3.0);
        assert_eq!(spec.alpha_n(), Some(-1.0));
        let spec = slow_mode_spectrum(&real_diag(&[0.5, -4.0, -2.0, 1.0])).unwrap();
        assert_eq!(spec.alpha_1(), -4.0);
        assert_eq!(spec.alpha_n(), Some(1.0));
    }

    #[test]
    fn same_sign_without_zero_is_rejected() {
        assert!(matches!(
            slow_mode_spectrum(&real_diag(&[3.0, 1.0, 0.5])),
            Err(Error::NoOppositeSign)
        ));
        assert!(matches!(slow_mode_spectrum(&real_diag(&[0.0, 0.0])), Err(Error::NoOppositeSign)));
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let spec = slow_mode_spectrum(&random_hermitian(7, 3)).unwrap();
        let g = spec.phis().adjoint().matmul(spec.phis()).unwrap();
        assert!(g.max_abs_diff(&ComplexMatrix::identity(7)) <= 1e-10);
        assert!(spec.alphas().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn u1_examples() {
        let psi = [ONE, ZERO];
        let phis = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let u1 = build_u1(&psi, &phis, 0).unwrap();
        let swap = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(u1.max_abs_diff(&swap) <= 1e-15);

        let phis = random_unitary(6, 5);
        let psi = phis.column(2).to_vec();
        let u1 = build_u1(&psi, &phis, 2).unwrap();
        let image = u1.matvec(&psi).unwrap();
        assert!(image.iter().zip(phis.column(2)).all(|(a, b)| (a - b).norm() <= 1e-12));
    }

    #[test]
    fn u1_maps_random_state() {
        let phis = random_unitary(9, 11);
        let psi = random_pure_state(8, 4).unwrap();
        for target in [0, 4, 8] {
            let u1 = build_u1(&psi, &phis, target).unwrap();
            assert!((dotc(phis.column(target), &u1.matvec(&psi).unwrap()) - ONE).norm() <= 1e-10);
            assert!(unitarity_residual(&u1).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let phis = ComplexMatrix::identity(2);
        assert!(matches!(
            build_u1(&[c(1.0, 0.0), c(1.0, 0.0)], &phis, 0),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn completion_skips_dominant_direction() {
        let psi = [c(0.6, 0.0), c(0.0, 0.8)];
        let basis = complete_basis(&psi).unwrap();
        assert!(unitarity_residual(&basis).unwrap() <= 1e-15);
        // e_1 is skipped, so the second column comes from e_0
        assert!(basis[(0, 1)].re > 0.0);
    }

    #[test]
    fn rotation_angle_examples() {
        assert!((rotation_angle(1.0, -1.0).unwrap() - FRAC_PI_4).abs() <= 1e-15);
        let s = rotation_angle(3.0, -1.0).unwrap();
        assert!((s - FRAC_PI_3).abs() <= 1e-15);
        assert!((3.0 * s.cos().powi(2) - s.sin().powi(2)).abs() <= 1e-12);
        let s = rotation_angle(-2.0, 1.0).unwrap();
        assert!((s - 2f64.sqrt().atan()).abs() <= 1e-15);
        assert!((-2.0 * s.cos().powi(2) + s.sin().powi(2)).abs() <= 1e-12);
        assert!(matches!(rotation_angle(1.0, 2.0), Err(Error::SameSign { .. })));
        assert!(matches!(rotation_angle(0.0, -2.0), Err(Error::SameSign { .. })));
    }

    #[test]
    fn rotation_examples() {
        let spec = slow_mode_spectrum(&real_diag(&[1.0, 0.5, -1.0])).unwrap();
        assert!(build_rotation(&spec, 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(3)) == 0.0);
        let u = build_rotation(&spec, FRAC_PI_2).unwrap();
        let image = u.matvec(spec.phi(spec.index_1())).unwrap();
        let target: Vec<C64> = spec.phi(spec.index_n().unwrap()).iter().map(|z| -I * z).collect();
        assert!(image.iter().zip(&target).all(|(a, b)| (a - b).norm() <= 1e-15));
        let middle = spec.phi(1);
        let fixed = u.matvec(middle).unwrap();
        assert!(fixed.iter().zip(middle).all(|(a, b)| (a - b).norm() <= 1e-15));
        for s in [0.3, -1.1, 2.9] {
            let prod = build_rotation(&spec, s).unwrap().matmul(&build_rotation(&spec, -s).unwrap()).unwrap();
            assert!(prod.max_abs_diff(&ComplexMatrix::identity(3)) <= 1e-15);
        }
    }

    #[test]
    fn rotation_requires_opposite_sign() {
        let spec = slow_mode_spectrum(&real_diag(&[2.0, 0.0])).unwrap();
        assert!(matches!(build_rotation(&spec, 0.1), Err(Error::ZeroBranch)));
        let spec = slow_mode_spectrum(&real_diag(&[2.0, -1.0])).unwrap();
        assert!(matches!(build_permutation(&spec), Err(Error::NoZeroEigenvalue)));
    }

    #[test]
    fn permutation_examples() {
        let ell = real_diag(&[2.0, 0.0]);
        let out = mpemba_unitary(&ell, &[ONE, ZERO]).unwrap();
        assert_eq!(out.branch, Branch::Permutation);
        assert!(out.residual_overlap == 0.0);
        let swap = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(out.u.max_abs_diff(&swap) <= 1e-15);

        let spec = slow_mode_spectrum(&real_diag(&[1.0, 0.0, 1.0])).unwrap();
        let p = build_permutation(&spec).unwrap();
        assert!(p.matmul(&p).unwrap().max_abs_diff(&ComplexMatrix::identity(3)) <= 1e-15);
        let spec = slow_mode_spectrum(&real_diag(&[1.0, 0.0, -1.0])).unwrap();
        let p = build_permutation(&spec).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(p.max_abs_diff(&expected) <= 1e-15);
    }

    #[test]
    fn state_on_eigenvector_still_rotates() {
        let ell = real_diag(&[3.0, 1.0, -1.0]);
        let psi = [ONE, ZERO, ZERO];
        let out = mpemba_unitary(&ell, &psi).unwrap();
        assert_eq!(out.branch, Branch::Rotation);
        assert!((out.s_bar.unwrap() - FRAC_PI_3).abs() <= 1e-15);
        assert!(out.residual_overlap <= 1e-15);
    }

    #[test]
    fn scan_follows_two_level_law() {
        let ell = random_hermitian(8, 9);
        let psi = random_pure_state(7, 2).unwrap();
        let grid: Vec<f64> = (0..=40).map(|k| FRAC_PI_2 * k as f64 / 40.0).collect();
        let scan = overlap_scan_for(&ell, &psi, &grid).unwrap();
        for p in &scan.points {
            assert!((p.overlap - p.analytic).abs() <= 1e-10);
        }
        assert!((scan.points[0].overlap - scan.alpha_1).abs() <= 1e-10);
        assert!((scan.points[40].overlap - scan.alpha_n).abs() <= 1e-10);
        assert!(scan.residual <= 1e-10);
        let direct = dotc(&psi, &ell.matvec(&psi).unwrap()).re;
        assert!((scan.unrotated - direct).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn construction_zeroes_overlap(seed in 0u64..500, d in 2usize..9) {
            // ℓ orthogonal to a random full-rank state: Tr(ℓ P) = 0
            let h = random_hermitian(d, seed + 1);
            let p_vec = random_pure_state(d - 1, seed + 7).unwrap();
            let mut p = ComplexMatrix::outer(&p_vec, &p_vec).scale_real(0.5);
            for i in 0..d {
                p[(i, i)] += c(0.5 / d as f64, 0.0);
            }
            let shift = h.matmul(&p).unwrap().trace().unwrap().re;
            let mut ell = h.clone();
            for i in 0..d {
                ell[(i, i)] -= c(shift, 0.0);
            }
            let psi = random_pure_state(d - 1, seed).unwrap();
            let out = mpemba_unitary(&ell, &psi).unwrap();
            prop_assert!(out.unitarity_residual <= 1e-10);
            prop_assert!(out.residual_overlap <= 1e-9 * ell.max_abs());
            let before = dotc(&psi, &ell.matvec(&psi).unwrap()).re;
            prop_assert!((out.overlap_before - before).abs() <= 1e-12);
        }

        #[test]
        fn rotation_preserves_purity(seed in 0u64..200) {
            let ell = random_hermitian(5, seed);
            let psi = random_pure_state(4, seed).unwrap();
            if let Ok(out) = mpemba_unitary(&ell, &psi) {
                let rho = out.rotate(&ComplexMatrix::outer(&psi, &psi)).unwrap();
                let eig = hermitian_eig(&rho.hermitian_part().unwrap()).unwrap();
                prop_assert!((eig.eigenvalues[4] - 1.0).abs() <= 1e-12);
                prop_assert!(eig.eigenvalues[..4].iter().all(|w| w.abs() <= 1e-12));
            }
        }
    }
}
