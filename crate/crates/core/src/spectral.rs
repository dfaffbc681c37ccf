//! Sorted, biorthonormal mode structure of a Lindblad generator.
//!
//! Modes are indexed from zero: mode 0 is the stationary mode (`λ = 0`,
//! left mode the identity), mode 1 the slowest decaying one, mode 2 the
//! next. Right modes `r_k` and left modes `ℓ_k` satisfy `Tr(ℓ_k r_h) = δ_kh`.
//!
//! Normalization:
//! - `ℓ_0 = 1` and hence `Tr r_0 = 1`;
//! - for `k ≥ 1`, `||r_k||_F = 1`;
//! - for real modes whose left mode is a phase times a Hermitian matrix, the
//!   phase is removed and the sign chosen so the largest-modulus entry of
//!   the upper triangle has a positive leading part; such modes are then
//!   Hermitized when the residual allows it;
//! - for every other mode the largest-modulus entry of `ℓ_k` is made real
//!   and positive.

use crate::error::{Error, Result};
use crate::linalg::{
    dotu, general_eig_with_limit, hermitian_eig, vector_norm, ComplexMatrix, Lu, C64,
    ILL_CONDITIONED_LIMIT, ONE, ZERO,
};
use crate::superop::{unvec, Superoperator, SuperoperatorKind, Vectorization};
use std::sync::OnceLock;

/// Anti-Hermitian residual (relative to the largest entry) below which a
/// mode is Hermitized.
pub const HERMITIZE_TOL: f64 = 1e-7;

/// Bases with a larger condition estimate are treated as numerically
/// singular. Between [`ILL_CONDITIONED_LIMIT`] and this value the
/// decomposition is returned with [`Diagnostics::ill_conditioned`] set.
pub const SINGULAR_BASIS_LIMIT: f64 = 1e18;

const REFINE_ITERATIONS: usize = 3;
const BASIS_ITERATIONS: usize = 3;

/// Scaled tolerances; each is multiplied by `max |λ|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTolerances {
    /// Eigenvalues with `|λ|` below this are stationary.
    pub zero: f64,
    /// `|Im λ_1|` below this counts as real.
    pub imag: f64,
    /// `|Re λ_2| - |Re λ_1|` must exceed this. Also the tie width when
    /// sorting by `|Re λ|`.
    pub gap: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        Self {
            zero: 1e-9,
            imag: 1e-8,
            gap: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionFlags {
    pub enough_modes: bool,
    pub unique_stationary: bool,
    pub slow_mode_real: bool,
    pub slow_mode_isolated: bool,
    pub slow_mode_hermitian: bool,
}

impl AssumptionFlags {
    pub fn clean(&self) -> bool {
        self.enough_modes
            && self.unique_stationary
            && self.slow_mode_real
            && self.slow_mode_isolated
            && self.slow_mode_hermitian
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// `||V||_1 ||V⁻¹||_1` of the eigenvector basis.
    pub condition: f64,
    /// Warning: `condition` exceeds [`ILL_CONDITIONED_LIMIT`]. The slow
    /// modes are refined separately and stay accurate; fast modes and the
    /// full-basis biorthogonality degrade roughly as `ε · condition`.
    pub ill_conditioned: bool,
    pub max_abs_eigenvalue: f64,
    pub tol_zero: f64,
    pub tol_imag: f64,
    pub tol_gap: f64,
    pub stationary_count: usize,
    /// Largest `Re λ` over the spectrum (should not be positive).
    pub max_real_part: f64,
    /// `|Im λ_1|`.
    pub slow_imag: f64,
    /// `|Re λ_2| - |Re λ_1|`.
    pub gap: f64,
    /// `max |ℓ_0 - 1|` for the left stationary mode as it came out of the
    /// full decomposition, before it is replaced by the exact identity.
    pub identity_residual: f64,
    /// `max |Tr(ℓ_k r_h) - δ_kh|` reached by the left-basis refinement.
    pub biorthogonality_residual: f64,
    pub stationary_min_eigenvalue: f64,
    /// Relative anti-Hermitian part of `ℓ_1` before Hermitization.
    pub slow_hermiticity_residual: f64,
    pub conjugate_closed: bool,
    pub flags: AssumptionFlags,
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<C64>,
    /// Column `k` is `vec(r_k)`.
    right: ComplexMatrix,
    /// Column `k` is `vec(ℓ_kᵀ)`, so `Tr(ℓ_k X) = Σ_a left[a, k] vec(X)_a`.
    left_t: ComplexMatrix,
    stationary: ComplexMatrix,
    diagnostics: Diagnostics,
    /// Factorization of the right-mode matrix, built on first use.
    right_lu: OnceLock<Lu>,
}

/// Diagonalizes and normalizes without enforcing the modelling assumptions;
/// violations are recorded in the diagnostics flags.
pub fn analyze(l: &Superoperator, tol: &SpectralTolerances) -> Result<SpectralDecomposition> {
    l.ensure_kind(SuperoperatorKind::Generator)?;
    l.ensure_convention(Vectorization::ColumnStacking)?;
    let d = l.dim();
    let eig = general_eig_with_limit(l.matrix(), SINGULAR_BASIS_LIMIT)?;
    let n = eig.eigenvalues.len();

    let max_abs = eig.eigenvalues.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let tol_zero = tol.zero * max_abs;
    let tol_imag = tol.imag * max_abs;
    let tol_gap = tol.gap * max_abs;

    let order = sort_order(&eig.eigenvalues, tol_gap);
    let mut eigenvalues: Vec<C64> = order.iter().map(|&p| eig.eigenvalues[p]).collect();
    let mut right = ComplexMatrix::zeros(n, n);
    let mut left_t = ComplexMatrix::zeros(n, n);
    for (k, &p) in order.iter().enumerate() {
        right.column_mut(k).copy_from_slice(eig.right.column(p));
        let col = left_t.column_mut(k);
        for (a, x) in col.iter_mut().enumerate() {
            *x = eig.left[(p, a)];
        }
    }

    let stationary_count = eigenvalues.iter().filter(|z| z.norm() <= tol_zero).count();
    let enough_modes = n >= 3;
    let slow_imag = if n > 1 { eigenvalues[1].im.abs() } else { 0.0 };
    let gap = if enough_modes {
        eigenvalues[2].re.abs() - eigenvalues[1].re.abs()
    } else {
        0.0
    };
    let mut flags = AssumptionFlags {
        enough_modes,
        unique_stationary: stationary_count == 1,
        slow_mode_real: n > 1 && slow_imag <= tol_imag,
        slow_mode_isolated: enough_modes && gap >= tol_gap,
        slow_mode_hermitian: false,
    };

    // The slow modes are refined by inverse iteration: the fast part of the
    // basis can be ill-conditioned enough to pollute them otherwise.
    let mut identity_residual = 0.0;
    if flags.unique_stationary && n > 1 {
        let (x, _, _) = refine_mode(l.matrix(), eigenvalues[0], right.column(0), left_t.column(0))?;
        let trace = unvec(&x)?.trace()?;
        for (dst, src) in right.column_mut(0).iter_mut().zip(&x) {
            *dst = src / trace;
        }
        let ell0 = left_mode_of(&left_t, 0);
        let c = ell0.trace()? / d as f64;
        identity_residual = ell0.scale(ONE / c).max_abs_diff(&ComplexMatrix::identity(d));
        set_left_mode(&mut left_t, 0, &ComplexMatrix::identity(d));
        // Trace preservation makes the stationary eigenvalue exactly zero.
        eigenvalues[0] = ZERO;
    } else {
        let c = left_mode_of(&left_t, 0).trace()? / d as f64;
        if c != ZERO {
            scale_pair(&mut right, &mut left_t, 0, c, ONE / c);
        }
    }
    if flags.slow_mode_isolated {
        let (x, w, lambda) =
            refine_mode(l.matrix(), eigenvalues[1], right.column(1), left_t.column(1))?;
        right.column_mut(1).copy_from_slice(&x);
        left_t.column_mut(1).copy_from_slice(&w);
        eigenvalues[1] = lambda;
    }

    for (k, lambda) in eigenvalues.iter().enumerate().skip(1) {
        normalize_mode(&mut right, &mut left_t, k, lambda.im.abs() <= tol_imag);
    }

    let mut slow_hermiticity_residual = f64::INFINITY;
    if n > 1 {
        let ell = left_mode_of(&left_t, 1);
        let r = unvec(right.column(1))?;
        slow_hermiticity_residual = relative_antihermitian(&ell);
        let r_res = relative_antihermitian(&r);
        if flags.slow_mode_real
            && slow_hermiticity_residual <= HERMITIZE_TOL
            && r_res <= HERMITIZE_TOL
        {
            set_left_mode(&mut left_t, 1, &ell.hermitian_part()?);
            right
                .column_mut(1)
                .copy_from_slice(r.hermitian_part()?.as_slice());
            flags.slow_mode_hermitian = true;
        }
    }

    // Pull the rest of the left basis into line with the final right modes,
    // then restore the exact forms of ℓ_0 and ℓ_1.
    let biorthogonality_residual = refine_left_basis(&right, &mut left_t)?;
    if flags.unique_stationary {
        set_left_mode(&mut left_t, 0, &ComplexMatrix::identity(d));
    }
    if flags.slow_mode_hermitian {
        let ell = left_mode_of(&left_t, 1).hermitian_part()?;
        set_left_mode(&mut left_t, 1, &ell);
    }

    let r0 = unvec(right.column(0))?;
    let r0h = r0.hermitian_part()?;
    let tr = r0h.trace()?.re;
    let stationary = r0h.scale_real(1.0 / tr);
    let stationary_min_eigenvalue = hermitian_eig(&stationary)?.eigenvalues[0];

    let max_real_part = eigenvalues.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re));
    let conjugate_closed = conjugate_closed(&eigenvalues, tol_imag, 1e-8 * max_abs.max(1.0));

    Ok(SpectralDecomposition {
        dim: d,
        eigenvalues,
        right,
        left_t,
        stationary,
        diagnostics: Diagnostics {
            condition: eig.condition,
            ill_conditioned: eig.condition > ILL_CONDITIONED_LIMIT,
            max_abs_eigenvalue: max_abs,
            tol_zero,
            tol_imag,
            tol_gap,
            stationary_count,
            max_real_part,
            slow_imag,
            gap,
            identity_residual,
            biorthogonality_residual,
            stationary_min_eigenvalue,
            slow_hermiticity_residual,
            conjugate_closed,
            flags,
        },
        right_lu: OnceLock::new(),
    })
}

/// [`analyze`] followed by [`SpectralDecomposition::check_assumptions`].
pub fn decompose(l: &Superoperator, tol: &SpectralTolerances) -> Result<SpectralDecomposition> {
    let dec = analyze(l, tol)?;
    dec.check_assumptions()?;
    Ok(dec)
}

impl SpectralDecomposition {
    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, k: usize) -> C64 {
        self.eigenvalues[k]
    }

    pub fn right_mode(&self, k: usize) -> ComplexMatrix {
        unvec(self.right.column(k)).expect("square by construction")
    }

    pub fn left_mode(&self, k: usize) -> ComplexMatrix {
        left_mode_of(&self.left_t, k)
    }

    /// Right modes as columns of a `d² × d²` matrix.
    pub fn right_matrix(&self) -> &ComplexMatrix {
        &self.right
    }

    /// Column `k` is `vec(ℓ_kᵀ)`.
    pub fn left_transposed_matrix(&self) -> &ComplexMatrix {
        &self.left_t
    }

    pub fn stationary_state(&self) -> &ComplexMatrix {
        &self.stationary
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// `1/|λ_1|`.
    pub fn tau(&self) -> f64 {
        1.0 / self.eigenvalues[1].norm()
    }

    /// `|Re λ_2| - |Re λ_1|`.
    pub fn gap3(&self) -> f64 {
        self.diagnostics.gap
    }

    /// `|Re λ_1|`, the asymptotic decay rate of a generic state.
    pub fn slow_rate(&self) -> f64 {
        self.eigenvalues[1].re.abs()
    }

    /// `|Re λ_2|`, the decay rate once mode 1 is not excited.
    pub fn next_rate(&self) -> f64 {
        self.eigenvalues[2].re.abs()
    }

    pub fn check_assumptions(&self) -> Result<()> {
        let d = &self.diagnostics;
        if !d.flags.enough_modes {
            return Err(Error::TooFewModes {
                modes: self.eigenvalues.len(),
            });
        }
        if !d.flags.unique_stationary {
            return Err(Error::DegenerateStationaryState {
                count: d.stationary_count,
                tol: d.tol_zero,
            });
        }
        if !d.flags.slow_mode_real {
            return Err(Error::ComplexSlowMode {
                imag: d.slow_imag,
                tol: d.tol_imag,
            });
        }
        if !d.flags.slow_mode_isolated {
            return Err(Error::DegenerateSlowMode {
                gap: d.gap,
                tol: d.tol_gap,
            });
        }
        if !d.flags.slow_mode_hermitian {
            return Err(Error::NotHermitianSlowMode {
                residual: d.slow_hermiticity_residual,
            });
        }
        Ok(())
    }

    /// `Tr(ℓ_k ρ)` for every mode.
    pub fn mode_overlaps(&self, rho: &ComplexMatrix) -> Result<Vec<C64>> {
        let d = self.dim;
        if rho.shape() != (d, d) {
            return Err(Error::ShapeMismatch {
                op: "mode_overlaps",
                left: (d, d),
                right: rho.shape(),
            });
        }
        let v = rho.as_slice();
        Ok((0..self.num_modes())
            .map(|k| {
                self.left_t
                    .column(k)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Coefficients `c` with `Σ_k c_k r_k = ρ`, for propagation.
    ///
    /// For the refined stationary and slow modes `c_k = Tr(ℓ_k ρ)`. The rest
    /// come from solving `V c = vec(ρ)` against the right modes, which keeps
    /// the reconstruction error of order `ε · cond(V)` and lets it decay with
    /// the fast modes. Using `Tr(ℓ_k ρ)` throughout would instead amplify the
    /// left-basis error by `cond(V)`.
    pub fn expansion_coefficients(&self, rho: &ComplexMatrix) -> Result<Vec<C64>> {
        let overlaps = self.mode_overlaps(rho)?;
        let lu = match self.right_lu.get() {
            Some(lu) => lu,
            None => {
                let lu = Lu::new(&self.right)?;
                self.right_lu.get_or_init(|| lu)
            }
        };
        let mut c = rho.as_slice().to_vec();
        lu.solve_in_place(&mut c)?;
        let flags = &self.diagnostics.flags;
        if flags.unique_stationary {
            c[0] = overlaps[0];
        }
        if flags.slow_mode_isolated {
            c[1] = overlaps[1];
        }
        Ok(c)
    }

    /// `Σ_k c_k r_k` as a matrix.
    pub fn synthesize(&self, coefficients: &[C64]) -> Result<ComplexMatrix> {
        let v = self.right.matvec(coefficients)?;
        unvec(&v)
    }

    /// `max_{k,h} |Tr(ℓ_k r_h) - δ_kh|`. Costs a full matrix product.
    pub fn biorthogonality_residual(&self) -> f64 {
        let gram = &self.left_t.transpose() * &self.right;
        gram.max_abs_diff(&ComplexMatrix::identity(gram.nrows()))
    }

    /// `max_k ||L̂ v_k - λ_k v_k||_2 / ||v_k||_2`. Costs a full matrix product.
    pub fn eigen_residual(&self, l: &Superoperator) -> f64 {
        let lv = l.matrix() * &self.right;
        (0..self.num_modes())
            .map(|k| {
                let v = self.right.column(k);
                let lambda = self.eigenvalues[k];
                let r: Vec<C64> = lv
                    .column(k)
                    .iter()
                    .zip(v)
                    .map(|(x, y)| x - lambda * y)
                    .collect();
                vector_norm(&r) / vector_norm(v)
            })
            .fold(0.0, f64::max)
    }
}

/// Hermitian version of the slow left mode `ℓ_1`.
pub fn hermitize_slow_mode(dec: &SpectralDecomposition) -> Result<ComplexMatrix> {
    let flags = &dec.diagnostics.flags;
    if !flags.enough_modes {
        return Err(Error::TooFewModes {
            modes: dec.num_modes(),
        });
    }
    if !flags.slow_mode_real {
        return Err(Error::ComplexSlowMode {
            imag: dec.diagnostics.slow_imag,
            tol: dec.diagnostics.tol_imag,
        });
    }
    hermitize(&dec.left_mode(1))
}

/// `(M + M†)/2`, provided `||M - M†||_max ≤ 1e-7 ||M||_max`.
pub fn hermitize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let residual = relative_antihermitian(m);
    if residual > HERMITIZE_TOL {
        return Err(Error::NotHermitianSlowMode { residual });
    }
    m.hermitian_part()
}

fn relative_antihermitian(m: &ComplexMatrix) -> f64 {
    let scale = m.max_abs();
    if scale == 0.0 {
        0.0
    } else {
        m.hermiticity_residual() / scale
    }
}

/// Ascending `|Re λ|`; within runs whose consecutive `|Re λ|` differ by at
/// most `tie`, ascending `|Im λ|` with `Im λ ≥ 0` first.
fn sort_order(values: &[C64], tie: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].re.abs().total_cmp(&values[b].re.abs()));
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && values[order[end]].re.abs() - values[order[end - 1]].re.abs() <= tie
        {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| {
            let (za, zb) = (values[a], values[b]);
            za.im
                .abs()
                .total_cmp(&zb.im.abs())
                .then_with(|| (za.im < 0.0).cmp(&(zb.im < 0.0)))
        });
        start = end;
    }
    order
}

fn conjugate_closed(values: &[C64], tol_imag: f64, tol_match: f64) -> bool {
    values.iter().all(|z| {
        z.im.abs() <= tol_imag || values.iter().any(|w| (w - z.conj()).norm() <= tol_match)
    })
}

fn left_mode_of(left_t: &ComplexMatrix, k: usize) -> ComplexMatrix {
    unvec(left_t.column(k))
        .expect("square by construction")
        .transpose()
}

fn set_left_mode(left_t: &mut ComplexMatrix, k: usize, ell: &ComplexMatrix) {
    left_t
        .column_mut(k)
        .copy_from_slice(ell.transpose().as_slice());
}

/// `ℓ_k <- ℓ_k · left`, `r_k <- r_k · right` (callers keep `left · right = 1`).
fn scale_pair(right: &mut ComplexMatrix, left_t: &mut ComplexMatrix, k: usize, right_s: C64, left_s: C64) {
    for x in right.column_mut(k) {
        *x *= right_s;
    }
    for x in left_t.column_mut(k) {
        *x *= left_s;
    }
}

/// Inverse iteration on `m` and `mᵀ` with a shift just off `lambda`,
/// starting from the given vectors. Returns the unit right vector, the left
/// vector scaled so `wᵀx = 1`, and the Rayleigh quotient.
fn refine_mode(
    m: &ComplexMatrix,
    lambda: C64,
    right0: &[C64],
    left0: &[C64],
) -> Result<(Vec<C64>, Vec<C64>, C64)> {
    let n = m.nrows();
    let mut delta = 1e-9 * m.max_abs();
    let lu = loop {
        let mut shifted = m.clone();
        let sigma = lambda + delta;
        for i in 0..n {
            shifted[(i, i)] -= sigma;
        }
        match Lu::new(&shifted) {
            Ok(lu) => break lu,
            Err(Error::Singular { .. }) if delta < 1e-5 * m.max_abs() => delta *= 10.0,
            Err(e) => return Err(e),
        }
    };
    let mut x = right0.to_vec();
    let mut w = left0.to_vec();
    for _ in 0..REFINE_ITERATIONS {
        lu.solve_in_place(&mut x)?;
        let nx = vector_norm(&x);
        x.iter_mut().for_each(|z| *z /= nx);
        lu.solve_transpose_in_place(&mut w)?;
        let nw = vector_norm(&w);
        w.iter_mut().for_each(|z| *z /= nw);
    }
    let pair = dotu(&w, &x);
    if pair == ZERO || !pair.is_finite() {
        return Err(Error::IllConditionedBasis {
            condition: f64::INFINITY,
        });
    }
    w.iter_mut().for_each(|z| *z /= pair);
    let mx = m.matvec(&x)?;
    let rayleigh = dotu(&w, &mx);
    Ok((x, w, rayleigh))
}

/// Newton–Schulz steps `W ← W + (1 - WV) W` on the left basis, stopped once
/// they no longer halve the residual. Each step squares the residual until it
/// reaches the rounding floor of roughly `ε` times the largest per-mode
/// condition number `||ℓ_k|| ||r_k||`. Returns the last measured residual.
fn refine_left_basis(right: &ComplexMatrix, left_t: &mut ComplexMatrix) -> Result<f64> {
    let n = right.ncols();
    let right_t = right.transpose();
    let mut previous = f64::INFINITY;
    let mut saved = None;
    for step in 0..=BASIS_ITERATIONS {
        // gram_t[h, k] = Tr(ℓ_k r_h)
        let mut gram_t = right_t.matmul(left_t)?;
        for i in 0..n {
            gram_t[(i, i)] -= ONE;
        }
        let residual = gram_t.max_abs();
        if residual >= previous {
            if let Some(s) = saved {
                *left_t = s;
            }
            return Ok(previous);
        }
        if residual > 0.5 * previous || step == BASIS_ITERATIONS || residual == 0.0 {
            return Ok(residual);
        }
        let correction = left_t.matmul(&gram_t)?;
        saved = Some(left_t.clone());
        for (w, c) in left_t.as_mut_slice().iter_mut().zip(correction.as_slice()) {
            *w -= c;
        }
        previous = residual;
    }
    Ok(previous)
}

/// Entry of largest modulus among `entries`, the first one within a relative
/// `1e-10` of the maximum.
fn pivot_entry(entries: impl Iterator<Item = C64> + Clone) -> Option<C64> {
    let max = entries.clone().fold(0.0_f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return None;
    }
    entries.into_iter().find(|z| z.norm() >= max * (1.0 - 1e-10))
}

fn normalize_mode(right: &mut ComplexMatrix, left_t: &mut ComplexMatrix, k: usize, real: bool) {
    let norm = vector_norm(right.column(k));
    if norm > 0.0 {
        scale_pair(right, left_t, k, C64::new(1.0 / norm, 0.0), C64::new(norm, 0.0));
    }
    let ell = left_mode_of(left_t, k);
    let d = ell.nrows();

    let mut phase = None;
    if real {
        // ℓ = e^{iθ} H with H Hermitian gives Tr(ℓ²) = e^{2iθ} ||H||².
        let tr_sq = (&ell * &ell).trace().expect("square");
        if tr_sq.norm() > 1e-8 * ell.frobenius_norm().powi(2) {
            let unphase = C64::from_polar(1.0, -0.5 * tr_sq.arg());
            let upper = (0..d).flat_map(|j| (0..=j).map(move |i| (i, j)));
            let pivot = pivot_entry(upper.map(|(i, j)| ell[(i, j)] * unphase))
                .expect("nonzero left mode");
            let flip = if pivot.re.abs() >= pivot.im.abs() {
                pivot.re < 0.0
            } else {
                pivot.im < 0.0
            };
            phase = Some(if flip { -unphase } else { unphase });
        }
    }
    let z = phase.unwrap_or_else(|| match pivot_entry(ell.as_slice().iter().copied()) {
        Some(p) => p.conj() / p.norm(),
        None => ONE,
    });
    scale_pair(right, left_t, k, z.conj(), z);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{
        all_to_all_model, amplitude_damping_model, dicke_model, AllToAllParams, DecayNormalization,
        DickeParams,
    };
    use crate::superop::build_liouvillian;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sort_order_rules() {
        let values = vec![c(-1.0, 0.0), c(-0.5, -2.0), c(0.0, 0.0), c(-0.5, 2.0), c(-0.5, 0.0)];
        let order = sort_order(&values, 1e-12);
        let sorted: Vec<C64> = order.iter().map(|&p| values[p]).collect();
        assert_eq!(
            sorted,
            vec![c(0.0, 0.0), c(-0.5, 0.0), c(-0.5, 2.0), c(-0.5, -2.0), c(-1.0, 0.0)]
        );
    }

    #[test]
    fn amplitude_damping_is_degenerate() {
        let l = build_liouvillian(&amplitude_damping_model(1.0).unwrap());
        let dec = analyze(&l, &SpectralTolerances::default()).unwrap();
        let want = [0.0, -0.5, -0.5, -1.0];
        for (z, w) in dec.eigenvalues().iter().zip(want) {
            assert!((z - c(w, 0.0)).norm() < 1e-12);
        }
        let ground = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(dec.stationary_state().max_abs_diff(&ground) < 1e-12);
        assert!(!dec.diagnostics().flags.slow_mode_isolated);
        assert!(matches!(
            decompose(&l, &SpectralTolerances::default()),
            Err(Error::DegenerateSlowMode { .. })
        ));
    }

    #[test]
    fn left_stationary_mode_is_identity() {
        let l = build_liouvillian(&amplitude_damping_model(0.3).unwrap());
        let dec = analyze(&l, &SpectralTolerances::default()).unwrap();
        assert!(dec.left_mode(0).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        assert!((dec.stationary_state().trace().unwrap() - ONE).norm() < 1e-12);
        assert!(dec.biorthogonality_residual() < 1e-12);
    }

    #[test]
    fn hermitize_thresholds() {
        let h = ComplexMatrix::from_rows(&[[c(1.0, 0.0), c(0.5, 0.5)], [c(0.5, -0.5), c(-1.0, 0.0)]])
            .unwrap();
        assert_eq!(hermitize(&h).unwrap(), h);

        let mut small = h.clone();
        small[(0, 1)] += c(1e-9, 0.0);
        let out = hermitize(&small).unwrap();
        assert_eq!(out.hermiticity_residual(), 0.0);

        let mut large = h.clone();
        large[(0, 1)] += c(1e-3, 0.0);
        assert!(matches!(hermitize(&large), Err(Error::NotHermitianSlowMode { .. })));
    }

    fn check_small_model(l: &Superoperator) {
        let dec = decompose(l, &SpectralTolerances::default()).unwrap();
        let d = dec.dim();
        assert!(dec.biorthogonality_residual() <= 1e-8);
        assert!(dec.eigen_residual(l) <= 1e-8 * l.matrix().max_abs());
        assert!(dec.diagnostics().conjugate_closed);
        assert!(dec.diagnostics().stationary_min_eigenvalue >= -1e-10);
        assert!(dec.diagnostics().identity_residual <= 1e-8, "{}", dec.diagnostics().identity_residual);
        assert!(dec.diagnostics().max_real_part <= 1e-9 * dec.diagnostics().max_abs_eigenvalue);
        assert!(l.apply(dec.stationary_state()).unwrap().max_abs() <= 1e-9 * l.matrix().max_abs());
        // slow modes are Hermitian and r_k has unit norm
        assert_eq!(dec.left_mode(1).hermiticity_residual(), 0.0);
        assert_eq!(dec.right_mode(1).hermiticity_residual(), 0.0);
        assert!((dec.right_mode(1).frobenius_norm() - 1.0).abs() < 1e-8);
        // ordering
        let re: Vec<f64> = dec.eigenvalues().iter().map(|z| z.re.abs()).collect();
        assert!(re.windows(2).all(|w| w[0] <= w[1] + dec.diagnostics().tol_gap));
        // overlaps and completeness
        let psi = crate::spin::random_pure_state(d - 1, 3).unwrap();
        let rho = ComplexMatrix::outer(&psi, &psi);
        let ov = dec.mode_overlaps(&rho).unwrap();
        assert!((ov[0] - ONE).norm() < 1e-10);
        assert!(dec.synthesize(&ov).unwrap().max_abs_diff(&rho) < 1e-8);
        let ov_ss = dec.mode_overlaps(dec.stationary_state()).unwrap();
        assert!((ov_ss[0] - ONE).norm() < 1e-8);
        assert!(ov_ss[1..].iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn dicke_small_instances() {
        for n in [2, 4, 8] {
            let model = dicke_model(&DickeParams::default(), n).unwrap();
            check_small_model(&build_liouvillian(&model));
        }
    }

    #[test]
    fn all_to_all_small_instances() {
        let p = AllToAllParams {
            decay: DecayNormalization::PerSpin,
            ..Default::default()
        };
        // N = 2 has a complex slowest pair
        for n in [4, 6, 8] {
            let model = all_to_all_model(&p, n).unwrap();
            check_small_model(&build_liouvillian(&model));
        }
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let model = amplitude_damping_model(1.0).unwrap();
        let adj = crate::superop::build_adjoint_liouvillian(&model);
        assert!(matches!(
            analyze(&adj, &SpectralTolerances::default()),
            Err(Error::WrongSuperoperatorKind { .. })
        ));
    }
}
