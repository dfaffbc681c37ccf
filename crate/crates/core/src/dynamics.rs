//! Time evolution through the mode expansion, a direct Runge–Kutta oracle,
//! Hilbert–Schmidt distances to the stationary state, and log-linear decay
//! fits.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, C64, ONE};
use crate::spectral::SpectralDecomposition;
use crate::superop::{unvec, LindbladModel};

/// Largest allowed `h · scale` for the Runge–Kutta integrator, where `scale`
/// bounds the generator norm (see [`generator_scale`]).
pub const RK4_STABILITY_BOUND: f64 = 0.05;

/// Minimum `R²` of a decay fit before it is flagged as poor.
pub const POOR_FIT_R2: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Logarithmic,
    Custom,
}

impl Spacing {
    pub fn name(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Logarithmic => "logarithmic",
            Spacing::Custom => "custom",
        }
    }
}

/// Strictly increasing, non-negative sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    spacing: Spacing,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTimeGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidTimeGrid("non-finite time".into()));
        }
        if points[0] < 0.0 {
            return Err(Error::InvalidTimeGrid(format!("negative start {}", points[0])));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTimeGrid(format!(
                "not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { points, spacing })
    }

    /// `count` equally spaced points from `start` to `end` inclusive.
    pub fn linear(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidTimeGrid(format!("need at least 2 points, got {count}")));
        }
        let step = (end - start) / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|k| start + step * k as f64).collect();
        points[count - 1] = end;
        Self::new(points, Spacing::Linear)
    }

    /// `count` geometrically spaced points from `start > 0` to `end`,
    /// preceded by `t = 0` when `with_zero` is set.
    pub fn logarithmic(start: f64, end: f64, count: usize, with_zero: bool) -> Result<Self> {
        if !(start > 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "logarithmic grid needs a positive start, got {start}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidTimeGrid(format!("need at least 2 points, got {count}")));
        }
        let ratio = (end / start).ln() / (count - 1) as f64;
        let mut points: Vec<f64> = Vec::with_capacity(count + 1);
        if with_zero {
            points.push(0.0);
        }
        points.extend((0..count).map(|k| start * (ratio * k as f64).exp()));
        let last = points.len() - 1;
        points[last] = end;
        Self::new(points, Spacing::Logarithmic)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

/// `ρ_t = Σ_k e^{λ_k t} c_k r_k` with `c_k ≈ Tr(ℓ_k ρ_0)` computed once.
#[derive(Debug, Clone)]
pub struct SpectralPropagator<'a> {
    dec: &'a SpectralDecomposition,
    rho0: ComplexMatrix,
    coefficients: Vec<C64>,
}

impl<'a> SpectralPropagator<'a> {
    pub fn new(dec: &'a SpectralDecomposition, rho0: &ComplexMatrix) -> Result<Self> {
        let coefficients = dec.expansion_coefficients(rho0)?;
        Ok(Self {
            dec,
            rho0: rho0.clone(),
            coefficients,
        })
    }

    /// See [`SpectralDecomposition::expansion_coefficients`].
    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    /// The state at time `t ≥ 0`. At `t = 0` the propagator is the identity
    /// and `ρ_0` is returned unchanged. Otherwise the sum is Hermitized,
    /// which is the same as Hermitizing every conjugate-pair partial sum.
    pub fn at(&self, t: f64) -> Result<ComplexMatrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidTimeGrid(format!("time {t} must be finite and non-negative")));
        }
        if t == 0.0 {
            return Ok(self.rho0.clone());
        }
        let weights: Vec<C64> = self
            .coefficients
            .iter()
            .zip(self.dec.eigenvalues())
            .map(|(&c, &l)| mode_weight(c, l, t))
            .collect();
        unvec(&self.dec.right_matrix().matvec(&weights)?)?.hermitian_part()
    }

    /// [`Self::at`] for many times, batched into matrix products.
    pub fn at_many(&self, times: &[f64]) -> Result<Vec<ComplexMatrix>> {
        let n = self.coefficients.len();
        let mut out = Vec::with_capacity(times.len());
        for chunk in times.chunks(BATCH) {
            let positive: Vec<f64> = chunk.iter().copied().filter(|&t| t != 0.0).collect();
            for &t in &positive {
                if !(t > 0.0) || !t.is_finite() {
                    return Err(Error::InvalidTimeGrid(format!("time {t} must be finite and non-negative")));
                }
            }
            let weights = ComplexMatrix::from_fn(n, positive.len(), |k, j| {
                mode_weight(self.coefficients[k], self.dec.eigenvalues()[k], positive[j])
            });
            let states = self.dec.right_matrix().matmul(&weights)?;
            let mut j = 0;
            for &t in chunk {
                if t == 0.0 {
                    out.push(self.rho0.clone());
                } else {
                    out.push(unvec(states.column(j))?.hermitian_part()?);
                    j += 1;
                }
            }
        }
        Ok(out)
    }
}

const BATCH: usize = 256;

/// Mode weights below this are dropped; they would otherwise turn into
/// subnormal numbers, which are slow, without changing any result.
const NEGLIGIBLE_WEIGHT: f64 = 1e-200;

fn mode_weight(c: C64, lambda: C64, t: f64) -> C64 {
    let w = c * (lambda * t).exp();
    if w.norm() < NEGLIGIBLE_WEIGHT {
        C64::new(0.0, 0.0)
    } else {
        w
    }
}

/// One-shot [`SpectralPropagator::at`].
pub fn evolve_spectral(dec: &SpectralDecomposition, rho0: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    SpectralPropagator::new(dec, rho0)?.at(t)
}

/// `√Tr[(ρ - σ)†(ρ - σ)]`, the Frobenius norm of the difference.
pub fn hs_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::ShapeMismatch {
            op: "hs_distance",
            left: rho.shape(),
            right: sigma.shape(),
        });
    }
    Ok(rho
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `2||H||_2 + 2 Σ ||L_μ||_2²`, an upper bound on the generator's norm.
pub fn generator_scale(model: &LindbladModel) -> Result<f64> {
    let h = hermitian_eig(model.hamiltonian())?;
    let h_norm = h.eigenvalues.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let mut jumps = 0.0;
    for l in model.jumps() {
        let gram = l.adjoint().matmul(l)?.hermitian_part()?;
        jumps += hermitian_eig(&gram)?.eigenvalues.iter().fold(0.0_f64, |m, &w| m.max(w));
    }
    Ok(2.0 * h_norm + 2.0 * jumps)
}

/// Largest step allowed by [`RK4_STABILITY_BOUND`].
pub fn max_stable_step(model: &LindbladModel) -> Result<f64> {
    let scale = generator_scale(model)?;
    Ok(if scale > 0.0 {
        RK4_STABILITY_BOUND / scale
    } else {
        f64::INFINITY
    })
}

/// Classical fixed-step RK4 on `dρ/dt = L[ρ]`, applying the generator with
/// matrix products. Each grid interval is split into the fewest equal steps
/// not exceeding [`max_stable_step`]. Returns the state at every grid point.
pub fn evolve_integrator(model: &LindbladModel, rho0: &ComplexMatrix, grid: &TimeGrid) -> Result<Vec<ComplexMatrix>> {
    let step = max_stable_step(model)?;
    evolve_integrator_with_step(model, rho0, grid, step)
}

/// [`evolve_integrator`] with an explicit maximum step, which must respect
/// the stability bound.
pub fn evolve_integrator_with_step(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    grid: &TimeGrid,
    max_step: f64,
) -> Result<Vec<ComplexMatrix>> {
    let bound = max_stable_step(model)?;
    if !(max_step > 0.0) || max_step > bound {
        return Err(Error::StepTooLarge { step: max_step, bound });
    }
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &target in grid.points() {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / max_step).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                rho = rk4_step(model, &rho, h)?;
            }
        }
        t = target;
        out.push(rho.clone());
    }
    Ok(out)
}

fn rk4_step(model: &LindbladModel, rho: &ComplexMatrix, h: f64) -> Result<ComplexMatrix> {
    let k1 = model.apply(rho)?;
    let k2 = model.apply(&(rho + &(&k1 * (0.5 * h))))?;
    let k3 = model.apply(&(rho + &(&k2 * (0.5 * h))))?;
    let k4 = model.apply(&(rho + &(&k3 * h)))?;
    let mut incr = &k1 + &k4;
    incr = &incr + &(&(&k2 + &k3) * 2.0);
    Ok(rho + &(&incr * (h / 6.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Spectral,
    Integrator,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Spectral => "spectral",
            Source::Integrator => "integrator",
        }
    }
}

/// Least-squares fit of `ln E_t = intercept + slope · t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// `|slope|`.
    pub rate: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual of `ln E_t`.
    pub rms_residual: f64,
    pub window_hi: f64,
    pub window_lo: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
    /// `R² < POOR_FIT_R2`. Reported, not fatal.
    pub poor_fit: bool,
}

/// Distance to the stationary state and slow-mode overlap along a grid.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `E_t = ||ρ_t - ρ_ss||_HS`.
    pub distances: Vec<f64>,
    /// `Tr(ℓ_1 ρ_t)`.
    pub slow_overlaps: Vec<C64>,
    pub source: Source,
}

impl TrajectoryRecord {
    fn from_states(dec: &SpectralDecomposition, grid: &TimeGrid, states: &[ComplexMatrix], source: Source) -> Result<Self> {
        let stationary = dec.stationary_state();
        let ell = dec.left_transposed_matrix().column(1);
        let mut distances = Vec::with_capacity(states.len());
        let mut slow_overlaps = Vec::with_capacity(states.len());
        for rho in states {
            distances.push(hs_distance(rho, stationary)?);
            slow_overlaps.push(ell.iter().zip(rho.as_slice()).map(|(a, b)| a * b).sum());
        }
        Ok(Self {
            times: grid.points().to_vec(),
            distances,
            slow_overlaps,
            source,
        })
    }

    /// Fits the decay rate over `window = (E_hi, E_lo)`.
    pub fn fit(&self, window: (f64, f64)) -> Result<DecayFit> {
        fit_decay_rate(&self.times, &self.distances, window)
    }
}

/// Trajectory from the mode expansion. `dec` must have at least two modes.
pub fn spectral_trajectory(dec: &SpectralDecomposition, rho0: &ComplexMatrix, grid: &TimeGrid) -> Result<TrajectoryRecord> {
    if dec.num_modes() < 2 {
        return Err(Error::TooFewModes {
            modes: dec.num_modes(),
        });
    }
    let states = SpectralPropagator::new(dec, rho0)?.at_many(grid.points())?;
    TrajectoryRecord::from_states(dec, grid, &states, Source::Spectral)
}

/// Trajectory from [`evolve_integrator`], measured against the stationary
/// state and slow mode of `dec`.
pub fn integrator_trajectory(
    model: &LindbladModel,
    dec: &SpectralDecomposition,
    rho0: &ComplexMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let states = evolve_integrator(model, rho0, grid)?;
    TrajectoryRecord::from_states(dec, grid, &states, Source::Integrator)
}

/// Slope of `ln E_t` over the samples with `E_lo ≤ E_t ≤ E_hi`.
///
/// When the samples inside the window form several contiguous runs, the
/// last run with at least two points is used, since it is the one closest to
/// the asymptotic regime.
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (hi, lo) = window;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParameter {
            name: "fit_window",
            value: if lo > 0.0 { hi } else { lo },
        });
    }
    if times.len() != values.len() {
        return Err(Error::ShapeMismatch {
            op: "fit_decay_rate",
            left: (times.len(), 1),
            right: (values.len(), 1),
        });
    }
    let inside = |v: f64| v >= lo && v <= hi;
    let mut run: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < values.len() {
        if inside(values[i]) {
            let start = i;
            while i < values.len() && inside(values[i]) {
                i += 1;
            }
            if i - start >= 2 {
                run = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    let (start, end) = run.ok_or(Error::WindowEmpty { hi, lo })?;
    let ts = &times[start..end];
    let ys: Vec<f64> = values[start..end].iter().map(|v| v.ln()).collect();
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, y) in ts.iter().zip(&ys) {
        let (dt, dy) = (t - t_mean, y - y_mean);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let ss_res: f64 = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(DecayFit {
        rate: slope.abs(),
        slope,
        intercept,
        r_squared,
        rms_residual: (ss_res / n).sqrt(),
        window_hi: hi,
        window_lo: lo,
        t_start: ts[0],
        t_end: ts[ts.len() - 1],
        points: ts.len(),
        poor_fit: r_squared < POOR_FIT_R2,
    })
}

/// A stretch of grid points on which a positive signal is nearly constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub start: usize,
    /// Inclusive; the first grid point at least `span` after `start`.
    pub end: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// `(max - min) / max` of the values in `start..=end`.
    pub relative_variation: f64,
}

/// Earliest window `[t_i, t_j]` with `t_j - t_i ≥ span` whose relative
/// variation is below `max_variation` and which `accept` approves.
pub fn find_plateau(
    times: &[f64],
    values: &[f64],
    span: f64,
    max_variation: f64,
    mut accept: impl FnMut(&Plateau) -> bool,
) -> Option<Plateau> {
    let n = times.len().min(values.len());
    let mut end = 0;
    for start in 0..n {
        end = end.max(start);
        while end < n && times[end] - times[start] < span {
            end += 1;
        }
        if end >= n {
            return None;
        }
        let window = &values[start..=end];
        let max = window.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let min = window.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if !(max > 0.0) {
            continue;
        }
        let plateau = Plateau {
            start,
            end,
            t_start: times[start],
            t_end: times[end],
            relative_variation: (max - min) / max,
        };
        if plateau.relative_variation < max_variation && accept(&plateau) {
            return Some(plateau);
        }
    }
    None
}

/// `max |Tr ρ - 1|` and `max ||ρ - ρ†||_max` over a list of states.
pub fn trace_and_hermiticity_drift(states: &[ComplexMatrix]) -> Result<(f64, f64)> {
    let mut trace = 0.0_f64;
    let mut herm = 0.0_f64;
    for rho in states {
        trace = trace.max((rho.trace()? - ONE).norm());
        herm = herm.max(rho.hermiticity_residual());
    }
    Ok((trace, herm))
}
