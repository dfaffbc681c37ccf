//! Collective spin operators in the maximal symmetric sector and the
//! models built from them.
//!
//! The basis is `|j, m⟩` with `j = N/2`, ordered by descending `m`: index
//! `p` holds `m = j - p`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I};
use crate::superop::LindbladModel;

#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub n: usize,
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
    pub sminus: ComplexMatrix,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `m` values of the basis, descending.
    pub fn m_values(&self) -> Vec<f64> {
        let j = self.n as f64 / 2.0;
        (0..=self.n).map(|p| j - p as f64).collect()
    }

    pub fn splus(&self) -> ComplexMatrix {
        self.sminus.adjoint()
    }
}

pub fn spin_operators(n: usize) -> Result<SpinOperators> {
    if n == 0 {
        return Err(Error::InvalidSpinCount(n));
    }
    let dim = n + 1;
    let j = n as f64 / 2.0;
    let mut splus = ComplexMatrix::zeros(dim, dim);
    for p in 1..dim {
        let m = j - p as f64;
        splus[(p - 1, p)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus).scale_real(0.5);
    let sy = &(&splus - &sminus) * (-0.5 * I);
    let sz = ComplexMatrix::from_real_diagonal(&(0..dim).map(|p| j - p as f64).collect::<Vec<_>>());
    Ok(SpinOperators {
        n,
        sx,
        sy,
        sz,
        sminus,
    })
}

fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

/// Parameters of the spin-only Dicke model obtained by eliminating a lossy
/// cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DickeParams {
    /// Spin precession frequency `Ω`.
    pub omega: f64,
    /// Cavity frequency `ω`.
    pub cavity_omega: f64,
    /// Spin–cavity coupling `g`.
    pub g: f64,
    /// Cavity loss rate `κ`.
    pub kappa: f64,
}

impl Default for DickeParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            cavity_omega: 1.0,
            g: 1.0,
            kappa: 1.0,
        }
    }
}

impl DickeParams {
    pub fn validate(&self) -> Result<()> {
        require_finite("omega", self.omega)?;
        require_finite("cavity_omega", self.cavity_omega)?;
        require_finite("g", self.g)?;
        require_positive("kappa", self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticCoefficients {
    /// Coefficient of `-Sx²/N` in the effective Hamiltonian.
    pub chi: f64,
    /// Coefficient of `Sx/√N` in the effective jump operator.
    pub gamma_prefactor: f64,
}

/// `chi = 4ωg²/(4ω² + κ²)` and `2|g|√κ/√(4ω² + κ²)`.
pub fn adiabatic_coefficients(p: &DickeParams) -> Result<AdiabaticCoefficients> {
    let denom = 4.0 * p.cavity_omega * p.cavity_omega + p.kappa * p.kappa;
    if !denom.is_finite() || denom == 0.0 {
        return Err(Error::DegenerateDenominator(denom));
    }
    if p.kappa < 0.0 {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: p.kappa,
        });
    }
    Ok(AdiabaticCoefficients {
        chi: 4.0 * p.cavity_omega * p.g * p.g / denom,
        gamma_prefactor: 2.0 * p.g.abs() * p.kappa.sqrt() / denom.sqrt(),
    })
}

/// `H = Ω Sz - chi Sx²/N`, single jump `gamma_prefactor · Sx/√N`.
pub fn dicke_model(p: &DickeParams, n: usize) -> Result<LindbladModel> {
    p.validate()?;
    let coeffs = adiabatic_coefficients(p)?;
    let s = spin_operators(n)?;
    let nf = n as f64;
    let sx2 = &s.sx * &s.sx;
    let h = &s.sz.scale_real(p.omega) - &sx2.scale_real(coeffs.chi / nf);
    let jump = s.sx.scale_real(coeffs.gamma_prefactor / nf.sqrt());
    LindbladModel::new(h, vec![jump], format!("dicke N={n}"))
}

/// Parameters of the driven, dissipative all-to-all interacting spin model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllToAllParams {
    /// Drive strength `Ω`.
    pub omega: f64,
    /// Detuning `Δ`.
    pub delta: f64,
    /// Interaction strength `V`.
    pub interaction: f64,
    /// Collective decay rate `κ`.
    pub kappa: f64,
    pub decay: DecayNormalization,
}

/// Scaling of the collective jump operator `S₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecayNormalization {
    /// `L = √κ S₋`.
    #[default]
    Collective,
    /// `L = √(κ/N) S₋`, matching the `1/N` scaling of the interaction so the
    /// model has a well-defined large-`N` limit.
    PerSpin,
}

impl DecayNormalization {
    pub fn name(self) -> &'static str {
        match self {
            Self::Collective => "collective",
            Self::PerSpin => "per-spin",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "collective" => Some(Self::Collective),
            "per-spin" => Some(Self::PerSpin),
            _ => None,
        }
    }
}

impl Default for AllToAllParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            delta: -1.0,
            interaction: 3.0,
            kappa: 1.0,
            decay: DecayNormalization::Collective,
        }
    }
}

impl AllToAllParams {
    pub fn validate(&self) -> Result<()> {
        require_finite("omega", self.omega)?;
        require_finite("delta", self.delta)?;
        require_finite("interaction", self.interaction)?;
        require_positive("kappa", self.kappa)
    }
}

/// `H = Ω Sx - Δ Sz + V Sz²/N`, single jump `√κ S₋` or `√(κ/N) S₋`.
pub fn all_to_all_model(p: &AllToAllParams, n: usize) -> Result<LindbladModel> {
    p.validate()?;
    let s = spin_operators(n)?;
    let sz2 = &s.sz * &s.sz;
    let h = &(&s.sx.scale_real(p.omega) - &s.sz.scale_real(p.delta))
        + &sz2.scale_real(p.interaction / n as f64);
    let rate = match p.decay {
        DecayNormalization::Collective => p.kappa,
        DecayNormalization::PerSpin => p.kappa / n as f64,
    };
    let jump = s.sminus.scale_real(rate.sqrt());
    LindbladModel::new(h, vec![jump], format!("all-to-all N={n}"))
}

/// A single decaying qubit: `H = 0`, `L = √κ σ₋` with `σ₋ = |0⟩⟨1|` and `|1⟩`
/// the excited level. This is the `N = 1` collective decay model.
pub fn amplitude_damping_model(kappa: f64) -> Result<LindbladModel> {
    require_positive("kappa", kappa)?;
    let lower = ComplexMatrix::from_real_rows(&[[0.0, 1.0], [0.0, 0.0]])?;
    LindbladModel::new(
        ComplexMatrix::zeros(2, 2),
        vec![lower.scale_real(kappa.sqrt())],
        "amplitude damping",
    )
}

/// Uniform draw on `[0, 1)` with 53 random bits.
fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `ψ ∝ Σ_m (a_m + i b_m)|m⟩` with `a_m, b_m` uniform on `[0, 1)`.
///
/// The generator is ChaCha8 seeded through `seed_from_u64`; for each basis
/// index in descending-`m` order `a_m` is drawn before `b_m`.
pub fn random_pure_state(n: usize, seed: u64) -> Result<Vec<C64>> {
    if n == 0 {
        return Err(Error::InvalidSpinCount(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi: Vec<C64> = (0..=n)
        .map(|_| {
            let a = unit_uniform(&mut rng);
            let b = unit_uniform(&mut rng);
            C64::new(a, b)
        })
        .collect();
    let norm = crate::linalg::vector_norm(&psi);
    for z in &mut psi {
        *z /= norm;
    }
    Ok(psi)
}

/// `|ψ⟩⟨ψ|`.
pub fn pure_density(psi: &[C64]) -> ComplexMatrix {
    ComplexMatrix::outer(psi, psi)
}
