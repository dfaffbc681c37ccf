//! Lindblad generators as dense matrices on vectorized operators.
//!
//! Vectorization is column stacking throughout: component `i + j d` of
//! `vec(X)` is `X[i, j]`, which is exactly the storage order of
//! [`ComplexMatrix`]. In this convention `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I, ONE};

/// Relative Hermiticity tolerance for Hamiltonians.
pub const HAMILTONIAN_HERMITIAN_TOL: f64 = 1e-12;

/// A Hamiltonian plus jump operators, each carrying the square root of its
/// rate.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    jumps: Vec<ComplexMatrix>,
    /// `Σ L†L`, cached for the direct application path.
    decay: ComplexMatrix,
    label: String,
}

impl LindbladModel {
    pub fn new(
        hamiltonian: ComplexMatrix,
        jumps: Vec<ComplexMatrix>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let d = hamiltonian.ensure_square("lindblad_model")?;
        let residual = hamiltonian.hermiticity_residual();
        let bound = HAMILTONIAN_HERMITIAN_TOL * hamiltonian.max_abs();
        if residual > bound {
            return Err(Error::NotHermitian { residual, bound });
        }
        let mut decay = ComplexMatrix::zeros(d, d);
        for jump in &jumps {
            if jump.shape() != (d, d) {
                return Err(Error::ShapeMismatch {
                    op: "lindblad_model",
                    left: (d, d),
                    right: jump.shape(),
                });
            }
            decay = &decay + &(&jump.adjoint() * jump);
        }
        Ok(Self {
            hamiltonian,
            jumps,
            decay,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[ComplexMatrix] {
        &self.jumps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `L[ρ] = -i[H, ρ] + Σ (L ρ L† - ½{L†L, ρ})`, evaluated with matrix
    /// products only.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(rho)?;
        // -i(H_eff ρ - ρ H_eff†) with H_eff = H - (i/2) Σ L†L
        let h_eff = &self.hamiltonian - &(&self.decay * (0.5 * I));
        let left = &h_eff * rho;
        let right = rho * &h_eff.adjoint();
        let mut out = &(&left - &right) * (-I);
        for jump in &self.jumps {
            out = &out + &(&(jump * rho) * &jump.adjoint());
        }
        Ok(out)
    }

    /// `L⁺[O] = i[H, O] + Σ (L† O L - ½{O, L†L})`.
    pub fn apply_adjoint(&self, o: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operand(o)?;
        let comm = o.commutator(&self.hamiltonian)?;
        let mut out = &(&comm * (-I)) - &(&o.anticommutator(&self.decay)? * 0.5);
        for jump in &self.jumps {
            out = &out + &(&(&jump.adjoint() * o) * jump);
        }
        Ok(out)
    }

    fn check_operand(&self, x: &ComplexMatrix) -> Result<()> {
        let d = self.dim();
        if x.shape() != (d, d) {
            return Err(Error::ShapeMismatch {
                op: "lindblad_apply",
                left: (d, d),
                right: x.shape(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectorization {
    ColumnStacking,
}

impl Vectorization {
    pub fn tag(self) -> &'static str {
        match self {
            Vectorization::ColumnStacking => "column-stacking",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperoperatorKind {
    Generator,
    Adjoint,
}

impl SuperoperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            SuperoperatorKind::Generator => "generator",
            SuperoperatorKind::Adjoint => "adjoint-generator",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Superoperator {
    matrix: ComplexMatrix,
    convention: Vectorization,
    kind: SuperoperatorKind,
    dim: usize,
}

impl Superoperator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn convention(&self) -> Vectorization {
        self.convention
    }

    pub fn kind(&self) -> SuperoperatorKind {
        self.kind
    }

    /// Hilbert-space dimension `d`; the matrix is `d² × d²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ensure_convention(&self, expected: Vectorization) -> Result<()> {
        if self.convention != expected {
            return Err(Error::ConventionMismatch {
                expected: expected.tag(),
                found: self.convention.tag(),
            });
        }
        Ok(())
    }

    pub fn ensure_kind(&self, expected: SuperoperatorKind) -> Result<()> {
        if self.kind != expected {
            return Err(Error::WrongSuperoperatorKind {
                expected: expected.name(),
            });
        }
        Ok(())
    }

    /// `unvec(matrix · vec(x))`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let v = self.matrix.matvec(&vec(x)?)?;
        unvec(&v)
    }
}

pub fn vec(x: &ComplexMatrix) -> Result<Vec<C64>> {
    x.ensure_square("vec")?;
    Ok(x.as_slice().to_vec())
}

pub fn unvec(v: &[C64]) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d == 0 || d * d != v.len() {
        return Err(Error::ShapeMismatch {
            op: "unvec",
            left: (v.len(), 1),
            right: (d, d),
        });
    }
    ComplexMatrix::from_col_major(d, d, v.to_vec())
}

/// Adds `c · (Bᵀ ⊗ A)` to `out`, i.e. the map `X ↦ c A X B`.
fn add_sandwich(out: &mut ComplexMatrix, c: C64, a: &ComplexMatrix, b: &ComplexMatrix) {
    let d = a.nrows();
    for l in 0..d {
        for k in 0..d {
            let col = out.column_mut(k + l * d);
            for j in 0..d {
                let blj = b[(l, j)];
                if blj == C64::new(0.0, 0.0) {
                    continue;
                }
                let cb = c * blj;
                for i in 0..d {
                    let aik = a[(i, k)];
                    if aik != C64::new(0.0, 0.0) {
                        col[i + j * d] += cb * aik;
                    }
                }
            }
        }
    }
}

/// Generator `L̂` with `vec(L[ρ]) = L̂ vec(ρ)`:
/// `-i(1⊗H - Hᵀ⊗1) + Σ (L̄⊗L - ½ 1⊗L†L - ½ (L†L)ᵀ⊗1)`.
pub fn build_liouvillian(model: &LindbladModel) -> Superoperator {
    let d = model.dim();
    let id = ComplexMatrix::identity(d);
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    add_sandwich(&mut m, -I, &model.hamiltonian, &id);
    add_sandwich(&mut m, I, &id, &model.hamiltonian);
    for jump in &model.jumps {
        add_sandwich(&mut m, ONE, jump, &jump.adjoint());
    }
    add_sandwich(&mut m, C64::new(-0.5, 0.0), &model.decay, &id);
    add_sandwich(&mut m, C64::new(-0.5, 0.0), &id, &model.decay);
    Superoperator {
        matrix: m,
        convention: Vectorization::ColumnStacking,
        kind: SuperoperatorKind::Generator,
        dim: d,
    }
}

/// Matrix of the adjoint map `L⁺`, the Hilbert–Schmidt adjoint of the
/// generator (so it equals the conjugate transpose of `L̂`).
pub fn build_adjoint_liouvillian(model: &LindbladModel) -> Superoperator {
    let d = model.dim();
    let id = ComplexMatrix::identity(d);
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    add_sandwich(&mut m, I, &model.hamiltonian, &id);
    add_sandwich(&mut m, -I, &id, &model.hamiltonian);
    for jump in &model.jumps {
        add_sandwich(&mut m, ONE, &jump.adjoint(), jump);
    }
    add_sandwich(&mut m, C64::new(-0.5, 0.0), &model.decay, &id);
    add_sandwich(&mut m, C64::new(-0.5, 0.0), &id, &model.decay);
    Superoperator {
        matrix: m,
        convention: Vectorization::ColumnStacking,
        kind: SuperoperatorKind::Adjoint,
        dim: d,
    }
}
