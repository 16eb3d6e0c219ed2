//! Time-independent Hamiltonians with an explicit interaction term and exact
//! unitary propagation (ħ = 1).
//!
//! Propagators come from the Hermitian eigendecomposition `H = V Λ V†`, so
//! `U(t) = V e^{-iΛt} V†` is unitary to rounding for every `t`.

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::random::hermitize;
use crate::states::{DensityOperator, StateVector};
use crate::tensor::{self, CMatrix, LinOp, SpaceSpec, C64, DEFAULT_TOLERANCE};

/// `H = H1 ⊗ I2 + I1 ⊗ H2 + H_int` over a two-block partition of the factors.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    space: SpaceSpec,
    h1: LinOp,
    h2: LinOp,
    h_int: LinOp,
    total: LinOp,
}

impl Hamiltonian {
    /// `h1` and `h2` live on complementary label subsets of `space`;
    /// `h_int` lives on the full space.
    pub fn new(space: &SpaceSpec, h1: LinOp, h2: LinOp, h_int: LinOp) -> Result<Self> {
        let l1 = h1.space().labels();
        let l2 = h2.space().labels();
        if let Some(l) = l1.iter().find(|l| l2.contains(l)) {
            return Err(Error::LabelCollision(l.to_string()));
        }
        for l in space.labels() {
            if !l1.contains(&l) && !l2.contains(&l) {
                return Err(Error::UnknownLabel(format!("{l} is in neither block of the partition")));
            }
        }
        if h_int.space() != space {
            return Err(Error::SpaceMismatch {
                left: space.to_string(),
                right: h_int.space().to_string(),
            });
        }
        for part in [&h1, &h2, &h_int] {
            let r = part.hermiticity_residual();
            if r >= DEFAULT_TOLERANCE {
                return Err(Error::NotHermitian(r));
            }
        }
        let total = tensor::embed_subset(&h1, space)?
            .add(&tensor::embed_subset(&h2, space)?)?
            .add(&h_int)?;
        Ok(Hamiltonian { space: space.clone(), h1, h2, h_int, total })
    }

    /// Zero local parts; only the interaction acts.
    pub fn interaction_only(space: &SpaceSpec, block1: &[&str], h_int: LinOp) -> Result<Self> {
        let block2 = space.complement(block1);
        let s1 = space.restrict(block1)?;
        let s2 = space.restrict(&block2)?;
        Hamiltonian::new(space, LinOp::zeros(&s1), LinOp::zeros(&s2), h_int)
    }

    /// Local parts only, `H_int = 0`.
    pub fn non_interacting(space: &SpaceSpec, h1: LinOp, h2: LinOp) -> Result<Self> {
        Hamiltonian::new(space, h1, h2, LinOp::zeros(space))
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn h1(&self) -> &LinOp {
        &self.h1
    }

    pub fn h2(&self) -> &LinOp {
        &self.h2
    }

    pub fn h_int(&self) -> &LinOp {
        &self.h_int
    }

    pub fn total(&self) -> &LinOp {
        &self.total
    }

    pub fn block1_labels(&self) -> Vec<&str> {
        self.h1.space().labels()
    }

    pub fn block2_labels(&self) -> Vec<&str> {
        self.h2.space().labels()
    }

    pub fn is_interacting(&self) -> bool {
        self.h_int.matrix().iter().any(|v| *v != C64::new(0.0, 0.0))
    }

    pub fn spectral(&self) -> Result<Spectral> {
        Spectral::of(&self.total)
    }
}

/// Eigendecomposition of a Hermitian operator, reusable across times.
#[derive(Debug, Clone)]
pub struct Spectral {
    space: SpaceSpec,
    values: Vec<f64>,
    /// Eigenvectors as columns; `None` when the operator is already diagonal.
    vectors: Option<CMatrix>,
}

impl Spectral {
    pub fn of(op: &LinOp) -> Result<Self> {
        let r = op.hermiticity_residual();
        if r >= DEFAULT_TOLERANCE {
            return Err(Error::NotHermitian(r));
        }
        let m = op.matrix();
        let n = m.nrows();
        let zero = C64::new(0.0, 0.0);
        let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == zero));
        if diagonal {
            let values = (0..n).map(|i| m[(i, i)].re).collect();
            return Ok(Spectral { space: op.space().clone(), values, vectors: None });
        }
        let eig = SymmetricEigen::new(hermitize(m.clone()));
        Ok(Spectral {
            space: op.space().clone(),
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: Some(eig.eigenvectors),
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    fn phases(&self, t: f64) -> DVector<C64> {
        DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| C64::from_polar(1.0, -l * t)),
        )
    }

    /// `exp(-iHt)`.
    pub fn propagator(&self, t: f64) -> LinOp {
        let ph = self.phases(t);
        let m = match &self.vectors {
            None => CMatrix::from_diagonal(&ph),
            Some(v) => {
                let mut vd = v.clone();
                for (j, mut col) in vd.column_iter_mut().enumerate() {
                    col *= ph[j];
                }
                vd * v.adjoint()
            }
        };
        LinOp::from_parts(self.space.clone(), m)
    }

    /// `exp(-iHt)|ψ⟩` in O(d²) without forming the propagator.
    pub fn evolve_vector(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.space() != &self.space {
            return Err(Error::SpaceMismatch {
                left: self.space.to_string(),
                right: psi.space().to_string(),
            });
        }
        let ph = self.phases(t);
        let out = match &self.vectors {
            None => psi.amplitudes().component_mul(&ph),
            Some(v) => {
                let coeffs = v.adjoint() * psi.amplitudes();
                v * coeffs.component_mul(&ph)
            }
        };
        Ok(StateVector::from_parts(self.space.clone(), out))
    }

    pub fn evolve_density(&self, rho: &DensityOperator, t: f64) -> Result<DensityOperator> {
        conjugate(rho, &self.propagator(t))
    }
}

fn conjugate(rho: &DensityOperator, u: &LinOp) -> Result<DensityOperator> {
    if rho.space() != u.space() {
        return Err(Error::SpaceMismatch {
            left: rho.space().to_string(),
            right: u.space().to_string(),
        });
    }
    let m = u.matrix() * rho.matrix() * u.matrix().adjoint();
    Ok(DensityOperator::from_matrix_trusted(rho.space().clone(), hermitize(m), rho.provenance()))
}

/// `U_t = exp(-iHt)`.
pub fn propagator(h: &Hamiltonian, t: f64) -> Result<LinOp> {
    Ok(h.spectral()?.propagator(t))
}

/// `exp(-iOt)` for any Hermitian operator.
pub fn propagator_of(op: &LinOp, t: f64) -> Result<LinOp> {
    Ok(Spectral::of(op)?.propagator(t))
}

/// `U ρ U†`; provenance is preserved.
pub fn evolve(rho: &DensityOperator, h: &Hamiltonian, t: f64) -> Result<DensityOperator> {
    if rho.space() != h.space() {
        return Err(Error::SpaceMismatch {
            left: rho.space().to_string(),
            right: h.space().to_string(),
        });
    }
    conjugate(rho, &propagator(h, t)?)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FactorizationCheck {
    pub holds: bool,
    pub residual: f64,
}

/// Compares `exp(-iHt)` with `exp(-iH1t) exp(-iH2t)` (local parts embedded).
///
/// `holds` is true only for a non-interacting Hamiltonian with a residual
/// below the default tolerance.
pub fn factorization_check(h: &Hamiltonian, t: f64) -> Result<FactorizationCheck> {
    let full = propagator(h, t)?;
    let u1 = tensor::embed_subset(&propagator_of(h.h1(), t)?, h.space())?;
    let u2 = tensor::embed_subset(&propagator_of(h.h2(), t)?, h.space())?;
    let residual = tensor::frobenius_distance(&full, &u1.compose(&u2)?)?;
    Ok(FactorizationCheck { holds: !h.is_interacting() && residual < DEFAULT_TOLERANCE, residual })
}

/// `exp(-iH1t) ρ1 exp(iH1t)` on a single subsystem.
pub fn evolve_reduced_noninteracting(
    rho_r: &DensityOperator,
    h_local: &LinOp,
    t: f64,
) -> Result<DensityOperator> {
    if rho_r.space() != h_local.space() {
        return Err(Error::SpaceMismatch {
            left: rho_r.space().to_string(),
            right: h_local.space().to_string(),
        });
    }
    conjugate(rho_r, &propagator_of(h_local, t)?)
}
