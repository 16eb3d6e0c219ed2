//! Density operators with validated physical invariants and provenance tags.

use std::fmt;

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, CMatrix, LinOp, SpaceSpec, C64, DEFAULT_TOLERANCE};

/// How a density operator came about.
///
/// Provenance never changes numerics. A proper mixture and the reduced state
/// of an entangled state can share the same matrix exactly; only this tag
/// tells them apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Fundamental,
    Reduced,
    CoarseGrained,
    ProperMixture,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Fundamental => "fundamental",
            Provenance::Reduced => "reduced",
            Provenance::CoarseGrained => "coarse-grained",
            Provenance::ProperMixture => "proper-mixture",
        };
        f.write_str(s)
    }
}

/// Normalized pure state on a labeled space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: SpaceSpec,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(space: SpaceSpec, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        let dev = (amplitudes.norm() - 1.0).abs();
        if dev > DEFAULT_TOLERANCE {
            return Err(Error::NotNormalized(dev));
        }
        Ok(StateVector { space, amplitudes })
    }

    pub fn from_slice(space: SpaceSpec, amplitudes: &[C64]) -> Result<Self> {
        Self::new(space, DVector::from_column_slice(amplitudes))
    }

    pub(crate) fn from_parts(space: SpaceSpec, amplitudes: DVector<C64>) -> Self {
        StateVector { space, amplitudes }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(space: &SpaceSpec, index: usize) -> Result<Self> {
        let d = space.dim();
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, found: index });
        }
        let mut v = DVector::zeros(d);
        v[index] = C64::new(1.0, 0.0);
        Ok(StateVector { space: space.clone(), amplitudes: v })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let space = self.space.concat(&other.space)?;
        let a = &self.amplitudes;
        let b = &other.amplitudes;
        let v = DVector::from_fn(a.len() * b.len(), |k, _| a[k / b.len()] * b[k % b.len()]);
        Ok(StateVector { space, amplitudes: v })
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.to_string(),
                right: other.space.to_string(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }
}

/// Unit-trace, Hermitian, positive semidefinite operator with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: LinOp,
    provenance: Provenance,
}

/// Deviations of a candidate density matrix from the physical invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityResiduals {
    pub trace_deviation: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl DensityResiduals {
    pub fn of(op: &LinOp) -> Self {
        let hermiticity = op.hermiticity_residual();
        let trace_deviation = (op.trace() - C64::new(1.0, 0.0)).norm();
        let min_eigenvalue = hermitian_eigenvalues(op.matrix())
            .first()
            .copied()
            .unwrap_or(0.0);
        DensityResiduals { trace_deviation, hermiticity, min_eigenvalue }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.trace_deviation <= tol && self.hermiticity < tol && self.min_eigenvalue >= -tol
    }
}

impl DensityOperator {
    /// Validates trace, Hermiticity and positivity at the default tolerance.
    pub fn new(op: LinOp, provenance: Provenance) -> Result<Self> {
        let r = DensityResiduals::of(&op);
        if r.trace_deviation > DEFAULT_TOLERANCE {
            return Err(Error::InvalidDensity(format!("trace deviates by {:e}", r.trace_deviation)));
        }
        if r.hermiticity >= DEFAULT_TOLERANCE {
            return Err(Error::InvalidDensity(format!("not Hermitian ({:e})", r.hermiticity)));
        }
        if r.min_eigenvalue < -DEFAULT_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {:e}",
                r.min_eigenvalue
            )));
        }
        Ok(DensityOperator { op, provenance })
    }

    /// For constructions whose invariants hold by construction (outer
    /// products, convex combinations, partial traces, unitary conjugation).
    pub(crate) fn from_matrix_trusted(space: SpaceSpec, m: CMatrix, provenance: Provenance) -> Self {
        DensityOperator { op: LinOp::from_parts(space, m), provenance }
    }

    pub fn residuals(&self) -> DensityResiduals {
        DensityResiduals::of(&self.op)
    }

    /// Re-checks every invariant; constructors already guarantee them.
    pub fn validate(&self) -> Result<()> {
        DensityOperator::new(self.op.clone(), self.provenance).map(|_| ())
    }

    /// `|ψ⟩⟨ψ|`, tagged fundamental.
    pub fn pure(v: &StateVector) -> DensityOperator {
        let a = v.amplitudes();
        let m = a * a.adjoint();
        DensityOperator::from_matrix_trusted(v.space().clone(), m, Provenance::Fundamental)
    }

    pub fn maximally_mixed(space: &SpaceSpec) -> DensityOperator {
        let d = space.dim();
        let m = CMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0);
        DensityOperator::from_matrix_trusted(space.clone(), m, Provenance::Fundamental)
    }

    pub fn op(&self) -> &LinOp {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn space(&self) -> &SpaceSpec {
        self.op.space()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// `self ⊗ other`, carrying `self`'s provenance.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        let op = tensor::tensor_product(&self.op, &other.op)?;
        Ok(DensityOperator { op, provenance: self.provenance })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.matrix())
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.matrix()[(row, col)]
    }
}

impl AsRef<LinOp> for DensityOperator {
    fn as_ref(&self) -> &LinOp {
        &self.op
    }
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn pure(v: &StateVector) -> DensityOperator {
    DensityOperator::pure(v)
}

/// Convex combination `Σ w_i ρ_i`, tagged as a proper mixture.
pub fn proper_mixture(weights: &[f64], states: &[DensityOperator]) -> Result<DensityOperator> {
    if weights.len() != states.len() || states.is_empty() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} states",
            weights.len(),
            states.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
        return Err(Error::InvalidWeights(format!("negative or NaN weight {w}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > DEFAULT_TOLERANCE {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
    }
    let space = states[0].space().clone();
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    for (w, s) in weights.iter().zip(states) {
        if s.space() != &space {
            return Err(Error::SpaceMismatch { left: space.to_string(), right: s.space().to_string() });
        }
        m += s.matrix() * C64::new(*w, 0.0);
    }
    Ok(DensityOperator::from_matrix_trusted(space, m, Provenance::ProperMixture))
}

/// `Tr(ρO)` for a Hermitian observable.
pub fn expectation(rho: &DensityOperator, o: &LinOp) -> Result<f64> {
    if rho.space() != o.space() {
        return Err(Error::SpaceMismatch {
            left: rho.space().to_string(),
            right: o.space().to_string(),
        });
    }
    let h = o.hermiticity_residual();
    if h >= DEFAULT_TOLERANCE {
        return Err(Error::NotHermitian(h));
    }
    Ok(trace_of_product(rho.matrix(), o.matrix()).re)
}

/// `Tr(AB)` without forming the product.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `Tr(ρ²)`.
pub fn purity(rho: &DensityOperator) -> f64 {
    // ρ is Hermitian, so Tr(ρ²) = Σ |ρ_ij|².
    rho.matrix().norm_squared()
}
