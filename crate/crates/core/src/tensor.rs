//! Labeled tensor-product spaces and dense operators on them.
//!
//! Composite basis indices follow a fixed row-major convention: for factors
//! with dimensions `d_0, d_1, ..., d_{m-1}` the multi-index `(i_0, ..., i_{m-1})`
//! maps to `sum_k i_k * prod_{j>k} d_j`, so the first factor is the most
//! significant digit. This matches the Kronecker product ordering.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const DEFAULT_DIM_LIMIT: usize = 4096;
pub const DIM_LIMIT_ENV: &str = "REDSTATES_DIM_LIMIT";

/// Default tolerance for Frobenius-norm comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

static DIM_LIMIT: AtomicUsize = AtomicUsize::new(0);

/// Current cap on the total dimension of a [`SpaceSpec`].
///
/// Initialized from `REDSTATES_DIM_LIMIT` on first use, falling back to
/// [`DEFAULT_DIM_LIMIT`]; can be overridden with [`set_dim_limit`].
pub fn dim_limit() -> usize {
    let cur = DIM_LIMIT.load(Ordering::Relaxed);
    if cur != 0 {
        return cur;
    }
    let from_env = std::env::var(DIM_LIMIT_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_DIM_LIMIT);
    DIM_LIMIT.store(from_env, Ordering::Relaxed);
    from_env
}

pub fn set_dim_limit(limit: usize) {
    DIM_LIMIT.store(limit.max(1), Ordering::Relaxed);
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled finite-dimensional factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    factors: Vec<Factor>,
}

impl SpaceSpec {
    pub fn new<I, S>(factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        Self::with_limit(factors, dim_limit())
    }

    pub fn with_limit<I, S>(factors: I, limit: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor { label: label.into(), dim })
            .collect();
        let mut total: usize = 1;
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(Error::InvalidFactorDim { label: f.label.clone(), dim: f.dim });
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::LabelCollision(f.label.clone()));
            }
            total = total
                .checked_mul(f.dim)
                .ok_or(Error::DimensionLimit { dim: usize::MAX, limit })?;
            if total > limit {
                return Err(Error::DimensionLimit { dim: total, limit });
            }
        }
        Ok(SpaceSpec { factors })
    }

    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(label.into(), dim)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn factor_dim(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|p| self.factors[p].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &SpaceSpec) -> Result<SpaceSpec> {
        SpaceSpec::new(
            self.factors
                .iter()
                .chain(other.factors.iter())
                .map(|f| (f.label.clone(), f.dim)),
        )
    }

    /// The subspace spanned by `labels`, keeping this space's factor order.
    pub fn restrict(&self, labels: &[&str]) -> Result<SpaceSpec> {
        for l in labels {
            if self.position(l).is_none() {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        SpaceSpec::new(
            self.factors
                .iter()
                .filter(|f| labels.contains(&f.label.as_str()))
                .map(|f| (f.label.clone(), f.dim)),
        )
    }

    /// Labels not in `labels`, in factor order.
    pub fn complement(&self, labels: &[&str]) -> Vec<&str> {
        self.factors
            .iter()
            .map(|f| f.label.as_str())
            .filter(|l| !labels.contains(l))
            .collect()
    }

    /// Row-major strides: `strides[k] = prod_{j>k} d_j`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.factors[k + 1].dim;
        }
        strides
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (k, f) in self.factors.iter().enumerate().rev() {
            out[k] = index % f.dim;
            index /= f.dim;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&i, f)| acc * f.dim + i)
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| format!("{}:{}", x.label, x.dim))
            .collect();
        write!(f, "[{}]", parts.join(" ⊗ "))
    }
}

/// Dense complex square matrix bound to a [`SpaceSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinOp {
    space: SpaceSpec,
    matrix: CMatrix,
}

impl LinOp {
    pub fn new(space: SpaceSpec, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if matrix.nrows() != d { matrix.nrows() } else { matrix.ncols() },
            });
        }
        Ok(LinOp { space, matrix })
    }

    pub(crate) fn from_parts(space: SpaceSpec, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        LinOp { space, matrix }
    }

    pub fn identity(space: &SpaceSpec) -> Self {
        let d = space.dim();
        LinOp { space: space.clone(), matrix: CMatrix::identity(d, d) }
    }

    pub fn zeros(space: &SpaceSpec) -> Self {
        let d = space.dim();
        LinOp { space: space.clone(), matrix: CMatrix::zeros(d, d) }
    }

    pub fn from_real_diagonal(space: &SpaceSpec, diag: &[f64]) -> Result<Self> {
        let d = space.dim();
        if diag.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: diag.len() });
        }
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Ok(LinOp { space: space.clone(), matrix: m })
    }

    /// `|a⟩⟨b|` on `space`.
    pub fn outer(space: &SpaceSpec, a: &[C64], b: &[C64]) -> Result<Self> {
        let d = space.dim();
        if a.len() != d || b.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: a.len().max(b.len()) });
        }
        let m = CMatrix::from_fn(d, d, |i, j| a[i] * b[j].conj());
        Ok(LinOp { space: space.clone(), matrix: m })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same matrix, different labels; dimensions must agree factor by factor.
    pub fn relabel(&self, space: &SpaceSpec) -> Result<LinOp> {
        if space.dims() != self.space.dims() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: space.dim() });
        }
        Ok(LinOp { space: space.clone(), matrix: self.matrix.clone() })
    }

    pub fn dagger(&self) -> LinOp {
        LinOp { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Frobenius distance between the operator and its adjoint.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() < tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    fn check_same_space(&self, other: &LinOp) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.to_string(),
                right: other.space.to_string(),
            });
        }
        Ok(())
    }

    pub fn compose(&self, other: &LinOp) -> Result<LinOp> {
        self.check_same_space(other)?;
        Ok(LinOp { space: self.space.clone(), matrix: &self.matrix * &other.matrix })
    }

    pub fn add(&self, other: &LinOp) -> Result<LinOp> {
        self.check_same_space(other)?;
        Ok(LinOp { space: self.space.clone(), matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &LinOp) -> Result<LinOp> {
        self.check_same_space(other)?;
        Ok(LinOp { space: self.space.clone(), matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, factor: C64) -> LinOp {
        LinOp { space: self.space.clone(), matrix: &self.matrix * factor }
    }
}

impl AsRef<LinOp> for LinOp {
    fn as_ref(&self) -> &LinOp {
        self
    }
}

/// Kronecker product on the concatenated space.
pub fn tensor_product(a: &LinOp, b: &LinOp) -> Result<LinOp> {
    let space = a.space.concat(&b.space)?;
    Ok(LinOp { space, matrix: a.matrix.kronecker(&b.matrix) })
}

/// `o1` on factor `at` of `target`, identity on every other factor.
pub fn embed(o1: &LinOp, target: &SpaceSpec, at: &str) -> Result<LinOp> {
    if o1.space.len() != 1 {
        return Err(Error::NotSingleFactor(o1.space.len()));
    }
    let dim = target.factor_dim(at)?;
    if dim != o1.dim() {
        return Err(Error::DimensionMismatch { expected: dim, found: o1.dim() });
    }
    let local = o1.relabel(&SpaceSpec::single(at, dim)?)?;
    embed_subset(&local, target)
}

/// Embeds an operator whose factors are a subset of `target`'s (matched by
/// label, in `target` order) as `op ⊗ I` on the remaining factors.
pub fn embed_subset(op: &LinOp, target: &SpaceSpec) -> Result<LinOp> {
    let labels = op.space.labels();
    let sub = target.restrict(&labels)?;
    if sub != op.space {
        // Labels match but order or dims differ.
        if sub.labels() != labels {
            return Err(Error::SpaceMismatch { left: op.space.to_string(), right: sub.to_string() });
        }
        return Err(Error::DimensionMismatch { expected: sub.dim(), found: op.dim() });
    }
    let layout = SplitLayout::new(target, &labels)?;
    let d = target.dim();
    let mut m = CMatrix::zeros(d, d);
    for r in 0..layout.rest_dim {
        for a in 0..layout.kept_dim {
            let row = layout.full[a * layout.rest_dim + r];
            for b in 0..layout.kept_dim {
                let v = op.matrix[(a, b)];
                if v != C64::new(0.0, 0.0) {
                    m[(row, layout.full[b * layout.rest_dim + r])] = v;
                }
            }
        }
    }
    Ok(LinOp { space: target.clone(), matrix: m })
}

pub fn commutator(a: &LinOp, b: &LinOp) -> Result<LinOp> {
    a.check_same_space(b)?;
    Ok(LinOp {
        space: a.space.clone(),
        matrix: &a.matrix * &b.matrix - &b.matrix * &a.matrix,
    })
}

pub fn frobenius_distance(a: &LinOp, b: &LinOp) -> Result<f64> {
    a.check_same_space(b)?;
    Ok((&a.matrix - &b.matrix).norm())
}

/// Index bookkeeping for splitting a space into kept and remaining factors.
///
/// `full[k * rest_dim + r]` is the composite index whose kept factors form
/// multi-index `k` (row-major over the kept factors in space order) and whose
/// remaining factors form `r`.
#[derive(Debug, Clone)]
pub(crate) struct SplitLayout {
    pub kept_dim: usize,
    pub rest_dim: usize,
    pub full: Vec<usize>,
}

impl SplitLayout {
    pub fn new(space: &SpaceSpec, kept: &[&str]) -> Result<Self> {
        for l in kept {
            if space.position(l).is_none() {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        let strides = space.strides();
        let mut kept_fs = Vec::new();
        let mut rest_fs = Vec::new();
        for (k, f) in space.factors().iter().enumerate() {
            if kept.contains(&f.label.as_str()) {
                kept_fs.push((f.dim, strides[k]));
            } else {
                rest_fs.push((f.dim, strides[k]));
            }
        }
        let offsets = |fs: &[(usize, usize)]| -> Vec<usize> {
            let mut offs = vec![0usize];
            for &(dim, stride) in fs {
                let mut next = Vec::with_capacity(offs.len() * dim);
                for &o in &offs {
                    for i in 0..dim {
                        next.push(o + i * stride);
                    }
                }
                offs = next;
            }
            offs
        };
        let kept_off = offsets(&kept_fs);
        let rest_off = offsets(&rest_fs);
        let mut full = Vec::with_capacity(kept_off.len() * rest_off.len());
        for &k in &kept_off {
            for &r in &rest_off {
                full.push(k + r);
            }
        }
        Ok(SplitLayout { kept_dim: kept_off.len(), rest_dim: rest_off.len(), full })
    }

    #[inline]
    pub fn index(&self, kept: usize, rest: usize) -> usize {
        self.full[kept * self.rest_dim + rest]
    }
}

/// Pauli matrices and qubit helpers.
pub mod pauli {
    use super::*;

    fn qubit(label: &str, m: [[C64; 2]; 2]) -> Result<LinOp> {
        let space = SpaceSpec::single(label, 2)?;
        LinOp::new(space, CMatrix::from_fn(2, 2, |i, j| m[i][j]))
    }

    const O: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn sigma_x(label: &str) -> Result<LinOp> {
        qubit(label, [[O, ONE], [ONE, O]])
    }

    pub fn sigma_y(label: &str) -> Result<LinOp> {
        qubit(label, [[O, -I], [I, O]])
    }

    pub fn sigma_z(label: &str) -> Result<LinOp> {
        qubit(label, [[ONE, O], [O, -ONE]])
    }

    pub fn identity(label: &str) -> Result<LinOp> {
        qubit(label, [[ONE, O], [O, ONE]])
    }
}
