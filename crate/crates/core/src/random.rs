//! Seeded generators for random states, observables and Hamiltonians.
//!
//! All generators draw from a caller-supplied RNG so runs are reproducible
//! from a single seed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::states::{DensityOperator, Provenance, StateVector};
use crate::tensor::{LinOp, SpaceSpec, C64};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-distributed pure state.
pub fn random_state_vector<R: Rng + ?Sized>(space: &SpaceSpec, rng: &mut R) -> StateVector {
    let v = DVector::from_fn(space.dim(), |_, _| gaussian_c64(rng));
    let n = v.norm();
    StateVector::new(space.clone(), v / C64::new(n, 0.0)).expect("normalized by construction")
}

/// Full-rank random mixed state `G G† / Tr(G G†)` with Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(space: &SpaceSpec, rng: &mut R) -> DensityOperator {
    let d = space.dim();
    let g = gaussian_matrix(rng, d, d);
    let mut m = &g * g.adjoint();
    let tr = m.trace();
    m /= tr;
    let m = hermitize(m);
    DensityOperator::from_matrix_trusted(space.clone(), m, Provenance::Fundamental)
}

/// Random Hermitian operator from the Gaussian unitary ensemble, scaled by `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(space: &SpaceSpec, rng: &mut R, scale: f64) -> LinOp {
    let d = space.dim();
    let g = gaussian_matrix(rng, d, d);
    let h = (&g + g.adjoint()) * C64::new(0.5 * scale, 0.0);
    LinOp::new(space.clone(), hermitize(h)).expect("dimension matches")
}

/// Random probability amplitudes `(c+, c-)` with `|c+|^2` uniform in `(lo, hi)`
/// and a uniformly random relative phase.
pub fn random_qubit_amplitudes<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> [C64; 2] {
    let p: f64 = rng.random_range(lo..hi);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    [
        C64::new(p.sqrt(), 0.0),
        C64::from_polar((1.0 - p).sqrt(), phase),
    ]
}

pub(crate) fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}

pub fn random_density_on(factors: &[(&str, usize)], seed: u64) -> Result<DensityOperator> {
    let space = SpaceSpec::new(factors.iter().map(|&(l, d)| (l, d)))?;
    Ok(random_density(&space, &mut rng_from_seed(seed)))
}
