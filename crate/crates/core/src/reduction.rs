//! Partial traces, the expectation-value characterization of reduced states,
//! and the coarse-graining projector `Πρ = Tr_2(ρ) ⊗ I/d_2`.
//!
//! Traces over arbitrary (possibly non-adjacent) factors are done by index
//! arithmetic on the row-major layout; factors are never permuted.

use crate::dynamics::Hamiltonian;
use crate::error::{Error, Result};
use crate::states::{trace_of_product, DensityOperator, Provenance, StateVector};
use crate::tensor::{self, CMatrix, LinOp, SpaceSpec, SplitLayout, C64};

/// Largest total dimension for which [`projector_superoperator`] will
/// materialize the `d² × d²` matrix of `Π`.
pub const SUPEROPERATOR_DIM_LIMIT: usize = 36;

fn check_traced(space: &SpaceSpec, traced: &[&str]) -> Result<()> {
    if traced.is_empty() {
        return Err(Error::InvalidTracedSet("nothing to trace".into()));
    }
    for (i, l) in traced.iter().enumerate() {
        if space.position(l).is_none() {
            return Err(Error::UnknownLabel(l.to_string()));
        }
        if traced[..i].contains(l) {
            return Err(Error::InvalidTracedSet(format!("`{l}` listed twice")));
        }
    }
    if traced.len() == space.len() {
        return Err(Error::InvalidTracedSet("cannot trace every factor".into()));
    }
    Ok(())
}

/// Partial trace of an arbitrary operator over the `traced` factors.
pub fn partial_trace_op(op: &LinOp, traced: &[&str]) -> Result<LinOp> {
    let space = op.space();
    check_traced(space, traced)?;
    let retained = space.complement(traced);
    let layout = SplitLayout::new(space, &retained)?;
    let m = op.matrix();
    let out = CMatrix::from_fn(layout.kept_dim, layout.kept_dim, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for e in 0..layout.rest_dim {
            acc += m[(layout.index(a, e), layout.index(b, e))];
        }
        acc
    });
    LinOp::new(space.restrict(&retained)?, out)
}

/// Reduced state on the factors not listed in `traced`.
pub fn partial_trace(rho: &DensityOperator, traced: &[&str]) -> Result<DensityOperator> {
    let op = partial_trace_op(rho.op(), traced)?;
    let space = op.space().clone();
    Ok(DensityOperator::from_matrix_trusted(space, op.into_matrix(), Provenance::Reduced))
}

/// Reduced state of a pure state, computed directly from the amplitudes
/// (`ρ^r_ab = Σ_e ψ_ae ψ*_be`) without forming `|ψ⟩⟨ψ|`.
pub fn reduced_from_vector(psi: &StateVector, traced: &[&str]) -> Result<DensityOperator> {
    let space = psi.space();
    check_traced(space, traced)?;
    let retained = space.complement(traced);
    let layout = SplitLayout::new(space, &retained)?;
    let v = psi.amplitudes();
    let out = CMatrix::from_fn(layout.kept_dim, layout.kept_dim, |a, b| {
        let mut acc = C64::new(0.0, 0.0);
        for e in 0..layout.rest_dim {
            acc += v[layout.index(a, e)] * v[layout.index(b, e)].conj();
        }
        acc
    });
    Ok(DensityOperator::from_matrix_trusted(space.restrict(&retained)?, out, Provenance::Reduced))
}

/// Complete Hermitian operator basis (generalized Gell-Mann matrices plus the
/// identity) for `space`: `d²` elements.
pub fn hermitian_basis(space: &SpaceSpec) -> Vec<LinOp> {
    let d = space.dim();
    let mut out = Vec::with_capacity(d * d);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    out.push(LinOp::identity(space));
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, k)] = one;
            sym[(k, j)] = one;
            out.push(LinOp::from_parts(space.clone(), sym));
            let mut asym = CMatrix::zeros(d, d);
            asym[(j, k)] = -i;
            asym[(k, j)] = i;
            out.push(LinOp::from_parts(space.clone(), asym));
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for j in 0..l {
            diag[(j, j)] = C64::new(norm, 0.0);
        }
        diag[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(LinOp::from_parts(space.clone(), diag));
    }
    out
}

/// Largest deviation `|⟨O1 ⊗ I⟩_ρ − ⟨O1⟩_{ρ_r}|` over a complete Hermitian
/// basis of the retained factors.
///
/// `rho_r` may be any operator on the retained space so that deliberately
/// corrupted candidates can be scored.
pub fn verify_reduced_definition(
    rho: &DensityOperator,
    rho_r: &impl AsRef<LinOp>,
    retained: &[&str],
) -> Result<f64> {
    let rho_r = rho_r.as_ref();
    let sub = rho.space().restrict(retained)?;
    if rho_r.space() != &sub {
        return Err(Error::SpaceMismatch { left: sub.to_string(), right: rho_r.space().to_string() });
    }
    let mut worst: f64 = 0.0;
    for o1 in hermitian_basis(&sub) {
        let full = tensor::embed_subset(&o1, rho.space())?;
        let lhs = trace_of_product(rho.matrix(), full.matrix()).re;
        let rhs = trace_of_product(rho_r.matrix(), o1.matrix()).re;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `Πρ = Tr_traced(ρ) ⊗ I/d_traced` laid out on the full space of `ρ`.
#[derive(Debug, Clone)]
pub struct CoarseGrainedState {
    rho_cg: DensityOperator,
    reduced: DensityOperator,
    /// The normalized identity `I/d` on the traced factors.
    delta: LinOp,
    traced_labels: Vec<String>,
}

impl CoarseGrainedState {
    pub fn rho_cg(&self) -> &DensityOperator {
        &self.rho_cg
    }

    /// The reduced state the coarse-grained state was built from.
    pub fn reduced(&self) -> &DensityOperator {
        &self.reduced
    }

    pub fn delta(&self) -> &LinOp {
        &self.delta
    }

    pub fn traced_labels(&self) -> Vec<&str> {
        self.traced_labels.iter().map(String::as_str).collect()
    }
}

/// Places `reduced ⊗ I/d_traced` back into `space`'s factor order.
fn lift_with_normalized_identity(reduced: &LinOp, space: &SpaceSpec, traced: &[&str]) -> Result<(CMatrix, LinOp)> {
    let retained = space.complement(traced);
    let layout = SplitLayout::new(space, &retained)?;
    let traced_space = space.restrict(traced)?;
    let dt = traced_space.dim();
    let w = C64::new(1.0 / dt as f64, 0.0);
    let delta = LinOp::from_parts(traced_space, CMatrix::identity(dt, dt) * w);
    let d = space.dim();
    let r = reduced.matrix();
    let mut m = CMatrix::zeros(d, d);
    for e in 0..layout.rest_dim {
        for a in 0..layout.kept_dim {
            for b in 0..layout.kept_dim {
                m[(layout.index(a, e), layout.index(b, e))] = r[(a, b)] * w;
            }
        }
    }
    Ok((m, delta))
}

/// `Π` applied to an arbitrary operator (linear extension).
pub fn coarse_grain_op(op: &LinOp, traced: &[&str]) -> Result<LinOp> {
    let reduced = partial_trace_op(op, traced)?;
    let (m, _) = lift_with_normalized_identity(&reduced, op.space(), traced)?;
    Ok(LinOp::from_parts(op.space().clone(), m))
}

pub fn coarse_grain(rho: &DensityOperator, traced: &[&str]) -> Result<CoarseGrainedState> {
    let reduced = partial_trace(rho, traced)?;
    let (m, delta) = lift_with_normalized_identity(reduced.op(), rho.space(), traced)?;
    let rho_cg = DensityOperator::from_matrix_trusted(rho.space().clone(), m, Provenance::CoarseGrained);
    Ok(CoarseGrainedState {
        rho_cg,
        reduced,
        delta,
        traced_labels: traced.iter().map(|s| s.to_string()).collect(),
    })
}

/// Traces the coarse-grained state back down to the retained factors.
pub fn recover_reduced(cg: &CoarseGrainedState) -> DensityOperator {
    partial_trace(&cg.rho_cg, &cg.traced_labels()).expect("traced set validated at construction")
}

/// `|⟨O1 ⊗ I⟩_{Πρ} − ⟨O1⟩_{Tr_2 ρ}|` for an observable on the retained factors.
pub fn coarse_grained_expectation_check(rho: &DensityOperator, o1: &LinOp, traced: &[&str]) -> Result<f64> {
    let r = o1.hermiticity_residual();
    if r >= tensor::DEFAULT_TOLERANCE {
        return Err(Error::NotHermitian(r));
    }
    let cg = coarse_grain(rho, traced)?;
    if o1.space() != cg.reduced.space() {
        return Err(Error::SpaceMismatch {
            left: cg.reduced.space().to_string(),
            right: o1.space().to_string(),
        });
    }
    let full = tensor::embed_subset(o1, rho.space())?;
    let lhs = trace_of_product(cg.rho_cg.matrix(), full.matrix()).re;
    let rhs = trace_of_product(cg.reduced.matrix(), o1.matrix()).re;
    Ok((lhs - rhs).abs())
}

/// `ρ_cg(t) = Π(U_t ρ0 U_t†)` at each requested time.
pub fn coarse_grained_trajectory(
    rho0: &DensityOperator,
    h: &Hamiltonian,
    times: &[f64],
    traced: &[&str],
) -> Result<Vec<CoarseGrainedState>> {
    if rho0.space() != h.space() {
        return Err(Error::SpaceMismatch {
            left: rho0.space().to_string(),
            right: h.space().to_string(),
        });
    }
    check_traced(rho0.space(), traced)?;
    let spectral = h.spectral()?;
    times
        .iter()
        .map(|&t| coarse_grain(&spectral.evolve_density(rho0, t)?, traced))
        .collect()
}

/// Matrix of `Π` acting on row-major vectorized operators, `vec(Πρ) = P vec(ρ)`.
pub fn projector_superoperator(space: &SpaceSpec, traced: &[&str]) -> Result<CMatrix> {
    let d = space.dim();
    if d > SUPEROPERATOR_DIM_LIMIT {
        return Err(Error::SuperoperatorTooLarge { dim: d, limit: SUPEROPERATOR_DIM_LIMIT });
    }
    check_traced(space, traced)?;
    let mut sup = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = C64::new(1.0, 0.0);
            let image = coarse_grain_op(&LinOp::from_parts(space.clone(), e), traced)?;
            let col = i * d + j;
            for r in 0..d {
                for s in 0..d {
                    sup[(r * d + s, col)] = image.matrix()[(r, s)];
                }
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_state_vector, rng_from_seed};
    use crate::states::{expectation, purity};
    use crate::tensor::{frobenius_distance, pauli};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pair(d2: usize) -> SpaceSpec {
        SpaceSpec::new([("a", 2), ("b", d2)]).unwrap()
    }

    fn bell() -> DensityOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityOperator::pure(&StateVector::from_slice(pair(2), &[c(h), c(0.0), c(0.0), c(h)]).unwrap())
    }

    fn correlated(c1: f64) -> DensityOperator {
        let c2 = (1.0 - c1 * c1).sqrt();
        DensityOperator::pure(&StateVector::from_slice(pair(2), &[c(c1), c(0.0), c(0.0), c(c2)]).unwrap())
    }

    #[test]
    fn product_state_trace() {
        let r1 = DensityOperator::new(
            LinOp::from_real_diagonal(&SpaceSpec::single("a", 2).unwrap(), &[0.7, 0.3]).unwrap(),
            Provenance::Fundamental,
        )
        .unwrap();
        let r2 = random_density(&SpaceSpec::single("b", 3).unwrap(), &mut rng_from_seed(1));
        let red = partial_trace(&r1.tensor(&r2).unwrap(), &["b"]).unwrap();
        assert!(frobenius_distance(red.op(), r1.op()).unwrap() < 1e-15);
        assert_eq!(red.provenance(), Provenance::Reduced);
    }

    #[test]
    fn correlated_state_loses_offdiagonals() {
        let rho = correlated(0.6);
        let red = partial_trace(&rho, &["b"]).unwrap();
        let expect = LinOp::from_real_diagonal(red.space(), &[0.36, 0.64]).unwrap();
        assert!(frobenius_distance(red.op(), &expect).unwrap() < 1e-15);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed_either_way() {
        for traced in ["a", "b"] {
            let red = partial_trace(&bell(), &[traced]).unwrap();
            let mm = DensityOperator::maximally_mixed(red.space());
            assert!(frobenius_distance(red.op(), mm.op()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn traced_set_errors() {
        let rho = bell();
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::InvalidTracedSet(_))));
        assert!(matches!(partial_trace(&rho, &["a", "b"]), Err(Error::InvalidTracedSet(_))));
        assert!(matches!(partial_trace(&rho, &["q"]), Err(Error::UnknownLabel(_))));
        assert!(matches!(coarse_grain(&rho, &[]), Err(Error::InvalidTracedSet(_))));
    }

    #[test]
    fn non_adjacent_trace_matches_permute_then_trace() {
        let space = SpaceSpec::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let rho = random_density(&space, &mut rng_from_seed(9));
        let red = partial_trace(&rho, &["b"]).unwrap();
        // Oracle: permute to (a, c, b) by explicit index map, then trace the last factor.
        let perm = SpaceSpec::new([("a", 2), ("c", 2), ("b", 3)]).unwrap();
        let to_orig = |p: usize| {
            let m = perm.multi_index(p);
            space.flat_index(&[m[0], m[2], m[1]])
        };
        let permuted = CMatrix::from_fn(12, 12, |i, j| rho.matrix()[(to_orig(i), to_orig(j))]);
        let oracle = CMatrix::from_fn(4, 4, |i, j| (0..3).map(|e| permuted[(i * 3 + e, j * 3 + e)]).sum());
        assert!((red.matrix() - oracle).norm() < 1e-15);
    }

    #[test]
    fn vector_route_matches_density_route() {
        let space = SpaceSpec::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let psi = random_state_vector(&space, &mut rng_from_seed(4));
        let a = reduced_from_vector(&psi, &["a", "c"]).unwrap();
        let b = partial_trace(&DensityOperator::pure(&psi), &["a", "c"]).unwrap();
        assert!(frobenius_distance(a.op(), b.op()).unwrap() < 1e-14);
    }

    #[test]
    fn basis_is_complete_and_orthogonal() {
        let s = SpaceSpec::single("a", 3).unwrap();
        let basis = hermitian_basis(&s);
        assert_eq!(basis.len(), 9);
        for (i, x) in basis.iter().enumerate() {
            assert!(x.is_hermitian(1e-15));
            for (j, y) in basis.iter().enumerate() {
                let ip = trace_of_product(x.matrix(), y.matrix());
                if i != j {
                    assert!(ip.norm() < 1e-14);
                } else {
                    assert!(ip.re > 0.5);
                }
            }
        }
        let q = hermitian_basis(&SpaceSpec::single("q", 2).unwrap());
        let z = pauli::sigma_z("q").unwrap();
        assert!(q.iter().any(|b| frobenius_distance(b, &z).unwrap() < 1e-15));
    }

    #[test]
    fn definition_residuals() {
        let mut rng = rng_from_seed(3);
        let r1 = random_density(&SpaceSpec::single("a", 2).unwrap(), &mut rng);
        let r2 = random_density(&SpaceSpec::single("b", 2).unwrap(), &mut rng);
        let prod = r1.tensor(&r2).unwrap();
        let red = partial_trace(&prod, &["b"]).unwrap();
        assert!(verify_reduced_definition(&prod, &red, &["a"]).unwrap() < 1e-12);

        let rho = correlated(0.8);
        let red = partial_trace(&rho, &["b"]).unwrap();
        assert!(verify_reduced_definition(&rho, &red, &["a"]).unwrap() < 1e-10);

        let mut corrupted = red.matrix().clone();
        corrupted[(0, 0)] += c(0.01);
        let corrupted = LinOp::new(red.space().clone(), corrupted).unwrap();
        // The identity and σz basis elements each pick up exactly 0.01.
        let res = verify_reduced_definition(&rho, &corrupted, &["a"]).unwrap();
        assert!(res >= 0.01 - 1e-12, "{res}");
    }

    #[test]
    fn coarse_grain_fixed_point_and_bell() {
        let mut rng = rng_from_seed(8);
        let r1 = random_density(&SpaceSpec::single("a", 2).unwrap(), &mut rng);
        let rho = r1.tensor(&DensityOperator::maximally_mixed(&SpaceSpec::single("b", 3).unwrap())).unwrap();
        let cg = coarse_grain(&rho, &["b"]).unwrap();
        assert!(frobenius_distance(cg.rho_cg().op(), rho.op()).unwrap() < 1e-15);
        assert_eq!(cg.rho_cg().provenance(), Provenance::CoarseGrained);
        assert!(frobenius_distance(cg.delta(), &LinOp::identity(cg.delta().space()).scale(c(1.0 / 3.0))).unwrap() < 1e-16);

        let cg = coarse_grain(&bell(), &["b"]).unwrap();
        let quarter = DensityOperator::maximally_mixed(&pair(2));
        assert!(frobenius_distance(cg.rho_cg().op(), quarter.op()).unwrap() < 1e-15);
    }

    #[test]
    fn coarse_grain_is_reduced_tensor_delta_for_last_factor() {
        let rho = random_density(&pair(3), &mut rng_from_seed(12));
        let cg = coarse_grain(&rho, &["b"]).unwrap();
        let expect = tensor::tensor_product(cg.reduced().op(), cg.delta()).unwrap();
        assert_eq!(cg.rho_cg().matrix(), expect.matrix());
    }

    #[test]
    fn recovery_and_idempotence() {
        let rho = random_density(&pair(2), &mut rng_from_seed(2));
        let cg = coarse_grain(&rho, &["b"]).unwrap();
        let red = partial_trace(&rho, &["b"]).unwrap();
        assert!(frobenius_distance(recover_reduced(&cg).op(), red.op()).unwrap() < 1e-12);
        let twice = coarse_grain(cg.rho_cg(), &["b"]).unwrap();
        assert!(frobenius_distance(twice.rho_cg().op(), cg.rho_cg().op()).unwrap() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = StateVector::from_slice(SpaceSpec::single("a", 2).unwrap(), &[c(h), C64::new(0.0, h)]).unwrap();
        let b = StateVector::basis(&SpaceSpec::single("b", 2).unwrap(), 1).unwrap();
        let prod = DensityOperator::pure(&a.tensor(&b).unwrap());
        let rec = recover_reduced(&coarse_grain(&prod, &["b"]).unwrap());
        assert!(frobenius_distance(rec.op(), DensityOperator::pure(&a).op()).unwrap() < 1e-15);

        let rec = recover_reduced(&coarse_grain(&correlated(0.6), &["b"]).unwrap());
        let eq10 = LinOp::from_real_diagonal(rec.space(), &[0.36, 0.64]).unwrap();
        assert!(frobenius_distance(rec.op(), &eq10).unwrap() < 1e-15);
    }

    #[test]
    fn local_expectations_survive_correlations_do_not() {
        let rho = random_density(&pair(3), &mut rng_from_seed(30));
        let id = LinOp::identity(&SpaceSpec::single("a", 2).unwrap());
        assert!(coarse_grained_expectation_check(&rho, &id, &["b"]).unwrap() < 1e-15);
        let z = pauli::sigma_z("a").unwrap();
        assert!(coarse_grained_expectation_check(&rho, &z, &["b"]).unwrap() < 1e-10);

        let bell = bell();
        let zz = tensor::tensor_product(&z, &pauli::sigma_z("b").unwrap()).unwrap();
        let cg = coarse_grain(&bell, &["b"]).unwrap();
        let before = expectation(&bell, &zz).unwrap();
        let after = expectation(cg.rho_cg(), &zz).unwrap();
        assert!((before - after - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trajectory_purity_behaviour() {
        use crate::dynamics::Hamiltonian;
        let s = pair(2);
        let h_amp = std::f64::consts::FRAC_1_SQRT_2;
        let a = StateVector::from_slice(SpaceSpec::single("a", 2).unwrap(), &[c(h_amp), c(h_amp)]).unwrap();
        let b = StateVector::basis(&SpaceSpec::single("b", 2).unwrap(), 0).unwrap();
        let rho0 = DensityOperator::pure(&a.tensor(&b).unwrap());
        let times = [0.0, 0.5, 1.0];

        let free = Hamiltonian::non_interacting(&s, pauli::sigma_x("a").unwrap(), pauli::sigma_z("b").unwrap()).unwrap();
        let traj = coarse_grained_trajectory(&rho0, &free, &times, &["b"]).unwrap();
        let p0 = purity(traj[0].rho_cg());
        for cg in &traj {
            assert!((purity(cg.rho_cg()) - p0).abs() < 1e-12);
        }
        let first = coarse_grain(&rho0, &["b"]).unwrap();
        assert!(frobenius_distance(traj[0].rho_cg().op(), first.rho_cg().op()).unwrap() < 1e-15);

        let zx = tensor::tensor_product(&pauli::sigma_z("a").unwrap(), &pauli::sigma_x("b").unwrap()).unwrap();
        let coupled = Hamiltonian::interaction_only(&s, &["a"], zx).unwrap();
        let traj = coarse_grained_trajectory(&rho0, &coupled, &times, &["b"]).unwrap();
        let ps: Vec<f64> = traj.iter().map(|cg| purity(cg.rho_cg())).collect();
        assert!(ps[0] > ps[1] + 1e-3 && ps[1] > ps[2] + 1e-3, "{ps:?}");
    }

    #[test]
    fn superoperator_limits() {
        let big = SpaceSpec::new([("a", 6), ("b", 7)]).unwrap();
        assert!(matches!(
            projector_superoperator(&big, &["b"]),
            Err(Error::SuperoperatorTooLarge { .. })
        ));
        let p = projector_superoperator(&pair(3), &["b"]).unwrap();
        assert!((&p * &p - &p).norm() < 1e-14);
        assert!((&p - p.adjoint()).norm() < 1e-15);
    }
}
