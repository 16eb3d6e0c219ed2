//! Collapse-free von Neumann measurement chains.
//!
//! Each premeasurement attaches a fresh pointer factor in its ready state and
//! applies `U = Σ_i P_i ⊗ T_i`, where `P_i` projects onto the i-th eigenvector
//! of the measured observable and `T_i` swaps the pointer's ready level with
//! its i-th outcome level. The composite state stays pure; probabilities of
//! pointer readings (and their conjunctions, since pointers live on distinct
//! factors and their projectors commute) are read off the final state.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::reduction::reduced_from_vector;
use crate::states::{DensityOperator, StateVector};
use crate::tensor::{self, CMatrix, LinOp, SpaceSpec, C64, DEFAULT_TOLERANCE};

const EIGENVECTOR_TOLERANCE: f64 = 1e-9;
const COMMUTATOR_TOLERANCE: f64 = 1e-12;
/// Conditioning events below this probability are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// An apparatus pointer: a factor with a ready level and one level per outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointerFactor {
    label: String,
    dim: usize,
    ready_index: usize,
    outcome_indices: Vec<usize>,
}

impl PointerFactor {
    pub fn new(label: impl Into<String>, dim: usize, ready_index: usize, outcome_indices: Vec<usize>) -> Result<Self> {
        let label = label.into();
        if dim < 1 + outcome_indices.len() {
            return Err(Error::InvalidPointer(format!(
                "`{label}` has dimension {dim} but needs {} levels",
                1 + outcome_indices.len()
            )));
        }
        if ready_index >= dim || outcome_indices.iter().any(|&o| o >= dim) {
            return Err(Error::InvalidPointer(format!("`{label}` references a level outside 0..{dim}")));
        }
        if outcome_indices.contains(&ready_index) {
            return Err(Error::InvalidPointer(format!("`{label}` ready level doubles as an outcome")));
        }
        for (i, o) in outcome_indices.iter().enumerate() {
            if outcome_indices[..i].contains(o) {
                return Err(Error::InvalidPointer(format!("`{label}` repeats outcome level {o}")));
            }
        }
        Ok(PointerFactor { label, dim, ready_index, outcome_indices })
    }

    /// Ready level 0, outcome `i` at level `i + 1`.
    pub fn standard(label: impl Into<String>, outcomes: usize) -> Result<Self> {
        PointerFactor::new(label, outcomes + 1, 0, (1..=outcomes).collect())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ready_index(&self) -> usize {
        self.ready_index
    }

    pub fn outcome_indices(&self) -> &[usize] {
        &self.outcome_indices
    }

    pub fn relabeled(&self, label: impl Into<String>) -> PointerFactor {
        PointerFactor { label: label.into(), ..self.clone() }
    }

    fn space(&self) -> Result<SpaceSpec> {
        SpaceSpec::single(self.label.clone(), self.dim)
    }

    /// Swap of the ready level with the level of outcome `i`.
    fn transposition(&self, i: usize) -> CMatrix {
        let mut t = CMatrix::identity(self.dim, self.dim);
        let (r, o) = (self.ready_index, self.outcome_indices[i]);
        t.swap_rows(r, o);
        t
    }

    fn ready_state(&self) -> Result<StateVector> {
        StateVector::basis(&self.space()?, self.ready_index)
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementStep {
    pub observable: LinOp,
    pub eigenbasis: Vec<DVector<C64>>,
    pub pointer: PointerFactor,
}

/// A pointer reading: `outcome` indexes the eigenbasis of that step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Event {
    pub pointer: String,
    pub outcome: usize,
}

impl Event {
    pub fn new(pointer: impl Into<String>, outcome: usize) -> Self {
        Event { pointer: pointer.into(), outcome }
    }
}

/// Measured system plus every pointer attached so far, in a pure joint state.
#[derive(Debug, Clone)]
pub struct MeasurementChain {
    system_space: SpaceSpec,
    steps: Vec<MeasurementStep>,
    state: StateVector,
}

fn check_eigenbasis(observable: &LinOp, basis: &[DVector<C64>]) -> Result<()> {
    let d = observable.dim();
    if basis.len() != d || basis.iter().any(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: basis.iter().map(|v| v.len()).find(|&l| l != d).unwrap_or(basis.len()),
        });
    }
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.dotc(b) - C64::new(target, 0.0)).norm());
        }
    }
    if worst > DEFAULT_TOLERANCE {
        return Err(Error::NonOrthonormal(worst));
    }
    for (index, v) in basis.iter().enumerate() {
        let ov = observable.matrix() * v;
        let lambda = v.dotc(&ov);
        let residual = (ov - v * lambda).norm();
        if residual > EIGENVECTOR_TOLERANCE {
            return Err(Error::NotEigenvector { index, residual });
        }
    }
    Ok(())
}

/// `Σ_i P_i ⊗ I_middle ⊗ T_i` on `system ⊗ middle ⊗ pointer`.
fn coupling_matrix(basis: &[DVector<C64>], middle_dim: usize, pointer: &PointerFactor) -> CMatrix {
    let ds = basis[0].len();
    let total = ds * middle_dim * pointer.dim;
    let mut u = CMatrix::zeros(total, total);
    let id_mid = CMatrix::identity(middle_dim, middle_dim);
    for (i, v) in basis.iter().enumerate() {
        let p = v * v.adjoint();
        u += p.kronecker(&id_mid).kronecker(&pointer.transposition(i));
    }
    u
}

impl MeasurementChain {
    pub fn new(system_state: StateVector) -> Self {
        MeasurementChain {
            system_space: system_state.space().clone(),
            steps: Vec::new(),
            state: system_state,
        }
    }

    pub fn system_space(&self) -> &SpaceSpec {
        &self.system_space
    }

    pub fn space(&self) -> &SpaceSpec {
        self.state.space()
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn steps(&self) -> &[MeasurementStep] {
        &self.steps
    }

    pub fn pointer_labels(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.pointer.label()).collect()
    }

    fn validate_step(&self, observable: &LinOp, eigenbasis: &[DVector<C64>], pointer: &PointerFactor) -> Result<()> {
        if observable.space() != &self.system_space {
            return Err(Error::SpaceMismatch {
                left: self.system_space.to_string(),
                right: observable.space().to_string(),
            });
        }
        let h = observable.hermiticity_residual();
        if h >= DEFAULT_TOLERANCE {
            return Err(Error::NotHermitian(h));
        }
        if self.space().position(pointer.label()).is_some() {
            return Err(Error::LabelCollision(pointer.label().to_string()));
        }
        check_eigenbasis(observable, eigenbasis)?;
        if pointer.outcome_indices.len() != eigenbasis.len() {
            return Err(Error::IncompleteOutcomes {
                outcomes: pointer.outcome_indices.len(),
                vectors: eigenbasis.len(),
            });
        }
        Ok(())
    }

    /// The coupling unitary a premeasurement with these arguments would apply,
    /// on the current space extended by `pointer`.
    pub fn coupling_unitary(&self, observable: &LinOp, eigenbasis: &[DVector<C64>], pointer: &PointerFactor) -> Result<LinOp> {
        self.validate_step(observable, eigenbasis, pointer)?;
        let space = self.space().concat(&pointer.space()?)?;
        let middle = self.space().dim() / self.system_space.dim();
        LinOp::new(space, coupling_matrix(eigenbasis, middle, pointer))
    }

    /// Attaches `pointer` in its ready state and correlates it with the
    /// eigenbasis of `observable`. Returns the extended chain.
    pub fn premeasure(&self, observable: &LinOp, eigenbasis: &[DVector<C64>], pointer: PointerFactor) -> Result<MeasurementChain> {
        let u = self.coupling_unitary(observable, eigenbasis, &pointer)?;
        let before = self.state.tensor(&pointer.ready_state()?)?;
        let after = u.matrix() * before.amplitudes();
        let state = StateVector::new(u.space().clone(), after)?;
        let mut steps = self.steps.clone();
        steps.push(MeasurementStep {
            observable: observable.clone(),
            eigenbasis: eigenbasis.to_vec(),
            pointer,
        });
        Ok(MeasurementChain { system_space: self.system_space.clone(), steps, state })
    }

    fn step(&self, label: &str) -> Result<&MeasurementStep> {
        self.steps
            .iter()
            .find(|s| s.pointer.label() == label)
            .ok_or_else(|| Error::UnknownPointer(label.to_string()))
    }

    /// Pointer level and factor position for an event.
    fn locate(&self, event: &Event) -> Result<(usize, usize)> {
        let step = self.step(&event.pointer)?;
        let level = *step.pointer.outcome_indices.get(event.outcome).ok_or_else(|| Error::UnknownOutcome {
            pointer: event.pointer.clone(),
            outcome: event.outcome,
        })?;
        let pos = self.space().position(&event.pointer).expect("attached pointer");
        Ok((pos, level))
    }

    /// Projector onto an event's pointer level, embedded in the full space.
    pub fn event_projector(&self, event: &Event) -> Result<LinOp> {
        let (_, level) = self.locate(event)?;
        let step = self.step(&event.pointer)?;
        let mut e = vec![C64::new(0.0, 0.0); step.pointer.dim];
        e[level] = C64::new(1.0, 0.0);
        let local = LinOp::outer(&step.pointer.space()?, &e, &e)?;
        tensor::embed(&local, self.space(), &event.pointer)
    }

    /// `‖Π_events |Ψ⟩‖²`.
    pub fn joint_probability(&self, events: &[Event]) -> Result<f64> {
        let located: Vec<(usize, usize)> = events.iter().map(|e| self.locate(e)).collect::<Result<_>>()?;
        let projectors: Vec<LinOp> = events.iter().map(|e| self.event_projector(e)).collect::<Result<_>>()?;
        for (i, a) in projectors.iter().enumerate() {
            for b in &projectors[i + 1..] {
                let c = tensor::commutator(a, b)?.frobenius_norm();
                if c >= COMMUTATOR_TOLERANCE {
                    return Err(Error::NonCommutingEvents(c));
                }
            }
        }
        let space = self.space();
        let amps = self.state.amplitudes();
        let mut p = 0.0;
        for (k, a) in amps.iter().enumerate() {
            let multi = space.multi_index(k);
            if located.iter().all(|&(pos, level)| multi[pos] == level) {
                p += a.norm_sqr();
            }
        }
        Ok(p)
    }

    pub fn probability(&self, event: &Event) -> Result<f64> {
        self.joint_probability(std::slice::from_ref(event))
    }

    /// `pr(target ∧ given) / pr(given)`.
    pub fn conditional_probability(&self, target: &Event, given: &[Event]) -> Result<f64> {
        let marginal = self.joint_probability(given)?;
        if marginal <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbability(marginal));
        }
        let mut all = given.to_vec();
        all.push(target.clone());
        Ok(self.joint_probability(&all)? / marginal)
    }

    /// Outcome distribution of a single pointer.
    pub fn pointer_distribution(&self, label: &str) -> Result<Vec<f64>> {
        let n = self.step(label)?.pointer.outcome_indices.len();
        (0..n).map(|i| self.probability(&Event::new(label, i))).collect()
    }

    /// Reduced state of the measured system (all pointers traced out).
    pub fn reduced_system_state(&self) -> Result<DensityOperator> {
        let pointers = self.pointer_labels();
        if pointers.is_empty() {
            return Err(Error::NoMeasurement);
        }
        reduced_from_vector(&self.state, &pointers)
    }

    /// Reduced state of one pointer.
    pub fn reduced_pointer_state(&self, label: &str) -> Result<DensityOperator> {
        self.step(label)?;
        let traced: Vec<&str> = self.space().labels().into_iter().filter(|l| *l != label).collect();
        reduced_from_vector(&self.state, &traced)
    }
}

/// Orthonormal eigenvectors of a Hermitian observable, ordered by descending
/// eigenvalue.
pub fn eigenbasis_of(observable: &LinOp) -> Result<Vec<DVector<C64>>> {
    let h = observable.hermiticity_residual();
    if h >= DEFAULT_TOLERANCE {
        return Err(Error::NotHermitian(h));
    }
    let eig = nalgebra::SymmetricEigen::new(observable.matrix().clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    Ok(order.into_iter().map(|i| eig.eigenvectors.column(i).into_owned()).collect())
}

/// `|z+⟩ = (1, 0)`, `|z−⟩ = (0, 1)`.
pub fn spin_z_basis() -> [DVector<C64>; 2] {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    [DVector::from_vec(vec![one, zero]), DVector::from_vec(vec![zero, one])]
}

/// `|x±⟩ = (|z+⟩ ± |z−⟩)/√2` from an orthonormal pair `(|z+⟩, |z−⟩)`.
pub fn spin_basis_rotation(basis: &[DVector<C64>]) -> Result<[DVector<C64>; 2]> {
    if basis.len() != 2 || basis[0].len() != basis[1].len() {
        return Err(Error::DimensionMismatch { expected: 2, found: basis.len() });
    }
    let (a, b) = (&basis[0], &basis[1]);
    let residual = (a.norm() - 1.0).abs().max((b.norm() - 1.0).abs()).max(a.dotc(b).norm());
    if residual > DEFAULT_TOLERANCE {
        return Err(Error::NonOrthonormal(residual));
    }
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok([(a + b) * s, (a - b) * s])
}

/// The two answers to "what is the joint distribution of a first and a
/// repeated measurement": one from the full chain, one from treating reduced
/// states as if they were the states of the subsystems.
#[derive(Debug, Clone, Serialize)]
pub struct ChainContrast {
    pub first_pointer: String,
    pub repeat_pointer: String,
    /// `flawed[k][l] = pr(first = k) · pr(repeat = l)`, from reduced states.
    pub flawed_joint: Vec<Vec<f64>>,
    /// Joint probabilities from the full entangled chain.
    pub true_joint: Vec<Vec<f64>>,
    pub flawed_first_marginal: Vec<f64>,
    pub flawed_repeat_marginal: Vec<f64>,
    pub true_first_marginal: Vec<f64>,
    pub true_repeat_marginal: Vec<f64>,
    pub max_discrepancy: f64,
    pub disagrees: bool,
}

/// Runs the reduced-state pipeline next to the true chain.
///
/// The flawed route traces the pointers out, restarts a repeated measurement
/// of the first step's observable from the reduced system state with a fresh
/// pointer, and multiplies the resulting pointer marginals. The true route
/// appends the same repeated measurement to the full chain.
pub fn reduced_chain_predictor(chain: &MeasurementChain) -> Result<ChainContrast> {
    let first = chain.steps.first().ok_or(Error::NoMeasurement)?;
    let first_label = first.pointer.label().to_string();
    let mut repeat_label = format!("{first_label}.repeat");
    while chain.space().position(&repeat_label).is_some() {
        repeat_label.push('\'');
    }
    let repeat_pointer = first.pointer.relabeled(repeat_label.clone());

    // Flawed route.
    let rho_s = chain.reduced_system_state()?;
    let rho_m1 = chain.reduced_pointer_state(&first_label)?;
    let flawed_first: Vec<f64> = first.pointer.outcome_indices.iter().map(|&o| rho_m1.element(o, o).re).collect();
    let ready = DensityOperator::pure(&repeat_pointer.ready_state()?);
    let rho0 = rho_s.tensor(&ready)?;
    let u = coupling_matrix(&first.eigenbasis, 1, &repeat_pointer);
    let rho2 = &u * rho0.matrix() * u.adjoint();
    let rho2 = LinOp::new(rho0.space().clone(), rho2)?;
    let system_labels = chain.system_space().labels();
    let rho_m2 = crate::reduction::partial_trace_op(&rho2, &system_labels)?;
    let flawed_repeat: Vec<f64> = repeat_pointer.outcome_indices.iter().map(|&o| rho_m2.matrix()[(o, o)].re).collect();
    let flawed_joint: Vec<Vec<f64>> = flawed_first
        .iter()
        .map(|&pk| flawed_repeat.iter().map(|&pl| pk * pl).collect())
        .collect();

    // True route.
    let extended = chain.premeasure(&first.observable, &first.eigenbasis, repeat_pointer)?;
    let n = first.eigenbasis.len();
    let mut true_joint = vec![vec![0.0; n]; n];
    for (k, row) in true_joint.iter_mut().enumerate() {
        for (l, cell) in row.iter_mut().enumerate() {
            *cell = extended.joint_probability(&[Event::new(&first_label, k), Event::new(&repeat_label, l)])?;
        }
    }
    let true_first = extended.pointer_distribution(&first_label)?;
    let true_repeat = extended.pointer_distribution(&repeat_label)?;

    let max_discrepancy = flawed_joint
        .iter()
        .flatten()
        .zip(true_joint.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ChainContrast {
        first_pointer: first_label,
        repeat_pointer: repeat_label,
        flawed_joint,
        true_joint,
        flawed_first_marginal: flawed_first,
        flawed_repeat_marginal: flawed_repeat,
        true_first_marginal: true_first,
        true_repeat_marginal: true_repeat,
        max_discrepancy,
        disagrees: max_discrepancy > DEFAULT_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::pauli;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn spin(cp: C64, cm: C64) -> StateVector {
        StateVector::from_slice(SpaceSpec::single("S", 2).unwrap(), &[cp, cm]).unwrap()
    }

    fn sz() -> LinOp {
        pauli::sigma_z("S").unwrap()
    }

    fn sx() -> LinOp {
        pauli::sigma_x("S").unwrap()
    }

    fn measure_z(chain: &MeasurementChain, label: &str) -> MeasurementChain {
        chain.premeasure(&sz(), &spin_z_basis(), PointerFactor::standard(label, 2).unwrap()).unwrap()
    }

    fn measure_x(chain: &MeasurementChain, label: &str) -> MeasurementChain {
        let xb = spin_basis_rotation(&spin_z_basis()).unwrap();
        chain.premeasure(&sx(), &xb, PointerFactor::standard(label, 2).unwrap()).unwrap()
    }

    #[test]
    fn pointer_validation() {
        assert!(PointerFactor::standard("p", 2).is_ok());
        assert!(matches!(PointerFactor::new("p", 2, 0, vec![1, 2]), Err(Error::InvalidPointer(_))));
        assert!(matches!(PointerFactor::new("p", 3, 1, vec![1, 2]), Err(Error::InvalidPointer(_))));
        assert!(matches!(PointerFactor::new("p", 3, 0, vec![1, 1]), Err(Error::InvalidPointer(_))));
        assert!(PointerFactor::new("p", 4, 3, vec![0, 2]).is_ok());
    }

    #[test]
    fn first_premeasurement_correlates_pointer() {
        let (cp, cm) = (c(0.6), C64::new(0.0, 0.8));
        let chain = measure_z(&MeasurementChain::new(spin(cp, cm)), "Pz");
        // Expected: cp |z+⟩|p+⟩ + cm |z−⟩|p−⟩ with p± at levels 1, 2.
        let space = chain.space();
        let mut expect = vec![c(0.0); 6];
        expect[space.flat_index(&[0, 1])] = cp;
        expect[space.flat_index(&[1, 2])] = cm;
        for (a, b) in chain.state().amplitudes().iter().zip(&expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn eigenstate_input_is_certain() {
        let chain = measure_z(&MeasurementChain::new(spin(c(1.0), c(0.0))), "Pz");
        assert!((chain.probability(&Event::new("Pz", 0)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(chain.probability(&Event::new("Pz", 1)).unwrap(), 0.0);
    }

    #[test]
    fn second_premeasurement_produces_four_term_state() {
        let (cp, cm) = (c(0.6), c(0.8));
        let chain = measure_x(&measure_z(&MeasurementChain::new(spin(cp, cm)), "Pz"), "Px");
        let xb = spin_basis_rotation(&spin_z_basis()).unwrap();
        let amps = chain.state().amplitudes();
        let space = chain.space();
        let s = FRAC_1_SQRT_2;
        // (x outcome, z pointer level, x pointer level) -> coefficient
        let terms = [
            (0usize, 1usize, 1usize, cp * s),
            (0, 2, 1, cm * s),
            (1, 1, 2, cp * s),
            (1, 2, 2, -cm * s),
        ];
        let mut total = 0.0;
        for (xi, pz, px) in index_triples() {
            // ⟨x_xi| ⊗ ⟨pz| ⊗ ⟨px| Ψ
            let amp: C64 = (0..2)
                .map(|zs| xb[xi][zs].conj() * amps[space.flat_index(&[zs, pz, px])])
                .sum();
            let expect = terms
                .iter()
                .find(|t| (t.0, t.1, t.2) == (xi, pz, px))
                .map(|t| t.3)
                .unwrap_or(c(0.0));
            assert!((amp - expect).norm() < 1e-14, "({xi},{pz},{px}) {amp} vs {expect}");
            total += amp.norm_sqr();
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    fn index_triples() -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for x in 0..2 {
            for z in 0..3 {
                for p in 0..3 {
                    v.push((x, z, p));
                }
            }
        }
        v
    }

    #[test]
    fn consecutive_z_then_x_probabilities() {
        let (cp, cm) = (c(0.6), c(0.8));
        let chain = measure_x(&measure_z(&MeasurementChain::new(spin(cp, cm)), "Pz"), "Px");
        let pzp = Event::new("Pz", 0);
        let pxp = Event::new("Px", 0);
        assert!((chain.joint_probability(&[pxp.clone(), pzp.clone()]).unwrap() - 0.18).abs() < 1e-14);
        assert!((chain.probability(&pzp).unwrap() - 0.36).abs() < 1e-14);
        assert!((chain.conditional_probability(&pxp, &[pzp]).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn repeated_z_is_perfectly_correlated() {
        let chain = measure_z(&measure_z(&MeasurementChain::new(spin(c(0.6), c(0.8))), "P1"), "P2");
        let given = [Event::new("P1", 0)];
        assert!((chain.conditional_probability(&Event::new("P2", 0), &given).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(chain.conditional_probability(&Event::new("P2", 1), &given).unwrap(), 0.0);
    }

    #[test]
    fn zero_probability_condition_is_an_error() {
        let chain = measure_z(&measure_z(&MeasurementChain::new(spin(c(1.0), c(0.0))), "P1"), "P2");
        let err = chain.conditional_probability(&Event::new("P2", 0), &[Event::new("P1", 1)]).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability(_)));
    }

    #[test]
    fn premeasure_errors() {
        let chain = measure_z(&MeasurementChain::new(spin(c(0.6), c(0.8))), "P");
        let dup = chain.premeasure(&sz(), &spin_z_basis(), PointerFactor::standard("P", 2).unwrap());
        assert!(matches!(dup, Err(Error::LabelCollision(_))));
        let skew = [spin_z_basis()[0].clone(), spin_z_basis()[0].clone()];
        let bad = chain.premeasure(&sz(), &skew, PointerFactor::standard("Q", 2).unwrap());
        assert!(matches!(bad, Err(Error::NonOrthonormal(_))));
        let short = chain.premeasure(&sz(), &spin_z_basis(), PointerFactor::standard("Q", 1).unwrap());
        assert!(matches!(short, Err(Error::IncompleteOutcomes { .. })));
        let xb = spin_basis_rotation(&spin_z_basis()).unwrap();
        let wrong = chain.premeasure(&sz(), &xb, PointerFactor::standard("Q", 2).unwrap());
        assert!(matches!(wrong, Err(Error::NotEigenvector { .. })));
        assert!(matches!(chain.probability(&Event::new("nope", 0)), Err(Error::UnknownPointer(_))));
        assert!(matches!(chain.probability(&Event::new("P", 5)), Err(Error::UnknownOutcome { .. })));
    }

    #[test]
    fn coupling_is_unitary_and_self_inverse() {
        let chain = MeasurementChain::new(spin(c(0.6), c(0.8)));
        let u = chain
            .coupling_unitary(&sz(), &spin_z_basis(), &PointerFactor::new("P", 4, 2, vec![0, 3]).unwrap())
            .unwrap();
        let id = LinOp::identity(u.space());
        assert!(tensor::frobenius_distance(&u.compose(&u.dagger()).unwrap(), &id).unwrap() < 1e-14);
        assert!(tensor::frobenius_distance(&u.compose(&u).unwrap(), &id).unwrap() < 1e-14);
    }

    #[test]
    fn contrast_for_repeated_measurement() {
        let chain = measure_z(&MeasurementChain::new(spin(c(0.6), c(0.8))), "Pz");
        let contrast = reduced_chain_predictor(&chain).unwrap();
        assert!((contrast.flawed_joint[0][1] - 0.2304).abs() < 1e-14);
        assert!(contrast.true_joint[0][1].abs() < 1e-15);
        assert!((contrast.true_joint[0][0] - 0.36).abs() < 1e-14);
        assert!(contrast.disagrees);
        for (a, b) in contrast.flawed_repeat_marginal.iter().zip([0.36, 0.64]) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in contrast.flawed_repeat_marginal.iter().zip(&contrast.true_repeat_marginal) {
            assert!((a - b).abs() < 1e-14);
        }

        let certain = measure_z(&MeasurementChain::new(spin(c(1.0), c(0.0))), "Pz");
        let contrast = reduced_chain_predictor(&certain).unwrap();
        assert!(!contrast.disagrees);

        let bare = MeasurementChain::new(spin(c(1.0), c(0.0)));
        assert!(matches!(reduced_chain_predictor(&bare), Err(Error::NoMeasurement)));
    }

    #[test]
    fn rotation_coefficients_and_involution() {
        let z = spin_z_basis();
        let x = spin_basis_rotation(&z).unwrap();
        let s = FRAC_1_SQRT_2;
        // ⟨x±|z+⟩ = 1/√2, ⟨x+|z−⟩ = 1/√2, ⟨x−|z−⟩ = −1/√2
        assert!((x[0].dotc(&z[0]) - c(s)).norm() < 1e-15);
        assert!((x[1].dotc(&z[0]) - c(s)).norm() < 1e-15);
        assert!((x[0].dotc(&z[1]) - c(s)).norm() < 1e-15);
        assert!((x[1].dotc(&z[1]) - c(-s)).norm() < 1e-15);
        let back = spin_basis_rotation(&x).unwrap();
        for (a, b) in back.iter().zip(&z) {
            assert!((a - b).norm() < 1e-15);
        }
        let bad = [z[0].clone(), z[0].clone()];
        assert!(matches!(spin_basis_rotation(&bad), Err(Error::NonOrthonormal(_))));
    }

    #[test]
    fn eigenbasis_ordering() {
        let b = eigenbasis_of(&sz()).unwrap();
        assert!((b[0][0].norm() - 1.0).abs() < 1e-15);
        let b = eigenbasis_of(&sx()).unwrap();
        let v = &b[0];
        assert!(((sx().matrix() * v) - v).norm() < 1e-14);
    }
}
