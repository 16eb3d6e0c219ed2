//! Central spin coupled to a bath of spins.
//!
//! The default model is `H = Σ_k (g_k/2) σz^S ⊗ σz^(k)` with zero
//! self-Hamiltonians and every bath spin prepared in `(|↑⟩ + |↓⟩)/√2`. The
//! closed composite system evolves unitarily; the reduced state of the central
//! spin loses its off-diagonal element and, for commensurate couplings, gets it
//! back.
//!
//! For bath amplitudes `(a_k, b_k)` and a diagonal system Hamiltonian the
//! coherence has the closed form
//!
//! ```text
//! |ρ01(t)| = |c+ c−| · Π_k | |a_k|² e^{-i g_k t} + |b_k|² e^{i g_k t} |
//! ```
//!
//! which reduces to `|c+ c−| Π_k |cos(g_k t)|` for the default bath.

use rand::Rng;
use rand_distr::Uniform;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{Hamiltonian, Spectral};
use crate::error::{Error, Result};
use crate::random::rng_from_seed;
use crate::reduction::reduced_from_vector;
use crate::states::{expectation, purity, DensityOperator, Provenance, StateVector};
use crate::tensor::{LinOp, SpaceSpec, C64, DEFAULT_TOLERANCE};

pub const SYSTEM_LABEL: &str = "S";
pub const MAX_BATH_SIZE: usize = 11;
pub const COUPLING_RANGE: (f64, f64) = (0.5, 1.5);

pub fn bath_label(k: usize) -> String {
    format!("E{}", k + 1)
}

/// Couplings drawn uniformly from [0.5, 1.5) with a seeded generator.
pub fn seeded_couplings(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let dist = Uniform::new(COUPLING_RANGE.0, COUPLING_RANGE.1).expect("valid range");
    (0..n).map(|_| rng.sample(dist)).collect()
}

#[derive(Debug, Clone, Default)]
pub struct SpinBathOptions {
    /// Central-spin Hamiltonian on the `S` factor; zero when absent.
    pub system_hamiltonian: Option<LinOp>,
    /// Initial `(up, down)` amplitudes per bath spin; `(1/√2, 1/√2)` when absent.
    pub bath_amplitudes: Option<Vec<[C64; 2]>>,
}

#[derive(Debug, Clone)]
pub struct SpinBathModel {
    couplings: Vec<f64>,
    system_hamiltonian: LinOp,
    bath_amplitudes: Vec<[C64; 2]>,
    hamiltonian: Hamiltonian,
}

fn zz_interaction(space: &SpaceSpec, couplings: &[f64]) -> Result<LinOp> {
    let d = space.dim();
    let n = couplings.len();
    let diag: Vec<f64> = (0..d)
        .map(|idx| {
            let bits = space.multi_index(idx);
            let s = if bits[0] == 0 { 1.0 } else { -1.0 };
            (0..n)
                .map(|k| {
                    let b = if bits[k + 1] == 0 { 1.0 } else { -1.0 };
                    0.5 * couplings[k] * s * b
                })
                .sum()
        })
        .collect();
    LinOp::from_real_diagonal(space, &diag)
}

/// Assembles the central-spin model on `S ⊗ E1 ⊗ ... ⊗ EN`.
pub fn build_spin_bath(n: usize, couplings: &[f64], options: SpinBathOptions) -> Result<SpinBathModel> {
    if n == 0 {
        return Err(Error::InvalidBath("bath needs at least one spin".into()));
    }
    if couplings.len() != n {
        return Err(Error::InvalidBath(format!("{} couplings for {n} bath spins", couplings.len())));
    }
    if let Some(g) = couplings.iter().find(|g| !g.is_finite()) {
        return Err(Error::InvalidBath(format!("non-finite coupling {g}")));
    }
    let space = SpaceSpec::new(
        std::iter::once((SYSTEM_LABEL.to_string(), 2)).chain((0..n).map(|k| (bath_label(k), 2))),
    )?;
    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let bath_amplitudes = options.bath_amplitudes.unwrap_or_else(|| vec![[half, half]; n]);
    if bath_amplitudes.len() != n {
        return Err(Error::InvalidBath(format!("{} bath amplitude pairs for {n} spins", bath_amplitudes.len())));
    }
    for a in &bath_amplitudes {
        let dev = (a[0].norm_sqr() + a[1].norm_sqr() - 1.0).abs();
        if dev > DEFAULT_TOLERANCE {
            return Err(Error::NotNormalized(dev));
        }
    }
    let system_space = space.restrict(&[SYSTEM_LABEL])?;
    let system_hamiltonian = match options.system_hamiltonian {
        Some(h) => h.relabel(&system_space)?,
        None => LinOp::zeros(&system_space),
    };
    let bath_labels = space.complement(&[SYSTEM_LABEL]);
    let bath_space = space.restrict(&bath_labels)?;
    let hamiltonian = Hamiltonian::new(
        &space,
        system_hamiltonian.clone(),
        LinOp::zeros(&bath_space),
        zz_interaction(&space, couplings)?,
    )?;
    Ok(SpinBathModel {
        couplings: couplings.to_vec(),
        system_hamiltonian,
        bath_amplitudes,
        hamiltonian,
    })
}

impl SpinBathModel {
    pub fn bath_size(&self) -> usize {
        self.couplings.len()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn space(&self) -> &SpaceSpec {
        self.hamiltonian.space()
    }

    pub fn bath_labels(&self) -> Vec<String> {
        (0..self.bath_size()).map(bath_label).collect()
    }

    pub fn bath_amplitudes(&self) -> &[[C64; 2]] {
        &self.bath_amplitudes
    }

    /// `(c+|↑⟩ + c−|↓⟩) ⊗ bath`.
    pub fn initial_state(&self, system: [C64; 2]) -> Result<StateVector> {
        let mut psi = StateVector::from_slice(SpaceSpec::single(SYSTEM_LABEL, 2)?, &system)?;
        for (k, a) in self.bath_amplitudes.iter().enumerate() {
            psi = psi.tensor(&StateVector::from_slice(SpaceSpec::single(bath_label(k), 2)?, a)?)?;
        }
        Ok(psi)
    }

    fn system_hamiltonian_is_diagonal(&self) -> bool {
        let m = self.system_hamiltonian.matrix();
        m[(0, 1)] == C64::new(0.0, 0.0) && m[(1, 0)] == C64::new(0.0, 0.0)
    }

    /// Closed-form `|ρ01(t)|`, available when the system Hamiltonian is diagonal.
    pub fn closed_form_coherence(&self, system: [C64; 2], t: f64) -> Option<f64> {
        if !self.system_hamiltonian_is_diagonal() {
            return None;
        }
        let base = (system[0] * system[1].conj()).norm();
        let factor: f64 = self
            .couplings
            .iter()
            .zip(&self.bath_amplitudes)
            .map(|(&g, a)| {
                (C64::from_polar(a[0].norm_sqr(), -g * t) + C64::from_polar(a[1].norm_sqr(), g * t)).norm()
            })
            .product();
        Some(base * factor)
    }
}

/// Reduced-state samples along an exactly evolved closed trajectory.
#[derive(Debug, Clone)]
pub struct DecoherenceTrajectory {
    times: Vec<f64>,
    reduced_states: Vec<DensityOperator>,
    offdiag_magnitudes: Vec<f64>,
    purity_series: Vec<f64>,
    full_purity_series: Vec<f64>,
    initial: [C64; 2],
    retained: Vec<String>,
}

impl DecoherenceTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Reduced states on the retained factors, provenance `reduced`.
    pub fn reduced_states(&self) -> &[DensityOperator] {
        &self.reduced_states
    }

    /// `|⟨0|ρ^r(t)|1⟩|`.
    pub fn offdiag_magnitudes(&self) -> &[f64] {
        &self.offdiag_magnitudes
    }

    /// Purity of the reduced state.
    pub fn purity_series(&self) -> &[f64] {
        &self.purity_series
    }

    /// Purity of the full closed-system state.
    pub fn full_purity_series(&self) -> &[f64] {
        &self.full_purity_series
    }

    pub fn initial_amplitudes(&self) -> [C64; 2] {
        self.initial
    }

    pub fn retained_labels(&self) -> Vec<&str> {
        self.retained.iter().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest drift of any reduced diagonal entry away from its initial value.
    pub fn diagonal_drift(&self) -> f64 {
        let Some(first) = self.reduced_states.first() else { return 0.0 };
        let d = first.space().dim();
        self.reduced_states
            .iter()
            .flat_map(|r| (0..d).map(move |i| (r.element(i, i) - first.element(i, i)).norm()))
            .fold(0.0, f64::max)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("no sample times".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidTimes("non-finite sample time".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidTimes("sample times must be sorted".into()));
    }
    Ok(())
}

/// Evolves `(c+, c−) ⊗ bath` exactly and traces out the bath at each time.
pub fn run_trajectory(model: &SpinBathModel, system: [C64; 2], times: &[f64]) -> Result<DecoherenceTrajectory> {
    run_trajectory_partitioned(model, system, times, &[SYSTEM_LABEL])
}

/// Same closed evolution, reduced onto an arbitrary set of retained factors.
pub fn run_trajectory_partitioned(
    model: &SpinBathModel,
    system: [C64; 2],
    times: &[f64],
    retained: &[&str],
) -> Result<DecoherenceTrajectory> {
    check_times(times)?;
    let psi0 = model.initial_state(system)?;
    let space = model.space();
    for l in retained {
        space.factor_dim(l)?;
    }
    let traced = space.complement(retained);
    let spectral = Spectral::of(model.hamiltonian().total())?;

    let samples: Vec<(DensityOperator, f64)> = times
        .par_iter()
        .map(|&t| {
            let psi = spectral.evolve_vector(&psi0, t)?;
            let reduced = reduced_from_vector(&psi, &traced)?;
            Ok((reduced, psi.norm().powi(4)))
        })
        .collect::<Result<_>>()?;

    let mut reduced_states = Vec::with_capacity(samples.len());
    let mut full_purity_series = Vec::with_capacity(samples.len());
    for (r, p) in samples {
        reduced_states.push(r);
        full_purity_series.push(p);
    }
    let offdiag_magnitudes = reduced_states
        .iter()
        .map(|r| if r.space().dim() > 1 { r.element(0, 1).norm() } else { 0.0 })
        .collect();
    let purity_series = reduced_states.iter().map(purity).collect();
    Ok(DecoherenceTrajectory {
        times: times.to_vec(),
        reduced_states,
        offdiag_magnitudes,
        purity_series,
        full_purity_series,
        initial: system,
        retained: retained.iter().map(|s| s.to_string()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "time", rename_all = "kebab-case")]
pub enum DecoherenceTime {
    Reached(f64),
    NotReached,
}

/// First sampled time with `|ρ01(t)| ≤ threshold · |ρ01(t_0)|`.
pub fn decoherence_time(traj: &DecoherenceTrajectory, threshold: f64) -> Result<DecoherenceTime> {
    let first = *traj.offdiag_magnitudes.first().ok_or(Error::EmptyWindow)?;
    if first <= 1e-14 {
        return Err(Error::ZeroCoherence);
    }
    Ok(traj
        .times
        .iter()
        .zip(&traj.offdiag_magnitudes)
        .find(|(_, &c)| c <= threshold * first)
        .map(|(&t, _)| DecoherenceTime::Reached(t))
        .unwrap_or(DecoherenceTime::NotReached))
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoherenceReport {
    pub coupling: f64,
    pub revival_time: f64,
    pub initial_coherence: f64,
    pub revived_coherence: f64,
    pub revival_residual: f64,
    pub revived: bool,
    /// `|ρ01(t)|` of the reduced state obtained from the matrix-equal proper
    /// mixture `diag(|c+|², |c−|²) ⊗ ρ_bath(0)`, at the trajectory's times.
    pub proper_mixture_offdiag: Vec<f64>,
    pub proper_mixture_max_offdiag: f64,
    pub proper_mixture_revives: bool,
}

pub const REVIVAL_TOLERANCE: f64 = 1e-8;
pub const PROPER_MIXTURE_TOLERANCE: f64 = 1e-12;

/// Checks the revival at `t = π/g` for equal couplings and contrasts it with a
/// proper mixture that has the decohered reduced matrix from the start.
pub fn recoherence_check(model: &SpinBathModel, traj: &DecoherenceTrajectory) -> Result<RecoherenceReport> {
    let g = model.couplings[0];
    if model.couplings.iter().any(|&x| x != g) {
        return Err(Error::NonCommensurate(model.couplings.clone()));
    }
    if traj.retained_labels() != [SYSTEM_LABEL] {
        return Err(Error::InvalidTracedSet("recoherence needs the central spin retained".into()));
    }
    let system = traj.initial;
    let revival_time = if g == 0.0 { 0.0 } else { std::f64::consts::PI / g.abs() };
    let ends = run_trajectory(model, system, &[0.0, revival_time])?;
    let initial_coherence = ends.offdiag_magnitudes[0];
    let revived_coherence = ends.offdiag_magnitudes[1];
    let revival_residual = (revived_coherence - initial_coherence).abs();

    // The proper mixture is a mixture of the two product preparations
    // |z±⟩ ⊗ bath; by linearity each branch evolves on its own.
    let weights = [system[0].norm_sqr(), system[1].norm_sqr()];
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let branches = [model.initial_state([one, zero])?, model.initial_state([zero, one])?];
    let spectral = Spectral::of(model.hamiltonian().total())?;
    let traced = model.space().complement(&[SYSTEM_LABEL]);
    let proper_mixture_offdiag: Vec<f64> = traj
        .times
        .par_iter()
        .map(|&t| {
            let mut rho01 = zero;
            for (w, b) in weights.iter().zip(&branches) {
                let r = reduced_from_vector(&spectral.evolve_vector(b, t)?, &traced)?;
                rho01 += r.element(0, 1) * *w;
            }
            Ok(rho01.norm())
        })
        .collect::<Result<_>>()?;
    let proper_mixture_max_offdiag = proper_mixture_offdiag.iter().copied().fold(0.0, f64::max);
    Ok(RecoherenceReport {
        coupling: g,
        revival_time,
        initial_coherence,
        revived_coherence,
        revival_residual,
        revived: revival_residual < REVIVAL_TOLERANCE,
        proper_mixture_offdiag,
        proper_mixture_max_offdiag,
        proper_mixture_revives: proper_mixture_max_offdiag >= PROPER_MIXTURE_TOLERANCE,
    })
}

/// The comparison state `diag(|c+|², |c−|²) ⊗ ρ_bath(0)` as an explicit
/// density operator, tagged as a proper mixture.
pub fn proper_mixture_comparison_state(model: &SpinBathModel, system: [C64; 2]) -> Result<DensityOperator> {
    let s = SpaceSpec::single(SYSTEM_LABEL, 2)?;
    let up = DensityOperator::pure(&StateVector::basis(&s, 0)?);
    let down = DensityOperator::pure(&StateVector::basis(&s, 1)?);
    let mix = crate::states::proper_mixture(&[system[0].norm_sqr(), system[1].norm_sqr()], &[up, down])?;
    let mut bath: Option<StateVector> = None;
    for (k, a) in model.bath_amplitudes.iter().enumerate() {
        let spin = StateVector::from_slice(SpaceSpec::single(bath_label(k), 2)?, a)?;
        bath = Some(match bath {
            None => spin,
            Some(b) => b.tensor(&spin)?,
        });
    }
    let bath = DensityOperator::pure(&bath.expect("bath has at least one spin"));
    Ok(mix.tensor(&bath)?.with_provenance(Provenance::ProperMixture))
}

#[derive(Debug, Clone, Copy)]
pub struct ConvergenceOptions {
    /// Fraction of the trailing samples forming the late window.
    pub window_fraction: f64,
    /// Relative tolerance on the late-window fluctuation.
    pub epsilon: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { window_fraction: 0.5, epsilon: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    pub observable: String,
    pub initial_value: f64,
    pub late_mean: f64,
    /// Mean absolute deviation from `late_mean` over the late window.
    pub fluctuation: f64,
    /// Reference amplitude: `|initial_value|`, or 1 when that vanishes.
    pub scale: f64,
    pub converged: bool,
}

/// Late-window statistics of `⟨O⟩(t)` for observables on the retained factors.
pub fn expectation_convergence(
    traj: &DecoherenceTrajectory,
    observables: &[(String, LinOp)],
    options: ConvergenceOptions,
) -> Result<Vec<ConvergenceEntry>> {
    let n = traj.len();
    let window = ((n as f64) * options.window_fraction).ceil() as usize;
    if n == 0 || window == 0 {
        return Err(Error::EmptyWindow);
    }
    let window = window.min(n);
    observables
        .iter()
        .map(|(name, o)| {
            let space = traj.reduced_states[0].space();
            let o = if o.space() == space { o.clone() } else { o.relabel(space)? };
            let values: Vec<f64> = traj.reduced_states.iter().map(|r| expectation(r, &o)).collect::<Result<_>>()?;
            let late = &values[n - window..];
            let late_mean = late.iter().sum::<f64>() / window as f64;
            let fluctuation = late.iter().map(|v| (v - late_mean).abs()).sum::<f64>() / window as f64;
            let initial_value = values[0];
            let scale = if initial_value.abs() > 1e-12 { initial_value.abs() } else { 1.0 };
            Ok(ConvergenceEntry {
                observable: name.clone(),
                initial_value,
                late_mean,
                fluctuation,
                scale,
                converged: fluctuation < options.epsilon * scale,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;
    use crate::reduction::partial_trace;
    use crate::tensor::{embed, pauli};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn half() -> [C64; 2] {
        [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
    }

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn single_spin_hamiltonian_is_parity_diagonal() {
        let model = build_spin_bath(1, &[1.0], SpinBathOptions::default()).unwrap();
        let h = model.hamiltonian().total();
        let expect = [0.5, -0.5, -0.5, 0.5];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert_eq!(h.matrix()[(i, j)], C64::new(e, 0.0));
            }
        }
    }

    #[test]
    fn interaction_matches_embedded_sum() {
        let g = [0.7, 1.3, 0.9];
        let model = build_spin_bath(3, &g, SpinBathOptions::default()).unwrap();
        let space = model.space();
        let mut oracle = LinOp::zeros(space);
        for (k, gk) in g.iter().enumerate() {
            let zs = embed(&pauli::sigma_z("x").unwrap(), space, SYSTEM_LABEL).unwrap();
            let zk = embed(&pauli::sigma_z("x").unwrap(), space, &bath_label(k)).unwrap();
            oracle = oracle.add(&zs.compose(&zk).unwrap().scale(C64::new(gk / 2.0, 0.0))).unwrap();
        }
        assert!(crate::tensor::frobenius_distance(&oracle, model.hamiltonian().total()).unwrap() < 1e-15);
    }

    #[test]
    fn bath_validation() {
        assert!(matches!(build_spin_bath(0, &[], SpinBathOptions::default()), Err(Error::InvalidBath(_))));
        assert!(matches!(build_spin_bath(2, &[1.0], SpinBathOptions::default()), Err(Error::InvalidBath(_))));
        assert!(matches!(
            build_spin_bath(12, &vec![1.0; 12], SpinBathOptions::default()),
            Err(Error::DimensionLimit { .. })
        ));
        let model = build_spin_bath(8, &seeded_couplings(8, 7), SpinBathOptions::default()).unwrap();
        assert_eq!(model.space().dim(), 512);
        assert!(model.hamiltonian().total().is_hermitian(1e-15));
    }

    #[test]
    fn seeded_couplings_reproducible_and_in_range() {
        let a = seeded_couplings(8, 42);
        assert_eq!(a, seeded_couplings(8, 42));
        assert_ne!(a, seeded_couplings(8, 43));
        assert!(a.iter().all(|g| (0.5..1.5).contains(g)));
    }

    #[test]
    fn initial_and_zero_coherence() {
        let model = build_spin_bath(1, &[1.0], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&model, half(), &[0.0, FRAC_PI_2]).unwrap();
        assert!((traj.offdiag_magnitudes()[0] - 0.5).abs() < 1e-15);
        assert!(traj.offdiag_magnitudes()[1] < 1e-15);
    }

    #[test]
    fn vector_route_matches_density_evolution() {
        let g = [0.8, 1.1];
        let model = build_spin_bath(2, &g, SpinBathOptions::default()).unwrap();
        let system = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let times = [0.0, 0.4, 1.3, 2.9];
        let traj = run_trajectory(&model, system, &times).unwrap();
        let rho0 = DensityOperator::pure(&model.initial_state(system).unwrap());
        for (t, r) in times.iter().zip(traj.reduced_states()) {
            let full = evolve(&rho0, model.hamiltonian(), *t).unwrap();
            let oracle = partial_trace(&full, &["E1", "E2"]).unwrap();
            assert!(crate::tensor::frobenius_distance(oracle.op(), r.op()).unwrap() < 1e-12);
            let cf = model.closed_form_coherence(system, *t).unwrap();
            assert!((cf - 0.48 * (g[0] * t).cos().abs() * (g[1] * t).cos().abs()).abs() < 1e-14);
            assert!((r.element(0, 1).norm() - cf).abs() < 1e-12);
        }
    }

    #[test]
    fn decoherence_time_cases() {
        let quiet = build_spin_bath(2, &[0.0, 0.0], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&quiet, half(), &linspace(0.0, 5.0, 51)).unwrap();
        assert_eq!(decoherence_time(&traj, (-1f64).exp()).unwrap(), DecoherenceTime::NotReached);

        let one = build_spin_bath(1, &[1.0], SpinBathOptions::default()).unwrap();
        let grid = linspace(0.0, 2.0, 20001);
        let traj = run_trajectory(&one, half(), &grid).unwrap();
        let DecoherenceTime::Reached(t) = decoherence_time(&traj, (-1f64).exp()).unwrap() else {
            panic!("threshold not crossed");
        };
        // arccos(1/e) = 1.19401...
        assert!((t - (-1f64).exp().acos()).abs() <= 1e-4, "{t}");

        let certain = run_trajectory(&one, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &grid[..3]).unwrap();
        assert!(matches!(decoherence_time(&certain, 0.5), Err(Error::ZeroCoherence)));
    }

    #[test]
    fn more_spins_decohere_sooner() {
        let grid = linspace(0.0, 2.0, 401);
        let mut last = f64::INFINITY;
        for n in 1..=5 {
            let model = build_spin_bath(n, &vec![1.0; n], SpinBathOptions::default()).unwrap();
            let traj = run_trajectory(&model, half(), &grid).unwrap();
            let DecoherenceTime::Reached(t) = decoherence_time(&traj, (-1f64).exp()).unwrap() else {
                panic!("not reached for n = {n}");
            };
            assert!(t < last, "n = {n}: {t} !< {last}");
            last = t;
        }
    }

    #[test]
    fn recoherence_and_proper_mixture() {
        let model = build_spin_bath(4, &[1.0; 4], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&model, half(), &linspace(0.0, 2.0 * PI, 64)).unwrap();
        let report = recoherence_check(&model, &traj).unwrap();
        assert!(report.revived);
        assert!((report.revived_coherence - 0.5).abs() < 1e-8);
        assert!(!report.proper_mixture_revives);
        assert!(report.proper_mixture_max_offdiag < 1e-12);

        let other = build_spin_bath(2, &[1.0, 1.1], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&other, half(), &[0.0]).unwrap();
        assert!(matches!(recoherence_check(&other, &traj), Err(Error::NonCommensurate(_))));

        let quiet = build_spin_bath(2, &[0.0, 0.0], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&quiet, half(), &[0.0, 1.0]).unwrap();
        let r = recoherence_check(&quiet, &traj).unwrap();
        assert!(r.revived && r.revival_time == 0.0);
        assert!(traj.offdiag_magnitudes().iter().all(|c| (c - 0.5).abs() < 1e-15));
    }

    #[test]
    fn proper_mixture_state_evolves_without_coherence() {
        let model = build_spin_bath(2, &[1.0, 1.0], SpinBathOptions::default()).unwrap();
        let system = [C64::new(0.6, 0.0), C64::new(0.8, 0.0)];
        let mix = proper_mixture_comparison_state(&model, system).unwrap();
        mix.validate().unwrap();
        let traj = run_trajectory(&model, system, &linspace(0.0, 4.0, 9)).unwrap();
        let report = recoherence_check(&model, &traj).unwrap();
        for (t, c) in traj.times().iter().zip(&report.proper_mixture_offdiag) {
            let full = evolve(&mix, model.hamiltonian(), *t).unwrap();
            let red = partial_trace(&full, &["E1", "E2"]).unwrap();
            assert!(red.element(0, 1).norm() < 1e-14);
            assert!((red.element(0, 1).norm() - c).abs() < 1e-14);
            assert_eq!(full.provenance(), Provenance::ProperMixture);
        }
    }

    #[test]
    fn convergence_cases() {
        let z = pauli::sigma_z(SYSTEM_LABEL).unwrap();
        let x = pauli::sigma_x(SYSTEM_LABEL).unwrap();
        let obs = vec![("sz".to_string(), z), ("sx".to_string(), x)];

        let one = build_spin_bath(1, &[1.0], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&one, half(), &linspace(0.0, 50.0, 1001)).unwrap();
        let rep = expectation_convergence(&traj, &obs, ConvergenceOptions::default()).unwrap();
        assert!(rep[0].converged && rep[0].fluctuation < 1e-12);
        assert!(!rep[1].converged);

        let empty = ConvergenceOptions { window_fraction: 0.0, ..Default::default() };
        assert!(matches!(expectation_convergence(&traj, &obs, empty), Err(Error::EmptyWindow)));
    }

    #[test]
    fn partition_is_relative() {
        let model = build_spin_bath(2, &[1.0, 0.6], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory_partitioned(&model, half(), &[0.0, 1.0], &["E1"]).unwrap();
        assert_eq!(traj.retained_labels(), vec!["E1"]);
        // Bath spin E1 starts in |+⟩ and dephases through its coupling to S.
        assert!((traj.offdiag_magnitudes()[0] - 0.5).abs() < 1e-15);
        assert!((traj.offdiag_magnitudes()[1] - 0.5 * 1f64.cos().abs()).abs() < 1e-12);
    }

    #[test]
    fn reduced_purity_drops_while_full_purity_stays() {
        let model = build_spin_bath(3, &[0.9, 1.2, 0.7], SpinBathOptions::default()).unwrap();
        let traj = run_trajectory(&model, half(), &linspace(0.0, 3.0, 31)).unwrap();
        assert!(traj.full_purity_series().iter().all(|p| (p - 1.0).abs() < 1e-12));
        assert!(traj.purity_series()[1..].iter().all(|&p| p < 1.0 - 1e-6));
        assert!(traj.diagonal_drift() < 1e-12);
    }
}
