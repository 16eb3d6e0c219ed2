//! A qubit coupled to eight bath spins: its reduced coherence decays while
//! the global state stays pure.

use std::f64::consts::FRAC_1_SQRT_2;

use redstates::decoherence::{self, ConvergenceOptions, DecoherenceTime, SpinBathOptions};
use redstates::tensor::{pauli, C64};

fn main() -> redstates::Result<()> {
    let couplings = decoherence::seeded_couplings(8, 42);
    let model = decoherence::build_spin_bath(8, &couplings, SpinBathOptions::default())?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let times: Vec<f64> = (0..100).map(|i| 50.0 * i as f64 / 99.0).collect();
    let traj = decoherence::run_trajectory(&model, [h, h], &times)?;

    println!("couplings: {couplings:.3?}");
    println!("{:>8} {:>10} {:>10} {:>10}", "t", "|rho01|", "purity", "closed");
    for i in (0..traj.len()).step_by(10) {
        let t = traj.times()[i];
        println!(
            "{t:8.3} {:10.6} {:10.6} {:10.6}",
            traj.offdiag_magnitudes()[i],
            traj.purity_series()[i],
            model.closed_form_coherence([h, h], t).unwrap()
        );
    }
    match decoherence::decoherence_time(&traj, (-1f64).exp())? {
        DecoherenceTime::Reached(t) => println!("|rho01| falls below 1/e of its start at t = {t:.3}"),
        DecoherenceTime::NotReached => println!("|rho01| never fell below 1/e of its start"),
    }
    let observables = vec![("sx".to_string(), pauli::sigma_x("S")?), ("sz".to_string(), pauli::sigma_z("S")?)];
    for e in decoherence::expectation_convergence(&traj, &observables, ConvergenceOptions::default())? {
        println!("<{}>: start {:.4}, late mean {:.4}, fluctuation {:.4}, converged {}", e.observable, e.initial_value, e.late_mean, e.fluctuation, e.converged);
    }

    // Keeping one bath spin alongside the system changes what "reduced" means.
    let pair = decoherence::run_trajectory_partitioned(&model, [h, h], &times[..3], &["S", "E1"])?;
    println!("reduced state on {:?} has dimension {}", pair.retained_labels(), pair.reduced_states()[0].space().dim());
    Ok(())
}
