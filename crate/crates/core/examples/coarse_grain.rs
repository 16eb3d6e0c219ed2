//! The coarse-graining projector: a state is replaced by its reduced state
//! tensored with the maximally mixed state of the traced factor.

use std::f64::consts::FRAC_1_SQRT_2;

use redstates::random::{random_density, rng_from_seed};
use redstates::reduction;
use redstates::states::expectation;
use redstates::tensor::{embed, frobenius_distance, pauli, tensor_product, SpaceSpec, C64};
use redstates::{DensityOperator, StateVector};

fn main() -> redstates::Result<()> {
    let space = SpaceSpec::new([("A", 2), ("B", 3)])?;
    let rho = random_density(&space, &mut rng_from_seed(7));
    let cg = reduction::coarse_grain(&rho, &["B"])?;
    let twice = reduction::coarse_grain(cg.rho_cg(), &["B"])?;
    println!("{}: idempotence residual {:.1e}", space, frobenius_distance(twice.rho_cg().op(), cg.rho_cg().op())?);
    println!(
        "reduced state recovered to {:.1e}",
        frobenius_distance(reduction::recover_reduced(&cg).op(), reduction::partial_trace(&rho, &["B"])?.op())?
    );
    println!("<sx(A)> preserved to {:.1e}", reduction::coarse_grained_expectation_check(&rho, &pauli::sigma_x("A")?, &["B"])?);
    println!("provenance of the result: {}", cg.rho_cg().provenance());

    let pair = SpaceSpec::new([("A", 2), ("B", 2)])?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let o = C64::new(0.0, 0.0);
    let bell = DensityOperator::pure(&StateVector::from_slice(pair.clone(), &[h, o, o, h])?);
    let bell_cg = reduction::coarse_grain(&bell, &["B"])?;
    let zz = tensor_product(&pauli::sigma_z("A")?, &pauli::sigma_z("B")?)?;
    let za = embed(&pauli::sigma_z("A")?, &pair, "A")?;
    println!("Bell <zz>: {:.3} -> {:.3}", expectation(&bell, &zz)?, expectation(bell_cg.rho_cg(), &zz)?);
    println!("Bell <z(A)>: {:.3} -> {:.3}", expectation(&bell, &za)?, expectation(bell_cg.rho_cg(), &za)?);

    let sup = reduction::projector_superoperator(&pair, &["B"])?;
    println!("superoperator is {}x{}, trace {:.1}", sup.nrows(), sup.ncols(), sup.trace().re);
    Ok(())
}
