//! Treating reduced states as if they were the subsystems' own states
//! predicts joint outcomes that the full chain rules out.

use redstates::measurement::{self, MeasurementChain, PointerFactor};
use redstates::tensor::{pauli, SpaceSpec, C64};
use redstates::StateVector;

fn main() -> redstates::Result<()> {
    let system = StateVector::from_slice(SpaceSpec::single("S", 2)?, &[C64::new(0.6, 0.0), C64::new(0.8, 0.0)])?;
    let chain = MeasurementChain::new(system).premeasure(
        &pauli::sigma_z("S")?,
        &measurement::spin_z_basis(),
        PointerFactor::standard("P", 2)?,
    )?;
    let c = measurement::reduced_chain_predictor(&chain)?;
    let sign = ["+", "-"];
    println!("first repeat   full chain   reduced-state product");
    for k in 0..2 {
        for l in 0..2 {
            println!("  {}     {}      {:.4}       {:.4}", sign[k], sign[l], c.true_joint[k][l], c.flawed_joint[k][l]);
        }
    }
    println!("marginals agree: {:?} vs {:?}", c.true_first_marginal, c.flawed_first_marginal);
    println!("max discrepancy {:.4}, disagrees: {}", c.max_discrepancy, c.disagrees);
    Ok(())
}
