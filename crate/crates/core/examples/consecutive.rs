//! Two premeasurements in a row: z, then x or z again. Probabilities come
//! from the final entangled state of system and pointers, without collapse.

use std::f64::consts::FRAC_1_SQRT_2;

use redstates::measurement::{self, Event, MeasurementChain, PointerFactor};
use redstates::tensor::{pauli, SpaceSpec, C64};
use redstates::StateVector;

fn main() -> redstates::Result<()> {
    let c = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    let system = StateVector::from_slice(SpaceSpec::single("S", 2)?, &c)?;
    let z = measurement::spin_z_basis();
    let x = measurement::spin_basis_rotation(&z)?;

    let after_z = MeasurementChain::new(system).premeasure(&pauli::sigma_z("S")?, &z, PointerFactor::standard("Pz", 2)?)?;
    let zx = after_z.premeasure(&pauli::sigma_x("S")?, &x, PointerFactor::standard("Px", 2)?)?;
    let zz = after_z.premeasure(&pauli::sigma_z("S")?, &z, PointerFactor::standard("Pz2", 2)?)?;

    println!("composite space: {}", zx.space());
    println!("pr(p+z)            = {:.6}", zx.probability(&Event::new("Pz", 0))?);
    println!("pr(p+x & p+z)      = {:.6}", zx.joint_probability(&[Event::new("Px", 0), Event::new("Pz", 0)])?);
    println!("pr(p+x | p+z)      = {:.6}", zx.conditional_probability(&Event::new("Px", 0), &[Event::new("Pz", 0)])?);
    println!("pr(p+z2 | p+z)     = {:.6}", zz.conditional_probability(&Event::new("Pz2", 0), &[Event::new("Pz", 0)])?);
    println!("pr(p-z2 | p+z)     = {:.6}", zz.conditional_probability(&Event::new("Pz2", 1), &[Event::new("Pz", 0)])?);

    let h = FRAC_1_SQRT_2;
    let equal = StateVector::from_slice(SpaceSpec::single("S", 2)?, &[C64::new(h, 0.0), C64::new(h, 0.0)])?;
    let chain = MeasurementChain::new(equal)
        .premeasure(&pauli::sigma_z("S")?, &z, PointerFactor::standard("Pz", 2)?)?
        .premeasure(&pauli::sigma_x("S")?, &x, PointerFactor::standard("Px", 2)?)?;
    println!("reduced system state after both steps:\n{}", chain.reduced_system_state()?.matrix());
    Ok(())
}
