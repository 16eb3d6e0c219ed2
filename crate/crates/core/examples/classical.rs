//! Baker-map mixing: the fine-grained density never spreads out, yet its
//! coarse-grained version reaches the uniform density.

use redstates::classical::{self, CellPartition, DensityField};

fn main() -> redstates::Result<()> {
    let field = DensityField::left_half(256)?;
    let partition = CellPartition::new(256, 4)?;
    let series = classical::equilibrium_approach(&field, &partition, 10)?;
    println!("{:>4} {:>10} {:>10} {:>9}", "step", "coarse L1", "fine L1", "occupied");
    for k in 0..series.coarse_distance.len() {
        println!(
            "{k:4} {:10.6} {:10.6} {:9}",
            series.coarse_distance[k], series.fine_distance[k], series.occupied[k]
        );
    }
    println!("coarse distance below 0.01 from step {:?}", series.first_below(0.01));

    let mut fields = vec![DensityField::indicator(8, &[(0, 0), (3, 5), (6, 2)])?];
    for _ in 0..6 {
        let next = classical::mixing_step(fields.last().unwrap())?;
        fields.push(next);
    }
    let check = classical::liouville_check(&fields);
    println!("three-cell support: occupied {:?}, invariant {}", check.occupied, check.invariant);
    Ok(())
}
