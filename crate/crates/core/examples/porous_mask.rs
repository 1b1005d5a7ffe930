//! Prints the staggered-cylinder obstacle mask used by the porous benchmark.

use lbm_core::flow::Mask;

fn main() -> lbm_core::Result<()> {
    let mask = Mask::staggered_cylinders(0.5, 2.0, 1.0 / 200.0, 0.15, 0.35, 0.15, 0.02)?;
    eprintln!("solid fraction {:.4}", mask.solid_fraction());
    print!("{}", mask.to_text());
    Ok(())
}
