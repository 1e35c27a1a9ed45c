//! Tokens and epochs seen per source at a few checkpoints.

use blendplan::simulate::milestones_to_text;
use blendplan::{compose_plan, exposure_report, overexposure_check, ratio, reference_manifest, Catalog, EpochCaps};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        1_000_000_000_000,
        ratio(3, 10),
    )?;
    let milestones = exposure_report(&plan, &m, &[200_000_000_000, 700_000_000_000])?;
    print!("{}", milestones_to_text(&milestones));
    for w in overexposure_check(&plan, &m, &EpochCaps::recommended())? {
        println!("warning: {w}");
    }
    Ok(())
}
