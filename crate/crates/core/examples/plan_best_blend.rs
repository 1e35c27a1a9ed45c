//! Compose the best-performing two-phase plan and print it as JSON.
//!
//! `cargo run --example plan_best_blend`

use blendplan::{compose_plan, ratio, reference_manifest, Catalog};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let manifest = reference_manifest();
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        1_000_000_000_000,
        ratio(2, 5),
    )?
    .bind(&manifest, None);
    print!("{}", plan.to_json());
    Ok(())
}
