//! Stretch a 1T plan to longer horizons and see which domains overshoot.

use blendplan::ratio::{format_percent, to_f64};
use blendplan::simulate::Horizon;
use blendplan::{compose_plan, horizon_whatif, ratio, reference_manifest, Catalog, EpochCaps};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        1_000_000_000_000,
        ratio(3, 10),
    )?;
    let horizons: Vec<Horizon> = [1_000_000_000_000u64, 1_700_000_000_000, 15_000_000_000_000]
        .into_iter()
        .map(Horizon::from)
        .collect();
    for row in horizon_whatif(&plan, &m, &horizons, &EpochCaps::horizon_preset())? {
        println!("== {} tokens", row.horizon.total);
        println!("  math epochs before rescale: {:.2}", to_f64(&row.epochs["math"]));
        for w in &row.warnings {
            println!("  warning {w}");
        }
        let b = &row.rescaled.phase2.blend;
        println!("  {}:", b.name);
        for (key, weight) in &b.weights {
            println!("    {key:<14} {:>6}%", format_percent(weight));
        }
    }
    Ok(())
}
