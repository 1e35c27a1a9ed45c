//! How many times each domain is repeated under a plan.

use blendplan::ratio::format_decimal;
use blendplan::simulate::report_keys;
use blendplan::{compose_plan, plan_key_epochs, ratio, reference_manifest, Catalog};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        1_000_000_000_000,
        ratio(3, 10),
    )?;
    println!("{:<28} {:>10}", "domain", "epochs");
    for key in report_keys(&m) {
        let epochs = plan_key_epochs(&plan, &m, &key)?;
        let shown = format_decimal(&blendplan::ratio::round_places(&epochs, 3), 3).unwrap_or_default();
        println!("{key:<28} {shown:>10}");
    }
    Ok(())
}
