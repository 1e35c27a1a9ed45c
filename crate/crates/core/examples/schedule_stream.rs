//! Stream the first items of a deterministic schedule as TSV.

use std::io;

use blendplan::schedule::write_tsv;
use blendplan::{build_schedule, compose_plan, ratio, reference_manifest, Catalog, ScheduleConfig};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    // A small run: 10k sequences of 4096 tokens.
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        40_960_000,
        ratio(2, 5),
    )?;
    let schedule = build_schedule(&plan, &m, &ScheduleConfig::default())?;
    println!("{} items, phase 2 starts at {}", schedule.total_len(), schedule.phase1_len());
    write_tsv(schedule.take(20), io::stdout().lock()).expect("stdout");
    Ok(())
}
