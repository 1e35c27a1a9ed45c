//! Checkpoint a schedule mid-stream and pick it up again.

use blendplan::{build_schedule, compose_plan, ratio, reference_manifest, Catalog, Cursor, Ordering, Schedule, ScheduleConfig};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        40_960_000,
        ratio(2, 5),
    )?;
    let cfg = ScheduleConfig { seed: 7, ordering: Ordering::RandomOrder, ..ScheduleConfig::default() };

    let mut run = build_schedule(&plan, &m, &cfg)?;
    run.by_ref().take(6_000).for_each(drop);
    let saved = run.cursor().to_json();
    println!("{saved}");
    let expected: Vec<_> = run.take(5).collect();

    let cursor: Cursor = saved.parse()?;
    let resumed: Vec<_> = Schedule::resume(&plan, &m, &cfg, &cursor)?.take(5).collect();
    assert_eq!(resumed, expected);
    for item in resumed {
        println!("{}\t{}\t{}\t{}", item.index, item.source_id, item.shard_id, item.offset);
    }
    Ok(())
}
