//! Same per-source totals as the two-phase schedule, in random order.

use blendplan::{build_schedule, compose_plan, prefix_counts, ratio, reference_manifest, Catalog, Ordering, ScheduleConfig};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    let plan = compose_plan(
        catalog.blend("P1-Blend4")?,
        catalog.blend("P2-Blend1")?,
        409_600_000,
        ratio(2, 5),
    )?;
    let cfg = |ordering| ScheduleConfig { seed: 42, ordering, ..ScheduleConfig::default() };
    let two = build_schedule(&plan, &m, &cfg(Ordering::TwoPhase))?;
    let ro = build_schedule(&plan, &m, &cfg(Ordering::RandomOrder))?;
    let n = two.total_len();

    // Halfway through, the orders differ; at the end they agree.
    let half_two = prefix_counts(build_schedule(&plan, &m, &cfg(Ordering::TwoPhase))?, n / 2);
    let half_ro = prefix_counts(build_schedule(&plan, &m, &cfg(Ordering::RandomOrder))?, n / 2);
    let (full_two, full_ro) = (prefix_counts(two, n), prefix_counts(ro, n));
    println!("{:<24} {:>10} {:>10} {:>10}", "source", "half 2P", "half RO", "full");
    for id in full_two.keys() {
        assert_eq!(full_two[id], full_ro[id]);
        println!("{id:<24} {:>10} {:>10} {:>10}", half_two[id], half_ro[id], full_two[id]);
    }
    Ok(())
}
