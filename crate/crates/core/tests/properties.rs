use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use blendplan::ratio::int;
use blendplan::schedule::{read_tsv, write_tsv};
use blendplan::{
    build_schedule, compose_plan, epochs_seen, expand_crawl, key_epochs, natural_distribution, partition_for_worker,
    ratio, reference_manifest, resolve, target_epochs_blend, BlendSpec, Catalog, Category, DataSource, Manifest,
    Ordering, QualityLabel, Ratio, Schedule, ScheduleConfig, ScheduleItem, Shard,
};

fn manifest(raw: &[u64], factor: Ratio) -> Manifest {
    let sources = raw
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let source = DataSource::new(format!("s{i}"), Category::HighQuality, format!("d{i}"), QualityLabel::Unlabeled, t);
            if t > 1 {
                source.with_shards(vec![
                    Shard { id: "x".into(), tokens: t / 2 },
                    Shard { id: "y".into(), tokens: t - t / 2 },
                ])
            } else {
                source
            }
        })
        .collect();
    Manifest::new(sources, factor).unwrap()
}

fn blend(name: &str, w: &[u64]) -> BlendSpec {
    let sum: u64 = w.iter().sum();
    BlendSpec::new(
        name,
        w.iter()
            .enumerate()
            .filter(|(_, &x)| x > 0)
            .map(|(i, &x)| (format!("s{i}"), Ratio::new(x.into(), sum.into()))),
    )
}

/// Raw token counts and two weight vectors over the same sources.
fn setup() -> impl Strategy<Value = (Vec<u64>, Vec<u64>, Vec<u64>)> {
    (2usize..7).prop_flat_map(|k| {
        let w = || prop::collection::vec(0u64..100, k).prop_filter("non-empty", |w| w.iter().any(|&x| x > 0));
        (prop::collection::vec(1_000u64..10_000_000, k), w(), w())
    })
}

fn lines(items: &[ScheduleItem]) -> Vec<String> {
    items
        .iter()
        .map(|i| format!("{}\t{}\t{}\t{}\t{}", i.index, i.source_id, i.shard_id, i.offset, i.quantum))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retargeting_keeps_blend_normalized((raw, w, _) in setup(), num in 0u64..50, den in 1u64..10) {
        let m = manifest(&raw, ratio(1, 15));
        let b = blend("b", &w);
        let Some((key, _)) = b.weights.iter().next() else { unreachable!() };
        let target = Ratio::new(num.into(), den.into());
        let budget = 10_000_000;
        if let Ok(out) = target_epochs_blend(&b, key, &target, budget, &m) {
            prop_assert_eq!(out.total(), Ratio::one());
            prop_assert_eq!(key_epochs(&out, budget, &m, key).unwrap(), target);
        }
    }

    #[test]
    fn epochs_are_weight_times_budget_over_available((raw, w, _) in setup(), budget in 1u64..1_000_000_000) {
        let m = manifest(&raw, ratio(1, 15));
        let b = blend("b", &w);
        let epochs = epochs_seen(&b, budget, &m).unwrap();
        for (key, weight) in &b.weights {
            let avail = m.available_by_id(key).unwrap();
            if avail > 0 {
                prop_assert_eq!(&epochs[key], &(weight * int(budget) / int(avail)));
            }
        }
    }

    #[test]
    fn epochs_are_linear_in_budget((raw, w, _) in setup(), budget in 1u64..1_000_000_000, k in 1u64..20) {
        let m = manifest(&raw, ratio(1, 15));
        let b = blend("b", &w);
        let once = epochs_seen(&b, budget, &m).unwrap();
        let scaled = epochs_seen(&b, budget * k, &m).unwrap();
        for (id, e) in &once {
            prop_assert_eq!(&scaled[id], &(e * int(k)));
        }
    }

    #[test]
    fn natural_distribution_ignores_scale((raw, _, _) in setup(), c in 1u64..1000) {
        let m = manifest(&raw, Ratio::one());
        let bigger: Vec<u64> = raw.iter().map(|t| t * c).collect();
        let mc = manifest(&bigger, Ratio::one());
        let a = resolve(&natural_distribution(&m).unwrap(), &m).unwrap();
        let b = resolve(&natural_distribution(&mc).unwrap(), &mc).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.iter().fold(Ratio::zero(), |s, x| s + x), Ratio::one());
    }

    #[test]
    fn crawl_expansion_preserves_mass(crawl in 1u64..100, preset in 0usize..8) {
        let catalog = Catalog::builtin();
        let name = catalog.crawl_names().nth(preset).unwrap().to_string();
        let cb = catalog.crawl_blend(&name).unwrap();
        let base = BlendSpec::new(
            "b",
            [("crawl".to_string(), ratio(crawl as i64, 100)), ("math".to_string(), ratio(100 - crawl as i64, 100))],
        );
        let out = expand_crawl(&base, &cb).unwrap();
        prop_assert_eq!(out.total(), Ratio::one());
        prop_assert_eq!(out.weight("math"), base.weight("math"));
        let crawl_mass = out
            .weights
            .iter()
            .filter(|(k, _)| k.starts_with("crawl/"))
            .fold(Ratio::zero(), |s, (_, w)| s + w);
        prop_assert_eq!(crawl_mass, base.weight("crawl"));
        // Re-aggregating per source gives back the original crawl total.
        let m = reference_manifest();
        let per_source = resolve(&out, &m).unwrap();
        let crawl_sources = m.select("crawl").unwrap();
        let total: Ratio = crawl_sources.iter().fold(Ratio::zero(), |s, &i| s + &per_source[i]);
        prop_assert_eq!(total, base.weight("crawl"));
    }

    #[test]
    fn partitions_cover_the_stream((raw, w1, w2) in setup(), quanta in 1u64..2000, workers in 1u64..9, seed: u64) {
        let m = manifest(&raw, ratio(1, 3));
        let plan = compose_plan(blend("a", &w1), blend("b", &w2), quanta * 64, ratio(1, 4)).unwrap();
        let cfg = ScheduleConfig { seed, quantum: 64, ordering: Ordering::RandomOrder, workers };
        let full: Vec<ScheduleItem> = build_schedule(&plan, &m, &cfg).unwrap().collect();
        let mut merged: Vec<ScheduleItem> = (0..workers)
            .flat_map(|w| partition_for_worker(build_schedule(&plan, &m, &cfg).unwrap(), w, workers).unwrap())
            .collect();
        merged.sort_by_key(|i| i.index);
        prop_assert_eq!(merged, full);
    }

    #[test]
    fn resume_continues_the_stream((raw, w1, w2) in setup(), quanta in 2u64..2000, cut in 0.0f64..1.0, random: bool, seed: u64) {
        let m = manifest(&raw, ratio(1, 3));
        let plan = compose_plan(blend("a", &w1), blend("b", &w2), quanta * 100, ratio(1, 2)).unwrap();
        let ordering = if random { Ordering::RandomOrder } else { Ordering::TwoPhase };
        let cfg = ScheduleConfig { seed, quantum: 100, ordering, workers: 1 };
        let full: Vec<ScheduleItem> = build_schedule(&plan, &m, &cfg).unwrap().collect();
        let at = (cut * quanta as f64) as usize;
        let mut head = build_schedule(&plan, &m, &cfg).unwrap();
        head.by_ref().take(at).for_each(drop);
        let cursor = head.cursor().to_json().parse().unwrap();
        let tail: Vec<ScheduleItem> = Schedule::resume(&plan, &m, &cfg, &cursor).unwrap().collect();
        prop_assert_eq!(&tail[..], &full[at..]);
    }

    #[test]
    fn tsv_round_trip((raw, w1, w2) in setup(), quanta in 1u64..500) {
        let m = manifest(&raw, Ratio::one());
        let plan = compose_plan(blend("a", &w1), blend("b", &w2), quanta * 8, ratio(1, 2)).unwrap();
        let cfg = ScheduleConfig { quantum: 8, ..ScheduleConfig::default() };
        let items: Vec<ScheduleItem> = build_schedule(&plan, &m, &cfg).unwrap().collect();
        let mut buf = Vec::new();
        write_tsv(items.clone(), &mut buf).unwrap();
        let back = read_tsv(&buf[..]).unwrap();
        prop_assert_eq!(lines(&back), lines(&items));
    }

    #[test]
    fn counts_follow_weights((raw, w1, _) in setup(), quanta in 1u64..3000) {
        let m = manifest(&raw, Ratio::one());
        let plan = compose_plan(blend("a", &w1), blend("a", &w1), quanta, Ratio::zero()).unwrap();
        let cfg = ScheduleConfig { quantum: 1, ..ScheduleConfig::default() };
        let counts: BTreeMap<String, u64> = build_schedule(&plan, &m, &cfg).unwrap().prefix_counts(quanta);
        let sum: u64 = w1.iter().sum();
        for (i, w) in w1.iter().enumerate() {
            let exact = Ratio::new((quanta * w).into(), sum.into());
            let got = int(counts[&format!("s{i}")]);
            prop_assert!((got - exact).abs() < Ratio::one());
        }
    }
}
