//! Deterministic token-stream schedules.
//!
//! A schedule is a sequence of fixed-size quanta, each naming a source, a
//! shard and an offset into it. Phase 1 covers the first
//! `ceil(phase1_budget / quantum)` items and phase 2 the rest of
//! `ceil(total / quantum)`. Within a phase sources are interleaved so every
//! prefix stays within one quantum of its exact share; see [`interleave`].
//!
//! [`Ordering::RandomOrder`] keeps exactly the same per-source counts as the
//! two-phase stream but draws them in seeded random order.
//!
//! Iteration state is a handful of integers per source, so a [`Cursor`] can be
//! saved at any point and resumed elsewhere.

mod export;
mod interleave;
mod position;
mod shuffle;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::blend::{resolve, TrainingPlan};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::ratio::Ratio;

pub use export::{read_binary, read_tsv, write_binary, write_tsv, BinaryHeader, BinaryRecord, BINARY_MAGIC, BINARY_VERSION};

use interleave::Interleaver;
use position::SourcePosition;
use shuffle::RandomDraw;

/// One max-length sequence.
pub const DEFAULT_QUANTUM: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    TwoPhase,
    RandomOrder,
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ordering::TwoPhase => "two-phase",
            Ordering::RandomOrder => "random",
        })
    }
}

impl FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-phase" => Ok(Ordering::TwoPhase),
            "random" | "random-order" => Ok(Ordering::RandomOrder),
            other => Err(Error::Parse(format!("unknown ordering `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleConfig {
    pub seed: u64,
    pub quantum: u64,
    pub ordering: Ordering,
    pub workers: u64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            seed: 0,
            quantum: DEFAULT_QUANTUM,
            ordering: Ordering::TwoPhase,
            workers: 1,
        }
    }
}

impl ScheduleConfig {
    pub fn check(&self) -> Result<()> {
        if self.quantum == 0 {
            return Err(Error::Domain("quantum must be positive".to_string()));
        }
        if self.workers == 0 {
            return Err(Error::Domain("need at least one worker".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScheduleItem {
    pub index: u64,
    pub source_id: String,
    pub shard_id: String,
    pub offset: u64,
    pub quantum: u64,
    /// Position of the source in the manifest.
    pub source_ordinal: u64,
    /// Position of the shard in its source's shard list.
    pub shard_ordinal: u64,
}

enum Picker {
    TwoPhase(Interleaver),
    Random(RandomDraw),
}

/// Schedule iterator. Build with [`build_schedule`].
pub struct Schedule {
    ids: Vec<String>,
    positions: Vec<Option<SourcePosition>>,
    picker: Picker,
    index: u64,
    len: u64,
    phase1_len: u64,
    quantum: u64,
    fingerprint: String,
}

/// Saved iteration state; resume with [`Schedule::resume`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub phase: u8,
    pub step: u64,
    /// Interleaver slack per source, scaled to integers.
    pub credits: Vec<String>,
    pub sources: Vec<SourceCursor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomCursor>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCursor {
    pub id: String,
    pub shard: String,
    pub offset: u64,
    pub epoch: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomCursor {
    pub word_pos: String,
    pub remaining: Vec<u64>,
}

impl Cursor {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("cursor serializes");
        text.push('\n');
        text
    }
}

impl FromStr for Cursor {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("cursor: {e}")))
    }
}

fn fingerprint(plan: &TrainingPlan, manifest: &Manifest, cfg: &ScheduleConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(plan.to_json().as_bytes());
    hasher.update(manifest.fingerprint().as_bytes());
    hasher.update(format!("{}|{}|{}", cfg.seed, cfg.quantum, cfg.ordering).as_bytes());
    hex::encode(hasher.finalize())
}

/// Builds the schedule for `plan` over `manifest`.
pub fn build_schedule(plan: &TrainingPlan, manifest: &Manifest, cfg: &ScheduleConfig) -> Result<Schedule> {
    cfg.check()?;
    plan.check()?;
    let q = cfg.quantum;
    let len = plan.total_tokens.div_ceil(q);
    let phase1_len = plan.phase1.token_budget.div_ceil(q);
    if len.checked_mul(q).is_none() {
        return Err(Error::BudgetOverflow(format!("{len} quanta of {q} tokens")));
    }

    let zeros = vec![Ratio::zero(); manifest.len()];
    let w1 = resolve(&plan.phase1.blend, manifest)?;
    let w2 = if plan.phase2.token_budget > 0 {
        resolve(&plan.phase2.blend, manifest)?
    } else {
        zeros
    };
    let ids: Vec<String> = manifest.sources().iter().map(|s| s.id.clone()).collect();
    let interleaver = Interleaver::new([&w1, &w2], &ids, phase1_len, len)?;

    let mut positions = Vec::with_capacity(manifest.len());
    for (i, source) in manifest.sources().iter().enumerate() {
        let used = !w1[i].is_zero() || !w2[i].is_zero();
        let pos = SourcePosition::new(&manifest.available_shards(i), &source.shard_list());
        if used && pos.is_none() {
            return Err(Error::EmptyShardList(source.id.clone()));
        }
        positions.push(pos);
    }

    let picker = match cfg.ordering {
        Ordering::TwoPhase => Picker::TwoPhase(interleaver),
        Ordering::RandomOrder => {
            let mut counts = vec![0u64; ids.len()];
            for pick in interleaver {
                counts[pick] += 1;
            }
            Picker::Random(RandomDraw::new(cfg.seed, counts))
        }
    };
    Ok(Schedule {
        ids,
        positions,
        picker,
        index: 0,
        len,
        phase1_len,
        quantum: q,
        fingerprint: fingerprint(plan, manifest, cfg),
    })
}

impl Schedule {
    /// Total number of items, including ones already consumed.
    pub fn total_len(&self) -> u64 {
        self.len
    }

    pub fn phase1_len(&self) -> u64 {
        self.phase1_len
    }

    pub fn quantum(&self) -> u64 {
        self.quantum
    }

    pub fn source_ids(&self) -> &[String] {
        &self.ids
    }

    /// Index of the next item to be produced.
    pub fn position(&self) -> u64 {
        self.index
    }

    /// Snapshot of the iteration state.
    pub fn cursor(&self) -> Cursor {
        let (credits, random) = match &self.picker {
            Picker::TwoPhase(il) => (il.slack().iter().map(|s| s.to_string()).collect(), None),
            Picker::Random(draw) => (
                Vec::new(),
                Some(RandomCursor {
                    word_pos: draw.word_pos().to_string(),
                    remaining: draw.remaining().to_vec(),
                }),
            ),
        };
        let sources = self
            .ids
            .iter()
            .zip(&self.positions)
            .map(|(id, pos)| match pos {
                Some(p) => {
                    let (shard, offset) = p.current();
                    SourceCursor {
                        id: id.clone(),
                        shard: p.shard_id(shard).to_string(),
                        offset,
                        epoch: p.epoch(),
                    }
                }
                None => SourceCursor {
                    id: id.clone(),
                    shard: String::new(),
                    offset: 0,
                    epoch: 0,
                },
            })
            .collect();
        Cursor {
            phase: if self.index < self.phase1_len { 1 } else { 2 },
            step: self.index,
            credits,
            sources,
            random,
            fingerprint: self.fingerprint.clone(),
        }
    }

    /// Rebuilds the schedule and continues from `cursor`.
    pub fn resume(
        plan: &TrainingPlan,
        manifest: &Manifest,
        cfg: &ScheduleConfig,
        cursor: &Cursor,
    ) -> Result<Schedule> {
        let mut schedule = build_schedule(plan, manifest, cfg)?;
        if cursor.fingerprint != schedule.fingerprint {
            return Err(Error::CursorMismatch("fingerprint differs".to_string()));
        }
        if cursor.step > schedule.len || cursor.sources.len() != schedule.ids.len() {
            return Err(Error::CursorMismatch("cursor is out of range".to_string()));
        }
        match (&mut schedule.picker, &cursor.random) {
            (Picker::TwoPhase(il), None) => {
                let slack = cursor
                    .credits
                    .iter()
                    .map(|c| c.parse::<i128>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::CursorMismatch(format!("bad credit: {e}")))?;
                il.restore(cursor.step, slack)?;
            }
            (Picker::Random(draw), Some(state)) => {
                let word_pos = state
                    .word_pos
                    .parse::<u128>()
                    .map_err(|e| Error::CursorMismatch(format!("bad word_pos: {e}")))?;
                let left: u64 = state.remaining.iter().sum();
                if left != schedule.len - cursor.step {
                    return Err(Error::CursorMismatch("random counts disagree with step".to_string()));
                }
                draw.restore(word_pos, state.remaining.clone())?;
            }
            _ => return Err(Error::CursorMismatch("ordering differs".to_string())),
        }
        for ((id, pos), saved) in schedule.ids.iter().zip(&mut schedule.positions).zip(&cursor.sources) {
            if *id != saved.id {
                return Err(Error::CursorMismatch(format!("expected source `{id}`, found `{}`", saved.id)));
            }
            if let Some(p) = pos {
                let shard = p
                    .find_shard(&saved.shard)
                    .ok_or_else(|| Error::CursorMismatch(format!("`{id}` has no shard `{}`", saved.shard)))?;
                p.seek(shard, saved.offset, saved.epoch)
                    .ok_or_else(|| Error::CursorMismatch(format!("offset out of range for `{id}`")))?;
            }
        }
        schedule.index = cursor.step;
        Ok(schedule)
    }

    /// Per-source item counts over the first `n` items (all sources listed).
    pub fn prefix_counts(self, n: u64) -> BTreeMap<String, u64> {
        let mut counts: BTreeMap<String, u64> = self.ids.iter().map(|id| (id.clone(), 0)).collect();
        let mut by_index = vec![0u64; self.ids.len()];
        let ids = self.ids.clone();
        let mut picks = self.into_picks();
        for _ in 0..n {
            match picks.next() {
                Some(i) => by_index[i] += 1,
                None => break,
            }
        }
        for (id, c) in ids.iter().zip(by_index) {
            counts.insert(id.clone(), c);
        }
        counts
    }

    /// Source ordinals only, skipping shard bookkeeping.
    pub fn into_picks(self) -> impl Iterator<Item = usize> {
        let remaining = self.len - self.index;
        let picks: Box<dyn Iterator<Item = usize>> = match self.picker {
            Picker::TwoPhase(il) => Box::new(il),
            Picker::Random(draw) => Box::new(draw),
        };
        picks.take(remaining as usize)
    }
}

impl Iterator for Schedule {
    type Item = ScheduleItem;

    fn next(&mut self) -> Option<ScheduleItem> {
        if self.index >= self.len {
            return None;
        }
        let pick = match &mut self.picker {
            Picker::TwoPhase(il) => il.next(),
            Picker::Random(draw) => draw.next(),
        }?;
        let pos = self.positions[pick].as_mut().expect("picked sources have shards");
        let (shard, offset) = pos.current();
        let item = ScheduleItem {
            index: self.index,
            source_id: self.ids[pick].clone(),
            shard_id: pos.shard_id(shard).to_string(),
            offset,
            quantum: self.quantum,
            source_ordinal: pick as u64,
            shard_ordinal: pos.ordinal(shard),
        };
        pos.advance(self.quantum);
        self.index += 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.len - self.index) as usize;
        (left, Some(left))
    }
}

/// Items whose index is `worker` modulo `workers`.
pub fn partition_for_worker<I>(stream: I, worker: u64, workers: u64) -> Result<impl Iterator<Item = ScheduleItem>>
where
    I: IntoIterator<Item = ScheduleItem>,
{
    if workers == 0 || worker >= workers {
        return Err(Error::Domain(format!("worker {worker} is not in 0..{workers}")));
    }
    Ok(stream
        .into_iter()
        .filter(move |item| item.index % workers == worker))
}

/// Per-source counts over the first `n` items of `schedule`.
pub fn prefix_counts(schedule: Schedule, n: u64) -> BTreeMap<String, u64> {
    schedule.prefix_counts(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blend::{compose_plan, BlendSpec};
    use crate::manifest::{Category, DataSource, QualityLabel, Shard};
    use crate::ratio::ratio;

    fn manifest() -> Manifest {
        let shards = |n: u64| {
            vec![
                Shard { id: "x".into(), tokens: n / 2 },
                Shard { id: "y".into(), tokens: n - n / 2 },
            ]
        };
        Manifest::new(
            vec![
                DataSource::new("A", Category::HighQuality, "Code", QualityLabel::Unlabeled, 40).with_shards(shards(40)),
                DataSource::new("B", Category::HighQuality, "Math", QualityLabel::Unlabeled, 40).with_shards(shards(40)),
            ],
            ratio(1, 1),
        )
        .unwrap()
    }

    fn plan(p1: &[(&str, &str)], p2: &[(&str, &str)], total: u64, frac: Ratio) -> TrainingPlan {
        compose_plan(
            BlendSpec::from_percents("p1", p1).unwrap(),
            BlendSpec::from_percents("p2", p2).unwrap(),
            total,
            frac,
        )
        .unwrap()
    }

    fn sources(s: Schedule) -> String {
        s.map(|i| i.source_id).collect()
    }

    #[test]
    fn seventy_thirty_sequence() {
        let p = plan(&[("A", "70"), ("B", "30")], &[("A", "70"), ("B", "30")], 10, ratio(0, 1));
        let cfg = ScheduleConfig { quantum: 1, ..Default::default() };
        assert_eq!(sources(build_schedule(&p, &manifest(), &cfg).unwrap()), "ABAAABAABA");
        let counts = prefix_counts(build_schedule(&p, &manifest(), &cfg).unwrap(), 10);
        assert_eq!((counts["A"], counts["B"]), (7, 3));
        let none = prefix_counts(build_schedule(&p, &manifest(), &cfg).unwrap(), 0);
        assert_eq!((none["A"], none["B"]), (0, 0));
    }

    #[test]
    fn single_source_offsets() {
        let p = plan(&[("A", "100")], &[("A", "100")], 32, ratio(0, 1));
        let cfg = ScheduleConfig { quantum: 4, ..Default::default() };
        let items: Vec<ScheduleItem> = build_schedule(&p, &manifest(), &cfg).unwrap().collect();
        let offsets: Vec<(String, u64)> = items.iter().map(|i| (i.shard_id.clone(), i.offset)).collect();
        assert_eq!(items.len(), 8);
        assert!(items.iter().all(|i| i.source_id == "A"));
        assert_eq!(offsets[..6], [
            ("x".into(), 0), ("x".into(), 4), ("x".into(), 8), ("x".into(), 12), ("x".into(), 16), ("y".into(), 0)
        ]);
    }

    #[test]
    fn phase_split_and_tie() {
        let p = plan(&[("A", "100")], &[("B", "100")], 10, ratio(2, 5));
        let cfg = ScheduleConfig { quantum: 1, ..Default::default() };
        assert_eq!(sources(build_schedule(&p, &manifest(), &cfg).unwrap()), "AAAAAABBBB");
        let tie = plan(&[("A", "50"), ("B", "50")], &[("A", "50"), ("B", "50")], 1, ratio(0, 1));
        assert_eq!(sources(build_schedule(&tie, &manifest(), &cfg).unwrap()), "A");
    }

    #[test]
    fn partitions() {
        let p = plan(&[("A", "70"), ("B", "30")], &[("A", "10"), ("B", "90")], 10, ratio(1, 2));
        let cfg = ScheduleConfig { quantum: 1, ..Default::default() };
        let even: Vec<u64> = partition_for_worker(build_schedule(&p, &manifest(), &cfg).unwrap(), 0, 2)
            .unwrap()
            .map(|i| i.index)
            .collect();
        assert_eq!(even, vec![0, 2, 4, 6, 8]);
        assert!(partition_for_worker(Vec::new(), 2, 2).is_err());
        let all: Vec<ScheduleItem> = build_schedule(&p, &manifest(), &cfg).unwrap().collect();
        let one: Vec<ScheduleItem> = partition_for_worker(all.clone(), 0, 1).unwrap().collect();
        assert_eq!(one, all);
    }

    #[test]
    fn random_order_keeps_counts() {
        let p = plan(&[("A", "70"), ("B", "30")], &[("A", "10"), ("B", "90")], 200, ratio(3, 10));
        let two = ScheduleConfig { quantum: 1, ..Default::default() };
        let rand = ScheduleConfig { ordering: Ordering::RandomOrder, seed: 9, ..two.clone() };
        let m = manifest();
        let a = prefix_counts(build_schedule(&p, &m, &two).unwrap(), u64::MAX);
        let b = prefix_counts(build_schedule(&p, &m, &rand).unwrap(), u64::MAX);
        assert_eq!(a, b);
        assert_ne!(
            sources(build_schedule(&p, &m, &two).unwrap()),
            sources(build_schedule(&p, &m, &rand).unwrap())
        );
    }

    #[test]
    fn cursor_resume_matches_uninterrupted() {
        let m = manifest();
        let p = plan(&[("A", "70"), ("B", "30")], &[("A", "10"), ("B", "90")], 300, ratio(2, 5));
        for ordering in [Ordering::TwoPhase, Ordering::RandomOrder] {
            let cfg = ScheduleConfig { quantum: 3, ordering, seed: 5, ..Default::default() };
            let full: Vec<ScheduleItem> = build_schedule(&p, &m, &cfg).unwrap().collect();
            let mut head = build_schedule(&p, &m, &cfg).unwrap();
            let first: Vec<ScheduleItem> = head.by_ref().take(41).collect();
            let saved: Cursor = head.cursor().to_json().parse().unwrap();
            let rest: Vec<ScheduleItem> = Schedule::resume(&p, &m, &cfg, &saved).unwrap().collect();
            assert_eq!([first, rest].concat(), full, "{ordering}");

            let other = ScheduleConfig { seed: 6, ..cfg.clone() };
            assert!(matches!(
                Schedule::resume(&p, &m, &other, &saved),
                Err(Error::CursorMismatch(_))
            ));
        }
    }

    #[test]
    fn empty_source_is_an_error() {
        let m = Manifest::new(
            vec![
                DataSource::new("A", Category::HighQuality, "Code", QualityLabel::Unlabeled, 10),
                DataSource::new("B", Category::HighQuality, "Math", QualityLabel::Unlabeled, 1),
            ],
            ratio(1, 2),
        )
        .unwrap();
        let p = plan(&[("A", "50"), ("B", "50")], &[("A", "50"), ("B", "50")], 4, ratio(0, 1));
        let err = build_schedule(&p, &m, &ScheduleConfig::default()).err().unwrap();
        assert!(matches!(err, Error::EmptyShardList(ref id) if id == "B"), "{err}");
    }
}
