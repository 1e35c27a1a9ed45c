//! Earliest-deadline interleaving (Tijdeman's chairman assignment).
//!
//! Each step every source gains its weight in credit. A source may be picked
//! once its slack (credit minus picks) reaches `1/M`, and among those the one
//! whose slack would first pass `1 - 1/M` goes next. With `M = 2k - 2` for
//! `k` active sources this keeps every prefix within `1 - 1/(2k-2)` of its
//! exact share, which the plain max-credit rule does not guarantee.
//!
//! All arithmetic is done on integers scaled by `M * D`, where `D` is the
//! common denominator of the weights.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ratio::{lcm_denominators, Ratio};

#[derive(Debug, Clone)]
pub(crate) struct Interleaver {
    /// Active sources, sorted by id so the first strict minimum wins ties.
    order: Vec<usize>,
    per_step: [Vec<i128>; 2],
    slack: Vec<i128>,
    /// `D`: the eligibility threshold.
    unit: i128,
    /// `(M - 1) * D`: slack beyond this is overdue.
    due: i128,
    /// `M * D`: slack given up per pick.
    whole: i128,
    phase1_steps: u64,
    steps: u64,
    step: u64,
}

impl Interleaver {
    pub(crate) fn new(
        weights: [&[Ratio]; 2],
        ids: &[String],
        phase1_steps: u64,
        steps: u64,
    ) -> Result<Self> {
        let live = [phase1_steps > 0, steps > phase1_steps];
        let mut active: Vec<usize> = (0..ids.len())
            .filter(|&i| (0..2).any(|p| live[p] && weights[p][i].is_positive()))
            .collect();
        active.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let k = active.len() as i64;
        let m = (2 * k - 2).max(2);

        let used = (0..2)
            .filter(|&p| live[p])
            .flat_map(|p| weights[p].iter());
        let d = lcm_denominators(used);
        let whole_big = &d * BigInt::from(m);
        let fits = (&whole_big * BigInt::from(4)).to_i128().is_some();
        if !fits {
            return Err(Error::WeightPrecision(format!(
                "common denominator {d} with {k} sources"
            )));
        }
        let scaled = |p: usize| -> Vec<i128> {
            weights[p]
                .iter()
                .map(|w| {
                    if !live[p] || w.is_zero() {
                        return 0;
                    }
                    let v = w * Ratio::from_integer(whole_big.clone());
                    v.to_integer().to_i128().expect("bounded by M * D")
                })
                .collect()
        };
        let unit = d.to_i128().expect("D <= M * D");
        Ok(Interleaver {
            order: active,
            per_step: [scaled(0), scaled(1)],
            slack: vec![0; ids.len()],
            unit,
            due: (m as i128 - 1) * unit,
            whole: m as i128 * unit,
            phase1_steps,
            steps,
            step: 0,
        })
    }

    pub(crate) fn slack(&self) -> &[i128] {
        &self.slack
    }

    pub(crate) fn restore(&mut self, step: u64, slack: Vec<i128>) -> Result<()> {
        if slack.len() != self.slack.len() || step > self.steps {
            return Err(Error::CursorMismatch("interleaver state has the wrong shape".to_string()));
        }
        let total: i128 = slack.iter().sum();
        if total != 0 || slack.iter().any(|s| s.abs() >= self.whole) {
            return Err(Error::CursorMismatch("credits are out of range".to_string()));
        }
        self.step = step;
        self.slack = slack;
        Ok(())
    }

    /// Steps until source `i` becomes overdue, `u64::MAX` if never.
    fn deadline(&self, i: usize, phase: usize, left_in_phase: u64) -> u64 {
        let r = self.due - self.slack[i];
        if r < 0 {
            return 0;
        }
        let a1 = self.per_step[phase][i];
        if a1 > 0 {
            let j = r / a1 + 1;
            if j <= left_in_phase as i128 {
                return j as u64;
            }
        }
        if phase == 0 {
            let a2 = self.per_step[1][i];
            if a2 > 0 {
                let r2 = r - a1 * left_in_phase as i128;
                let j = left_in_phase as i128 + r2 / a2 + 1;
                return u64::try_from(j).unwrap_or(u64::MAX);
            }
        }
        u64::MAX
    }
}

impl Iterator for Interleaver {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.step >= self.steps {
            return None;
        }
        let (phase, end) = if self.step < self.phase1_steps {
            (0, self.phase1_steps)
        } else {
            (1, self.steps)
        };
        for &i in &self.order {
            self.slack[i] += self.per_step[phase][i];
        }
        let left = end - 1 - self.step;
        let mut best: Option<(u64, usize)> = None;
        for &i in &self.order {
            if self.slack[i] < self.unit {
                continue;
            }
            let d = self.deadline(i, phase, left);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        let (_, pick) = best.expect("some source always holds at least 1/M slack");
        self.slack[pick] -= self.whole;
        self.step += 1;
        Some(pick)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.steps - self.step) as usize;
        (left, Some(left))
    }
}
