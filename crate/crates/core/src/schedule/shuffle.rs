//! Random ordering of a fixed multiset of draws.
//!
//! Drawing without replacement from the remaining counts gives every
//! arrangement of the multiset the same probability, exactly like shuffling
//! the expanded list, but needs only one counter per source.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct RandomDraw {
    rng: ChaCha8Rng,
    remaining: Vec<u64>,
    left: u64,
}

/// Uniform integer in `[0, n)` by rejection, so no value is favoured.
fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    let zone = (u64::MAX / n) * n;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

impl RandomDraw {
    pub(crate) fn new(seed: u64, counts: Vec<u64>) -> Self {
        let left = counts.iter().sum();
        RandomDraw {
            rng: ChaCha8Rng::seed_from_u64(seed),
            remaining: counts,
            left,
        }
    }

    pub(crate) fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub(crate) fn remaining(&self) -> &[u64] {
        &self.remaining
    }

    pub(crate) fn restore(&mut self, word_pos: u128, remaining: Vec<u64>) -> Result<()> {
        if remaining.len() != self.remaining.len() {
            return Err(Error::CursorMismatch("random state has the wrong shape".to_string()));
        }
        if remaining.iter().zip(&self.remaining).any(|(r, full)| r > full) {
            return Err(Error::CursorMismatch("random state has more draws than the plan".to_string()));
        }
        self.left = remaining.iter().sum();
        self.remaining = remaining;
        self.rng.set_word_pos(word_pos);
        Ok(())
    }
}

impl Iterator for RandomDraw {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.left == 0 {
            return None;
        }
        let mut x = below(&mut self.rng, self.left);
        for (i, count) in self.remaining.iter_mut().enumerate() {
            if x < *count {
                *count -= 1;
                self.left -= 1;
                return Some(i);
            }
            x -= *count;
        }
        unreachable!("x is below the remaining total")
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.left as usize, Some(self.left as usize))
    }
}
