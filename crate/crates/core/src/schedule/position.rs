use crate::manifest::Shard;

/// Read position of one source over its available shards, wrapping at the end.
#[derive(Debug, Clone)]
pub(crate) struct SourcePosition {
    shard_ids: Vec<String>,
    ordinals: Vec<u64>,
    starts: Vec<u64>,
    available: u64,
    pos: u64,
    epoch: u64,
}

impl SourcePosition {
    /// `None` when there is nothing to read. `all` is the untruncated shard
    /// list, used to number shards as the manifest does.
    pub(crate) fn new(shards: &[Shard], all: &[Shard]) -> Option<Self> {
        let mut starts = Vec::with_capacity(shards.len());
        let mut acc = 0u64;
        for shard in shards {
            starts.push(acc);
            acc += shard.tokens;
        }
        (acc > 0).then(|| SourcePosition {
            shard_ids: shards.iter().map(|s| s.id.clone()).collect(),
            ordinals: shards
                .iter()
                .map(|s| all.iter().position(|a| a.id == s.id).unwrap_or(0) as u64)
                .collect(),
            starts,
            available: acc,
            pos: 0,
            epoch: 0,
        })
    }

    /// Shard ordinal and offset of the current read position.
    pub(crate) fn current(&self) -> (usize, u64) {
        let shard = self.starts.partition_point(|&s| s <= self.pos) - 1;
        (shard, self.pos - self.starts[shard])
    }

    pub(crate) fn shard_id(&self, shard: usize) -> &str {
        &self.shard_ids[shard]
    }

    pub(crate) fn find_shard(&self, id: &str) -> Option<usize> {
        self.shard_ids.iter().position(|s| s == id)
    }

    pub(crate) fn ordinal(&self, shard: usize) -> u64 {
        self.ordinals[shard]
    }

    pub(crate) fn epoch(&self) -> u64 {
        self.epoch
    }

    pub(crate) fn advance(&mut self, quantum: u64) {
        let next = self.pos as u128 + quantum as u128;
        self.epoch += (next / self.available as u128) as u64;
        self.pos = (next % self.available as u128) as u64;
    }

    /// Moves to `(shard, offset)`; `None` if that is not inside the available range.
    pub(crate) fn seek(&mut self, shard: usize, offset: u64, epoch: u64) -> Option<()> {
        let start = *self.starts.get(shard)?;
        let end = self.starts.get(shard + 1).copied().unwrap_or(self.available);
        let pos = start.checked_add(offset)?;
        if pos >= end {
            return None;
        }
        self.pos = pos;
        self.epoch = epoch;
        Some(())
    }
}
