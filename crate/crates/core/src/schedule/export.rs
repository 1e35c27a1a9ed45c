//! Schedule files.
//!
//! Text: one line per item, `index\tsource_id\tshard_id\toffset\tquantum`.
//!
//! Binary: a 16-byte header (8-byte magic, u32 version, u32 quantum) followed
//! by one record of four little-endian u64 per item:
//! `index, source ordinal, shard ordinal, offset`.

use std::io::{self, BufRead, Read, Write};

use super::ScheduleItem;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: [u8; 8] = *b"BLENDSCH";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryHeader {
    pub version: u32,
    pub quantum: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryRecord {
    pub index: u64,
    pub source: u64,
    pub shard: u64,
    pub offset: u64,
}

impl From<&ScheduleItem> for BinaryRecord {
    fn from(item: &ScheduleItem) -> Self {
        BinaryRecord {
            index: item.index,
            source: item.source_ordinal,
            shard: item.shard_ordinal,
            offset: item.offset,
        }
    }
}

/// Writes the text form; returns the number of items written.
pub fn write_tsv<W: Write>(items: impl IntoIterator<Item = ScheduleItem>, out: W) -> io::Result<u64> {
    let mut out = io::BufWriter::new(out);
    let mut n = 0;
    for item in items {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            item.index, item.source_id, item.shard_id, item.offset, item.quantum
        )?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

/// Parses the text form back into items. Ordinals are left at zero.
pub fn read_tsv<R: BufRead>(input: R) -> Result<Vec<ScheduleItem>> {
    let mut items = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("schedule line {}: {e}", lineno + 1)))?;
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = || Error::Parse(format!("schedule line {}: `{line}`", lineno + 1));
        let [index, source, shard, offset, quantum] = fields.as_slice() else {
            return Err(bad());
        };
        items.push(ScheduleItem {
            index: index.parse().map_err(|_| bad())?,
            source_id: source.to_string(),
            shard_id: shard.to_string(),
            offset: offset.parse().map_err(|_| bad())?,
            quantum: quantum.parse().map_err(|_| bad())?,
            source_ordinal: 0,
            shard_ordinal: 0,
        });
    }
    Ok(items)
}

/// Writes the binary form; returns the number of records written.
pub fn write_binary<W: Write>(
    items: impl IntoIterator<Item = ScheduleItem>,
    quantum: u64,
    out: W,
) -> Result<u64> {
    let quantum = u32::try_from(quantum)
        .map_err(|_| Error::BudgetOverflow(format!("quantum {quantum} does not fit the binary header")))?;
    let io_err = |e| Error::io("<schedule>", e);
    let mut out = io::BufWriter::new(out);
    out.write_all(&BINARY_MAGIC).map_err(io_err)?;
    out.write_all(&BINARY_VERSION.to_le_bytes()).map_err(io_err)?;
    out.write_all(&quantum.to_le_bytes()).map_err(io_err)?;
    let mut n = 0;
    for item in items {
        let r = BinaryRecord::from(&item);
        for v in [r.index, r.source, r.shard, r.offset] {
            out.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        n += 1;
    }
    out.flush().map_err(io_err)?;
    Ok(n)
}

pub fn read_binary<R: Read>(mut input: R) -> Result<(BinaryHeader, Vec<BinaryRecord>)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<schedule>", e))?;
    if bytes.len() < 16 || bytes[..8] != BINARY_MAGIC {
        return Err(Error::Parse("not a binary schedule".to_string()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let header = BinaryHeader {
        version: word(8),
        quantum: word(12),
    };
    if header.version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported schedule version {}", header.version)));
    }
    let body = &bytes[16..];
    if body.len() % 32 != 0 {
        return Err(Error::Parse("truncated binary schedule".to_string()));
    }
    let records = body
        .chunks_exact(32)
        .map(|c| {
            let v = |k: usize| u64::from_le_bytes(c[k * 8..k * 8 + 8].try_into().expect("8 bytes"));
            BinaryRecord {
                index: v(0),
                source: v(1),
                shard: v(2),
                offset: v(3),
            }
        })
        .collect();
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(index: u64) -> ScheduleItem {
        ScheduleItem {
            index,
            source_id: "math".into(),
            shard_id: "s1".into(),
            offset: index * 4096,
            quantum: 4096,
            source_ordinal: 3,
            shard_ordinal: 1,
        }
    }

    #[test]
    fn tsv_round_trip() {
        let mut buf = Vec::new();
        write_tsv((0..3).map(item), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next(), Some("0\tmath\ts1\t0\t4096"));
        let back = read_tsv(buf.as_slice()).unwrap();
        assert_eq!(back[2].offset, 8192);
        assert!(read_tsv("1\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_layout() {
        let mut buf = Vec::new();
        write_binary((0..2).map(item), 4096, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 2 * 32);
        assert_eq!(&buf[..8], b"BLENDSCH");
        assert_eq!(&buf[8..12], &[1, 0, 0, 0]);
        assert_eq!(&buf[12..16], &4096u32.to_le_bytes());
        let (header, records) = read_binary(buf.as_slice()).unwrap();
        assert_eq!(header.quantum, 4096);
        assert_eq!(records[1], BinaryRecord { index: 1, source: 3, shard: 1, offset: 4096 });
        assert!(read_binary(&buf[..20]).is_err());
    }
}
