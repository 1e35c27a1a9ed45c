//! Token-count text: `4096`, `1e12`, `300B`, `1.7T`.

use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::ratio::{int, parse_decimal, Ratio};

pub const THOUSAND: u64 = 1_000;
pub const MILLION: u64 = 1_000_000;
pub const BILLION: u64 = 1_000_000_000;
pub const TRILLION: u64 = 1_000_000_000_000;

/// Parses a token count, accepting scientific notation and K/M/B/T suffixes.
/// The value must come out as a non-negative integer.
pub fn parse_tokens(text: &str) -> Result<u64> {
    let text = text.trim().replace('_', "");
    let (number, scale) = match text.chars().last() {
        Some('K' | 'k') => (&text[..text.len() - 1], THOUSAND),
        Some('M' | 'm') => (&text[..text.len() - 1], MILLION),
        Some('B' | 'b') => (&text[..text.len() - 1], BILLION),
        Some('T' | 't') => (&text[..text.len() - 1], TRILLION),
        _ => (text.as_str(), 1),
    };
    let value: Ratio = parse_decimal(number)
        .ok_or_else(|| Error::Parse(format!("`{text}` is not a token count")))?
        * int(scale);
    if value.is_negative() || !value.is_integer() {
        return Err(Error::Parse(format!("`{text}` is not a whole number of tokens")));
    }
    value
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Parse(format!("`{text}` overflows 64 bits")))
}

/// Short human form used in text reports, e.g. `1.7T`, `300B`.
pub fn format_tokens(tokens: u64) -> String {
    for (scale, suffix) in [(TRILLION, "T"), (BILLION, "B"), (MILLION, "M"), (THOUSAND, "K")] {
        if tokens >= scale {
            let whole = tokens / scale;
            let frac = tokens % scale;
            if frac == 0 {
                return format!("{whole}{suffix}");
            }
            let value = tokens as f64 / scale as f64;
            return format!("{value:.3}{suffix}");
        }
    }
    tokens.to_string()
}
