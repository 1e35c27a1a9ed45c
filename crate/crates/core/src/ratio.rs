//! Exact rational helpers shared by every module.
//!
//! Weights, fractions and epoch counts are carried as [`Ratio`] values and only
//! floored or rounded at the point where a token budget becomes an integer.
//! Text forms are `"p/q"` or plain decimals (`"0.4"`, `"1e12"`); percentages
//! are written as exact decimals (`"24.0"`) whenever the value terminates.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Ratio = BigRational;

pub fn ratio(numer: i64, denom: i64) -> Ratio {
    Ratio::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: u64) -> Ratio {
    Ratio::from_integer(BigInt::from(n))
}

pub fn hundred() -> Ratio {
    int(100)
}

/// Parses `p/q`, a plain decimal, or a decimal with an exponent.
pub fn parse_ratio(text: &str) -> Result<Ratio> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_decimal(num.trim())
            .ok_or_else(|| Error::Parse(format!("bad numerator in `{text}`")))?;
        let den = parse_decimal(den.trim())
            .ok_or_else(|| Error::Parse(format!("bad denominator in `{text}`")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{text}`")));
        }
        return Ok(num / den);
    }
    parse_decimal(text).ok_or_else(|| Error::Parse(format!("`{text}` is not a number")))
}

/// Decimal with optional sign, fraction and exponent, parsed exactly.
pub fn parse_decimal(text: &str) -> Option<Ratio> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut all = String::with_capacity(whole.len() + frac.len());
    all.push_str(whole);
    all.push_str(frac);
    let mut value = Ratio::from_integer(all.parse::<BigInt>().ok()?);
    let shift = exponent - frac.len() as i32;
    let scale = Ratio::from_integer(BigInt::from(10u32).pow(shift.unsigned_abs()));
    if shift >= 0 {
        value *= scale;
    } else {
        value /= scale;
    }
    Some(if negative { -value } else { value })
}

/// `"n"` for integers, `"p/q"` otherwise.
pub fn format_ratio(value: &Ratio) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Exact decimal text when the expansion terminates, with at least
/// `min_frac` fraction digits.
pub fn format_decimal(value: &Ratio, min_frac: usize) -> Option<String> {
    let mut denom = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while denom.is_multiple_of(&two) {
        denom /= &two;
        twos += 1;
    }
    while denom.is_multiple_of(&five) {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let places = twos.max(fives).max(min_frac);
    let scaled = value * Ratio::from_integer(BigInt::from(10u32).pow(places as u32));
    debug_assert!(scaled.is_integer());
    let digits = scaled.numer().abs().to_string();
    let sign = if value.is_negative() { "-" } else { "" };
    if places == 0 {
        return Some(format!("{sign}{digits}"));
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = padded.split_at(padded.len() - places);
    Some(format!("{sign}{int_part}.{frac_part}"))
}

/// A weight written as a percentage: `"24.0"` for 0.24, `"1/3"` style
/// percent fraction when the decimal does not terminate.
pub fn format_percent(weight: &Ratio) -> String {
    let pct = weight * hundred();
    format_decimal(&pct, 1).unwrap_or_else(|| format_ratio(&pct))
}

pub fn parse_percent(text: &str) -> Result<Ratio> {
    Ok(parse_ratio(text)? / hundred())
}

pub fn floor_u64(value: &Ratio) -> Result<u64> {
    value
        .floor()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("{} does not fit a token count", format_ratio(value))))
}

/// Round half away from zero.
pub fn round_u64(value: &Ratio) -> Result<u64> {
    value
        .round()
        .to_integer()
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("{} does not fit a token count", format_ratio(value))))
}

pub fn to_f64(value: &Ratio) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Rounds to `places` decimal places, half away from zero.
pub fn round_places(value: &Ratio, places: u32) -> Ratio {
    let scale = Ratio::from_integer(BigInt::from(10u32).pow(places));
    (value * &scale).round() / scale
}

pub(crate) fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Ratio>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serde adapter: rational as a `"p/q"` / decimal string.
pub mod as_ratio {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_ratio, parse_ratio, Ratio};

    pub fn serialize<S: Serializer>(value: &Ratio, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_ratio(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter: map of key to weight, written as percent strings.
pub mod as_percent_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_percent, parse_percent, Ratio};

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, Ratio>, s: S) -> Result<S::Ok, S::Error> {
        let mut out = s.serialize_map(Some(map.len()))?;
        for (key, weight) in map {
            out.serialize_entry(key, &format_percent(weight))?;
        }
        out.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Ratio>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| parse_percent(&v).map(|w| (k, w)).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter: map of key to rational string.
pub mod as_ratio_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_ratio, parse_ratio, Ratio};

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, Ratio>, s: S) -> Result<S::Ok, S::Error> {
        let mut out = s.serialize_map(Some(map.len()))?;
        for (key, value) in map {
            out.serialize_entry(key, &format_ratio(value))?;
        }
        out.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, Ratio>, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| parse_ratio(&v).map(|r| (k, r)).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_and_decimals() {
        assert_eq!(parse_ratio("1/15").unwrap(), ratio(1, 15));
        assert_eq!(parse_ratio("0.4").unwrap(), ratio(2, 5));
        assert_eq!(parse_ratio("1e12").unwrap(), int(1_000_000_000_000));
        assert_eq!(parse_ratio("1.7e12").unwrap(), int(1_700_000_000_000));
        assert_eq!(parse_ratio("-0.1").unwrap(), ratio(-1, 10));
        assert_eq!(parse_ratio("3e-6").unwrap(), ratio(3, 1_000_000));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
        assert!(parse_ratio(".").is_err());
    }

    #[test]
    fn percent_text() {
        assert_eq!(format_percent(&ratio(24, 100)), "24.0");
        assert_eq!(format_percent(&ratio(78, 10_000)), "0.78");
        assert_eq!(format_percent(&ratio(3705, 10_000)), "37.05");
        assert_eq!(format_percent(&ratio(1, 3)), "100/3");
        assert_eq!(parse_percent("100/3").unwrap(), ratio(1, 3));
        assert_eq!(format_percent(&ratio(-1, 10)), "-10.0");
        assert_eq!(format_percent(&ratio(1, 1000)), "0.1");
        assert_eq!(format_percent(&ratio(1, 100_000)), "0.001");
    }

    #[test]
    fn rounding() {
        assert_eq!(round_places(&ratio(10, 17), 1), ratio(6, 10));
        assert_eq!(round_u64(&ratio(5, 2)).unwrap(), 3);
        assert_eq!(floor_u64(&ratio(161_500_000_000, 15)).unwrap(), 10_766_666_666);
    }
}
