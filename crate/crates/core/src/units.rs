//! Quantity parsing at the I/O boundary.
//!
//! Internally every quantity is SI: seconds, watts, joules, bits, bits/second,
//! joules/bit and bytes for memory/storage. Strings such as `"64MiB"`,
//! `"120ms"`, `"129.96Wh"` or `"0.70uJ/bit"` are converted here. Binary
//! prefixes (`KiB`, `MiB`, `GiB`, `TiB`) are powers of two; decimal prefixes
//! on bits (`kbit`, `Mbit`) are powers of ten. `1 Wh = 3600 J`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Bytes,
    Bits,
    Seconds,
    Watts,
    Joules,
    BitsPerSecond,
    JoulesPerBit,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Bytes => "bytes",
            Dimension::Bits => "bits",
            Dimension::Seconds => "seconds",
            Dimension::Watts => "watts",
            Dimension::Joules => "joules",
            Dimension::BitsPerSecond => "bits/second",
            Dimension::JoulesPerBit => "joules/bit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("cannot parse quantity {0:?}")]
    Malformed(String),
    #[error("unknown unit {unit:?} for {dimension}")]
    UnknownUnit { unit: String, dimension: Dimension },
    #[error("quantity {0:?} is not finite")]
    NotFinite(String),
}

#[derive(Debug, Clone, Copy)]
enum Scale {
    Mul(f64),
    Div(f64),
}

/// A named unit and its relation to the SI base of its dimension.
#[derive(Debug, Clone, Copy)]
pub struct Unit {
    pub symbol: &'static str,
    pub dimension: Dimension,
    scale: Scale,
}

impl Unit {
    const fn mul(symbol: &'static str, dimension: Dimension, f: f64) -> Self {
        Unit { symbol, dimension, scale: Scale::Mul(f) }
    }

    const fn div(symbol: &'static str, dimension: Dimension, f: f64) -> Self {
        Unit { symbol, dimension, scale: Scale::Div(f) }
    }

    pub fn to_si(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Mul(f) => v * f,
            Scale::Div(f) => v / f,
        }
    }

    pub fn from_si(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Mul(f) => v / f,
            Scale::Div(f) => v * f,
        }
    }
}

const KI: f64 = 1024.0;

use Dimension::*;

static UNITS: &[Unit] = &[
    Unit::mul("B", Bytes, 1.0),
    Unit::mul("kB", Bytes, 1e3),
    Unit::mul("MB", Bytes, 1e6),
    Unit::mul("GB", Bytes, 1e9),
    Unit::mul("TB", Bytes, 1e12),
    Unit::mul("KiB", Bytes, KI),
    Unit::mul("MiB", Bytes, KI * KI),
    Unit::mul("GiB", Bytes, KI * KI * KI),
    Unit::mul("TiB", Bytes, KI * KI * KI * KI),
    Unit::mul("bit", Bits, 1.0),
    Unit::mul("kbit", Bits, 1e3),
    Unit::mul("Mbit", Bits, 1e6),
    Unit::mul("Gbit", Bits, 1e9),
    Unit::mul("B", Bits, 8.0),
    Unit::mul("kB", Bits, 8e3),
    Unit::mul("MB", Bits, 8e6),
    Unit::mul("GB", Bits, 8e9),
    Unit::mul("KiB", Bits, 8.0 * KI),
    Unit::mul("MiB", Bits, 8.0 * KI * KI),
    Unit::mul("GiB", Bits, 8.0 * KI * KI * KI),
    Unit::mul("s", Seconds, 1.0),
    Unit::div("ms", Seconds, 1e3),
    Unit::div("us", Seconds, 1e6),
    Unit::div("μs", Seconds, 1e6),
    Unit::div("µs", Seconds, 1e6),
    Unit::div("ns", Seconds, 1e9),
    Unit::mul("min", Seconds, 60.0),
    Unit::mul("h", Seconds, 3600.0),
    Unit::mul("W", Watts, 1.0),
    Unit::div("mW", Watts, 1e3),
    Unit::mul("kW", Watts, 1e3),
    Unit::mul("J", Joules, 1.0),
    Unit::div("mJ", Joules, 1e3),
    Unit::mul("kJ", Joules, 1e3),
    Unit::mul("Wh", Joules, 3600.0),
    Unit::mul("mWh", Joules, 3.6),
    Unit::mul("kWh", Joules, 3.6e6),
    Unit::mul("bit/s", BitsPerSecond, 1.0),
    Unit::mul("kbit/s", BitsPerSecond, 1e3),
    Unit::mul("Mbit/s", BitsPerSecond, 1e6),
    Unit::mul("Gbit/s", BitsPerSecond, 1e9),
    Unit::mul("B/s", BitsPerSecond, 8.0),
    Unit::mul("MB/s", BitsPerSecond, 8e6),
    Unit::mul("J/bit", JoulesPerBit, 1.0),
    Unit::div("mJ/bit", JoulesPerBit, 1e3),
    Unit::div("uJ/bit", JoulesPerBit, 1e6),
    Unit::div("μJ/bit", JoulesPerBit, 1e6),
    Unit::div("µJ/bit", JoulesPerBit, 1e6),
    Unit::div("nJ/bit", JoulesPerBit, 1e9),
];

/// Looks up a unit symbol within a dimension.
pub fn unit(symbol: &str, dimension: Dimension) -> Result<Unit, UnitError> {
    UNITS
        .iter()
        .find(|u| u.dimension == dimension && u.symbol == symbol)
        .copied()
        .ok_or_else(|| UnitError::UnknownUnit { unit: symbol.to_string(), dimension })
}

/// Parses `"<number>[ ]<unit>"`; a bare number is taken as SI.
pub fn parse_quantity(s: &str, dimension: Dimension) -> Result<f64, UnitError> {
    let t = s.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '-'
                || c == '+'
                || ((c == 'e' || c == 'E')
                    && t[i + 1..].starts_with(|n: char| n.is_ascii_digit() || n == '-' || n == '+')
                    && i > 0))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, sym) = t.split_at(split);
    let value: f64 = num.trim().parse().map_err(|_| UnitError::Malformed(s.to_string()))?;
    let sym = sym.trim();
    let si = if sym.is_empty() { value } else { unit(sym, dimension)?.to_si(value) };
    if !si.is_finite() {
        return Err(UnitError::NotFinite(s.to_string()));
    }
    Ok(si)
}

/// A quantity as it appears in JSON: a bare SI number or a string with unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawQuantity {
    Number(f64),
    Text(String),
}

impl RawQuantity {
    pub fn resolve(&self, dimension: Dimension) -> Result<f64, UnitError> {
        match self {
            RawQuantity::Number(v) if v.is_finite() => Ok(*v),
            RawQuantity::Number(v) => Err(UnitError::NotFinite(v.to_string())),
            RawQuantity::Text(s) => parse_quantity(s, dimension),
        }
    }

    /// SI value written with the base-unit suffix, e.g. `"0.12s"`.
    pub fn si(value: f64, dimension: Dimension) -> Self {
        RawQuantity::Text(format!("{value}{}", base_symbol(dimension)))
    }
}

pub fn base_symbol(dimension: Dimension) -> &'static str {
    match dimension {
        Bytes => "B",
        Bits => "bit",
        Seconds => "s",
        Watts => "W",
        Joules => "J",
        BitsPerSecond => "bit/s",
        JoulesPerBit => "J/bit",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ulp(x: f64) -> f64 {
        let bits = x.abs().to_bits();
        f64::from_bits(bits + 1) - x.abs()
    }

    #[test]
    fn table_values() {
        assert_eq!(parse_quantity("8GiB", Bytes).unwrap(), 8.0 * 1024.0 * 1024.0 * 1024.0);
        assert_eq!(parse_quantity("10TiB", Bytes).unwrap(), 10.0 * 1024f64.powi(4));
        assert_eq!(parse_quantity("129.96Wh", Joules).unwrap(), 129.96 * 3600.0);
        assert_eq!(parse_quantity("15Mbit/s", BitsPerSecond).unwrap(), 15e6);
        assert_eq!(parse_quantity("0.70uJ/bit", JoulesPerBit).unwrap(), 0.70 / 1e6);
        assert_eq!(parse_quantity("2 Mbit", Bits).unwrap(), 2e6);
        assert_eq!(parse_quantity("1MB", Bits).unwrap(), 8e6);
        assert_eq!(parse_quantity("120ms", Seconds).unwrap(), 0.12);
        assert_eq!(parse_quantity("4.2W", Watts).unwrap(), 4.2);
        assert_eq!(parse_quantity("1e-3", Seconds).unwrap(), 1e-3);
        assert_eq!(parse_quantity("2.5e3ms", Seconds).unwrap(), 2.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_quantity("12 parsecs", Seconds), Err(UnitError::UnknownUnit { .. })));
        assert!(matches!(parse_quantity("ms", Seconds), Err(UnitError::Malformed(_))));
        assert!(matches!(parse_quantity("5W", Seconds), Err(UnitError::UnknownUnit { .. })));
        assert!(RawQuantity::Number(f64::INFINITY).resolve(Seconds).is_err());
    }

    #[test]
    fn si_text_round_trips() {
        let q = RawQuantity::si(0.1 + 0.2, Seconds);
        assert_eq!(q.resolve(Seconds).unwrap(), 0.1 + 0.2);
    }

    proptest! {
        #[test]
        fn in_and_out_within_one_ulp(v in 1e-6f64..1e9, idx in 0usize..UNITS.len()) {
            let u = UNITS[idx];
            let back = u.from_si(u.to_si(v));
            prop_assert!((back - v).abs() <= ulp(v), "{} {} -> {}", v, u.symbol, back);
        }
    }
}
