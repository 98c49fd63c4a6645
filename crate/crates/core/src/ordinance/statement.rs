//! Parsers for the final one-line answers the trees ask for.

use std::sync::LazyLock;

use regex::Regex;

use super::Unit;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatementError {
    #[error("no answer statement found in {0:?}")]
    PatternAbsent(String),
    #[error("unrecognized unit {0:?}")]
    UnknownUnit(String),
    #[error("a setback must be a distance, got {0}")]
    NotADistance(Unit),
    #[error("value must be positive, got {0}")]
    NotPositive(String),
}

const NUMBER: &str = r"(\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)";

static SETBACK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?i)\bthe\s+(?:final\s+)?setback(?:\s+distance|\s+value)?\s+is\s+(?:approximately\s+|about\s+)?{NUMBER}\s*(.*)")).unwrap()
});
static VALUE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\bthe\s+(?:final\s+)?value\s+is\s+(?:approximately\s+|about\s+)?{NUMBER}\s*(.*)"
    ))
    .unwrap()
});
static MULTIPLIER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(
        r"(?i)\bthe\s+(?:final\s+)?multiplier\s+is\s+(?:approximately\s+|about\s+)?{NUMBER}"
    ))
    .unwrap()
});
static UNIT: LazyLock<Vec<(Regex, Unit)>> = LazyLock::new(|| {
    [
        (r"^(?:feet|foot|ft\b\.?|')", Unit::Feet),
        (r"^(?:meters?|metres?|m\b)", Unit::Meters),
        (r"^(?:decibels?|dba\b|db\s*\(a\)|db\b)", Unit::Decibels),
        (r"^(?:acres?|ac\b)", Unit::Acres),
        (
            r"^(?:hours?|hrs?)\s*(?:per|/|a|each)\s*(?:year|yr|annum)",
            Unit::HoursPerYear,
        ),
        (
            r"^turbines?\s*(?:per|/)\s*(?:square|sq\.?)\s*(?:miles?|mi\b)",
            Unit::TurbinesPerSquareMile,
        ),
    ]
    .into_iter()
    .map(|(re, u)| (Regex::new(&format!("(?i){re}")).unwrap(), u))
    .collect()
});

fn parse_number(raw: &str) -> Result<f64, StatementError> {
    let v: f64 = raw
        .replace(',', "")
        .parse()
        .map_err(|_| StatementError::NotPositive(raw.to_string()))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(StatementError::NotPositive(raw.to_string()))
    }
}

/// Map the words after a number to a unit: `feet`, `(meters)`, `dBA`, ...
pub fn parse_unit(text: &str) -> Result<Unit, StatementError> {
    let t = text.trim_start().trim_start_matches('(').trim_start();
    UNIT.iter()
        .find(|(re, _)| re.is_match(t))
        .map(|(_, u)| *u)
        .ok_or_else(|| {
            let shown: String = t.chars().take(40).collect();
            StatementError::UnknownUnit(shown.trim_end().to_string())
        })
}

fn number_and_unit(re: &Regex, text: &str) -> Result<(f64, Unit), StatementError> {
    let caps = re
        .captures(text)
        .ok_or_else(|| StatementError::PatternAbsent(text.trim().to_string()))?;
    let value = parse_number(&caps[1])?;
    let unit = parse_unit(&caps[2])?;
    Ok((value, unit))
}

/// Parse "The setback is 1,250 feet." into `(1250.0, Feet)`.
pub fn parse_setback_statement(text: &str) -> Result<(f64, Unit), StatementError> {
    let (v, u) = number_and_unit(&SETBACK, text)?;
    if u.is_length() {
        Ok((v, u))
    } else {
        Err(StatementError::NotADistance(u))
    }
}

/// Parse "The value is 45 dBA" and the like; any known unit.
pub fn parse_value_statement(text: &str) -> Result<(f64, Unit), StatementError> {
    number_and_unit(&VALUE, text)
}

/// Parse "The multiplier is 1.1".
pub fn parse_multiplier_statement(text: &str) -> Result<f64, StatementError> {
    let caps = MULTIPLIER
        .captures(text)
        .ok_or_else(|| StatementError::PatternAbsent(text.trim().to_string()))?;
    parse_number(&caps[1])
}

/// Shortest round-tripping decimal with thousands separators in the integer part.
pub fn format_number(value: f64) -> String {
    let plain = format!("{value}");
    let (int, frac) = plain
        .split_once('.')
        .map_or((plain.as_str(), None), |(i, f)| (i, Some(f)));
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    match frac {
        Some(f) => format!("{grouped}.{f}"),
        None => grouped,
    }
}

pub fn format_setback_statement(value: f64, unit: Unit) -> String {
    format!("The setback is {} {}.", format_number(value), unit.spoken())
}

pub fn format_value_statement(value: f64, unit: Unit) -> String {
    format!("The value is {} {}.", format_number(value), unit.spoken())
}
