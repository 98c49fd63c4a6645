use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const FEET_PER_METER: f64 = 3.28084;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetbackKind {
    FixedDistance,
    TipHeightMultiplier,
    HubHeightMultiplier,
    RotorDiameterMultiplier,
    HubPlusRotorMultiplier,
    MultiCondition,
}

impl SetbackKind {
    pub const ALL: [SetbackKind; 6] = [
        SetbackKind::FixedDistance,
        SetbackKind::TipHeightMultiplier,
        SetbackKind::HubHeightMultiplier,
        SetbackKind::RotorDiameterMultiplier,
        SetbackKind::HubPlusRotorMultiplier,
        SetbackKind::MultiCondition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SetbackKind::FixedDistance => "fixed_distance",
            SetbackKind::TipHeightMultiplier => "tip_height_multiplier",
            SetbackKind::HubHeightMultiplier => "hub_height_multiplier",
            SetbackKind::RotorDiameterMultiplier => "rotor_diameter_multiplier",
            SetbackKind::HubPlusRotorMultiplier => "hub_plus_rotor_multiplier",
            SetbackKind::MultiCondition => "multi_condition",
        }
    }

    pub fn is_multiplier(self) -> bool {
        !matches!(
            self,
            SetbackKind::FixedDistance | SetbackKind::MultiCondition
        )
    }
}

impl fmt::Display for SetbackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetbackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SetbackKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown setback kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Feet,
    Meters,
    Decibels,
    Acres,
    HoursPerYear,
    TurbinesPerSquareMile,
}

impl Unit {
    pub const ALL: [Unit; 6] = [
        Unit::Feet,
        Unit::Meters,
        Unit::Decibels,
        Unit::Acres,
        Unit::HoursPerYear,
        Unit::TurbinesPerSquareMile,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Feet => "feet",
            Unit::Meters => "meters",
            Unit::Decibels => "decibels",
            Unit::Acres => "acres",
            Unit::HoursPerYear => "hours_per_year",
            Unit::TurbinesPerSquareMile => "turbines_per_square_mile",
        }
    }

    /// Wording used in answer statements.
    pub fn spoken(self) -> &'static str {
        match self {
            Unit::Feet => "feet",
            Unit::Meters => "meters",
            Unit::Decibels => "dBA",
            Unit::Acres => "acres",
            Unit::HoursPerYear => "hours per year",
            Unit::TurbinesPerSquareMile => "turbines per square mile",
        }
    }

    pub fn is_length(self) -> bool {
        matches!(self, Unit::Feet | Unit::Meters)
    }

    /// `value` in feet, or `None` for a unit that is not a length.
    pub fn to_feet(self, value: f64) -> Option<f64> {
        match self {
            Unit::Feet => Some(value),
            Unit::Meters => Some(value * FEET_PER_METER),
            _ => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Unit::ALL
            .into_iter()
            .find(|u| u.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown unit {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combinator {
    Lesser,
    Greater,
}

impl FromStr for Combinator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lesser" => Ok(Combinator::Lesser),
            "greater" => Ok(Combinator::Greater),
            other => Err(format!("unknown combinator {other:?}")),
        }
    }
}

/// How far a turbine must be from a feature, or the limit a value feature imposes.
///
/// `value` is a distance in `unit` for fixed distances and a dimensionless
/// factor for multipliers. For `multi_condition` the distance comes from
/// `conditions` and `combinator`; `value` holds the resolved distance when
/// one was chosen, and is otherwise informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetbackSpec {
    pub kind: SetbackKind,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<SetbackSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combinator: Option<Combinator>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid setback spec: {0}")]
pub struct SpecError(pub String);

impl SetbackSpec {
    pub fn fixed(value: f64, unit: Unit) -> Self {
        Self {
            kind: SetbackKind::FixedDistance,
            value,
            unit: Some(unit),
            conditions: Vec::new(),
            combinator: None,
        }
    }

    /// # Panics
    ///
    /// If `kind` is not a multiplier kind.
    pub fn multiplier(kind: SetbackKind, value: f64) -> Self {
        assert!(kind.is_multiplier(), "{kind} is not a multiplier");
        Self {
            kind,
            value,
            unit: None,
            conditions: Vec::new(),
            combinator: None,
        }
    }

    pub fn multi(combinator: Combinator, conditions: Vec<SetbackSpec>) -> Self {
        Self {
            kind: SetbackKind::MultiCondition,
            value: 1.0,
            unit: None,
            conditions,
            combinator: Some(combinator),
        }
    }

    /// A multi-condition setback whose final distance was already chosen.
    pub fn resolved_multi(value: f64, unit: Unit) -> Self {
        Self {
            kind: SetbackKind::MultiCondition,
            value,
            unit: Some(unit),
            conditions: vec![SetbackSpec::fixed(value, unit)],
            combinator: Some(Combinator::Greater),
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(self.value.is_finite() && self.value > 0.0) {
            return Err(SpecError(format!(
                "value must be positive, got {}",
                self.value
            )));
        }
        match self.kind {
            SetbackKind::MultiCondition => {
                if self.conditions.is_empty() {
                    return Err(SpecError("multi_condition needs conditions".into()));
                }
                if self.combinator.is_none() {
                    return Err(SpecError("multi_condition needs a combinator".into()));
                }
                self.conditions.iter().try_for_each(SetbackSpec::validate)
            }
            kind => {
                if !self.conditions.is_empty() || self.combinator.is_some() {
                    return Err(SpecError(format!("{kind} cannot have conditions")));
                }
                match (kind, self.unit) {
                    (SetbackKind::FixedDistance, None) => {
                        Err(SpecError("fixed_distance needs a unit".into()))
                    }
                    (k, Some(u)) if k.is_multiplier() => {
                        Err(SpecError(format!("{k} is dimensionless but has unit {u}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Distance in feet for `turbine`; `None` if the spec is not a length.
    pub fn effective_setback(&self, turbine: &ReferenceTurbine) -> Option<f64> {
        effective_setback(self, turbine)
    }
}

/// Reference turbine used to turn multipliers into distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceTurbine {
    pub hub_height_ft: f64,
    pub blade_length_ft: f64,
}

impl Default for ReferenceTurbine {
    fn default() -> Self {
        Self {
            hub_height_ft: 377.0,
            blade_length_ft: 279.0,
        }
    }
}

impl ReferenceTurbine {
    pub fn new(hub_height_ft: f64, blade_length_ft: f64) -> Result<Self, SpecError> {
        let t = Self {
            hub_height_ft,
            blade_length_ft,
        };
        t.validate().map(|_| t)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for (name, v) in [
            ("hub height", self.hub_height_ft),
            ("blade length", self.blade_length_ft),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpecError(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn rotor_diameter_ft(&self) -> f64 {
        2.0 * self.blade_length_ft
    }

    pub fn tip_height_ft(&self) -> f64 {
        self.hub_height_ft + self.blade_length_ft
    }
}

/// Distance in feet that `spec` requires for `turbine`.
///
/// Returns `None` when a fixed value is not a length (noise, acres, ...).
pub fn effective_setback(spec: &SetbackSpec, turbine: &ReferenceTurbine) -> Option<f64> {
    let v = spec.value;
    match spec.kind {
        SetbackKind::FixedDistance => spec.unit.and_then(|u| u.to_feet(v)),
        SetbackKind::TipHeightMultiplier => Some(v * turbine.tip_height_ft()),
        SetbackKind::HubHeightMultiplier => Some(v * turbine.hub_height_ft),
        SetbackKind::RotorDiameterMultiplier => Some(v * turbine.rotor_diameter_ft()),
        SetbackKind::HubPlusRotorMultiplier => {
            Some(v * (turbine.hub_height_ft + turbine.rotor_diameter_ft()))
        }
        SetbackKind::MultiCondition => {
            let values = spec
                .conditions
                .iter()
                .map(|c| effective_setback(c, turbine))
                .collect::<Option<Vec<f64>>>()?;
            match spec.combinator? {
                Combinator::Lesser => values.into_iter().reduce(f64::min),
                Combinator::Greater => values.into_iter().reduce(f64::max),
            }
        }
    }
}
