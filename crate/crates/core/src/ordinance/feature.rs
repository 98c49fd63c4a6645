use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Unit;

/// The thirteen siting features extracted from each ordinance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureType {
    StructuresParticipating,
    StructuresNonparticipating,
    PropertyLineParticipating,
    PropertyLineNonparticipating,
    Roads,
    Railroads,
    TransmissionLines,
    BodiesOfWater,
    Noise,
    MaxSystemHeight,
    MinLotSize,
    ShadowFlicker,
    TurbineDensity,
}

impl FeatureType {
    pub const ALL: [FeatureType; 13] = [
        FeatureType::StructuresParticipating,
        FeatureType::StructuresNonparticipating,
        FeatureType::PropertyLineParticipating,
        FeatureType::PropertyLineNonparticipating,
        FeatureType::Roads,
        FeatureType::Railroads,
        FeatureType::TransmissionLines,
        FeatureType::BodiesOfWater,
        FeatureType::Noise,
        FeatureType::MaxSystemHeight,
        FeatureType::MinLotSize,
        FeatureType::ShadowFlicker,
        FeatureType::TurbineDensity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureType::StructuresParticipating => "structures_participating",
            FeatureType::StructuresNonparticipating => "structures_nonparticipating",
            FeatureType::PropertyLineParticipating => "property_line_participating",
            FeatureType::PropertyLineNonparticipating => "property_line_nonparticipating",
            FeatureType::Roads => "roads",
            FeatureType::Railroads => "railroads",
            FeatureType::TransmissionLines => "transmission_lines",
            FeatureType::BodiesOfWater => "bodies_of_water",
            FeatureType::Noise => "noise",
            FeatureType::MaxSystemHeight => "max_system_height",
            FeatureType::MinLotSize => "min_lot_size",
            FeatureType::ShadowFlicker => "shadow_flicker",
            FeatureType::TurbineDensity => "turbine_density",
        }
    }

    /// Distance setbacks, as opposed to value limits such as noise.
    pub fn is_setback(self) -> bool {
        !matches!(
            self,
            FeatureType::Noise
                | FeatureType::MaxSystemHeight
                | FeatureType::MinLotSize
                | FeatureType::ShadowFlicker
                | FeatureType::TurbineDensity
        )
    }

    /// Phrase used in prompts; rendered by the `{feature}` placeholder.
    pub fn description(self) -> &'static str {
        match self {
            FeatureType::StructuresParticipating => {
                "participating buildings, structures, and/or residences"
            }
            FeatureType::StructuresNonparticipating => "buildings, structures, and/or residences",
            FeatureType::PropertyLineParticipating => {
                "participating property lines, parcel boundaries, and/or lot lines"
            }
            FeatureType::PropertyLineNonparticipating => {
                "property lines, parcel boundaries, and/or lot lines"
            }
            FeatureType::Roads => "roads, highways, and/or public rights-of-way",
            FeatureType::Railroads => "railroads, railways, and/or railroad rights-of-way",
            FeatureType::TransmissionLines => "overhead transmission lines and/or utility lines",
            FeatureType::BodiesOfWater => {
                "lakes, rivers, streams, wetlands, and/or other bodies of water"
            }
            FeatureType::Noise => "the noise or sound level produced by wind energy systems",
            FeatureType::MaxSystemHeight => "the total height of wind energy systems",
            FeatureType::MinLotSize => "the minimum lot or parcel size for wind energy systems",
            FeatureType::ShadowFlicker => "shadow flicker caused by wind energy systems",
            FeatureType::TurbineDensity => "the number or density of wind turbines in an area",
        }
    }

    /// Short noun used inside option lists.
    pub fn subject(self) -> &'static str {
        match self {
            FeatureType::StructuresParticipating => "participating buildings and structures",
            FeatureType::StructuresNonparticipating => "buildings and structures",
            FeatureType::PropertyLineParticipating => "participating property lines",
            FeatureType::PropertyLineNonparticipating => "property lines",
            FeatureType::Roads => "roads",
            FeatureType::Railroads => "railroads",
            FeatureType::TransmissionLines => "transmission lines",
            FeatureType::BodiesOfWater => "bodies of water",
            FeatureType::Noise => "the noise limit",
            FeatureType::MaxSystemHeight => "the height limit",
            FeatureType::MinLotSize => "the lot size requirement",
            FeatureType::ShadowFlicker => "the shadow flicker limit",
            FeatureType::TurbineDensity => "the turbine density limit",
        }
    }

    /// Whether an extracted value in `unit` makes sense for this feature.
    pub fn accepts_unit(self, unit: Unit) -> bool {
        match self {
            FeatureType::Noise => unit == Unit::Decibels,
            FeatureType::MinLotSize => unit == Unit::Acres,
            FeatureType::ShadowFlicker => unit == Unit::HoursPerYear,
            FeatureType::TurbineDensity => unit == Unit::TurbinesPerSquareMile,
            _ => unit.is_length(),
        }
    }
}

impl fmt::Display for FeatureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature {0:?}")]
pub struct UnknownFeature(pub String);

impl FromStr for FeatureType {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        FeatureType::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownFeature(s.to_string()))
    }
}
