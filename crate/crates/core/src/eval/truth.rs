use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::Jurisdiction;
use crate::ordinance::{Combinator, FeatureType, SetbackKind, SetbackSpec, Unit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub jurisdiction: Jurisdiction,
    pub feature: FeatureType,
    pub exists: bool,
    pub spec: Option<SetbackSpec>,
}

#[derive(Debug, Deserialize)]
struct Row {
    county: String,
    state: String,
    feature: String,
    exists: String,
    #[serde(default)]
    kind: String,
    #[serde(default)]
    value: String,
    #[serde(default)]
    unit: String,
    #[serde(default)]
    combinator: String,
    #[serde(default)]
    condition_list: String,
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "y" => Ok(true),
        "false" | "no" | "0" | "n" => Ok(false),
        other => Err(format!("exists must be true or false, got {other:?}")),
    }
}

fn parse_value(s: &str) -> Result<f64, String> {
    s.trim()
        .replace(',', "")
        .parse()
        .map_err(|_| format!("bad value {s:?}"))
}

fn parse_unit(s: &str) -> Result<Option<Unit>, String> {
    let s = s.trim();
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// One `kind:value[:unit]` entry of a condition list.
fn parse_condition(s: &str) -> Result<SetbackSpec, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let (kind, value, unit) = match parts.as_slice() {
        [k, v] => (*k, *v, ""),
        [k, v, u] => (*k, *v, *u),
        _ => return Err(format!("condition {s:?} is not kind:value[:unit]")),
    };
    simple_spec(kind.parse()?, parse_value(value)?, parse_unit(unit)?)
}

fn simple_spec(kind: SetbackKind, value: f64, unit: Option<Unit>) -> Result<SetbackSpec, String> {
    match kind {
        SetbackKind::FixedDistance => {
            let unit = unit.ok_or("fixed_distance needs a unit")?;
            Ok(SetbackSpec::fixed(value, unit))
        }
        SetbackKind::MultiCondition => Err("nested multi_condition is not supported".into()),
        k => Ok(SetbackSpec::multiplier(k, value)),
    }
}

fn row_to_record(row: Row) -> Result<GroundTruthRecord, String> {
    let jurisdiction =
        Jurisdiction::new(row.county.trim(), row.state.trim()).map_err(|e| e.to_string())?;
    let feature: FeatureType = row
        .feature
        .parse()
        .map_err(|e: crate::ordinance::UnknownFeature| e.to_string())?;
    let exists = parse_bool(&row.exists)?;
    if !exists {
        return Ok(GroundTruthRecord {
            jurisdiction,
            feature,
            exists,
            spec: None,
        });
    }
    let kind: SetbackKind = row.kind.parse()?;
    let spec = if kind == SetbackKind::MultiCondition {
        let conditions = row
            .condition_list
            .split(';')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(parse_condition)
            .collect::<Result<Vec<_>, _>>()?;
        let combinator: Combinator = row.combinator.parse()?;
        let mut spec = SetbackSpec::multi(combinator, conditions);
        if !row.value.trim().is_empty() {
            spec.value = parse_value(&row.value)?;
        }
        spec.unit = parse_unit(&row.unit)?;
        spec
    } else {
        simple_spec(kind, parse_value(&row.value)?, parse_unit(&row.unit)?)?
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(GroundTruthRecord {
        jurisdiction,
        feature,
        exists,
        spec: Some(spec),
    })
}

/// Parse ground truth CSV text. `name` is used in error messages.
pub fn parse_ground_truth(
    reader: impl Read,
    name: &str,
) -> Result<Vec<GroundTruthRecord>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let err = |line: u64, detail: String| EvalError::Parse {
        path: name.to_string(),
        line,
        detail,
    };
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let mut out = Vec::new();
    for result in rdr.records() {
        let record =
            result.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record
            .deserialize(Some(&headers))
            .map_err(|e| err(line, e.to_string()))?;
        out.push(row_to_record(row).map_err(|d| err(line, d))?);
    }
    Ok(out)
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthRecord>, EvalError> {
    let file = std::fs::File::open(path)?;
    parse_ground_truth(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "county,state,feature,exists,kind,value,unit,combinator,condition_list\n";

    #[test]
    fn parses_all_shapes() {
        let csv = format!(
            "{HEADER}Monroe,WI,structures_nonparticipating,true,multi_condition,,,lesser,\"fixed_distance:1250:feet;tip_height_multiplier:3.1\"\n\
Monroe,WI,structures_participating,true,tip_height_multiplier,1.1,,,\n\
Monroe,WI,noise,true,fixed_distance,50,decibels,,\n\
Monroe,WI,railroads,false,,,,,\n"
        );
        let rows = parse_ground_truth(csv.as_bytes(), "t.csv").unwrap();
        assert_eq!(rows.len(), 4);
        let multi = rows[0].spec.as_ref().unwrap();
        assert_eq!(multi.conditions.len(), 2);
        assert_eq!(multi.combinator, Some(Combinator::Lesser));
        assert_eq!(
            rows[1].spec,
            Some(SetbackSpec::multiplier(
                SetbackKind::TipHeightMultiplier,
                1.1
            ))
        );
        assert_eq!(rows[2].spec, Some(SetbackSpec::fixed(50.0, Unit::Decibels)));
        assert!(!rows[3].exists && rows[3].spec.is_none());
    }

    #[test]
    fn errors_name_the_line() {
        let csv = format!("{HEADER}Monroe,WI,roads,false,,,,,\nMonroe,WI,structures,false,,,,,\n");
        let err = parse_ground_truth(csv.as_bytes(), "t.csv")
            .unwrap_err()
            .to_string();
        assert!(err.contains("t.csv: line 3"), "{err}");
        assert!(err.contains("structures"), "{err}");

        let csv = format!("{HEADER}Monroe,WI,roads,maybe,,,,,\n");
        let err = parse_ground_truth(csv.as_bytes(), "t.csv")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_ground_truth(HEADER.as_bytes(), "t")
            .unwrap()
            .is_empty());
    }
}
