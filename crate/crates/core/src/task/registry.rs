use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

/// Raw contents of the shipped `dimensions.json`.
pub const DIMENSIONS_JSON: &str = include_str!("../../data/dimensions.json");

/// One demographic dimension and its ordered value labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicDimension {
    pub name: String,
    pub label: String,
    pub values: Vec<String>,
}

impl DemographicDimension {
    /// Values in the lowercase form used inside generated code
    /// (`'male'`, `'gender neutral'`).
    pub fn literals(&self) -> Vec<String> {
        self.values.iter().map(|v| v.to_lowercase()).collect()
    }

    pub fn has_value(&self, value: &str) -> bool {
        self.values.iter().any(|v| v.eq_ignore_ascii_case(value))
    }
}

static REGISTRY: LazyLock<Vec<DemographicDimension>> =
    LazyLock::new(|| serde_json::from_str(DIMENSIONS_JSON).expect("shipped dimensions.json is valid"));

/// The seven demographic dimensions, in registry order.
pub fn dimension_registry() -> Vec<DemographicDimension> {
    REGISTRY.clone()
}

pub(crate) fn registry() -> &'static [DemographicDimension] {
    &REGISTRY
}

/// Looks a dimension up by identifier or display label, case-insensitively.
pub fn find_dimension(name: &str) -> Option<&'static DemographicDimension> {
    let wanted = normalize(name);
    REGISTRY.iter().find(|d| normalize(&d.name) == wanted || normalize(&d.label) == wanted)
}

fn normalize(s: &str) -> String {
    s.trim().chars().map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_lowercase() }).collect()
}

/// Column order used by report tables: Overall, Age, Gender, Religion, Race,
/// Employ., Marital, Edu.
pub const REPORT_DIMENSION_ORDER: [&str; 7] = ["age", "gender", "religion", "race", "employment_status", "marital_status", "education"];

pub fn short_label(dimension: &str) -> &'static str {
    match dimension {
        "age" => "Age",
        "gender" => "Gender",
        "religion" => "Religion",
        "race" => "Race",
        "employment_status" => "Employ.",
        "marital_status" => "Marital",
        "education" => "Edu.",
        _ => "?",
    }
}
