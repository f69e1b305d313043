//! Task definitions: the demographic registry, the canonical task document,
//! validation rules and benchmark loading.

mod corpus;
mod document;
mod registry;
mod validate;

use serde::{Deserialize, Serialize};

use crate::value::AttrValue;

pub use corpus::{load_benchmark, ManifestEntry, TaskSet, TASK_EXTENSION};
pub use document::{parse_task_file, parse_task_unchecked, serialize_task};
pub use registry::{dimension_registry, find_dimension, short_label, DemographicDimension, DIMENSIONS_JSON, REPORT_DIMENSION_ORDER};
pub(crate) use validate::value_label_hits;
pub use validate::{neutrality_hits, validate_task, Rule, Violation};

pub(crate) use registry::registry;

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("missing mandatory field `{0}`")]
    MissingField(String),
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("sensitive attribute `{attribute}` names unknown dimension `{dimension}`")]
    UnknownDimension { attribute: String, dimension: String },
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute `{attribute}`: {message}")]
    InvalidDomain { attribute: String, message: String },
    #[error("task `{task_id}` failed validation: {}", summarize(.violations))]
    Invalid { task_id: String, violations: Vec<Violation> },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<TaskError>,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no tasks found in {0}")]
    NoTasks(String),
    #[error("duplicate task_id `{task_id}` in {first} and {second}")]
    DuplicateTaskId { task_id: String, first: String, second: String },
}

fn summarize(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// The seven task categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    SocialBenefits,
    AdmissionsAwards,
    EmployeeDevelopment,
    Health,
    Licenses,
    Hobby,
    Occupation,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::SocialBenefits,
        Category::AdmissionsAwards,
        Category::EmployeeDevelopment,
        Category::Health,
        Category::Licenses,
        Category::Hobby,
        Category::Occupation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Category::SocialBenefits => "social_benefits",
            Category::AdmissionsAwards => "admissions_awards",
            Category::EmployeeDevelopment => "employee_development",
            Category::Health => "health",
            Category::Licenses => "licenses",
            Category::Hobby => "hobby",
            Category::Occupation => "occupation",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::SocialBenefits => "Social benefits",
            Category::AdmissionsAwards => "Admission or awards programs in University",
            Category::EmployeeDevelopment => "Employee development and benefits",
            Category::Health => "Health exams/programs",
            Category::Licenses => "Licenses",
            Category::Hobby => "Hobby",
            Category::Occupation => "Occupation",
        }
    }

    pub fn from_id(id: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.id() == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Related,
    Sensitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataType {
    StringEnum,
    IntegerRange,
    RealRange,
    Boolean,
}

impl DataType {
    pub fn id(self) -> &'static str {
        match self {
            DataType::StringEnum => "string-enum",
            DataType::IntegerRange => "integer-range",
            DataType::RealRange => "real-range",
            DataType::Boolean => "boolean",
        }
    }

    pub fn from_id(id: &str) -> Option<DataType> {
        [DataType::StringEnum, DataType::IntegerRange, DataType::RealRange, DataType::Boolean].into_iter().find(|d| d.id() == id)
    }

    pub fn python_type(self) -> &'static str {
        match self {
            DataType::StringEnum => "str",
            DataType::IntegerRange => "int",
            DataType::RealRange => "float",
            DataType::Boolean => "bool",
        }
    }
}

/// Attribute domain. Ranges are closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Values(Vec<AttrValue>),
    IntRange { min: i64, max: i64 },
    RealRange { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub data_type: DataType,
    pub domain: Domain,
    /// Registry dimension for sensitive attributes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<String>,
}

impl AttributeSpec {
    pub fn related(name: impl Into<String>, data_type: DataType, domain: Domain) -> Self {
        AttributeSpec { name: name.into(), kind: AttributeKind::Related, data_type, domain, dimension: None }
    }

    /// A sensitive attribute whose domain is the registry value set of `dimension`.
    pub fn sensitive(name: impl Into<String>, dimension: &DemographicDimension) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Sensitive,
            data_type: DataType::StringEnum,
            domain: Domain::Values(dimension.literals().into_iter().map(AttrValue::Str).collect()),
            dimension: Some(dimension.name.clone()),
        }
    }

    pub fn is_sensitive(&self) -> bool {
        self.kind == AttributeKind::Sensitive
    }

    /// Values used when planning test instances: every listed value for
    /// finite domains, `min`, `max` and midpoint for ranges.
    pub fn probe_values(&self) -> Vec<AttrValue> {
        match &self.domain {
            Domain::Values(v) => v.clone(),
            Domain::IntRange { min, max } => {
                let mid = min + (max - min) / 2;
                let mut out = vec![AttrValue::Int(*min)];
                for v in [*max, mid] {
                    if !out.contains(&AttrValue::Int(v)) {
                        out.push(AttrValue::Int(v));
                    }
                }
                out
            }
            Domain::RealRange { min, max } => {
                let mid = (min + max) / 2.0;
                let mut out = vec![AttrValue::Real(*min)];
                for v in [*max, mid] {
                    if !out.contains(&AttrValue::Real(v)) {
                        out.push(AttrValue::Real(v));
                    }
                }
                out
            }
        }
    }

    /// Every value of the domain when it is finite and at most `limit` long.
    /// Real ranges fall back to their probe values.
    pub fn exhaustive_values(&self, limit: usize) -> Option<Vec<AttrValue>> {
        match &self.domain {
            Domain::Values(v) => Some(v.clone()),
            Domain::IntRange { min, max } => {
                let span = (*max as i128 - *min as i128 + 1) as u128;
                if span > limit as u128 {
                    return None;
                }
                Some((*min..=*max).map(AttrValue::Int).collect())
            }
            Domain::RealRange { .. } => Some(self.probe_values()),
        }
    }

    /// The `# ...` annotation placed after the field declaration in prompts.
    pub fn domain_annotation(&self) -> String {
        match &self.domain {
            Domain::Values(v) => {
                let items: Vec<String> = v.iter().map(AttrValue::python_literal).collect();
                format!("[{}]", items.join(", "))
            }
            Domain::IntRange { min, max } => format!("range [{min}, {max}]"),
            Domain::RealRange { min, max } => format!("range [{}, {}]", crate::value::python_float(*min), crate::value::python_float(*max)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDefinition {
    pub task_id: String,
    /// Category identifier; must be one of [`Category::ALL`].
    pub category: String,
    pub class_name: String,
    pub method_name: String,
    pub docstring: String,
    pub related: Vec<AttributeSpec>,
    pub sensitive: Vec<AttributeSpec>,
}

impl TaskDefinition {
    pub fn category(&self) -> Option<Category> {
        Category::from_id(&self.category)
    }

    /// Field declaration order used in prompts: the first sensitive
    /// attribute, then every related attribute, then the remaining
    /// sensitive attributes, each group in file order.
    pub fn field_layout(&self) -> Vec<&AttributeSpec> {
        let mut out = Vec::with_capacity(self.related.len() + self.sensitive.len());
        let mut sens = self.sensitive.iter();
        if let Some(first) = sens.next() {
            out.push(first);
        }
        out.extend(self.related.iter());
        out.extend(sens);
        out
    }

    pub fn attributes(&self) -> impl Iterator<Item = &AttributeSpec> {
        self.related.iter().chain(self.sensitive.iter())
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes().find(|a| a.name == name)
    }

    /// Signature line of the method under test; the receiver is the only
    /// parameter.
    pub fn signature(&self) -> String {
        format!("def {}(self) -> bool:", self.method_name)
    }
}
