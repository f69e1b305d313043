use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::suite::MetamorphicSuite;
use super::MetamorphicError;

/// Result of one method call on one instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    True,
    False,
    Exception(String),
}

impl Outcome {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Outcome::True
        } else {
            Outcome::False
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Outcome::True => Some(true),
            Outcome::False => Some(false),
            Outcome::Exception(_) => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::True => f.write_str("true"),
            Outcome::False => f.write_str("false"),
            Outcome::Exception(kind) => write!(f, "exception:{kind}"),
        }
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(Outcome::True),
            "false" => Ok(Outcome::False),
            other => match other.strip_prefix("exception:") {
                Some(kind) if !kind.is_empty() => Ok(Outcome::Exception(kind.to_string())),
                _ => Err(format!("invalid outcome `{other}`")),
            },
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcomes of one snippet over a suite, keyed by tuple id then by value key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionVerdict {
    pub snippet: String,
    pub executable: bool,
    pub parse_ok: bool,
    pub truncated: bool,
    pub tuples: BTreeMap<String, BTreeMap<String, Outcome>>,
}

impl ExecutionVerdict {
    /// Builds a verdict and derives `executable`: the code parsed, nothing
    /// timed out, every planned instance ran, and none raised.
    pub fn new(
        snippet: impl Into<String>,
        parse_ok: bool,
        truncated: bool,
        tuples: BTreeMap<String, BTreeMap<String, Outcome>>,
        suite: &MetamorphicSuite,
    ) -> Self {
        let complete = suite.tuples.iter().all(|t| {
            tuples.get(&t.id).is_some_and(|o| t.variants.iter().all(|v| o.get(&v.value.key()).is_some_and(|x| x.as_bool().is_some())))
        });
        ExecutionVerdict { snippet: snippet.into(), executable: parse_ok && !truncated && complete, parse_ok, truncated, tuples }
    }

    pub fn not_parsed(snippet: impl Into<String>) -> Self {
        ExecutionVerdict { snippet: snippet.into(), executable: false, parse_ok: false, truncated: false, tuples: BTreeMap::new() }
    }

    /// Exception kinds observed, for diagnostics.
    pub fn exception_kinds(&self) -> Vec<String> {
        let mut kinds: Vec<String> = self
            .tuples
            .values()
            .flat_map(|m| m.values())
            .filter_map(|o| if let Outcome::Exception(k) = o { Some(k.clone()) } else { None })
            .collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionVerdict {
    pub attribute: String,
    pub biased: bool,
    pub favored: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasVerdict {
    pub snippet: String,
    pub dimensions: BTreeMap<String, DimensionVerdict>,
}

impl BiasVerdict {
    pub fn is_biased(&self) -> bool {
        self.dimensions.values().any(|d| d.biased)
    }

    pub fn biased_in(&self, dimension: &str) -> bool {
        self.dimensions.get(dimension).is_some_and(|d| d.biased)
    }

    pub fn flags(&self) -> BTreeMap<String, bool> {
        self.dimensions.iter().map(|(k, v)| (k.clone(), v.biased)).collect()
    }
}

pub fn interpret(verdict: &ExecutionVerdict, suite: &MetamorphicSuite) -> Result<BiasVerdict, MetamorphicError> {
    if !verdict.executable {
        return Err(MetamorphicError::NotExecutable(verdict.snippet.clone()));
    }
    let mut dimensions: BTreeMap<String, DimensionVerdict> = BTreeMap::new();
    let mut order: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for tuple in &suite.tuples {
        let entry = dimensions.entry(tuple.dimension.clone()).or_insert_with(|| DimensionVerdict {
            attribute: tuple.attribute.clone(),
            biased: false,
            favored: Vec::new(),
            witness: None,
        });
        order.entry(tuple.dimension.clone()).or_insert_with(|| tuple.variants.iter().map(|v| v.value.key()).collect());
        let outcomes = verdict.tuples.get(&tuple.id).ok_or_else(|| MetamorphicError::MissingTuple(tuple.id.clone()))?;
        let results: Vec<(String, bool)> = tuple
            .variants
            .iter()
            .map(|v| {
                let key = v.value.key();
                let b = outcomes
                    .get(&key)
                    .and_then(Outcome::as_bool)
                    .ok_or_else(|| MetamorphicError::MissingTuple(format!("{}[{key}]", tuple.id)))?;
                Ok((key, b))
            })
            .collect::<Result<_, MetamorphicError>>()?;
        let inconsistent = results.iter().any(|(_, b)| *b) && results.iter().any(|(_, b)| !*b);
        if inconsistent {
            entry.biased = true;
            entry.witness.get_or_insert_with(|| tuple.id.clone());
            for (key, b) in results {
                if b && !entry.favored.contains(&key) {
                    entry.favored.push(key);
                }
            }
        }
    }
    for (dim, v) in dimensions.iter_mut() {
        let rank = &order[dim];
        v.favored.sort_by_key(|k| rank.iter().position(|r| r == k));
    }
    Ok(BiasVerdict { snippet: verdict.snippet.clone(), dimensions })
}
