use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetamorphicError;
use crate::task::{find_dimension, AttributeSpec, Domain, TaskDefinition};
use crate::value::AttrValue;

/// Related integer ranges wider than this are not enumerated in full-product
/// mode; their probe values are used instead.
pub const FULL_RANGE_LIMIT: usize = 1_000;

pub type Assignment = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub value: AttrValue,
    pub assignment: Assignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTuple {
    pub id: String,
    pub dimension: String,
    pub attribute: String,
    /// Values of every attribute except the varied one.
    pub base: Assignment,
    pub variants: Vec<Variant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanStrategy {
    /// Cartesian product of related-attribute probe values, sampled when it
    /// exceeds the per-attribute quota.
    ProbeProduct,
    /// Every value of every related attribute.
    FullProduct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanMetadata {
    pub strategy: PlanStrategy,
    pub budget: Option<usize>,
    pub seed: u64,
    pub sampled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetamorphicSuite {
    pub task_id: String,
    pub tuples: Vec<InstanceTuple>,
    pub plan: PlanMetadata,
}

impl MetamorphicSuite {
    pub fn tuple(&self, id: &str) -> Option<&InstanceTuple> {
        self.tuples.iter().find(|t| t.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite serializes") + "\n"
    }

    pub fn file_name(&self) -> String {
        format!("{}.suite.json", self.task_id)
    }
}

/// Value a sensitive attribute takes while another attribute is varied: the
/// first registry value of its dimension.
pub fn pinned_value(attr: &AttributeSpec) -> AttrValue {
    let from_registry =
        attr.dimension.as_deref().and_then(find_dimension).and_then(|d| d.literals().into_iter().next()).map(AttrValue::Str);
    from_registry.unwrap_or_else(|| match &attr.domain {
        Domain::Values(v) => v[0].clone(),
        Domain::IntRange { min, .. } => AttrValue::Int(*min),
        Domain::RealRange { min, .. } => AttrValue::Real(*min),
    })
}

pub fn synthesize_suite(task: &TaskDefinition, budget: usize, seed: u64) -> Result<MetamorphicSuite, MetamorphicError> {
    let required = task.sensitive.len();
    if budget < required {
        return Err(MetamorphicError::BudgetTooSmall { budget, required });
    }
    let axes: Vec<Vec<AttrValue>> = task.related.iter().map(AttributeSpec::probe_values).collect();
    build(task, axes, Some(budget / required), seed, PlanStrategy::ProbeProduct, Some(budget))
}

/// Suite covering the complete related-attribute product, without sampling.
pub fn synthesize_full_suite(task: &TaskDefinition) -> Result<MetamorphicSuite, MetamorphicError> {
    let axes: Vec<Vec<AttrValue>> =
        task.related.iter().map(|a| a.exhaustive_values(FULL_RANGE_LIMIT).unwrap_or_else(|| a.probe_values())).collect();
    build(task, axes, None, 0, PlanStrategy::FullProduct, None)
}

fn build(
    task: &TaskDefinition,
    axes: Vec<Vec<AttrValue>>,
    quota: Option<usize>,
    seed: u64,
    strategy: PlanStrategy,
    budget: Option<usize>,
) -> Result<MetamorphicSuite, MetamorphicError> {
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .ok_or(MetamorphicError::SpaceTooLarge { size: u128::MAX, limit: usize::MAX as u128 })?;
    let mut tuples = Vec::new();
    let mut sampled = false;
    for (s_idx, attr) in task.sensitive.iter().enumerate() {
        let indices: Vec<usize> = match quota {
            Some(q) if total > q => {
                sampled = true;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s_idx as u64));
                let mut picked = index::sample(&mut rng, total, q).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..total).collect(),
        };
        let dimension = attr.dimension.clone().unwrap_or_default();
        let values = match &attr.domain {
            Domain::Values(v) => v.clone(),
            _ => attr.probe_values(),
        };
        for k in indices {
            let mut base = Assignment::new();
            let mut rem = k;
            for (pos, axis) in axes.iter().enumerate().rev() {
                base.insert(task.related[pos].name.clone(), axis[rem % axis.len()].clone());
                rem /= axis.len();
            }
            for other in task.sensitive.iter().filter(|o| o.name != attr.name) {
                base.insert(other.name.clone(), pinned_value(other));
            }
            let variants = values
                .iter()
                .map(|v| {
                    let mut assignment = base.clone();
                    assignment.insert(attr.name.clone(), v.clone());
                    Variant { value: v.clone(), assignment }
                })
                .collect();
            tuples.push(InstanceTuple {
                id: format!("{}#{k}", attr.name),
                dimension: dimension.clone(),
                attribute: attr.name.clone(),
                base,
                variants,
            });
        }
    }
    Ok(MetamorphicSuite { task_id: task.task_id.clone(), tuples, plan: PlanMetadata { strategy, budget, seed, sampled } })
}
