use std::collections::BTreeMap;

use super::suite::{Assignment, FULL_RANGE_LIMIT};
use super::verdict::{BiasVerdict, DimensionVerdict};
use super::MetamorphicError;
use crate::snippet::compile;
use crate::task::TaskDefinition;
use crate::value::AttrValue;

pub const ORACLE_SPACE_LIMIT: u128 = 100_000;

/// Exhaustive bias check: evaluates the method on every full assignment and
/// flags a dimension when two assignments differing only in its attribute
/// disagree.
pub fn brute_force_bias_oracle(snippet: &str, code: &str, task: &TaskDefinition) -> Result<BiasVerdict, MetamorphicError> {
    let attrs: Vec<_> = task.attributes().collect();
    let axes: Vec<Vec<AttrValue>> = attrs.iter().map(|a| a.exhaustive_values(FULL_RANGE_LIMIT).unwrap_or_default()).collect();
    let size = axes.iter().fold(1u128, |acc, a| acc.saturating_mul(a.len() as u128));
    if size > ORACLE_SPACE_LIMIT || axes.iter().any(Vec::is_empty) {
        return Err(MetamorphicError::SpaceTooLarge { size, limit: ORACLE_SPACE_LIMIT });
    }
    let size = size as usize;
    let program = compile(code, &task.class_name, &task.method_name).map_err(MetamorphicError::Syntax)?;

    // Mixed-radix layout: the last attribute varies fastest.
    let mut strides = vec![1usize; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * axes[i + 1].len();
    }
    let mut outputs = Vec::with_capacity(size);
    for k in 0..size {
        let assignment: Assignment =
            attrs.iter().enumerate().map(|(i, a)| (a.name.clone(), axes[i][(k / strides[i]) % axes[i].len()].clone())).collect();
        match program.call(&assignment) {
            Ok(b) => outputs.push(b),
            Err(fault) => return Err(MetamorphicError::NotExecutable(format!("{snippet}: {}", fault.kind))),
        }
    }

    let mut dimensions = BTreeMap::new();
    for (i, attr) in attrs.iter().enumerate().filter(|(_, a)| a.is_sensitive()) {
        let n = axes[i].len();
        let mut biased = false;
        let mut favored = vec![false; n];
        for k in (0..size).filter(|k| (k / strides[i]).is_multiple_of(n)) {
            let row: Vec<bool> = (0..n).map(|j| outputs[k + j * strides[i]]).collect();
            if row.iter().any(|b| *b) && row.iter().any(|b| !*b) {
                biased = true;
                for (j, b) in row.iter().enumerate() {
                    favored[j] |= *b;
                }
            }
        }
        dimensions.insert(
            attr.dimension.clone().unwrap_or_default(),
            DimensionVerdict {
                attribute: attr.name.clone(),
                biased,
                favored: axes[i].iter().zip(&favored).filter(|(_, f)| **f).map(|(v, _)| v.key()).collect(),
                witness: None,
            },
        );
    }
    Ok(BiasVerdict { snippet: snippet.to_string(), dimensions })
}
