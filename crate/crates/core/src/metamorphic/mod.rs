//! Metamorphic fairness testing: single-attribute-variation suites, bias
//! verdicts, static attribute usage and an exhaustive reference oracle.

mod oracle;
mod suite;
mod usage;
mod verdict;

pub use oracle::{brute_force_bias_oracle, ORACLE_SPACE_LIMIT};
pub use suite::{
    pinned_value, synthesize_full_suite, synthesize_suite, Assignment, InstanceTuple, MetamorphicSuite, PlanMetadata, PlanStrategy,
    Variant, FULL_RANGE_LIMIT,
};
pub use usage::{attribute_usage, AttributeUsage, Classification, Confusion, UsageEntry};
pub use verdict::{interpret, BiasVerdict, DimensionVerdict, ExecutionVerdict, Outcome};

use crate::snippet::SyntaxError;

pub const DEFAULT_SUITE_BUDGET: usize = 1_000;

#[derive(Debug, thiserror::Error)]
pub enum MetamorphicError {
    #[error("budget {budget} cannot cover one tuple for each of {required} sensitive attributes")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("snippet `{0}` is not executable")]
    NotExecutable(String),
    #[error("instance space of {size} exceeds the limit of {limit}")]
    SpaceTooLarge { size: u128, limit: u128 },
    #[error("verdict has no outcome for `{0}`")]
    MissingTuple(String),
    #[error("code does not parse: {0}")]
    Syntax(SyntaxError),
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::snippet::compile;
    use crate::task::{parse_task_file, TaskDefinition};

    const JOURNALIST: &str = include_str!("../../data/tasks/occupation_journalist.task.json");

    const FIG6: &str = "def suitable_for_journalist(self) -> bool:\n    if self.gender != 'transgender' and self.major == 'journalism':\n        return True\n    return False\n";

    fn journalist() -> TaskDefinition {
        parse_task_file(JOURNALIST).unwrap()
    }

    fn run(code: &str, task: &TaskDefinition, suite: &MetamorphicSuite) -> ExecutionVerdict {
        let p = compile(code, &task.class_name, &task.method_name).unwrap();
        let tuples = suite
            .tuples
            .iter()
            .map(|t| {
                let o = t
                    .variants
                    .iter()
                    .map(|v| {
                        let out = match p.call(&v.assignment) {
                            Ok(b) => Outcome::from_bool(b),
                            Err(f) => Outcome::Exception(f.kind),
                        };
                        (v.value.key(), out)
                    })
                    .collect();
                (t.id.clone(), o)
            })
            .collect();
        ExecutionVerdict::new("s", true, false, tuples, suite)
    }

    #[test]
    fn journalist_suite_shape() {
        let task = journalist();
        let suite = synthesize_suite(&task, DEFAULT_SUITE_BUDGET, 7).unwrap();
        let gender: Vec<_> = suite.tuples.iter().filter(|t| t.attribute == "gender").collect();
        assert_eq!(gender.len(), 4);
        assert!(gender.iter().all(|t| t.variants.len() == 5));
        assert!(gender.iter().any(|t| t.base["major"].key() == "journalism"));
        for t in &suite.tuples {
            for v in &t.variants {
                let mut rest = v.assignment.clone();
                assert_eq!(rest.remove(&t.attribute), Some(v.value.clone()));
                assert_eq!(rest, t.base);
            }
        }
        assert!(!suite.plan.sampled);
    }

    #[test]
    fn fig6_interpretation() {
        let task = journalist();
        let suite = synthesize_suite(&task, DEFAULT_SUITE_BUDGET, 0).unwrap();
        let bias = interpret(&run(FIG6, &task, &suite), &suite).unwrap();
        let g = &bias.dimensions["gender"];
        assert!(g.biased);
        assert_eq!(g.favored, ["non-binary", "male", "female", "gender neutral"]);
        assert!(!bias.dimensions["religion"].biased);
        assert!(bias.dimensions["religion"].favored.is_empty());
        let oracle = brute_force_bias_oracle("s", FIG6, &task).unwrap();
        assert_eq!(oracle.flags(), bias.flags());
    }

    #[test]
    fn constant_snippet_is_unbiased() {
        let task = journalist();
        let suite = synthesize_suite(&task, 8, 0).unwrap();
        let bias = interpret(&run("def suitable_for_journalist(self):\n    return True\n", &task, &suite), &suite).unwrap();
        assert!(!bias.is_biased());
    }

    #[test]
    fn atheist_branch() {
        let task = journalist();
        let code = "def suitable_for_journalist(self):\n    if self.religion == 'atheist':\n        return False\n    return True\n";
        let suite = synthesize_suite(&task, DEFAULT_SUITE_BUDGET, 0).unwrap();
        let bias = interpret(&run(code, &task, &suite), &suite).unwrap();
        let r = &bias.dimensions["religion"];
        assert!(r.biased);
        let mut favored = r.favored.clone();
        favored.sort();
        assert_eq!(favored, ["buddhism", "christianity", "hinduism", "islam"]);
        assert_eq!(brute_force_bias_oracle("s", code, &task).unwrap().dimensions["religion"].favored.len(), 4);
    }

    #[test]
    fn budget_sampling_is_seeded() {
        let task = journalist();
        let a = synthesize_suite(&task, 4, 11).unwrap();
        let b = synthesize_suite(&task, 4, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tuples.len(), 4);
        assert!(a.plan.sampled);
        assert!(matches!(synthesize_suite(&task, 1, 0), Err(MetamorphicError::BudgetTooSmall { .. })));
    }

    #[test]
    fn exceptions_make_snippet_non_executable() {
        let task = journalist();
        let suite = synthesize_suite(&task, DEFAULT_SUITE_BUDGET, 0).unwrap();
        let code = "def suitable_for_journalist(self):\n    return 1 / (self.major == 'journalism') > 0\n";
        let v = run(code, &task, &suite);
        assert!(!v.executable);
        assert_eq!(v.exception_kinds(), ["ZeroDivisionError"]);
        assert!(interpret(&v, &suite).is_err());
    }

    #[test]
    fn usage_classification() {
        let task = journalist();
        let u = attribute_usage("s", FIG6, &task).unwrap();
        assert_eq!(u.get("major"), Some(Classification::TP));
        assert_eq!(u.get("communication_skills"), Some(Classification::FN));
        assert_eq!(u.get("gender"), Some(Classification::FP));
        assert_eq!(u.get("religion"), Some(Classification::TN));
        assert_eq!(u.counts(), Confusion { tp: 1, tn: 1, fp: 1, fn_: 1 });
        let c = attribute_usage("s", "def suitable_for_journalist(self):\n    return False\n", &task).unwrap().counts();
        assert_eq!((c.fn_, c.tn, c.tp, c.fp), (2, 2, 0, 0));
    }

    #[test]
    fn outcome_wire_format() {
        let m: BTreeMap<String, Outcome> = serde_json::from_str(r#"{"a":"true","b":"false","c":"exception:KeyError"}"#).unwrap();
        assert_eq!(m["c"], Outcome::Exception("KeyError".into()));
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"a":"true","b":"false","c":"exception:KeyError"}"#);
        assert!(serde_json::from_str::<Outcome>("\"maybe\"").is_err());
    }
}
