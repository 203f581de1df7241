//! Compiling a causal graph into a self-labeling plan.

use serde::{Deserialize, Serialize};

use super::graph::{CausalGraph, StateKind};
use super::time::{chain_time, fork_time, TimeLaw};
use super::CausalError;

/// Expression tree over time laws; `Sum` composes chains, `Max` merges
/// parallel contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeExpression {
    Law(TimeLaw),
    Sum(Vec<TimeExpression>),
    Max(Vec<TimeExpression>),
}

impl TimeExpression {
    /// Collapse the tree into a single composed law.
    pub fn eval(&self) -> Result<TimeLaw, CausalError> {
        match self {
            TimeExpression::Law(t) => Ok(*t),
            TimeExpression::Sum(args) => {
                let mut acc = TimeLaw::zero();
                for a in args {
                    acc = chain_time(acc, a.eval()?);
                }
                Ok(acc)
            }
            TimeExpression::Max(args) => {
                let laws: Vec<TimeLaw> =
                    args.iter().map(|a| a.eval()).collect::<Result<_, _>>()?;
                fork_time(&laws)
            }
        }
    }
}

/// One interaction-time model assignment: the cause stream it samples and
/// the composed time expression it must predict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItmBinding {
    pub cause_id: String,
    pub expression: TimeExpression,
}

/// A directed path with its chain-composed time law, kept separate for
/// confounder disambiguation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathNote {
    pub path: Vec<String>,
    pub law: TimeLaw,
}

/// The compiled wiring for self-labeling one cause/effect pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfLabelingPlan {
    pub target_pair: (String, String),
    pub itm_bindings: Vec<ItmBinding>,
    pub required_observers: Vec<String>,
    pub path_notes: Vec<PathNote>,
}

impl CausalGraph {
    /// Compose all paths from `cause` to `effect` into one expression:
    /// a `Sum` for a single path, a `Max` over path sums otherwise.
    fn path_expression(&self, paths: &[Vec<String>]) -> TimeExpression {
        let sums: Vec<TimeExpression> = paths
            .iter()
            .map(|p| {
                TimeExpression::Sum(
                    p.windows(2)
                        .map(|w| {
                            TimeExpression::Law(
                                self.edge_law(&w[0], &w[1]).expect("edge exists on path"),
                            )
                        })
                        .collect(),
                )
            })
            .collect();
        if sums.len() == 1 {
            sums.into_iter().next().unwrap()
        } else {
            TimeExpression::Max(sums)
        }
    }

    /// Build the self-labeling plan for `(cause, effect)`.
    ///
    /// Every path from cause to effect is chain-composed and recorded in
    /// `path_notes`. The target cause gets one ITM binding; each transient
    /// co-cause (a parent of the effect causally unrelated to the target
    /// cause) gets its own. When parallel paths disagree on the composed
    /// law, the intermediate nodes must be observed to tell the active path
    /// apart.
    pub fn build_labeling_plan(
        &self,
        cause: &str,
        effect: &str,
    ) -> Result<SelfLabelingPlan, CausalError> {
        self.node(cause)?;
        let effect_node = self.node(effect)?;
        if !effect_node.observable {
            return Err(CausalError::UnobservableEffect(effect.to_string()));
        }
        let paths = self.paths(cause, effect);
        if paths.is_empty() {
            return Err(CausalError::Unreachable(effect.to_string(), cause.to_string()));
        }

        let path_notes: Vec<PathNote> = paths
            .iter()
            .map(|p| {
                let law = self.path_expression(std::slice::from_ref(p)).eval()?;
                Ok(PathNote { path: p.clone(), law })
            })
            .collect::<Result<_, CausalError>>()?;

        let mut itm_bindings =
            vec![ItmBinding { cause_id: cause.to_string(), expression: self.path_expression(&paths) }];

        // Transient co-causes: parents of the effect with no causal relation
        // to the target cause. Each needs its own ITM.
        let mut co_causes: Vec<&str> = self
            .parents(effect)
            .into_iter()
            .filter(|&p| p != cause && !self.reaches(cause, p) && !self.reaches(p, cause))
            .collect();
        co_causes.sort_unstable();
        for p in co_causes {
            if self.node(p)?.state_kind == StateKind::Transient {
                let p_paths = self.paths(p, effect);
                itm_bindings.push(ItmBinding {
                    cause_id: p.to_string(),
                    expression: self.path_expression(&p_paths),
                });
            }
        }

        let mut required_observers = vec![effect.to_string()];
        let laws_differ = path_notes.windows(2).any(|w| w[0].law != w[1].law);
        if paths.len() > 1 && laws_differ {
            let mut intermediates: Vec<String> = paths
                .iter()
                .flat_map(|p| p[1..p.len() - 1].iter().cloned())
                .collect();
            intermediates.sort_unstable();
            intermediates.dedup();
            for id in intermediates {
                if !self.node(&id)?.observable {
                    return Err(CausalError::ObserverNotObservable(id));
                }
                required_observers.push(id);
            }
        }

        Ok(SelfLabelingPlan {
            target_pair: (cause.to_string(), effect.to_string()),
            itm_bindings,
            required_observers,
            path_notes,
        })
    }
}
