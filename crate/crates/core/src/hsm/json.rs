//! Constructing machine specs from JSON documents.
//!
//! The document declares names, kinds, transitions and policies. Leaf states
//! carry a `returns` field naming the outcome their (scripted) body yields,
//! plus an optional fixed `duration` in simulated seconds:
//!
//! ```json
//! {
//!   "name": "scan", "kind": "concurrent",
//!   "outcomes": ["scanned", "failed"],
//!   "children": [
//!     { "name": "rotate", "outcomes": ["done"], "returns": "done", "duration": 4.0 },
//!     { "name": "segment", "outcomes": ["done"], "returns": "done", "duration": 5.0 }
//!   ],
//!   "policy": {
//!     "rules": [ { "when": { "rotate": "done", "segment": "done" }, "then": "scanned" } ],
//!     "default": "failed"
//!   }
//! }
//! ```
//!
//! Sequential containers use `"transitions": { "<child>": { "<outcome>":
//! "<target>" } }` where the target is a sibling name or a container
//! outcome.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use super::{MachineSpec, Outcome, OutcomePolicy, PolicyRule, StateSpec};

#[derive(Debug, Error)]
pub enum JsonSpecError {
    #[error("invalid machine document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Structure(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MachineDoc {
    name: String,
    kind: String,
    outcomes: Vec<String>,
    children: Vec<ChildDoc>,
    #[serde(default)]
    transitions: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    policy: Option<PolicyDoc>,
    #[serde(default)]
    initial_keys: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChildDoc {
    State(StateDoc),
    Machine(Box<MachineDoc>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    name: String,
    outcomes: Vec<String>,
    returns: String,
    #[serde(default)]
    duration: Option<f64>,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    #[serde(default)]
    rules: Vec<RuleDoc>,
    default: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    when: BTreeMap<String, String>,
    then: String,
}

/// Build a machine spec from a JSON string. Bodies of leaf states are
/// scripted to return their declared `returns` outcome.
pub fn machine_from_json<C>(doc: &str) -> Result<MachineSpec<C>, JsonSpecError> {
    let parsed: MachineDoc = serde_json::from_str(doc)?;
    build(parsed)
}

/// Same as [`machine_from_json`] for an already-parsed value.
pub fn machine_from_json_value<C>(doc: &serde_json::Value) -> Result<MachineSpec<C>, JsonSpecError> {
    let parsed: MachineDoc = serde_json::from_value(doc.clone())?;
    build(parsed)
}

fn build<C>(doc: MachineDoc) -> Result<MachineSpec<C>, JsonSpecError> {
    let mut m = match doc.kind.as_str() {
        "sequential" => MachineSpec::sequential(doc.name.clone(), []),
        "concurrent" => {
            let policy = doc.policy.as_ref().ok_or_else(|| {
                JsonSpecError::Structure(format!("concurrent machine `{}` needs a policy", doc.name))
            })?;
            MachineSpec::concurrent(
                doc.name.clone(),
                [],
                OutcomePolicy {
                    rules: policy
                        .rules
                        .iter()
                        .map(|r| PolicyRule {
                            when: r
                                .when
                                .iter()
                                .map(|(c, o)| (c.clone(), Outcome::from(o.as_str())))
                                .collect(),
                            then: Outcome::from(r.then.as_str()),
                        })
                        .collect(),
                    default: Outcome::from(policy.default.as_str()),
                },
            )
        }
        other => {
            return Err(JsonSpecError::Structure(format!(
                "machine `{}`: unknown kind `{other}`",
                doc.name
            )))
        }
    };
    if doc.kind == "sequential" && doc.policy.is_some() {
        return Err(JsonSpecError::Structure(format!(
            "sequential machine `{}` must not declare a policy",
            doc.name
        )));
    }
    m.outcomes = doc.outcomes.iter().map(|o| Outcome::from(o.as_str())).collect();
    m.initial_keys = doc.initial_keys.into_iter().collect();

    for child in doc.children {
        match child {
            ChildDoc::State(s) => {
                if !s.outcomes.contains(&s.returns) {
                    return Err(JsonSpecError::Structure(format!(
                        "state `{}` returns `{}` which is not among its outcomes",
                        s.name, s.returns
                    )));
                }
                let mut state = StateSpec::<C>::scripted(&s.name, &s.returns);
                for o in &s.outcomes {
                    state = state.with_outcome(o);
                }
                if let Some(d) = s.duration {
                    state = state.with_duration(d);
                }
                state.input_keys = s.inputs.into_iter().collect();
                state.output_keys = s.outputs.into_iter().collect();
                m = m.with_state(state);
            }
            ChildDoc::Machine(sub) => {
                m = m.with_machine(build(*sub)?);
            }
        }
    }
    for (child, map) in doc.transitions {
        for (outcome, target) in map {
            m = m.with_transition(&child, &outcome, &target);
        }
    }
    Ok(m)
}
