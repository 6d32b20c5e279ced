//! Structural validation of machine specs. A spec with an empty report is
//! executable; every finding names the offending entity.

use std::collections::BTreeSet;
use std::fmt;

use super::{Kind, MachineSpec, Node, Outcome};

/// One structural violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    InvalidName { path: String, reason: String },
    NoChildren { path: String },
    NoOutcomes { path: String },
    DuplicateChildName { path: String, child: String },
    ChildShadowsOutcome { path: String, name: String },
    UnknownTransitionSource { path: String, child: String },
    UnknownTransitionOutcome { path: String, child: String, outcome: Outcome },
    UnknownTransitionTarget { path: String, child: String, target: String },
    UnmappedOutcome { path: String, child: String, outcome: Outcome },
    UnreachableChild { path: String, child: String },
    MissingPolicy { path: String },
    UnexpectedPolicy { path: String },
    UnexpectedTransitions { path: String },
    PolicyUnknownChild { path: String, child: String },
    PolicyUnknownOutcome { path: String, child: String, outcome: Outcome },
    PolicyBadContainerOutcome { path: String, outcome: Outcome },
    ConcurrentWriteConflict { path: String, key: String, first: String, second: String },
    UnsatisfiedInputKey { path: String, state: String, key: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::InvalidName { path, reason } => write!(f, "{path}: invalid name: {reason}"),
            Finding::NoChildren { path } => write!(f, "{path}: container has no children"),
            Finding::NoOutcomes { path } => write!(f, "{path}: no outcomes declared"),
            Finding::DuplicateChildName { path, child } => {
                write!(f, "{path}: duplicate child name `{child}`")
            }
            Finding::ChildShadowsOutcome { path, name } => {
                write!(f, "{path}: `{name}` is both a child and a container outcome")
            }
            Finding::UnknownTransitionSource { path, child } => {
                write!(f, "{path}: transition from unknown child `{child}`")
            }
            Finding::UnknownTransitionOutcome { path, child, outcome } => {
                write!(f, "{path}: transition on outcome `{outcome}` not declared by `{child}`")
            }
            Finding::UnknownTransitionTarget { path, child, target } => {
                write!(f, "{path}: transition from `{child}` targets unknown `{target}`")
            }
            Finding::UnmappedOutcome { path, child, outcome } => {
                write!(f, "{path}: outcome `{outcome}` of `{child}` has no transition")
            }
            Finding::UnreachableChild { path, child } => {
                write!(f, "{path}: child `{child}` is unreachable")
            }
            Finding::MissingPolicy { path } => {
                write!(f, "{path}: concurrent container without outcome policy")
            }
            Finding::UnexpectedPolicy { path } => {
                write!(f, "{path}: sequential container declares an outcome policy")
            }
            Finding::UnexpectedTransitions { path } => {
                write!(f, "{path}: concurrent container declares transitions")
            }
            Finding::PolicyUnknownChild { path, child } => {
                write!(f, "{path}: policy references unknown child `{child}`")
            }
            Finding::PolicyUnknownOutcome { path, child, outcome } => {
                write!(f, "{path}: policy references outcome `{outcome}` not declared by `{child}`")
            }
            Finding::PolicyBadContainerOutcome { path, outcome } => {
                write!(f, "{path}: policy maps to undeclared container outcome `{outcome}`")
            }
            Finding::ConcurrentWriteConflict { path, key, first, second } => {
                write!(f, "{path}: children `{first}` and `{second}` both write key `{key}`")
            }
            Finding::UnsatisfiedInputKey { path, state, key } => {
                write!(f, "{path}: input key `{key}` of `{state}` is never produced")
            }
        }
    }
}

/// All structural violations found in a spec.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return write!(f, "ok");
        }
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Check a spec for structural violations. The report is empty iff the spec
/// is executable.
pub fn validate<C>(spec: &MachineSpec<C>) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_name(&spec.name, &spec.name, &mut report);
    // Keys available anywhere in the tree: the root's declared initial keys
    // plus everything any state writes. Input satisfaction is checked
    // order-insensitively against this set.
    let mut available = spec.initial_keys.clone();
    for child in &spec.children {
        available.extend(MachineSpec::node_output_keys(child));
    }
    check_machine(spec, &spec.name, &available, &mut report);
    report
}

fn check_name(path: &str, name: &str, report: &mut ValidationReport) {
    if name.is_empty() {
        report.findings.push(Finding::InvalidName {
            path: path.to_string(),
            reason: "empty".to_string(),
        });
    } else if name.chars().any(|c| c.is_whitespace() || c == '/') {
        report.findings.push(Finding::InvalidName {
            path: path.to_string(),
            reason: format!("`{name}` contains whitespace or `/`"),
        });
    }
}

fn check_machine<C>(
    m: &MachineSpec<C>,
    path: &str,
    available_keys: &BTreeSet<String>,
    report: &mut ValidationReport,
) {
    if m.children.is_empty() {
        report.findings.push(Finding::NoChildren { path: path.to_string() });
        return;
    }
    if m.outcomes.is_empty() {
        report.findings.push(Finding::NoOutcomes { path: path.to_string() });
    }
    for o in &m.outcomes {
        check_name(path, o.as_str(), report);
    }

    let mut seen = BTreeSet::new();
    for child in &m.children {
        let child_path = format!("{path}/{}", child.name());
        check_name(&child_path, child.name(), report);
        if !seen.insert(child.name().to_string()) {
            report.findings.push(Finding::DuplicateChildName {
                path: path.to_string(),
                child: child.name().to_string(),
            });
        }
        if m.outcomes.contains(&Outcome::from(child.name())) {
            report.findings.push(Finding::ChildShadowsOutcome {
                path: path.to_string(),
                name: child.name().to_string(),
            });
        }
        match child {
            Node::State(s) => {
                if s.outcomes.is_empty() {
                    report
                        .findings
                        .push(Finding::NoOutcomes { path: child_path.clone() });
                }
                for o in &s.outcomes {
                    check_name(&child_path, o.as_str(), report);
                }
                for key in &s.input_keys {
                    if !available_keys.contains(key) {
                        report.findings.push(Finding::UnsatisfiedInputKey {
                            path: path.to_string(),
                            state: s.name.clone(),
                            key: key.clone(),
                        });
                    }
                }
            }
            Node::Machine(sub) => check_machine(sub, &child_path, available_keys, report),
        }
    }

    match m.kind {
        Kind::Sequential => check_sequential(m, path, report),
        Kind::Concurrent => check_concurrent(m, path, report),
    }
}

fn check_sequential<C>(m: &MachineSpec<C>, path: &str, report: &mut ValidationReport) {
    if m.policy.is_some() {
        report
            .findings
            .push(Finding::UnexpectedPolicy { path: path.to_string() });
    }
    let child_names: BTreeSet<&str> = m.children.iter().map(|c| c.name()).collect();

    for ((child, outcome), target) in &m.transitions {
        let Some(node) = m.child(child) else {
            report.findings.push(Finding::UnknownTransitionSource {
                path: path.to_string(),
                child: child.clone(),
            });
            continue;
        };
        if !node.outcomes().contains(outcome) {
            report.findings.push(Finding::UnknownTransitionOutcome {
                path: path.to_string(),
                child: child.clone(),
                outcome: outcome.clone(),
            });
        }
        let is_child = child_names.contains(target.as_str());
        let is_container_outcome = m.outcomes.contains(&Outcome::from(target.as_str()));
        if !is_child && !is_container_outcome {
            report.findings.push(Finding::UnknownTransitionTarget {
                path: path.to_string(),
                child: child.clone(),
                target: target.clone(),
            });
        }
    }

    // Completeness: every declared outcome of every child must be mapped.
    for child in &m.children {
        for outcome in child.outcomes() {
            if !m
                .transitions
                .contains_key(&(child.name().to_string(), outcome.clone()))
            {
                report.findings.push(Finding::UnmappedOutcome {
                    path: path.to_string(),
                    child: child.name().to_string(),
                    outcome: outcome.clone(),
                });
            }
        }
    }

    // Reachability from the first declared child.
    let mut reachable: BTreeSet<&str> = BTreeSet::new();
    let mut frontier = vec![m.children[0].name()];
    while let Some(name) = frontier.pop() {
        if !reachable.insert(name) {
            continue;
        }
        for ((child, _), target) in &m.transitions {
            if child == name && child_names.contains(target.as_str()) {
                frontier.push(target.as_str());
            }
        }
    }
    for child in &m.children {
        if !reachable.contains(child.name()) {
            report.findings.push(Finding::UnreachableChild {
                path: path.to_string(),
                child: child.name().to_string(),
            });
        }
    }
}

fn check_concurrent<C>(m: &MachineSpec<C>, path: &str, report: &mut ValidationReport) {
    if !m.transitions.is_empty() {
        report
            .findings
            .push(Finding::UnexpectedTransitions { path: path.to_string() });
    }
    let Some(policy) = &m.policy else {
        report
            .findings
            .push(Finding::MissingPolicy { path: path.to_string() });
        return;
    };
    if !m.outcomes.contains(&policy.default) {
        report.findings.push(Finding::PolicyBadContainerOutcome {
            path: path.to_string(),
            outcome: policy.default.clone(),
        });
    }
    for rule in &policy.rules {
        for (child, outcome) in &rule.when {
            match m.child(child) {
                None => report.findings.push(Finding::PolicyUnknownChild {
                    path: path.to_string(),
                    child: child.clone(),
                }),
                Some(node) => {
                    if !node.outcomes().contains(outcome) {
                        report.findings.push(Finding::PolicyUnknownOutcome {
                            path: path.to_string(),
                            child: child.clone(),
                            outcome: outcome.clone(),
                        });
                    }
                }
            }
        }
        if !m.outcomes.contains(&rule.then) {
            report.findings.push(Finding::PolicyBadContainerOutcome {
                path: path.to_string(),
                outcome: rule.then.clone(),
            });
        }
    }

    // Concurrent children may not write the same userdata key.
    let with_keys: Vec<(&str, BTreeSet<String>)> = m
        .children
        .iter()
        .map(|c| (c.name(), MachineSpec::node_output_keys(c)))
        .collect();
    for i in 0..with_keys.len() {
        for j in (i + 1)..with_keys.len() {
            for key in with_keys[i].1.intersection(&with_keys[j].1) {
                report.findings.push(Finding::ConcurrentWriteConflict {
                    path: path.to_string(),
                    key: key.clone(),
                    first: with_keys[i].0.to_string(),
                    second: with_keys[j].0.to_string(),
                });
            }
        }
    }
}
