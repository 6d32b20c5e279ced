//! Hierarchical concurrent state-machine executive with simulated time.
//!
//! A task is declared as a tree of containers: a `Sequential` container runs
//! its children one at a time, following transitions keyed on each child's
//! outcome, until a transition targets one of the container's own outcomes.
//! A `Concurrent` container conceptually starts all children at the same
//! simulated instant; its elapsed simulated time is the maximum of the
//! children's elapsed times, and an outcome policy maps the joint child
//! outcomes to a container outcome.
//!
//! Concurrency is *simulated-time* concurrency: children of a `Concurrent`
//! container execute sequentially in the host process but are timestamped as
//! overlapping, which keeps every run deterministic and the timing claims
//! exactly checkable. Children of a `Concurrent` container read a snapshot of
//! the shared [`Userdata`] taken at the container's start and may not write
//! the same key (rejected by [`validate`]).
//!
//! States exchange data through [`Userdata`], a key-value blackboard. Every
//! state declares the keys it reads and writes; touching an undeclared key is
//! an execution-time error.

mod exec;
mod json;
mod validate;

pub use exec::{execute, execute_with_limits, ExecLimits, ExecResult};
pub use json::{machine_from_json, machine_from_json_value, JsonSpecError};
pub use validate::{validate, Finding, ValidationReport};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A named result of a state or container.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome(String);

impl Outcome {
    pub fn new(name: impl Into<String>) -> Self {
        Outcome(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Outcome {
    fn from(s: &str) -> Self {
        Outcome(s.to_string())
    }
}

impl From<String> for Outcome {
    fn from(s: String) -> Self {
        Outcome(s)
    }
}

/// A value stored on the [`Userdata`] blackboard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Float(f) => Some(*f),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}
impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}
impl From<f64> for Value {
    fn from(f: f64) -> Self {
        Value::Float(f)
    }
}
impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}
impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

/// The shared blackboard passed between states.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Userdata {
    map: BTreeMap<String, Value>,
}

impl Userdata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.map.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.map.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }
}

/// Simulated clock in seconds. Advancing never wraps: exceeding the limit is
/// a [`HsmError::ClockOverflow`], never a silent saturation.
#[derive(Debug, Clone, Copy)]
pub struct SimClock {
    now: f64,
    limit: f64,
}

impl Default for SimClock {
    fn default() -> Self {
        Self::new()
    }
}

impl SimClock {
    pub fn new() -> Self {
        SimClock {
            now: 0.0,
            limit: 1e15,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn advance(&mut self, dt: f64) -> Result<(), HsmError> {
        if !dt.is_finite() || dt < 0.0 {
            return Err(HsmError::ClockOverflow);
        }
        let next = self.now + dt;
        if !next.is_finite() || next > self.limit {
            return Err(HsmError::ClockOverflow);
        }
        self.now = next;
        Ok(())
    }

    pub(crate) fn set(&mut self, t: f64) {
        self.now = t;
    }
}

/// One completed transition: at `sim_time`, the state or container at `path`
/// finished with `outcome`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub sim_time: f64,
    pub path: String,
    pub outcome: Outcome,
}

/// The ordered transition log of one execution. `sim_time` is non-decreasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Stable line-oriented rendering: `<sim_time> <path> -> <outcome>`.
pub fn trace_to_text(trace: &Trace) -> String {
    let mut out = String::new();
    for r in &trace.records {
        out.push_str(&format!("{} {} -> {}\n", r.sim_time, r.path, r.outcome));
    }
    out
}

/// Parse the rendering produced by [`trace_to_text`].
pub fn trace_from_text(text: &str) -> Result<Trace, String> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 4 || parts[2] != "->" {
            return Err(format!("line {}: expected `<time> <path> -> <outcome>`", i + 1));
        }
        let sim_time: f64 = parts[0]
            .parse()
            .map_err(|e| format!("line {}: bad sim_time: {}", i + 1, e))?;
        records.push(TraceRecord {
            sim_time,
            path: parts[1].to_string(),
            outcome: Outcome::from(parts[3]),
        });
    }
    Ok(Trace { records })
}

/// Errors surfaced while executing a machine.
#[derive(Debug, Error, PartialEq)]
pub enum HsmError {
    #[error("state `{state}` accessed undeclared userdata key `{key}` ({} access)", if *.write { "write" } else { "read" })]
    UndeclaredKeyAccess {
        state: String,
        key: String,
        write: bool,
    },
    #[error("state `{state}` required userdata key `{key}` which is absent")]
    KeyAbsent { state: String, key: String },
    #[error("child `{child}` produced outcome `{outcome}` with no transition mapped")]
    UnmappedOutcome { child: String, outcome: Outcome },
    #[error("state `{state}` returned undeclared outcome `{outcome}`")]
    UndeclaredOutcomeReturned { state: String, outcome: Outcome },
    #[error("simulated clock overflow")]
    ClockOverflow,
    #[error("step budget of {limit} transitions exceeded")]
    StepBudgetExceeded { limit: usize },
    #[error("concurrent children both wrote userdata key `{key}`")]
    ConcurrentWriteConflict { key: String },
    #[error("state `{state}` failed: {message}")]
    StateFailure { state: String, message: String },
}

/// Checked view of [`Userdata`] handed to a state's body. Reads are allowed
/// on declared input or output keys, writes on declared output keys only.
pub struct UserdataScope<'a> {
    ud: &'a mut Userdata,
    state: &'a str,
    inputs: &'a BTreeSet<String>,
    outputs: &'a BTreeSet<String>,
}

impl<'a> UserdataScope<'a> {
    pub fn get(&self, key: &str) -> Result<Option<&Value>, HsmError> {
        if !self.inputs.contains(key) && !self.outputs.contains(key) {
            return Err(HsmError::UndeclaredKeyAccess {
                state: self.state.to_string(),
                key: key.to_string(),
                write: false,
            });
        }
        Ok(self.ud.get(key))
    }

    pub fn require(&self, key: &str) -> Result<&Value, HsmError> {
        self.get(key)?.ok_or_else(|| HsmError::KeyAbsent {
            state: self.state.to_string(),
            key: key.to_string(),
        })
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> Result<(), HsmError> {
        if !self.outputs.contains(key) {
            return Err(HsmError::UndeclaredKeyAccess {
                state: self.state.to_string(),
                key: key.to_string(),
                write: true,
            });
        }
        self.ud.insert(key, value);
        Ok(())
    }
}

/// A state's behaviour: consumes/produces userdata, may advance the clock,
/// and returns one of the state's declared outcomes.
pub type Body<C> =
    Box<dyn Fn(&mut C, &mut UserdataScope<'_>, &mut SimClock) -> Result<Outcome, HsmError> + Send + Sync>;

/// A leaf state: a blocking behaviour with pre-defined outcomes.
pub struct StateSpec<C> {
    pub name: String,
    pub outcomes: BTreeSet<Outcome>,
    pub input_keys: BTreeSet<String>,
    pub output_keys: BTreeSet<String>,
    pub declared_duration: Option<f64>,
    pub(crate) body: Body<C>,
}

impl<C> fmt::Debug for StateSpec<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSpec")
            .field("name", &self.name)
            .field("outcomes", &self.outcomes)
            .field("declared_duration", &self.declared_duration)
            .finish_non_exhaustive()
    }
}

impl<C> StateSpec<C> {
    pub fn new<F>(name: impl Into<String>, outcomes: impl IntoIterator<Item = &'static str>, body: F) -> Self
    where
        F: Fn(&mut C, &mut UserdataScope<'_>, &mut SimClock) -> Result<Outcome, HsmError>
            + Send
            + Sync
            + 'static,
    {
        StateSpec {
            name: name.into(),
            outcomes: outcomes.into_iter().map(Outcome::from).collect(),
            input_keys: BTreeSet::new(),
            output_keys: BTreeSet::new(),
            declared_duration: None,
            body: Box::new(body),
        }
    }

    /// A state whose body does nothing but return the given outcome.
    pub fn scripted(name: impl Into<String>, returns: &str) -> Self {
        let out = Outcome::from(returns);
        let body_out = out.clone();
        let mut s = StateSpec::new(name, [], move |_: &mut C, _: &mut UserdataScope<'_>, _: &mut SimClock| {
            Ok(body_out.clone())
        });
        s.outcomes.insert(out);
        s
    }

    pub fn with_outcome(mut self, outcome: &str) -> Self {
        self.outcomes.insert(Outcome::from(outcome));
        self
    }

    pub fn with_duration(mut self, seconds: f64) -> Self {
        self.declared_duration = Some(seconds);
        self
    }

    pub fn with_inputs(mut self, keys: impl IntoIterator<Item = &'static str>) -> Self {
        self.input_keys.extend(keys.into_iter().map(String::from));
        self
    }

    pub fn with_outputs(mut self, keys: impl IntoIterator<Item = &'static str>) -> Self {
        self.output_keys.extend(keys.into_iter().map(String::from));
        self
    }
}

/// Container flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sequential,
    Concurrent,
}

/// A child of a container.
pub enum Node<C> {
    State(StateSpec<C>),
    Machine(MachineSpec<C>),
}

impl<C> Node<C> {
    pub fn name(&self) -> &str {
        match self {
            Node::State(s) => &s.name,
            Node::Machine(m) => &m.name,
        }
    }

    pub fn outcomes(&self) -> &BTreeSet<Outcome> {
        match self {
            Node::State(s) => &s.outcomes,
            Node::Machine(m) => &m.outcomes,
        }
    }

    pub fn is_machine(&self) -> bool {
        matches!(self, Node::Machine(_))
    }
}

impl<C> fmt::Debug for Node<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::State(s) => write!(f, "State({})", s.name),
            Node::Machine(m) => write!(f, "Machine({})", m.name),
        }
    }
}

/// One rule of a Concurrent container's outcome policy: when every listed
/// child finished with the listed outcome, the container finishes with
/// `then`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub when: BTreeMap<String, Outcome>,
    pub then: Outcome,
}

/// Maps the joint child outcomes of a Concurrent container to a container
/// outcome; `default` applies when no rule matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomePolicy {
    pub rules: Vec<PolicyRule>,
    pub default: Outcome,
}

/// Declarative description of a container and its subtree.
pub struct MachineSpec<C> {
    pub name: String,
    pub kind: Kind,
    pub outcomes: BTreeSet<Outcome>,
    pub(crate) children: Vec<Node<C>>,
    /// Sequential only: `(child, outcome) -> target name`. The target is
    /// resolved as a sibling child first, then as a container outcome.
    pub(crate) transitions: BTreeMap<(String, Outcome), String>,
    /// Concurrent only.
    pub(crate) policy: Option<OutcomePolicy>,
    /// Userdata keys the machine expects to be present on entry; used by
    /// validation to decide whether every declared input key can be
    /// satisfied.
    pub initial_keys: BTreeSet<String>,
}

impl<C> fmt::Debug for MachineSpec<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MachineSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("outcomes", &self.outcomes)
            .field("children", &self.children)
            .finish_non_exhaustive()
    }
}

impl<C> MachineSpec<C> {
    pub fn sequential(
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = &'static str>,
    ) -> Self {
        MachineSpec {
            name: name.into(),
            kind: Kind::Sequential,
            outcomes: outcomes.into_iter().map(Outcome::from).collect(),
            children: Vec::new(),
            transitions: BTreeMap::new(),
            policy: None,
            initial_keys: BTreeSet::new(),
        }
    }

    pub fn concurrent(
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = &'static str>,
        policy: OutcomePolicy,
    ) -> Self {
        MachineSpec {
            name: name.into(),
            kind: Kind::Concurrent,
            outcomes: outcomes.into_iter().map(Outcome::from).collect(),
            children: Vec::new(),
            transitions: BTreeMap::new(),
            policy: Some(policy),
            initial_keys: BTreeSet::new(),
        }
    }

    pub fn with_state(mut self, state: StateSpec<C>) -> Self {
        self.children.push(Node::State(state));
        self
    }

    pub fn with_machine(mut self, machine: MachineSpec<C>) -> Self {
        self.children.push(Node::Machine(machine));
        self
    }

    /// Declare that `child` finishing with `outcome` hands over to `target`
    /// (a sibling child, or a container outcome).
    pub fn with_transition(mut self, child: &str, outcome: &str, target: &str) -> Self {
        self.transitions
            .insert((child.to_string(), Outcome::from(outcome)), target.to_string());
        self
    }

    pub fn with_initial_keys(mut self, keys: impl IntoIterator<Item = &'static str>) -> Self {
        self.initial_keys.extend(keys.into_iter().map(String::from));
        self
    }

    pub fn children(&self) -> impl Iterator<Item = &Node<C>> {
        self.children.iter()
    }

    pub fn child(&self, name: &str) -> Option<&Node<C>> {
        self.children.iter().find(|c| c.name() == name)
    }

    /// Look up a descendant by `/`-separated path (not including this
    /// machine's own name).
    pub fn find(&self, path: &str) -> Option<&Node<C>> {
        let mut parts = path.split('/');
        let first = parts.next()?;
        let mut node = self.child(first)?;
        for part in parts {
            node = match node {
                Node::Machine(m) => m.child(part)?,
                Node::State(_) => return None,
            };
        }
        Some(node)
    }

    /// Recursively collected output keys of a subtree rooted at `node`.
    pub(crate) fn node_output_keys(node: &Node<C>) -> BTreeSet<String> {
        match node {
            Node::State(s) => s.output_keys.clone(),
            Node::Machine(m) => {
                let mut keys = BTreeSet::new();
                for c in &m.children {
                    keys.extend(Self::node_output_keys(c));
                }
                keys
            }
        }
    }
}
