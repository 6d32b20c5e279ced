//! Deterministic execution of validated machine specs.

use super::{
    HsmError, Kind, MachineSpec, Node, Outcome, SimClock, StateSpec, Trace, TraceRecord, Userdata,
    UserdataScope,
};

/// Runtime limits. The step budget bounds the number of child completions;
/// exceeding it is an error, never a hang.
#[derive(Debug, Clone, Copy)]
pub struct ExecLimits {
    pub max_transitions: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            max_transitions: 10_000,
        }
    }
}

/// What an execution produced.
#[derive(Debug)]
pub struct ExecResult {
    pub outcome: Outcome,
    pub userdata: Userdata,
    pub trace: Trace,
}

/// Execute a machine with default limits. The spec must have passed
/// [`super::validate`]; execution does not re-validate.
pub fn execute<C>(
    spec: &MachineSpec<C>,
    ctx: &mut C,
    initial: Userdata,
    clock: &mut SimClock,
) -> Result<ExecResult, HsmError> {
    execute_with_limits(spec, ctx, initial, clock, ExecLimits::default())
}

pub fn execute_with_limits<C>(
    spec: &MachineSpec<C>,
    ctx: &mut C,
    initial: Userdata,
    clock: &mut SimClock,
    limits: ExecLimits,
) -> Result<ExecResult, HsmError> {
    let mut ud = initial;
    let mut records = Vec::new();
    let mut steps = 0usize;
    let outcome = run_machine(spec, ctx, &mut ud, clock, &spec.name, &mut records, &mut steps, limits)?;
    records.push(TraceRecord {
        sim_time: clock.now(),
        path: spec.name.clone(),
        outcome: outcome.clone(),
    });
    Ok(ExecResult {
        outcome,
        userdata: ud,
        trace: Trace { records },
    })
}

#[allow(clippy::too_many_arguments)]
fn run_machine<C>(
    m: &MachineSpec<C>,
    ctx: &mut C,
    ud: &mut Userdata,
    clock: &mut SimClock,
    path: &str,
    records: &mut Vec<TraceRecord>,
    steps: &mut usize,
    limits: ExecLimits,
) -> Result<Outcome, HsmError> {
    match m.kind {
        Kind::Sequential => run_sequential(m, ctx, ud, clock, path, records, steps, limits),
        Kind::Concurrent => run_concurrent(m, ctx, ud, clock, path, records, steps, limits),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_sequential<C>(
    m: &MachineSpec<C>,
    ctx: &mut C,
    ud: &mut Userdata,
    clock: &mut SimClock,
    path: &str,
    records: &mut Vec<TraceRecord>,
    steps: &mut usize,
    limits: ExecLimits,
) -> Result<Outcome, HsmError> {
    let mut current = m.children[0].name().to_string();
    loop {
        let node = m
            .child(&current)
            .expect("validated spec: current child exists");
        let child_path = format!("{path}/{current}");
        let outcome = run_node(node, ctx, ud, clock, &child_path, records, steps, limits)?;
        records.push(TraceRecord {
            sim_time: clock.now(),
            path: child_path,
            outcome: outcome.clone(),
        });
        *steps += 1;
        if *steps > limits.max_transitions {
            return Err(HsmError::StepBudgetExceeded {
                limit: limits.max_transitions,
            });
        }
        let target = m
            .transitions
            .get(&(current.clone(), outcome.clone()))
            .ok_or_else(|| HsmError::UnmappedOutcome {
                child: current.clone(),
                outcome: outcome.clone(),
            })?;
        // Child targets take priority; validation rejects ambiguous names.
        if m.child(target).is_some() {
            current = target.clone();
        } else {
            return Ok(Outcome::from(target.as_str()));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_concurrent<C>(
    m: &MachineSpec<C>,
    ctx: &mut C,
    ud: &mut Userdata,
    clock: &mut SimClock,
    path: &str,
    records: &mut Vec<TraceRecord>,
    steps: &mut usize,
    limits: ExecLimits,
) -> Result<Outcome, HsmError> {
    let t0 = clock.now();
    let snapshot = ud.clone();
    let mut max_elapsed = 0.0f64;
    let mut joint: Vec<(String, Outcome)> = Vec::new();
    // (child index, records) buffers, merged by timestamp afterwards.
    let mut buffers: Vec<Vec<TraceRecord>> = Vec::new();
    let mut write_sets: Vec<(String, Userdata)> = Vec::new();

    for node in &m.children {
        let child_path = format!("{path}/{}", node.name());
        let mut child_ud = snapshot.clone();
        let mut child_clock = *clock;
        child_clock.set(t0);
        let mut child_records = Vec::new();
        let outcome = run_node(
            node,
            ctx,
            &mut child_ud,
            &mut child_clock,
            &child_path,
            &mut child_records,
            steps,
            limits,
        )?;
        child_records.push(TraceRecord {
            sim_time: child_clock.now(),
            path: child_path,
            outcome: outcome.clone(),
        });
        *steps += 1;
        if *steps > limits.max_transitions {
            return Err(HsmError::StepBudgetExceeded {
                limit: limits.max_transitions,
            });
        }
        max_elapsed = max_elapsed.max(child_clock.now() - t0);
        joint.push((node.name().to_string(), outcome));
        buffers.push(child_records);
        write_sets.push((node.name().to_string(), child_ud));
    }

    // Merge child write sets; disjointness is checked by validation and
    // re-checked here.
    let mut written: std::collections::BTreeMap<String, super::Value> = Default::default();
    for (_name, child_ud) in &write_sets {
        for key in child_ud.keys().map(String::from).collect::<Vec<_>>() {
            let new = child_ud.get(&key).cloned().expect("key enumerated above");
            let changed = snapshot.get(&key) != Some(&new);
            if changed {
                if written.contains_key(&key) && written.get(&key) != Some(&new) {
                    return Err(HsmError::ConcurrentWriteConflict { key });
                }
                written.insert(key, new);
            }
        }
    }
    for (key, value) in written {
        ud.insert(key, value);
    }

    // Interleave child records by simulated time; ties keep declaration
    // order because the concatenation is already ordered and the sort is
    // stable.
    let mut merged: Vec<TraceRecord> = buffers.into_iter().flatten().collect();
    merged.sort_by(|a, b| a.sim_time.total_cmp(&b.sim_time));
    records.extend(merged);

    clock.set(t0 + max_elapsed);

    let policy = m.policy.as_ref().expect("validated spec: policy present");
    for rule in &policy.rules {
        let matches = rule
            .when
            .iter()
            .all(|(child, outcome)| joint.iter().any(|(c, o)| c == child && o == outcome));
        if matches {
            return Ok(rule.then.clone());
        }
    }
    Ok(policy.default.clone())
}

#[allow(clippy::too_many_arguments)]
fn run_node<C>(
    node: &Node<C>,
    ctx: &mut C,
    ud: &mut Userdata,
    clock: &mut SimClock,
    path: &str,
    records: &mut Vec<TraceRecord>,
    steps: &mut usize,
    limits: ExecLimits,
) -> Result<Outcome, HsmError> {
    match node {
        Node::State(state) => run_state(state, ctx, ud, clock),
        Node::Machine(sub) => run_machine(sub, ctx, ud, clock, path, records, steps, limits),
    }
}

fn run_state<C>(
    state: &StateSpec<C>,
    ctx: &mut C,
    ud: &mut Userdata,
    clock: &mut SimClock,
) -> Result<Outcome, HsmError> {
    let mut scope = UserdataScope {
        ud,
        state: &state.name,
        inputs: &state.input_keys,
        outputs: &state.output_keys,
    };
    let outcome = (state.body)(ctx, &mut scope, clock)?;
    if let Some(duration) = state.declared_duration {
        clock.advance(duration)?;
    }
    if !state.outcomes.contains(&outcome) {
        return Err(HsmError::UndeclaredOutcomeReturned {
            state: state.name.clone(),
            outcome,
        });
    }
    Ok(outcome)
}
