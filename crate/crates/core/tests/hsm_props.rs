//! Property tests for the state-machine executive: replay determinism,
//! Concurrent timing, userdata isolation, and the step budget.

use proptest::prelude::*;

use fetchsim_core::hsm::{
    execute, execute_with_limits, trace_from_text, trace_to_text, validate, ExecLimits, HsmError,
    MachineSpec, Outcome, OutcomePolicy, SimClock, StateSpec, Userdata, UserdataScope,
};

type M = MachineSpec<()>;

/// A linear chain of scripted states with the given durations.
fn chain(durations: &[f64]) -> M {
    let mut m = M::sequential("root", ["done"]);
    for (i, d) in durations.iter().enumerate() {
        m = m.with_state(StateSpec::scripted(format!("s{i}"), "ok").with_duration(*d));
        let target = if i + 1 < durations.len() {
            format!("s{}", i + 1)
        } else {
            "done".to_string()
        };
        m = m.with_transition(&format!("s{i}"), "ok", &target);
    }
    m
}

fn concurrent(durations: &[f64]) -> M {
    let policy = OutcomePolicy {
        rules: vec![],
        default: Outcome::from("joined"),
    };
    let mut m = M::concurrent("par", ["joined"], policy);
    for (i, d) in durations.iter().enumerate() {
        m = m.with_state(StateSpec::scripted(format!("c{i}"), "ok").with_duration(*d));
    }
    m
}

fn run(m: &M) -> (Outcome, f64, String) {
    let mut clock = SimClock::new();
    let res = execute(m, &mut (), Userdata::new(), &mut clock).unwrap();
    (res.outcome, clock.now(), trace_to_text(&res.trace))
}

proptest! {
    /// Identical spec => byte-identical trace and identical elapsed time.
    #[test]
    fn replay_determinism(durations in prop::collection::vec(0.0f64..100.0, 1..12)) {
        let m = chain(&durations);
        prop_assert!(validate(&m).is_empty());
        let (o1, t1, trace1) = run(&m);
        let (o2, t2, trace2) = run(&m);
        prop_assert_eq!(o1, o2);
        prop_assert_eq!(t1, t2);
        prop_assert_eq!(trace1, trace2);
    }

    /// Sequential elapsed time is the sum of child durations.
    #[test]
    fn sequential_time_is_sum(durations in prop::collection::vec(0.0f64..50.0, 1..10)) {
        let m = chain(&durations);
        let (_, elapsed, _) = run(&m);
        let sum: f64 = durations.iter().sum();
        prop_assert!((elapsed - sum).abs() < 1e-9);
    }

    /// Concurrent elapsed time is the max of child durations.
    #[test]
    fn concurrent_time_is_max(durations in prop::collection::vec(0.0f64..50.0, 1..10)) {
        let m = concurrent(&durations);
        prop_assert!(validate(&m).is_empty());
        let (_, elapsed, _) = run(&m);
        let max = durations.iter().cloned().fold(0.0, f64::max);
        prop_assert!((elapsed - max).abs() < 1e-9, "elapsed {} max {}", elapsed, max);
    }

    /// Rendered traces parse back to the same records.
    #[test]
    fn trace_text_parses_back(durations in prop::collection::vec(0.0f64..10.0, 1..8)) {
        let m = chain(&durations);
        let mut clock = SimClock::new();
        let res = execute(&m, &mut (), Userdata::new(), &mut clock).unwrap();
        let text = trace_to_text(&res.trace);
        let parsed = trace_from_text(&text).unwrap();
        prop_assert_eq!(parsed, res.trace);
    }

    /// A state can never observe a key outside its declared input set, no
    /// matter what is on the blackboard.
    #[test]
    fn userdata_isolation(
        declared in prop::collection::btree_set("[a-d]{1,3}", 0..4),
        probe in "[a-z]{1,3}",
    ) {
        let allowed = declared.contains(&probe);
        let probe_key = probe.clone();
        let reader = {
            let mut s = StateSpec::<()>::new(
                "reader",
                ["saw", "hidden"],
                move |_: &mut (), ud: &mut UserdataScope<'_>, _: &mut SimClock| {
                    match ud.get(&probe_key) {
                        Ok(_) => Ok(Outcome::from("saw")),
                        Err(HsmError::UndeclaredKeyAccess { .. }) => Ok(Outcome::from("hidden")),
                        Err(e) => Err(e),
                    }
                },
            );
            s.input_keys = declared.clone();
            s
        };
        let mut m = M::sequential("root", ["saw", "hidden"])
            .with_state(reader)
            .with_transition("reader", "saw", "saw")
            .with_transition("reader", "hidden", "hidden");
        m.initial_keys = declared.clone();
        m.initial_keys.insert(probe.clone());

        // The probed key is present on the blackboard either way.
        let mut initial = Userdata::new();
        initial.insert(probe.clone(), 2i64);
        let mut clock = SimClock::new();
        let res = execute(&m, &mut (), initial, &mut clock).unwrap();
        prop_assert_eq!(res.outcome.as_str(), if allowed { "saw" } else { "hidden" });
    }
}

#[test]
fn cyclic_machine_hits_budget_instead_of_hanging() {
    let m = M::sequential("root", ["never"])
        .with_state(StateSpec::scripted("a", "ok"))
        .with_state(StateSpec::scripted("b", "ok"))
        .with_transition("a", "ok", "b")
        .with_transition("b", "ok", "a");
    let mut clock = SimClock::new();
    let err = execute_with_limits(
        &m,
        &mut (),
        Userdata::new(),
        &mut clock,
        ExecLimits { max_transitions: 1000 },
    )
    .unwrap_err();
    assert_eq!(err, HsmError::StepBudgetExceeded { limit: 1000 });
}

#[test]
fn default_budget_is_10000_transitions() {
    assert_eq!(ExecLimits::default().max_transitions, 10_000);
}

/// 200 randomized Concurrent containers: elapsed = max of child durations.
#[test]
fn concurrent_elapsed_is_max_in_200_randomized_containers() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let n = rng.random_range(1..8);
        let durations: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..120.0)).collect();
        let m = concurrent(&durations);
        let (_, elapsed, _) = run(&m);
        let max = durations.iter().cloned().fold(0.0, f64::max);
        assert!((elapsed - max).abs() < 1e-9);
    }
}
