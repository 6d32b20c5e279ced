//! Strategy oracles: brute-force argmin over the cost formula, penalty
//! dominance, learning convergence, and the path-shift invariance of the
//! argmin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fetchsim_core::nav::plan;
use fetchsim_core::strategy::{
    cost, next_location, update_probabilities, CostParams, ProbabilityTable, SearchAgenda,
    Strategy,
};
use fetchsim_core::tablegeom::SearchLocation;
use fetchsim_core::world::{build_world, load_scenario, room_of, Cell, ScenarioDoc, WorldModel};
use fetchsim_core::{Point2, Pose2};

fn lab() -> WorldModel {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/lab.json"
    ))
    .unwrap();
    load_scenario(&text).unwrap()
}

fn free_cells(world: &WorldModel) -> Vec<Point2> {
    world
        .grid
        .iter_cells()
        .filter(|&(_, _, c)| c == Cell::Free)
        .map(|(c, r, _)| world.grid.cell_center(c, r))
        .collect()
}

/// Brute-force re-statement of the selection rule: evaluate
/// `len/b - k1*P + k2*pen` per location with an independently computed
/// Laplace probability, then take the (cost, id)-minimum.
fn oracle_next(
    remaining: &[SearchLocation],
    object: &str,
    robot: Pose2,
    user_room: &str,
    counts: &[(String, String, u64)],
    alpha: f64,
    domain: &[String],
    params: &CostParams,
    world: &WorldModel,
) -> Option<String> {
    let count_of = |loc: &str| -> u64 {
        counts
            .iter()
            .filter(|(o, l, _)| o == object && l == loc)
            .map(|(_, _, n)| *n)
            .sum()
    };
    let denom: f64 = domain.iter().map(|l| alpha + count_of(l) as f64).sum();
    let mut best: Option<(f64, String)> = None;
    for loc in remaining {
        let Ok(Some(path)) = plan(robot.position(), loc.position(), world) else {
            continue;
        };
        let p = (alpha + count_of(&loc.id) as f64) / denom;
        let pen = if loc.room_id.as_deref() == Some(user_room) {
            params.k_pen
        } else {
            0.0
        };
        let c = path.length / params.bat_normalizer - params.k1 * p + params.k2 * pen;
        let candidate = (c, loc.id.clone());
        let better = match &best {
            None => true,
            Some((bc, bid)) => c < *bc || (c == *bc && loc.id < *bid),
        };
        if better {
            best = Some(candidate);
        }
    }
    best.map(|(_, id)| id)
}

#[test]
fn next_location_matches_brute_force_argmin_in_1000_cases() {
    let world = lab();
    let cells = free_cells(&world);
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let rooms: Vec<String> = world.rooms.iter().map(|r| r.id.clone()).collect();

    for case in 0..1000 {
        let n = rng.random_range(1..=20usize);
        let mut locations = Vec::new();
        for i in 0..n {
            let p = cells[rng.random_range(0..cells.len())];
            let pose = Pose2::new(p.x, p.y, 0.0);
            locations.push(SearchLocation::manual(
                format!("loc{i:02}"),
                pose,
                room_of(p, &world).map(String::from),
            ));
        }
        let domain: Vec<String> = locations.iter().map(|l| l.id.clone()).collect();
        let alpha = rng.random_range(0.1..2.0);
        let mut table = ProbabilityTable::uniform(alpha, domain.iter().cloned());
        let mut counts = Vec::new();
        for _ in 0..rng.random_range(0..30) {
            let loc = &domain[rng.random_range(0..domain.len())];
            table.record_sighting("thing", loc);
            counts.push(("thing".to_string(), loc.clone(), 1));
        }
        let params = CostParams {
            k1: rng.random_range(0.0..3.0),
            k2: rng.random_range(0.0..3.0),
            k_pen: rng.random_range(0.1..3.0),
            bat_normalizer: rng.random_range(1.0..30.0),
            ..CostParams::default()
        };
        let robot_p = cells[rng.random_range(0..cells.len())];
        let robot = Pose2::new(robot_p.x, robot_p.y, 0.0);
        let user_room = &rooms[rng.random_range(0..rooms.len())];

        let mut agenda = SearchAgenda {
            remaining: locations.clone(),
            visited: vec![],
            strategy: Strategy::Manual,
        };
        let got = next_location(&mut agenda, "thing", robot, user_room, &table, &params, &world)
            .map(|l| l.id);
        let want = oracle_next(
            &locations, "thing", robot, user_room, &counts, alpha, &domain, &params, &world,
        );
        assert_eq!(got, want, "case {case}");
    }
}

/// When the penalty outweighs the largest possible path difference plus the
/// probability term, no user-room location is chosen while a reachable
/// non-user-room location remains.
#[test]
fn penalty_dominance_defers_the_users_room() {
    let world = lab();
    let cells = free_cells(&world);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let params = CostParams {
        k1: 1.0,
        k2: 1.0,
        // Dominating penalty: larger than diag/bat_norm + k1.
        k_pen: 10.0,
        bat_normalizer: world.grid.diagonal_m(),
        ..CostParams::default()
    };
    let user_room = "living_room";
    for _ in 0..50 {
        let n = rng.random_range(2..15);
        let mut locations = Vec::new();
        for i in 0..n {
            let p = cells[rng.random_range(0..cells.len())];
            locations.push(SearchLocation::manual(
                format!("l{i}"),
                Pose2::new(p.x, p.y, 0.0),
                room_of(p, &world).map(String::from),
            ));
        }
        let table = ProbabilityTable::uniform(0.5, locations.iter().map(|l| l.id.clone()));
        let robot_p = cells[rng.random_range(0..cells.len())];
        let robot = Pose2::new(robot_p.x, robot_p.y, 0.0);
        let mut agenda = SearchAgenda {
            remaining: locations,
            visited: vec![],
            strategy: Strategy::Manual,
        };
        let mut seen_user_room = false;
        while let Some(chosen) =
            next_location(&mut agenda, "x", robot, user_room, &table, &params, &world)
        {
            if chosen.room_id.as_deref() == Some(user_room) {
                seen_user_room = true;
            } else {
                assert!(
                    !seen_user_room,
                    "non-user-room location chosen after a user-room one"
                );
            }
        }
    }
}

/// Repeated sightings at one location drive its probability towards 1
/// monotonically and eventually make it the first choice from equal
/// distances.
#[test]
fn learning_converges_to_the_sighted_location() {
    let world = lab();
    let ids = ["a", "b", "c", "d"];
    let mut table = ProbabilityTable::uniform(1.0, ids.iter().map(|s| s.to_string()));
    let mut last_p = table.probability("mug", "b");
    for _ in 0..50 {
        table.record_sighting("mug", "b");
        let p = table.probability("mug", "b");
        assert!(p > last_p, "not monotone: {p} after {last_p}");
        last_p = p;
    }
    assert!(last_p > 0.9);

    // Equidistant locations in the hall: after learning, `b` wins.
    let positions = [
        Pose2::new(7.1, 3.1, 0.0),
        Pose2::new(9.1, 3.1, 0.0),
        Pose2::new(8.1, 2.1, 0.0),
        Pose2::new(8.1, 4.1, 0.0),
    ];
    let locations: Vec<SearchLocation> = ids
        .iter()
        .zip(positions.iter())
        .map(|(id, pose)| {
            SearchLocation::manual(
                *id,
                *pose,
                room_of(pose.position(), &world).map(String::from),
            )
        })
        .collect();
    let mut agenda = SearchAgenda {
        remaining: locations,
        visited: vec![],
        strategy: Strategy::Manual,
    };
    let params = CostParams::defaults_for(&world);
    let chosen = next_location(
        &mut agenda,
        "mug",
        Pose2::new(8.1, 3.1, 0.0),
        "bedroom",
        &table,
        &params,
        &world,
    )
    .unwrap();
    assert_eq!(chosen.id, "b");
}

/// Nearest-location sightings: update_probabilities snaps a sighting to the
/// closest location.
#[test]
fn update_assigns_sightings_to_the_nearest_location() {
    let world = lab();
    let locations = vec![
        SearchLocation::manual("near", Pose2::new(8.0, 3.0, 0.0), Some("central_hall".into())),
        SearchLocation::manual("far", Pose2::new(13.5, 5.5, 0.0), Some("living_room".into())),
    ];
    let mut table = ProbabilityTable::uniform(1.0, locations.iter().map(|l| l.id.clone()));
    update_probabilities(
        &mut table,
        &[("mug".to_string(), Point2::new(8.3, 3.2))],
        &locations,
    );
    assert_eq!(table.count("mug", "near"), 1);
    assert_eq!(table.count("mug", "far"), 0);
}

/// Moving the robot straight back in a corridor adds a constant to every
/// path length and must not change the chosen location.
#[test]
fn argmin_is_invariant_under_common_path_shift() {
    let rows = vec!["#".repeat(30), format!("#{}#", ".".repeat(28)), "#".repeat(30)];
    let doc = serde_json::json!({
        "grid": { "resolution": 1.0, "width": 30, "height": 3, "rows": rows },
        "rooms": [ { "id": "r", "polygon": [[1.0, 1.0], [29.0, 1.0], [29.0, 2.0], [1.0, 2.0]] } ],
        "robot": { "x": 1.5, "y": 1.5, "yaw": 0.0 },
        "user": { "room": "r" }
    });
    let world = build_world(serde_json::from_value::<ScenarioDoc>(doc).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let mut locations = Vec::new();
        for i in 0..6 {
            let x = rng.random_range(10.0..29.0);
            locations.push(SearchLocation::manual(
                format!("l{i}"),
                Pose2::new(x, 1.5, 0.0),
                Some("r".to_string()),
            ));
        }
        let mut table = ProbabilityTable::uniform(0.5, locations.iter().map(|l| l.id.clone()));
        for _ in 0..rng.random_range(0..10) {
            let idx = rng.random_range(0..locations.len());
            table.record_sighting("x", &locations[idx].id.clone());
        }
        let params = CostParams {
            bat_normalizer: 10.0,
            ..CostParams::default()
        };
        let choose = |robot_x: f64| {
            let mut agenda = SearchAgenda {
                remaining: locations.clone(),
                visited: vec![],
                strategy: Strategy::Manual,
            };
            next_location(
                &mut agenda,
                "x",
                Pose2::new(robot_x, 1.5, 0.0),
                "nowhere",
                &table,
                &params,
                &world,
            )
            .map(|l| l.id)
        };
        // Robot positions left of every location: all path lengths shift by
        // the same amount.
        assert_eq!(choose(8.5), choose(1.5));
    }
}

#[test]
fn unreachable_locations_are_skipped_not_fatal() {
    let world = lab();
    let params = CostParams::defaults_for(&world);
    let table = ProbabilityTable::default();
    let mut agenda = SearchAgenda {
        remaining: vec![
            SearchLocation::manual("out", Pose2::new(50.0, 50.0, 0.0), None),
            SearchLocation::manual("ok", Pose2::new(8.0, 3.0, 0.0), Some("central_hall".into())),
        ],
        visited: vec![],
        strategy: Strategy::Manual,
    };
    let robot = world.agent.robot_pose;
    let first = next_location(&mut agenda, "x", robot, "bedroom", &table, &params, &world);
    assert_eq!(first.unwrap().id, "ok");
    let second = next_location(&mut agenda, "x", robot, "bedroom", &table, &params, &world);
    assert!(second.is_none());
    assert_eq!(agenda.remaining.len(), 1, "unreachable location stays");
}

#[test]
fn cost_none_only_for_unreachable() {
    let world = lab();
    let params = CostParams::defaults_for(&world);
    let table = ProbabilityTable::default();
    let reachable =
        SearchLocation::manual("a", Pose2::new(2.6, 7.6, 0.0), Some("kitchen".into()));
    let robot = world.agent.robot_pose;
    assert!(cost("x", &reachable, robot, "bedroom", &table, &params, &world).is_some());
    let walled = SearchLocation::manual("w", Pose2::new(5.1, 5.0, 0.0), None);
    assert!(cost("x", &walled, robot, "bedroom", &table, &params, &world).is_none());
}
