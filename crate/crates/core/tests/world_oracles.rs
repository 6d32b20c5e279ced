//! World-model oracles: independent point-in-polygon checks for room
//! lookup, a rasterization oracle for the occupancy filter, and the bundled
//! lab scenario's structural guarantees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fetchsim_core::world::{
    build_world, is_occupied, load_scenario, room_of, to_document, Cell, FurnitureClass,
    ScenarioDoc, WorldModel,
};
use fetchsim_core::Point2;

fn lab() -> WorldModel {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../scenarios/lab.json"
    ))
    .unwrap();
    load_scenario(&text).unwrap()
}

/// Independent even-odd ray cast (rightward ray, strict crossing count, no
/// shared code with `geom::Polygon::contains`).
fn oracle_inside(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if ((yi > p.1) != (yj > p.1))
            && (p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi)
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

#[test]
fn room_of_matches_ray_cast_oracle_on_1000_points() {
    let world = lab();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let polys: Vec<(String, Vec<(f64, f64)>)> = world
        .rooms
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                r.polygon.vertices.iter().map(|v| (v.x, v.y)).collect(),
            )
        })
        .collect();
    let mut checked = 0;
    while checked < 1000 {
        let p = (rng.random_range(-1.0..17.0), rng.random_range(-1.0..12.0));
        // Skip points within epsilon of any edge: boundary convention is the
        // implementation's documented choice, not the oracle's.
        let near_boundary = world.rooms.iter().any(|r| {
            r.polygon.on_boundary(Point2::new(p.0, p.1), 1e-6)
        });
        if near_boundary {
            continue;
        }
        let got = room_of(Point2::new(p.0, p.1), &world);
        let expect = polys
            .iter()
            .find(|(_, poly)| oracle_inside(poly, p))
            .map(|(id, _)| id.as_str());
        assert_eq!(got, expect, "at {p:?}");
        checked += 1;
    }
}

#[test]
fn rooms_partition_no_point_in_two_rooms() {
    let world = lab();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let p = Point2::new(rng.random_range(0.0..16.0), rng.random_range(0.0..11.0));
        let n = world
            .rooms
            .iter()
            .filter(|r| r.polygon.contains(p))
            .count();
        assert!(n <= 1, "point {p:?} in {n} rooms");
    }
}

/// Rasterization oracle: a point strictly inside a furniture footprint must
/// be on an Occupied cell; a point far from all footprints and walls must be
/// Free.
#[test]
fn furniture_rasterization_matches_polygon_containment() {
    let world = lab();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut inside_checked = 0;
    while inside_checked < 300 {
        let f = &world.furniture[rng.random_range(0..world.furniture.len())];
        let (min, max) = f.footprint.bounding_box();
        let p = Point2::new(
            rng.random_range(min.x..max.x),
            rng.random_range(min.y..max.y),
        );
        if !f.footprint.contains(p) {
            continue;
        }
        assert!(
            is_occupied(p, &world),
            "inside `{}` at {p:?} but cell is free",
            f.id
        );
        inside_checked += 1;
    }
}

#[test]
fn lab_scenario_structure() {
    let world = lab();
    assert_eq!(world.rooms.len(), 5);
    let ids: Vec<&str> = world.rooms.iter().map(|r| r.id.as_str()).collect();
    for expected in ["kitchen", "dining_room", "living_room", "bedroom", "central_hall"] {
        assert!(ids.contains(&expected));
    }
    // At least one table-class furniture item per room.
    for room in &world.rooms {
        let has_table = world
            .furniture
            .iter()
            .any(|f| f.room_id == room.id && f.class == FurnitureClass::Table);
        assert!(has_table, "room `{}` lacks a table", room.id);
    }
    // The three paper objects are present on their supports.
    for (name, support) in [
        ("asus_box", "dining_table"),
        ("handbag", "bedroom_nightstand"),
        ("wallet", "living_shelf"),
    ] {
        let obj = world.object_by_name(name).unwrap();
        assert_eq!(obj.supporting_furniture.as_deref(), Some(support));
    }
    assert_eq!(world.annotations.len(), 9);
}

#[test]
fn every_scene_object_support_exists_and_shares_the_room() {
    let world = lab();
    for obj in &world.objects {
        let support = obj.supporting_furniture.as_ref().unwrap();
        let furn = world.furniture_by_id(support).unwrap();
        assert!(furn.footprint.contains(obj.position()));
        assert!((obj.z - furn.surface_height).abs() < 1e-9);
    }
}

#[test]
fn lab_round_trips_through_the_document_format() {
    let world = lab();
    let doc = to_document(&world);
    let reloaded = build_world(doc).unwrap();
    assert_eq!(world, reloaded);
}

#[test]
fn unknown_cells_count_as_occupied() {
    let doc = serde_json::json!({
        "grid": { "resolution": 1.0, "width": 3, "height": 1, "rows": [".?#"] },
        "rooms": [ { "id": "r", "polygon": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] } ],
        "robot": { "x": 0.5, "y": 0.5, "yaw": 0.0 },
        "user": { "room": "r" }
    });
    let world = build_world(serde_json::from_value::<ScenarioDoc>(doc).unwrap()).unwrap();
    assert_eq!(world.grid.cell(1, 0), Cell::Unknown);
    assert!(is_occupied(Point2::new(1.5, 0.5), &world));
    assert!(is_occupied(Point2::new(2.5, 0.5), &world));
    assert!(!is_occupied(Point2::new(0.5, 0.5), &world));
}
