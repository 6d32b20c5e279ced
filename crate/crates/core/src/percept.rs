//! Simulated semantic perception.
//!
//! Instead of running a real segmentation pipeline, the scene is sampled
//! from ground truth: surfaces visible from the sensor (2D ray-cast
//! visibility against occupied grid cells) are turned into labelled 3D
//! points. Furniture occludes what is behind its footprint but never its own
//! top face. Horizontal surfaces are sampled on a world-aligned 5 cm
//! lattice; wall faces one column per visible cell with 5 cm vertical steps.
//!
//! Elevated surfaces inside the graspable height band are labelled `table`
//! even for shelves, windowsills and similar furniture, which is what makes
//! the generated strategy search beyond pre-defined tables.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{wrap_angle, Point2, Pose2};
use crate::world::{Cell, FurnitureClass, WorldModel};

/// The closed set of semantic labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SemanticLabel {
    Floor,
    Wall,
    Ceiling,
    Table,
    Chair,
    Cabinet,
    Object,
    Unknown,
}

pub const ALL_LABELS: [SemanticLabel; 8] = [
    SemanticLabel::Floor,
    SemanticLabel::Wall,
    SemanticLabel::Ceiling,
    SemanticLabel::Table,
    SemanticLabel::Chair,
    SemanticLabel::Cabinet,
    SemanticLabel::Object,
    SemanticLabel::Unknown,
];

impl std::fmt::Display for SemanticLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SemanticLabel::Floor => "floor",
            SemanticLabel::Wall => "wall",
            SemanticLabel::Ceiling => "ceiling",
            SemanticLabel::Table => "table",
            SemanticLabel::Chair => "chair",
            SemanticLabel::Cabinet => "cabinet",
            SemanticLabel::Object => "object",
            SemanticLabel::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// Graspable height band: elevated surfaces in this range read as `table`.
pub const GRASP_BAND: (f64, f64) = (0.4, 1.2);

/// Surface sampling lattice spacing, metres.
pub const SAMPLE_SPACING: f64 = 0.05;

/// Assumed wall height for face sampling, metres.
pub const WALL_HEIGHT: f64 = 2.5;

/// One labelled 3D point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub label: SemanticLabel,
}

/// Where the cloud was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensorPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub mount_height: f64,
}

/// A simulated segmentation result.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub points: Vec<LabeledPoint>,
    pub sensor_pose: SensorPose,
}

impl LabeledCloud {
    /// Debug dump as `x,y,z,label` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,label\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.x, p.y, p.z, p.label));
        }
        out
    }
}

/// A 6-DOF object pose estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose6 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// One recognized object. `true_positive` is kept for scoring only; the
/// mission treats flagged and unflagged detections alike.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub name: String,
    pub pose: Pose6,
    pub true_positive: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecognitionResult {
    pub detections: Vec<Detection>,
}

/// Stochastic perception parameters. All probabilities in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionNoise {
    pub label_flip_rate: f64,
    pub dropout_rate: f64,
    pub p_true_positive: f64,
    pub p_false_positive: f64,
    pub seed: u64,
    /// Per-object overrides of `p_true_positive`, for objects that are hard
    /// to recognize.
    pub per_object_true_positive: BTreeMap<String, f64>,
}

impl Default for PerceptionNoise {
    fn default() -> Self {
        PerceptionNoise {
            label_flip_rate: 0.0,
            dropout_rate: 0.0,
            p_true_positive: 1.0,
            p_false_positive: 0.0,
            seed: 0,
            per_object_true_positive: BTreeMap::new(),
        }
    }
}

impl PerceptionNoise {
    pub fn is_valid(&self) -> bool {
        let probs = [
            self.label_flip_rate,
            self.dropout_rate,
            self.p_true_positive,
            self.p_false_positive,
        ];
        probs.iter().all(|p| (0.0..=1.0).contains(p))
            && self
                .per_object_true_positive
                .values()
                .all(|p| (0.0..=1.0).contains(p))
    }

    fn tp_for(&self, object: &str) -> f64 {
        *self
            .per_object_true_positive
            .get(object)
            .unwrap_or(&self.p_true_positive)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PerceptError {
    #[error("sensor pose is on an occupied or out-of-map cell")]
    SensorPoseOccupied,
}

/// True when `p` lies within the horizontal FOV and range of the sensor.
pub fn in_sector(origin: Point2, yaw: f64, fov: f64, range: f64, p: Point2) -> bool {
    let v = p - origin;
    let d = v.norm();
    if d > range {
        return false;
    }
    if d < 1e-12 {
        return true;
    }
    wrap_angle(v.angle() - yaw).abs() <= fov / 2.0 + 1e-12
}

/// 2D line of sight on the grid: every cell crossed between `from` and `to`
/// (exclusive of both endpoint cells) must be Free or accepted by
/// `transparent`. Sampled at quarter-resolution steps.
fn line_of_sight(
    world: &WorldModel,
    from: Point2,
    to: Point2,
    transparent: impl Fn(usize, usize) -> bool,
) -> bool {
    let grid = &world.grid;
    let start_cell = grid.cell_of(from);
    let end_cell = grid.cell_of(to);
    let dist = from.dist(to);
    if dist < 1e-12 {
        return true;
    }
    let step = grid.resolution / 4.0;
    let n = (dist / step).ceil() as usize;
    let dir = (to - from).scaled(1.0 / dist);
    let mut last = None;
    for i in 1..n {
        let p = from + dir.scaled(i as f64 * step);
        let cell = grid.cell_of(p);
        if cell == last {
            continue;
        }
        last = cell;
        if cell == start_cell || cell == end_cell {
            continue;
        }
        match cell {
            None => return false,
            Some((c, r)) => {
                if grid.cell(c, r) != Cell::Free && !transparent(c, r) {
                    return false;
                }
            }
        }
    }
    true
}

fn label_for_surface(class: FurnitureClass, surface_height: f64) -> SemanticLabel {
    let in_band = surface_height >= GRASP_BAND.0 && surface_height <= GRASP_BAND.1;
    match class {
        FurnitureClass::Table => SemanticLabel::Table,
        FurnitureClass::Cabinet => SemanticLabel::Cabinet,
        FurnitureClass::Shelf
        | FurnitureClass::Windowsill
        | FurnitureClass::Nightstand
        | FurnitureClass::Other => {
            if in_band {
                SemanticLabel::Table
            } else {
                SemanticLabel::Cabinet
            }
        }
    }
}

/// World-aligned sample lattice over a bounding box: centres of 5 cm cells.
fn lattice(min: f64, max: f64) -> impl Iterator<Item = f64> {
    let i0 = (min / SAMPLE_SPACING).floor() as i64;
    let i1 = (max / SAMPLE_SPACING).ceil() as i64;
    (i0..=i1).map(|i| (i as f64 + 0.5) * SAMPLE_SPACING)
}

/// Simulate one semantic segmentation call from `sensor_pose`.
///
/// With zero noise this is a pure function of `(world, sensor_pose)`; noise
/// draws from `rng` per sampled point in a fixed order, so identical seeds
/// reproduce identical clouds.
pub fn sense_semantic(
    world: &WorldModel,
    sensor_pose: Pose2,
    noise: &PerceptionNoise,
    rng: &mut impl Rng,
) -> Result<LabeledCloud, PerceptError> {
    let grid = &world.grid;
    let origin = sensor_pose.position();
    let free = grid
        .cell_of(origin)
        .map(|(c, r)| grid.is_free_cell(c, r))
        .unwrap_or(false);
    if !free {
        return Err(PerceptError::SensorPoseOccupied);
    }
    let cam = &world.agent.camera;
    let (fov, range) = (cam.fov_horizontal, cam.max_range);
    let mut raw: Vec<LabeledPoint> = Vec::new();

    // Furniture top faces, transparent through their own footprint cells.
    for (fi, furn) in world.furniture.iter().enumerate() {
        let (min, max) = furn.footprint.bounding_box();
        if origin.x < min.x - range
            || origin.x > max.x + range
            || origin.y < min.y - range
            || origin.y > max.y + range
        {
            continue;
        }
        let own = |c: usize, r: usize| world.furniture_at_cell(c, r).contains(&fi);
        for y in lattice(min.y, max.y) {
            for x in lattice(min.x, max.x) {
                let p = Point2::new(x, y);
                if !furn.footprint.contains(p) {
                    continue;
                }
                if !in_sector(origin, sensor_pose.yaw, fov, range, p) {
                    continue;
                }
                if line_of_sight(world, origin, p, own) {
                    raw.push(LabeledPoint {
                        x,
                        y,
                        z: furn.surface_height,
                        label: label_for_surface(furn.class, furn.surface_height),
                    });
                }
            }
        }
    }

    // Visible-cell map within the sector bounding box for floor and walls.
    let bbox_min = Point2::new(origin.x - range, origin.y - range);
    let bbox_max = Point2::new(origin.x + range, origin.y + range);
    let c0 = ((bbox_min.x / grid.resolution).floor().max(0.0)) as usize;
    let r0 = ((bbox_min.y / grid.resolution).floor().max(0.0)) as usize;
    let c1 = (((bbox_max.x / grid.resolution).ceil()).max(0.0) as usize).min(grid.width);
    let r1 = (((bbox_max.y / grid.resolution).ceil()).max(0.0) as usize).min(grid.height);

    let mut visible_free = vec![false; grid.width * grid.height];
    for row in r0..r1 {
        for col in c0..c1 {
            let center = grid.cell_center(col, row);
            if !in_sector(origin, sensor_pose.yaw, fov, range, center) {
                continue;
            }
            if grid.is_free_cell(col, row) {
                visible_free[row * grid.width + col] =
                    line_of_sight(world, origin, center, |_, _| false);
            }
        }
    }

    // Floor points on the 5 cm lattice over visible free cells.
    for y in lattice(bbox_min.y.max(0.0), bbox_max.y) {
        for x in lattice(bbox_min.x.max(0.0), bbox_max.x) {
            let p = Point2::new(x, y);
            if !in_sector(origin, sensor_pose.yaw, fov, range, p) {
                continue;
            }
            match grid.cell_of(p) {
                Some((c, r)) if visible_free[r * grid.width + c] => {
                    raw.push(LabeledPoint {
                        x,
                        y,
                        z: 0.0,
                        label: SemanticLabel::Floor,
                    });
                }
                _ => {}
            }
        }
    }

    // Wall faces: occupied cells not covered by furniture, one column of
    // points per visible cell.
    for row in r0..r1 {
        for col in c0..c1 {
            if grid.cell(col, row) == Cell::Free {
                continue;
            }
            if !world.furniture_at_cell(col, row).is_empty() {
                continue;
            }
            let center = grid.cell_center(col, row);
            if !in_sector(origin, sensor_pose.yaw, fov, range, center) {
                continue;
            }
            if !line_of_sight(world, origin, center, |_, _| false) {
                continue;
            }
            let mut z = 0.0;
            while z <= WALL_HEIGHT {
                raw.push(LabeledPoint {
                    x: center.x,
                    y: center.y,
                    z,
                    label: SemanticLabel::Wall,
                });
                z += SAMPLE_SPACING;
            }
        }
    }

    // Objects: one point each, transparent through the supporting furniture.
    for obj in &world.objects {
        let p = obj.position();
        if !in_sector(origin, sensor_pose.yaw, fov, range, p) {
            continue;
        }
        let support = obj
            .supporting_furniture
            .as_ref()
            .and_then(|id| world.furniture.iter().position(|f| &f.id == id));
        let transparent =
            |c: usize, r: usize| support.is_some_and(|fi| world.furniture_at_cell(c, r).contains(&fi));
        if line_of_sight(world, origin, p, transparent) {
            raw.push(LabeledPoint {
                x: obj.x,
                y: obj.y,
                z: obj.z,
                label: SemanticLabel::Object,
            });
        }
    }

    // Noise: dropout then label flips, in sampling order.
    let mut points = Vec::with_capacity(raw.len());
    for mut p in raw {
        if noise.dropout_rate > 0.0 && rng.random_bool(noise.dropout_rate) {
            continue;
        }
        if noise.label_flip_rate > 0.0 && rng.random_bool(noise.label_flip_rate) {
            let others: Vec<SemanticLabel> =
                ALL_LABELS.iter().copied().filter(|l| *l != p.label).collect();
            p.label = others[rng.random_range(0..others.len())];
        }
        points.push(p);
    }

    Ok(LabeledCloud {
        points,
        sensor_pose: SensorPose {
            x: sensor_pose.x,
            y: sensor_pose.y,
            yaw: sensor_pose.yaw,
            mount_height: cam.mount_height,
        },
    })
}

/// Heading of scan step `k` for a scan that starts at `start_yaw` and turns
/// counter-clockwise in `step_deg` increments.
pub fn scan_heading(start_yaw: f64, k: usize, step_deg: f64) -> f64 {
    wrap_angle(start_yaw + (k as f64) * step_deg.to_radians())
}

/// Rotate in place and segment after every step: `total_deg / step_deg`
/// clouds at counter-clockwise headings. Simulated time for the scan is
/// charged by the caller via [`crate::nav::scan_duration`].
pub fn rotation_scan(
    world: &WorldModel,
    center_pose: Pose2,
    noise: &PerceptionNoise,
    step_deg: f64,
    total_deg: f64,
    rng: &mut impl Rng,
) -> Result<Vec<LabeledCloud>, PerceptError> {
    let steps = (total_deg / step_deg).round() as usize;
    debug_assert!(
        ((total_deg / step_deg) - steps as f64).abs() < 1e-9,
        "total must be an integer multiple of step"
    );
    let mut clouds = Vec::with_capacity(steps);
    for k in 0..steps {
        let heading = scan_heading(center_pose.yaw, k, step_deg);
        let pose = Pose2::new(center_pose.x, center_pose.y, heading);
        clouds.push(sense_semantic(world, pose, noise, rng)?);
    }
    Ok(clouds)
}

/// Is an object visible from the sensor: in FOV and range, with line of
/// sight that may pass over the object's own supporting furniture.
pub fn object_visible(world: &WorldModel, sensor_pose: Pose2, obj_index: usize) -> bool {
    let cam = &world.agent.camera;
    let obj = &world.objects[obj_index];
    let origin = sensor_pose.position();
    let p = obj.position();
    if !in_sector(origin, sensor_pose.yaw, cam.fov_horizontal, cam.max_range, p) {
        return false;
    }
    let support = obj
        .supporting_furniture
        .as_ref()
        .and_then(|id| world.furniture.iter().position(|f| &f.id == id));
    let transparent =
        |c: usize, r: usize| support.is_some_and(|fi| world.furniture_at_cell(c, r).contains(&fi));
    line_of_sight(world, origin, p, transparent)
}

/// Attempt object recognition from a search position. All ground-truth
/// objects in view are candidates, each detected with the (possibly
/// per-object) true-positive probability; additionally, with probability
/// `p_false_positive` one spurious detection of `target` is emitted at a
/// random in-view pose and flagged.
pub fn recognize_objects(
    world: &WorldModel,
    sensor_pose: Pose2,
    target: &str,
    noise: &PerceptionNoise,
    rng: &mut impl Rng,
) -> RecognitionResult {
    let mut detections = Vec::new();
    for (i, obj) in world.objects.iter().enumerate() {
        if !object_visible(world, sensor_pose, i) {
            continue;
        }
        let p_tp = noise.tp_for(&obj.name);
        if p_tp > 0.0 && rng.random_bool(p_tp) {
            detections.push(Detection {
                name: obj.name.clone(),
                pose: Pose6 {
                    x: obj.x,
                    y: obj.y,
                    z: obj.z,
                    roll: 0.0,
                    pitch: 0.0,
                    yaw: obj.yaw,
                },
                true_positive: true,
            });
        }
    }
    if noise.p_false_positive > 0.0 && rng.random_bool(noise.p_false_positive) {
        let cam = &world.agent.camera;
        let r = rng.random_range(0.5..cam.max_range);
        let bearing = sensor_pose.yaw
            + rng.random_range(-cam.fov_horizontal / 2.0..cam.fov_horizontal / 2.0);
        detections.push(Detection {
            name: target.to_string(),
            pose: Pose6 {
                x: sensor_pose.x + r * bearing.cos(),
                y: sensor_pose.y + r * bearing.sin(),
                z: rng.random_range(GRASP_BAND.0..GRASP_BAND.1),
                roll: 0.0,
                pitch: 0.0,
                yaw: rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            },
            true_positive: false,
        });
    }
    RecognitionResult { detections }
}

/// Attempt to detect the user: succeeds only when the user's actual room is
/// the robot's room and a Bernoulli draw with `p_true_positive` succeeds.
pub fn detect_user(world: &WorldModel, robot_room: &str, noise: &PerceptionNoise, rng: &mut impl Rng) -> bool {
    if world.user.room != robot_room {
        return false;
    }
    noise.p_true_positive > 0.0 && rng.random_bool(noise.p_true_positive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_world, ScenarioDoc, WorldModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn room_with(furniture: serde_json::Value, objects: serde_json::Value) -> WorldModel {
        // 8 x 8 m room at 0.2 m resolution with a wall border.
        let n = 40;
        let rows: Vec<String> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    "#".repeat(n)
                } else {
                    format!("#{}#", ".".repeat(n - 2))
                }
            })
            .collect();
        let doc = serde_json::json!({
            "grid": { "resolution": 0.2, "width": n, "height": n, "rows": rows },
            "rooms": [ { "id": "room", "polygon": [[0.2, 0.2], [7.8, 0.2], [7.8, 7.8], [0.2, 7.8]] } ],
            "furniture": furniture,
            "objects": objects,
            "robot": { "x": 2.0, "y": 2.0, "yaw": 0.0 },
            "user": { "room": "room" }
        });
        let doc: ScenarioDoc = serde_json::from_value(doc).unwrap();
        build_world(doc).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn empty_room_yields_floor_and_wall_only() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let cloud = sense_semantic(
            &world,
            Pose2::new(2.0, 2.0, 0.0),
            &PerceptionNoise::default(),
            &mut rng(),
        )
        .unwrap();
        assert!(!cloud.points.is_empty());
        assert!(cloud
            .points
            .iter()
            .all(|p| p.label == SemanticLabel::Floor || p.label == SemanticLabel::Wall));
        assert!(cloud.points.iter().any(|p| p.label == SemanticLabel::Floor));
    }

    #[test]
    fn table_in_view_yields_table_points() {
        let world = room_with(
            serde_json::json!([{
                "id": "t", "class": "table",
                "footprint": [[3.0, 1.5], [5.0, 1.5], [5.0, 2.5], [3.0, 2.5]],
                "surface_height": 0.75, "room": "room"
            }]),
            serde_json::json!([]),
        );
        let cloud = sense_semantic(
            &world,
            Pose2::new(2.0, 2.0, 0.0),
            &PerceptionNoise::default(),
            &mut rng(),
        )
        .unwrap();
        let table_pts: Vec<_> = cloud
            .points
            .iter()
            .filter(|p| p.label == SemanticLabel::Table)
            .collect();
        assert!(table_pts.len() > 50, "got {}", table_pts.len());
        assert!(table_pts.iter().all(|p| (p.z - 0.75).abs() < 1e-9));
    }

    #[test]
    fn all_points_respect_fov_and_range() {
        let world = room_with(
            serde_json::json!([{
                "id": "t", "class": "table",
                "footprint": [[3.0, 1.5], [5.0, 1.5], [5.0, 2.5], [3.0, 2.5]],
                "surface_height": 0.75, "room": "room"
            }]),
            serde_json::json!([]),
        );
        let pose = Pose2::new(2.0, 2.0, 0.7);
        let cloud =
            sense_semantic(&world, pose, &PerceptionNoise::default(), &mut rng()).unwrap();
        let cam = &world.agent.camera;
        for p in &cloud.points {
            assert!(in_sector(
                pose.position(),
                pose.yaw,
                cam.fov_horizontal,
                cam.max_range,
                Point2::new(p.x, p.y)
            ));
            assert!(p.z >= 0.0);
        }
    }

    #[test]
    fn full_flip_rate_leaves_no_true_label() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let noise = PerceptionNoise {
            label_flip_rate: 1.0,
            ..PerceptionNoise::default()
        };
        let pose = Pose2::new(2.0, 2.0, 0.0);
        let clean =
            sense_semantic(&world, pose, &PerceptionNoise::default(), &mut rng()).unwrap();
        let flipped = sense_semantic(&world, pose, &noise, &mut rng()).unwrap();
        assert_eq!(clean.points.len(), flipped.points.len());
        for (a, b) in clean.points.iter().zip(flipped.points.iter()) {
            assert_ne!(a.label, b.label);
        }
    }

    #[test]
    fn zero_noise_is_deterministic_without_rng_draws() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let pose = Pose2::new(2.0, 2.0, 1.0);
        let a = sense_semantic(&world, pose, &PerceptionNoise::default(), &mut rng()).unwrap();
        let b = sense_semantic(
            &world,
            pose,
            &PerceptionNoise::default(),
            &mut ChaCha8Rng::seed_from_u64(999),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn occupied_sensor_pose_is_rejected() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let err = sense_semantic(
            &world,
            Pose2::new(0.1, 0.1, 0.0),
            &PerceptionNoise::default(),
            &mut rng(),
        )
        .unwrap_err();
        assert_eq!(err, PerceptError::SensorPoseOccupied);
    }

    #[test]
    fn rotation_scan_default_yields_12_clouds() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let clouds = rotation_scan(
            &world,
            Pose2::new(4.0, 4.0, 0.3),
            &PerceptionNoise::default(),
            30.0,
            360.0,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(clouds.len(), 12);
        // Headings are start + k*30 degrees ccw.
        let h1 = clouds[1].sensor_pose.yaw;
        assert!((wrap_angle(h1 - 0.3 - 30.0_f64.to_radians())).abs() < 1e-9);
    }

    #[test]
    fn rotation_scan_step_90_yields_4_clouds() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let clouds = rotation_scan(
            &world,
            Pose2::new(4.0, 4.0, 0.0),
            &PerceptionNoise::default(),
            90.0,
            360.0,
            &mut rng(),
        )
        .unwrap();
        assert_eq!(clouds.len(), 4);
    }

    #[test]
    fn recognition_with_perfect_sensing() {
        let world = room_with(
            serde_json::json!([{
                "id": "t", "class": "table",
                "footprint": [[3.0, 1.5], [5.0, 1.5], [5.0, 2.5], [3.0, 2.5]],
                "surface_height": 0.75, "room": "room"
            }]),
            serde_json::json!([{ "id": "o", "name": "wallet", "x": 3.5, "y": 2.0, "on": "t" }]),
        );
        let res = recognize_objects(
            &world,
            Pose2::new(2.0, 2.0, 0.0),
            "wallet",
            &PerceptionNoise::default(),
            &mut rng(),
        );
        assert_eq!(res.detections.len(), 1);
        assert_eq!(res.detections[0].name, "wallet");
        assert!(res.detections[0].true_positive);
    }

    #[test]
    fn empty_view_with_no_fp_is_empty() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let res = recognize_objects(
            &world,
            Pose2::new(2.0, 2.0, 0.0),
            "wallet",
            &PerceptionNoise::default(),
            &mut rng(),
        );
        assert!(res.detections.is_empty());
    }

    #[test]
    fn forced_false_positive_in_empty_view() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let noise = PerceptionNoise {
            p_false_positive: 1.0,
            ..PerceptionNoise::default()
        };
        let res = recognize_objects(&world, Pose2::new(2.0, 2.0, 0.0), "handbag", &noise, &mut rng());
        assert_eq!(res.detections.len(), 1);
        assert_eq!(res.detections[0].name, "handbag");
        assert!(!res.detections[0].true_positive);
        // Hallucinated pose still lies within sensing range.
        let d = Point2::new(res.detections[0].pose.x, res.detections[0].pose.y)
            .dist(Point2::new(2.0, 2.0));
        assert!(d <= world.agent.camera.max_range);
    }

    #[test]
    fn user_detection_cases() {
        let world = room_with(serde_json::json!([]), serde_json::json!([]));
        let mut r = rng();
        assert!(detect_user(&world, "room", &PerceptionNoise::default(), &mut r));
        assert!(!detect_user(&world, "elsewhere", &PerceptionNoise::default(), &mut r));
    }

    #[test]
    fn per_object_probability_overrides_global() {
        let world = room_with(
            serde_json::json!([{
                "id": "t", "class": "table",
                "footprint": [[3.0, 1.5], [5.0, 1.5], [5.0, 2.5], [3.0, 2.5]],
                "surface_height": 0.75, "room": "room"
            }]),
            serde_json::json!([{ "id": "o", "name": "handbag", "x": 3.5, "y": 2.0, "on": "t" }]),
        );
        let noise = PerceptionNoise {
            per_object_true_positive: [("handbag".to_string(), 0.0)].into_iter().collect(),
            ..PerceptionNoise::default()
        };
        let res = recognize_objects(&world, Pose2::new(2.0, 2.0, 0.0), "handbag", &noise, &mut rng());
        assert!(res.detections.is_empty());
    }
}
