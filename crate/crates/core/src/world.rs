//! Ground-truth world model: occupancy grid, virtual room polygons,
//! furniture with elevated surfaces, scene objects, robot and user state.
//!
//! The model is loaded from a scenario document (JSON) and fully validated;
//! after loading it is immutable. Furniture footprints are rasterized into
//! the grid at load time, so "occupied" means walls *and* furniture for both
//! path planning and the search-position filters.
//!
//! Scenario grid rows are written top-down like a picture: `rows[0]` is the
//! row with the highest y. Characters: `#` occupied, `.` free, `?` unknown.
//! Cell `(col, row)` covers `[col*res, (col+1)*res) x [row*res, (row+1)*res)`
//! in metres, with row 0 at y = 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point2, Polygon, Pose2, Rect};

/// Occupancy state of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Occupied,
    Unknown,
}

/// Errors from scenario loading.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invariant violated by {entity}: {invariant}")]
    Invariant { entity: String, invariant: String },
}

impl ScenarioError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    fn invariant(entity: impl Into<String>, invariant: impl Into<String>) -> Self {
        ScenarioError::Invariant {
            entity: entity.into(),
            invariant: invariant.into(),
        }
    }
}

/// 2D occupancy grid at fixed resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(resolution: f64, width: usize, height: usize, cells: Vec<Cell>) -> Self {
        assert_eq!(cells.len(), width * height);
        OccupancyGrid {
            resolution,
            width,
            height,
            cells,
        }
    }

    /// Grid fully free, for synthetic scenes.
    pub fn empty(resolution: f64, width: usize, height: usize) -> Self {
        Self::new(resolution, width, height, vec![Cell::Free; width * height])
    }

    pub fn cell(&self, col: usize, row: usize) -> Cell {
        self.cells[row * self.width + col]
    }

    pub fn set_cell(&mut self, col: usize, row: usize, cell: Cell) {
        self.cells[row * self.width + col] = cell;
    }

    /// Cell containing a metric point, if inside the grid.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let col = (p.x / self.resolution).floor() as usize;
        let row = (p.y / self.resolution).floor() as usize;
        if col >= self.width || row >= self.height {
            return None;
        }
        Some((col, row))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2 {
        Point2::new(
            (col as f64 + 0.5) * self.resolution,
            (row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_rect(&self, col: usize, row: usize) -> Rect {
        Rect {
            min: Point2::new(col as f64 * self.resolution, row as f64 * self.resolution),
            max: Point2::new(
                (col + 1) as f64 * self.resolution,
                (row + 1) as f64 * self.resolution,
            ),
        }
    }

    pub fn is_free_cell(&self, col: usize, row: usize) -> bool {
        self.cell(col, row) == Cell::Free
    }

    /// Metric extent of the map.
    pub fn size_m(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    pub fn diagonal_m(&self) -> f64 {
        let (w, h) = self.size_m();
        w.hypot(h)
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, Cell)> + '_ {
        (0..self.height)
            .flat_map(move |row| (0..self.width).map(move |col| (col, row, self.cell(col, row))))
    }
}

/// A virtual room: a simple polygon annotated on the map.
#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub id: String,
    pub polygon: Polygon,
}

/// Furniture classes distinguished by the perception label mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FurnitureClass {
    Table,
    Shelf,
    Cabinet,
    Nightstand,
    Windowsill,
    Other,
}

/// A piece of furniture with one elevated horizontal surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Furniture {
    pub id: String,
    pub class: FurnitureClass,
    pub footprint: Polygon,
    pub surface_height: f64,
    pub room_id: String,
}

/// An object that can be searched for.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub supporting_furniture: Option<String>,
}

impl SceneObject {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Camera geometry of the robot's head sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub mount_height: f64,
    /// Full horizontal field of view, radians.
    pub fov_horizontal: f64,
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            mount_height: 1.24,
            fov_horizontal: 58.0_f64.to_radians(),
            max_range: 4.0,
        }
    }
}

/// Robot pose and camera.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub robot_pose: Pose2,
    pub camera: CameraModel,
}

/// Where the user actually is and where they were last seen.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub room: String,
    pub last_seen_room: String,
}

/// A manually annotated search position from the scenario document.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub id: String,
    pub pose: Pose2,
}

/// The fully validated, immutable world.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    pub grid: OccupancyGrid,
    pub rooms: Vec<Room>,
    pub furniture: Vec<Furniture>,
    pub objects: Vec<SceneObject>,
    pub agent: AgentState,
    pub user: UserState,
    pub annotations: Vec<Annotation>,
    /// Cell index -> furniture indices whose footprint covers the cell.
    furniture_cells: BTreeMap<usize, Vec<usize>>,
}

impl WorldModel {
    pub fn room(&self, id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    pub fn furniture_by_id(&self, id: &str) -> Option<&Furniture> {
        self.furniture.iter().find(|f| f.id == id)
    }

    pub fn object_by_name(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// Which furniture footprints cover the given cell.
    pub fn furniture_at_cell(&self, col: usize, row: usize) -> &[usize] {
        self.furniture_cells
            .get(&(row * self.grid.width + col))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Containing room of a metric point, or none. Boundary points resolve by
/// the even-odd rule with epsilon [`crate::geom::BOUNDARY_EPS`].
pub fn room_of(point: Point2, world: &WorldModel) -> Option<&str> {
    world
        .rooms
        .iter()
        .find(|r| r.polygon.contains(point))
        .map(|r| r.id.as_str())
}

/// True iff the containing cell is Occupied or Unknown, or the point is
/// outside the known map.
pub fn is_occupied(point: Point2, world: &WorldModel) -> bool {
    match world.grid.cell_of(point) {
        None => true,
        Some((col, row)) => world.grid.cell(col, row) != Cell::Free,
    }
}

// ---------------------------------------------------------------------------
// Scenario document
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub grid: GridDoc,
    pub rooms: Vec<RoomDoc>,
    #[serde(default)]
    pub furniture: Vec<FurnitureDoc>,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    pub robot: RobotDoc,
    pub user: UserDoc,
    #[serde(default)]
    pub annotations: Vec<AnnotationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridDoc {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// Top-down rows of `#` (occupied), `.` (free), `?` (unknown).
    pub rows: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoomDoc {
    pub id: String,
    pub polygon: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FurnitureDoc {
    pub id: String,
    pub class: FurnitureClass,
    pub footprint: Vec<[f64; 2]>,
    pub surface_height: f64,
    pub room: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub id: String,
    pub name: String,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default)]
    pub yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RobotDoc {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    #[serde(default)]
    pub camera: Option<CameraDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CameraDoc {
    #[serde(default = "default_mount_height")]
    pub mount_height: f64,
    #[serde(default = "default_fov_deg")]
    pub fov_deg: f64,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
}

fn default_mount_height() -> f64 {
    1.24
}
fn default_fov_deg() -> f64 {
    58.0
}
fn default_max_range() -> f64 {
    4.0
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UserDoc {
    pub room: String,
    #[serde(default)]
    pub last_seen_room: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationDoc {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Parse and validate a scenario document.
pub fn load_scenario(document: &str) -> Result<WorldModel, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(document).map_err(|e| {
        ScenarioError::schema(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    build_world(doc)
}

/// Validate an already-parsed scenario document.
pub fn build_world(doc: ScenarioDoc) -> Result<WorldModel, ScenarioError> {
    if doc.grid.resolution <= 0.0 || !doc.grid.resolution.is_finite() {
        return Err(ScenarioError::schema("grid.resolution", "must be > 0"));
    }
    if doc.grid.rows.len() != doc.grid.height {
        return Err(ScenarioError::schema(
            "grid.rows",
            format!("expected {} rows, got {}", doc.grid.height, doc.grid.rows.len()),
        ));
    }
    let mut cells = vec![Cell::Unknown; doc.grid.width * doc.grid.height];
    for (i, row_str) in doc.grid.rows.iter().enumerate() {
        if row_str.chars().count() != doc.grid.width {
            return Err(ScenarioError::schema(
                format!("grid.rows[{i}]"),
                format!(
                    "expected {} chars, got {}",
                    doc.grid.width,
                    row_str.chars().count()
                ),
            ));
        }
        // rows[0] is the top of the map.
        let row = doc.grid.height - 1 - i;
        for (col, ch) in row_str.chars().enumerate() {
            cells[row * doc.grid.width + col] = match ch {
                '#' => Cell::Occupied,
                '.' => Cell::Free,
                '?' => Cell::Unknown,
                other => {
                    return Err(ScenarioError::schema(
                        format!("grid.rows[{i}][{col}]"),
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
        }
    }
    let mut grid = OccupancyGrid::new(doc.grid.resolution, doc.grid.width, doc.grid.height, cells);

    // Rooms.
    let mut rooms: Vec<Room> = Vec::new();
    for (i, r) in doc.rooms.iter().enumerate() {
        if r.polygon.len() < 3 {
            return Err(ScenarioError::schema(
                format!("rooms[{i}].polygon"),
                "needs at least 3 vertices",
            ));
        }
        let polygon = Polygon::new(r.polygon.iter().map(|&[x, y]| Point2::new(x, y)).collect());
        if !polygon.is_simple() {
            return Err(ScenarioError::invariant(
                format!("room `{}`", r.id),
                "polygon must be simple (non-self-intersecting)",
            ));
        }
        if rooms.iter().any(|existing| existing.id == r.id) {
            return Err(ScenarioError::invariant(
                format!("room `{}`", r.id),
                "duplicate room id",
            ));
        }
        rooms.push(Room {
            id: r.id.clone(),
            polygon,
        });
    }
    for i in 0..rooms.len() {
        for j in (i + 1)..rooms.len() {
            if rooms[i].polygon.overlaps(&rooms[j].polygon) {
                return Err(ScenarioError::invariant(
                    format!("rooms `{}` and `{}`", rooms[i].id, rooms[j].id),
                    "room polygons must not overlap",
                ));
            }
        }
    }

    // Furniture: validate and rasterize.
    let mut furniture: Vec<Furniture> = Vec::new();
    let mut furniture_cells: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, f) in doc.furniture.iter().enumerate() {
        if f.footprint.len() < 3 {
            return Err(ScenarioError::schema(
                format!("furniture[{i}].footprint"),
                "needs at least 3 vertices",
            ));
        }
        if f.surface_height < 0.0 || !f.surface_height.is_finite() {
            return Err(ScenarioError::invariant(
                format!("furniture `{}`", f.id),
                "surface_height must be >= 0",
            ));
        }
        let footprint = Polygon::new(f.footprint.iter().map(|&[x, y]| Point2::new(x, y)).collect());
        if !footprint.is_simple() {
            return Err(ScenarioError::invariant(
                format!("furniture `{}`", f.id),
                "footprint must be a simple polygon",
            ));
        }
        let room = rooms.iter().find(|r| r.id == f.room).ok_or_else(|| {
            ScenarioError::schema(
                format!("furniture[{i}].room"),
                format!("unknown room `{}`", f.room),
            )
        })?;
        if !footprint.vertices.iter().all(|&v| room.polygon.contains(v)) {
            return Err(ScenarioError::invariant(
                format!("furniture `{}`", f.id),
                format!("footprint must lie inside room `{}`", f.room),
            ));
        }
        if furniture.iter().any(|existing| existing.id == f.id) {
            return Err(ScenarioError::invariant(
                format!("furniture `{}`", f.id),
                "duplicate furniture id",
            ));
        }
        furniture.push(Furniture {
            id: f.id.clone(),
            class: f.class,
            footprint,
            surface_height: f.surface_height,
            room_id: f.room.clone(),
        });
    }
    for (idx, f) in furniture.iter().enumerate() {
        let (min, max) = f.footprint.bounding_box();
        let c0 = ((min.x / grid.resolution).floor().max(0.0)) as usize;
        let r0 = ((min.y / grid.resolution).floor().max(0.0)) as usize;
        let c1 = (((max.x / grid.resolution).ceil()) as usize + 1).min(grid.width);
        let r1 = (((max.y / grid.resolution).ceil()) as usize + 1).min(grid.height);
        for row in r0..r1 {
            for col in c0..c1 {
                if grid.cell_rect(col, row).intersects_polygon(&f.footprint) {
                    grid.set_cell(col, row, Cell::Occupied);
                    furniture_cells
                        .entry(row * grid.width + col)
                        .or_default()
                        .push(idx);
                }
            }
        }
    }

    if !grid.iter_cells().any(|(_, _, c)| c == Cell::Free) {
        return Err(ScenarioError::invariant("grid", "needs at least one Free cell"));
    }

    // Every Free cell belongs to at most one room; non-overlap above makes
    // violations rare, this catches boundary-epsilon cases on cell centers.
    for (col, row, cell) in grid.iter_cells() {
        if cell != Cell::Free {
            continue;
        }
        let center = grid.cell_center(col, row);
        let n = rooms.iter().filter(|r| r.polygon.contains(center)).count();
        if n > 1 {
            return Err(ScenarioError::invariant(
                format!("cell ({col},{row})"),
                "free cell center inside more than one room",
            ));
        }
    }

    // Objects.
    let mut objects: Vec<SceneObject> = Vec::new();
    for (i, o) in doc.objects.iter().enumerate() {
        let (z, supporting) = match &o.on {
            Some(furn_id) => {
                let f = furniture.iter().find(|f| &f.id == furn_id).ok_or_else(|| {
                    ScenarioError::schema(
                        format!("objects[{i}].on"),
                        format!("unknown furniture `{furn_id}`"),
                    )
                })?;
                if !f.footprint.contains(Point2::new(o.x, o.y)) {
                    return Err(ScenarioError::invariant(
                        format!("object `{}`", o.id),
                        format!("(x, y) must lie inside footprint of `{furn_id}`"),
                    ));
                }
                let z = o.z.unwrap_or(f.surface_height);
                if (z - f.surface_height).abs() > 1e-9 {
                    return Err(ScenarioError::invariant(
                        format!("object `{}`", o.id),
                        format!("z must equal surface height of `{furn_id}`"),
                    ));
                }
                (z, Some(furn_id.clone()))
            }
            None => (o.z.unwrap_or(0.0), None),
        };
        if objects.iter().any(|existing| existing.id == o.id) {
            return Err(ScenarioError::invariant(
                format!("object `{}`", o.id),
                "duplicate object id",
            ));
        }
        objects.push(SceneObject {
            id: o.id.clone(),
            name: o.name.clone(),
            x: o.x,
            y: o.y,
            z,
            yaw: o.yaw,
            supporting_furniture: supporting,
        });
    }

    // Robot.
    let robot_pose = Pose2::new(doc.robot.x, doc.robot.y, doc.robot.yaw);
    let on_free = grid
        .cell_of(robot_pose.position())
        .map(|(c, r)| grid.is_free_cell(c, r))
        .unwrap_or(false);
    if !on_free {
        return Err(ScenarioError::invariant(
            "robot",
            "robot pose must be on a Free cell",
        ));
    }
    let camera = match &doc.robot.camera {
        Some(c) => CameraModel {
            mount_height: c.mount_height,
            fov_horizontal: c.fov_deg.to_radians(),
            max_range: c.max_range,
        },
        None => CameraModel::default(),
    };

    // User.
    if !rooms.iter().any(|r| r.id == doc.user.room) {
        return Err(ScenarioError::schema(
            "user.room",
            format!("unknown room `{}`", doc.user.room),
        ));
    }
    let last_seen = doc
        .user
        .last_seen_room
        .clone()
        .unwrap_or_else(|| doc.user.room.clone());
    if !rooms.iter().any(|r| r.id == last_seen) {
        return Err(ScenarioError::schema(
            "user.last_seen_room",
            format!("unknown room `{last_seen}`"),
        ));
    }

    // Annotations are schema-checked here; pose validity against the map is
    // enforced when the manual agenda is built.
    let mut annotations: Vec<Annotation> = Vec::new();
    for a in &doc.annotations {
        annotations.push(Annotation {
            id: a.id.clone(),
            pose: Pose2::new(a.x, a.y, a.yaw),
        });
    }

    Ok(WorldModel {
        grid,
        rooms,
        furniture,
        objects,
        agent: AgentState { robot_pose, camera },
        user: UserState {
            room: doc.user.room.clone(),
            last_seen_room: last_seen,
        },
        annotations,
        furniture_cells,
    })
}

/// Render a world back into an equivalent scenario document.
pub fn to_document(world: &WorldModel) -> ScenarioDoc {
    let mut rows = Vec::with_capacity(world.grid.height);
    for i in 0..world.grid.height {
        let row = world.grid.height - 1 - i;
        let mut s = String::with_capacity(world.grid.width);
        for col in 0..world.grid.width {
            s.push(match world.grid.cell(col, row) {
                Cell::Free => '.',
                Cell::Occupied => '#',
                Cell::Unknown => '?',
            });
        }
        rows.push(s);
    }
    ScenarioDoc {
        grid: GridDoc {
            resolution: world.grid.resolution,
            width: world.grid.width,
            height: world.grid.height,
            rows,
        },
        rooms: world
            .rooms
            .iter()
            .map(|r| RoomDoc {
                id: r.id.clone(),
                polygon: r.polygon.vertices.iter().map(|v| [v.x, v.y]).collect(),
            })
            .collect(),
        furniture: world
            .furniture
            .iter()
            .map(|f| FurnitureDoc {
                id: f.id.clone(),
                class: f.class,
                footprint: f.footprint.vertices.iter().map(|v| [v.x, v.y]).collect(),
                surface_height: f.surface_height,
                room: f.room_id.clone(),
            })
            .collect(),
        objects: world
            .objects
            .iter()
            .map(|o| ObjectDoc {
                id: o.id.clone(),
                name: o.name.clone(),
                x: o.x,
                y: o.y,
                z: Some(o.z),
                yaw: o.yaw,
                on: o.supporting_furniture.clone(),
            })
            .collect(),
        robot: RobotDoc {
            x: world.agent.robot_pose.x,
            y: world.agent.robot_pose.y,
            yaw: world.agent.robot_pose.yaw,
            camera: Some(CameraDoc {
                mount_height: world.agent.camera.mount_height,
                fov_deg: world.agent.camera.fov_horizontal.to_degrees(),
                max_range: world.agent.camera.max_range,
            }),
        },
        user: UserDoc {
            room: world.user.room.clone(),
            last_seen_room: Some(world.user.last_seen_room.clone()),
        },
        annotations: world
            .annotations
            .iter()
            .map(|a| AnnotationDoc {
                id: a.id.clone(),
                x: a.pose.x,
                y: a.pose.y,
                yaw: a.pose.yaw,
            })
            .collect(),
        durations: None,
        noise: None,
    }
}
