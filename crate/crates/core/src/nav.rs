//! Grid path planning and the simulated duration model.
//!
//! Paths are shortest 8-connected routes over Free cells with `sqrt(2)`
//! diagonal cost and no corner-cutting through diagonally adjacent
//! obstacles. Expansion order ties break lexicographically by (row, col) so
//! replays are deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point2;
use crate::world::WorldModel;

/// A planned route: 8-adjacent Free cell centres and the summed step length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Point2>,
    pub length: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum NavError {
    #[error("start pose is not on a Free cell")]
    StartOccupied,
}

/// Simulated durations of the robot's activities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DurationModel {
    /// m/s
    pub translate_speed: f64,
    /// rad/s
    pub rotate_speed: f64,
    /// Seconds per semantic segmentation call.
    pub segmentation_time: f64,
    /// Seconds per 30-degree rotation step including cloud acquisition.
    pub rotate_step_time: f64,
    /// Seconds per object recognition attempt.
    pub recognition_time: f64,
    /// Seconds per grasp attempt.
    pub grasp_time: f64,
}

impl Default for DurationModel {
    fn default() -> Self {
        DurationModel {
            translate_speed: 0.2,
            rotate_speed: 0.5,
            segmentation_time: 5.0,
            rotate_step_time: 4.0,
            recognition_time: 30.0,
            grasp_time: 20.0,
        }
    }
}

impl DurationModel {
    pub fn is_valid(&self) -> bool {
        [
            self.translate_speed,
            self.rotate_speed,
            self.segmentation_time,
            self.rotate_step_time,
            self.recognition_time,
            self.grasp_time,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Heap entry ordered by (cost, row, col); BinaryHeap is a max-heap so the
/// comparison is reversed.
#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    row: usize,
    col: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then(other.row.cmp(&self.row))
            .then(other.col.cmp(&self.col))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path between two metric points, or `None` when the goal is
/// unreachable (including a goal on an occupied or out-of-map cell).
pub fn plan(start: Point2, goal: Point2, world: &WorldModel) -> Result<Option<Path>, NavError> {
    let grid = &world.grid;
    let (sc, sr) = match grid.cell_of(start) {
        Some(c) => c,
        None => return Err(NavError::StartOccupied),
    };
    if !grid.is_free_cell(sc, sr) {
        return Err(NavError::StartOccupied);
    }
    let (gc, gr) = match grid.cell_of(goal) {
        Some(c) => c,
        None => return Ok(None),
    };
    if !grid.is_free_cell(gc, gr) {
        return Ok(None);
    }
    if (sc, sr) == (gc, gr) {
        return Ok(Some(Path {
            waypoints: vec![grid.cell_center(sc, sr)],
            length: 0.0,
        }));
    }

    let w = grid.width;
    let idx = |col: usize, row: usize| row * w + col;
    let mut dist = vec![f64::INFINITY; w * grid.height];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; w * grid.height];
    let mut done = vec![false; w * grid.height];
    let mut heap = BinaryHeap::new();
    dist[idx(sc, sr)] = 0.0;
    heap.push(HeapEntry {
        cost: 0.0,
        row: sr,
        col: sc,
    });

    while let Some(HeapEntry { cost, row, col }) = heap.pop() {
        if done[idx(col, row)] {
            continue;
        }
        done[idx(col, row)] = true;
        if (col, row) == (gc, gr) {
            break;
        }
        for (dc, dr) in NEIGHBOURS {
            let nc = col as isize + dc;
            let nr = row as isize + dr;
            if nc < 0 || nr < 0 || nc as usize >= w || nr as usize >= grid.height {
                continue;
            }
            let (nc, nr) = (nc as usize, nr as usize);
            if !grid.is_free_cell(nc, nr) {
                continue;
            }
            let diagonal = dc != 0 && dr != 0;
            if diagonal {
                // No corner-cutting: both orthogonal neighbours must be Free.
                let side_a = grid.is_free_cell((col as isize + dc) as usize, row);
                let side_b = grid.is_free_cell(col, (row as isize + dr) as usize);
                if !side_a || !side_b {
                    continue;
                }
            }
            let step = if diagonal {
                grid.resolution * SQRT2
            } else {
                grid.resolution
            };
            let next = cost + step;
            if next < dist[idx(nc, nr)] {
                dist[idx(nc, nr)] = next;
                prev[idx(nc, nr)] = Some((col, row));
                heap.push(HeapEntry {
                    cost: next,
                    row: nr,
                    col: nc,
                });
            }
        }
    }

    if !dist[idx(gc, gr)].is_finite() {
        return Ok(None);
    }
    let mut cells = vec![(gc, gr)];
    while let Some(p) = prev[idx(cells.last().unwrap().0, cells.last().unwrap().1)] {
        cells.push(p);
    }
    cells.reverse();
    Ok(Some(Path {
        waypoints: cells
            .iter()
            .map(|&(c, r)| grid.cell_center(c, r))
            .collect(),
        length: dist[idx(gc, gr)],
    }))
}

const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Time to drive a path and turn through `turns` radians in total.
pub fn travel_time(path: &Path, turns: f64, model: &DurationModel) -> f64 {
    path.length / model.translate_speed + turns.abs() / model.rotate_speed
}

/// Duration of a full rotation scan of `steps` rotate+segment pairs.
///
/// Sequential: every step pays both the rotation and the segmentation call.
/// Concurrent: rotation k+1 overlaps segmentation k, so only the slower
/// activity paces the pipeline and the faster one is exposed once at an end
/// of the scan.
pub fn scan_duration(steps: usize, model: &DurationModel, concurrent: bool) -> f64 {
    assert!(steps >= 1, "scan needs at least one step");
    let (rot, seg) = (model.rotate_step_time, model.segmentation_time);
    if !concurrent {
        steps as f64 * (rot + seg)
    } else if seg >= rot {
        rot + steps as f64 * seg
    } else {
        steps as f64 * rot + seg
    }
}

/// The idealized saving claimed for a fully overlapped scan: the entire
/// rotation time disappears behind segmentation. The pipeline model above
/// still exposes the first rotation, so its saving is smaller; both numbers
/// are reported by the experiment harness.
pub fn idealized_full_overlap_saving(steps: usize, model: &DurationModel) -> f64 {
    steps as f64 * model.rotate_step_time.min(model.segmentation_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_world, ScenarioDoc};

    fn open_world(n: usize, res: f64) -> WorldModel {
        let rows: Vec<String> = (0..n).map(|_| ".".repeat(n)).collect();
        let doc = serde_json::json!({
            "grid": { "resolution": res, "width": n, "height": n, "rows": rows },
            "rooms": [ { "id": "r", "polygon": [[0.0, 0.0], [n as f64 * res, 0.0], [n as f64 * res, n as f64 * res], [0.0, n as f64 * res]] } ],
            "robot": { "x": res / 2.0, "y": res / 2.0, "yaw": 0.0 },
            "user": { "room": "r" }
        });
        let doc: ScenarioDoc = serde_json::from_value(doc).unwrap();
        build_world(doc).unwrap()
    }

    #[test]
    fn start_equals_goal() {
        let world = open_world(10, 1.0);
        let p = plan(Point2::new(0.5, 0.5), Point2::new(0.5, 0.5), &world)
            .unwrap()
            .unwrap();
        assert_eq!(p.length, 0.0);
        assert_eq!(p.waypoints.len(), 1);
    }

    #[test]
    fn diagonal_route_length() {
        // (0,0) -> (3,4) on an empty grid at 1 m: 3 diagonal + 1 straight.
        let world = open_world(10, 1.0);
        let p = plan(Point2::new(0.5, 0.5), Point2::new(3.5, 4.5), &world)
            .unwrap()
            .unwrap();
        assert!((p.length - (3.0 * SQRT2 + 1.0)).abs() < 1e-9, "{}", p.length);
    }

    #[test]
    fn enclosed_goal_is_unreachable() {
        let mut rows: Vec<String> = (0..10).map(|_| ".".repeat(10)).collect();
        // Ring of walls around (5,5) (row strings are top-down).
        for r in 3..=5 {
            let row = rows[9 - r].clone();
            let mut chars: Vec<char> = row.chars().collect();
            for c in 4..=6 {
                if r == 4 && c == 5 {
                    continue;
                }
                chars[c] = '#';
            }
            rows[9 - r] = chars.into_iter().collect();
        }
        let doc = serde_json::json!({
            "grid": { "resolution": 1.0, "width": 10, "height": 10, "rows": rows },
            "rooms": [ { "id": "r", "polygon": [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]] } ],
            "robot": { "x": 0.5, "y": 0.5, "yaw": 0.0 },
            "user": { "room": "r" }
        });
        let world = build_world(serde_json::from_value(doc).unwrap()).unwrap();
        let p = plan(Point2::new(0.5, 0.5), Point2::new(5.5, 4.5), &world).unwrap();
        assert!(p.is_none());
    }

    #[test]
    fn start_on_wall_is_an_error() {
        let world = open_world(10, 1.0);
        let err = plan(Point2::new(-5.0, 0.5), Point2::new(0.5, 0.5), &world).unwrap_err();
        assert_eq!(err, NavError::StartOccupied);
    }

    #[test]
    fn travel_time_arithmetic() {
        let model = DurationModel {
            translate_speed: 0.5,
            rotate_speed: std::f64::consts::FRAC_PI_4,
            ..DurationModel::default()
        };
        let path = Path {
            waypoints: vec![],
            length: 5.0,
        };
        let t = travel_time(&path, std::f64::consts::PI, &model);
        assert!((t - 14.0).abs() < 1e-9);
        let zero = Path {
            waypoints: vec![],
            length: 0.0,
        };
        assert_eq!(travel_time(&zero, 0.0, &model), 0.0);
    }

    #[test]
    fn scan_duration_matches_timing_model() {
        let model = DurationModel::default(); // 4 s rotate, 5 s segment
        assert_eq!(scan_duration(12, &model, false), 108.0);
        assert_eq!(scan_duration(12, &model, true), 64.0);
        assert_eq!(idealized_full_overlap_saving(12, &model), 48.0);
        // One step: no overlap to exploit.
        assert_eq!(scan_duration(1, &model, false), scan_duration(1, &model, true));
    }

    #[test]
    fn scan_duration_when_rotation_dominates() {
        let model = DurationModel {
            rotate_step_time: 6.0,
            segmentation_time: 2.0,
            ..DurationModel::default()
        };
        assert_eq!(scan_duration(10, &model, false), 80.0);
        assert_eq!(scan_duration(10, &model, true), 62.0);
    }
}
