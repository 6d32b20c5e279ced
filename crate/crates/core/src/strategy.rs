//! Search-position selection for both strategies.
//!
//! A location's cost is `path_length / bat_normalizer - k1 * prob_term +
//! k2 * penalty`, where the probability term rewards locations the object
//! has been sighted at before and the penalty discourages searching the room
//! the user is in until everything else is exhausted. Unreachable locations
//! have no cost and are skipped.
//!
//! The probability of finding object `x` at location `y` is a
//! Laplace-smoothed sighting count: `(alpha + n_xy) / sum_y' (alpha +
//! n_xy')`, initialized uniform over all registered locations.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Point2, Pose2};
use crate::nav::plan;
use crate::percept::{rotation_scan, PerceptionNoise};
use crate::tablegeom::{
    candidate_positions, extract_table_clusters, filter_positions, HeuristicParams,
    SearchLocation, TableCluster,
};
use crate::world::{is_occupied, room_of, WorldModel};

/// Which implementation produces the agenda.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Manual,
    Generated,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Manual => "manual",
            Strategy::Generated => "generated",
        })
    }
}

/// How the sighting probability enters the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbTransform {
    /// Use the probability itself (the cost subtracts `k1 * P`).
    #[default]
    Identity,
    /// Use `ln P` (the cost subtracts `k1 * ln P`, i.e. adds the surprisal).
    Log,
}

/// Weights of the cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostParams {
    pub k1: f64,
    pub k2: f64,
    pub k_pen: f64,
    /// Path lengths are divided by this, metres.
    pub bat_normalizer: f64,
    pub prob_transform: ProbTransform,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            k1: 1.0,
            k2: 1.0,
            k_pen: 1.0,
            bat_normalizer: 1.0,
            prob_transform: ProbTransform::Identity,
        }
    }
}

impl CostParams {
    /// Defaults with the normalizer set to the map diagonal.
    pub fn defaults_for(world: &WorldModel) -> Self {
        CostParams {
            bat_normalizer: world.grid.diagonal_m(),
            ..CostParams::default()
        }
    }

    pub fn is_valid(&self) -> bool {
        self.k1 >= 0.0 && self.k2 >= 0.0 && self.k_pen > 0.0 && self.bat_normalizer > 0.0
    }
}

/// Laplace-smoothed sighting counts per (object, location).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub alpha: f64,
    counts: BTreeMap<String, BTreeMap<String, u64>>,
    locations: BTreeSet<String>,
}

impl Default for ProbabilityTable {
    fn default() -> Self {
        ProbabilityTable {
            alpha: 0.5,
            counts: BTreeMap::new(),
            locations: BTreeSet::new(),
        }
    }
}

impl ProbabilityTable {
    /// Uniform distribution across the given search locations.
    pub fn uniform(alpha: f64, locations: impl IntoIterator<Item = String>) -> Self {
        assert!(alpha > 0.0, "Laplace prior must be positive");
        ProbabilityTable {
            alpha,
            counts: BTreeMap::new(),
            locations: locations.into_iter().collect(),
        }
    }

    pub fn register_locations<'a>(&mut self, ids: impl IntoIterator<Item = &'a str>) {
        self.locations.extend(ids.into_iter().map(String::from));
    }

    pub fn count(&self, object: &str, location: &str) -> u64 {
        self.counts
            .get(object)
            .and_then(|m| m.get(location))
            .copied()
            .unwrap_or(0)
    }

    pub fn record_sighting(&mut self, object: &str, location: &str) {
        self.locations.insert(location.to_string());
        *self
            .counts
            .entry(object.to_string())
            .or_default()
            .entry(location.to_string())
            .or_default() += 1;
    }

    /// `P(object at location)` over the registered location set. Sums to 1
    /// per object by construction.
    pub fn probability(&self, object: &str, location: &str) -> f64 {
        let mut domain = self.locations.clone();
        domain.insert(location.to_string());
        let denom: f64 = domain
            .iter()
            .map(|loc| self.alpha + self.count(object, loc) as f64)
            .sum();
        (self.alpha + self.count(object, location) as f64) / denom
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("probability table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// The ordered set of positions still to visit plus the visit history.
#[derive(Debug, Clone)]
pub struct SearchAgenda {
    pub remaining: Vec<SearchLocation>,
    pub visited: Vec<SearchLocation>,
    pub strategy: Strategy,
}

impl SearchAgenda {
    pub fn is_exhausted(&self) -> bool {
        self.remaining.is_empty()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("invalid annotation `{id}`: {reason}")]
    InvalidAnnotation { id: String, reason: String },
    #[error("room `{0}` is unreachable from the robot's pose")]
    RoomUnreachable(String),
    #[error("room `{0}` has no free cell to scan from")]
    NoScanPose(String),
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
}

/// Cost of searching `object` at `location` from `robot_pose`, or `None`
/// when no path exists.
pub fn cost(
    object: &str,
    location: &SearchLocation,
    robot_pose: Pose2,
    user_room: &str,
    table: &ProbabilityTable,
    params: &CostParams,
    world: &WorldModel,
) -> Option<f64> {
    let path = plan(robot_pose.position(), location.position(), world).ok()??;
    let c_bat = path.length / params.bat_normalizer;
    let p = table.probability(object, &location.id);
    let prob_term = match params.prob_transform {
        ProbTransform::Identity => p,
        ProbTransform::Log => p.ln(),
    };
    let c_pen = if location.room_id.as_deref() == Some(user_room) {
        params.k_pen
    } else {
        0.0
    };
    Some(c_bat - params.k1 * prob_term + params.k2 * c_pen)
}

/// Pop the cheapest reachable location off the agenda. Ties break by
/// location id; `None` when the agenda is empty or nothing is reachable.
pub fn next_location(
    agenda: &mut SearchAgenda,
    object: &str,
    robot_pose: Pose2,
    user_room: &str,
    table: &ProbabilityTable,
    params: &CostParams,
    world: &WorldModel,
) -> Option<SearchLocation> {
    let mut best: Option<(f64, usize)> = None;
    for (i, loc) in agenda.remaining.iter().enumerate() {
        let Some(c) = cost(object, loc, robot_pose, user_room, table, params, world) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((bc, bi)) => {
                c < bc || (c == bc && loc.id < agenda.remaining[bi].id)
            }
        };
        if better {
            best = Some((c, i));
        }
    }
    let (_, idx) = best?;
    let chosen = agenda.remaining.remove(idx);
    agenda.visited.push(chosen.clone());
    Some(chosen)
}

/// Fold recognition sightings into the table: each sighting increments the
/// count of the nearest search location.
pub fn update_probabilities(
    table: &mut ProbabilityTable,
    sightings: &[(String, Point2)],
    locations: &[SearchLocation],
) {
    if locations.is_empty() {
        return;
    }
    table.register_locations(locations.iter().map(|l| l.id.as_str()));
    for (object, pose) in sightings {
        let nearest = locations
            .iter()
            .min_by(|a, b| {
                a.position()
                    .dist(*pose)
                    .total_cmp(&b.position().dist(*pose))
                    .then_with(|| a.id.cmp(&b.id))
            })
            .expect("locations non-empty");
        table.record_sighting(object, &nearest.id);
    }
}

/// Convert the scenario's annotations into manual search locations.
pub fn manual_locations(world: &WorldModel) -> Vec<SearchLocation> {
    world
        .annotations
        .iter()
        .map(|a| {
            SearchLocation::manual(
                a.id.clone(),
                a.pose,
                room_of(a.pose.position(), world).map(String::from),
            )
        })
        .collect()
}

/// Agenda over manually annotated positions. Fails fast on ids that clash
/// and poses that are occupied or outside the map.
pub fn build_agenda_manual(
    world: &WorldModel,
    annotations: &[SearchLocation],
) -> Result<SearchAgenda, StrategyError> {
    let mut seen = BTreeSet::new();
    for ann in annotations {
        if ann.id.is_empty() {
            return Err(StrategyError::InvalidAnnotation {
                id: ann.id.clone(),
                reason: "empty id".to_string(),
            });
        }
        if !seen.insert(ann.id.clone()) {
            return Err(StrategyError::InvalidAnnotation {
                id: ann.id.clone(),
                reason: "duplicate id".to_string(),
            });
        }
        if world.grid.cell_of(ann.position()).is_none() {
            return Err(StrategyError::InvalidAnnotation {
                id: ann.id.clone(),
                reason: "outside the map".to_string(),
            });
        }
        if is_occupied(ann.position(), world) {
            return Err(StrategyError::InvalidAnnotation {
                id: ann.id.clone(),
                reason: "on an occupied cell".to_string(),
            });
        }
        if ann.room_id.is_none() {
            return Err(StrategyError::InvalidAnnotation {
                id: ann.id.clone(),
                reason: "not inside any room".to_string(),
            });
        }
    }
    Ok(SearchAgenda {
        remaining: annotations.to_vec(),
        visited: Vec::new(),
        strategy: Strategy::Manual,
    })
}

/// The designated scan pose of a room: the polygon centroid snapped to the
/// nearest Free cell centre inside the room, ties broken by (row, col).
pub fn room_center(world: &WorldModel, room_id: &str) -> Result<Pose2, StrategyError> {
    let room = world
        .room(room_id)
        .ok_or_else(|| StrategyError::UnknownRoom(room_id.to_string()))?;
    let centroid = room.polygon.centroid();
    let mut best: Option<(f64, usize, usize)> = None;
    for (col, row, _) in world.grid.iter_cells() {
        if !world.grid.is_free_cell(col, row) {
            continue;
        }
        let center = world.grid.cell_center(col, row);
        if !room.polygon.contains(center) {
            continue;
        }
        let d = center.dist(centroid);
        let candidate = (d, row, col);
        if best.map_or(true, |b| candidate < b) {
            best = Some(candidate);
        }
    }
    let (_, row, col) = best.ok_or_else(|| StrategyError::NoScanPose(room_id.to_string()))?;
    let p = world.grid.cell_center(col, row);
    Ok(Pose2::new(p.x, p.y, 0.0))
}

/// Everything one on-the-fly generation pass produces, kept for reporting
/// and debugging.
#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub room_id: String,
    pub center: Pose2,
    pub clusters: Vec<TableCluster>,
    /// Placement output before filtering; always `2 * clusters.len()`.
    pub candidates: Vec<SearchLocation>,
    /// After the map and same-room filters.
    pub accepted: Vec<SearchLocation>,
}

/// The cluster-extraction / placement / filtering tail of the generation
/// pipeline, applied to already-collected scan clouds.
pub fn positions_from_clouds(
    world: &WorldModel,
    room_id: &str,
    center: Pose2,
    clouds: &[crate::percept::LabeledCloud],
    hparams: &HeuristicParams,
) -> GenerationOutcome {
    let clusters = extract_table_clusters(clouds, hparams);
    let mut candidates = candidate_positions(&clusters, hparams, world);
    for loc in &mut candidates {
        loc.id = format!("{room_id}-{}", loc.id);
    }
    let accepted = filter_positions(candidates.clone(), room_id, world);
    GenerationOutcome {
        room_id: room_id.to_string(),
        center,
        clusters,
        candidates,
        accepted,
    }
}

/// Run the generation pipeline for one room: rotation scan at the room
/// centre, cluster extraction, placement, filtering. Pure given the rng.
pub fn generate_positions(
    world: &WorldModel,
    room_id: &str,
    hparams: &HeuristicParams,
    noise: &PerceptionNoise,
    rng: &mut impl Rng,
) -> Result<GenerationOutcome, StrategyError> {
    let center = room_center(world, room_id)?;
    let clouds = rotation_scan(world, center, noise, 30.0, 360.0, rng)
        .map_err(|_| StrategyError::NoScanPose(room_id.to_string()))?;
    Ok(positions_from_clouds(world, room_id, center, &clouds, hparams))
}

/// Agenda over generated positions for one room. Requires the room's scan
/// pose to be reachable from `robot_pose`; the caller charges simulated time
/// for the travel and the scan.
pub fn build_agenda_generated(
    world: &WorldModel,
    room_id: &str,
    robot_pose: Pose2,
    hparams: &HeuristicParams,
    noise: &PerceptionNoise,
    rng: &mut impl Rng,
) -> Result<SearchAgenda, StrategyError> {
    let center = room_center(world, room_id)?;
    let reachable = plan(robot_pose.position(), center.position(), world)
        .ok()
        .flatten()
        .is_some();
    if !reachable {
        return Err(StrategyError::RoomUnreachable(room_id.to_string()));
    }
    let outcome = generate_positions(world, room_id, hparams, noise, rng)?;
    Ok(SearchAgenda {
        remaining: outcome.accepted,
        visited: Vec::new(),
        strategy: Strategy::Generated,
    })
}
