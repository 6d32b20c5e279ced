//! From labelled clouds to validated search positions.
//!
//! Table-labelled points inside the height band are merged across the scan's
//! clouds, grouped by single-linkage Euclidean clustering in the
//! ground-plane projection, and each resulting cluster is summarized by its
//! centroid and principal axes. The two candidate search positions of a
//! cluster sit on the second principal axis, one on each side, at a security
//! distance beyond the table edge, facing the centroid. Candidates are then
//! filtered against the map and the current room.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Point2, Pose2, Vec2};
use crate::percept::{LabeledCloud, SemanticLabel, SAMPLE_SPACING};
use crate::world::{is_occupied, room_of, WorldModel};

/// Tuning of the search-position heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicParams {
    /// Accepted surface heights, metres; filters the floor and high shelves.
    pub height_band: (f64, f64),
    /// Single-linkage distance threshold, metres.
    pub cluster_tolerance: f64,
    /// Minimum points per cluster.
    pub min_cluster_points: usize,
    /// Security distance `d` between a pose and the table edge, metres.
    pub security_distance: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            height_band: (0.4, 1.2),
            cluster_tolerance: 0.25,
            min_cluster_points: 30,
            security_distance: 0.4,
        }
    }
}

impl HeuristicParams {
    pub fn is_valid(&self) -> bool {
        self.height_band.0 < self.height_band.1
            && self.height_band.0 > 0.0
            && self.cluster_tolerance > 0.0
            && self.min_cluster_points > 0
            && self.security_distance >= 0.0
    }
}

/// A surface cluster with its ground-plane summary. `axes.0` carries the
/// larger variance; extents are max absolute projections onto each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCluster {
    pub id: usize,
    pub points: Vec<(f64, f64, f64)>,
    pub footprint: Vec<Point2>,
    pub centroid: Point2,
    pub axes: (Vec2, Vec2),
    pub extents: (f64, f64),
}

impl TableCluster {
    /// Radius of the smallest centroid-centred circle containing the
    /// footprint.
    pub fn circumradius(&self) -> f64 {
        self.footprint
            .iter()
            .map(|p| p.dist(self.centroid))
            .fold(0.0, f64::max)
    }
}

/// Where a search position came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocationSource {
    Manual,
    Generated,
}

/// A pose from which object recognition is attempted.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchLocation {
    pub id: String,
    pub pose: Pose2,
    pub room_id: Option<String>,
    pub source: LocationSource,
    pub source_cluster: Option<Arc<TableCluster>>,
}

impl SearchLocation {
    pub fn manual(id: impl Into<String>, pose: Pose2, room_id: Option<String>) -> Self {
        SearchLocation {
            id: id.into(),
            pose,
            room_id,
            source: LocationSource::Manual,
            source_cluster: None,
        }
    }

    pub fn position(&self) -> Point2 {
        self.pose.position()
    }
}

/// Closed-form eigen-decomposition of the 2x2 covariance of `points`.
/// Returns (centroid, (first, second) axes, (larger, smaller) eigenvalues).
///
/// Axis signs are canonical (first axis angle in (-pi/2, pi/2]); when the
/// eigenvalues are within 1% of each other the decomposition is treated as
/// degenerate and the axes snap to the world axes, second axis = world y.
pub fn principal_axes(points: &[Point2]) -> (Point2, (Vec2, Vec2), (f64, f64)) {
    let n = points.len() as f64;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for p in points {
        cx += p.x;
        cy += p.y;
    }
    let centroid = Point2::new(cx / n, cy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let dx = p.x - centroid.x;
        let dy = p.y - centroid.y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    sxx /= n;
    sxy /= n;
    syy /= n;

    let tr = sxx + syy;
    let gap = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let l1 = (tr + gap) / 2.0;
    let l2 = (tr - gap) / 2.0;

    let degenerate = l1 <= 0.0 || (l1 - l2) / l1 < 0.01;
    if degenerate {
        return (
            centroid,
            (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)),
            (l1.max(0.0), l2.max(0.0)),
        );
    }

    // Eigenvector of the larger eigenvalue.
    let mut first = if sxy.abs() > 1e-15 {
        Vec2::new(l1 - syy, sxy).normalized()
    } else if sxx >= syy {
        Vec2::new(1.0, 0.0)
    } else {
        Vec2::new(0.0, 1.0)
    };
    // Canonical sign: angle in (-pi/2, pi/2].
    if first.x < 0.0 || (first.x == 0.0 && first.y < 0.0) {
        first = first.scaled(-1.0);
    }
    let second = first.perp();
    (centroid, (first, second), (l1, l2))
}

/// Filter by label and height band, merge the clouds, cluster by
/// single-linkage distance in the ground plane, and summarize each cluster.
/// Clusters are ordered by their first sampled point; an empty input or no
/// qualifying points yields an empty list.
pub fn extract_table_clusters(
    clouds: &[LabeledCloud],
    params: &HeuristicParams,
) -> Vec<TableCluster> {
    // Merge, keeping only banded table points, de-duplicated on the sample
    // lattice so overlapping scan sectors don't double-weight the PCA.
    let mut seen = std::collections::BTreeSet::new();
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for cloud in clouds {
        for p in &cloud.points {
            if p.label != SemanticLabel::Table {
                continue;
            }
            if p.z < params.height_band.0 || p.z > params.height_band.1 {
                continue;
            }
            let key = (
                (p.x / (SAMPLE_SPACING / 2.0)).round() as i64,
                (p.y / (SAMPLE_SPACING / 2.0)).round() as i64,
                (p.z / (SAMPLE_SPACING / 2.0)).round() as i64,
            );
            if seen.insert(key) {
                pts.push((p.x, p.y, p.z));
            }
        }
    }
    if pts.is_empty() {
        return Vec::new();
    }

    let labels = single_linkage_2d(&pts, params.cluster_tolerance);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, root) in labels.iter().enumerate() {
        groups.entry(*root).or_default().push(i);
    }

    let mut clusters = Vec::new();
    let mut ordered: Vec<Vec<usize>> = groups.into_values().collect();
    ordered.sort_by_key(|g| g[0]);
    for members in ordered {
        if members.len() < params.min_cluster_points {
            continue;
        }
        let footprint: Vec<Point2> = members
            .iter()
            .map(|&i| Point2::new(pts[i].0, pts[i].1))
            .collect();
        let (centroid, axes, _eigs) = principal_axes(&footprint);
        let project = |axis: Vec2| {
            footprint
                .iter()
                .map(|p| (*p - centroid).dot(axis).abs())
                .fold(0.0, f64::max)
        };
        // A cluster of collinear samples still stands for a physical surface
        // at least one sample cell wide.
        let extents = (
            project(axes.0).max(SAMPLE_SPACING / 2.0),
            project(axes.1).max(SAMPLE_SPACING / 2.0),
        );
        clusters.push(TableCluster {
            id: clusters.len(),
            points: members.iter().map(|&i| pts[i]).collect(),
            footprint,
            centroid,
            axes,
            extents,
        });
    }
    clusters
}

/// Union-find single-linkage clustering of the ground-plane projections,
/// bucketed on a grid of the tolerance size so only neighbouring buckets are
/// compared. Returns a root label per point.
fn single_linkage_2d(pts: &[(f64, f64, f64)], tolerance: f64) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    let key = |x: f64, y: f64| ((x / tolerance).floor() as i64, (y / tolerance).floor() as i64);
    for (i, p) in pts.iter().enumerate() {
        buckets.entry(key(p.0, p.1)).or_default().push(i);
    }
    let tol2 = tolerance * tolerance;
    for (&(bx, by), members) in &buckets {
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(neigh) = buckets.get(&(bx + dx, by + dy)) else {
                    continue;
                };
                for &i in members {
                    for &j in neigh {
                        if j <= i {
                            continue;
                        }
                        let ddx = pts[i].0 - pts[j].0;
                        let ddy = pts[i].1 - pts[j].1;
                        if ddx * ddx + ddy * ddy <= tol2 {
                            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                            if ri != rj {
                                // Union towards the smaller root keeps
                                // labels stable under input order.
                                let (lo, hi) = if ri < rj { (ri, rj) } else { (rj, ri) };
                                parent[hi] = lo;
                            }
                        }
                    }
                }
            }
        }
    }
    (0..pts.len()).map(|i| find(&mut parent, i)).collect()
}

/// The two candidate poses of a cluster: `centroid ± second_axis * (extent +
/// d)`, yaw facing the centroid. Both are returned; map/room filtering
/// happens separately.
pub fn place_search_positions(
    cluster: &TableCluster,
    params: &HeuristicParams,
    world: &WorldModel,
) -> Vec<SearchLocation> {
    let cluster_arc = Arc::new(cluster.clone());
    let offset = cluster.axes.1.scaled(cluster.extents.1 + params.security_distance);
    [(1.0, "a"), (-1.0, "b")]
        .iter()
        .map(|&(sign, tag)| {
            let pos = cluster.centroid + offset.scaled(sign);
            let yaw = (cluster.centroid - pos).angle();
            let pose = Pose2::new(pos.x, pos.y, yaw);
            SearchLocation {
                id: format!("gen-c{}-{}", cluster.id, tag),
                pose,
                room_id: room_of(pos, world).map(String::from),
                source: LocationSource::Generated,
                source_cluster: Some(cluster_arc.clone()),
            }
        })
        .collect()
}

/// Candidate poses of every cluster, before filtering. The output size is
/// always `2 * clusters.len()`, realizing "at least 2 search positions or
/// none at all" per room.
pub fn candidate_positions(
    clusters: &[TableCluster],
    params: &HeuristicParams,
    world: &WorldModel,
) -> Vec<SearchLocation> {
    clusters
        .iter()
        .flat_map(|c| place_search_positions(c, params, world))
        .collect()
}

/// Keep a candidate iff it is (a) inside the grid, (b) on a Free cell,
/// (c) in the robot's current room, and (d) its source surface is in the
/// same room as the robot.
pub fn filter_positions(
    candidates: Vec<SearchLocation>,
    robot_room: &str,
    world: &WorldModel,
) -> Vec<SearchLocation> {
    candidates
        .into_iter()
        .filter(|loc| {
            let p = loc.position();
            if world.grid.cell_of(p).is_none() {
                return false;
            }
            if is_occupied(p, world) {
                return false;
            }
            if room_of(p, world) != Some(robot_room) {
                return false;
            }
            if let Some(cluster) = &loc.source_cluster {
                if room_of(cluster.centroid, world) != Some(robot_room) {
                    return false;
                }
            }
            true
        })
        .collect()
}

/// Viewing sector of a generated location: from its pose towards its source
/// cluster, wide enough to cover the cluster.
fn view_radius(loc: &SearchLocation) -> f64 {
    match &loc.source_cluster {
        Some(c) => loc.position().dist(c.centroid) + c.circumradius(),
        None => 0.0,
    }
}

fn sector_contains(apex: Point2, yaw: f64, fov: f64, radius: f64, p: Point2) -> bool {
    let v = p - apex;
    let d = v.norm();
    if d > radius + 1e-9 {
        return false;
    }
    if d < 1e-12 {
        return true;
    }
    wrap_angle(v.angle() - yaw).abs() <= fov / 2.0 + 1e-9
}

/// Deterministic lattice estimate of `|A ∩ B| / min(|A|, |B|)` for two
/// viewing sectors.
fn sector_overlap(a: (Point2, f64, f64), b: (Point2, f64, f64), fov: f64) -> f64 {
    let step = 0.1;
    let min_x = (a.0.x - a.2).min(b.0.x - b.2);
    let max_x = (a.0.x + a.2).max(b.0.x + b.2);
    let min_y = (a.0.y - a.2).min(b.0.y - b.2);
    let max_y = (a.0.y + a.2).max(b.0.y + b.2);
    let (mut in_a, mut in_b, mut in_both) = (0usize, 0usize, 0usize);
    let nx = ((max_x - min_x) / step).ceil() as i64;
    let ny = ((max_y - min_y) / step).ceil() as i64;
    for iy in 0..=ny {
        for ix in 0..=nx {
            let p = Point2::new(min_x + ix as f64 * step, min_y + iy as f64 * step);
            let ia = sector_contains(a.0, a.1, fov, a.2, p);
            let ib = sector_contains(b.0, b.1, fov, b.2, p);
            in_a += ia as usize;
            in_b += ib as usize;
            in_both += (ia && ib) as usize;
        }
    }
    let denom = in_a.min(in_b);
    if denom == 0 {
        return 0.0;
    }
    in_both as f64 / denom as f64
}

/// Merge generated positions whose viewing sectors overlap by at least
/// `min_overlap`, provided every source surface stays fully inside the
/// merged pose's field of view and the merged pose is still valid on the
/// map. Greedy, deterministic (scan order by id), output never larger than
/// the input.
pub fn cluster_positions(
    locations: Vec<SearchLocation>,
    fov: f64,
    min_overlap: f64,
    world: &WorldModel,
) -> Vec<SearchLocation> {
    debug_assert!(locations.iter().all(|l| l.source == LocationSource::Generated));
    let mut locs = locations;
    locs.sort_by(|a, b| a.id.cmp(&b.id));
    'merging: loop {
        for i in 0..locs.len() {
            for j in (i + 1)..locs.len() {
                if let Some(merged) = try_merge(&locs[i], &locs[j], fov, min_overlap, world) {
                    locs.remove(j);
                    locs.remove(i);
                    locs.push(merged);
                    locs.sort_by(|a, b| a.id.cmp(&b.id));
                    continue 'merging;
                }
            }
        }
        return locs;
    }
}

fn try_merge(
    a: &SearchLocation,
    b: &SearchLocation,
    fov: f64,
    min_overlap: f64,
    world: &WorldModel,
) -> Option<SearchLocation> {
    let (ca, cb) = (a.source_cluster.as_ref()?, b.source_cluster.as_ref()?);
    let sec_a = (a.position(), a.pose.yaw, view_radius(a));
    let sec_b = (b.position(), b.pose.yaw, view_radius(b));
    if sector_overlap(sec_a, sec_b, fov) < min_overlap {
        return None;
    }

    let mid = a.position().midpoint(b.position());
    if is_occupied(mid, world) {
        return None;
    }
    let room = room_of(mid, world)?;
    if a.room_id.as_deref() != Some(room) || b.room_id.as_deref() != Some(room) {
        return None;
    }

    // Combined surface: weight centroids by sample counts.
    let (na, nb) = (ca.footprint.len() as f64, cb.footprint.len() as f64);
    let combined_centroid = Point2::new(
        (ca.centroid.x * na + cb.centroid.x * nb) / (na + nb),
        (ca.centroid.y * na + cb.centroid.y * nb) / (na + nb),
    );
    let yaw = (combined_centroid - mid).angle();

    // Both source surfaces must stay fully visible from the merged pose.
    let radius = ca
        .footprint
        .iter()
        .chain(cb.footprint.iter())
        .map(|p| p.dist(mid))
        .fold(0.0, f64::max);
    let all_inside = ca
        .footprint
        .iter()
        .chain(cb.footprint.iter())
        .all(|&p| sector_contains(mid, yaw, fov, radius, p));
    if !all_inside {
        return None;
    }

    let mut merged_points = ca.points.clone();
    merged_points.extend(cb.points.iter().copied());
    let merged_footprint: Vec<Point2> = ca
        .footprint
        .iter()
        .chain(cb.footprint.iter())
        .copied()
        .collect();
    let (centroid, axes, _eigs) = principal_axes(&merged_footprint);
    let project = |axis: Vec2| {
        merged_footprint
            .iter()
            .map(|p| (*p - centroid).dot(axis).abs())
            .fold(0.0, f64::max)
    };
    let extents = (project(axes.0), project(axes.1));
    let merged_cluster = TableCluster {
        id: ca.id.min(cb.id),
        points: merged_points,
        footprint: merged_footprint,
        centroid,
        axes,
        extents,
    };
    Some(SearchLocation {
        id: format!("{}+{}", a.id, b.id),
        pose: Pose2::new(mid.x, mid.y, yaw),
        room_id: Some(room.to_string()),
        source: LocationSource::Generated,
        source_cluster: Some(Arc::new(merged_cluster)),
    })
}

/// Debug dump of clusters as `cluster,x,y,z` CSV.
pub fn clusters_to_csv(clusters: &[TableCluster]) -> String {
    let mut out = String::from("cluster,x,y,z\n");
    for c in clusters {
        for (x, y, z) in &c.points {
            out.push_str(&format!("{},{},{},{}\n", c.id, x, y, z));
        }
    }
    out
}

/// Debug dump of search locations as CSV.
pub fn locations_to_csv(locations: &[SearchLocation]) -> String {
    let mut out = String::from("id,x,y,yaw,room,source\n");
    for l in locations {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            l.id,
            l.pose.x,
            l.pose.y,
            l.pose.yaw,
            l.room_id.as_deref().unwrap_or(""),
            match l.source {
                LocationSource::Manual => "manual",
                LocationSource::Generated => "generated",
            }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percept::{LabeledPoint, SensorPose};
    use crate::world::{build_world, ScenarioDoc};

    fn cloud_of(points: Vec<(f64, f64, f64)>) -> LabeledCloud {
        LabeledCloud {
            points: points
                .into_iter()
                .map(|(x, y, z)| LabeledPoint {
                    x,
                    y,
                    z,
                    label: SemanticLabel::Table,
                })
                .collect(),
            sensor_pose: SensorPose {
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
                mount_height: 1.24,
            },
        }
    }

    /// Uniform lattice sampling of an axis-aligned rectangle at height z.
    fn sampled_rect(cx: f64, cy: f64, half_w: f64, half_h: f64, z: f64) -> Vec<(f64, f64, f64)> {
        let mut pts = Vec::new();
        let mut x = cx - half_w;
        while x <= cx + half_w + 1e-9 {
            let mut y = cy - half_h;
            while y <= cy + half_h + 1e-9 {
                pts.push((x, y, z));
                y += SAMPLE_SPACING;
            }
            x += SAMPLE_SPACING;
        }
        pts
    }

    fn open_world() -> crate::world::WorldModel {
        let n = 60;
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
            "rooms": [ { "id": "room", "polygon": [[0.2, 0.2], [11.8, 0.2], [11.8, 11.8], [0.2, 11.8]] } ],
            "robot": { "x": 1.0, "y": 1.0, "yaw": 0.0 },
            "user": { "room": "room" }
        });
        let doc: ScenarioDoc = serde_json::from_value(doc).unwrap();
        build_world(doc).unwrap()
    }

    #[test]
    fn no_table_points_yields_no_clusters() {
        let clusters = extract_table_clusters(&[], &HeuristicParams::default());
        assert!(clusters.is_empty());
        let floor_only = LabeledCloud {
            points: vec![LabeledPoint {
                x: 1.0,
                y: 1.0,
                z: 0.0,
                label: SemanticLabel::Floor,
            }],
            sensor_pose: SensorPose {
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
                mount_height: 1.24,
            },
        };
        assert!(extract_table_clusters(&[floor_only], &HeuristicParams::default()).is_empty());
    }

    #[test]
    fn rectangle_axes_and_extents_match_analytic_values() {
        // 2.0 x 1.0 m table: first axis along the long (x) side, extents
        // (1.0, 0.5) within half a sample spacing.
        let cloud = cloud_of(sampled_rect(3.0, 2.0, 1.0, 0.5, 0.75));
        let clusters = extract_table_clusters(&[cloud], &HeuristicParams::default());
        assert_eq!(clusters.len(), 1);
        let c = &clusters[0];
        let angle = c.axes.0.angle().abs();
        assert!(angle < 2.0_f64.to_radians(), "first axis angle {angle}");
        assert!((c.extents.0 - 1.0).abs() < 0.05, "{:?}", c.extents);
        assert!((c.extents.1 - 0.5).abs() < 0.05, "{:?}", c.extents);
        assert!((c.centroid.x - 3.0).abs() < 0.02 && (c.centroid.y - 2.0).abs() < 0.02);
        // Orthonormal axes.
        assert!(c.axes.0.dot(c.axes.1).abs() < 1e-12);
        assert!((c.axes.0.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_distant_tables_make_two_clusters() {
        let mut pts = sampled_rect(2.0, 2.0, 0.5, 0.4, 0.75);
        pts.extend(sampled_rect(6.0, 2.0, 0.5, 0.4, 0.75));
        let params = HeuristicParams {
            cluster_tolerance: 0.2,
            ..HeuristicParams::default()
        };
        let clusters = extract_table_clusters(&[cloud_of(pts)], &params);
        assert_eq!(clusters.len(), 2);
    }

    #[test]
    fn height_band_filters_out_of_band_surfaces() {
        let mut pts = sampled_rect(2.0, 2.0, 0.5, 0.4, 0.75);
        pts.extend(sampled_rect(6.0, 2.0, 0.5, 0.4, 1.9)); // too high
        pts.extend(sampled_rect(4.0, 5.0, 0.5, 0.4, 0.1)); // too low
        let clusters = extract_table_clusters(&[cloud_of(pts)], &HeuristicParams::default());
        assert_eq!(clusters.len(), 1);
        assert!((clusters[0].centroid.x - 2.0).abs() < 0.05);
    }

    #[test]
    fn placement_formula_axis_aligned_example() {
        // Table centroid (3, 2), extents (1.0, 0.5), d = 0.4: poses at
        // (3, 2.9) and (3, 1.1) with yaws -pi/2 and +pi/2.
        let world = open_world();
        let cloud = cloud_of(sampled_rect(3.0, 2.0, 1.0, 0.5, 0.75));
        let clusters = extract_table_clusters(&[cloud], &HeuristicParams::default());
        let poses = place_search_positions(&clusters[0], &HeuristicParams::default(), &world);
        assert_eq!(poses.len(), 2);
        let (a, b) = (&poses[0], &poses[1]);
        let d_expect = clusters[0].extents.1 + 0.4;
        assert!((a.pose.x - 3.0).abs() < 0.03, "{:?}", a.pose);
        assert!((a.pose.y - (2.0 + d_expect)).abs() < 0.03, "{:?}", a.pose);
        assert!((b.pose.y - (2.0 - d_expect)).abs() < 0.03, "{:?}", b.pose);
        assert!((wrap_angle(a.pose.yaw + std::f64::consts::FRAC_PI_2)).abs() < 0.05);
        assert!((wrap_angle(b.pose.yaw - std::f64::consts::FRAC_PI_2)).abs() < 0.05);
    }

    #[test]
    fn square_table_uses_deterministic_tie_break() {
        let world = open_world();
        let cloud = cloud_of(sampled_rect(3.0, 3.0, 0.5, 0.5, 0.75));
        let clusters = extract_table_clusters(&[cloud], &HeuristicParams::default());
        assert_eq!(clusters.len(), 1);
        // Degenerate PCA: second axis snaps to world y.
        assert!((clusters[0].axes.1.x).abs() < 1e-9);
        assert!((clusters[0].axes.1.y - 1.0).abs() < 1e-9);
        let poses = place_search_positions(&clusters[0], &HeuristicParams::default(), &world);
        assert_eq!(poses.len(), 2);
    }

    #[test]
    fn zero_security_distance_touches_the_edge() {
        let world = open_world();
        let cloud = cloud_of(sampled_rect(3.0, 2.0, 1.0, 0.5, 0.75));
        let clusters = extract_table_clusters(&[cloud], &HeuristicParams::default());
        let params = HeuristicParams {
            security_distance: 0.0,
            ..HeuristicParams::default()
        };
        let poses = place_search_positions(&clusters[0], &params, &world);
        let dist = poses[0].position().dist(clusters[0].centroid);
        assert!((dist - clusters[0].extents.1).abs() < 1e-9);
    }

    #[test]
    fn both_poses_lie_on_the_second_axis() {
        let world = open_world();
        let cloud = cloud_of(sampled_rect(4.0, 4.0, 0.9, 0.4, 0.75));
        let clusters = extract_table_clusters(&[cloud], &HeuristicParams::default());
        let c = &clusters[0];
        let poses = place_search_positions(c, &HeuristicParams::default(), &world);
        for p in &poses {
            let offset = p.position() - c.centroid;
            assert!(offset.cross(c.axes.1).abs() < 1e-9);
        }
        // Equidistant on both sides.
        let d0 = poses[0].position().dist(c.centroid);
        let d1 = poses[1].position().dist(c.centroid);
        assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn filter_removes_wall_and_wrong_room_poses() {
        let world = open_world();
        let inside = SearchLocation::manual("in", Pose2::new(3.0, 3.0, 0.0), None);
        let in_wall = SearchLocation::manual("wall", Pose2::new(0.1, 3.0, 0.0), None);
        let outside = SearchLocation::manual("out", Pose2::new(-4.0, 3.0, 0.0), None);
        let mut candidates: Vec<SearchLocation> = vec![inside, in_wall, outside];
        for c in &mut candidates {
            c.source = LocationSource::Generated;
        }
        let kept = filter_positions(candidates, "room", &world);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "in");
    }

    #[test]
    fn identical_poses_merge_to_one() {
        let world = open_world();
        // Small table so its whole footprint fits one camera view.
        let cloud = cloud_of(sampled_rect(4.0, 4.0, 0.3, 0.2, 0.75));
        let clusters = extract_table_clusters(&[cloud], &HeuristicParams::default());
        let poses = place_search_positions(&clusters[0], &HeuristicParams::default(), &world);
        let twice = vec![poses[0].clone(), poses[0].clone()];
        // FOV wide enough that the table's near corners fit the view.
        let merged = cluster_positions(twice, 2.0, 0.5, &world);
        assert_eq!(merged.len(), 1);
    }

    #[test]
    fn distant_poses_viewing_distinct_tables_stay_apart() {
        let world = open_world();
        let c1 = extract_table_clusters(
            &[cloud_of(sampled_rect(2.0, 2.0, 0.8, 0.4, 0.75))],
            &HeuristicParams::default(),
        );
        let c2 = extract_table_clusters(
            &[cloud_of(sampled_rect(9.0, 9.0, 0.8, 0.4, 0.75))],
            &HeuristicParams::default(),
        );
        let mut poses = place_search_positions(&c1[0], &HeuristicParams::default(), &world);
        poses.extend(place_search_positions(&c2[0], &HeuristicParams::default(), &world));
        let n = poses.len();
        let merged = cluster_positions(poses, 1.0, 0.5, &world);
        assert_eq!(merged.len(), n);
    }
}
