//! The full fetch-and-carry behaviour assembled as a hierarchical state
//! machine: room iteration, per-room agenda construction (manual annotations
//! or the on-the-fly generation pipeline), the search-position loop
//! (move, recognize, remove-on-failure), grasping, and user informing.
//!
//! One mission is one deterministic single-threaded execution: all
//! randomness flows from the mission seed through a single stream, and all
//! timing from the duration model through the simulated clock. The generated
//! strategy's per-room scan is embedded as 12 rotate/segment states; with
//! `concurrent_scan` enabled the middle steps pair up in Concurrent
//! containers so rotation k+1 overlaps segmentation k.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{wrap_angle, Point2, Pose2};
use crate::hsm::{
    self, execute, HsmError, MachineSpec, Outcome, OutcomePolicy, SimClock, StateSpec, Trace,
    Userdata, ValidationReport,
};
use crate::nav::{plan, travel_time, DurationModel};
use crate::percept::{
    detect_user, recognize_objects, scan_heading, sense_semantic, Detection, LabeledCloud,
    PerceptionNoise,
};
use crate::strategy::{
    build_agenda_manual, next_location, positions_from_clouds, room_center, update_probabilities,
    CostParams, ProbabilityTable, SearchAgenda, Strategy, StrategyError,
};
use crate::tablegeom::{HeuristicParams, SearchLocation};
use crate::world::{room_of, WorldModel};

/// Scan geometry of the generation pipeline: 360 degrees in 30-degree steps.
pub const SCAN_STEP_DEG: f64 = 30.0;
pub const SCAN_STEPS: usize = 12;

/// How the outer room loop orders rooms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoomOrderPolicy {
    /// Cheapest next room by path length, with the user's room deferred by
    /// the same penalty weight the cost function uses.
    #[default]
    NearestFirst,
    /// Scenario declaration order.
    Fixed,
}

/// Everything one mission run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub target_object: String,
    pub strategy: Strategy,
    #[serde(default)]
    pub room_order_policy: RoomOrderPolicy,
    #[serde(default = "default_grasp_p")]
    pub grasp_success_probability: f64,
    #[serde(default)]
    pub concurrent_scan: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: PerceptionNoise,
    #[serde(default)]
    pub durations: DurationModel,
    /// Defaults to [`CostParams::defaults_for`] the scenario when absent.
    #[serde(default)]
    pub cost_params: Option<CostParams>,
    #[serde(default)]
    pub heuristics: HeuristicParams,
}

fn default_grasp_p() -> f64 {
    1.0
}

impl MissionConfig {
    pub fn new(target_object: impl Into<String>, strategy: Strategy) -> Self {
        MissionConfig {
            target_object: target_object.into(),
            strategy,
            room_order_policy: RoomOrderPolicy::default(),
            grasp_success_probability: 1.0,
            concurrent_scan: false,
            seed: 0,
            noise: PerceptionNoise::default(),
            durations: DurationModel::default(),
            cost_params: None,
            heuristics: HeuristicParams::default(),
        }
    }
}

/// Table-I-style detection outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detected {
    Yes,
    No,
    /// Reported found, but the recognition was a flagged false positive.
    FalsePositive,
}

impl std::fmt::Display for Detected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Detected::Yes => "Y",
            Detected::No => "N",
            Detected::FalsePositive => "N*",
        })
    }
}

impl Serialize for Detected {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Detected {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "Y" => Ok(Detected::Yes),
            "N" => Ok(Detected::No),
            "N*" => Ok(Detected::FalsePositive),
            other => Err(serde::de::Error::custom(format!("bad detection `{other}`"))),
        }
    }
}

/// What one mission run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub target_object: String,
    pub strategy: Strategy,
    pub object_detected: Detected,
    /// Simulated seconds from mission start to machine completion.
    pub duration_s: f64,
    pub positions_visited: usize,
    pub positions_total: usize,
    /// Ids of the search positions actually visited, in order.
    pub visited_ids: Vec<String>,
    pub grasped: bool,
    pub user_informed: bool,
    pub inform_message: String,
    pub rooms_searched: Vec<String>,
    pub seed: u64,
    pub trace: Trace,
}

impl MissionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row in the style of the experiment table:
    /// `object strategy detected mm:ss visited/total`.
    pub fn to_row(&self) -> String {
        format!(
            "{} {} {} {} {}/{}",
            self.target_object,
            self.strategy,
            self.object_detected,
            format_mmss(self.duration_s),
            self.positions_visited,
            self.positions_total
        )
    }
}

/// `[min]:[sec]` rendering of simulated seconds.
pub fn format_mmss(seconds: f64) -> String {
    let total = seconds.round() as i64;
    format!("{}:{:02}", total / 60, total % 60)
}

#[derive(Debug, Error)]
pub enum MissionError {
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("invalid mission configuration: {0}")]
    Config(String),
    #[error("mission machine failed validation:\n{0}")]
    InvalidMachine(ValidationReport),
    #[error(transparent)]
    Exec(#[from] HsmError),
}

/// Mutable world-facing state threaded through the machine's states.
pub struct MissionCtx<'w> {
    world: &'w WorldModel,
    config: MissionConfig,
    cost_params: CostParams,
    rng: ChaCha8Rng,
    table: ProbabilityTable,
    annotations: Vec<SearchLocation>,
    robot: Pose2,
    rooms_pending: Vec<String>,
    rooms_searched: Vec<String>,
    current_room: Option<String>,
    agenda: Option<SearchAgenda>,
    current_target: Option<SearchLocation>,
    scan_clouds: Vec<LabeledCloud>,
    scan_heading0: f64,
    detection: Option<Detection>,
    positions_total: usize,
    positions_visited: usize,
    visited_ids: Vec<String>,
    grasped: bool,
    user_informed: bool,
    inform_message: String,
}

impl<'w> MissionCtx<'w> {
    fn new(
        config: &MissionConfig,
        world: &'w WorldModel,
        annotations: &[SearchLocation],
        table: &ProbabilityTable,
    ) -> Self {
        let cost_params = config
            .cost_params
            .unwrap_or_else(|| CostParams::defaults_for(world));
        let rooms_pending: Vec<String> = match config.strategy {
            // Manual: only rooms that actually contain annotations.
            Strategy::Manual => world
                .rooms
                .iter()
                .filter(|r| {
                    annotations
                        .iter()
                        .any(|a| a.room_id.as_deref() == Some(r.id.as_str()))
                })
                .map(|r| r.id.clone())
                .collect(),
            Strategy::Generated => world.rooms.iter().map(|r| r.id.clone()).collect(),
        };
        let positions_total = match config.strategy {
            Strategy::Manual => annotations.len(),
            Strategy::Generated => 0,
        };
        let mut table = table.clone();
        if config.strategy == Strategy::Manual {
            table.register_locations(annotations.iter().map(|a| a.id.as_str()));
        }
        MissionCtx {
            world,
            config: config.clone(),
            cost_params,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            table,
            annotations: annotations.to_vec(),
            robot: world.agent.robot_pose,
            rooms_pending,
            rooms_searched: Vec::new(),
            current_room: None,
            agenda: None,
            current_target: None,
            scan_clouds: Vec::new(),
            scan_heading0: 0.0,
            detection: None,
            positions_total,
            positions_visited: 0,
            visited_ids: Vec::new(),
            grasped: false,
            user_informed: false,
            inform_message: String::new(),
        }
    }

    fn room_order_cost(&self, room_id: &str) -> Option<f64> {
        let center = room_center(self.world, room_id).ok()?;
        let path = plan(self.robot.position(), center.position(), self.world)
            .ok()
            .flatten()?;
        let penalty = if room_id == self.world.user.room {
            self.cost_params.k2 * self.cost_params.k_pen
        } else {
            0.0
        };
        Some(path.length / self.cost_params.bat_normalizer + penalty)
    }
}

type Machine<'w> = MachineSpec<MissionCtx<'w>>;
type State<'w> = StateSpec<MissionCtx<'w>>;

fn outcome(name: &str) -> Result<Outcome, HsmError> {
    Ok(Outcome::from(name))
}

/// Drive to a point, charging translation and the heading change, and update
/// the robot pose. Returns false when unreachable.
fn drive_to(ctx: &mut MissionCtx<'_>, goal: Pose2, clock: &mut SimClock) -> Result<bool, HsmError> {
    let path = plan(ctx.robot.position(), goal.position(), ctx.world)
        .ok()
        .flatten();
    let Some(path) = path else {
        return Ok(false);
    };
    let turn = wrap_angle(goal.yaw - ctx.robot.yaw).abs();
    clock.advance(travel_time(&path, turn, &ctx.config.durations))?;
    ctx.robot = goal;
    Ok(true)
}

// ---------------------------------------------------------------------------
// Machine construction
// ---------------------------------------------------------------------------

fn select_room_state<'w>() -> State<'w> {
    StateSpec::new("select_room", ["selected", "no_rooms"], |ctx: &mut MissionCtx<'_>, ud, _clock| {
        if ctx.rooms_pending.is_empty() {
            return outcome("no_rooms");
        }
        let idx = match ctx.config.room_order_policy {
            RoomOrderPolicy::Fixed => Some(0),
            RoomOrderPolicy::NearestFirst => {
                let mut best: Option<(f64, usize)> = None;
                for (i, room) in ctx.rooms_pending.iter().enumerate() {
                    let Some(c) = ctx.room_order_cost(room) else {
                        continue;
                    };
                    if best.map_or(true, |(bc, _)| c < bc) {
                        best = Some((c, i));
                    }
                }
                best.map(|(_, i)| i)
            }
        };
        let Some(idx) = idx else {
            // Everything left is unreachable.
            ctx.rooms_pending.clear();
            return outcome("no_rooms");
        };
        let room = ctx.rooms_pending.remove(idx);
        ud.set("current_room", room.as_str())?;
        ctx.rooms_searched.push(room.clone());
        ctx.current_room = Some(room);
        outcome("selected")
    })
    .with_outputs(["current_room"])
}

fn manual_acquire_state<'w>() -> State<'w> {
    StateSpec::new("acquire", ["ready"], |ctx: &mut MissionCtx<'_>, _ud, _clock| {
        let room = ctx.current_room.clone().expect("room selected");
        let in_room: Vec<SearchLocation> = ctx
            .annotations
            .iter()
            .filter(|a| a.room_id.as_deref() == Some(room.as_str()))
            .cloned()
            .collect();
        ctx.agenda = Some(SearchAgenda {
            remaining: in_room,
            visited: Vec::new(),
            strategy: Strategy::Manual,
        });
        outcome("ready")
    })
}

fn goto_center_state<'w>() -> State<'w> {
    StateSpec::new(
        "goto_center",
        ["arrived", "unreachable"],
        |ctx: &mut MissionCtx<'_>, _ud, clock| {
            let room = ctx.current_room.clone().expect("room selected");
            let Ok(center) = room_center(ctx.world, &room) else {
                return outcome("unreachable");
            };
            let goal = Pose2::new(center.x, center.y, ctx.robot.yaw);
            if !drive_to(ctx, goal, clock)? {
                return outcome("unreachable");
            }
            ctx.scan_clouds.clear();
            ctx.scan_heading0 = ctx.robot.yaw;
            outcome("arrived")
        },
    )
}

fn rotate_state<'w>(k: usize, duration: f64) -> State<'w> {
    StateSpec::new(format!("rotate_{k}"), ["done"], |_ctx: &mut MissionCtx<'_>, _ud, _clock| {
        outcome("done")
    })
    .with_duration(duration)
}

fn segment_state<'w>(k: usize, duration: f64) -> State<'w> {
    StateSpec::new(
        format!("segment_{k}"),
        ["done"],
        move |ctx: &mut MissionCtx<'_>, _ud, _clock| {
            let heading = scan_heading(ctx.scan_heading0, k, SCAN_STEP_DEG);
            let pose = Pose2::new(ctx.robot.x, ctx.robot.y, heading);
            let noise = ctx.config.noise.clone();
            match sense_semantic(ctx.world, pose, &noise, &mut ctx.rng) {
                Ok(cloud) => ctx.scan_clouds.push(cloud),
                Err(_) => {
                    // Scan pose was validated free when driving there.
                    return Err(HsmError::StateFailure {
                        state: format!("segment_{k}"),
                        message: "sensor pose occupied".to_string(),
                    });
                }
            }
            outcome("done")
        },
    )
    .with_duration(duration)
}

/// The rotation-scan sub-machine. Sequential mode alternates rotate and
/// segment; concurrent mode exposes the first rotation and the last
/// segmentation and pairs the middle steps in Concurrent containers, which
/// realizes the pipelined scan duration exactly.
fn scan_machine<'w>(durations: &DurationModel, concurrent: bool) -> Machine<'w> {
    let rot = durations.rotate_step_time;
    let seg = durations.segmentation_time;
    let mut m = MachineSpec::sequential("scan", ["scanned"]);
    if !concurrent {
        for k in 0..SCAN_STEPS {
            m = m
                .with_state(rotate_state(k, rot))
                .with_state(segment_state(k, seg));
            m = m.with_transition(&format!("rotate_{k}"), "done", &format!("segment_{k}"));
            let next = if k + 1 < SCAN_STEPS {
                format!("rotate_{}", k + 1)
            } else {
                "scanned".to_string()
            };
            m = m.with_transition(&format!("segment_{k}"), "done", &next);
        }
        return m;
    }
    m = m.with_state(rotate_state(0, rot));
    m = m.with_transition("rotate_0", "done", "pair_1");
    for k in 1..SCAN_STEPS {
        let policy = OutcomePolicy {
            rules: Vec::new(),
            default: Outcome::from("stepped"),
        };
        let pair = MachineSpec::concurrent(format!("pair_{k}"), ["stepped"], policy)
            .with_state(rotate_state(k, rot))
            .with_state(segment_state(k - 1, seg));
        m = m.with_machine(pair);
        let next = if k + 1 < SCAN_STEPS {
            format!("pair_{}", k + 1)
        } else {
            format!("segment_{}", SCAN_STEPS - 1)
        };
        m = m.with_transition(&format!("pair_{k}"), "stepped", &next);
    }
    m = m.with_state(segment_state(SCAN_STEPS - 1, seg));
    m = m.with_transition(&format!("segment_{}", SCAN_STEPS - 1), "done", "scanned");
    m
}

fn derive_positions_state<'w>() -> State<'w> {
    StateSpec::new("derive_positions", ["ready"], |ctx: &mut MissionCtx<'_>, _ud, _clock| {
        let room = ctx.current_room.clone().expect("room selected");
        let center = Pose2::new(ctx.robot.x, ctx.robot.y, ctx.scan_heading0);
        let out = positions_from_clouds(
            ctx.world,
            &room,
            center,
            &ctx.scan_clouds,
            &ctx.config.heuristics,
        );
        ctx.positions_total += out.accepted.len();
        ctx.agenda = Some(SearchAgenda {
            remaining: out.accepted,
            visited: Vec::new(),
            strategy: Strategy::Generated,
        });
        ctx.scan_clouds.clear();
        outcome("ready")
    })
}

fn generated_acquire_machine<'w>(durations: &DurationModel, concurrent: bool) -> Machine<'w> {
    MachineSpec::sequential("acquire", ["ready", "skip"])
        .with_state(goto_center_state())
        .with_machine(scan_machine(durations, concurrent))
        .with_state(derive_positions_state())
        .with_transition("goto_center", "arrived", "scan")
        .with_transition("goto_center", "unreachable", "skip")
        .with_transition("scan", "scanned", "derive_positions")
        .with_transition("derive_positions", "ready", "ready")
}

fn select_position_state<'w>() -> State<'w> {
    StateSpec::new(
        "select_position",
        ["selected", "exhausted"],
        |ctx: &mut MissionCtx<'_>, _ud, _clock| {
            let agenda = ctx.agenda.as_mut().expect("agenda built");
            let robot = ctx.robot;
            let user_room = ctx.world.user.room.clone();
            let chosen = next_location(
                agenda,
                &ctx.config.target_object,
                robot,
                &user_room,
                &ctx.table,
                &ctx.cost_params,
                ctx.world,
            );
            match chosen {
                Some(loc) => {
                    ctx.current_target = Some(loc);
                    outcome("selected")
                }
                None => outcome("exhausted"),
            }
        },
    )
}

fn goto_position_state<'w>() -> State<'w> {
    StateSpec::new("goto_position", ["arrived", "unreachable"], |ctx: &mut MissionCtx<'_>, _ud, clock| {
        let loc = ctx.current_target.clone().expect("position selected");
        if !drive_to(ctx, loc.pose, clock)? {
            return outcome("unreachable");
        }
        ctx.positions_visited += 1;
        ctx.visited_ids.push(loc.id.clone());
        outcome("arrived")
    })
}

fn recognize_state<'w>(recognition_time: f64) -> State<'w> {
    StateSpec::new(
        "recognize",
        ["recognized", "none"],
        |ctx: &mut MissionCtx<'_>, ud, _clock| {
            let noise = ctx.config.noise.clone();
            let target = ctx.config.target_object.clone();
            let result = recognize_objects(ctx.world, ctx.robot, &target, &noise, &mut ctx.rng);

            // Every recognized object adapts the probability table; learning
            // is keyed to the stable manual annotations.
            if ctx.config.strategy == Strategy::Manual && !ctx.annotations.is_empty() {
                let sightings: Vec<(String, Point2)> = result
                    .detections
                    .iter()
                    .map(|d| (d.name.clone(), Point2::new(d.pose.x, d.pose.y)))
                    .collect();
                let annotations = ctx.annotations.clone();
                update_probabilities(&mut ctx.table, &sightings, &annotations);
            }

            let hit = result
                .detections
                .iter()
                .find(|d| d.name == target && d.true_positive)
                .or_else(|| result.detections.iter().find(|d| d.name == target));
            match hit {
                Some(d) => {
                    ctx.detection = Some(d.clone());
                    ud.set("detected", !d.true_positive)?;
                    outcome("recognized")
                }
                None => outcome("none"),
            }
        },
    )
    .with_duration(recognition_time)
    .with_inputs(["current_room"])
    .with_outputs(["detected"])
}

fn visit_machine<'w>(recognition_time: f64) -> Machine<'w> {
    MachineSpec::sequential("visit", ["found", "exhausted_room"])
        .with_state(select_position_state())
        .with_state(goto_position_state())
        .with_state(recognize_state(recognition_time))
        .with_transition("select_position", "selected", "goto_position")
        .with_transition("select_position", "exhausted", "exhausted_room")
        .with_transition("goto_position", "arrived", "recognize")
        .with_transition("goto_position", "unreachable", "select_position")
        .with_transition("recognize", "recognized", "found")
        .with_transition("recognize", "none", "select_position")
}

fn search_machine<'w>(config: &MissionConfig) -> Machine<'w> {
    let mut m = MachineSpec::sequential("search", ["found", "exhausted"])
        .with_state(select_room_state());
    m = match config.strategy {
        Strategy::Manual => m.with_state(manual_acquire_state()),
        Strategy::Generated => {
            m.with_machine(generated_acquire_machine(&config.durations, config.concurrent_scan))
        }
    };
    m = m
        .with_machine(visit_machine(config.durations.recognition_time))
        .with_transition("select_room", "selected", "acquire")
        .with_transition("select_room", "no_rooms", "exhausted")
        .with_transition("acquire", "ready", "visit")
        .with_transition("visit", "found", "found")
        .with_transition("visit", "exhausted_room", "select_room");
    if config.strategy == Strategy::Generated {
        m = m.with_transition("acquire", "skip", "select_room");
    }
    m
}

fn grasp_state<'w>(grasp_time: f64) -> State<'w> {
    StateSpec::new("grasp", ["grasped", "missed"], |ctx: &mut MissionCtx<'_>, _ud, _clock| {
        let p = ctx.config.grasp_success_probability;
        let ok = p > 0.0 && ctx.rng.random_bool(p.min(1.0));
        outcome(if ok { "grasped" } else { "missed" })
    })
    .with_duration(grasp_time)
}

fn put_on_tray_state<'w>() -> State<'w> {
    StateSpec::new("put_on_tray", ["done"], |ctx: &mut MissionCtx<'_>, _ud, _clock| {
        ctx.grasped = true;
        outcome("done")
    })
}

fn deliver_machine<'w>(grasp_time: f64) -> Machine<'w> {
    MachineSpec::sequential("deliver", ["stowed", "not_stowed"])
        .with_state(grasp_state(grasp_time))
        .with_state(put_on_tray_state())
        .with_transition("grasp", "grasped", "put_on_tray")
        .with_transition("grasp", "missed", "not_stowed")
        .with_transition("put_on_tray", "done", "stowed")
}

fn inform_state<'w>() -> State<'w> {
    StateSpec::new(
        "inform",
        ["informed", "not_informed"],
        |ctx: &mut MissionCtx<'_>, ud, clock| {
            let target = ctx.config.target_object.clone();
            let noise = ctx.config.noise.clone();
            let durations = ctx.config.durations;
            let detection = ctx.detection.clone();
            let (out, pose) = inform_user_impl(
                ctx.world,
                &target,
                detection.as_ref(),
                &noise,
                &durations,
                ctx.robot,
                &mut ctx.rng,
            );
            clock.advance(out.time_charged)?;
            ctx.robot = pose;
            ctx.user_informed = out.user_found;
            ctx.inform_message = out.message;
            ud.set("user_informed", out.user_found)?;
            outcome(if out.user_found { "informed" } else { "not_informed" })
        },
    )
    .with_outputs(["user_informed"])
}

fn finish_state<'w>() -> State<'w> {
    StateSpec::new("finish", ["found", "not_found"], |ctx: &mut MissionCtx<'_>, _ud, _clock| {
        outcome(if ctx.detection.is_some() { "found" } else { "not_found" })
    })
    .with_inputs(["detected", "user_informed"])
}

/// Build the full mission machine for a configuration. Inputs are checked
/// (config probabilities, annotation validity for the manual strategy) and
/// the returned machine always passes [`hsm::validate`].
pub fn build_mission<'w>(
    config: &MissionConfig,
    world: &'w WorldModel,
    annotations: &[SearchLocation],
    _table: &ProbabilityTable,
) -> Result<MachineSpec<MissionCtx<'w>>, MissionError> {
    if !(0.0..=1.0).contains(&config.grasp_success_probability) {
        return Err(MissionError::Config(
            "grasp_success_probability must be in [0, 1]".to_string(),
        ));
    }
    if !config.noise.is_valid() {
        return Err(MissionError::Config("noise probabilities must be in [0, 1]".to_string()));
    }
    if !config.durations.is_valid() {
        return Err(MissionError::Config("durations must be strictly positive".to_string()));
    }
    if config.strategy == Strategy::Manual {
        // Fail fast on bad annotations.
        build_agenda_manual(world, annotations)?;
    }

    let machine = MachineSpec::sequential("mission", ["found", "not_found"])
        .with_machine(search_machine(config))
        .with_machine(deliver_machine(config.durations.grasp_time))
        .with_state(inform_state())
        .with_state(finish_state())
        .with_transition("search", "found", "deliver")
        .with_transition("search", "exhausted", "inform")
        .with_transition("deliver", "stowed", "inform")
        .with_transition("deliver", "not_stowed", "inform")
        .with_transition("inform", "informed", "finish")
        .with_transition("inform", "not_informed", "finish")
        .with_transition("finish", "found", "found")
        .with_transition("finish", "not_found", "not_found");

    let report = hsm::validate(&machine);
    if !report.is_empty() {
        return Err(MissionError::InvalidMachine(report));
    }
    Ok(machine)
}

/// Execute a full mission. The probability table is updated in place by the
/// manual strategy's recognitions, which is what carries learning across
/// runs.
pub fn run_mission(
    config: &MissionConfig,
    world: &WorldModel,
    annotations: &[SearchLocation],
    table: &mut ProbabilityTable,
) -> Result<MissionReport, MissionError> {
    let machine = build_mission(config, world, annotations, table)?;
    let mut ctx = MissionCtx::new(config, world, annotations, table);
    let mut clock = SimClock::new();
    let result = execute(&machine, &mut ctx, Userdata::new(), &mut clock)?;
    *table = ctx.table.clone();

    let object_detected = match &ctx.detection {
        None => Detected::No,
        Some(d) if d.true_positive => Detected::Yes,
        Some(_) => Detected::FalsePositive,
    };
    Ok(MissionReport {
        target_object: config.target_object.clone(),
        strategy: config.strategy,
        object_detected,
        duration_s: clock.now(),
        positions_visited: ctx.positions_visited,
        positions_total: ctx.positions_total,
        visited_ids: ctx.visited_ids.clone(),
        grasped: ctx.grasped,
        user_informed: ctx.user_informed,
        inform_message: ctx.inform_message.clone(),
        rooms_searched: ctx.rooms_searched.clone(),
        seed: config.seed,
        trace: result.trace,
    })
}

// ---------------------------------------------------------------------------
// User informing
// ---------------------------------------------------------------------------

/// Result of the user-search procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct InformOutcome {
    pub user_found: bool,
    pub rooms_visited: Vec<String>,
    pub message: String,
    /// Simulated seconds spent travelling and attempting detections.
    pub time_charged: f64,
}

/// Search for the user and compose the message. Starts at the room the user
/// was last seen in, then visits the remaining rooms nearest-first until the
/// user is detected or every room was tried. The object location renders as
/// room and furniture names, never raw coordinates.
pub fn inform_user(
    world: &WorldModel,
    target: &str,
    detection: Option<&Detection>,
    noise: &PerceptionNoise,
    durations: &DurationModel,
    robot: Pose2,
    rng: &mut impl Rng,
) -> InformOutcome {
    inform_user_impl(world, target, detection, noise, durations, robot, rng).0
}

fn inform_user_impl(
    world: &WorldModel,
    target: &str,
    detection: Option<&Detection>,
    noise: &PerceptionNoise,
    durations: &DurationModel,
    robot: Pose2,
    rng: &mut impl Rng,
) -> (InformOutcome, Pose2) {
    let mut pose = robot;
    let mut time = 0.0;
    let mut visited = Vec::new();
    let mut found = false;

    let mut pending: Vec<String> = world.rooms.iter().map(|r| r.id.clone()).collect();
    // The last-seen room is always tried first.
    let first = world.user.last_seen_room.clone();
    pending.retain(|r| *r != first);
    let mut order = vec![first];

    while let Some(room) = order.pop() {
        let Ok(center) = room_center(world, &room) else {
            continue;
        };
        let path = plan(pose.position(), center.position(), world).ok().flatten();
        if let Some(path) = path {
            time += travel_time(&path, 0.0, durations);
            pose = Pose2::new(center.x, center.y, pose.yaw);
            visited.push(room.clone());
            time += durations.recognition_time;
            if detect_user(world, &room, noise, rng) {
                found = true;
                break;
            }
        }
        if order.is_empty() && !pending.is_empty() {
            // Nearest remaining room next.
            let mut best: Option<(f64, usize)> = None;
            for (i, r) in pending.iter().enumerate() {
                let Ok(c) = room_center(world, r) else { continue };
                let Some(p) = plan(pose.position(), c.position(), world).ok().flatten() else {
                    continue;
                };
                if best.map_or(true, |(bl, _)| p.length < bl) {
                    best = Some((p.length, i));
                }
            }
            match best {
                Some((_, i)) => order.push(pending.remove(i)),
                None => break,
            }
        }
    }

    let message = match detection {
        Some(d) => describe_location(world, target, Point2::new(d.pose.x, d.pose.y)),
        None => format!("could not find the {} in any room", humanize(target)),
    };
    (
        InformOutcome {
            user_found: found,
            rooms_visited: visited,
            message,
            time_charged: time,
        },
        pose,
    )
}

fn humanize(id: &str) -> String {
    id.replace('_', " ")
}

/// Reverse room/furniture lookup for a detection pose.
fn describe_location(world: &WorldModel, target: &str, p: Point2) -> String {
    let room = room_of(p, world)
        .map(String::from)
        .or_else(|| {
            // A pose on furniture sits on occupied cells outside the room
            // polygon check only if rooms exclude footprints; fall back to
            // the furniture's room.
            world
                .furniture
                .iter()
                .find(|f| f.footprint.contains(p))
                .map(|f| f.room_id.clone())
        });
    let furniture = world
        .furniture
        .iter()
        .find(|f| f.footprint.contains(p))
        .or_else(|| {
            world
                .furniture
                .iter()
                .filter(|f| f.footprint.centroid().dist(p) < 1.0)
                .min_by(|a, b| {
                    a.footprint
                        .centroid()
                        .dist(p)
                        .total_cmp(&b.footprint.centroid().dist(p))
                })
        });
    match (furniture, room) {
        (Some(f), Some(r)) => format!(
            "the {} is on the {} in the {}",
            humanize(target),
            humanize(&f.id),
            humanize(&r)
        ),
        (None, Some(r)) => format!("the {} is in the {}", humanize(target), humanize(&r)),
        _ => format!("the {} was seen at an unmapped spot", humanize(target)),
    }
}
