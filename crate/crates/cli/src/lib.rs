//! Experiment harness: paired strategy comparisons on a scenario, with
//! markdown, CSV and JSON renderings of the comparison table.
//!
//! An experiment file names a scenario and a list of tests. Each test places
//! the target object, positions the robot, optionally overrides the noise
//! model, and runs the listed strategies from the identical start state with
//! the same seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use fetchsim_core::mission::{
    format_mmss, run_mission, Detected, MissionConfig, MissionReport,
};
use fetchsim_core::nav::{idealized_full_overlap_saving, scan_duration, DurationModel};
use fetchsim_core::percept::PerceptionNoise;
use fetchsim_core::strategy::{manual_locations, ProbabilityTable, Strategy};
use fetchsim_core::world::{build_world, ScenarioDoc, ScenarioError, WorldModel};

pub mod report;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid experiment file: {0}")]
    Spec(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("mission failed: {0}")]
    Mission(String),
}

/// One test of the experiment: both strategies run from the same start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    /// Object to search for; must exist in the scenario.
    pub object: String,
    /// Optional placement override: move the object onto this furniture.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_on: Option<String>,
    /// Optional explicit placement position (inside the footprint).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_at: Option<[f64; 2]>,
    /// Robot start pose for both runs.
    pub start: [f64; 3],
    /// Human-readable start label for the table (defaults to coordinates).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_label: Option<String>,
    /// Where the object is, for the table's location column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_label: Option<String>,
    /// Strategies to run; defaults to both.
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    /// Per-run noise override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<PerceptionNoise>,
    #[serde(default)]
    pub concurrent_scan: bool,
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::Manual, Strategy::Generated]
}

/// The experiment document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: PathBuf,
    pub runs: Vec<RunSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub durations: Option<DurationModel>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut spec: ExperimentSpec =
            serde_json::from_str(&text).map_err(|e| HarnessError::Spec(e.to_string()))?;
        // The scenario path is relative to the experiment file.
        if spec.scenario.is_relative() {
            if let Some(dir) = path.parent() {
                spec.scenario = dir.join(&spec.scenario);
            }
        }
        Ok(spec)
    }
}

/// One row of the comparison: P is the pre-defined (manual) strategy, S the
/// segmentation-based (generated) one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub object: String,
    pub start: String,
    pub location: String,
    pub seed: u64,
    pub detected_p: Option<Detected>,
    pub detected_s: Option<Detected>,
    pub duration_p_s: Option<f64>,
    pub duration_s_s: Option<f64>,
    pub positions_p: Option<usize>,
    pub positions_s: Option<usize>,
}

/// Timing summary of the scan pipeline, reported alongside every
/// comparison: the sequential per-room scan cost, the pipelined one, the
/// pipeline saving, and the idealized full-overlap saving. The two savings
/// differ because the pipeline still exposes the first rotation step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTimingReport {
    pub steps: usize,
    pub sequential_s: f64,
    pub concurrent_s: f64,
    pub pipeline_saving_s: f64,
    pub idealized_full_overlap_saving_s: f64,
}

impl ScanTimingReport {
    pub fn for_model(model: &DurationModel) -> Self {
        let steps = fetchsim_core::mission::SCAN_STEPS;
        let sequential_s = scan_duration(steps, model, false);
        let concurrent_s = scan_duration(steps, model, true);
        ScanTimingReport {
            steps,
            sequential_s,
            concurrent_s,
            pipeline_saving_s: sequential_s - concurrent_s,
            idealized_full_overlap_saving_s: idealized_full_overlap_saving(steps, model),
        }
    }
}

/// The assembled experiment result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub scan_timing: ScanTimingReport,
}

/// A finished single run, kept for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub table: ComparisonTable,
    pub reports: Vec<MissionReport>,
}

fn world_for_run(doc: &ScenarioDoc, run: &RunSpec) -> Result<WorldModel, HarnessError> {
    let mut value = serde_json::to_value(doc).map_err(|e| HarnessError::Spec(e.to_string()))?;
    value["robot"]["x"] = run.start[0].into();
    value["robot"]["y"] = run.start[1].into();
    value["robot"]["yaw"] = run.start[2].into();
    if run.place_on.is_some() || run.place_at.is_some() {
        let objects = value["objects"]
            .as_array_mut()
            .ok_or_else(|| HarnessError::Spec("scenario has no objects".into()))?;
        let obj = objects
            .iter_mut()
            .find(|o| o["name"] == run.object.as_str())
            .ok_or_else(|| {
                HarnessError::Spec(format!("object `{}` not in scenario", run.object))
            })?;
        if let Some(on) = &run.place_on {
            obj["on"] = on.as_str().into();
            obj.as_object_mut().unwrap().remove("z");
        }
        if let Some([x, y]) = run.place_at {
            obj["x"] = x.into();
            obj["y"] = y.into();
        } else if let Some(on) = &run.place_on {
            // Default to the footprint centroid of the new support.
            let furn = doc
                .furniture
                .iter()
                .find(|f| &f.id == on)
                .ok_or_else(|| HarnessError::Spec(format!("furniture `{on}` not in scenario")))?;
            let n = furn.footprint.len() as f64;
            let (sx, sy) = furn
                .footprint
                .iter()
                .fold((0.0, 0.0), |(sx, sy), [x, y]| (sx + x, sy + y));
            obj["x"] = (sx / n).into();
            obj["y"] = (sy / n).into();
        }
    }
    let doc: ScenarioDoc =
        serde_json::from_value(value).map_err(|e| HarnessError::Spec(e.to_string()))?;
    Ok(build_world(doc)?)
}

/// Run every test of the spec with every seed; both strategies start from
/// the identical world state and seed. Rows are ordered by (test, seed).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, HarnessError> {
    let text = std::fs::read_to_string(&spec.scenario).map_err(|source| HarnessError::Io {
        path: spec.scenario.clone(),
        source,
    })?;
    let base: ScenarioDoc =
        serde_json::from_str(&text).map_err(|e| HarnessError::Spec(e.to_string()))?;
    let durations = spec.durations.unwrap_or_default();

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for run in &spec.runs {
        for &seed in &spec.seeds {
            let world = world_for_run(&base, run)?;
            if world.object_by_name(&run.object).is_none() {
                return Err(HarnessError::Spec(format!(
                    "object `{}` not in scenario",
                    run.object
                )));
            }
            let annotations = manual_locations(&world);
            let mut by_strategy: BTreeMap<&'static str, MissionReport> = BTreeMap::new();
            for &strategy in &run.strategies {
                let mut config = MissionConfig::new(run.object.clone(), strategy);
                config.seed = seed;
                config.durations = durations;
                config.concurrent_scan = run.concurrent_scan;
                if let Some(noise) = &run.noise {
                    config.noise = noise.clone();
                }
                let anns = if strategy == Strategy::Manual {
                    annotations.clone()
                } else {
                    Vec::new()
                };
                let mut table = ProbabilityTable::default();
                let report = run_mission(&config, &world, &anns, &mut table)
                    .map_err(|e| HarnessError::Mission(e.to_string()))?;
                let key = match strategy {
                    Strategy::Manual => "p",
                    Strategy::Generated => "s",
                };
                by_strategy.insert(key, report.clone());
                reports.push(report);
            }
            rows.push(ComparisonRow {
                object: run.object.clone(),
                start: run
                    .start_label
                    .clone()
                    .unwrap_or_else(|| format!("({}, {})", run.start[0], run.start[1])),
                location: run.location_label.clone().unwrap_or_default(),
                seed,
                detected_p: by_strategy.get("p").map(|r| r.object_detected),
                detected_s: by_strategy.get("s").map(|r| r.object_detected),
                duration_p_s: by_strategy.get("p").map(|r| r.duration_s),
                duration_s_s: by_strategy.get("s").map(|r| r.duration_s),
                positions_p: by_strategy.get("p").map(|r| r.positions_total),
                positions_s: by_strategy.get("s").map(|r| r.positions_total),
            });
        }
    }
    Ok(ExperimentOutput {
        table: ComparisonTable {
            rows,
            scan_timing: ScanTimingReport::for_model(&durations),
        },
        reports,
    })
}

/// `mm:ss` or `-` for a missing value.
pub fn fmt_duration(d: Option<f64>) -> String {
    d.map(format_mmss).unwrap_or_else(|| "-".to_string())
}

pub fn fmt_detected(d: Option<Detected>) -> String {
    d.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string())
}
