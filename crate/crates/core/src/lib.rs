//! Deterministic household-robot simulation toolkit.
//!
//! The crate simulates a mobile service robot performing fetch-and-carry
//! object search in a multi-room flat. Two search strategies are provided
//! and can be compared against each other on the same scenario:
//!
//! * **manual** — cost-ranked, manually annotated search positions, with a
//!   learned per-object probability table,
//! * **generated** ("semantic") — search positions derived on the fly from
//!   simulated semantic segmentation of the robot's surroundings.
//!
//! Everything runs on a simulated clock inside a hierarchical concurrent
//! state-machine executive ([`hsm`]), so runs are fully deterministic and
//! replayable from a seed.

pub mod geom;
pub mod hsm;
pub mod mission;
pub mod nav;
pub mod percept;
pub mod strategy;
pub mod tablegeom;
pub mod world;

pub use geom::{Point2, Pose2, Vec2};
pub use hsm::{MachineSpec, Outcome, SimClock, Trace, Userdata};
pub use mission::{MissionConfig, MissionReport};
pub use nav::{DurationModel, Path};
pub use percept::{LabeledCloud, PerceptionNoise, SemanticLabel};
pub use strategy::{CostParams, ProbabilityTable, SearchAgenda, Strategy};
pub use tablegeom::{HeuristicParams, SearchLocation, TableCluster};
pub use world::WorldModel;
