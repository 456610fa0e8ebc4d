//! Two-stage route fuzzer for open-world game maps.
//!
//! The tool hunts for places where a player character gets permanently stuck.
//! It alternates two mutation stages: a global stage that resamples *which*
//! keypoints a scene visits and in what order, and a local stage that
//! resamples the waypoints woven between them. A deterministic headless
//! simulator walks each route frame by frame and a windowed displacement
//! oracle turns freezes into Fail verdicts; the campaign loop compares the
//! two most recent verdicts to decide whether the next scene refreshes both
//! stages or only the waypoints.
//!
//! Everything is reproducible: a campaign is a pure function of
//! `(seed, play style, scenario, frame budget)`.

pub mod campaign;
pub mod cli;
pub mod error;
pub mod io;
pub mod playstyle;
pub mod route;
pub mod sim;
pub mod strategy;
pub mod world;

pub use campaign::{
    dedupe_failures, next_fuzz_kind, run_campaign, run_campaign_with, CampaignReport,
    FailureIdentity, FrameSimulator, FuzzKind, SceneExecutor, SceneRecord, VerdictCounts,
};
pub use error::Error;
pub use io::{load_scenario, load_style, write_report, write_scenario, Scenario};
pub use playstyle::{
    sample_global, sample_local, Categorical, GlobalParams, LocalParams, PlayStyle,
    PriorityWeights, RngStream,
};
pub use route::{build_route, sample_waypoints, waypoint_region, Route, RoutePoint, RoutePointKind, WaypointRegion};
pub use sim::{execute_scene, step_frame, CharacterState, SceneOutcome, SimConfig, Verdict};
pub use strategy::{determine_strategy, Strategy};
pub use world::{
    min_edge_distance, point_in_box, quadrant_contains, AxisAlignedBox, Coordinate, Keypoint,
    Quadrant, StuckRegion, WorldMap,
};
