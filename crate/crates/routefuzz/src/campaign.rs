//! Campaign loop: repeat scenes against a frame budget, choosing between
//! refreshing everything (strategy and waypoints) or only the waypoints based
//! on the two most recent verdicts. Equal consecutive verdicts suggest the
//! current strategy has been explored, so both stages resample; a flip means
//! the strategy is still surfacing new behavior and is kept as-is.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::playstyle::{sample_global, sample_local, GlobalParams, LocalParams, PlayStyle, RngStream};
use crate::route::{build_route, Route};
use crate::sim::{execute_scene, SceneOutcome, SimConfig, Verdict};
use crate::strategy::{determine_strategy, Strategy};
use crate::world::{Coordinate, WorldMap};

/// Which sampling stages the upcoming scene refreshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzKind {
    /// Resample strategy parameters and waypoint parameters.
    Both,
    /// Keep the previous strategy, resample only waypoint parameters.
    LocalOnly,
}

impl std::fmt::Display for FuzzKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FuzzKind::Both => "both",
            FuzzKind::LocalOnly => "local_only",
        })
    }
}

/// Schedule rule for one step: `prev` and `curr` are the verdicts of the two
/// scenes before the one being planned, oldest first. A missing `prev` (too
/// early in the campaign) defaults to Both.
pub fn next_fuzz_kind(prev: Option<Verdict>, curr: Verdict) -> FuzzKind {
    match prev {
        None => FuzzKind::Both,
        Some(p) if p == curr => FuzzKind::Both,
        Some(_) => FuzzKind::LocalOnly,
    }
}

/// Everything recorded about one executed scene.
#[derive(Debug, Clone)]
pub struct SceneRecord {
    /// 1-based scene index within the campaign.
    pub t: u64,
    pub fuzz_kind: FuzzKind,
    /// Strategy parameters in effect, re-recorded as-is for LocalOnly scenes.
    pub global_params: Vec<GlobalParams>,
    pub local_params: Vec<LocalParams>,
    pub strategy: Strategy,
    pub route: Route,
    pub outcome: SceneOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub pass: u64,
    pub fail: u64,
    pub timeout: u64,
}

impl VerdictCounts {
    pub fn bump(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Pass => self.pass += 1,
            Verdict::Fail => self.fail += 1,
            Verdict::Timeout => self.timeout += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pass + self.fail + self.timeout
    }
}

/// Full result of one campaign run.
#[derive(Debug, Clone)]
pub struct CampaignReport {
    pub scenario_id: String,
    pub style_name: String,
    pub seed: u64,
    pub frame_budget: u64,
    pub scenes: Vec<SceneRecord>,
    pub total_frames: u64,
    /// Ids of every stuck region that produced a Fail, deduplicated.
    pub detected_region_ids: BTreeSet<u32>,
    pub verdict_counts: VerdictCounts,
}

/// Deduplication key for a failure: the stuck region id when the freeze
/// happened inside an indexed region, otherwise the grid cell of the failure
/// coordinate at the given bucket size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureIdentity {
    Region(u32),
    Cell { x: i64, z: i64 },
}

impl FailureIdentity {
    pub fn from_outcome(outcome: &SceneOutcome, bucket: f64) -> Option<FailureIdentity> {
        if outcome.verdict != Verdict::Fail {
            return None;
        }
        if let Some(id) = outcome.failure_region_id {
            return Some(FailureIdentity::Region(id));
        }
        let coord = outcome
            .failure_coord
            .expect("Fail outcomes carry a coordinate");
        Some(FailureIdentity::Cell {
            x: (coord.x / bucket).floor() as i64,
            z: (coord.z / bucket).floor() as i64,
        })
    }
}

/// Collapses the Fail scenes of a campaign to distinct failure identities.
/// `bucket` is the cell size for coordinate-keyed failures and must be
/// positive.
pub fn dedupe_failures(scenes: &[SceneRecord], bucket: f64) -> BTreeSet<FailureIdentity> {
    assert!(bucket > 0.0, "bucket size must be positive");
    scenes
        .iter()
        .filter_map(|s| FailureIdentity::from_outcome(&s.outcome, bucket))
        .collect()
}

/// Runs scenes for a campaign. Swappable so tests can script verdict
/// sequences without simulating.
pub trait SceneExecutor {
    fn execute(
        &mut self,
        route: &Route,
        map: &WorldMap,
        cfg: &SimConfig,
        start: Coordinate,
    ) -> SceneOutcome;
}

/// Default executor backed by the frame-stepped simulator.
pub struct FrameSimulator;

impl SceneExecutor for FrameSimulator {
    fn execute(
        &mut self,
        route: &Route,
        map: &WorldMap,
        cfg: &SimConfig,
        start: Coordinate,
    ) -> SceneOutcome {
        execute_scene(route, map, cfg, start)
    }
}

/// Safety valve for styles that can only ever produce empty strategies
/// (e.g. pass_probability 0): after this many consecutive zero-frame scenes
/// the campaign stops instead of looping forever below its budget.
pub const IDLE_SCENE_LIMIT: u32 = 10_000;

/// Runs a fresh campaign with the real simulator. Scenes repeat until the
/// summed frames reach `frame_budget` (checked before each scene starts, so
/// the final scene may overshoot by up to one timeout). Every scene starts at
/// the map center. The whole run is a pure function of
/// `(seed, style, map, cfg, frame_budget)`.
pub fn run_campaign(
    scenario_id: &str,
    map: &WorldMap,
    style: &PlayStyle,
    cfg: &SimConfig,
    frame_budget: u64,
    seed: u64,
) -> Result<CampaignReport, Error> {
    run_campaign_with(&mut FrameSimulator, scenario_id, map, style, cfg, frame_budget, seed)
}

/// [`run_campaign`] with an explicit executor.
pub fn run_campaign_with(
    executor: &mut dyn SceneExecutor,
    scenario_id: &str,
    map: &WorldMap,
    style: &PlayStyle,
    cfg: &SimConfig,
    frame_budget: u64,
    seed: u64,
) -> Result<CampaignReport, Error> {
    cfg.validate()?;
    if frame_budget == 0 {
        return Err(Error::Config("frame_budget must be at least 1".into()));
    }
    let n = map.keypoint_count();
    if n == 0 {
        return Err(Error::Config("map has no keypoints to build strategies from".into()));
    }
    // Surface style/map mismatches (e.g. a priority table entirely above n)
    // before any scene runs.
    sample_global(style, n, &mut RngStream::new(seed, "preflight"))?;

    let start = map.center();
    let mut scenes: Vec<SceneRecord> = Vec::new();
    let mut detected: BTreeSet<u32> = BTreeSet::new();
    let mut counts = VerdictCounts::default();
    let mut total_frames: u64 = 0;

    let mut current_global: Vec<GlobalParams> = Vec::new();
    let mut current_strategy = Strategy::default();
    let mut last_verdict: Option<Verdict> = None;
    let mut second_last_verdict: Option<Verdict> = None;
    let mut idle_scenes: u32 = 0;
    let mut t: u64 = 1;

    while total_frames < frame_budget {
        let fuzz_kind = match last_verdict {
            None => FuzzKind::Both,
            Some(curr) => next_fuzz_kind(second_last_verdict, curr),
        };

        if fuzz_kind == FuzzKind::Both {
            let mut global_rng = RngStream::new(seed, format!("global/{t}"));
            current_global = sample_global(style, n, &mut global_rng)?;
            current_strategy = determine_strategy(&current_global, map)?;
        }

        let mut local_rng = RngStream::new(seed, format!("local/{t}"));
        let local_params = sample_local(style, current_strategy.segment_count(), &mut local_rng)?;

        let mut route_rng = RngStream::new(seed, format!("route/{t}"));
        let route = build_route(&current_strategy, &local_params, start, map, &mut route_rng);

        let outcome = executor.execute(&route, map, cfg, start);

        total_frames += outcome.frames_used;
        counts.bump(outcome.verdict);
        if let Some(id) = outcome.failure_region_id {
            detected.insert(id);
        }
        idle_scenes = if outcome.frames_used == 0 { idle_scenes + 1 } else { 0 };

        second_last_verdict = last_verdict;
        last_verdict = Some(outcome.verdict);
        scenes.push(SceneRecord {
            t,
            fuzz_kind,
            global_params: current_global.clone(),
            local_params,
            strategy: current_strategy.clone(),
            route,
            outcome,
        });
        t += 1;

        if idle_scenes >= IDLE_SCENE_LIMIT {
            break;
        }
    }

    Ok(CampaignReport {
        scenario_id: scenario_id.to_string(),
        style_name: style.name().to_string(),
        seed,
        frame_budget,
        scenes,
        total_frames,
        detected_region_ids: detected,
        verdict_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::playstyle::PriorityWeights;
    use crate::world::{AxisAlignedBox, Keypoint, StuckRegion};

    fn small_map() -> WorldMap {
        // The region sits on the center-to-keypoint-1 diagonal so strategies
        // that swing that way fail while others pass, keeping verdicts mixed.
        WorldMap::new(
            40.0,
            40.0,
            vec![
                Keypoint { id: 1, location: Coordinate::new(10.0, 10.0) },
                Keypoint { id: 2, location: Coordinate::new(30.0, 10.0) },
                Keypoint { id: 3, location: Coordinate::new(20.0, 30.0) },
            ],
            vec![],
            vec![StuckRegion {
                id: 1,
                bounds: AxisAlignedBox::new(Coordinate::new(12.0, 12.0), Coordinate::new(15.0, 15.0)),
            }],
        )
        .unwrap()
    }

    fn simple_style(pass_probability: f64) -> PlayStyle {
        PlayStyle::new(
            "plain",
            pass_probability,
            PriorityWeights::Uniform,
            &[(0, 1.0), (1, 1.0)],
            &[(20, 1.0), (40, 1.0)],
            [0.25, 0.25, 0.25, 0.25],
        )
        .unwrap()
    }

    fn fast_cfg() -> SimConfig {
        SimConfig {
            speed: 1.0,
            arrival_radius: 0.5,
            stuck_epsilon: 0.01,
            stuck_window: 10,
            timeout_frames: 2_000,
            frame_rate: 60.0,
        }
    }

    #[test]
    fn schedule_rule_matches_the_verdict_pair() {
        use Verdict::*;
        assert_eq!(next_fuzz_kind(Some(Pass), Pass), FuzzKind::Both);
        assert_eq!(next_fuzz_kind(Some(Fail), Fail), FuzzKind::Both);
        assert_eq!(next_fuzz_kind(Some(Pass), Fail), FuzzKind::LocalOnly);
        assert_eq!(next_fuzz_kind(Some(Timeout), Pass), FuzzKind::LocalOnly);
        assert_eq!(next_fuzz_kind(None, Fail), FuzzKind::Both);
    }

    #[test]
    fn first_two_scenes_always_refresh_both_stages() {
        let report = run_campaign("t", &small_map(), &simple_style(1.0), &fast_cfg(), 200, 1).unwrap();
        assert!(report.scenes.len() >= 2);
        assert_eq!(report.scenes[0].fuzz_kind, FuzzKind::Both);
        assert_eq!(report.scenes[1].fuzz_kind, FuzzKind::Both);
    }

    #[test]
    fn recorded_kinds_follow_the_recorded_verdicts() {
        let report =
            run_campaign("t", &small_map(), &simple_style(0.7), &fast_cfg(), 20_000, 3).unwrap();
        let verdicts: Vec<Verdict> = report.scenes.iter().map(|s| s.outcome.verdict).collect();
        for (i, scene) in report.scenes.iter().enumerate() {
            let expected = if i < 2 {
                FuzzKind::Both
            } else {
                next_fuzz_kind(Some(verdicts[i - 2]), verdicts[i - 1])
            };
            assert_eq!(scene.fuzz_kind, expected, "scene {}", scene.t);
        }
    }

    #[test]
    fn local_only_scenes_keep_the_strategy() {
        let report =
            run_campaign("t", &small_map(), &simple_style(0.6), &fast_cfg(), 30_000, 7).unwrap();
        let mut saw_local_only = false;
        for pair in report.scenes.windows(2) {
            if pair[1].fuzz_kind == FuzzKind::LocalOnly {
                saw_local_only = true;
                assert_eq!(pair[1].strategy.ids(), pair[0].strategy.ids());
                assert_eq!(pair[1].global_params, pair[0].global_params);
            }
        }
        assert!(saw_local_only, "campaign never took the LocalOnly branch");
    }

    #[test]
    fn budget_is_reached_but_not_overshot_beyond_one_timeout() {
        for seed in [1, 2, 3] {
            let budget = 10_000;
            let report =
                run_campaign("t", &small_map(), &simple_style(0.9), &fast_cfg(), budget, seed)
                    .unwrap();
            assert!(report.total_frames >= budget);
            assert!(report.total_frames < budget + fast_cfg().timeout_frames);
            let sum: u64 = report.scenes.iter().map(|s| s.outcome.frames_used).sum();
            assert_eq!(sum, report.total_frames);
        }
    }

    #[test]
    fn identical_inputs_reproduce_identical_reports() {
        let a = run_campaign("t", &small_map(), &simple_style(0.8), &fast_cfg(), 5_000, 11).unwrap();
        let b = run_campaign("t", &small_map(), &simple_style(0.8), &fast_cfg(), 5_000, 11).unwrap();
        assert_eq!(a.scenes.len(), b.scenes.len());
        assert_eq!(a.total_frames, b.total_frames);
        for (sa, sb) in a.scenes.iter().zip(&b.scenes) {
            assert_eq!(sa.route, sb.route);
            assert_eq!(sa.outcome, sb.outcome);
        }
    }

    #[test]
    fn all_skip_style_terminates_via_the_idle_guard() {
        let report = run_campaign("t", &small_map(), &simple_style(0.0), &fast_cfg(), 50, 2).unwrap();
        // Every strategy is empty, so the budget is unreachable; the guard
        // caps the campaign instead of hanging.
        assert_eq!(report.total_frames, 0);
        assert_eq!(report.scenes.len(), IDLE_SCENE_LIMIT as usize);
        assert_eq!(report.verdict_counts.pass, IDLE_SCENE_LIMIT as u64);
    }

    #[test]
    fn zero_budget_is_rejected() {
        assert!(run_campaign("t", &small_map(), &simple_style(1.0), &fast_cfg(), 0, 1).is_err());
    }

    #[test]
    fn dedupe_prefers_region_ids_over_cells() {
        let mk_scene = |outcome: SceneOutcome| SceneRecord {
            t: 1,
            fuzz_kind: FuzzKind::Both,
            global_params: vec![],
            local_params: vec![],
            strategy: Strategy::default(),
            route: Route::from_points(vec![]),
            outcome,
        };
        let fail_region = |id| SceneOutcome {
            verdict: Verdict::Fail,
            failure_coord: Some(Coordinate::new(3.7, 9.2)),
            failure_region_id: Some(id),
            frames_used: 5,
        };
        let fail_cell = |x, z| SceneOutcome {
            verdict: Verdict::Fail,
            failure_coord: Some(Coordinate::new(x, z)),
            failure_region_id: None,
            frames_used: 5,
        };
        let scenes = vec![
            mk_scene(fail_region(4)),
            mk_scene(fail_region(4)),
            mk_scene(fail_cell(2.3, 5.9)),
            mk_scene(fail_cell(2.9, 5.1)),
            mk_scene(fail_cell(12.0, 5.0)),
            mk_scene(SceneOutcome::pass(3)),
        ];
        let ids = dedupe_failures(&scenes, 1.0);
        assert_eq!(
            ids.into_iter().collect::<Vec<_>>(),
            vec![
                FailureIdentity::Region(4),
                FailureIdentity::Cell { x: 2, z: 5 },
                FailureIdentity::Cell { x: 12, z: 5 },
            ]
        );
    }

    #[test]
    fn dedupe_bucket_size_controls_cell_granularity() {
        let outcome = SceneOutcome {
            verdict: Verdict::Fail,
            failure_coord: Some(Coordinate::new(7.9, 3.2)),
            failure_region_id: None,
            frames_used: 1,
        };
        let coarse = FailureIdentity::from_outcome(&outcome, 10.0).unwrap();
        assert_eq!(coarse, FailureIdentity::Cell { x: 0, z: 0 });
        let fine = FailureIdentity::from_outcome(&outcome, 0.5).unwrap();
        assert_eq!(fine, FailureIdentity::Cell { x: 15, z: 6 });
    }
}
