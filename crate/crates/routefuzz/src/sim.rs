//! Deterministic headless scene simulator.
//!
//! One scene walks a character frame by frame through a route: every frame it
//! advances at most `speed` toward the current target, stops dead at obstacle
//! boundaries (no sliding), and freezes permanently once its position falls
//! inside a stuck region. A windowed displacement oracle watches for that
//! freeze: if the positions of the last `stuck_window` frames stay within
//! `stuck_epsilon` of each other while targets remain, the scene fails at the
//! spot. Completing the route passes; running out of frames times out. Fail
//! is checked before Timeout when both would land on the same frame.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::route::Route;
use crate::world::{AxisAlignedBox, Coordinate, WorldMap};

/// Frame-stepped kinematics settings. `frame_rate` only converts frame
/// budgets to wall-clock time in reports; the simulation itself never
/// consults a clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub speed: f64,
    pub arrival_radius: f64,
    pub stuck_epsilon: f64,
    pub stuck_window: u32,
    pub timeout_frames: u64,
    pub frame_rate: f64,
}

impl Default for SimConfig {
    fn default() -> SimConfig {
        SimConfig {
            speed: 0.1,
            arrival_radius: 0.5,
            stuck_epsilon: 0.01,
            stuck_window: 120,
            timeout_frames: 18_000,
            frame_rate: 60.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let positive = [
            ("sim.speed", self.speed),
            ("sim.arrival_radius", self.arrival_radius),
            ("sim.stuck_epsilon", self.stuck_epsilon),
            ("sim.frame_rate", self.frame_rate),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invariant(
                    field,
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        if self.stuck_window < 2 {
            return Err(Error::invariant(
                "sim.stuck_window",
                format!("must be at least 2, got {}", self.stuck_window),
            ));
        }
        if self.timeout_frames <= self.stuck_window as u64 {
            return Err(Error::invariant(
                "sim.timeout_frames",
                format!(
                    "must exceed stuck_window {}, got {}",
                    self.stuck_window, self.timeout_frames
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Timeout,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Timeout => "timeout",
        })
    }
}

/// Result of one scene. `failure_coord` (and, when the freeze happened inside
/// an indexed stuck region, `failure_region_id`) is present exactly when the
/// verdict is Fail.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneOutcome {
    pub verdict: Verdict,
    pub failure_coord: Option<Coordinate>,
    pub failure_region_id: Option<u32>,
    pub frames_used: u64,
}

impl SceneOutcome {
    pub fn pass(frames_used: u64) -> SceneOutcome {
        SceneOutcome {
            verdict: Verdict::Pass,
            failure_coord: None,
            failure_region_id: None,
            frames_used,
        }
    }
}

/// Positions of the most recent `cap` frames plus sliding min/max trackers
/// per axis, so the displacement test is O(1) per frame in the common case.
#[derive(Debug, Clone)]
pub struct PositionWindow {
    cap: usize,
    frame: u64,
    positions: VecDeque<Coordinate>,
    min_x: VecDeque<(u64, f64)>,
    max_x: VecDeque<(u64, f64)>,
    min_z: VecDeque<(u64, f64)>,
    max_z: VecDeque<(u64, f64)>,
}

impl PositionWindow {
    pub fn new(cap: u32) -> PositionWindow {
        let cap = cap as usize;
        PositionWindow {
            cap,
            frame: 0,
            positions: VecDeque::with_capacity(cap + 1),
            min_x: VecDeque::new(),
            max_x: VecDeque::new(),
            min_z: VecDeque::new(),
            max_z: VecDeque::new(),
        }
    }

    pub fn push(&mut self, p: Coordinate) {
        let frame = self.frame;
        self.frame += 1;
        self.positions.push_back(p);
        if self.positions.len() > self.cap {
            self.positions.pop_front();
        }
        let expire = frame.saturating_sub(self.cap as u64 - 1);
        Self::track(&mut self.min_x, frame, p.x, expire, |new, old| new <= old);
        Self::track(&mut self.max_x, frame, p.x, expire, |new, old| new >= old);
        Self::track(&mut self.min_z, frame, p.z, expire, |new, old| new <= old);
        Self::track(&mut self.max_z, frame, p.z, expire, |new, old| new >= old);
    }

    fn track(
        deque: &mut VecDeque<(u64, f64)>,
        frame: u64,
        value: f64,
        expire_before: u64,
        dominates: impl Fn(f64, f64) -> bool,
    ) {
        while deque.back().is_some_and(|(_, v)| dominates(value, *v)) {
            deque.pop_back();
        }
        deque.push_back((frame, value));
        while deque.front().is_some_and(|(f, _)| *f < expire_before) {
            deque.pop_front();
        }
    }

    pub fn is_full(&self) -> bool {
        self.positions.len() == self.cap
    }

    pub fn positions(&self) -> impl Iterator<Item = Coordinate> + '_ {
        self.positions.iter().copied()
    }

    /// Per-axis extent of the window's bounding box.
    pub fn spread(&self) -> (f64, f64) {
        match (
            self.min_x.front(),
            self.max_x.front(),
            self.min_z.front(),
            self.max_z.front(),
        ) {
            (Some((_, nx)), Some((_, xx)), Some((_, nz)), Some((_, xz))) => (xx - nx, xz - nz),
            _ => (0.0, 0.0),
        }
    }

    /// True when the window is full and the maximum pairwise displacement of
    /// its positions is below `epsilon`. The bounding box settles almost
    /// every call; the exact pairwise scan only runs in the narrow band where
    /// the box diagonal and the box sides disagree about the answer.
    pub fn displacement_below(&self, epsilon: f64) -> bool {
        if !self.is_full() {
            return false;
        }
        let (dx, dz) = self.spread();
        if dx.max(dz) >= epsilon {
            return false;
        }
        if dx.hypot(dz) < epsilon {
            return true;
        }
        let mut worst: f64 = 0.0;
        let points: Vec<Coordinate> = self.positions.iter().copied().collect();
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                worst = worst.max(a.distance(*b));
            }
        }
        worst < epsilon
    }
}

/// Full simulation state for one scene.
#[derive(Debug, Clone)]
pub struct CharacterState {
    pub position: Coordinate,
    /// Index into the route of the point currently steered toward; equal to
    /// the route length once every point has been visited.
    pub target_index: usize,
    pub frames_elapsed: u64,
    pub recent_positions: PositionWindow,
}

impl CharacterState {
    pub fn new(start: Coordinate, cfg: &SimConfig) -> CharacterState {
        CharacterState {
            position: start,
            target_index: 0,
            frames_elapsed: 0,
            recent_positions: PositionWindow::new(cfg.stuck_window),
        }
    }
}

/// Advances the simulation by one frame and returns the new state. The
/// target must not already be exhausted.
pub fn step_frame(
    state: &CharacterState,
    route: &Route,
    map: &WorldMap,
    cfg: &SimConfig,
) -> CharacterState {
    let mut next = state.clone();
    advance(&mut next, route, map, cfg);
    next
}

fn advance(state: &mut CharacterState, route: &Route, map: &WorldMap, cfg: &SimConfig) {
    assert!(
        state.target_index < route.len(),
        "step_frame requires an unvisited target"
    );
    let target = route.points()[state.target_index].location;
    let pos = state.position;

    let proposed = if map.stuck_region_at(pos).is_some() {
        // Trapped: the region swallowed the character on an earlier frame.
        pos
    } else {
        let to_target = target - pos;
        let dist = to_target.length();
        let unclipped = if dist <= cfg.speed {
            target
        } else {
            pos + to_target * (cfg.speed / dist)
        };
        clip_motion(pos, unclipped, map)
    };

    state.position = proposed;
    if proposed.distance(target) <= cfg.arrival_radius {
        state.target_index += 1;
    }
    state.frames_elapsed += 1;
    state.recent_positions.push(proposed);
}

/// Stops the motion segment at the first obstacle boundary it would cross.
/// Touching a face tangentially (including ending a step exactly on one) is
/// allowed; spending any positive time inside the closed box is not.
fn clip_motion(from: Coordinate, to: Coordinate, map: &WorldMap) -> Coordinate {
    let mut stop: Option<f64> = None;
    for obstacle in map.obstacles() {
        if let Some(t) = entry_time(from, to, obstacle) {
            stop = Some(stop.map_or(t, |s: f64| s.min(t)));
        }
    }
    match stop {
        None => to,
        Some(t) => from + (to - from) * t,
    }
}

/// Parameter t in [0, 1) at which the segment starts penetrating the closed
/// box, or None when it misses or only grazes the boundary for an instant.
fn entry_time(from: Coordinate, to: Coordinate, b: &AxisAlignedBox) -> Option<f64> {
    let span_x = axis_span(from.x, to.x - from.x, b.min.x, b.max.x)?;
    let span_z = axis_span(from.z, to.z - from.z, b.min.z, b.max.z)?;
    let lo = span_x.0.max(span_z.0).max(0.0);
    let hi = span_x.1.min(span_z.1).min(1.0);
    (lo < hi).then_some(lo)
}

fn axis_span(p: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d == 0.0 {
        if p < lo || p > hi {
            None
        } else {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        }
    } else {
        let t1 = (lo - p) / d;
        let t2 = (hi - p) / d;
        Some((t1.min(t2), t1.max(t2)))
    }
}

/// Runs one scene to its verdict. An empty route passes immediately with
/// zero frames used.
pub fn execute_scene(
    route: &Route,
    map: &WorldMap,
    cfg: &SimConfig,
    start: Coordinate,
) -> SceneOutcome {
    if route.is_empty() {
        return SceneOutcome::pass(0);
    }
    let mut state = CharacterState::new(start, cfg);
    loop {
        advance(&mut state, route, map, cfg);
        if state.target_index >= route.len() {
            return SceneOutcome::pass(state.frames_elapsed);
        }
        if state.recent_positions.displacement_below(cfg.stuck_epsilon) {
            return SceneOutcome {
                verdict: Verdict::Fail,
                failure_coord: Some(state.position),
                failure_region_id: map.stuck_region_at(state.position),
                frames_used: state.frames_elapsed,
            };
        }
        if state.frames_elapsed >= cfg.timeout_frames {
            return SceneOutcome {
                verdict: Verdict::Timeout,
                failure_coord: None,
                failure_region_id: None,
                frames_used: state.frames_elapsed,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::route::{RoutePoint, RoutePointKind};
    use crate::world::{Keypoint, StuckRegion};

    fn bare_map(obstacles: Vec<AxisAlignedBox>, regions: Vec<StuckRegion>) -> WorldMap {
        WorldMap::new(
            1000.0,
            1000.0,
            vec![Keypoint { id: 1, location: Coordinate::new(500.0, 500.0) }],
            obstacles,
            regions,
        )
        .unwrap()
    }

    fn route_through(points: &[(f64, f64)]) -> Route {
        Route::from_points(
            points
                .iter()
                .enumerate()
                .map(|(i, (x, z))| RoutePoint {
                    kind: RoutePointKind::Waypoint(i as u32 + 1),
                    location: Coordinate::new(*x, *z),
                })
                .collect(),
        )
    }

    fn unit_cfg() -> SimConfig {
        SimConfig {
            speed: 1.0,
            arrival_radius: 0.5,
            stuck_epsilon: 0.01,
            stuck_window: 10,
            timeout_frames: 1000,
            frame_rate: 60.0,
        }
    }

    #[test]
    fn step_moves_at_speed_toward_the_target() {
        let map = bare_map(vec![], vec![]);
        let route = route_through(&[(510.0, 500.0)]);
        let cfg = unit_cfg();
        let state = CharacterState::new(Coordinate::new(500.0, 500.0), &cfg);
        let next = step_frame(&state, &route, &map, &cfg);
        assert_eq!(next.position, Coordinate::new(501.0, 500.0));
        assert_eq!(next.frames_elapsed, 1);
        assert_eq!(next.target_index, 0);
    }

    #[test]
    fn arrival_radius_advances_the_target() {
        let map = bare_map(vec![], vec![]);
        let route = route_through(&[(502.0, 500.0), (502.0, 510.0)]);
        let cfg = unit_cfg();
        let mut state = CharacterState::new(Coordinate::new(500.0, 500.0), &cfg);
        state = step_frame(&state, &route, &map, &cfg);
        assert_eq!(state.target_index, 0);
        state = step_frame(&state, &route, &map, &cfg);
        // Lands exactly on the target, well within arrival radius.
        assert_eq!(state.target_index, 1);
    }

    #[test]
    fn motion_stops_at_the_obstacle_boundary() {
        let map = bare_map(
            vec![AxisAlignedBox::new(Coordinate::new(502.0, 499.0), Coordinate::new(503.0, 501.0))],
            vec![],
        );
        let route = route_through(&[(510.0, 500.0)]);
        let cfg = unit_cfg();
        let mut state = CharacterState::new(Coordinate::new(500.0, 500.0), &cfg);
        for _ in 0..3 {
            state = step_frame(&state, &route, &map, &cfg);
        }
        assert_eq!(state.position, Coordinate::new(502.0, 500.0));
        // Pinned there for good: the next step would enter the box.
        for _ in 0..5 {
            state = step_frame(&state, &route, &map, &cfg);
            assert_eq!(state.position, Coordinate::new(502.0, 500.0));
        }
    }

    #[test]
    fn fast_motion_cannot_tunnel_through_a_thin_box() {
        let map = bare_map(
            vec![AxisAlignedBox::new(Coordinate::new(504.0, 499.0), Coordinate::new(504.5, 501.0))],
            vec![],
        );
        let route = route_through(&[(520.0, 500.0)]);
        let cfg = SimConfig { speed: 10.0, ..unit_cfg() };
        let mut state = CharacterState::new(Coordinate::new(500.0, 500.0), &cfg);
        state = step_frame(&state, &route, &map, &cfg);
        assert_eq!(state.position, Coordinate::new(504.0, 500.0));
    }

    #[test]
    fn moving_away_from_a_touched_face_is_free() {
        let map = bare_map(
            vec![AxisAlignedBox::new(Coordinate::new(502.0, 499.0), Coordinate::new(503.0, 501.0))],
            vec![],
        );
        // Start exactly on the western face, target back to the west.
        let route = route_through(&[(500.0, 500.0)]);
        let cfg = unit_cfg();
        let mut state = CharacterState::new(Coordinate::new(502.0, 500.0), &cfg);
        state = step_frame(&state, &route, &map, &cfg);
        assert_eq!(state.position, Coordinate::new(501.0, 500.0));
    }

    #[test]
    fn stuck_region_traps_and_fails_with_its_id() {
        let region = StuckRegion {
            id: 7,
            bounds: AxisAlignedBox::new(Coordinate::new(504.0, 498.0), Coordinate::new(508.0, 502.0)),
        };
        let map = bare_map(vec![], vec![region]);
        let route = route_through(&[(520.0, 500.0)]);
        let cfg = unit_cfg();
        let outcome = execute_scene(&route, &map, &cfg, Coordinate::new(500.0, 500.0));
        assert_eq!(outcome.verdict, Verdict::Fail);
        assert_eq!(outcome.failure_region_id, Some(7));
        let coord = outcome.failure_coord.unwrap();
        assert!(region.bounds.contains(coord), "{coord:?}");
        // Freeze happens once inside, detection after the window fills.
        assert!(outcome.frames_used >= cfg.stuck_window as u64);
    }

    #[test]
    fn blocked_path_fails_without_a_region_id() {
        let map = bare_map(
            vec![AxisAlignedBox::new(Coordinate::new(504.0, 490.0), Coordinate::new(506.0, 510.0))],
            vec![],
        );
        let route = route_through(&[(520.0, 500.0)]);
        let cfg = unit_cfg();
        let outcome = execute_scene(&route, &map, &cfg, Coordinate::new(500.0, 500.0));
        assert_eq!(outcome.verdict, Verdict::Fail);
        assert_eq!(outcome.failure_region_id, None);
        assert!(outcome.failure_coord.is_some());
    }

    #[test]
    fn empty_route_passes_with_zero_frames() {
        let map = bare_map(vec![], vec![]);
        let outcome = execute_scene(&Route::from_points(vec![]), &map, &unit_cfg(), map.center());
        assert_eq!(outcome.verdict, Verdict::Pass);
        assert_eq!(outcome.frames_used, 0);
        assert_eq!(outcome.failure_coord, None);
    }

    #[test]
    fn too_long_route_times_out_exactly_at_the_limit() {
        let map = bare_map(vec![], vec![]);
        // 900 units away at speed 1 with timeout 300: never arrives, never stalls.
        let route = route_through(&[(500.0, 990.0), (10.0, 990.0)]);
        let cfg = SimConfig { timeout_frames: 300, ..unit_cfg() };
        let outcome = execute_scene(&route, &map, &cfg, Coordinate::new(500.0, 100.0));
        assert_eq!(outcome.verdict, Verdict::Timeout);
        assert_eq!(outcome.frames_used, 300);
        assert_eq!(outcome.failure_coord, None);
    }

    #[test]
    fn pass_frames_track_path_length() {
        let map = bare_map(vec![], vec![]);
        let route = route_through(&[(500.0, 600.0)]);
        let cfg = unit_cfg();
        let outcome = execute_scene(&route, &map, &cfg, Coordinate::new(500.0, 500.0));
        assert_eq!(outcome.verdict, Verdict::Pass);
        // 100 units at speed 1, minus the arrival radius, plus the arrival frame.
        assert!((99..=101).contains(&outcome.frames_used), "{}", outcome.frames_used);
    }

    #[test]
    fn window_displacement_tracks_min_and_max() {
        let mut w = PositionWindow::new(4);
        for i in 0..4 {
            w.push(Coordinate::new(i as f64, 0.0));
        }
        assert!(w.is_full());
        assert_eq!(w.spread(), (3.0, 0.0));
        assert!(!w.displacement_below(1.0));
        // Window slides: four identical pushes leave zero spread.
        for _ in 0..4 {
            w.push(Coordinate::new(9.0, 9.0));
        }
        assert_eq!(w.spread(), (0.0, 0.0));
        assert!(w.displacement_below(1e-12));
    }

    #[test]
    fn displacement_uses_true_pairwise_distance_in_the_ambiguous_band() {
        // Spread (3, 4) has diagonal 5 but true max pairwise distance 4.243:
        // one point at each bbox corner is absent.
        let mut w = PositionWindow::new(3);
        w.push(Coordinate::new(0.0, 0.0));
        w.push(Coordinate::new(3.0, 3.0));
        w.push(Coordinate::new(0.0, 4.0));
        assert!(w.is_full());
        assert!(!w.displacement_below(4.2));
        assert!(w.displacement_below(4.5));
        assert!(!w.displacement_below(3.9));
    }

    proptest! {
        // On an empty map the character never leaves the map and always
        // reaches a verdict within the timeout.
        #[test]
        fn scenes_terminate_and_stay_in_bounds(
            tx in 1.0f64..999.0,
            tz in 1.0f64..999.0,
            speed in 0.1f64..20.0,
        ) {
            let map = bare_map(vec![], vec![]);
            let route = route_through(&[(tx, tz)]);
            let cfg = SimConfig { speed, timeout_frames: 100_000, ..unit_cfg() };
            let start = Coordinate::new(500.0, 500.0);
            let outcome = execute_scene(&route, &map, &cfg, start);
            prop_assert_eq!(outcome.verdict, Verdict::Pass);
            let bound = (start.distance(Coordinate::new(tx, tz)) / speed).ceil() as u64 + 2;
            prop_assert!(outcome.frames_used <= bound);
        }

        #[test]
        fn fail_outcomes_always_carry_a_coordinate(
            ox in 520.0f64..700.0,
            width in 2.0f64..30.0,
        ) {
            let map = bare_map(
                vec![AxisAlignedBox::new(
                    Coordinate::new(ox, 400.0),
                    Coordinate::new(ox + width, 600.0),
                )],
                vec![],
            );
            let route = route_through(&[(900.0, 500.0)]);
            let outcome = execute_scene(&route, &map, &unit_cfg(), Coordinate::new(500.0, 500.0));
            prop_assert_eq!(outcome.verdict, Verdict::Fail);
            prop_assert!(outcome.failure_coord.is_some());
        }
    }
}
