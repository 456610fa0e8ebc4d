//! Local fuzzing stage: expand a strategy into a concrete route by inserting
//! sampled waypoints between consecutive keypoints. Each segment gets its own
//! quarter-disc sampling region anchored at the segment's first keypoint and
//! oriented along the direction of travel.

use std::f64::consts::FRAC_PI_2;

use crate::playstyle::{LocalParams, RngStream};
use crate::strategy::Strategy;
use crate::world::{min_edge_distance, quadrant_contains, Coordinate, Quadrant, WorldMap};

/// How many times a waypoint draw is retried when it lands outside the map
/// before giving up and clamping to the map bounds.
pub const RESAMPLE_LIMIT: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoutePointKind {
    /// Strategy keypoint, carrying its map id.
    Keypoint(u32),
    /// Sampled waypoint, numbered 1.. in route order.
    Waypoint(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutePoint {
    pub kind: RoutePointKind,
    pub location: Coordinate,
}

/// Ordered list of points a scene steers through: the strategy's keypoints
/// with each segment's waypoints spliced in after the segment's origin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Route(Vec<RoutePoint>);

impl Route {
    /// Wraps an explicit point list, e.g. to replay a recorded route or to
    /// build a fixture. Sampled routes come from [`build_route`].
    pub fn from_points(points: Vec<RoutePoint>) -> Route {
        Route(points)
    }

    pub fn points(&self) -> &[RoutePoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keypoint ids in route order, waypoints skipped.
    pub fn keypoint_ids(&self) -> Vec<u32> {
        self.0
            .iter()
            .filter_map(|p| match p.kind {
                RoutePointKind::Keypoint(id) => Some(id),
                RoutePointKind::Waypoint(_) => None,
            })
            .collect()
    }

    pub fn waypoint_count(&self) -> usize {
        self.0
            .iter()
            .filter(|p| matches!(p.kind, RoutePointKind::Waypoint(_)))
            .count()
    }
}

/// Sampling region for one segment: a quarter disc of `radius` around
/// `origin`, selected by `quadrant` relative to `forward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointRegion {
    pub origin: Coordinate,
    pub forward: Coordinate,
    pub radius: f64,
    pub quadrant: Quadrant,
}

impl WaypointRegion {
    pub fn contains(&self, p: Coordinate) -> bool {
        self.origin.distance(p) <= self.radius
            && quadrant_contains(self.origin, self.forward, self.quadrant, p)
    }
}

/// Region a segment's waypoints are drawn from. The radius scales the
/// origin's distance to the nearest map edge by `distance_pct`, so a 99%
/// distance from a point 10 units off the western edge reaches 9.9 units out.
/// `origin` must be inside the map and `forward` must be a unit vector.
pub fn waypoint_region(
    origin: Coordinate,
    forward: Coordinate,
    lp: &LocalParams,
    map: &WorldMap,
) -> WaypointRegion {
    let edge = min_edge_distance(map, origin).expect("waypoint region origin must be inside the map");
    WaypointRegion {
        origin,
        forward,
        radius: (lp.distance_pct as f64 / 100.0) * edge,
        quadrant: lp.quadrant,
    }
}

/// Draws `lp.waypoint_count` positions uniformly by area from the segment's
/// quarter disc. Draws falling outside the map are retried up to
/// [`RESAMPLE_LIMIT`] times, then clamped to the map bounds.
pub fn sample_waypoints(
    origin: Coordinate,
    forward: Coordinate,
    lp: &LocalParams,
    map: &WorldMap,
    rng: &mut RngStream,
) -> Vec<Coordinate> {
    let region = waypoint_region(origin, forward, lp, map);
    let (sr, sf) = match lp.quadrant {
        Quadrant::FrontRight => (1.0, 1.0),
        Quadrant::FrontLeft => (-1.0, 1.0),
        Quadrant::BackLeft => (-1.0, -1.0),
        Quadrant::BackRight => (1.0, -1.0),
    };
    let right = Coordinate::new(forward.z, -forward.x);

    let mut out = Vec::with_capacity(lp.waypoint_count as usize);
    for _ in 0..lp.waypoint_count {
        let mut chosen = None;
        for _ in 0..=RESAMPLE_LIMIT {
            // sqrt on the radial draw makes the density uniform by area
            // rather than piling up near the origin.
            let r = region.radius * rng.next_f64().sqrt();
            let theta = rng.next_f64() * FRAC_PI_2;
            let dir = right * (sr * theta.cos()) + forward * (sf * theta.sin());
            let p = origin + dir * r;
            if map.contains(p) {
                chosen = Some(p);
                break;
            }
        }
        out.push(chosen.unwrap_or_else(|| {
            let r = region.radius * rng.next_f64().sqrt();
            let theta = rng.next_f64() * FRAC_PI_2;
            let dir = right * (sr * theta.cos()) + forward * (sf * theta.sin());
            map.clamp(origin + dir * r)
        }));
    }
    out
}

/// Expands a strategy into a route. Segment `i` runs from strategy keypoint
/// `i` to keypoint `i + 1`; its waypoints use the first keypoint as origin
/// and the unit vector toward the second as forward (or (0, 1) when the two
/// coincide). The final keypoint gets no trailing waypoints, and `lps` must
/// hold exactly one entry per segment. `start` is where scene execution
/// begins; it anchors nothing here but must be inside the map.
pub fn build_route(
    strategy: &Strategy,
    lps: &[LocalParams],
    start: Coordinate,
    map: &WorldMap,
    rng: &mut RngStream,
) -> Route {
    assert_eq!(
        lps.len(),
        strategy.segment_count(),
        "one LocalParams entry per route segment"
    );
    debug_assert!(map.contains(start), "scene start must be inside the map");

    let keypoints = strategy.keypoints();
    let mut points = Vec::new();
    let mut serial = 0u32;
    for (i, kp) in keypoints.iter().enumerate() {
        points.push(RoutePoint {
            kind: RoutePointKind::Keypoint(kp.id),
            location: kp.location,
        });
        if i + 1 == keypoints.len() {
            break;
        }
        let next = keypoints[i + 1];
        let forward = (next.location - kp.location)
            .normalized()
            .unwrap_or(Coordinate::new(0.0, 1.0));
        let mut seg_rng = rng.derive(&format!("seg{i}"));
        for w in sample_waypoints(kp.location, forward, &lps[i], map, &mut seg_rng) {
            serial += 1;
            points.push(RoutePoint {
                kind: RoutePointKind::Waypoint(serial),
                location: w,
            });
        }
    }
    Route(points)
}
