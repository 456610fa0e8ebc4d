//! World model: a rectangular ground plane with keypoints, solid obstacles and
//! stuck regions. Everything downstream (sampling, routing, simulation) works
//! in this coordinate space, so the conventions live here: `x` runs east, `z`
//! runs north, boxes are axis-aligned and closed, and "forward" is a unit
//! vector on the plane.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Ground-plane position (or displacement) in world units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub x: f64,
    pub z: f64,
}

impl Coordinate {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn dot(self, other: Coordinate) -> f64 {
        self.x * other.x + self.z * other.z
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.z)
    }

    pub fn distance(self, other: Coordinate) -> f64 {
        (other - self).length()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Coordinate> {
        let len = self.length();
        if len == 0.0 {
            None
        } else {
            Some(Coordinate::new(self.x / len, self.z / len))
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.z.is_finite()
    }
}

impl Add for Coordinate {
    type Output = Coordinate;
    fn add(self, rhs: Coordinate) -> Coordinate {
        Coordinate::new(self.x + rhs.x, self.z + rhs.z)
    }
}

impl Sub for Coordinate {
    type Output = Coordinate;
    fn sub(self, rhs: Coordinate) -> Coordinate {
        Coordinate::new(self.x - rhs.x, self.z - rhs.z)
    }
}

impl Mul<f64> for Coordinate {
    type Output = Coordinate;
    fn mul(self, rhs: f64) -> Coordinate {
        Coordinate::new(self.x * rhs, self.z * rhs)
    }
}

/// Quarter-plane selector relative to a facing direction. Numbering follows
/// the parameter encoding used by play styles: 1 front-right, 2 front-left,
/// 3 back-left, 4 back-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    FrontRight,
    FrontLeft,
    BackLeft,
    BackRight,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::FrontRight,
        Quadrant::FrontLeft,
        Quadrant::BackLeft,
        Quadrant::BackRight,
    ];

    pub fn from_number(n: u8) -> Option<Quadrant> {
        match n {
            1 => Some(Quadrant::FrontRight),
            2 => Some(Quadrant::FrontLeft),
            3 => Some(Quadrant::BackLeft),
            4 => Some(Quadrant::BackRight),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Quadrant::FrontRight => 1,
            Quadrant::FrontLeft => 2,
            Quadrant::BackLeft => 3,
            Quadrant::BackRight => 4,
        }
    }
}

/// Closed axis-aligned box: both faces belong to the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAlignedBox {
    pub min: Coordinate,
    pub max: Coordinate,
}

impl AxisAlignedBox {
    pub const fn new(min: Coordinate, max: Coordinate) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Coordinate) -> bool {
        point_in_box(self, p)
    }
}

/// Closed-interval containment on both axes.
pub fn point_in_box(bounds: &AxisAlignedBox, p: Coordinate) -> bool {
    p.x >= bounds.min.x && p.x <= bounds.max.x && p.z >= bounds.min.z && p.z <= bounds.max.z
}

/// Named map location the player is expected to visit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub id: u32,
    pub location: Coordinate,
}

/// Indexed trap area: a character whose position falls inside the box stops
/// moving for the rest of the scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StuckRegion {
    pub id: u32,
    pub bounds: AxisAlignedBox,
}

/// Validated world description. Construction canonicalizes keypoint order to
/// ascending id so that parameter lists pair with keypoints by index.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    width: f64,
    height: f64,
    keypoints: Vec<Keypoint>,
    obstacles: Vec<AxisAlignedBox>,
    stuck_regions: Vec<StuckRegion>,
}

impl WorldMap {
    /// Validates every structural rule and returns the map with keypoints
    /// sorted by id. Error fields name the offending entry the way it appears
    /// in a scenario file, e.g. `keypoints[0].location`.
    pub fn new(
        width: f64,
        height: f64,
        keypoints: Vec<Keypoint>,
        obstacles: Vec<AxisAlignedBox>,
        stuck_regions: Vec<StuckRegion>,
    ) -> Result<WorldMap, Error> {
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::invariant("width", format!("must be finite and positive, got {width}")));
        }
        if !height.is_finite() || height <= 0.0 {
            return Err(Error::invariant("height", format!("must be finite and positive, got {height}")));
        }

        let n = keypoints.len() as u32;
        let mut seen = vec![false; keypoints.len()];
        for (i, kp) in keypoints.iter().enumerate() {
            if kp.id < 1 || kp.id > n {
                return Err(Error::invariant(
                    format!("keypoints[{i}].id"),
                    format!("id {} outside 1..{n}", kp.id),
                ));
            }
            let slot = &mut seen[(kp.id - 1) as usize];
            if *slot {
                return Err(Error::invariant(
                    format!("keypoints[{i}].id"),
                    format!("duplicate keypoint id {}", kp.id),
                ));
            }
            *slot = true;
            if !kp.location.is_finite()
                || kp.location.x <= 0.0
                || kp.location.x >= width
                || kp.location.z <= 0.0
                || kp.location.z >= height
            {
                return Err(Error::invariant(
                    format!("keypoints[{i}].location"),
                    format!(
                        "({}, {}) is not strictly inside the {width} x {height} map",
                        kp.location.x, kp.location.z
                    ),
                ));
            }
        }

        for (i, b) in obstacles.iter().enumerate() {
            validate_box(b, &format!("obstacles[{i}]"))?;
        }
        let mut region_ids = std::collections::BTreeSet::new();
        for (i, r) in stuck_regions.iter().enumerate() {
            validate_box(&r.bounds, &format!("stuck_regions[{i}]"))?;
            if !region_ids.insert(r.id) {
                return Err(Error::invariant(
                    format!("stuck_regions[{i}].id"),
                    format!("duplicate stuck region id {}", r.id),
                ));
            }
        }

        for (i, kp) in keypoints.iter().enumerate() {
            if let Some(j) = obstacles.iter().position(|b| b.contains(kp.location)) {
                return Err(Error::invariant(
                    format!("keypoints[{i}].location"),
                    format!("keypoint {} lies inside obstacles[{j}]", kp.id),
                ));
            }
            if let Some(j) = stuck_regions.iter().position(|r| r.bounds.contains(kp.location)) {
                return Err(Error::invariant(
                    format!("keypoints[{i}].location"),
                    format!("keypoint {} lies inside stuck_regions[{j}]", kp.id),
                ));
            }
        }

        let mut keypoints = keypoints;
        keypoints.sort_by_key(|kp| kp.id);
        Ok(WorldMap {
            width,
            height,
            keypoints,
            obstacles,
            stuck_regions,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Keypoints in ascending id order; index `i` holds id `i + 1`.
    pub fn keypoints(&self) -> &[Keypoint] {
        &self.keypoints
    }

    pub fn keypoint_count(&self) -> u32 {
        self.keypoints.len() as u32
    }

    pub fn obstacles(&self) -> &[AxisAlignedBox] {
        &self.obstacles
    }

    pub fn stuck_regions(&self) -> &[StuckRegion] {
        &self.stuck_regions
    }

    pub fn center(&self) -> Coordinate {
        Coordinate::new(self.width / 2.0, self.height / 2.0)
    }

    /// Closed-bounds containment: the map edge itself counts as inside.
    pub fn contains(&self, p: Coordinate) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.z >= 0.0 && p.z <= self.height
    }

    pub fn clamp(&self, p: Coordinate) -> Coordinate {
        Coordinate::new(p.x.clamp(0.0, self.width), p.z.clamp(0.0, self.height))
    }

    /// Id of the first stuck region (in file order) containing `p`.
    pub fn stuck_region_at(&self, p: Coordinate) -> Option<u32> {
        self.stuck_regions
            .iter()
            .find(|r| r.bounds.contains(p))
            .map(|r| r.id)
    }
}

fn validate_box(b: &AxisAlignedBox, field: &str) -> Result<(), Error> {
    if !b.min.is_finite() || !b.max.is_finite() {
        return Err(Error::invariant(field, "box corners must be finite"));
    }
    if b.min.x >= b.max.x || b.min.z >= b.max.z {
        return Err(Error::invariant(
            field,
            format!(
                "min ({}, {}) must be strictly below max ({}, {}) on both axes",
                b.min.x, b.min.z, b.max.x, b.max.z
            ),
        ));
    }
    Ok(())
}

/// Distance from `p` to the nearest map edge. Errors when `p` is outside the
/// map; strictly interior points always yield a positive distance.
pub fn min_edge_distance(map: &WorldMap, p: Coordinate) -> Result<f64, Error> {
    if !map.contains(p) {
        return Err(Error::Config(format!(
            "point ({}, {}) is outside the {} x {} map",
            p.x,
            p.z,
            map.width(),
            map.height()
        )));
    }
    Ok(p.x.min(map.width() - p.x).min(p.z).min(map.height() - p.z))
}

/// Whether `p` falls in the given quarter-plane around `origin` when facing
/// `forward`. Sectors are closed: a point on the boundary between two
/// quadrants belongs to both. "Right" is `forward` rotated 90 degrees
/// clockwise (for forward (0, 1), right is (1, 0)).
pub fn quadrant_contains(
    origin: Coordinate,
    forward: Coordinate,
    quadrant: Quadrant,
    p: Coordinate,
) -> bool {
    debug_assert!(
        (forward.length() - 1.0).abs() < 1e-9,
        "forward must be a unit vector"
    );
    let right = Coordinate::new(forward.z, -forward.x);
    let d = p - origin;
    let f = forward.dot(d);
    let r = right.dot(d);
    match quadrant {
        Quadrant::FrontRight => f >= 0.0 && r >= 0.0,
        Quadrant::FrontLeft => f >= 0.0 && r <= 0.0,
        Quadrant::BackLeft => f <= 0.0 && r <= 0.0,
        Quadrant::BackRight => f <= 0.0 && r >= 0.0,
    }
}
