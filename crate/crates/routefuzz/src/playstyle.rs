//! Play styles and parameter sampling.
//!
//! A play style is a bundle of weighted categorical distributions describing
//! how a simulated player behaves: how likely they are to visit a keypoint,
//! how they prioritize visits, and how many detour waypoints they weave in,
//! how far out, and in which direction. Sampling is driven by [`RngStream`],
//! a labeled deterministic stream, so that every stage of a campaign draws
//! from its own independent sequence and a campaign is reproducible from
//! `(seed, style, scenario, budget)` alone.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::world::Quadrant;

/// Deterministic random stream keyed by `(seed, label)`. Streams with
/// different labels are statistically independent, and the value of draw `k`
/// depends only on the key and `k`, never on the platform or on how many
/// other streams exist.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: impl Into<String>) -> RngStream {
        let label = label.into();
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        RngStream {
            seed,
            label,
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    /// Child stream labeled `{parent}/{suffix}`, independent of the parent's
    /// position: deriving never consumes draws from `self`.
    pub fn derive(&self, suffix: &str) -> RngStream {
        RngStream::new(self.seed, format!("{}/{}", self.label, suffix))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform draw from [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        bits as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw; `p = 1.0` is always true, `p = 0.0` never.
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Per-keypoint strategy parameters: whether to visit at all, and with what
/// priority (higher visits earlier).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalParams {
    pub pass: bool,
    pub priority: u32,
}

/// Per-segment waypoint parameters: how many waypoints to insert, how far out
/// as a percentage of the origin's distance to the map edge, and in which
/// quarter-plane relative to the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalParams {
    pub waypoint_count: u8,
    pub distance_pct: u8,
    pub quadrant: Quadrant,
}

/// Finite weighted distribution over u32 values. Weights are normalized at
/// construction; zero-weight values are dropped so the support is exactly the
/// set of values that can be drawn.
#[derive(Debug, Clone)]
pub struct Categorical {
    values: Vec<u32>,
    weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl Categorical {
    /// Builds from (value, weight) pairs. `field` names the distribution in
    /// error messages. Duplicate values, negative or non-finite weights, and
    /// all-zero weight sets are rejected.
    pub fn new(pairs: &[(u32, f64)], field: &str) -> Result<Categorical, Error> {
        let mut sorted: Vec<(u32, f64)> = pairs.to_vec();
        sorted.sort_by_key(|(v, _)| *v);
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::invariant(
                    field,
                    format!("duplicate value {}", pair[0].0),
                ));
            }
        }
        let mut total = 0.0;
        for (v, w) in &sorted {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::invariant(
                    field,
                    format!("weight for value {v} must be finite and non-negative, got {w}"),
                ));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::invariant(field, "weights must not all be zero"));
        }

        let mut values = Vec::new();
        let mut weights = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for (v, w) in sorted {
            if w == 0.0 {
                continue;
            }
            let norm = w / total;
            acc += norm;
            values.push(v);
            weights.push(norm);
            cdf.push(acc);
        }
        // Normalized mass must reach 1 within float tolerance; pin the last
        // step so a draw of u -> 1 can never fall off the end.
        debug_assert!((acc - 1.0).abs() <= 1e-9);
        *cdf.last_mut().expect("non-empty support") = 1.0;
        Ok(Categorical { values, weights, cdf })
    }

    /// Equal weights over every value in `lo..=hi`.
    pub fn uniform(lo: u32, hi: u32, field: &str) -> Result<Categorical, Error> {
        let pairs: Vec<(u32, f64)> = (lo..=hi).map(|v| (v, 1.0)).collect();
        Categorical::new(&pairs, field)
    }

    /// The same distribution with support cut down to values <= `max`,
    /// renormalized. Errors when nothing remains.
    pub fn restricted_to_max(&self, max: u32, field: &str) -> Result<Categorical, Error> {
        let pairs: Vec<(u32, f64)> = self
            .values
            .iter()
            .zip(&self.weights)
            .filter(|(v, _)| **v <= max)
            .map(|(v, w)| (*v, *w))
            .collect();
        if pairs.is_empty() {
            return Err(Error::invariant(
                field,
                format!("no values <= {max} in distribution support"),
            ));
        }
        Categorical::new(&pairs, field)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn max_value(&self) -> u32 {
        *self.values.last().expect("non-empty support")
    }

    pub fn sample(&self, rng: &mut RngStream) -> u32 {
        let u = rng.next_f64();
        let idx = self.cdf.partition_point(|&c| c <= u);
        self.values[idx.min(self.values.len() - 1)]
    }
}

/// Keypoint priority weights: either uniform over whatever 0..=n the map
/// allows, or an explicit table restricted to 0..=n at sampling time.
#[derive(Debug, Clone)]
pub enum PriorityWeights {
    Uniform,
    Table(Vec<(u32, f64)>),
}

impl PriorityWeights {
    fn resolve(&self, n: u32) -> Result<Categorical, Error> {
        match self {
            PriorityWeights::Uniform => Categorical::uniform(0, n, "priority_weights"),
            PriorityWeights::Table(pairs) => {
                Categorical::new(pairs, "priority_weights")?
                    .restricted_to_max(n, "priority_weights")
            }
        }
    }
}

/// Validated play style. See the module docs for the role of each field.
#[derive(Debug, Clone)]
pub struct PlayStyle {
    name: String,
    pass_probability: f64,
    priority_weights: PriorityWeights,
    waypoint_count_weights: Categorical,
    distance_pct_weights: Categorical,
    quadrant_weights: [f64; 4],
    quadrant_cdf: [f64; 4],
}

impl PlayStyle {
    pub fn new(
        name: impl Into<String>,
        pass_probability: f64,
        priority_weights: PriorityWeights,
        waypoint_count_weights: &[(u32, f64)],
        distance_pct_weights: &[(u32, f64)],
        quadrant_weights: [f64; 4],
    ) -> Result<PlayStyle, Error> {
        if !pass_probability.is_finite() || !(0.0..=1.0).contains(&pass_probability) {
            return Err(Error::invariant(
                "pass_probability",
                format!("must lie in 0..=1, got {pass_probability}"),
            ));
        }
        if let PriorityWeights::Table(pairs) = &priority_weights {
            // Build once to validate weights; the table is re-restricted per map.
            Categorical::new(pairs, "priority_weights")?;
        }
        let waypoint_count_weights = Categorical::new(waypoint_count_weights, "waypoint_count_weights")?;
        if waypoint_count_weights.max_value() > 99 {
            return Err(Error::invariant(
                "waypoint_count_weights",
                format!("values must lie in 0..=99, got {}", waypoint_count_weights.max_value()),
            ));
        }
        let distance_pct_weights = Categorical::new(distance_pct_weights, "distance_pct_weights")?;
        if distance_pct_weights.max_value() > 99 {
            return Err(Error::invariant(
                "distance_pct_weights",
                format!("values must lie in 0..=99, got {}", distance_pct_weights.max_value()),
            ));
        }

        let mut total = 0.0;
        for (i, w) in quadrant_weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::invariant(
                    format!("quadrant_weights[{i}]"),
                    format!("must be finite and non-negative, got {w}"),
                ));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::invariant("quadrant_weights", "weights must not all be zero"));
        }
        let normalized = quadrant_weights.map(|w| w / total);
        let mut quadrant_cdf = [0.0; 4];
        let mut acc = 0.0;
        for (slot, w) in quadrant_cdf.iter_mut().zip(normalized) {
            acc += w;
            *slot = acc;
        }
        quadrant_cdf[3] = 1.0;

        Ok(PlayStyle {
            name: name.into(),
            pass_probability,
            priority_weights,
            waypoint_count_weights,
            distance_pct_weights,
            quadrant_weights: normalized,
            quadrant_cdf,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pass_probability(&self) -> f64 {
        self.pass_probability
    }

    pub fn quadrant_weights(&self) -> [f64; 4] {
        self.quadrant_weights
    }

    fn sample_quadrant(&self, rng: &mut RngStream) -> Quadrant {
        let u = rng.next_f64();
        let idx = self.quadrant_cdf.partition_point(|&c| c <= u);
        Quadrant::ALL[idx.min(3)]
    }
}

/// Draws strategy parameters for each of the `n` keypoints: one pass/skip
/// flag then one priority per keypoint, in keypoint id order.
pub fn sample_global(style: &PlayStyle, n: u32, rng: &mut RngStream) -> Result<Vec<GlobalParams>, Error> {
    if n == 0 {
        return Err(Error::Config("cannot sample strategy parameters for a map with no keypoints".into()));
    }
    let priorities = style.priority_weights.resolve(n)?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let pass = rng.next_bool(style.pass_probability);
        let priority = priorities.sample(rng);
        out.push(GlobalParams { pass, priority });
    }
    Ok(out)
}

/// Draws waypoint parameters for each route segment: count, then distance
/// percentage, then quadrant.
pub fn sample_local(
    style: &PlayStyle,
    segment_count: usize,
    rng: &mut RngStream,
) -> Result<Vec<LocalParams>, Error> {
    let mut out = Vec::with_capacity(segment_count);
    for _ in 0..segment_count {
        let waypoint_count = style.waypoint_count_weights.sample(rng) as u8;
        let distance_pct = style.distance_pct_weights.sample(rng) as u8;
        let quadrant = style.sample_quadrant(rng);
        out.push(LocalParams {
            waypoint_count,
            distance_pct,
            quadrant,
        });
    }
    Ok(out)
}
