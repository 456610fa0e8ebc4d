//! Global fuzzing stage: turn per-keypoint (pass, priority) parameters into a
//! visit strategy. Priority is descending (higher visits earlier) and ties
//! fall back to keypoint id ascending, so the mapping from parameters to
//! strategy is a pure function with no hidden state.

use std::cmp::Reverse;

use crate::error::Error;
use crate::playstyle::GlobalParams;
use crate::world::{Keypoint, WorldMap};

/// Ordered list of keypoints a scene will try to visit. May be empty when
/// every keypoint was skipped; an empty strategy yields an immediate-pass
/// scene with no route points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Strategy(Vec<Keypoint>);

impl Strategy {
    pub fn keypoints(&self) -> &[Keypoint] {
        &self.0
    }

    pub fn ids(&self) -> Vec<u32> {
        self.0.iter().map(|kp| kp.id).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of inter-keypoint segments, i.e. `max(len - 1, 0)`.
    pub fn segment_count(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

/// Selects the keypoints with `pass` set and orders them by descending
/// priority, keypoint id ascending on ties. `params[i]` pairs with keypoint
/// id `i + 1`; the lengths must match.
pub fn determine_strategy(params: &[GlobalParams], map: &WorldMap) -> Result<Strategy, Error> {
    let keypoints = map.keypoints();
    if params.len() != keypoints.len() {
        return Err(Error::Config(format!(
            "got {} parameter entries for {} keypoints",
            params.len(),
            keypoints.len()
        )));
    }
    let mut picked: Vec<(&Keypoint, u32)> = keypoints
        .iter()
        .zip(params)
        .filter(|(_, gp)| gp.pass)
        .map(|(kp, gp)| (kp, gp.priority))
        .collect();
    picked.sort_by_key(|(kp, priority)| (Reverse(*priority), kp.id));
    Ok(Strategy(picked.into_iter().map(|(kp, _)| *kp).collect()))
}
