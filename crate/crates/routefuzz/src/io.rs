//! File formats: scenario and play-style JSON on the way in, campaign
//! reports (events.jsonl, summary.json, scenes.csv) on the way out.
//!
//! Loading classifies every failure as io, parse (malformed JSON), schema
//! (unknown/missing fields, unsupported version) or invariant (well-formed
//! but semantically wrong, with the field path in the message). Report
//! writing is byte-deterministic except for the `generated_at` field of
//! summary.json, which is the only place a wall clock is consulted.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::campaign::{dedupe_failures, CampaignReport, FuzzKind, VerdictCounts};
use crate::error::Error;
use crate::playstyle::{PlayStyle, PriorityWeights};
use crate::sim::{SimConfig, Verdict};
use crate::world::{AxisAlignedBox, Coordinate, Keypoint, StuckRegion, WorldMap};

/// The only scenario format revision this build reads.
pub const SCHEMA_VERSION: u64 = 1;

/// A loaded scenario: the validated world plus simulation settings.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub description: String,
    pub map: WorldMap,
    pub sim: SimConfig,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    schema_version: u64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
    map: MapDoc,
    sim: SimConfig,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    width: f64,
    height: f64,
    keypoints: Vec<KeypointDoc>,
    #[serde(default)]
    obstacles: Vec<BoxDoc>,
    #[serde(default)]
    stuck_regions: Vec<RegionDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeypointDoc {
    id: u32,
    x: f64,
    z: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionDoc {
    id: u32,
    min: [f64; 2],
    max: [f64; 2],
}

impl BoxDoc {
    fn to_box(&self) -> AxisAlignedBox {
        AxisAlignedBox::new(
            Coordinate::new(self.min[0], self.min[1]),
            Coordinate::new(self.max[0], self.max[1]),
        )
    }

    fn from_box(b: &AxisAlignedBox) -> BoxDoc {
        BoxDoc {
            min: [b.min.x, b.min.z],
            max: [b.max.x, b.max.z],
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses JSON text, splitting serde's error space into parse (syntax) and
/// schema (structure) classes.
fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, Error> {
    serde_json::from_str(text).map_err(|e| {
        if e.classify() == serde_json::error::Category::Data {
            Error::Schema {
                path: path.to_path_buf(),
                message: e.to_string(),
            }
        } else {
            Error::Parse {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let text = read_to_string(path)?;

    // Check the version before structural decoding so a future-format file
    // reports "unsupported version" rather than a pile of unknown fields.
    let probe: serde_json::Value = parse_json(&text, path)?;
    match probe.get("schema_version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::SchemaVersion {
                path: path.to_path_buf(),
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: "missing or non-integer field `schema_version`".into(),
            })
        }
    }

    let doc: ScenarioDoc = parse_json(&text, path)?;
    let keypoints = doc
        .map
        .keypoints
        .iter()
        .map(|k| Keypoint {
            id: k.id,
            location: Coordinate::new(k.x, k.z),
        })
        .collect();
    let obstacles = doc.map.obstacles.iter().map(BoxDoc::to_box).collect();
    let stuck_regions = doc
        .map
        .stuck_regions
        .iter()
        .map(|r| StuckRegion {
            id: r.id,
            bounds: AxisAlignedBox::new(
                Coordinate::new(r.min[0], r.min[1]),
                Coordinate::new(r.max[0], r.max[1]),
            ),
        })
        .collect();
    let map = WorldMap::new(doc.map.width, doc.map.height, keypoints, obstacles, stuck_regions)?;
    doc.sim.validate()?;
    Ok(Scenario {
        description: doc.description,
        map,
        sim: doc.sim,
    })
}

/// Writes a scenario back out in the documented format. Loading the result
/// reproduces the input scenario exactly.
pub fn write_scenario(
    path: &Path,
    map: &WorldMap,
    sim: &SimConfig,
    description: &str,
) -> Result<(), Error> {
    let doc = ScenarioDoc {
        schema_version: SCHEMA_VERSION,
        description: description.to_string(),
        map: MapDoc {
            width: map.width(),
            height: map.height(),
            keypoints: map
                .keypoints()
                .iter()
                .map(|k| KeypointDoc {
                    id: k.id,
                    x: k.location.x,
                    z: k.location.z,
                })
                .collect(),
            obstacles: map.obstacles().iter().map(BoxDoc::from_box).collect(),
            stuck_regions: map
                .stuck_regions()
                .iter()
                .map(|r| RegionDoc {
                    id: r.id,
                    min: [r.bounds.min.x, r.bounds.min.z],
                    max: [r.bounds.max.x, r.bounds.max.z],
                })
                .collect(),
        },
        sim: *sim,
    };
    let text = serde_json::to_string_pretty(&doc).expect("scenario docs always serialize");
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StyleDoc {
    name: String,
    pass_probability: f64,
    priority_weights: PriorityWeightsDoc,
    waypoint_count_weights: BTreeMap<String, f64>,
    distance_pct_weights: BTreeMap<String, f64>,
    quadrant_weights: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PriorityWeightsDoc {
    Keyword(String),
    Table(BTreeMap<String, f64>),
}

fn parse_weight_table(table: &BTreeMap<String, f64>, field: &str) -> Result<Vec<(u32, f64)>, Error> {
    let mut pairs = Vec::with_capacity(table.len());
    for (key, weight) in table {
        let value: u32 = key.parse().map_err(|_| {
            Error::invariant(
                format!("{field}.{key}"),
                "weight keys must be non-negative integers",
            )
        })?;
        pairs.push((value, *weight));
    }
    Ok(pairs)
}

/// Loads and validates a play-style file.
pub fn load_style(path: &Path) -> Result<PlayStyle, Error> {
    let text = read_to_string(path)?;
    let doc: StyleDoc = parse_json(&text, path)?;
    let priority_weights = match &doc.priority_weights {
        PriorityWeightsDoc::Keyword(word) if word == "uniform" => PriorityWeights::Uniform,
        PriorityWeightsDoc::Keyword(word) => {
            return Err(Error::invariant(
                "priority_weights",
                format!("expected \"uniform\" or a weight table, got \"{word}\""),
            ))
        }
        PriorityWeightsDoc::Table(table) => {
            PriorityWeights::Table(parse_weight_table(table, "priority_weights")?)
        }
    };
    PlayStyle::new(
        doc.name,
        doc.pass_probability,
        priority_weights,
        &parse_weight_table(&doc.waypoint_count_weights, "waypoint_count_weights")?,
        &parse_weight_table(&doc.distance_pct_weights, "distance_pct_weights")?,
        doc.quadrant_weights,
    )
}

/// One line of events.jsonl: the per-scene failure log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureLogEntry {
    pub t: u64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_coord: Option<Coordinate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_region_id: Option<u32>,
    pub frames_used: u64,
    pub fuzz_kind: FuzzKind,
    pub strategy_keypoints: Vec<u32>,
}

/// summary.json payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub scenario: String,
    pub style: String,
    pub seed: u64,
    pub frame_budget: u64,
    pub total_frames: u64,
    pub scenes: u64,
    pub verdicts: VerdictCounts,
    pub detected_region_ids: Vec<u32>,
    /// Distinct failure identities (region ids plus coordinate cells) at the
    /// bucket size below.
    pub distinct_failures: u64,
    pub bucket: f64,
    /// Wall-clock write time; every other byte of the report is a pure
    /// function of the campaign inputs.
    pub generated_at: String,
}

/// Where [`write_report`] put each artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportPaths {
    pub events: PathBuf,
    pub summary: PathBuf,
    pub scenes: PathBuf,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes events.jsonl, summary.json and scenes.csv under `out_dir`,
/// creating the directory if needed. `bucket` is the cell size used for the
/// distinct-failure count in the summary.
pub fn write_report(report: &CampaignReport, out_dir: &Path, bucket: f64) -> Result<ReportPaths, Error> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let events_path = out_dir.join("events.jsonl");
    let mut events = Vec::new();
    for scene in &report.scenes {
        let entry = FailureLogEntry {
            t: scene.t,
            verdict: scene.outcome.verdict,
            failure_coord: scene.outcome.failure_coord,
            failure_region_id: scene.outcome.failure_region_id,
            frames_used: scene.outcome.frames_used,
            fuzz_kind: scene.fuzz_kind,
            strategy_keypoints: scene.strategy.ids(),
        };
        serde_json::to_writer(&mut events, &entry).expect("log entries always serialize");
        events.push(b'\n');
    }
    fs::write(&events_path, events).map_err(io_err(&events_path))?;

    let summary_path = out_dir.join("summary.json");
    let summary = CampaignSummary {
        scenario: report.scenario_id.clone(),
        style: report.style_name.clone(),
        seed: report.seed,
        frame_budget: report.frame_budget,
        total_frames: report.total_frames,
        scenes: report.scenes.len() as u64,
        verdicts: report.verdict_counts,
        detected_region_ids: report.detected_region_ids.iter().copied().collect(),
        distinct_failures: dedupe_failures(&report.scenes, bucket).len() as u64,
        bucket,
        generated_at: chrono::Utc::now().to_rfc3339(),
    };
    let text = serde_json::to_string_pretty(&summary).expect("summaries always serialize");
    fs::write(&summary_path, text + "\n").map_err(io_err(&summary_path))?;

    let scenes_path = out_dir.join("scenes.csv");
    let mut csv_bytes = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut csv_bytes);
        w.write_record(["t", "fuzz_kind", "verdict", "frames_used", "cumulative_detected"])
            .and_then(|_| {
                let mut seen = std::collections::BTreeSet::new();
                for scene in &report.scenes {
                    if let Some(id) = scene.outcome.failure_region_id {
                        seen.insert(id);
                    }
                    w.write_record([
                        scene.t.to_string(),
                        scene.fuzz_kind.to_string(),
                        scene.outcome.verdict.to_string(),
                        scene.outcome.frames_used.to_string(),
                        seen.len().to_string(),
                    ])?;
                }
                w.flush()?;
                Ok(())
            })
            .map_err(|e| Error::Io {
                path: scenes_path.clone(),
                source: std::io::Error::other(e),
            })?;
    }
    fs::write(&scenes_path, csv_bytes).map_err(io_err(&scenes_path))?;

    Ok(ReportPaths {
        events: events_path,
        summary: summary_path,
        scenes: scenes_path,
    })
}

/// Reads events.jsonl back into entries, mostly for tests and tooling.
pub fn read_events(path: &Path) -> Result<Vec<FailureLogEntry>, Error> {
    let text = read_to_string(path)?;
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| parse_json(line, path))
        .collect()
}
