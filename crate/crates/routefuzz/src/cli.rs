//! Command-line front end. `run` executes one style over one or more seeds
//! and writes a report directory per seed; `compare` runs two styles over the
//! same seeds and additionally writes compare.json with the overlap of their
//! detected failures. `--parallel` fans campaigns out over a thread pool and
//! affects wall-clock time only, never report content.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::{dedupe_failures, run_campaign, CampaignReport, FailureIdentity};
use crate::error::Error;
use crate::io::{load_scenario, load_style, write_report, Scenario};
use crate::playstyle::PlayStyle;

#[derive(Debug, Parser)]
#[command(name = "routefuzz", version, about = "Two-stage route fuzzer for open-world game maps")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one play style and write a report directory per seed.
    Run(RunArgs),
    /// Run two play styles over the same seeds and compare their failures.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file (map plus simulation settings).
    #[arg(long)]
    scenario: PathBuf,

    /// Play-style file; `run` takes one, `compare` exactly two.
    #[arg(long = "style", required = true)]
    styles: Vec<PathBuf>,

    /// Frame budget per campaign.
    #[arg(long)]
    frames: u64,

    /// Campaign seed; repeat for several campaigns.
    #[arg(long = "seed", required = true)]
    seeds: Vec<u64>,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,

    /// Worker threads for fanning out campaigns.
    #[arg(long, default_value_t = 1)]
    parallel: usize,

    /// Cell size for bucketing failure coordinates without a region id.
    #[arg(long, default_value_t = 1.0)]
    bucket: f64,
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn validate_common(args: &RunArgs) -> Result<(), Error> {
    if args.frames == 0 {
        return Err(Error::Config("--frames must be at least 1".into()));
    }
    if args.parallel == 0 {
        return Err(Error::Config("--parallel must be at least 1".into()));
    }
    if !args.bucket.is_finite() || args.bucket <= 0.0 {
        return Err(Error::Config(format!(
            "--bucket must be finite and positive, got {}",
            args.bucket
        )));
    }
    Ok(())
}

fn scenario_id(args: &RunArgs, scenario: &Scenario) -> String {
    if scenario.description.is_empty() {
        args.scenario
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    } else {
        scenario.description.clone()
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Outcome of one campaign that the CLI keeps in memory after the report
/// directory is written.
struct CampaignDigest {
    seed: u64,
    scenes: u64,
    total_frames: u64,
    detected_regions: u64,
    identities: BTreeSet<FailureIdentity>,
}

impl CampaignDigest {
    fn new(report: &CampaignReport, bucket: f64) -> CampaignDigest {
        CampaignDigest {
            seed: report.seed,
            scenes: report.scenes.len() as u64,
            total_frames: report.total_frames,
            detected_regions: report.detected_region_ids.len() as u64,
            identities: dedupe_failures(&report.scenes, bucket),
        }
    }
}

/// Runs one (style, seed) campaign and writes its report directory.
fn run_one(
    scenario: &Scenario,
    scenario_id: &str,
    style: &PlayStyle,
    frames: u64,
    seed: u64,
    bucket: f64,
    out_dir: &Path,
) -> Result<CampaignDigest, Error> {
    let report = run_campaign(scenario_id, &scenario.map, style, &scenario.sim, frames, seed)?;
    write_report(&report, out_dir, bucket)?;
    Ok(CampaignDigest::new(&report, bucket))
}

fn with_pool<T: Send>(
    parallel: usize,
    jobs: Vec<Box<dyn FnOnce() -> Result<T, Error> + Send>>,
) -> Result<Vec<T>, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| Error::Config(format!("cannot build a {parallel}-thread pool: {e}")))?;
    pool.install(|| {
        jobs.into_par_iter()
            .map(|job| job())
            .collect::<Result<Vec<T>, Error>>()
    })
}

fn cmd_run(args: &RunArgs) -> Result<(), Error> {
    validate_common(args)?;
    if args.styles.len() != 1 {
        return Err(Error::Config(format!(
            "run takes exactly one --style, got {}",
            args.styles.len()
        )));
    }
    let scenario = load_scenario(&args.scenario)?;
    let style = load_style(&args.styles[0])?;
    let id = scenario_id(args, &scenario);

    let jobs: Vec<Box<dyn FnOnce() -> Result<CampaignDigest, Error> + Send>> = args
        .seeds
        .iter()
        .map(|&seed| {
            let scenario = scenario.clone();
            let style = style.clone();
            let id = id.clone();
            let out = args.out.join(format!("seed-{seed}"));
            let (frames, bucket) = (args.frames, args.bucket);
            Box::new(move || run_one(&scenario, &id, &style, frames, seed, bucket, &out)) as _
        })
        .collect();
    let digests = with_pool(args.parallel, jobs)?;

    for d in &digests {
        println!(
            "seed {}: {} scenes, {} frames, {} regions, {} distinct failures -> {}",
            d.seed,
            d.scenes,
            d.total_frames,
            d.detected_regions,
            d.identities.len(),
            args.out.join(format!("seed-{}", d.seed)).display()
        );
    }
    Ok(())
}

/// Per-seed slice of compare.json.
#[derive(Debug, Serialize, Deserialize)]
pub struct CompareSeed {
    pub seed: u64,
    pub scenes_a: u64,
    pub scenes_b: u64,
    pub detected_a: u64,
    pub detected_b: u64,
    pub common: Vec<FailureIdentity>,
    pub unique_a: Vec<FailureIdentity>,
    pub unique_b: Vec<FailureIdentity>,
    pub union_size: u64,
}

/// compare.json payload: per-seed overlap plus the same figures aggregated
/// over all seeds.
#[derive(Debug, Serialize, Deserialize)]
pub struct CompareDoc {
    pub scenario: String,
    pub style_a: String,
    pub style_b: String,
    pub frame_budget: u64,
    pub bucket: f64,
    pub seeds: Vec<CompareSeed>,
    pub aggregate: CompareSeed,
}

fn overlap(
    seed: u64,
    a: &BTreeSet<FailureIdentity>,
    b: &BTreeSet<FailureIdentity>,
    scenes: (u64, u64),
) -> CompareSeed {
    CompareSeed {
        seed,
        scenes_a: scenes.0,
        scenes_b: scenes.1,
        detected_a: a.len() as u64,
        detected_b: b.len() as u64,
        common: a.intersection(b).copied().collect(),
        unique_a: a.difference(b).copied().collect(),
        unique_b: b.difference(a).copied().collect(),
        union_size: a.union(b).count() as u64,
    }
}

fn cmd_compare(args: &RunArgs) -> Result<(), Error> {
    validate_common(args)?;
    if args.styles.len() != 2 {
        return Err(Error::Config(format!(
            "compare takes exactly two --style flags, got {}",
            args.styles.len()
        )));
    }
    let scenario = load_scenario(&args.scenario)?;
    let style_a = load_style(&args.styles[0])?;
    let style_b = load_style(&args.styles[1])?;
    let id = scenario_id(args, &scenario);

    let slot_dirs = [
        args.out.join(format!("a-{}", sanitize(style_a.name()))),
        args.out.join(format!("b-{}", sanitize(style_b.name()))),
    ];
    let styles = [style_a, style_b];

    // One job per (style, seed), laid out seed-major so results regroup
    // deterministically regardless of worker scheduling.
    let mut jobs: Vec<Box<dyn FnOnce() -> Result<CampaignDigest, Error> + Send>> = Vec::new();
    for &seed in &args.seeds {
        for slot in 0..2 {
            let scenario = scenario.clone();
            let style = styles[slot].clone();
            let id = id.clone();
            let out = slot_dirs[slot].join(format!("seed-{seed}"));
            let (frames, bucket) = (args.frames, args.bucket);
            jobs.push(Box::new(move || {
                run_one(&scenario, &id, &style, frames, seed, bucket, &out)
            }) as _);
        }
    }
    let digests = with_pool(args.parallel, jobs)?;

    let mut per_seed = Vec::new();
    let mut all_a: BTreeSet<FailureIdentity> = BTreeSet::new();
    let mut all_b: BTreeSet<FailureIdentity> = BTreeSet::new();
    let mut scenes_total = (0u64, 0u64);
    for pair in digests.chunks_exact(2) {
        let (da, db) = (&pair[0], &pair[1]);
        per_seed.push(overlap(da.seed, &da.identities, &db.identities, (da.scenes, db.scenes)));
        all_a.extend(da.identities.iter().copied());
        all_b.extend(db.identities.iter().copied());
        scenes_total.0 += da.scenes;
        scenes_total.1 += db.scenes;
    }
    let aggregate = overlap(0, &all_a, &all_b, scenes_total);

    let doc = CompareDoc {
        scenario: id,
        style_a: styles[0].name().to_string(),
        style_b: styles[1].name().to_string(),
        frame_budget: args.frames,
        bucket: args.bucket,
        seeds: per_seed,
        aggregate,
    };
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let compare_path = args.out.join("compare.json");
    let text = serde_json::to_string_pretty(&doc).expect("compare docs always serialize");
    std::fs::write(&compare_path, text + "\n").map_err(|source| Error::Io {
        path: compare_path.clone(),
        source,
    })?;

    for s in &doc.seeds {
        println!(
            "seed {}: {} [{} scenes, {} ids] vs {} [{} scenes, {} ids], common {}, union {}",
            s.seed,
            doc.style_a,
            s.scenes_a,
            s.detected_a,
            doc.style_b,
            s.scenes_b,
            s.detected_b,
            s.common.len(),
            s.union_size
        );
    }
    println!(
        "aggregate: {} ids vs {} ids, common {}, union {} -> {}",
        doc.aggregate.detected_a,
        doc.aggregate.detected_b,
        doc.aggregate.common.len(),
        doc.aggregate.union_size,
        compare_path.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_keeps_path_friendly_names() {
        assert_eq!(sanitize("sparse"), "sparse");
        assert_eq!(sanitize("my style/2"), "my-style-2");
    }

    #[test]
    fn cli_parses_repeated_flags() {
        let cli = Cli::parse_from([
            "routefuzz", "run", "--scenario", "s.json", "--style", "a.json", "--frames", "1000",
            "--seed", "1", "--seed", "2", "--out", "out",
        ]);
        match cli.command {
            Command::Run(args) => {
                assert_eq!(args.seeds, vec![1, 2]);
                assert_eq!(args.parallel, 1);
                assert_eq!(args.bucket, 1.0);
            }
            _ => panic!("expected run"),
        }
    }
}
