use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use pseudobox::detections::DEFAULT_SCORE_THRESHOLD;
use pseudobox::metrics::DEFAULT_IOU_THRESHOLD;
use pseudobox::simulator::ScoreRange;
use pseudobox::{
    build_pseudo_labels, class_consistency_filter, corrupt_dataset, evaluate, export_voc,
    image_level_labels, load_devkit_split, nms, read_dump, threshold_filter, write_dump, ApMode,
    ApReport, Dataset, DetectionSet, EvalConfig, FilterParams, NoiseParams, Seed,
};
use serde::Serialize;
use thiserror::Error;

use crate::manifest::{manifest_path_for, FileDigest, RunManifest, TOOL_VERSION};
use crate::table::render_table;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed inputs. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// Replay mismatch or other failure not caused by the inputs. Exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn input_err(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {err}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "pseudobox",
    version,
    about = "Pseudo-strong labels from weak detections, and VOC2007 evaluation"
)]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a detection dump against a VOC split.
    Eval(EvalArgs),
    /// Threshold, class-consistency filter and optionally NMS a dump.
    Filter(FilterArgs),
    /// Export a filtered dump as VOC pseudo annotations.
    Export(ExportArgs),
    /// Generate a seeded noisy dump from ground truth.
    Simulate(SimulateArgs),
    /// Render several AP reports as one table.
    Compare(CompareArgs),
    /// Re-run a recorded manifest and verify its outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Devkit directory containing Annotations/ and ImageSets/Main/.
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub split: String,
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    pub iou: f64,
    #[arg(long, default_value = "11pt", value_parser = parse_mode)]
    pub mode: ApMode,
    /// Where to write the JSON report.
    #[arg(long, default_value = "ap_report.json")]
    pub out: PathBuf,
    /// Row label in the printed table (default: dump file stem).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub split: String,
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD)]
    pub tau: f64,
    /// Apply per-image, per-class NMS at this IoU after filtering (off by default).
    #[arg(long)]
    pub nms: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub dets: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep at most N highest-scoring boxes per class per image.
    #[arg(long)]
    pub max_per_class: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub split: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub miss: f64,
    #[arg(long, default_value_t = 0.0)]
    pub flip: f64,
    #[arg(long, default_value_t = 0.0)]
    pub spurious: f64,
    /// Score interval LO,HI for kept true boxes.
    #[arg(long, default_value = "0.5,1.0", value_parser = parse_range)]
    pub score_tp: (f64, f64),
    /// Score interval LO,HI for flipped and spurious boxes.
    #[arg(long, default_value = "0.05,0.9", value_parser = parse_range)]
    pub score_noise: (f64, f64),
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// NAME=PATH of an AP report; repeat for each row.
    #[arg(long = "report", required = true, value_parser = parse_named)]
    pub reports: Vec<(String, PathBuf)>,
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

fn parse_mode(s: &str) -> Result<ApMode, String> {
    s.parse().map_err(|e: pseudobox::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("'{s}' is not LO,HI"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("'{lo}' is not a number"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("'{hi}' is not a number"))?;
    Ok((lo, hi))
}

fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| format!("'{s}' is not NAME=PATH"))?;
    Ok((name.to_string(), PathBuf::from(path)))
}

/// Parse `args` (without the program name) and run the command, printing to `stdout`.
pub fn run(args: &[String], stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    let cli = match Cli::try_parse_from(
        std::iter::once("pseudobox".to_string()).chain(args.iter().cloned()),
    ) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return stdout
                .write_all(e.to_string().as_bytes())
                .map_err(|e| CliError::Internal(e.to_string()));
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    let mut exec = || match &cli.command {
        Command::Eval(a) => cmd_eval(a, args, stdout),
        Command::Filter(a) => cmd_filter(a, args),
        Command::Export(a) => cmd_export(a, args),
        Command::Simulate(a) => cmd_simulate(a, args),
        Command::Compare(a) => cmd_compare(a, stdout),
        Command::Replay(a) => cmd_replay(a),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?
            .install(exec),
        None => exec(),
    }
}

fn load_dump(path: &Path) -> CliResult<DetectionSet> {
    let file = File::open(path).map_err(|e| input_err(path, e))?;
    let provenance = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    // errors carry their own "line N:" prefix
    read_dump(BufReader::new(file), provenance).map_err(|e| input_err(path, e))
}

fn save_dump(dets: &DetectionSet, path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| input_err(path, e))?;
    write_dump(dets, BufWriter::new(file)).map_err(|e| input_err(path, e))
}

fn load_gt(root: &Path, split: &str) -> CliResult<Dataset> {
    load_devkit_split(root, split).map_err(|e| input_err(root, e))
}

fn split_file(root: &Path, split: &str) -> PathBuf {
    root.join("ImageSets")
        .join("Main")
        .join(format!("{split}.txt"))
}

fn digests(paths: &[&Path]) -> CliResult<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| FileDigest::of(p).map_err(|e| input_err(p, e)))
        .collect()
}

fn write_manifest(
    command: &str,
    args: &[String],
    inputs: &[&Path],
    params: impl Serialize,
    outputs: &[&Path],
    manifest_path: &Path,
) -> CliResult<()> {
    let manifest = RunManifest {
        command: command.to_string(),
        args: args.to_vec(),
        inputs: digests(inputs)?,
        params: serde_json::to_value(params).map_err(|e| CliError::Internal(e.to_string()))?,
        tool_version: TOOL_VERSION.to_string(),
        outputs: digests(outputs)?,
    };
    manifest
        .write(manifest_path)
        .map_err(|e| input_err(manifest_path, e))
}

fn check_unit(name: &str, v: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Input(format!("--{name} {v} must lie in [0, 1]")))
    }
}

pub fn cmd_eval(a: &EvalArgs, args: &[String], stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    check_unit("iou", a.iou)?;
    let gt = load_gt(&a.gt, &a.split)?;
    let dets = load_dump(&a.dets)?;
    let config = EvalConfig {
        iou_threshold: a.iou,
        mode: a.mode,
    };
    let report = evaluate(&dets, &gt, config).map_err(|e| input_err(&a.dets, e))?;
    fs::write(&a.out, report.to_json()).map_err(|e| input_err(&a.out, e))?;

    let name = a.name.clone().unwrap_or_else(|| {
        a.dets
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "detections".into())
    });
    let table = render_table(&[(name, report)]).map_err(|e| CliError::Internal(e.to_string()))?;
    stdout
        .write_all(table.as_bytes())
        .map_err(|e| CliError::Internal(e.to_string()))?;

    write_manifest(
        "eval",
        args,
        &[&split_file(&a.gt, &a.split), &a.dets],
        a,
        &[&a.out],
        &manifest_path_for(&a.out),
    )
}

pub fn cmd_filter(a: &FilterArgs, args: &[String]) -> CliResult<()> {
    check_unit("tau", a.tau)?;
    if let Some(t) = a.nms {
        check_unit("nms", t)?;
    }
    let gt = load_gt(&a.gt, &a.split)?;
    let dets = load_dump(&a.dets)?;
    let params = FilterParams {
        tau: a.tau,
        class_consistency: true,
        nms_iou: a.nms,
        max_per_class: None,
    };
    let filtered = filter_pipeline(&dets, &gt, &params).map_err(|e| input_err(&a.dets, e))?;
    save_dump(&filtered, &a.out)?;
    write_manifest(
        "filter",
        args,
        &[&split_file(&a.gt, &a.split), &a.dets],
        params,
        &[&a.out],
        &manifest_path_for(&a.out),
    )
}

/// Threshold, then class-consistency filter, then optional NMS.
pub fn filter_pipeline(
    dets: &DetectionSet,
    gt: &Dataset,
    params: &FilterParams,
) -> pseudobox::Result<DetectionSet> {
    let mut out = threshold_filter(dets, params.tau);
    if params.class_consistency {
        out = class_consistency_filter(&out, &image_level_labels(gt))?;
    }
    if let Some(thr) = params.nms_iou {
        out = nms(&out, thr);
    }
    Ok(out)
}

pub fn cmd_export(a: &ExportArgs, args: &[String]) -> CliResult<()> {
    let dets = load_dump(&a.dets)?;
    // parameters of the upstream filter run, when its manifest is alongside
    let upstream = RunManifest::read(&manifest_path_for(&a.dets))
        .ok()
        .filter(|m| m.command == "filter")
        .and_then(|m| serde_json::from_value::<FilterParams>(m.params).ok());
    let params = FilterParams {
        max_per_class: a.max_per_class,
        ..upstream.unwrap_or(FilterParams {
            tau: 0.0,
            class_consistency: false,
            nms_iou: None,
            max_per_class: None,
        })
    };
    let pl = build_pseudo_labels(&dets, params);
    export_voc(&pl, &a.out).map_err(|e| input_err(&a.out, e))?;
    write_manifest(
        "export",
        args,
        &[&a.dets],
        params,
        &[&a.out.join("Annotations"), &a.out.join("ImageSets")],
        &a.out.join("manifest.json"),
    )
}

pub fn noise_params(a: &SimulateArgs) -> NoiseParams {
    NoiseParams {
        jitter_sigma: a.jitter,
        miss_prob: a.miss,
        flip_prob: a.flip,
        spurious_rate: a.spurious,
        score_tp: ScoreRange::new(a.score_tp.0, a.score_tp.1),
        score_noise: ScoreRange::new(a.score_noise.0, a.score_noise.1),
    }
}

pub fn cmd_simulate(a: &SimulateArgs, args: &[String]) -> CliResult<()> {
    let params = noise_params(a);
    params
        .validate()
        .map_err(|e| CliError::Input(e.to_string()))?;
    let gt = load_gt(&a.gt, &a.split)?;
    let dets =
        corrupt_dataset(&gt, &params, Seed(a.seed)).map_err(|e| CliError::Input(e.to_string()))?;
    save_dump(&dets, &a.out)?;

    #[derive(Serialize)]
    struct SimParams {
        seed: u64,
        noise: NoiseParams,
    }
    write_manifest(
        "simulate",
        args,
        &[&split_file(&a.gt, &a.split)],
        SimParams {
            seed: a.seed,
            noise: params,
        },
        &[&a.out],
        &manifest_path_for(&a.out),
    )
}

pub fn cmd_compare(a: &CompareArgs, stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    let reports = a
        .reports
        .iter()
        .map(|(name, path)| {
            let text = fs::read_to_string(path).map_err(|e| input_err(path, e))?;
            let report: ApReport = serde_json::from_str(&text).map_err(|e| input_err(path, e))?;
            Ok((name.clone(), report))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let table = render_table(&reports).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(out) = &a.out {
        fs::write(out, &table).map_err(|e| input_err(out, e))?;
    }
    stdout
        .write_all(table.as_bytes())
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn cmd_replay(a: &ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::read(&a.manifest).map_err(|e| input_err(&a.manifest, e))?;
    if manifest.command == "replay" {
        return Err(CliError::Input("refusing to replay a replay".into()));
    }
    run(&manifest.args, &mut std::io::sink())?;
    let changed = manifest.changed_outputs();
    if changed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Internal(format!(
            "replay of {} changed: {}",
            a.manifest.display(),
            changed
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )))
    }
}
