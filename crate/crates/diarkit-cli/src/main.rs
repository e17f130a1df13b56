//! `diarkit` — the diarization post-processing stages as subcommands.
//!
//! Every subcommand is a thin shell around one library entry point: flags
//! mirror the corresponding config struct (same names, same defaults), so
//! outputs are byte-identical to direct library calls. Inputs are read
//! whole, outputs are written atomically (temp file + rename), and the
//! only chatter on stderr is a line counter per file.
//!
//! Exit codes: 0 success, 1 domain error (parse failure, contract
//! violation), 2 usage error (bad flags, missing file).

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use diarkit::batch;
use diarkit::cluster::{pipeline_diarize, ClusterConfig};
use diarkit::decode::DecodeConfig;
use diarkit::der::{aggregate_der, render_der_table, DerReport, ScoringOptions};
use diarkit::fusion::{FusionConfig, Normalization};
use diarkit::io::demb::read_embeddings;
use diarkit::io::proposals::{read_proposals, write_proposals};
use diarkit::io::rttm::{parse_rttm, write_rttm, RttmDocument};
use diarkit::nms::{NmsConfig, NmsMethod};
use diarkit::timeline::DiarizationAnnotation;
use diarkit::SpeechProposal;

#[derive(Parser)]
#[command(
    name = "diarkit",
    version,
    about = "Diarization post-processing: suppress, fuse, decode, cluster, score, convert"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Soft non-maximum suppression over proposals, per recording
    Nms(NmsArgs),
    /// Merge two proposal sources into one ranked list, per recording
    Fuse(FuseArgs),
    /// Turn proposals into a speaker-labeled RTTM timeline
    Decode(DecodeArgs),
    /// Diarize a binary embedding file into an RTTM timeline
    Cluster(ClusterArgs),
    /// Score a hypothesis RTTM against a reference RTTM
    Score(ScoreArgs),
    /// Convert between proposal JSONL and RTTM
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lower")]
enum MethodArg {
    Hard,
    Linear,
    Gaussian,
}

impl From<MethodArg> for NmsMethod {
    fn from(arg: MethodArg) -> Self {
        match arg {
            MethodArg::Hard => NmsMethod::Hard,
            MethodArg::Linear => NmsMethod::Linear,
            MethodArg::Gaussian => NmsMethod::Gaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "lower")]
enum NormalizeArg {
    Raw,
    Minmax,
}

impl From<NormalizeArg> for Normalization {
    fn from(arg: NormalizeArg) -> Self {
        match arg {
            NormalizeArg::Raw => Normalization::Raw,
            NormalizeArg::Minmax => Normalization::MinMax,
        }
    }
}

#[derive(Args)]
struct NmsArgs {
    /// Input proposals (JSONL)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output proposals (JSONL)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "gaussian")]
    method: MethodArg,
    #[arg(long, default_value_t = NmsConfig::default().sigma)]
    sigma: f64,
    #[arg(long, default_value_t = NmsConfig::default().iou_threshold)]
    iou_threshold: f64,
    #[arg(long, default_value_t = NmsConfig::default().score_floor)]
    score_floor: f64,
    #[arg(long, default_value_t = NmsConfig::default().max_in)]
    max_in: usize,
    #[arg(long, default_value_t = NmsConfig::default().max_out)]
    max_out: usize,
    /// Only suppress proposals that share a speaker label
    #[arg(long, value_name = "BOOL", action = ArgAction::Set,
          default_value_t = NmsConfig::default().speaker_aware)]
    speaker_aware: bool,
}

#[derive(Args)]
struct FuseArgs {
    /// First proposal source (JSONL)
    #[arg(long)]
    a: PathBuf,
    /// Second proposal source (JSONL)
    #[arg(long)]
    b: PathBuf,
    /// Output proposals (JSONL)
    #[arg(long)]
    out: PathBuf,
    /// Keep the k best proposals per recording
    #[arg(long, default_value_t = FusionConfig::default().k)]
    k: usize,
    #[arg(long, value_enum, default_value = "raw")]
    normalize: NormalizeArg,
    #[arg(long, default_value_t = FusionConfig::default().dedup_iou)]
    dedup_iou: f64,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input proposals (JSONL)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output annotation (RTTM)
    #[arg(long)]
    out: PathBuf,
    /// Drop proposals scoring below this
    #[arg(long, default_value_t = DecodeConfig::default().score_threshold)]
    threshold: f64,
    /// Drop decoded segments shorter than this (seconds)
    #[arg(long, default_value_t = DecodeConfig::default().min_duration)]
    min_duration: f64,
    /// Keep only the highest-mass speakers (no cap when omitted)
    #[arg(long)]
    max_speakers: Option<usize>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Input embeddings (binary DEMB)
    #[arg(long)]
    emb: PathBuf,
    /// Output annotation (RTTM)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = ClusterConfig::default().min_speakers)]
    min_speakers: usize,
    #[arg(long, default_value_t = ClusterConfig::default().max_speakers)]
    max_speakers: usize,
    #[arg(long, default_value_t = ClusterConfig::default().vad_threshold)]
    vad_threshold: f64,
    #[arg(long, default_value_t = ClusterConfig::default().vad_min_duration)]
    vad_min_duration: f64,
    #[arg(long, default_value_t = ClusterConfig::default().vad_merge_gap)]
    vad_merge_gap: f64,
    #[arg(long, default_value_t = ClusterConfig::default().chunk_seconds)]
    chunk_seconds: f64,
    #[arg(long, default_value_t = ClusterConfig::default().linkage_cutoff)]
    linkage_cutoff: f64,
}

#[derive(Args)]
struct ScoreArgs {
    /// Reference annotation (RTTM)
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Hypothesis annotation (RTTM)
    #[arg(long)]
    hyp: PathBuf,
    /// Seconds forgiven around each reference boundary
    #[arg(long, default_value_t = ScoringOptions::default().collar)]
    collar: f64,
    /// Exclude regions where reference speakers overlap
    #[arg(long, action = ArgAction::SetTrue)]
    exclude_overlap: bool,
    /// Also write the reports as JSON lines to this path
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input file (direction inferred from extension or content)
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    /// Exit 1: the input was readable but wrong (parse or contract error).
    Domain(String),
    /// Exit 2: the invocation itself was wrong (e.g. missing file).
    Usage(String),
}

type CliResult<T> = Result<T, Failure>;

fn domain(path: &Path, err: impl Display) -> Failure {
    Failure::Domain(format!("{}: {err}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Nms(args) => run_nms(args),
        Command::Fuse(args) => run_fuse(args),
        Command::Decode(args) => run_decode(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Score(args) => run_score(args),
        Command::Convert(args) => run_convert(args),
    }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    if err.kind() == ErrorKind::NotFound {
        Failure::Usage(format!("{}: no such file", path.display()))
    } else {
        Failure::Domain(format!("{}: {err}", path.display()))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    eprintln!("{}: {} lines read", path.display(), text.lines().count());
    Ok(text)
}

fn read_binary(path: &Path) -> CliResult<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| io_failure(path, e))?;
    eprintln!("{}: {} bytes read", path.display(), bytes.len());
    Ok(bytes)
}

fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| domain(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| domain(path, e))?;
    tmp.persist(path).map_err(|e| domain(path, e))?;
    eprintln!("{}: {} lines written", path.display(), contents.lines().count());
    Ok(())
}

fn load_proposals(path: &Path) -> CliResult<Vec<SpeechProposal>> {
    read_proposals(&read_text(path)?).map_err(|e| domain(path, e))
}

fn load_rttm(path: &Path) -> CliResult<RttmDocument> {
    let doc = parse_rttm(&read_text(path)?).map_err(|e| domain(path, e))?;
    for warning in &doc.warnings {
        eprintln!("{}: {warning}", path.display());
    }
    Ok(doc)
}

fn run_nms(args: NmsArgs) -> CliResult<()> {
    let proposals = load_proposals(&args.input)?;
    let cfg = NmsConfig {
        method: args.method.into(),
        sigma: args.sigma,
        iou_threshold: args.iou_threshold,
        score_floor: args.score_floor,
        max_in: args.max_in,
        max_out: args.max_out,
        speaker_aware: args.speaker_aware,
    };
    let kept = batch::soft_nms_all(&proposals, &cfg).map_err(|e| domain(&args.input, e))?;
    write_atomic(&args.out, &write_proposals(&kept))
}

fn run_fuse(args: FuseArgs) -> CliResult<()> {
    let a = load_proposals(&args.a)?;
    let b = load_proposals(&args.b)?;
    let cfg = FusionConfig {
        k: args.k,
        normalize: args.normalize.into(),
        dedup_iou: args.dedup_iou,
    };
    let fused = batch::fuse_all(&a, &b, &cfg).map_err(|e| domain(&args.a, e))?;
    write_atomic(&args.out, &write_proposals(&fused))
}

fn run_decode(args: DecodeArgs) -> CliResult<()> {
    let proposals = load_proposals(&args.input)?;
    let cfg = DecodeConfig {
        score_threshold: args.threshold,
        min_duration: args.min_duration,
        max_speakers: args.max_speakers,
    };
    let annotations =
        batch::decode_all(&proposals, &cfg).map_err(|e| domain(&args.input, e))?;
    write_atomic(&args.out, &write_rttm(&annotations))
}

fn run_cluster(args: ClusterArgs) -> CliResult<()> {
    let bytes = read_binary(&args.emb)?;
    let seq = read_embeddings(&bytes).map_err(|e| domain(&args.emb, e))?;
    let cfg = ClusterConfig {
        min_speakers: args.min_speakers,
        max_speakers: args.max_speakers,
        vad_threshold: args.vad_threshold,
        vad_min_duration: args.vad_min_duration,
        vad_merge_gap: args.vad_merge_gap,
        chunk_seconds: args.chunk_seconds,
        linkage_cutoff: args.linkage_cutoff,
    };
    let annotation = pipeline_diarize(&seq, &cfg).map_err(|e| domain(&args.emb, e))?;
    write_atomic(&args.out, &write_rttm([&annotation]))
}

/// One report per recording in either file (a recording absent from one
/// side scores against an empty annotation), plus the `ALL` aggregate.
fn score_reports(
    reference: &RttmDocument,
    hypothesis: &RttmDocument,
    opts: &ScoringOptions,
) -> Result<Vec<DerReport>, diarkit::der::DerError> {
    let recordings: BTreeSet<&String> =
        reference.annotations.keys().chain(hypothesis.annotations.keys()).collect();
    let pairs: Vec<(DiarizationAnnotation, DiarizationAnnotation)> = recordings
        .into_iter()
        .map(|rec| {
            let pick = |doc: &RttmDocument| {
                doc.annotations.get(rec).cloned().unwrap_or_else(|| {
                    DiarizationAnnotation::new(rec.as_str())
                })
            };
            (pick(reference), pick(hypothesis))
        })
        .collect();
    let mut reports = batch::score_all(&pairs, opts)?;
    reports.push(aggregate_der(&reports)?);
    Ok(reports)
}

fn run_score(args: ScoreArgs) -> CliResult<()> {
    let reference = load_rttm(&args.reference)?;
    let hypothesis = load_rttm(&args.hyp)?;
    let opts = ScoringOptions { collar: args.collar, exclude_overlap: args.exclude_overlap };
    let reports =
        score_reports(&reference, &hypothesis, &opts).map_err(|e| domain(&args.hyp, e))?;
    print!("{}", render_der_table(&reports));
    if let Some(path) = &args.jsonl {
        let mut lines = String::new();
        for report in &reports {
            lines.push_str(&serde_json::to_string(report).expect("reports serialize"));
            lines.push('\n');
        }
        write_atomic(path, &lines)?;
    }
    Ok(())
}

enum Direction {
    ProposalsToRttm,
    RttmToProposals,
}

fn detect_direction(path: &Path, text: &str) -> CliResult<Direction> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("rttm") => return Ok(Direction::RttmToProposals),
        Some("jsonl" | "json") => return Ok(Direction::ProposalsToRttm),
        _ => {}
    }
    match text.lines().find(|l| !l.trim().is_empty()).map(str::trim_start) {
        Some(line) if line.starts_with('{') => Ok(Direction::ProposalsToRttm),
        Some(_) => Ok(Direction::RttmToProposals),
        None => Err(Failure::Domain(format!(
            "{}: empty input, cannot infer conversion direction",
            path.display()
        ))),
    }
}

fn run_convert(args: ConvertArgs) -> CliResult<()> {
    let text = read_text(&args.input)?;
    match detect_direction(&args.input, &text)? {
        Direction::ProposalsToRttm => {
            let proposals = read_proposals(&text).map_err(|e| domain(&args.input, e))?;
            let cfg = DecodeConfig { score_threshold: 0.0, ..DecodeConfig::default() };
            let annotations =
                batch::decode_all(&proposals, &cfg).map_err(|e| domain(&args.input, e))?;
            write_atomic(&args.out, &write_rttm(&annotations))
        }
        Direction::RttmToProposals => {
            let doc = parse_rttm(&text).map_err(|e| domain(&args.input, e))?;
            let proposals: Vec<SpeechProposal> = doc
                .annotations
                .values()
                .flat_map(|ann| ann.segments())
                .map(|seg| {
                    SpeechProposal::new(
                        seg.recording_id(),
                        seg.interval().start(),
                        seg.interval().end(),
                        seg.speaker(),
                        1.0,
                        "rttm",
                    )
                    .expect("parsed segments are valid proposals")
                })
                .collect();
            write_atomic(&args.out, &write_proposals(&proposals))
        }
    }
}
