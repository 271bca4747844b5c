//! Command-line frontend for the depth-gesture pipeline.
//!
//! Subcommands: `gen`, `segment`, `encode`, `train`, `predict`, `run`,
//! `evaluate`. Options may also come from a flat `key=value` config file
//! via `--config`; explicit flags win. Logs go to stderr, machine output
//! to files or stdout. Exit codes: 0 success, 1 any sequence failed,
//! 2 bad usage.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use depthgest::classify::{load_model, predict, save_model, train};
use depthgest::depthio::{export_png, import_png, load_dseq, save_dseq};
use depthgest::error::Error;
use depthgest::eval::{mean_jaccard, parse_annotations, write_annotations, AnnotationSet};
use depthgest::idmm::encode_segment;
use depthgest::pipeline::{collect_dseq_inputs, run_pipeline};
use depthgest::qomseg::{mean_gesture_length, segment, SegmentationParams};
use depthgest::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(name = "depthgest", version, about = "Continuous gesture recognition from depth sequences")]
struct Cli {
    /// Flat key=value config file; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic depth sequence with ground truth
    Gen(GenArgs),
    /// Segment sequences into gesture intervals
    Segment(SegmentArgs),
    /// Encode gesture segments as pseudo-color PNG images
    Encode(EncodeArgs),
    /// Train the nearest-neighbor template classifier
    Train(TrainArgs),
    /// Predict labels for encoded segment images
    Predict(PredictArgs),
    /// Full pipeline: segment, encode, classify, emit predictions
    Run(RunArgs),
    /// Score predictions against ground truth with the mean Jaccard index
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SegFlags {
    /// Depth-difference threshold for a moved pixel
    #[arg(long)]
    pixel_threshold: Option<u16>,
    /// Fraction of L sampled from each sequence end for the QOM threshold
    #[arg(long)]
    boundary_fraction: Option<f64>,
    /// Refinement window width is L / window-divisor
    #[arg(long)]
    window_divisor: Option<u32>,
    /// Mean gesture length L in frames
    #[arg(long)]
    mean_length: Option<u32>,
    /// Annotation file to compute L from instead of --mean-length
    #[arg(long)]
    train_annotations: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Output .dseq path
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    #[arg(long)]
    gesture_count: Option<u32>,
    /// Comma-separated gesture label ids
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    neutral_depth: Option<u16>,
    #[arg(long)]
    gesture_min: Option<u32>,
    #[arg(long)]
    gesture_max: Option<u32>,
    /// Neutral frames before, between, and after gestures
    #[arg(long)]
    gap: Option<u32>,
    #[arg(long)]
    amplitude: Option<u16>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Args)]
struct SegmentArgs {
    /// A .dseq file or a directory of them
    #[arg(long)]
    input: PathBuf,
    /// Output file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    seg: SegFlags,
}

#[derive(Args)]
struct EncodeArgs {
    /// A .dseq file or a directory of them
    #[arg(long)]
    input: PathBuf,
    /// Output directory for PNGs and manifest.txt
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    seg: SegFlags,
}

#[derive(Args)]
struct TrainArgs {
    /// Manifest file: one "<png path> <label>" per line
    #[arg(long)]
    input: PathBuf,
    /// Output model path
    #[arg(long)]
    model: PathBuf,
    /// Thumbnail side length
    #[arg(long)]
    side: Option<u16>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// A PNG file or a directory of them
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// A .dseq file or a directory of them
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Prediction annotation file (stdout when omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write per-sequence frame counts here
    #[arg(long)]
    lengths: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    seg: SegFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth annotation file
    #[arg(long)]
    gt: PathBuf,
    /// Prediction annotation file
    #[arg(long)]
    pred: PathBuf,
    /// Per-sequence frame counts: one "<id> <frames>" per line
    #[arg(long)]
    lengths: PathBuf,
}

enum AppError {
    Usage(String),
    Run(String),
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        AppError::Run(e.to_string())
    }
}

type AppResult<T> = Result<T, AppError>;

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

/// Flat key=value file; '#' starts a comment line.
struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    fn load(path: Option<&Path>) -> AppResult<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    usage(format!(
                        "config {}:{}: expected key=value",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> AppResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| usage(format!("config key {key}: bad value '{raw}': {e}"))),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, cfg: &ConfigMap, key: &str) -> AppResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

impl SegFlags {
    fn resolve(self, cfg: &ConfigMap) -> AppResult<SegmentationParams> {
        let pixel_threshold = pick(self.pixel_threshold, cfg, "pixel-threshold")?.unwrap_or(60);
        let boundary_fraction =
            pick(self.boundary_fraction, cfg, "boundary-fraction")?.unwrap_or(0.125);
        let window_divisor = pick(self.window_divisor, cfg, "window-divisor")?.unwrap_or(2);
        let mean_length = pick(self.mean_length, cfg, "mean-length")?;
        let train_annotations = match self.train_annotations {
            Some(p) => Some(p),
            None => cfg.get::<PathBuf>("train-annotations")?,
        };
        let mean_length = match (mean_length, train_annotations) {
            (Some(l), _) => l,
            (None, Some(path)) => mean_gesture_length(&parse_annotations(&path)?)?,
            (None, None) => {
                return Err(usage(
                    "either --mean-length or --train-annotations is required",
                ))
            }
        };
        SegmentationParams::new(pixel_threshold, boundary_fraction, window_divisor, mean_length)
            .map_err(|e| usage(e.to_string()))
    }
}

impl GenArgs {
    fn resolve(self, cfg: &ConfigMap) -> AppResult<(SynthConfig, PathBuf)> {
        let defaults = SynthConfig::default();
        let labels = match pick(self.labels, cfg, "labels")? {
            None => defaults.labels,
            Some(raw) => raw
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|e| usage(format!("bad --labels: {e}")))?,
        };
        let config = SynthConfig {
            width: pick(self.width, cfg, "width")?.unwrap_or(defaults.width),
            height: pick(self.height, cfg, "height")?.unwrap_or(defaults.height),
            gesture_count: pick(self.gesture_count, cfg, "gesture-count")?
                .unwrap_or(defaults.gesture_count),
            labels,
            neutral_depth: pick(self.neutral_depth, cfg, "neutral-depth")?
                .unwrap_or(defaults.neutral_depth),
            gesture_length_range: (
                pick(self.gesture_min, cfg, "gesture-min")?.unwrap_or(defaults.gesture_length_range.0),
                pick(self.gesture_max, cfg, "gesture-max")?.unwrap_or(defaults.gesture_length_range.1),
            ),
            neutral_gap: pick(self.gap, cfg, "gap")?.unwrap_or(defaults.neutral_gap),
            amplitude: pick(self.amplitude, cfg, "amplitude")?.unwrap_or(defaults.amplitude),
            noise_sigma: pick(self.noise_sigma, cfg, "noise-sigma")?.unwrap_or(defaults.noise_sigma),
            seed: pick(self.seed, cfg, "seed")?.unwrap_or(defaults.seed),
        };
        Ok((config, self.output))
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn emit(text: &str, output: Option<&Path>) -> AppResult<()> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| AppError::Run(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_gen(args: GenArgs, cfg: &ConfigMap) -> AppResult<i32> {
    let (config, output) = args.resolve(cfg)?;
    let out = generate(&config).map_err(|e| usage(e.to_string()))?;
    save_dseq(&out.sequence, &output)?;
    let mut set = AnnotationSet::new();
    set.insert(stem(&output), out.ground_truth);
    print!("{}", depthgest::eval::format_annotations(&set));
    eprintln!(
        "generated {} frames ({} gestures) -> {}",
        out.sequence.len(),
        config.gesture_count,
        output.display()
    );
    Ok(0)
}

fn cmd_segment(args: SegmentArgs, cfg: &ConfigMap) -> AppResult<i32> {
    let params = args.seg.resolve(cfg)?;
    let inputs = collect_dseq_inputs(&args.input).map_err(|e| usage(e.to_string()))?;
    let mut out = String::new();
    let mut failed = false;
    for path in &inputs {
        match load_dseq(path).and_then(|seq| segment(&seq, &params)) {
            Ok(result) => {
                write!(out, "{}", stem(path)).unwrap();
                for &(s, e) in result.segments() {
                    write!(out, " {}:{}", s + 1, e + 1).unwrap();
                }
                out.push('\n');
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                failed = true;
            }
        }
    }
    emit(&out, args.output.as_deref())?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_encode(args: EncodeArgs, cfg: &ConfigMap) -> AppResult<i32> {
    let params = args.seg.resolve(cfg)?;
    let inputs = collect_dseq_inputs(&args.input).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(&args.output)
        .map_err(|e| AppError::Run(format!("cannot create {}: {e}", args.output.display())))?;
    let mut manifest = String::new();
    let mut failed = false;
    for path in &inputs {
        let id = stem(path);
        let result = load_dseq(path).and_then(|seq| {
            let seg = segment(&seq, &params)?;
            for (k, &(s, e)) in seg.segments().iter().enumerate() {
                let img = encode_segment(&seq.slice(s, e)?)?;
                let png = args.output.join(format!("{id}_{k:03}.png"));
                export_png(&img, &png)?;
                writeln!(manifest, "{id} {k} {} {} {}", s + 1, e + 1, png.display()).unwrap();
            }
            Ok(())
        });
        if let Err(e) = result {
            eprintln!("{}: {e}", path.display());
            failed = true;
        }
    }
    emit(&manifest, Some(&args.output.join("manifest.txt")))?;
    Ok(if failed { 1 } else { 0 })
}

fn cmd_train(args: TrainArgs, cfg: &ConfigMap) -> AppResult<i32> {
    let side = pick(args.side, cfg, "side")?.unwrap_or(32);
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| usage(format!("cannot read manifest {}: {e}", args.input.display())))?;
    let base = args.input.parent().unwrap_or(Path::new("."));
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (path, label) = line.rsplit_once(char::is_whitespace).ok_or_else(|| {
            usage(format!(
                "manifest {}:{}: expected '<png path> <label>'",
                args.input.display(),
                lineno + 1
            ))
        })?;
        let label: u32 = label.parse().map_err(|e| {
            usage(format!(
                "manifest {}:{}: bad label: {e}",
                args.input.display(),
                lineno + 1
            ))
        })?;
        let path = Path::new(path.trim());
        let full = if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        };
        samples.push((import_png(&full)?, label));
    }
    let model = train(&samples, side)?;
    save_model(&model, &args.model)?;
    eprintln!(
        "trained {} templates ({} labels, side {side}) -> {}",
        model.templates().len(),
        model.label_set().len(),
        args.model.display()
    );
    Ok(0)
}

fn collect_pngs(path: &Path) -> AppResult<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("png"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("no .png files under {}", path.display())));
    }
    Ok(files)
}

fn cmd_predict(args: PredictArgs) -> AppResult<i32> {
    let model = load_model(&args.model)?;
    let mut out = String::new();
    for path in collect_pngs(&args.input)? {
        let img = import_png(&path)?;
        let (label, distance) = predict(&model, &img)?;
        writeln!(out, "{} {label} {distance:.6}", path.display()).unwrap();
    }
    print!("{out}");
    Ok(0)
}

fn cmd_run(args: RunArgs, cfg: &ConfigMap) -> AppResult<i32> {
    let params = args.seg.resolve(cfg)?;
    let jobs = pick(args.jobs, cfg, "jobs")?.unwrap_or(1);
    if jobs < 1 {
        return Err(usage("--jobs must be >= 1"));
    }
    let inputs = collect_dseq_inputs(&args.input).map_err(|e| usage(e.to_string()))?;
    let model = load_model(&args.model)?;
    let outcome = run_pipeline(&inputs, &params, &model, jobs)?;
    match args.output.as_deref() {
        Some(path) => write_annotations(&outcome.predictions, path)?,
        None => print!(
            "{}",
            depthgest::eval::format_annotations(&outcome.predictions)
        ),
    }
    if let Some(lengths_path) = args.lengths.as_deref() {
        let mut text = String::new();
        for (id, horizon) in &outcome.horizons {
            writeln!(text, "{id} {horizon}").unwrap();
        }
        emit(&text, Some(lengths_path))?;
    }
    for (id, msg) in &outcome.failures {
        eprintln!("{id}: {msg}");
    }
    Ok(if outcome.failures.is_empty() { 0 } else { 1 })
}

fn parse_lengths(path: &Path) -> AppResult<BTreeMap<String, u32>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read lengths {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(id), Some(len), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(usage(format!(
                "lengths {}:{}: expected '<id> <frames>'",
                path.display(),
                lineno + 1
            )));
        };
        let len: u32 = len.parse().map_err(|e| {
            usage(format!(
                "lengths {}:{}: bad frame count: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(id.to_string(), len);
    }
    Ok(map)
}

fn cmd_evaluate(args: EvaluateArgs) -> AppResult<i32> {
    let gt = parse_annotations(&args.gt)?;
    let pred = parse_annotations(&args.pred)?;
    let horizons = parse_lengths(&args.lengths)?;
    let report = mean_jaccard(&gt, &pred, &horizons)?;
    let mut out = String::new();
    for (id, score) in &report.per_sequence {
        writeln!(out, "{id} {score:.6}").unwrap();
    }
    writeln!(out, "mean {:.6}", report.mean).unwrap();
    print!("{out}");
    Ok(0)
}

fn dispatch(cli: Cli) -> AppResult<i32> {
    let cfg = ConfigMap::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(args) => cmd_gen(args, &cfg),
        Command::Segment(args) => cmd_segment(args, &cfg),
        Command::Encode(args) => cmd_encode(args, &cfg),
        Command::Train(args) => cmd_train(args, &cfg),
        Command::Predict(args) => cmd_predict(args),
        Command::Run(args) => cmd_run(args, &cfg),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
