//! Command-line front end: train, segment, track, eval, synth and
//! viz-features.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors (including missing input paths).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use hulksmash::eval::{self, ExperimentSpec, MetricsReport, Scenario, ScenarioSpec, Shape};
use hulksmash::event_io::{read_aer, write_aer};
use hulksmash::scnn::{load_checkpoint, save_checkpoint, train, NetworkConfig, SpikeRecord, TrainConfig};
use hulksmash::smash::{BoundingBox, SmashPairing};
use hulksmash::{buffer, render, Network, Pipeline, SequenceBuffer};

#[derive(Parser)]
#[command(
    name = "hulksmash",
    version,
    about = "Spiking instance segmentation and tracking for event streams"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML); every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Buffer window in microseconds.
    #[arg(long, global = true, default_value_t = 10_000)]
    window_us: u64,
}

#[derive(Args)]
struct Source {
    /// AER recording to process.
    #[arg(long, conflicts_with = "scenario")]
    input: Option<PathBuf>,
    /// Synthetic scene instead of a recording: multistream, occlusion_{0,5,25,50},
    /// crossing, crossing_noise or single_<shape>.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write its checkpoint and per-epoch log.
    Train {
        /// AER recordings or directories of `.bin` files; the synthetic corpus when absent.
        #[arg(long)]
        input: Vec<PathBuf>,
    },
    /// Segment every buffer of an input.
    Segment {
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        source: Source,
        /// Write input, mask, instance and object frames per buffer.
        #[arg(long)]
        render: bool,
    },
    /// Track objects across the buffers of an input.
    Track {
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        source: Source,
        /// Write a frame of tracked objects and their ids per buffer.
        #[arg(long)]
        render: bool,
    },
    /// Run evaluation scenarios and write their metrics.
    Eval {
        /// Network to evaluate; trained on the synthetic corpus when absent.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Scenario names overriding the configured list.
        #[arg(long)]
        scenario: Vec<String>,
    },
    /// Write a synthetic scene as AER plus its ground truth.
    Synth {
        /// Scene name, as accepted by `segment --scenario`.
        #[arg(long)]
        scenario: String,
    },
    /// Render every feature map in pixel space.
    VizFeatures {
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Recording to overlay classification features on.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// The one configuration schema shared by all commands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    /// Network layout; the synthetic face layout when absent.
    network: Option<NetworkConfig>,
    train: TrainConfig,
    /// Seeds of the synthetic training corpus.
    corpus_seeds: Vec<u64>,
    experiment: ExperimentSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: None,
            train: TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            },
            corpus_seeds: vec![0, 1, 2],
            experiment: ExperimentSpec::default(),
        }
    }
}

impl RunConfig {
    fn network(&self) -> NetworkConfig {
        self.network.clone().unwrap_or_else(eval::synthetic_network_config)
    }
}

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type CmdResult<T> = Result<T, Failure>;

trait Classify<T> {
    fn runtime(self) -> CmdResult<T>;
}

impl<T> Classify<T> for anyhow::Result<T> {
    fn runtime(self) -> CmdResult<T> {
        self.map_err(Failure::Runtime)
    }
}

impl<T> Classify<T> for hulksmash::Result<T> {
    fn runtime(self) -> CmdResult<T> {
        self.map_err(|e| match e {
            hulksmash::Error::Config(_) | hulksmash::Error::Checkpoint(_) => Failure::Usage(e.into()),
            e => Failure::Runtime(e.into()),
        })
    }
}

fn usage(msg: String) -> Failure {
    Failure::Usage(anyhow!(msg))
}

fn require(path: &Path) -> CmdResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("path not found: {}", path.display())))
    }
}

fn load_config(path: Option<&Path>) -> CmdResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    require(path)?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .runtime()?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    cfg.experiment.validate().runtime()?;
    cfg.network().validate().runtime()?;
    Ok(cfg)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CmdResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .runtime()?;
    }
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .runtime()
}

fn to_json<T: Serialize>(value: &T) -> CmdResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.into()))
}

fn load_network(cfg: &RunConfig, checkpoint: &Path) -> CmdResult<Network> {
    require(checkpoint)?;
    load_checkpoint(cfg.network(), checkpoint).runtime()
}

fn scene(name: &str, seed: u64, spec: &ExperimentSpec) -> CmdResult<Scenario> {
    let params = &spec.stream;
    let result = match name {
        "multistream" => eval::multistream(seed, params),
        "crossing" => eval::crossing(seed, params, &spec.crossing),
        "crossing_noise" => {
            let cross = eval::CrossingParams {
                noise_rate: eval::DEFAULT_NOISE_RATE,
                ..spec.crossing
            };
            eval::crossing(seed, params, &cross)
        }
        _ => {
            if let Some(pct) = name.strip_prefix("occlusion_") {
                let pct = pct.parse().map_err(|_| usage(format!("unknown scenario `{name}`")))?;
                eval::occlusion(pct, seed, params)
            } else if let Some(shape) = name.strip_prefix("single_") {
                let shape: Shape = shape.parse().map_err(|_| usage(format!("unknown shape in `{name}`")))?;
                eval::single(shape, seed, params)
            } else {
                return Err(usage(format!(
                    "unknown scenario `{name}`; expected multistream, occlusion_{{0,5,25,50}}, crossing, \
                     crossing_noise or single_<shape>"
                )));
            }
        }
    };
    result.map_err(|e| Failure::Usage(e.into()))
}

fn read_recording(path: &Path) -> CmdResult<hulksmash::EventStream> {
    require(path)?;
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .runtime()?;
    read_aer(&bytes)
        .with_context(|| format!("parsing {}", path.display()))
        .runtime()
}

fn buffers_of(source: &Source, common: &Common, cfg: &RunConfig) -> CmdResult<Vec<SequenceBuffer>> {
    match (&source.input, &source.scenario) {
        (Some(path), _) => Ok(buffer(&read_recording(path)?, common.window_us)),
        (None, Some(name)) => Ok(scene(name, common.seed, &scenario_spec(common, cfg))?.buffers()),
        (None, None) => Err(usage("one of --input or --scenario is required".into())),
    }
}

fn scenario_spec(common: &Common, cfg: &RunConfig) -> ExperimentSpec {
    let mut spec = cfg.experiment.clone();
    spec.stream.window_us = common.window_us;
    spec
}

fn recordings_in(paths: &[PathBuf]) -> CmdResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        require(p)?;
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))
                .runtime()?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "bin"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn cmd_train(common: &Common, cfg: &RunConfig, input: &[PathBuf]) -> CmdResult<()> {
    let dataset = if input.is_empty() {
        let params = eval::StreamParams {
            window_us: common.window_us,
            ..cfg.experiment.stream
        };
        eval::training_corpus(&cfg.corpus_seeds, &params).runtime()?
    } else {
        let mut all = Vec::new();
        for f in recordings_in(input)? {
            all.extend(buffer(&read_recording(&f)?, common.window_us));
        }
        all
    };
    let tc = TrainConfig {
        seed: common.seed,
        ..cfg.train
    };
    let trained = train(cfg.network(), &dataset, &tc).runtime()?;
    let ckpt = common.out.join("checkpoint.hsck");
    fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))
        .runtime()?;
    save_checkpoint(&trained.network, &ckpt).runtime()?;
    write(&common.out.join("network.toml"), trained.network.config.to_toml())?;
    write(&common.out.join("train_log.json"), to_json(&trained.log)?)?;
    println!(
        "trained {} epochs on {} buffers -> {}",
        trained.log.len(),
        dataset.len(),
        ckpt.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct InstanceRecord {
    id: usize,
    class: u16,
    source: SpikeRecord,
    bbox: BoundingBox,
    pixels: Vec<(u16, u16)>,
}

#[derive(Serialize)]
struct ObjectRecord {
    id: usize,
    class: u16,
    members: Vec<usize>,
    bbox: BoundingBox,
}

#[derive(Serialize)]
struct BufferRecord {
    index: usize,
    event_count: usize,
    class_spikes: usize,
    mask: Vec<Vec<(u16, u16)>>,
    instances: Vec<InstanceRecord>,
    objects: Vec<ObjectRecord>,
    pairs: Vec<SmashPairing>,
}

fn buffer_record(seg: &hulksmash::Segmentation) -> BufferRecord {
    BufferRecord {
        index: seg.index,
        event_count: seg.event_count,
        class_spikes: seg.class_spikes,
        mask: seg.mask.classes.clone(),
        instances: seg
            .instances
            .iter()
            .zip(&seg.signatures)
            .map(|(t, s)| InstanceRecord {
                id: t.id,
                class: s.class,
                source: t.source,
                bbox: s.bbox,
                pixels: t.pixels.clone(),
            })
            .collect(),
        objects: seg
            .grouping
            .objects
            .iter()
            .map(|o| ObjectRecord {
                id: o.id,
                class: o.class,
                members: o.members.clone(),
                bbox: o.bbox,
            })
            .collect(),
        pairs: seg.grouping.pairs.clone(),
    }
}

fn cmd_segment(
    common: &Common,
    cfg: &RunConfig,
    checkpoint: &Path,
    source: &Source,
    render_frames: bool,
) -> CmdResult<()> {
    let pipeline = Pipeline::new(load_network(cfg, checkpoint)?);
    let buffers = buffers_of(source, common, cfg)?;
    let segs = pipeline.segment_all(&buffers).runtime()?;
    let records: Vec<BufferRecord> = segs.iter().map(buffer_record).collect();
    write(&common.out.join("segment.json"), to_json(&records)?)?;
    if render_frames {
        let dir = common.out.join("frames");
        for (b, s) in buffers.iter().zip(&segs) {
            render::write_stage_frames(&dir, b, s).runtime()?;
        }
    }
    let objects: usize = segs.iter().map(|s| s.object_count()).sum();
    println!("segmented {} buffers, {objects} objects", segs.len());
    Ok(())
}

fn cmd_track(
    common: &Common,
    cfg: &RunConfig,
    checkpoint: &Path,
    source: &Source,
    render_frames: bool,
) -> CmdResult<()> {
    let pipeline = Pipeline::new(load_network(cfg, checkpoint)?);
    let buffers = buffers_of(source, common, cfg)?;
    let segs = pipeline.segment_all(&buffers).runtime()?;
    let frames = hulksmash::track_segmented(&segs, cfg.experiment.tracker).runtime()?;
    let mut lines = String::new();
    for entry in frames.iter().flat_map(|f| &f.objects) {
        lines.push_str(&serde_json::to_string(entry).map_err(|e| Failure::Runtime(e.into()))?);
        lines.push('\n');
    }
    write(&common.out.join("timeline.jsonl"), lines)?;
    if render_frames {
        let dir = common.out.join("frames");
        for (s, f) in segs.iter().zip(&frames) {
            render::write_track_frame(&dir, s, f).runtime()?;
        }
    }
    let mut ids: Vec<u64> = frames.iter().flat_map(|f| f.objects.iter().map(|o| o.id)).collect();
    ids.sort_unstable();
    ids.dedup();
    println!("tracked {} buffers, {} persistent ids", frames.len(), ids.len());
    Ok(())
}

fn cmd_eval(common: &Common, cfg: &RunConfig, checkpoint: Option<&Path>, names: &[String]) -> CmdResult<()> {
    let mut spec = scenario_spec(common, cfg);
    if !names.is_empty() {
        spec.scenarios = names
            .iter()
            .map(|n| n.parse::<ScenarioSpec>())
            .collect::<hulksmash::Result<_>>()
            .runtime()?;
    }
    spec.validate().runtime()?;
    let network = match checkpoint {
        Some(p) => load_network(cfg, p)?,
        None => {
            let corpus = eval::training_corpus(&cfg.corpus_seeds, &spec.stream).runtime()?;
            let tc = TrainConfig {
                seed: common.seed,
                ..cfg.train
            };
            train(cfg.network(), &corpus, &tc).runtime()?.network
        }
    };
    let pipeline = Pipeline::new(network);
    let reports: Vec<MetricsReport> = eval::run_experiment(&pipeline, &spec).runtime()?;
    write(&common.out.join("report.json"), to_json(&reports)?)?;
    let table = MetricsReport::table(&reports);
    write(&common.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct GroundTruth {
    name: String,
    width: u16,
    height: u16,
    window_us: u64,
    /// Placement indices holding identities.
    identities: Vec<usize>,
    /// Per buffer, the box of every identity placement.
    boxes: Vec<Vec<BoundingBox>>,
}

fn cmd_synth(common: &Common, cfg: &RunConfig, name: &str) -> CmdResult<()> {
    let spec = scenario_spec(common, cfg);
    let s = scene(name, common.seed, &spec)?;
    let ids = s.identity_placements();
    let truth = GroundTruth {
        name: s.name.clone(),
        width: s.stream.width,
        height: s.stream.height,
        window_us: s.params.window_us,
        boxes: s
            .buffers()
            .iter()
            .map(|b| ids.iter().map(|&i| s.shape_box_in(i, b)).collect())
            .collect(),
        identities: ids,
    };
    write(&common.out.join(format!("{name}.bin")), write_aer(&s.stream).runtime()?)?;
    write(&common.out.join(format!("{name}.json")), to_json(&truth)?)?;
    println!("{name}: {} events, {} buffers", s.stream.len(), truth.boxes.len());
    Ok(())
}

fn cmd_viz(common: &Common, cfg: &RunConfig, checkpoint: &Path, input: Option<&Path>) -> CmdResult<()> {
    let network = load_network(cfg, checkpoint)?;
    let tiles = render::feature_atlas(&network);
    let paths = render::write_atlas(&common.out.join("features"), &tiles).runtime()?;
    if let Some(path) = input {
        let stream = read_recording(path)?;
        let dir = common.out.join("overlays");
        for b in buffer(&stream, common.window_us) {
            let img = render::class_overlay(&network, &tiles, &b).runtime()?;
            let p = dir.join(format!("{:05}_overlay.pgm", b.index));
            fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))
                .runtime()?;
            img.save(&p)
                .with_context(|| format!("writing {}", p.display()))
                .runtime()?;
        }
    }
    println!("rendered {} feature tiles", paths.len());
    Ok(())
}

fn run(cli: &Cli) -> CmdResult<()> {
    let common = &cli.common;
    let cfg = load_config(common.config.as_deref())?;
    if common.window_us == 0 {
        return Err(usage("--window-us must be positive".into()));
    }
    match &cli.command {
        Command::Train { input } => cmd_train(common, &cfg, input),
        Command::Segment {
            checkpoint,
            source,
            render,
        } => cmd_segment(common, &cfg, checkpoint, source, *render),
        Command::Track {
            checkpoint,
            source,
            render,
        } => cmd_track(common, &cfg, checkpoint, source, *render),
        Command::Eval { checkpoint, scenario } => cmd_eval(common, &cfg, checkpoint.as_deref(), scenario),
        Command::Synth { scenario } => cmd_synth(common, &cfg, scenario),
        Command::VizFeatures { checkpoint, input } => cmd_viz(common, &cfg, checkpoint, input.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
