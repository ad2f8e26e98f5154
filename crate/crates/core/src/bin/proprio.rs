use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use proprio::babble::{generate_babble, BabbleConfig};
use proprio::codec::{build_codec, CodecSpec, Family, PopulationCodec, Setup};
use proprio::dataset::{
    load_dataset, load_dataset_with, read_matrix, save_dataset, save_joint_specs, sidecar_path, write_matrix,
    Dataset, SAMPLE_RATE_HZ,
};
use proprio::decode::{decode_vector, Bandwidth, KdeConfig};
use proprio::experiment::{
    demo_inconsistency, read_config, run_experiment, DataSource, ExperimentConfig, FULL_SCALE_DURATION_S,
};
use proprio::kinematics::{default_joints, JointSpec};
use proprio::metrics::evaluate;
use proprio::plot::{default_trace, plot_posture_grid, plot_tuning_curves};
use proprio::som::{init_consistent, init_naive, input_ranges, train, InitKind, SomMap, TrainConfig};

#[derive(Parser)]
#[command(name = "proprio", version, about = "Population-coded proprioception and self-organizing maps")]
struct Cli {
    /// RNG seed; every command accepts it, commands without randomness ignore it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reach-and-gaze babbling dataset.
    Babble(BabbleArgs),
    /// Encode a dataset with a tuning-curve bank.
    Encode(EncodeArgs),
    /// Decode encoded vectors back to joint angles.
    Decode(DecodeArgs),
    /// Train a map on a dataset.
    Train(TrainArgs),
    /// Score a map against a dataset.
    Eval(EvalArgs),
    /// Run the encoding × curve count × seed matrix.
    Experiment(ExperimentArgs),
    /// One update between two valid codes and its distance to any valid code.
    DemoInconsistency(DemoArgs),
    /// Plot the tuning curves of one joint with an encoded trace.
    PlotCurves(PlotCurvesArgs),
    /// Plot the posture represented by every unit of a map.
    PlotMap(PlotMapArgs),
}

#[derive(Args)]
struct BabbleArgs {
    /// Seconds of babbling at 50 Hz.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Joint-spec output; defaults to the sidecar next to `--out`.
    #[arg(long)]
    joints_out: Option<PathBuf>,
    /// TOML or JSON babble config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset CSV.
    #[arg(long = "data", alias = "in")]
    data: PathBuf,
    /// Joint-spec CSV; defaults to the sidecar, then the shipped joint set.
    #[arg(long)]
    joints: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_data(&self.data, self.joints.as_deref())
    }
}

fn load_data(path: &Path, joints: Option<&Path>) -> Result<Dataset> {
    let sidecar = sidecar_path(path);
    let ds = match joints {
        Some(j) => load_dataset(path, j)?,
        None if sidecar.exists() => load_dataset(path, &sidecar)?,
        None => load_dataset_with(path, default_joints())?,
    };
    log::info!("loaded {} samples of {} joints from {}", ds.len(), ds.dim(), path.display());
    Ok(ds)
}

#[derive(Args)]
struct CodecArgs {
    /// Saved codec JSON.
    #[arg(long, conflicts_with_all = ["codec_spec", "family"])]
    codec: Option<PathBuf>,
    /// Codec spec JSON (family, setup, gain, lenient).
    #[arg(long)]
    codec_spec: Option<PathBuf>,
    #[arg(long, conflicts_with = "codec_spec")]
    family: Option<Family>,
    /// Curves per DoF (per orientation for linear and sigmoid).
    #[arg(long, conflicts_with = "offset")]
    curves: Option<usize>,
    /// Curve spacing in degrees instead of a fixed count.
    #[arg(long)]
    offset: Option<f64>,
    /// Clamp out-of-range angles instead of rejecting them.
    #[arg(long)]
    lenient: bool,
}

impl CodecArgs {
    fn given(&self) -> bool {
        self.codec.is_some() || self.codec_spec.is_some() || self.family.is_some()
    }

    fn spec(&self) -> Result<CodecSpec> {
        let mut spec = if let Some(p) = &self.codec_spec {
            CodecSpec::load(p)?
        } else {
            let family = self.family.context("one of --codec, --codec-spec or --family is required")?;
            if family == Family::Normalized {
                CodecSpec::normalized()
            } else {
                let setup = match (self.curves, self.offset) {
                    (_, Some(d)) => Setup::FixedOffset(d),
                    (Some(n), None) => Setup::FixedCount(n),
                    (None, None) => bail!("--curves or --offset is required for the {family} family"),
                };
                CodecSpec::new(family, setup)
            }
        };
        spec.lenient |= self.lenient;
        Ok(spec)
    }

    fn build(&self, joints: &[JointSpec]) -> Result<PopulationCodec> {
        match &self.codec {
            Some(p) => {
                let codec = PopulationCodec::load(p)?;
                if codec.joints != joints {
                    bail!("codec {} was built for different joints than the dataset", p.display());
                }
                Ok(codec)
            }
            None => Ok(build_codec(self.spec()?, joints)?),
        }
    }
}

#[derive(Args)]
struct KdeArgs {
    /// Kernel width in degrees, or "auto".
    #[arg(long)]
    bandwidth: Option<Bandwidth>,
    /// Argmax grid step in degrees.
    #[arg(long)]
    grid: Option<f64>,
    /// Activations below this propose no candidate.
    #[arg(long)]
    floor: Option<f64>,
}

impl KdeArgs {
    fn apply(&self, mut cfg: KdeConfig) -> KdeConfig {
        if let Some(b) = self.bandwidth {
            cfg.bandwidth = b;
        }
        if let Some(g) = self.grid {
            cfg.grid_resolution = g;
        }
        if let Some(f) = self.floor {
            cfg.activation_floor = f;
        }
        cfg
    }

    fn config(&self) -> Result<KdeConfig> {
        let cfg = self.apply(KdeConfig::default());
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    joints: Option<PathBuf>,
    #[command(flatten)]
    codec: CodecArgs,
    /// Encoded CSV, one column per channel.
    #[arg(long)]
    out: PathBuf,
    /// Codec JSON output; defaults to `<out>.codec.json`.
    #[arg(long)]
    codec_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    codec: PathBuf,
    /// Encoded CSV as written by `encode`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Decoded dataset CSV.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    kde: KdeArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    codec: CodecArgs,
    #[arg(long, default_value_t = 5)]
    rows: usize,
    #[arg(long, default_value_t = 5)]
    cols: usize,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long, action = clap::ArgAction::Set)]
    shuffle: Option<bool>,
    #[arg(long, default_value = "consistent")]
    init: InitKind,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    alpha_end: Option<f64>,
    #[arg(long)]
    radius0: Option<f64>,
    #[arg(long)]
    radius_end: Option<f64>,
    /// TOML or JSON training config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Map JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    map: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Codec JSON; defaults to the codec stored in the map.
    #[arg(long)]
    codec: Option<PathBuf>,
    #[command(flatten)]
    kde: KdeArgs,
    /// Metrics JSON; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML or JSON experiment config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV instead of generated babble.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    joints: Option<PathBuf>,
    /// Babble seconds.
    #[arg(long, conflicts_with = "data")]
    duration: Option<f64>,
    /// Use the full 20 minutes of babble.
    #[arg(long, conflicts_with_all = ["data", "duration"])]
    full_scale: bool,
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<Family>>,
    #[arg(long, value_delimiter = ',')]
    curves: Option<Vec<usize>>,
    /// Map seeds, one run per seed and cell.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long, action = clap::ArgAction::Set)]
    shuffle: Option<bool>,
    #[command(flatten)]
    kde: KdeArgs,
    /// Exit successfully even when some cells fail.
    #[arg(long)]
    no_strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value = "gaussian")]
    family: Family,
    #[arg(long, default_value_t = 10)]
    curves: usize,
    #[arg(long, default_value = "joint")]
    joint: String,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    min: f64,
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    max: f64,
    /// Angle held by the BMU before the update.
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    from: f64,
    /// Angle of the presented input.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Output directory; the report is printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotCurvesArgs {
    #[command(flatten)]
    codec: CodecArgs,
    /// Joint name or index.
    #[arg(long, default_value = "0")]
    joint: String,
    /// Single joint range instead of the shipped joint set.
    #[arg(long, allow_hyphen_values = true, requires = "max")]
    min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "min")]
    max: Option<f64>,
    /// Dataset whose column for the joint is drawn as the input trace.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotMapArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    codec: Option<PathBuf>,
    #[command(flatten)]
    kde: KdeArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed;
    match cli.command {
        Command::Babble(a) => babble(a, seed)?,
        Command::Encode(a) => encode(a)?,
        Command::Decode(a) => decode(a)?,
        Command::Train(a) => train_cmd(a, seed)?,
        Command::Eval(a) => eval(a, seed)?,
        Command::Experiment(a) => return experiment(a, seed),
        Command::DemoInconsistency(a) => demo(a)?,
        Command::PlotCurves(a) => plot_curves(a)?,
        Command::PlotMap(a) => plot_map(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn babble(a: BabbleArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg: BabbleConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => BabbleConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = a.duration {
        cfg.duration_s = d;
    }
    let ds = generate_babble(&cfg)?;
    save_dataset(&ds, &a.out)?;
    let joints_out = a.joints_out.unwrap_or_else(|| sidecar_path(&a.out));
    save_joint_specs(ds.joints(), &joints_out)?;
    log::info!("wrote {} samples to {}", ds.len(), a.out.display());
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<()> {
    let ds = load_data(&a.input, a.joints.as_deref())?;
    let codec = a.codec.build(ds.joints())?;
    let encoded = codec.encode_dataset(&ds)?;
    let names = codec.channel_names();
    let file = std::fs::File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    write_matrix(file, names.iter().map(String::as_str), encoded.rows())?;
    codec.save(a.codec_out.unwrap_or_else(|| with_suffix(&a.out, ".codec.json")))?;
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<()> {
    let codec = PopulationCodec::load(&a.codec)?;
    let kde = a.kde.config()?;
    let (header, rows) = read_matrix(&a.input)?;
    if header.len() != codec.width() {
        bail!("{} has {} columns but the codec is {} wide", a.input.display(), header.len(), codec.width());
    }
    let decoded = rows
        .iter()
        .enumerate()
        .map(|(t, w)| decode_vector(&codec, w, &kde).with_context(|| format!("row {t}")))
        .collect::<Result<Vec<_>>>()?;
    let ds = Dataset::new(codec.joints.clone(), decoded, SAMPLE_RATE_HZ)?;
    save_dataset(&ds, &a.out)?;
    save_joint_specs(ds.joints(), sidecar_path(&a.out))?;
    Ok(())
}

fn train_cmd(a: TrainArgs, seed: Option<u64>) -> Result<()> {
    let ds = a.data.load()?;
    let codec = a.codec.build(ds.joints())?;
    let encoded = codec.encode_dataset(&ds)?;
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_config(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(c) = a.cycles {
        cfg.cycles = c;
    }
    if let Some(s) = a.shuffle {
        cfg.shuffle = s;
    }
    if let Some(v) = a.alpha0 {
        cfg.alpha0 = v;
    }
    if let Some(v) = a.alpha_end {
        cfg.alpha_end = v;
    }
    if a.radius0.is_some() {
        cfg.radius0 = a.radius0;
    }
    if let Some(v) = a.radius_end {
        cfg.radius_end = v;
    }
    let map = match a.init {
        InitKind::Consistent => init_consistent(a.rows, a.cols, &codec, cfg.seed)?,
        InitKind::Naive => init_naive(a.rows, a.cols, &input_ranges(&encoded), cfg.seed)?.with_codec(codec)?,
    };
    let map = train(map, &encoded, &cfg)?;
    log::info!("quantization error by cycle: {:?}", map.qe_trace);
    map.save(&a.out)?;
    Ok(())
}

fn map_codec(map: &SomMap, codec: Option<&Path>) -> Result<PopulationCodec> {
    match codec {
        Some(p) => Ok(PopulationCodec::load(p)?),
        None => map.codec.clone().context("map stores no codec; pass --codec"),
    }
}

fn eval(a: EvalArgs, seed: Option<u64>) -> Result<()> {
    let map = SomMap::load(&a.map)?;
    let codec = map_codec(&map, a.codec.as_deref())?;
    let ds = a.data.load()?;
    if codec.joints != ds.joints() {
        bail!("dataset joints differ from the codec joints");
    }
    let encoded = codec.encode_dataset(&ds)?;
    let seed = seed.or(map.train_config.map(|c| c.seed)).unwrap_or(0);
    let report = evaluate(&map, &codec, &ds, &encoded, &a.kde.config()?, seed)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(p) => write_text(p, &(json + "\n"))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn experiment(a: ExperimentArgs, seed: Option<u64>) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = a.data {
        let joints = a.joints.or_else(|| Some(sidecar_path(&path)).filter(|p| p.exists()));
        cfg.data = DataSource::Csv { path, joints };
    } else if let DataSource::Babble { seed: s, duration_s } = &mut cfg.data {
        if let Some(v) = seed {
            *s = v;
        }
        if let Some(d) = a.duration {
            *duration_s = d;
        }
        if a.full_scale {
            *duration_s = FULL_SCALE_DURATION_S;
        }
    }
    if let Some(f) = a.families {
        cfg.families = f;
    }
    if let Some(c) = a.curves {
        cfg.curve_counts = c;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(v) = a.rows {
        cfg.rows = v;
    }
    if let Some(v) = a.cols {
        cfg.cols = v;
    }
    if let Some(v) = a.cycles {
        cfg.cycles = v;
    }
    if let Some(v) = a.shuffle {
        cfg.shuffle = v;
    }
    cfg.kde = a.kde.apply(cfg.kde);
    if a.no_strict {
        cfg.strict = false;
    }
    if a.out.is_some() {
        cfg.out_dir = a.out;
    }
    let outcome = run_experiment(&cfg)?;
    println!("family,curves_per_dof,runs,median_qe_angle");
    for s in outcome.summaries() {
        let q = s.median_qe_angle.map_or("failed".to_string(), |v| format!("{v:.6}"));
        println!("{},{},{},{q}", s.cell.family, s.cell.curves_per_dof(), s.runs);
    }
    let failed = outcome.failures().count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", outcome.runs.len());
        if cfg.strict {
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn demo(a: DemoArgs) -> Result<()> {
    let spec = match a.family {
        Family::Normalized => CodecSpec::normalized(),
        f => CodecSpec::fixed_count(f, a.curves),
    };
    let joint = JointSpec::new(a.joint, a.min, a.max)?;
    let report = demo_inconsistency(spec, joint, a.from, a.to, a.alpha)?;
    match &a.out {
        Some(dir) => report.write(dir)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    println!("drift {}", report.drift);
    Ok(())
}

fn resolve_joint(joints: &[JointSpec], key: &str) -> Result<usize> {
    if let Some(i) = joints.iter().position(|j| j.name == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < joints.len() => Ok(i),
        _ => bail!("no joint {key:?}; known joints: {}", joints.iter().map(|j| j.name.as_str()).collect::<Vec<_>>().join(", ")),
    }
}

fn plot_curves(a: PlotCurvesArgs) -> Result<()> {
    if !a.codec.given() {
        bail!("one of --codec, --codec-spec or --family is required");
    }
    let ds = a.data.as_deref().map(|p| load_data(p, None)).transpose()?;
    let joints = match (a.min, a.max, &ds) {
        (Some(lo), Some(hi), _) => vec![JointSpec::new("joint", lo, hi)?],
        (_, _, Some(ds)) => ds.joints().to_vec(),
        _ => default_joints(),
    };
    let codec = match &a.codec.codec {
        Some(p) => PopulationCodec::load(p)?,
        None => build_codec(a.codec.spec()?, &joints)?,
    };
    let joint = resolve_joint(&codec.joints, &a.joint)?;
    let spec = &codec.joints[joint];
    let (trace, rate) = match ds.as_ref().and_then(|ds| ds.joints().iter().position(|j| j.name == spec.name).map(|d| (ds, d))) {
        Some((ds, d)) => (ds.column(d), ds.rate_hz()),
        None => (default_trace(spec.min_deg, spec.max_deg), SAMPLE_RATE_HZ),
    };
    write_text(&a.out, &plot_tuning_curves(&codec, joint, &trace, rate)?)
}

fn plot_map(a: PlotMapArgs) -> Result<()> {
    let map = SomMap::load(&a.map)?;
    let codec = map_codec(&map, a.codec.as_deref())?;
    let svg = plot_posture_grid(&map, &codec, &a.kde.config()?, &BabbleConfig::default())?;
    write_text(&a.out, &svg)
}
