//! Experiment matrix over encodings, curve counts and seeds, and the
//! single-update inconsistency demonstration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::babble::{generate_babble, BabbleConfig};
use crate::codec::{build_codec, read_json, write_json, CodecSpec, Family, PopulationCodec};
use crate::dataset::{load_dataset_with, load_joint_specs, Dataset};
use crate::decode::{decode_population, KdeConfig};
use crate::error::{Error, Result};
use crate::kinematics::{default_joints, JointSpec};
use crate::metrics::{evaluate, MetricsReport};
use crate::plot::{plot_grouped_bars, plot_inconsistency, BarGroup};
use crate::som::{init_consistent, segment_manifold_distance, train, ManifoldConfig, TrainConfig};

/// Babble duration restored by `full_scale`, seconds.
pub const FULL_SCALE_DURATION_S: f64 = 1200.0;

/// Reads a TOML or JSON config file, chosen by extension.
pub fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(path),
        _ => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Babble {
        seed: u64,
        duration_s: f64,
    },
    Csv {
        path: PathBuf,
        /// Joint-spec sidecar; the shipped joint set when absent.
        #[serde(default)]
        joints: Option<PathBuf>,
    },
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Babble { seed, duration_s } => generate_babble(&BabbleConfig::with_seed(*seed, *duration_s)),
            DataSource::Csv { path, joints } => {
                let specs = match joints {
                    Some(p) => load_joint_specs(p)?,
                    None => default_joints(),
                };
                load_dataset_with(path, specs)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub families: Vec<Family>,
    /// Ignored by the normalized family.
    pub curve_counts: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub cycles: usize,
    pub shuffle: bool,
    pub seeds: Vec<u64>,
    pub alpha0: f64,
    pub alpha_end: f64,
    pub radius0: Option<f64>,
    pub radius_end: f64,
    pub kde: KdeConfig,
    pub out_dir: Option<PathBuf>,
    /// Treat any failed cell as a failed experiment.
    pub strict: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        ExperimentConfig {
            data: DataSource::Babble {
                seed: 0,
                duration_s: 300.0,
            },
            families: Family::ALL.to_vec(),
            curve_counts: vec![5, 10, 20],
            rows: 5,
            cols: 5,
            cycles: train.cycles,
            shuffle: train.shuffle,
            seeds: (1..=5).collect(),
            alpha0: train.alpha0,
            alpha_end: train.alpha_end,
            radius0: train.radius0,
            radius_end: train.radius_end,
            kde: KdeConfig::default(),
            out_dir: None,
            strict: true,
        }
    }
}

/// One (family, curve count) combination; `curves` is `None` for normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub family: Family,
    pub curves: Option<usize>,
}

impl Cell {
    pub fn spec(&self) -> CodecSpec {
        match self.curves {
            Some(n) => CodecSpec::fixed_count(self.family, n),
            None => CodecSpec::normalized(),
        }
    }

    pub fn curves_per_dof(&self) -> usize {
        self.curves.unwrap_or(1)
    }

    pub fn label(&self) -> String {
        match self.curves {
            Some(n) => format!("{}_n{n}", self.family),
            None => self.family.to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: ExperimentConfig = read_config(path.as_ref())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.families.is_empty() {
            return bad("at least one family is required");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.families.iter().any(|f| f.is_population()) {
            if self.curve_counts.is_empty() {
                return bad("population families need at least one curve count");
            }
            if self.curve_counts.iter().any(|&n| n < 2) {
                return bad("curve counts must be at least 2");
            }
        }
        if self.rows == 0 || self.cols == 0 {
            return bad("lattice must be at least 1x1");
        }
        if let DataSource::Babble { duration_s, .. } = self.data {
            if !(duration_s > 0.0) {
                return bad("babble duration must be positive");
            }
        }
        self.train_config(0).validate()?;
        self.kde.validate()
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            cycles: self.cycles,
            shuffle: self.shuffle,
            seed,
            alpha0: self.alpha0,
            alpha_end: self.alpha_end,
            radius0: self.radius0,
            radius_end: self.radius_end,
        }
    }

    /// Cells in output order: normalized once, then every population
    /// family at every curve count.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &family in &self.families {
            if family.is_population() {
                for &n in &self.curve_counts {
                    cells.push(Cell {
                        family,
                        curves: Some(n),
                    });
                }
            } else if !cells.contains(&Cell { family, curves: None }) {
                cells.push(Cell { family, curves: None });
            }
        }
        cells
    }
}

/// Metrics of one map before and after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: Cell,
    pub seed: u64,
    pub initial: MetricsReport,
    pub trained: MetricsReport,
    pub qe_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub cell: Cell,
    pub seed: u64,
    pub result: std::result::Result<RunRecord, String>,
}

/// Encode, initialize consistently, train and evaluate one seed of one cell.
pub fn run_cell(ds: &Dataset, cfg: &ExperimentConfig, cell: Cell, seed: u64) -> Result<RunRecord> {
    let codec = build_codec(cell.spec(), ds.joints())?;
    let encoded = codec.encode_dataset(ds)?;
    run_encoded(ds, cfg, &codec, &encoded, cell, seed)
}

fn run_encoded(
    ds: &Dataset,
    cfg: &ExperimentConfig,
    codec: &PopulationCodec,
    encoded: &crate::codec::EncodedMatrix,
    cell: Cell,
    seed: u64,
) -> Result<RunRecord> {
    let map = init_consistent(cfg.rows, cfg.cols, codec, seed)?;
    let initial = evaluate(&map, codec, ds, encoded, &cfg.kde, seed)?;
    let map = train(map, encoded, &cfg.train_config(seed))?;
    let trained = evaluate(&map, codec, ds, encoded, &cfg.kde, seed)?;
    Ok(RunRecord {
        cell,
        seed,
        initial,
        trained,
        qe_trace: map.qe_trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
}

/// Median of the successful runs of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub runs: usize,
    pub median_qe_angle: Option<f64>,
    pub median_qe_encoded: Option<f64>,
    pub median_topographic_error: Option<f64>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

const AGGREGATE_HEADER: [&str; 15] = [
    "family",
    "curves_per_dof",
    "seed",
    "width",
    "qe_encoded",
    "qe_encoded_scaled",
    "qe_angle",
    "topographic_error",
    "neighbor_coherence_ratio",
    "initial_qe_encoded",
    "initial_qe_angle",
    "initial_topographic_error",
    "undecodable_units",
    "excluded_samples",
    "error",
];

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.result.is_err())
    }

    pub fn summaries(&self) -> Vec<CellSummary> {
        self.config
            .cells()
            .into_iter()
            .map(|cell| {
                let ok: Vec<&RunRecord> = self
                    .runs
                    .iter()
                    .filter(|r| r.cell == cell)
                    .filter_map(|r| r.result.as_ref().ok())
                    .collect();
                let pick = |f: fn(&MetricsReport) -> f64| median(&ok.iter().map(|r| f(&r.trained)).collect::<Vec<_>>());
                CellSummary {
                    cell,
                    runs: ok.len(),
                    median_qe_angle: pick(|m| m.qe_angle),
                    median_qe_encoded: pick(|m| m.qe_encoded),
                    median_topographic_error: pick(|m| m.topographic_error),
                }
            })
            .collect()
    }

    pub fn summary(&self, cell: Cell) -> Option<CellSummary> {
        self.summaries().into_iter().find(|s| s.cell == cell)
    }

    /// One row per cell and seed.
    pub fn aggregate_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(AGGREGATE_HEADER)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for run in &self.runs {
            let mut row = vec![
                run.cell.family.to_string(),
                run.cell.curves_per_dof().to_string(),
                run.seed.to_string(),
            ];
            match &run.result {
                Ok(r) => {
                    let m = &r.trained;
                    row.extend([
                        m.width.to_string(),
                        m.qe_encoded.to_string(),
                        m.qe_encoded_scaled.to_string(),
                        m.qe_angle.to_string(),
                        m.topographic_error.to_string(),
                        opt(m.neighbor_coherence_ratio),
                        r.initial.qe_encoded.to_string(),
                        r.initial.qe_angle.to_string(),
                        r.initial.topographic_error.to_string(),
                        m.undecodable_units.len().to_string(),
                        m.excluded_samples.to_string(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    row.extend(std::iter::repeat_n(String::new(), AGGREGATE_HEADER.len() - 4));
                    row.push(e.clone());
                }
            }
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn medians_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["family", "curves_per_dof", "runs", "median_qe_angle", "median_qe_encoded", "median_topographic_error"])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for s in self.summaries() {
            w.write_record([
                s.cell.family.to_string(),
                s.cell.curves_per_dof().to_string(),
                s.runs.to_string(),
                opt(s.median_qe_angle),
                opt(s.median_qe_encoded),
                opt(s.median_topographic_error),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Median qe_angle grouped by family, one bar per curve count.
    pub fn bar_chart(&self) -> String {
        let mut groups: Vec<BarGroup> = Vec::new();
        for s in self.summaries() {
            let bar = (
                match s.cell.curves {
                    Some(n) => format!("n = {n}"),
                    None => "inputs only".to_string(),
                },
                s.median_qe_angle.unwrap_or(f64::NAN),
            );
            match groups.iter_mut().find(|g| g.label == s.cell.family.to_string()) {
                Some(g) => g.bars.push(bar),
                None => groups.push(BarGroup {
                    label: s.cell.family.to_string(),
                    bars: vec![bar],
                }),
            }
        }
        let seeds = self.config.seeds.len();
        plot_grouped_bars(
            &format!("median quantization error over {seeds} seeds"),
            "qe in normalized angle space",
            &groups,
        )
    }

    /// Writes `config.json`, `runs/<cell>_seed<seed>.json`, `aggregate.csv`,
    /// `medians.csv` and `qe_angle.svg` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let runs_dir = dir.join("runs");
        std::fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
        write_json(&dir.join("config.json"), &self.config)?;
        for run in &self.runs {
            let path = runs_dir.join(format!("{}_seed{}.json", run.cell.label(), run.seed));
            write_json(&path, run)?;
        }
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        write("aggregate.csv", self.aggregate_csv()?)?;
        write("medians.csv", self.medians_csv()?)?;
        write("qe_angle.svg", self.bar_chart())
    }
}

/// Runs every cell and seed. Cells run in parallel; a failing cell is
/// recorded and the rest continue. Outputs are written when `out_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let ds = cfg.data.load()?;
    let outcome = run_experiment_on(cfg, &ds)?;
    if let Some(dir) = &cfg.out_dir {
        outcome.write(dir)?;
    }
    Ok(outcome)
}

/// As [`run_experiment`] on an already loaded dataset, without writing.
pub fn run_experiment_on(cfg: &ExperimentConfig, ds: &Dataset) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let runs: Vec<RunOutcome> = cfg
        .cells()
        .into_par_iter()
        .flat_map_iter(|cell| {
            let prepared = build_codec(cell.spec(), ds.joints())
                .and_then(|codec| codec.encode_dataset(ds).map(|enc| (codec, enc)));
            let results: Vec<RunOutcome> = cfg
                .seeds
                .par_iter()
                .map(|&seed| {
                    let result = match &prepared {
                        Ok((codec, enc)) => run_encoded(ds, cfg, codec, enc, cell, seed).map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    if let Err(e) = &result {
                        log::error!("{} seed {seed} failed: {e}", cell.label());
                    }
                    RunOutcome { cell, seed, result }
                })
                .collect();
            results
        })
        .collect();
    Ok(ExperimentOutcome {
        config: cfg.clone(),
        runs,
    })
}

/// Outcome of a single update from one valid code toward another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyReport {
    pub family: Family,
    pub curves_per_dof: usize,
    pub joint: JointSpec,
    /// Angle encoded by the BMU before the update.
    pub weight_angle: f64,
    /// Angle of the presented input.
    pub input_angle: f64,
    pub alpha: f64,
    pub weight_code: Vec<f64>,
    pub input_code: Vec<f64>,
    pub updated: Vec<f64>,
    /// Angle whose code lies nearest to the updated weights.
    pub nearest_angle: f64,
    pub nearest_code: Vec<f64>,
    /// Distance from the updated weights to the nearest valid code.
    pub drift: f64,
    pub decoded_angle: Option<f64>,
}

/// Encodes both angles on a single-joint codec, moves the weight code
/// toward the input code by `alpha` and measures how far the result is
/// from any valid code.
pub fn demo_inconsistency(
    spec: CodecSpec,
    joint: JointSpec,
    weight_angle: f64,
    input_angle: f64,
    alpha: f64,
) -> Result<InconsistencyReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let codec = build_codec(spec, std::slice::from_ref(&joint))?;
    let weight_code = codec.encode_sample(&[weight_angle])?.values;
    let input_code = codec.encode_sample(&[input_angle])?.values;
    let updated: Vec<f64> = weight_code
        .iter()
        .zip(&input_code)
        .map(|(w, x)| (1.0 - alpha) * w + alpha * x)
        .collect();
    let (nearest_angle, drift) = segment_manifold_distance(&codec, 0, &updated, &ManifoldConfig::default());
    Ok(InconsistencyReport {
        family: codec.family(),
        curves_per_dof: codec.curves_per_dof(),
        nearest_code: codec.encode_dof(0, nearest_angle),
        decoded_angle: decode_population(&codec, 0, &updated, &KdeConfig::default()).ok(),
        joint,
        weight_angle,
        input_angle,
        alpha,
        weight_code,
        input_code,
        updated,
        nearest_angle,
        drift,
    })
}

impl InconsistencyReport {
    pub fn to_svg(&self) -> String {
        let title = format!(
            "{} encoding of {}: one update at alpha = {}, distance to nearest valid code {:.4}",
            self.family, self.joint.name, self.alpha, self.drift
        );
        let input = format!("input ({} deg)", self.input_angle);
        let weight = format!("BMU weights ({} deg)", self.weight_angle);
        let updated = format!("updated (nearest {:.2} deg)", self.nearest_angle);
        plot_inconsistency(
            &title,
            [
                (&input, &self.input_code),
                (&weight, &self.weight_code),
                (&updated, &self.updated),
            ],
            &self.nearest_code,
        )
    }

    /// Writes `inconsistency.json` and `inconsistency.svg` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join("inconsistency.json"), self)?;
        let p = dir.join("inconsistency.svg");
        std::fs::write(&p, self.to_svg()).map_err(|e| Error::io(p, e))
    }
}
