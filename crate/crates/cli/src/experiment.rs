use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sstgcn_core::dataset::{assemble_dataset, split_dataset, DatasetParams, DynamicStreams, GeneratorConfig};
use sstgcn_core::roadgraph::{FilterKind, RoadNetwork};
use sstgcn_core::sstgcn::{ModelConfig, ModelParams};
use sstgcn_core::training::{evaluate, train, MetricsReport, TrainConfig};

use crate::util::{create_dir, read_config, write_atomic, write_json, CliError, UsageContext};
use crate::{FiltersArgs, GridArgs};

/// First column of the grid table.
pub const GRID_LABEL_COLUMN: &str = "KHOP/SeqNum/Interval";
const FILTERS_LABEL_COLUMN: &str = "Preprocessing";
const FILTERS_WINDOW: (usize, usize, usize) = (2, 3, 5);

/// Model and optimizer settings for one training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().usage_ctx("invalid model config")?;
        self.train.validate().usage_ctx("invalid training config")
    }
}

/// Axes and repeat count of a parameter sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub khop_values: Vec<usize>,
    pub seq_numbers: Vec<usize>,
    pub intervals: Vec<usize>,
    pub filters: Vec<FilterKind>,
    pub repeats: usize,
    /// Repeat `r` uses `seed + r` for the split and the initialization.
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            khop_values: vec![1, 2, 3, 4],
            seq_numbers: vec![2, 3, 4],
            intervals: vec![5, 10, 15],
            filters: vec![FilterKind::DistLap],
            repeats: 3,
            seed: 0,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), CliError> {
        if self.khop_values.is_empty() || self.seq_numbers.is_empty() || self.intervals.is_empty() {
            return Err(CliError::usage("experiment spec: every grid axis needs at least one value"));
        }
        if self.filters.is_empty() || self.repeats == 0 {
            return Err(CliError::usage("experiment spec: filters must be non-empty and repeats >= 1"));
        }
        RunConfig {
            model: self.model.clone(),
            train: self.train.clone(),
        }
        .validate()
    }
}

/// Test metrics of one repeat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub repeat: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs: usize,
    pub test: MetricsReport,
}

/// Metric means over repeats, in table order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub binary_accuracy: f64,
    pub auc: f64,
}

impl MeanMetrics {
    fn of(runs: &[RepeatResult]) -> Self {
        let mut sum = [0.0; 6];
        for r in runs {
            for (s, v) in sum.iter_mut().zip(r.test.values()) {
                *s += v;
            }
        }
        let m = sum.map(|s| s / runs.len() as f64);
        Self {
            loss: m[0],
            precision: m[1],
            recall: m[2],
            f1: m[3],
            binary_accuracy: m[4],
            auc: m[5],
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [self.loss, self.precision, self.recall, self.f1, self.binary_accuracy, self.auc]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCellResult {
    pub label: String,
    pub khop: usize,
    pub seq_num: usize,
    pub interval: usize,
    pub filter: FilterKind,
    pub samples: usize,
    pub positives: usize,
    /// Sum of every propagation-matrix entry in the cell's dataset.
    pub laplacian_checksum: f64,
    pub means: MeanMetrics,
    pub repeats: Vec<RepeatResult>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellFailure {
    pub label: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub generator: GeneratorConfig,
    pub spec: ExperimentSpec,
    pub cells: Vec<GridCellResult>,
    pub failures: Vec<CellFailure>,
}

struct World {
    net: RoadNetwork,
    streams: DynamicStreams,
    seed: u64,
    max_positives: Option<usize>,
}

fn build_world(gen: &GeneratorConfig) -> Result<World, CliError> {
    let (net, streams) = gen.generate_world().context("generating synthetic world")?;
    log::info!("world: {} roads, {} accidents", net.len(), streams.accidents.len());
    Ok(World {
        net,
        streams,
        seed: gen.seed,
        max_positives: gen.dataset.max_positives,
    })
}

fn run_cell(
    world: &World,
    spec: &ExperimentSpec,
    label: String,
    (khop, seq_num, interval): (usize, usize, usize),
    filter: FilterKind,
) -> anyhow::Result<GridCellResult> {
    let params = DatasetParams {
        seq_num,
        interval,
        khop,
        filter,
        max_positives: world.max_positives,
    };
    let samples = assemble_dataset(&world.net, &world.streams, &params, world.seed)?;
    let positives = samples.iter().filter(|s| s.label == 1).count();
    let laplacian_checksum = samples.iter().flat_map(|s| s.laplacian.data()).sum();
    let mut repeats = Vec::with_capacity(spec.repeats);
    for r in 0..spec.repeats {
        let seed = spec.seed + r as u64;
        let split = split_dataset(samples.clone(), seed)?;
        let cfg = TrainConfig {
            seed,
            ..spec.train.clone()
        };
        let model = ModelParams::init(&spec.model, seed)?;
        let outcome = train(model, &split.train, &split.val, &cfg)?;
        let (_, test) = evaluate(&outcome.model, &split.test)?;
        log::info!("{label} repeat {r}: test auc {:.4} (best epoch {})", test.auc, outcome.best_epoch);
        repeats.push(RepeatResult {
            repeat: r,
            seed,
            best_epoch: outcome.best_epoch,
            epochs: outcome.history.len(),
            test,
        });
    }
    Ok(GridCellResult {
        label,
        khop,
        seq_num,
        interval,
        filter,
        samples: samples.len(),
        positives,
        laplacian_checksum,
        means: MeanMetrics::of(&repeats),
        repeats,
    })
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))
}

fn write_tables(out: &Path, first: &str, stem: &str, cells: &[GridCellResult]) -> anyhow::Result<()> {
    let mut header = vec![first];
    header.extend(MetricsReport::COLUMNS);
    let means = cells.iter().map(|c| {
        let mut row = vec![c.label.clone()];
        row.extend(c.means.values().iter().map(f64::to_string));
        row
    });
    write_atomic(&out.join(format!("{stem}.csv")), &csv_bytes(&header, means)?)?;

    let mut raw_header = vec![first, "Repeat", "Seed", "Best Epoch"];
    raw_header.extend(MetricsReport::COLUMNS);
    let raw = cells.iter().flat_map(|c| {
        c.repeats.iter().map(|r| {
            let mut row = vec![c.label.clone(), r.repeat.to_string(), r.seed.to_string(), r.best_epoch.to_string()];
            row.extend(r.test.values().iter().map(f64::to_string));
            row
        })
    });
    write_atomic(&out.join(format!("{stem}_raw.csv")), &csv_bytes(&raw_header, raw)?)
}

/// Best cell per metric: lowest loss, highest everything else.
fn print_best(cells: &[GridCellResult]) {
    for (m, name) in MetricsReport::COLUMNS.iter().enumerate() {
        let better = |a: f64, b: f64| if m == 0 { a < b } else { a > b };
        let best = cells.iter().fold(None::<&GridCellResult>, |acc, c| match acc {
            Some(b) if !better(c.means.values()[m], b.means.values()[m]) => Some(b),
            _ => Some(c),
        });
        if let Some(c) = best {
            println!("best {name}: {} ({:.4})", c.label, c.means.values()[m]);
        }
    }
}

fn run_all(
    out: &Path,
    stem: &str,
    first: &str,
    gen: GeneratorConfig,
    spec: ExperimentSpec,
    cells: Vec<(String, (usize, usize, usize), FilterKind)>,
) -> Result<Vec<GridCellResult>, CliError> {
    let world = build_world(&gen)?;
    let cell_dir = out.join("cells");
    create_dir(&cell_dir)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (label, window, filter) in cells {
        log::info!("cell {label}: khop={} n={} k={} filter={filter}", window.0, window.1, window.2);
        match run_cell(&world, &spec, label.clone(), window, filter) {
            Ok(cell) => {
                write_json(&cell_dir.join(format!("{}.json", file_safe(&label))), &cell)?;
                println!("{label}: auc {:.4} loss {:.4}", cell.means.auc, cell.means.loss);
                results.push(cell);
            }
            Err(e) => {
                log::error!("cell {label} failed: {e:#}");
                println!("{label}: FAILED ({e:#})");
                failures.push(CellFailure {
                    label,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    write_tables(out, first, stem, &results)?;
    print_best(&results);
    let failed = failures.len();
    write_json(
        &out.join(format!("{stem}.json")),
        &ExperimentReport {
            generator: gen,
            spec,
            cells: results.clone(),
            failures,
        },
    )?;
    if failed > 0 {
        return Err(CliError::runtime(format!("{failed} cell(s) failed")));
    }
    Ok(results)
}

fn load_inputs(
    config: Option<&Path>,
    spec: Option<&Path>,
    seed: Option<u64>,
    repeats: Option<usize>,
    max_epochs: Option<usize>,
) -> Result<(GeneratorConfig, ExperimentSpec), CliError> {
    let mut gen: GeneratorConfig = read_config(config)?;
    let mut spec: ExperimentSpec = read_config(spec)?;
    if let Some(s) = seed {
        gen.seed = s;
        spec.seed = s;
    }
    if let Some(r) = repeats {
        spec.repeats = r;
    }
    if let Some(e) = max_epochs {
        spec.train.max_epochs = e;
    }
    gen.validate().usage_ctx("invalid generator config")?;
    Ok((gen, spec))
}

pub(crate) fn grid(a: GridArgs) -> Result<(), CliError> {
    let (gen, mut spec) = load_inputs(a.config.as_deref(), a.spec.as_deref(), a.seed, a.repeats, a.max_epochs)?;
    if let Some(k) = a.window.khop {
        spec.khop_values = vec![k];
    }
    if let Some(n) = a.window.seq_num {
        spec.seq_numbers = vec![n];
    }
    if let Some(k) = a.window.interval {
        spec.intervals = vec![k];
    }
    if let Some(f) = a.filter {
        spec.filters = vec![f];
    }
    spec.validate()?;

    let tag_filter = spec.filters.len() > 1;
    let mut cells = Vec::new();
    for &filter in &spec.filters {
        for &khop in &spec.khop_values {
            for &n in &spec.seq_numbers {
                for &k in &spec.intervals {
                    let mut label = format!("{khop}/{n}/{k}");
                    if tag_filter {
                        label = format!("{label} {filter}");
                    }
                    cells.push((label, (khop, n, k), filter));
                }
            }
        }
    }
    create_dir(&a.out)?;
    run_all(&a.out, "grid", GRID_LABEL_COLUMN, gen, spec, cells).map(|_| ())
}

pub(crate) fn filters(a: FiltersArgs) -> Result<(), CliError> {
    let (gen, mut spec) = load_inputs(a.config.as_deref(), a.spec.as_deref(), a.seed, a.repeats, a.max_epochs)?;
    let window = (
        a.window.khop.unwrap_or(FILTERS_WINDOW.0),
        a.window.seq_num.unwrap_or(FILTERS_WINDOW.1),
        a.window.interval.unwrap_or(FILTERS_WINDOW.2),
    );
    spec.khop_values = vec![window.0];
    spec.seq_numbers = vec![window.1];
    spec.intervals = vec![window.2];
    spec.filters = FilterKind::ALL.to_vec();
    spec.validate()?;

    log::info!("preprocessing comparison at khop={} n={} k={}", window.0, window.1, window.2);
    println!("khop={} n={} k={}", window.0, window.1, window.2);
    let cells = FilterKind::ALL
        .into_iter()
        .map(|f| (f.label().to_string(), window, f))
        .collect();
    create_dir(&a.out)?;
    let results = run_all(&a.out, "filters", FILTERS_LABEL_COLUMN, gen, spec, cells)?;
    for c in &results {
        println!("{}: propagation checksum {:.6}", c.filter, c.laplacian_checksum);
    }
    Ok(())
}
