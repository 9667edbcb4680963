//! Datasets × model-variant sweep with RMSE and detection scoring.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forecast::{FittedForecaster, ForecastModelConfig, ModelKind, ModelSpec};
use crate::metrics::{precision_recall_f1_masked, rmse};
use crate::rng;
use crate::split::SplitSpec;

use super::{detect_series, hex, AnomalyDataset, DetectionSettings};

pub const BENCH_FORMAT_VERSION: u32 = 1;

/// Conventions stated in every report.
const CONVENTIONS: [&str; 5] = [
    "rolling one-step evaluation: each test point is forecast from true past values only",
    "networks are fitted on the z-scored training split; classical models on raw values",
    "relative error r = (predicted - actual) / max(|predicted|, epsilon), epsilon = epsilon_scale * training RMS",
    "vibration ground truth: Failure = anomaly, Normal = not, NearFailure excluded from scoring",
    "best variant per model: lowest RMSE for the RMSE table, highest F1 (then lowest RMSE) for the detection table",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub split: SplitSpec,
    pub detection: DetectionSettings,
    pub seed: u64,
    /// Wall-clock timings make reruns differ, so they are opt-in.
    pub record_timings: bool,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        BenchmarkOptions {
            split: SplitSpec::forecasting(),
            detection: DetectionSettings::default(),
            seed: 0,
            record_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub fingerprint: String,
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub ground_truth: String,
}

/// One (dataset, model variant) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub dataset: String,
    pub model: ModelKind,
    pub variant: String,
    pub seed: u64,
    pub config_hash: String,
    pub n_test: usize,
    pub n_scored: usize,
    pub rmse: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub true_positives: Option<usize>,
    pub false_positives: Option<usize>,
    pub false_negatives: Option<usize>,
    pub flagged: Option<usize>,
    pub runtime_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format_version: u32,
    pub artifact_version: String,
    /// Resolved run configuration supplied by the caller, echoed verbatim.
    pub run_config: serde_json::Value,
    pub options: BenchmarkOptions,
    pub conventions: Vec<String>,
    pub datasets: Vec<DatasetSummary>,
    /// Best-by-RMSE cell per (dataset, model).
    pub rmse_table: Vec<GridCell>,
    /// Best-by-F1 cell per (dataset, model).
    pub detection_table: Vec<GridCell>,
    pub grid: Vec<GridCell>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Variants searched per model when the caller does not supply a grid.
pub fn default_grid(kind: ModelKind) -> Vec<ModelSpec> {
    use crate::forecast::{ArimaParams, AutoRegressionParams, SeasonalNaiveParams};
    match kind {
        ModelKind::SeasonalNaive => [1, 10]
            .into_iter()
            .map(|m| ModelSpec::SeasonalNaive(SeasonalNaiveParams { m }))
            .collect(),
        ModelKind::AutoRegression => [5, 10]
            .into_iter()
            .map(|p| ModelSpec::AutoRegression(AutoRegressionParams { p, intercept: true }))
            .collect(),
        ModelKind::Arima => [(10, 1), (10, 0)]
            .into_iter()
            .map(|(p, d)| ModelSpec::Arima(ArimaParams { p, d, q: 0 }))
            .collect(),
        other => vec![ModelSpec::default_for(other)],
    }
}

fn config_hash(cfg: &ForecastModelConfig) -> String {
    let text = serde_json::to_string(cfg).expect("configs serialize");
    hex(&Sha256::digest(text.as_bytes()))[..16].to_string()
}

struct Prepared<'a> {
    ds: &'a AnomalyDataset,
    train: Vec<f64>,
    test: Vec<f64>,
    truth_test: Vec<Option<bool>>,
    summary: DatasetSummary,
}

fn prepare<'a>(ds: &'a AnomalyDataset, split: &SplitSpec) -> Result<Prepared<'a>> {
    let (train, test) = split.split_series(&ds.series)?;
    let truth = ds.ground_truth()?;
    let n_train = train.len();
    Ok(Prepared {
        ds,
        truth_test: truth[n_train..].to_vec(),
        summary: DatasetSummary {
            name: ds.name.clone(),
            fingerprint: ds.fingerprint(),
            n: ds.len(),
            n_train,
            n_test: test.len(),
            ground_truth: ds.truth.describe(),
        },
        train: train.values,
        test: test.values,
    })
}

fn evaluate_cell(p: &Prepared, spec: &ModelSpec, seed: u64, opts: &BenchmarkOptions) -> GridCell {
    let config = ForecastModelConfig { spec: *spec, seed };
    let mut cell = GridCell {
        dataset: p.ds.name.clone(),
        model: spec.kind(),
        variant: spec.describe(),
        seed,
        config_hash: config_hash(&config),
        n_test: p.test.len(),
        n_scored: p.truth_test.iter().filter(|t| t.is_some()).count(),
        rmse: None,
        precision: None,
        recall: None,
        f1: None,
        true_positives: None,
        false_positives: None,
        false_negatives: None,
        flagged: None,
        runtime_s: None,
        error: None,
    };
    let started = Instant::now();
    let outcome = (|| -> Result<()> {
        spec.validate()?;
        let model = FittedForecaster::fit_values(&config, &p.train)?;
        let rule = opts.detection.rule_for(&p.train)?;
        let det = detect_series(&model, &p.test, &rule)?;
        cell.rmse = Some(rmse(&det.predictions, &p.test)?);
        cell.flagged = Some(det.flags.iter().filter(|f| **f).count());
        let score = precision_recall_f1_masked(&det.flags, &p.truth_test)?;
        cell.precision = Some(score.precision);
        cell.recall = Some(score.recall);
        cell.f1 = Some(score.f1);
        cell.true_positives = Some(score.true_positives);
        cell.false_positives = Some(score.false_positives);
        cell.false_negatives = Some(score.false_negatives);
        Ok(())
    })();
    if let Err(e) = outcome {
        cell.error = Some(e.to_string());
    }
    if opts.record_timings {
        cell.runtime_s = Some(started.elapsed().as_secs_f64());
    }
    cell
}

fn pick_best(rows: &[&GridCell], by_f1: bool) -> GridCell {
    let ok: Vec<&&GridCell> = rows.iter().filter(|c| c.error.is_none()).collect();
    let best = ok.into_iter().reduce(|a, b| {
        let better = if by_f1 {
            let (fa, fb) = (a.f1.unwrap_or(-1.0), b.f1.unwrap_or(-1.0));
            fb > fa || (fb == fa && b.rmse.unwrap_or(f64::INFINITY) < a.rmse.unwrap_or(f64::INFINITY))
        } else {
            b.rmse.unwrap_or(f64::INFINITY) < a.rmse.unwrap_or(f64::INFINITY)
        };
        if better {
            b
        } else {
            a
        }
    });
    (*best.unwrap_or(&rows[0])).clone()
}

/// Fits every variant in `grid` on every dataset, in parallel. A failing
/// cell records its error and the sweep carries on.
pub fn run_benchmark(datasets: &[AnomalyDataset], grid: &[ModelSpec], opts: &BenchmarkOptions) -> Result<BenchmarkReport> {
    if datasets.is_empty() || grid.is_empty() {
        return Err(Error::Config("benchmark needs at least one dataset and one model".into()));
    }
    opts.split.validate()?;
    let prepared: Vec<Prepared> = datasets.iter().map(|d| prepare(d, &opts.split)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|d| (0..grid.len()).map(move |g| (d, g)))
        .collect();
    let cells: Vec<GridCell> = jobs
        .par_iter()
        .map(|&(d, g)| {
            let seed = rng::child_seed(rng::child_seed(opts.seed, d as u64), g as u64);
            evaluate_cell(&prepared[d], &grid[g], seed, opts)
        })
        .collect();

    let mut kinds: Vec<ModelKind> = Vec::new();
    for s in grid {
        if !kinds.contains(&s.kind()) {
            kinds.push(s.kind());
        }
    }
    let mut rmse_table = Vec::new();
    let mut detection_table = Vec::new();
    for p in &prepared {
        for &k in &kinds {
            let rows: Vec<&GridCell> = cells.iter().filter(|c| c.dataset == p.ds.name && c.model == k).collect();
            rmse_table.push(pick_best(&rows, false));
            detection_table.push(pick_best(&rows, true));
        }
    }
    Ok(BenchmarkReport {
        format_version: BENCH_FORMAT_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        run_config: serde_json::Value::Null,
        options: opts.clone(),
        conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
        datasets: prepared.into_iter().map(|p| p.summary).collect(),
        rmse_table,
        detection_table,
        grid: cells,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.digits$}"))
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if i == 0 {
                    format!("{s:<w$}", w = widths[i])
                } else {
                    format!("{s:>w$}", w = widths[i])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// RMSE grid (models × datasets) and per-dataset precision/recall/F1 rows.
pub fn render_tables(report: &BenchmarkReport) -> String {
    let names: Vec<&str> = report.datasets.iter().map(|d| d.name.as_str()).collect();
    let mut kinds: Vec<ModelKind> = Vec::new();
    for c in &report.rmse_table {
        if !kinds.contains(&c.model) {
            kinds.push(c.model);
        }
    }
    let find = |table: &[GridCell], ds: &str, k: ModelKind| -> Option<GridCell> {
        table.iter().find(|c| c.dataset == ds && c.model == k).cloned()
    };

    let mut out = String::from("RMSE (best variant per model; lower is better)\n");
    let mut rows = vec![std::iter::once("model".to_string()).chain(names.iter().map(|s| s.to_string())).collect()];
    for &k in &kinds {
        let mut row = vec![k.to_string()];
        for ds in &names {
            row.push(match find(&report.rmse_table, ds, k) {
                Some(c) if c.error.is_none() => fmt_opt(c.rmse, 4),
                Some(_) => "error".into(),
                None => "-".into(),
            });
        }
        rows.push(row);
    }
    out.push_str(&aligned(&rows));

    let _ = writeln!(
        out,
        "\nDetection (lambda = {}, {}; best variant by F1)",
        report.options.detection.lambda,
        if report.options.detection.two_sided { "two-sided" } else { "one-sided" }
    );
    let mut rows = vec![vec![
        "model".to_string(),
        "dataset".into(),
        "precision".into(),
        "recall".into(),
        "f1".into(),
        "flagged".into(),
        "scored".into(),
    ]];
    for &k in &kinds {
        for ds in &names {
            if let Some(c) = find(&report.detection_table, ds, k) {
                let mut row = vec![k.to_string(), ds.to_string()];
                if let Some(e) = &c.error {
                    row.push(format!("error: {e}"));
                } else {
                    row.push(fmt_opt(c.precision, 3));
                    row.push(fmt_opt(c.recall, 3));
                    row.push(fmt_opt(c.f1, 3));
                    row.push(c.flagged.map_or("-".into(), |f| f.to_string()));
                    row.push(c.n_scored.to_string());
                }
                rows.push(row);
            }
        }
    }
    out.push_str(&aligned(&rows));
    let errors = report.grid.iter().filter(|c| c.error.is_some()).count();
    let _ = writeln!(out, "\n{} grid rows, {} with errors", report.grid.len(), errors);
    out
}
