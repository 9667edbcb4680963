//! Subcommand bodies. Each resolves flags over the config file over the
//! library defaults, runs, and writes a report that echoes the resolved
//! configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use mfgsense::anomaly::{
    builtin_datasets, default_grid, render_tables, run_benchmark, AnomalyDataset, BenchmarkOptions,
    DetectionSettings, GroundTruthRule,
};
use mfgsense::augment::{augment_splits, split_rpms, RpmDataset};
use mfgsense::autoenc::{
    default_train_config, synthetic_state_dataset, train_autoenc_classifier, AutoencArch, HeadAttachment,
};
use mfgsense::classify::{
    binary_relax_set, cross_rpm_matrix, defect_samples, run_transfer_experiment, train_classifier, tuning_sweep,
    ClassifierArch, CrossRpmConfig, LabeledSet, SampleConfig, SweepConfig, SweepMode, TrainConfig,
    TransferBundle, TransferExperiment, TuningStep,
};
use mfgsense::features::{AxisSelection, FeatureEncoder, Normalization};
use mfgsense::forecast::{ModelKind, ModelSpec};
use mfgsense::ingest::{
    check_cadence, format_timestamp, label_process_rows, parse_pharma_txt, parse_process_csv,
    parse_triaxial_csv, write_process_csv, write_triaxial_csv, LabelingConfig, TriaxialOptions, DEFAULT_TZ,
};
use mfgsense::ingest::default_abnormal_dates;
use mfgsense::split::SplitSpec;
use mfgsense::synth::{
    generate_process, generate_spike_series, generate_vibration, AmplitudeScaling, ProcessSynthConfig,
    SpikeSeriesConfig, SynthConfig,
};
use mfgsense::{rng, DefectLabel, MachineState, OperatingPoint, TimeSeries};

use crate::config::FileConfig;
use crate::{
    AutoencArgs, BenchArgs, CliError, CliResult, CrossRpmArgs, IngestArgs, SampleArgs, SynthArgs, TrainArgs,
    TrainingArgs, TransferArgs, TuneArgs,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reference speed of the power-law amplitude model.
const AMPLITUDE_REFERENCE_RPM: f64 = 450.0;
const DEFAULT_RPMS: [u32; 4] = [300, 400, 500, 600];

// ---------------------------------------------------------------------------
// Shared plumbing

#[derive(Debug, Serialize)]
struct Fingerprint {
    name: String,
    fingerprint: String,
}

/// Wrapper written around every non-benchmark result.
#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    artifact_version: &'a str,
    command: &'a str,
    seed: u64,
    run_config: Value,
    datasets: Vec<Fingerprint>,
    result: T,
}

fn fingerprint(name: impl Into<String>, fingerprint: String) -> Fingerprint {
    Fingerprint {
        name: name.into(),
        fingerprint,
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value).map_err(mfgsense::Error::from)? + "\n")
}

fn envelope_json<T: Serialize>(
    command: &str,
    seed: u64,
    run_config: Value,
    datasets: Vec<Fingerprint>,
    result: T,
) -> CliResult<String> {
    to_json(&Envelope {
        artifact_version: ARTIFACT_VERSION,
        command,
        seed,
        run_config,
        datasets,
        result,
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| mfgsense::Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| mfgsense::Error::io(path, e))?;
    Ok(())
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => {
            write_file(p, text)?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| mfgsense::Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn parse_tz(name: Option<&str>) -> CliResult<Tz> {
    match name {
        None => Ok(DEFAULT_TZ),
        Some(n) => n
            .parse()
            .map_err(|_| CliError::Usage(format!("unknown time zone '{n}'"))),
    }
}

fn parse_dates(texts: &[String]) -> CliResult<BTreeSet<NaiveDate>> {
    texts
        .iter()
        .map(|t| {
            NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d")
                .map_err(|_| CliError::Usage(format!("'{t}' is not a YYYY-MM-DD date")))
        })
        .collect()
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len().max(1) as f64).sqrt()
}

fn parse_axes(text: &str) -> CliResult<AxisSelection> {
    match text {
        "all" => Ok(AxisSelection::AllAxes),
        "xz" => Ok(AxisSelection::XZOnly),
        other => Err(CliError::Usage(format!("unknown axes '{other}' (expected all or xz)"))),
    }
}

fn axes_key(axes: AxisSelection) -> &'static str {
    match axes {
        AxisSelection::AllAxes => "all",
        AxisSelection::XZOnly => "xz",
    }
}

fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> u64 {
    flag.or(file.seed).unwrap_or(0)
}

/// Sample generation: flags, then `[datasets]`, then `base`.
fn resolve_samples(
    flags: &SampleArgs,
    file: &FileConfig,
    base: SampleConfig,
    default_exponent: Option<f64>,
) -> CliResult<SampleConfig> {
    let d = &file.datasets;
    let mut cfg = base;
    if let Some(n) = flags.per_class.or(d.per_class) {
        cfg.per_class = n;
    }
    if let Some(s) = flags.noise.or(d.noise_sigma) {
        cfg.noise_sigma = s;
    }
    if let Some(a) = flags.axes.as_deref().or(d.axes.as_deref()) {
        cfg.axes = parse_axes(a)?;
    }
    if let Some(e) = flags.amplitude_exponent.or(d.amplitude_exponent).or(default_exponent) {
        cfg.amplitude_scaling = AmplitudeScaling::PowerLaw {
            reference_rpm: AMPLITUDE_REFERENCE_RPM,
            exponent: e,
        };
    }
    Ok(cfg)
}

fn samples_json(cfg: &SampleConfig) -> Value {
    let exponent = match cfg.amplitude_scaling {
        AmplitudeScaling::Constant => Value::Null,
        AmplitudeScaling::PowerLaw { exponent, .. } => json!(exponent),
    };
    json!({
        "per_class": cfg.per_class,
        "sample_rate_hz": cfg.sample_rate_hz,
        "noise_sigma": cfg.noise_sigma,
        "axes": axes_key(cfg.axes),
        "amplitude_exponent": exponent,
    })
}

/// Training hyperparameters resolved in the same order.
struct Training {
    train: TrainConfig,
    arch: ClassifierArch,
    normalization: Normalization,
    train_fraction: f64,
    seed: u64,
}

impl Training {
    fn resolve(flags: &TrainingArgs, file: &FileConfig, base: TrainConfig) -> CliResult<Self> {
        let t = &file.training;
        let seed = resolve_seed(flags.seed, file);
        let train = TrainConfig {
            epochs: flags.epochs.or(t.epochs).unwrap_or(base.epochs),
            batch_size: flags.batch_size.or(t.batch_size).unwrap_or(base.batch_size),
            learning_rate: flags.lr.or(t.learning_rate).unwrap_or(base.learning_rate),
            seed,
        };
        train.validate()?;
        let arch = match flags.hidden.clone().or(t.hidden.clone()) {
            Some(hidden) => ClassifierArch { hidden },
            None => ClassifierArch::default(),
        };
        arch.validate()?;
        let normalization = match flags.normalization.as_deref().or(t.normalization.as_deref()) {
            Some(n) => n.parse()?,
            None => Normalization::ZScore,
        };
        let train_fraction = flags
            .train_fraction
            .or(file.datasets.train_fraction)
            .unwrap_or(0.7);
        SplitSpec {
            train_fraction,
            ..SplitSpec::classification(seed)
        }
        .validate()?;
        Ok(Training {
            train,
            arch,
            normalization,
            train_fraction,
            seed,
        })
    }

    fn to_json(&self) -> Value {
        json!({
            "epochs": self.train.epochs,
            "batch_size": self.train.batch_size,
            "learning_rate": self.train.learning_rate,
            "hidden": self.arch.hidden,
            "normalization": self.normalization.key(),
            "train_fraction": self.train_fraction,
        })
    }
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut a, b) {
        a.extend(b);
    }
    a
}

// ---------------------------------------------------------------------------
// ingest

pub fn ingest(a: IngestArgs) -> CliResult<()> {
    let tz = parse_tz(a.tz.as_deref())?;
    let digest = file_sha256(&a.input)?;
    let source = a.input.display().to_string();
    let (summary, config) = match a.kind.as_str() {
        "process" => {
            let rows = parse_process_csv(&a.input, tz)?;
            let abnormal_dates = match &a.abnormal_dates {
                Some(d) => parse_dates(d)?,
                None => default_abnormal_dates(),
            };
            let labeling = LabelingConfig {
                abnormal_dates,
                tz,
                ..LabelingConfig::default()
            };
            let labeled = label_process_rows(&rows, &labeling);
            let mut states: BTreeMap<&str, usize> = MachineState::ALL.iter().map(|s| (s.name(), 0)).collect();
            for r in &labeled {
                *states.entry(r.state.name()).or_default() += 1;
            }
            let means: BTreeMap<&str, f64> = mfgsense::ingest::MEASUREMENT_COLUMNS
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let sum: f64 = rows.iter().map(|r| r.measurements()[j]).sum();
                    (*name, sum / rows.len().max(1) as f64)
                })
                .collect();
            let summary = json!({
                "rows": rows.len(),
                "first": rows.first().map(|r| format_timestamp(r.timestamp, tz)),
                "last": rows.last().map(|r| format_timestamp(r.timestamp, tz)),
                "cadence": check_cadence(&rows),
                "state_counts": states,
                "column_means": means,
            });
            (summary, json!({ "labeling": labeling }))
        }
        "triaxial" => {
            let rate = a.rate.unwrap_or(3200.0);
            let rpm = a.rpm.unwrap_or(600);
            let records = parse_triaxial_csv(&a.input, &TriaxialOptions::new(rate, OperatingPoint::new(rpm)?))?;
            let per_record: Vec<Value> = records
                .iter()
                .map(|r| json!({ "samples": r.len(), "rms": [rms(&r.x), rms(&r.y), rms(&r.z)] }))
                .collect();
            (
                json!({ "records": records.len(), "per_record": per_record }),
                json!({ "sample_rate_hz": rate, "rpm": rpm }),
            )
        }
        "pharma" => {
            let records = parse_pharma_txt(&a.input, tz)?;
            let per_record: Vec<Value> = records
                .iter()
                .map(|r| {
                    json!({
                        "start": format_timestamp(r.start, tz),
                        "dt_s": r.dt_s,
                        "rms": [rms(&r.x), rms(&r.y), rms(&r.z)],
                    })
                })
                .collect();
            (
                json!({ "records": records.len(), "per_record": per_record }),
                json!({}),
            )
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown ingest kind '{other}' (expected process, triaxial or pharma)"
            )))
        }
    };
    let run_config = merge(json!({ "kind": a.kind, "input": source, "tz": tz.name() }), config);
    let text = envelope_json("ingest", 0, run_config, vec![fingerprint(source.clone(), digest)], summary)?;
    emit(a.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// synth

fn open_out(path: &Path) -> CliResult<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| mfgsense::Error::io(dir, e))?;
    }
    let f = fs::File::create(path).map_err(|e| mfgsense::Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

fn failure_days(cfg: &ProcessSynthConfig, offsets: &[u32]) -> BTreeSet<NaiveDate> {
    offsets.iter().map(|&k| cfg.day(k)).collect()
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let seed = a.seed.unwrap_or(0);
    let out = &a.out;
    let io = |e: std::io::Error| CliError::from(mfgsense::Error::io(out, e));
    match a.kind.as_str() {
        "vibration" => {
            let level: DefectLabel = a.level.as_deref().unwrap_or("normal").parse()?;
            let mut cfg = SynthConfig::new(a.rpm.unwrap_or(600), level, seed);
            if let Some(d) = a.duration {
                cfg.duration_s = d;
            }
            if let Some(r) = a.rate {
                cfg.sample_rate_hz = r;
            }
            if let Some(s) = a.noise {
                cfg.noise_sigma = s;
            }
            let rec = generate_vibration(&cfg)?;
            let mut w = open_out(out)?;
            write_triaxial_csv(&[rec], &mut w).map_err(io)?;
            w.flush().map_err(io)?;
        }
        "process" => {
            let mut cfg = ProcessSynthConfig::new(a.days.unwrap_or(7), BTreeSet::new(), seed);
            cfg.failure_days = failure_days(&cfg, a.failure_days.as_deref().unwrap_or(&[1]));
            cfg.labeling.abnormal_dates = cfg.failure_days.clone();
            let rows: Vec<_> = generate_process(&cfg)?.into_iter().map(|r| r.row).collect();
            let mut w = open_out(out)?;
            write_process_csv(&rows, cfg.labeling.tz, &mut w).map_err(io)?;
            w.flush().map_err(io)?;
        }
        "spikes" => {
            let cfg = SpikeSeriesConfig::chiller_like(a.spikes.unwrap_or(10), a.magnitude.unwrap_or(0.3), seed);
            let s = generate_spike_series(&cfg)?;
            let flags = s.truth_flags();
            let mut w = open_out(out)?;
            writeln!(w, "index,value,spike").map_err(io)?;
            for (i, v) in s.series.values.iter().enumerate() {
                writeln!(w, "{i},{v},{}", u8::from(flags[i])).map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown synth kind '{other}' (expected vibration, process or spikes)"
            )))
        }
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

/// Chiller 1 supply temperature from a process CSV, scored against the
/// default abnormal dates.
fn process_dataset(path: &Path) -> CliResult<AnomalyDataset> {
    let rows = parse_process_csv(path, DEFAULT_TZ)?;
    let first = rows
        .first()
        .ok_or_else(|| mfgsense::Error::Data(format!("{}: no rows", path.display())))?;
    let values: Vec<f64> = rows.iter().map(|r| r.chiller1_supply_tmp).collect();
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(AnomalyDataset {
        name: format!("process:{stem}"),
        series: TimeSeries::new(first.timestamp, mfgsense::ingest::PROCESS_INTERVAL_S, values)?,
        timestamps: Some(rows.iter().map(|r| r.timestamp).collect()),
        labels: None,
        injected: None,
        truth: GroundTruthRule::for_dates(&default_abnormal_dates(), DEFAULT_TZ),
    })
}

fn load_datasets(names: &[String], seed: u64) -> CliResult<Vec<AnomalyDataset>> {
    let mut out = Vec::new();
    let mut builtin = Vec::new();
    for n in names {
        match n.strip_prefix("process:") {
            Some(p) => out.push(process_dataset(&PathBuf::from(p))?),
            None => builtin.push(n.clone()),
        }
    }
    let mut all = builtin_datasets(&builtin, seed)?;
    all.extend(out);
    Ok(all)
}

fn parse_params(entries: &[String]) -> CliResult<BTreeMap<ModelKind, BTreeMap<String, String>>> {
    let mut map: BTreeMap<ModelKind, BTreeMap<String, String>> = BTreeMap::new();
    for e in entries {
        let bad = || CliError::Usage(format!("parameter '{e}' is not kind.key=value"));
        let (lhs, value) = e.split_once('=').ok_or_else(bad)?;
        let (kind, key) = lhs.split_once('.').ok_or_else(bad)?;
        map.entry(kind.parse()?)
            .or_default()
            .insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn bench(a: BenchArgs, file: &FileConfig) -> CliResult<()> {
    let seed = resolve_seed(a.seed, file);
    let names = a
        .datasets
        .clone()
        .or(file.datasets.names.clone())
        .unwrap_or_else(|| vec!["synth".into()]);
    let kinds: Vec<ModelKind> = match a.models.clone().or(file.models.kinds.clone()) {
        Some(k) => k.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        None => ModelKind::ALL.to_vec(),
    };
    let mut param_entries = file.models.params.clone().unwrap_or_default();
    param_entries.extend(a.params.iter().cloned());
    let overrides = parse_params(&param_entries)?;
    if let Some(k) = overrides.keys().find(|k| !kinds.contains(k)) {
        return Err(CliError::Usage(format!("parameter given for '{k}', which is not among the models")));
    }
    let mut grid = Vec::new();
    for kind in &kinds {
        match overrides.get(kind) {
            Some(o) => grid.push(ModelSpec::from_pairs(*kind, o)?),
            None => grid.extend(default_grid(*kind)),
        }
    }
    let defaults = DetectionSettings::default();
    let d = &file.detection;
    let detection = DetectionSettings {
        lambda: a.lambda.or(d.lambda).unwrap_or(defaults.lambda),
        two_sided: if a.one_sided { false } else { d.two_sided.unwrap_or(defaults.two_sided) },
        epsilon_scale: a.epsilon_scale.or(d.epsilon_scale).unwrap_or(defaults.epsilon_scale),
    };
    let mut split = SplitSpec::forecasting();
    if let Some(f) = a.train_fraction.or(file.datasets.train_fraction) {
        split.train_fraction = f;
    }
    split.validate()?;
    let opts = BenchmarkOptions {
        split,
        detection,
        seed,
        record_timings: a.timings,
    };
    let datasets = load_datasets(&names, seed)?;
    let run_config = json!({
        "command": "bench",
        "datasets": names,
        "models": kinds,
        "params": param_entries,
        "seed": seed,
        "detection": detection,
        "train_fraction": split.train_fraction,
        "timings": a.timings,
    });
    let mut report = run_benchmark(&datasets, &grid, &opts)?;
    report.artifact_version = ARTIFACT_VERSION.to_string();
    report.run_config = run_config;
    print!("{}", render_tables(&report));
    if let Some(out) = &a.out {
        write_file(out, &report.to_json()?)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train

fn resolve_rpms(flag: &Option<Vec<u32>>, file: &FileConfig) -> Vec<u32> {
    flag.clone()
        .or(file.datasets.rpms.clone())
        .unwrap_or_else(|| DEFAULT_RPMS.to_vec())
}

fn per_rpm_samples(rpms: &[u32], samples: &SampleConfig, seed: u64) -> CliResult<Vec<RpmDataset>> {
    rpms.iter()
        .enumerate()
        .map(|(k, &rpm)| {
            Ok(RpmDataset {
                rpm,
                set: defect_samples(rpm, samples, rng::child_seed(seed, k as u64))?,
            })
        })
        .collect()
}

fn encode(enc: &FeatureEncoder, set: &LabeledSet) -> CliResult<LabeledSet> {
    Ok(LabeledSet::new(enc.transform(&set.features)?, set.labels.clone(), set.class_names.clone())?)
}

fn maybe_binary(set: LabeledSet, binary: bool) -> CliResult<LabeledSet> {
    Ok(if binary { binary_relax_set(&set)? } else { set })
}

pub fn train(a: TrainArgs, file: &FileConfig) -> CliResult<()> {
    let t = Training::resolve(&a.training, file, TrainConfig::default())?;
    let samples = resolve_samples(&a.samples, file, SampleConfig::default(), None)?;
    let binary = a.binary || file.training.binary.unwrap_or(false);
    let augment = a.augment.or(file.training.augment);

    // (train set, named test sets, dataset fingerprints, source description)
    let (train_set, tests, fingerprints, source, data_config) = match augment {
        Some(n_new) => {
            let rpms = resolve_rpms(&a.rpms, file);
            let per = per_rpm_samples(&rpms, &samples, t.seed)?;
            let splits = split_rpms(&per, t.train_fraction, t.seed)?;
            let pooled = augment_splits(&splits, n_new, rng::child_seed(t.seed, 1000))?;
            let fps = per
                .iter()
                .map(|p| fingerprint(format!("synth-defect-{}rpm", p.rpm), p.set.fingerprint()))
                .collect();
            let mut tests = Vec::new();
            for s in &splits {
                tests.push((format!("{}rpm", s.rpm), maybe_binary(s.test.clone(), binary)?));
            }
            let cfg = json!({ "rpms": rpms, "augment": n_new, "interpolated": pooled.count(true) });
            let name = format!("synth-defect-{}", rpms.iter().map(u32::to_string).collect::<Vec<_>>().join("-"));
            (maybe_binary(pooled.set, binary)?, tests, fps, name, cfg)
        }
        None => {
            let rpm = a.rpm.or(file.datasets.rpm).unwrap_or(600);
            let set = defect_samples(rpm, &samples, rng::child_seed(t.seed, 0))?;
            let fp = fingerprint(format!("synth-defect-{rpm}rpm"), set.fingerprint());
            let (train, test) = maybe_binary(set, binary)?.split(t.train_fraction, t.seed)?;
            (
                train,
                vec![(format!("{rpm}rpm"), test)],
                vec![fp],
                format!("synth-defect-{rpm}rpm"),
                json!({ "rpm": rpm }),
            )
        }
    };

    let encoder = FeatureEncoder::fit_matrix(&train_set.features, t.normalization)?;
    let model = train_classifier(&encode(&encoder, &train_set)?, &t.arch, &t.train)?;
    let mut evaluations = BTreeMap::new();
    for (name, test) in &tests {
        evaluations.insert(name.clone(), model.evaluate(&encode(&encoder, test)?)?);
    }
    let loss_history = model.loss_history.clone();
    let bundle = TransferBundle::new(model, encoder, source)?;

    let run_config = merge(
        json!({
            "command": "train",
            "seed": t.seed,
            "binary": binary,
            "samples": samples_json(&samples),
            "training": t.to_json(),
        }),
        data_config,
    );
    let result = json!({
        "n_train": train_set.len(),
        "train_class_counts": train_set.class_counts(),
        "class_names": train_set.class_names,
        "evaluations": evaluations,
        "loss_history": loss_history,
        "provenance": bundle.provenance,
    });
    fs::create_dir_all(&a.out).map_err(|e| mfgsense::Error::io(&a.out, e))?;
    bundle.save(&a.out.join("model.json"))?;
    let text = envelope_json("train", t.seed, run_config, fingerprints, result)?;
    write_file(&a.out.join("report.json"), &text)?;
    for (name, e) in &evaluations {
        println!("{name}: accuracy {:.4}", e.accuracy);
    }
    eprintln!("wrote {}", a.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// transfer

pub fn transfer(a: TransferArgs, file: &FileConfig) -> CliResult<()> {
    let base = TransferExperiment::default();
    let t = Training::resolve(&a.training, file, base.train.clone())?;
    let source = resolve_samples(&a.samples, file, base.source.clone(), None)?;
    let tr = &file.training;
    let mut transfer = base.transfer.clone();
    if let Some(s) = a.lr_scale.or(tr.lr_scale) {
        transfer.lr_scale = s;
    }
    transfer.freeze_hidden = a.freeze_hidden || tr.freeze_hidden.unwrap_or(false);
    let cfg = TransferExperiment {
        rpm: a.rpm.or(file.datasets.rpm).unwrap_or(base.rpm),
        source,
        target_per_class: a
            .target_per_class
            .or(file.datasets.target_per_class)
            .unwrap_or(base.target_per_class),
        mems: base.mems.clone(),
        normalization: t.normalization,
        arch: t.arch.clone(),
        train: t.train.clone(),
        transfer,
        train_fraction: t.train_fraction,
        seed: t.seed,
    };
    let report = run_transfer_experiment(&cfg)?;
    println!(
        "source {:.4}  dnn-r {:.4}  dnn-tl {:.4}  zero-shot {:.4}  gain {:+.4}",
        report.source.accuracy,
        report.dnn_r.accuracy,
        report.dnn_tl.accuracy,
        report.zero_shot.accuracy,
        report.gain()
    );
    let fps = vec![
        fingerprint("synth-source", report.source_fingerprint.clone()),
        fingerprint("synth-mems-target", report.target_fingerprint.clone()),
    ];
    let run_config = json!({ "command": "transfer", "experiment": cfg });
    let result = merge(serde_json::to_value(&report).map_err(mfgsense::Error::from)?, json!({ "gain": report.gain() }));
    let text = envelope_json("transfer", t.seed, run_config, fps, result)?;
    emit(a.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// cross-rpm

pub fn cross_rpm(a: CrossRpmArgs, file: &FileConfig) -> CliResult<()> {
    let t = Training::resolve(&a.training, file, TrainConfig::default())?;
    let samples = resolve_samples(&a.samples, file, SampleConfig::default(), Some(1.0))?;
    let rpms = resolve_rpms(&a.rpms, file);
    let augment = match a.augment.or(file.training.augment) {
        Some(0) => None,
        Some(n) => Some(n),
        None => CrossRpmConfig::default().augment,
    };
    let cfg = CrossRpmConfig {
        normalization: t.normalization,
        arch: t.arch.clone(),
        train: t.train.clone(),
        train_fraction: t.train_fraction,
        augment,
        seed: t.seed,
    };
    let per = per_rpm_samples(&rpms, &samples, t.seed)?;
    let grid = cross_rpm_matrix(&per, &cfg)?;
    print!("{}", grid.render());
    let fps = per
        .iter()
        .map(|p| fingerprint(format!("synth-defect-{}rpm", p.rpm), p.set.fingerprint()))
        .collect();
    let run_config = json!({
        "command": "cross-rpm",
        "rpms": rpms,
        "samples": samples_json(&samples),
        "config": cfg,
    });
    let result = json!({
        "grid": grid,
        "worst_single_average": grid.worst_single_average(),
        "augmented_average": grid.augmented.as_ref().and_then(|r| r.average),
    });
    let text = envelope_json("cross-rpm", t.seed, run_config, fps, result)?;
    emit(a.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// tune

pub fn tune(a: TuneArgs, file: &FileConfig) -> CliResult<()> {
    let t = Training::resolve(&a.training, file, TrainConfig::default())?;
    let samples = resolve_samples(&a.samples, file, SampleConfig::default(), None)?;
    let rpm = a.rpm.or(file.datasets.rpm).unwrap_or(600);
    let step_texts = if a.steps.is_empty() {
        file.training.steps.clone().unwrap_or_default()
    } else {
        a.steps.clone()
    };
    let steps = if step_texts.is_empty() {
        TuningStep::default_ledger()
    } else {
        step_texts.iter().map(|s| TuningStep::parse(s)).collect::<Result<_, _>>()?
    };
    let mode: SweepMode = a.mode.as_deref().or(file.training.mode.as_deref()).unwrap_or("cumulative").parse()?;
    let cfg = SweepConfig {
        mode,
        arch: t.arch.clone(),
        train: t.train.clone(),
        train_fraction: t.train_fraction,
        seed: t.seed,
    };
    let set = defect_samples(rpm, &samples, rng::child_seed(t.seed, 0))?;
    let entries = tuning_sweep(&set, &steps, &cfg)?;
    for e in &entries {
        match (e.accuracy, &e.error) {
            (Some(acc), _) => println!("{:<40} {:.4}", e.step, acc),
            (None, Some(err)) => println!("{:<40} error: {err}", e.step),
            (None, None) => println!("{:<40} -", e.step),
        }
    }
    let run_config = json!({
        "command": "tune",
        "rpm": rpm,
        "samples": samples_json(&samples),
        "steps": steps,
        "config": cfg,
    });
    let fps = vec![fingerprint(format!("synth-defect-{rpm}rpm"), set.fingerprint())];
    let text = envelope_json("tune", t.seed, run_config, fps, json!({ "entries": entries }))?;
    emit(a.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// autoenc

pub fn autoenc(a: AutoencArgs, file: &FileConfig) -> CliResult<()> {
    let t = Training::resolve(&a.training, file, default_train_config())?;
    let tr = &file.training;
    let alpha = a.alpha.or(tr.alpha).unwrap_or(0.5);
    let head_on = match a.head_on.as_deref().or(tr.head_on.as_deref()).unwrap_or("latent") {
        "latent" => HeadAttachment::Latent,
        "hidden" => HeadAttachment::EncoderHidden,
        other => {
            return Err(CliError::Usage(format!(
                "unknown head attachment '{other}' (expected latent or hidden)"
            )))
        }
    };
    let arch = AutoencArch {
        head_on,
        ..AutoencArch::default()
    };
    let days = a.days.or(file.datasets.days).unwrap_or(7);
    let offsets = a
        .failure_days
        .clone()
        .or(file.datasets.failure_days.clone())
        .unwrap_or_else(|| vec![1]);
    let calendar = ProcessSynthConfig::new(days, BTreeSet::new(), 0);
    let set = synthetic_state_dataset(days, &failure_days(&calendar, &offsets), t.seed)?;
    let (train, test) = set.split(t.train_fraction, t.seed)?;
    let model = train_autoenc_classifier(&train, &arch, alpha, &t.train)?;
    let eval = model.evaluate(&test)?;
    println!("state accuracy {:.4}", eval.accuracy);

    let run_config = json!({
        "command": "autoenc",
        "seed": t.seed,
        "days": days,
        "failure_days": offsets,
        "alpha": alpha,
        "arch": arch,
        "training": {
            "epochs": t.train.epochs,
            "batch_size": t.train.batch_size,
            "learning_rate": t.train.learning_rate,
            "train_fraction": t.train_fraction,
        },
    });
    let result = json!({
        "n_train": train.len(),
        "n_test": test.len(),
        "class_names": set.class_names,
        "class_counts": set.class_counts(),
        "evaluation": eval,
        "curves": model.curves,
    });
    fs::create_dir_all(&a.out).map_err(|e| mfgsense::Error::io(&a.out, e))?;
    model.save(&a.out.join("model.json"))?;
    let fps = vec![fingerprint("synth-plant-states", set.fingerprint())];
    let text = envelope_json("autoenc", t.seed, run_config, fps, result)?;
    write_file(&a.out.join("report.json"), &text)?;
    eprintln!("wrote {}", a.out.display());
    Ok(())
}
