use std::path::{Path, PathBuf};

use anyhow::Context;
use sstgcn_core::dataset::{assemble_dataset, load_samples, save_samples, split_dataset, GeneratorConfig, Sample};
use sstgcn_core::sstgcn::{load_checkpoint, load_checkpoint_for, save_checkpoint, ModelConfig, ModelParams};
use sstgcn_core::training::{evaluate, roc_curve, train as fit, write_history_csv, write_history_json};

use crate::experiment::RunConfig;
use crate::util::{create_dir, read_config, write_json, CliError, UsageContext};
use crate::{EvalArgs, GenArgs, TrainArgs, WindowArgs};

pub(crate) fn apply_window(cfg: &mut GeneratorConfig, w: &WindowArgs) {
    if let Some(k) = w.khop {
        cfg.dataset.khop = k;
    }
    if let Some(n) = w.seq_num {
        cfg.dataset.seq_num = n;
    }
    if let Some(k) = w.interval {
        cfg.dataset.interval = k;
    }
}

/// `<dir>/<stem>.<suffix>` next to a dataset path.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub(crate) fn gen(a: GenArgs) -> Result<(), CliError> {
    let mut cfg: GeneratorConfig = read_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    apply_window(&mut cfg, &a.window);
    if let Some(f) = a.filter {
        cfg.dataset.filter = f;
    }
    cfg.validate().usage_ctx("invalid generator config")?;

    let (net, streams) = cfg.generate_world().context("generating synthetic world")?;
    let samples = assemble_dataset(&net, &streams, &cfg.dataset, cfg.seed).context("assembling dataset")?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    net.save(&sibling(&a.out, "network.json")).context("writing network")?;
    streams.save(&sibling(&a.out, "streams.json")).context("writing streams")?;
    save_samples(&a.out, &samples).with_context(|| format!("writing {}", a.out.display()))?;

    let positives = samples.iter().filter(|s| s.label == 1).count();
    let nodes: Vec<usize> = samples.iter().map(Sample::n_nodes).collect();
    let mean_nodes = nodes.iter().sum::<usize>() as f64 / nodes.len().max(1) as f64;
    println!(
        "samples {} positives {} roads {} accidents {} nodes mean {:.2} max {}",
        samples.len(),
        positives,
        net.len(),
        streams.accidents.len(),
        mean_nodes,
        nodes.iter().max().unwrap_or(&0)
    );
    println!(
        "khop={} n={} k={} filter={}",
        cfg.dataset.khop, cfg.dataset.seq_num, cfg.dataset.interval, cfg.dataset.filter
    );
    Ok(())
}

pub(crate) fn train(a: TrainArgs) -> Result<(), CliError> {
    let mut rc: RunConfig = read_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        rc.train.seed = seed;
    }
    if let Some(e) = a.max_epochs {
        rc.train.max_epochs = e;
    }
    rc.validate()?;

    let samples = load_samples(&a.dataset).with_context(|| format!("loading dataset {}", a.dataset.display()))?;
    check_widths(&samples, &rc.model)?;
    let split = split_dataset(samples, rc.train.seed).context("splitting dataset")?;
    let model = ModelParams::init(&rc.model, rc.train.seed).context("initializing model")?;
    let outcome = fit(model, &split.train, &split.val, &rc.train).context("training")?;
    let (_, report) = evaluate(&outcome.model, &split.test).context("evaluating test split")?;

    create_dir(&a.out)?;
    save_checkpoint(&a.out.join("checkpoint.json"), &outcome.model).context("writing checkpoint")?;
    write_history_csv(&a.out.join("history.csv"), &outcome.history).context("writing history")?;
    write_history_json(&a.out.join("history.json"), &outcome.history).context("writing history")?;
    write_json(&a.out.join("test_report.json"), &report)?;
    save_samples(&a.out.join("test.jsonl"), &split.test).context("writing test split")?;

    println!(
        "train {} val {} test {} epochs {} best_epoch {} best_val_auc {:.4}",
        split.train.len(),
        split.val.len(),
        split.test.len(),
        outcome.history.len(),
        outcome.best_epoch,
        outcome.best_val_auc
    );
    print_report("test", &report);
    Ok(())
}

pub(crate) fn print_report(what: &str, r: &sstgcn_core::training::MetricsReport) {
    println!(
        "{what}: loss {:.4} precision {:.4} recall {:.4} f1 {:.4} binary_accuracy {:.4} auc {:.4}",
        r.loss, r.precision, r.recall, r.f1, r.binary_accuracy, r.auc
    );
}

fn check_widths(samples: &[Sample], cfg: &ModelConfig) -> Result<(), CliError> {
    let bad = samples.iter().find(|s| {
        s.slices.iter().any(|v| v.cols() != cfg.node_features)
            || s.statics.iter().any(|v| v.cols() != cfg.static_features)
    });
    match bad {
        Some(s) => Err(CliError::usage(format!(
            "sample (center {}, t {}) does not match the model's feature widths {} / {}",
            s.center, s.t, cfg.node_features, cfg.static_features
        ))),
        None => Ok(()),
    }
}

pub(crate) fn eval(a: EvalArgs) -> Result<(), CliError> {
    let params = match a.config.as_deref() {
        Some(path) => {
            let rc: RunConfig = read_config(Some(path))?;
            load_checkpoint_for(&a.checkpoint, &rc.model).usage_ctx("checkpoint does not match config")?
        }
        None => load_checkpoint(&a.checkpoint).usage_ctx(format!("loading checkpoint {}", a.checkpoint.display()))?,
    };
    let samples = load_samples(&a.dataset).with_context(|| format!("loading dataset {}", a.dataset.display()))?;
    check_widths(&samples, &params.config)?;
    let (scores, report) = evaluate(&params, &samples).context("evaluating")?;
    let labels: Vec<f64> = samples.iter().map(Sample::target).collect();
    let roc = roc_curve(&scores, &labels).context("computing ROC")?;

    create_dir(&a.out)?;
    write_json(&a.out.join("eval_report.json"), &report)?;
    let mut w = csv::Writer::from_path(a.out.join("roc.csv")).context("writing roc.csv")?;
    w.write_record(["fpr", "tpr"]).context("writing roc.csv")?;
    for (fpr, tpr) in roc {
        w.serialize((fpr, tpr)).context("writing roc.csv")?;
    }
    w.flush().context("writing roc.csv")?;
    print_report("eval", &report);
    Ok(())
}
