//! The five subcommands. Each one reads/writes a run directory laid out by
//! `artifacts` and leaves a manifest trail of what it did.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cnlqnn::attacks::{blackbox_transfer, robust_accuracy, AttackConfig, AttackMethod};
use cnlqnn::baseline::{mlp_train, Mlp, MlpConfig};
use cnlqnn::data::{DatasetSplit, Sample};
use cnlqnn::model::ModelContext;
use cnlqnn::rng::{SeedFactory, Stream};
use cnlqnn::search::{final_train, search_run};
use cnlqnn::sim::noise::{run_noisy_trajectory, NoiseSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    atomic_write, csv_document, read_csv, read_json, read_omega, write_json, write_omega,
    ArchitectureFile, Manifest, ABLATE_FILE, ARCHITECTURE_FILE, ATTACKS_FILE, CONFIG_FILE,
    HISTORY_FILE, MANIFEST_FILE, METRICS_FILE, NOISE_FILE, REPORT_FILE,
};
use crate::config::{ExperimentConfig, ResolvedExperiment};
use crate::dataset::load_dataset;
use crate::error::{CliError, Result};

/// Headline numbers of a finished `search`, stored alongside the artifacts
/// so later commands and `report` can read them without recomputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchMetrics {
    pub epochs_run: usize,
    pub search_val_accuracy: f64,
    pub clean_test_accuracy: f64,
    pub final_epoch_losses: Vec<f64>,
}

/// Runs architecture search plus final training and writes every artifact
/// into the configured output directory.
pub fn cmd_search(config: &ExperimentConfig) -> Result<PathBuf> {
    let resolved = config.resolve()?;
    let run_dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&run_dir)?;

    let mut manifest = Manifest::begin(config);
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)?;
    write_json(&run_dir.join(CONFIG_FILE), config)?;

    let seeds = SeedFactory::new(config.seed);
    let data = load_dataset(config, &seeds)?;

    let t = Instant::now();
    let outcome = search_run(&data, &resolved.model, &resolved.search, &resolved.cnl, &seeds)
        .map_err(|e| CliError::Other(format!("search failed: {e}")))?;
    manifest.record_phase("search", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let (omega, final_losses) = final_train(
        &data,
        &resolved.model,
        &outcome.best,
        outcome.omega,
        &resolved.search,
        &resolved.cnl,
        &seeds,
    )
    .map_err(|e| CliError::Other(format!("final training failed: {e}")))?;
    manifest.record_phase("final_train", t.elapsed().as_secs_f64());

    let ctx = ModelContext::new(resolved.model.clone(), outcome.best.clone(), omega)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let clean_acc = ctx.accuracy(&data.test).map_err(|e| CliError::Other(e.to_string()))?;

    write_json(
        &run_dir.join(ARCHITECTURE_FILE),
        &ArchitectureFile::new(ctx.arch(), &resolved.model),
    )?;
    write_omega(&run_dir, ctx.store(), &resolved.model)?;

    let history_rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .map(|r| {
            vec![
                r.epoch.to_string(),
                r.tau.to_string(),
                r.mean_loss.to_string(),
                r.val_accuracy.to_string(),
            ]
        })
        .collect();
    atomic_write(
        &run_dir.join(HISTORY_FILE),
        csv_document("epoch,tau,mean_loss,val_accuracy", &history_rows).as_bytes(),
    )?;

    let metrics = SearchMetrics {
        epochs_run: outcome.history.len(),
        search_val_accuracy: outcome.val_accuracy,
        clean_test_accuracy: clean_acc,
        final_epoch_losses: final_losses,
    };
    write_json(&run_dir.join(METRICS_FILE), &metrics)?;

    manifest.finish();
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)?;

    println!(
        "search: {} epochs, val accuracy {:.4}, clean test accuracy {:.4}",
        metrics.epochs_run, metrics.search_val_accuracy, metrics.clean_test_accuracy
    );
    println!("artifacts written to {}", run_dir.display());
    Ok(run_dir)
}

/// Everything `attack`/`noise`/`ablate` need from a finished run directory.
pub struct TrainedRun {
    pub config: ExperimentConfig,
    pub resolved: ResolvedExperiment,
    pub data: DatasetSplit,
    pub ctx: ModelContext,
    pub seeds: SeedFactory,
}

pub fn load_trained(run_dir: &Path) -> Result<TrainedRun> {
    let manifest: Manifest = read_json(&run_dir.join(MANIFEST_FILE))?;
    if !manifest.complete {
        return Err(CliError::artifacts(format!(
            "{} holds an unfinished run (manifest.complete = false)",
            run_dir.display()
        )));
    }
    let config: ExperimentConfig = read_json(&run_dir.join(CONFIG_FILE))?;
    let resolved = config.resolve()?;
    let seeds = SeedFactory::new(config.seed);
    let data = load_dataset(&config, &seeds)?;
    let arch_file: ArchitectureFile = read_json(&run_dir.join(ARCHITECTURE_FILE))?;
    let arch = arch_file.to_architecture(&resolved.model)?;
    let omega = read_omega(run_dir, &resolved.model)?;
    let ctx = ModelContext::new(resolved.model.clone(), arch, omega)
        .map_err(|e| CliError::artifacts(e.to_string()))?;
    Ok(TrainedRun { config, resolved, data, ctx, seeds })
}

fn update_manifest(run_dir: &Path, phase: &str, seconds: f64) -> Result<()> {
    let mut manifest: Manifest = read_json(&run_dir.join(MANIFEST_FILE))?;
    manifest.record_phase(phase, seconds);
    write_json(&run_dir.join(MANIFEST_FILE), &manifest)
}

/// Trains the transfer surrogate on the run's training split.
fn train_surrogate(run: &TrainedRun) -> Result<Mlp> {
    let cfg = MlpConfig::new(run.config.n_qubits());
    let (mlp, _losses) = mlp_train(&run.data.train, cfg, &run.seeds)
        .map_err(|e| CliError::Other(format!("surrogate training failed: {e}")))?;
    Ok(mlp)
}

/// Evaluates every configured `(method, ε)` pair white-box on the model and
/// black-box through the MLP surrogate, writing `attacks.csv`.
pub fn cmd_attack(run_dir: &Path) -> Result<()> {
    let run = load_trained(run_dir)?;
    let t = Instant::now();
    let surrogate = train_surrogate(&run)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (mode, use_surrogate) in [("whitebox", false), ("blackbox", true)] {
        for acfg in &run.resolved.attacks {
            let result = if use_surrogate {
                blackbox_transfer(&run.data.test, &surrogate, &run.ctx, acfg)
            } else {
                robust_accuracy(&run.data.test, &run.ctx, acfg)
            }
            .map_err(|e| CliError::Other(format!("{mode} {} failed: {e}", acfg.method.name())))?;
            rows.push(vec![
                mode.to_string(),
                acfg.method.name().to_string(),
                acfg.epsilon.to_string(),
                result.clean_accuracy.to_string(),
                result.robust_accuracy.to_string(),
                result.mean_linf().to_string(),
            ]);
        }
    }
    atomic_write(
        &run_dir.join(ATTACKS_FILE),
        csv_document("mode,method,epsilon,clean_acc,robust_acc,mean_linf", &rows).as_bytes(),
    )?;
    update_manifest(run_dir, "attack", t.elapsed().as_secs_f64())?;
    println!("attack: {} rows written to {}", rows.len(), run_dir.join(ATTACKS_FILE).display());
    Ok(())
}

/// Test accuracy with every prediction averaged over `trajectories` noisy
/// circuit runs. `cell` and `resample` index the RNG streams so each
/// (channel, probability, resample, sample) combination draws independently.
pub fn noisy_accuracy(
    ctx: &ModelContext,
    samples: &[Sample],
    spec: &NoiseSpec,
    trajectories: usize,
    seeds: &SeedFactory,
    stream_base: u64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(CliError::Other("no samples for noise evaluation".into()));
    }
    let observable = ctx.observable();
    let hits: usize = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<usize> {
            let (circuit, init) = ctx
                .encoded_circuit(&s.features)
                .map_err(|e| CliError::Other(e.to_string()))?;
            let mut rng = seeds.stream_indexed(Stream::NoiseTrajectory, stream_base + i as u64);
            let mut acc = 0.0;
            for _ in 0..trajectories {
                let state = run_noisy_trajectory(&circuit, &init, spec, &mut rng)
                    .map_err(|e| CliError::Other(e.to_string()))?;
                acc += observable.eval(&state).map_err(|e| CliError::Other(e.to_string()))?;
            }
            let prediction = acc / trajectories as f64;
            let label = if prediction >= 0.0 { 1.0 } else { -1.0 };
            Ok(usize::from(label == s.label))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(hits as f64 / samples.len() as f64)
}

/// Sweeps the configured noise channels and probabilities over the test set,
/// writing `noise.csv` with a mean and standard deviation per cell.
pub fn cmd_noise(run_dir: &Path) -> Result<()> {
    let run = load_trained(run_dir)?;
    let t = Instant::now();
    let limit = run.config.noise_max_samples.unwrap_or(run.data.test.len());
    let samples = &run.data.test[..limit.min(run.data.test.len())];
    let resamples = run.config.noise_resamples;
    let n = samples.len() as u64;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (cell, spec) in run.resolved.noise.iter().enumerate() {
        let mut accs = Vec::with_capacity(resamples);
        for r in 0..resamples {
            let stream_base = (cell as u64 * resamples as u64 + r as u64) * n;
            accs.push(noisy_accuracy(
                &run.ctx,
                samples,
                spec,
                run.config.noise_trajectories,
                &run.seeds,
                stream_base,
            )?);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let std = if accs.len() > 1 {
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (accs.len() - 1) as f64;
            var.sqrt()
        } else {
            0.0
        };
        rows.push(vec![
            spec.kind.name().to_string(),
            spec.prob.to_string(),
            mean.to_string(),
            std.to_string(),
        ]);
    }
    atomic_write(
        &run_dir.join(NOISE_FILE),
        csv_document("channel,prob,mean_acc,std_acc", &rows).as_bytes(),
    )?;
    update_manifest(run_dir, "noise", t.elapsed().as_secs_f64())?;
    println!("noise: {} rows written to {}", rows.len(), run_dir.join(NOISE_FILE).display());
    Ok(())
}

/// Runs the identical pipeline twice from the same seed — noise layer on,
/// then off — and writes a three-row comparison (`ablate.csv`): clean and
/// FGSM(ε = 0.3) robust accuracy for both variants plus the difference.
pub fn cmd_ablate(config: &ExperimentConfig) -> Result<()> {
    let base_dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&base_dir)?;
    let mut manifest = Manifest::begin(config);
    write_json(&base_dir.join(MANIFEST_FILE), &manifest)?;
    write_json(&base_dir.join(CONFIG_FILE), config)?;
    let t = Instant::now();

    let fgsm = AttackConfig::new(AttackMethod::Fgsm, 0.3)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let mut measured = Vec::new();
    for (variant, enabled) in [("cnl_on", true), ("cnl_off", false)] {
        let sub = ExperimentConfig {
            cnl_enabled: enabled,
            out_dir: base_dir.join(variant).to_string_lossy().into_owned(),
            ..config.clone()
        };
        let run_dir = cmd_search(&sub)?;
        let run = load_trained(&run_dir)?;
        let result = robust_accuracy(&run.data.test, &run.ctx, &fgsm)
            .map_err(|e| CliError::Other(e.to_string()))?;
        measured.push((result.clean_accuracy, result.robust_accuracy));
        println!(
            "{variant}: clean {:.4}, FGSM(0.3) robust {:.4}",
            result.clean_accuracy, result.robust_accuracy
        );
    }

    let (on, off) = (measured[0], measured[1]);
    let rows = vec![
        vec!["cnl_on".to_string(), on.0.to_string(), on.1.to_string()],
        vec!["cnl_off".to_string(), off.0.to_string(), off.1.to_string()],
        vec!["delta".to_string(), (on.0 - off.0).to_string(), (on.1 - off.1).to_string()],
    ];
    atomic_write(
        &base_dir.join(ABLATE_FILE),
        csv_document("variant,clean_accuracy,robust_accuracy", &rows).as_bytes(),
    )?;
    manifest.record_phase("ablate", t.elapsed().as_secs_f64());
    manifest.finish();
    write_json(&base_dir.join(MANIFEST_FILE), &manifest)?;
    println!("ablation written to {}", base_dir.join(ABLATE_FILE).display());
    Ok(())
}

/// One merged row of the report table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: String,
    pub metric: String,
    pub value: String,
}

fn run_variant(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn column_index(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::artifacts(format!("{} lacks column {name:?}", path.display())))
}

/// Collects every metric a run directory offers.
fn collect_metrics(dir: &Path) -> Result<Vec<ReportRow>> {
    let config: ExperimentConfig = read_json(&dir.join(CONFIG_FILE))?;
    let dataset = config.dataset.name().to_string();
    let variant = run_variant(dir);
    let mut rows = Vec::new();
    let mut push = |metric: String, value: String| {
        rows.push(ReportRow { dataset: dataset.clone(), variant: variant.clone(), metric, value });
    };

    let metrics_path = dir.join(METRICS_FILE);
    if metrics_path.is_file() {
        let m: SearchMetrics = read_json(&metrics_path)?;
        push("clean_test_accuracy".into(), m.clean_test_accuracy.to_string());
        push("search_val_accuracy".into(), m.search_val_accuracy.to_string());
    }
    let attacks_path = dir.join(ATTACKS_FILE);
    if attacks_path.is_file() {
        let (header, body) = read_csv(&attacks_path)?;
        let (mode, method, eps, robust) = (
            column_index(&header, "mode", &attacks_path)?,
            column_index(&header, "method", &attacks_path)?,
            column_index(&header, "epsilon", &attacks_path)?,
            column_index(&header, "robust_acc", &attacks_path)?,
        );
        for row in body {
            push(
                format!("{}_{}_eps{}", row[mode], row[method], row[eps]),
                row[robust].clone(),
            );
        }
    }
    let noise_path = dir.join(NOISE_FILE);
    if noise_path.is_file() {
        let (header, body) = read_csv(&noise_path)?;
        let (channel, prob, mean) = (
            column_index(&header, "channel", &noise_path)?,
            column_index(&header, "prob", &noise_path)?,
            column_index(&header, "mean_acc", &noise_path)?,
        );
        for row in body {
            push(format!("noise_{}_p{}", row[channel], row[prob]), row[mean].clone());
        }
    }
    let ablate_path = dir.join(ABLATE_FILE);
    if ablate_path.is_file() {
        let (header, body) = read_csv(&ablate_path)?;
        let variant_col = column_index(&header, "variant", &ablate_path)?;
        for row in body {
            for (c, name) in header.iter().enumerate() {
                if c != variant_col {
                    push(format!("ablate_{}_{}", row[variant_col], name), row[c].clone());
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::artifacts(format!(
            "{} holds no reportable results",
            dir.display()
        )));
    }
    Ok(rows)
}

/// Joins run directories into one long-form table keyed by
/// `(dataset, variant, metric)`, writes `report.csv` under `out_dir`, and
/// returns an aligned text rendering (metrics as rows, variants as columns).
pub fn cmd_report(run_dirs: &[PathBuf], out_dir: &Path) -> Result<String> {
    if run_dirs.is_empty() {
        return Err(CliError::config("report needs at least one run directory"));
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for dir in run_dirs {
        rows.extend(collect_metrics(dir)?);
    }
    rows.sort_by(|a, b| {
        (&a.dataset, &a.variant, &a.metric).cmp(&(&b.dataset, &b.variant, &b.metric))
    });
    let duplicates: Vec<String> = rows
        .windows(2)
        .filter(|w| {
            (&w[0].dataset, &w[0].variant, &w[0].metric)
                == (&w[1].dataset, &w[1].variant, &w[1].metric)
        })
        .map(|w| format!("({}, {}, {})", w[0].dataset, w[0].variant, w[0].metric))
        .collect();
    if !duplicates.is_empty() {
        return Err(CliError::Other(format!(
            "conflicting report keys: {}",
            duplicates.join(", ")
        )));
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.dataset.clone(), r.variant.clone(), r.metric.clone(), r.value.clone()])
        .collect();
    atomic_write(
        &out_dir.join(REPORT_FILE),
        csv_document("dataset,variant,metric,value", &csv_rows).as_bytes(),
    )?;
    Ok(render_table(&rows))
}

/// Pivots the long-form rows into metrics × variants plain text.
fn render_table(rows: &[ReportRow]) -> String {
    let mut columns: Vec<String> = Vec::new();
    let mut metrics: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, String), String> = BTreeMap::new();
    for r in rows {
        let column = format!("{}/{}", r.dataset, r.variant);
        if !columns.contains(&column) {
            columns.push(column.clone());
        }
        if !metrics.contains(&r.metric) {
            metrics.push(r.metric.clone());
        }
        cells.insert((r.metric.clone(), column), r.value.clone());
    }

    let metric_width = metrics
        .iter()
        .map(String::len)
        .chain(std::iter::once("metric".len()))
        .max()
        .unwrap_or(6);
    let col_widths: Vec<usize> = columns
        .iter()
        .map(|c| {
            metrics
                .iter()
                .filter_map(|m| cells.get(&(m.clone(), c.clone())).map(String::len))
                .chain(std::iter::once(c.len()))
                .max()
                .unwrap_or(c.len())
        })
        .collect();

    let mut out = format!("{:<metric_width$}", "metric");
    for (c, w) in columns.iter().zip(col_widths.iter().copied()) {
        out.push_str(&format!("  {c:>w$}"));
    }
    out.push('\n');
    for m in &metrics {
        out.push_str(&format!("{m:<metric_width$}"));
        for (c, w) in columns.iter().zip(col_widths.iter().copied()) {
            let value = cells.get(&(m.clone(), c.clone())).map(String::as_str).unwrap_or("-");
            out.push_str(&format!("  {value:>w$}"));
        }
        out.push('\n');
    }
    out
}
