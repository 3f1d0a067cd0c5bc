use eos_core::affinity::{anchor_squared_distances, calibrate_row_alpha, generalized_affinity_row, AffinityRow};
use eos_core::anomaly::{calibrate_alpha, detect, flag_outliers, FlagRule};
use eos_core::harness::{generate_two_class, run_synthetic_benchmark, timing_probe_wstep};
use eos_core::supervised::{
    auc, robust_fit, run_mislabel_experiment, scores, train_weighted_classifier, MislabelExperimentConfig,
};
use eos_core::{effective_sample_fraction, Dataset, EosConfig, WeightVector};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::input::parse_csv_dataset;
use crate::output::{num, CsvTable, LongTable};

/// What a command produced: report results, extra files, and a one-line
/// human summary.
pub struct Outcome {
    pub results: Value,
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub summary: String,
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    match config.command.ok_or_else(|| CliError::config("no command given".into()))? {
        Command::Detect => run_detect(config),
        Command::Affinity => run_affinity(config),
        Command::RobustTrain => run_robust_train(config),
        Command::SynthBench => run_synth_bench(config),
        Command::MislabelBench => run_mislabel_bench(config),
        Command::Timing => run_timing(config),
    }
}

fn load_input(config: &RunConfig) -> Result<Dataset, CliError> {
    let path = config.input_path.as_ref().ok_or_else(|| {
        CliError::config(format!(
            "`{}` needs an input file (--input or input_path)",
            config.command.map(|c| c.name()).unwrap_or("this command")
        ))
    })?;
    parse_csv_dataset(path, &config.csv)
}

fn weights_csv(weights: &WeightVector, flags: &[bool]) -> Vec<u8> {
    let mut t = CsvTable::new(&["index", "weight", "flag"]);
    for (i, (w, f)) in weights.as_slice().iter().zip(flags).enumerate() {
        t.row([i.to_string(), num(*w), u8::from(*f).to_string()]);
    }
    t.into_bytes()
}

fn indices(flags: &[bool]) -> Vec<usize> {
    (0..flags.len()).filter(|&t| flags[t]).collect()
}

fn run_detect(config: &RunConfig) -> Result<Outcome, CliError> {
    let data = load_input(config)?;
    let calibration = match config.detect.ess_target {
        Some(target) => Some(calibrate_alpha(&data, target, &config.eos)?),
        None => None,
    };
    let eos = EosConfig {
        alpha: calibration.map_or(config.eos.alpha, |c| c.alpha),
        ..config.eos.clone()
    };
    let report = detect(&data, &eos, config.detect.rule)?;
    let flagged = report.flagged_indices();
    let summary = format!(
        "detect: flagged {} of {} instances at alpha {}",
        flagged.len(),
        data.len(),
        eos.alpha
    );
    let results = json!({
        "n_instances": data.len(),
        "dim": data.dim(),
        "alpha": eos.alpha,
        "calibration": calibration,
        "rule": report.rule,
        "n_flagged": flagged.len(),
        "flagged_indices": flagged,
        "effective_sample_fraction": effective_sample_fraction(&report.weights),
        "iterations": report.iterations,
        "termination": report.termination,
        "objective_trajectory": report.objective_trajectory,
        "gaussian": {
            "mu": report.gaussian.mu(),
            "sigma": report.gaussian.sigma_rows(),
            "ridge": report.gaussian.ridge(),
        },
    });
    Ok(Outcome {
        results,
        files: vec![("weights.csv", weights_csv(&report.weights, &report.flags))],
        summary,
    })
}

fn run_affinity(config: &RunConfig) -> Result<Outcome, CliError> {
    let data = load_input(config)?;
    let cfg = &config.affinity;
    let anchors: Vec<usize> = cfg.anchors.clone().unwrap_or_else(|| (0..data.len()).collect());
    let row = |i: usize| -> Result<AffinityRow, CliError> {
        let errors = anchor_squared_distances(&data, i)?;
        let alpha = match (cfg.sigma_sq, cfg.perplexity) {
            (Some(s), None) => 2.0 * s,
            (None, Some(p)) => calibrate_row_alpha(&errors, p)?,
            _ => {
                return Err(CliError::config(
                    "affinity needs exactly one of sigma_sq and perplexity".into(),
                ))
            }
        };
        Ok(generalized_affinity_row(i, &errors, alpha, true)?)
    };
    let rows: Vec<AffinityRow> = anchors.par_iter().map(|&i| row(i)).collect::<Result<_, _>>()?;

    let mut table = CsvTable::new(&["anchor", "neighbor", "value"]);
    for r in &rows {
        for (j, v) in r.neighbors.iter().zip(&r.values) {
            table.row([r.anchor_index.to_string(), j.to_string(), num(*v)]);
        }
    }
    let per_row: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "anchor": r.anchor_index, "sigma_sq": r.sigma_sq, "perplexity": r.perplexity() }))
        .collect();
    Ok(Outcome {
        summary: format!("affinity: {} rows over {} points", rows.len(), data.len()),
        results: json!({ "n_instances": data.len(), "dim": data.dim(), "rows": per_row }),
        files: vec![("affinities.csv", table.into_bytes())],
    })
}

fn run_robust_train(config: &RunConfig) -> Result<Outcome, CliError> {
    let data = load_input(config)?;
    let labels = data.require_labels("robust-train")?;
    let cfg = &config.robust_train;
    let uniform = WeightVector::uniform(data.len())?;
    let plain = train_weighted_classifier(&data, &uniform, cfg.l2_strength)?;
    let res = robust_fit(&data, &config.eos, cfg.l2_strength)?;
    let flags = flag_outliers(&res.weights, &res.errors, FlagRule::RelativeThreshold { kappa: cfg.kappa })?;
    let flagged = indices(&flags);
    let results = json!({
        "n_instances": data.len(),
        "dim": data.dim(),
        "alpha": config.eos.alpha,
        "plain": plain,
        "robust": res.params,
        "training_auc_plain": auc(&scores(&plain, &data), labels)?,
        "training_auc_robust": auc(&scores(&res.params, &data), labels)?,
        "n_flagged": flagged.len(),
        "flagged_indices": flagged,
        "effective_sample_fraction": effective_sample_fraction(&res.weights),
        "iterations": res.iterations,
        "termination": res.termination,
        "objective_trajectory": res.objective_trajectory,
    });
    Ok(Outcome {
        summary: format!(
            "robust-train: {} of {} labels flagged as suspect",
            flagged.len(),
            data.len()
        ),
        results,
        files: vec![("weights.csv", weights_csv(&res.weights, &flags))],
    })
}

fn run_synth_bench(config: &RunConfig) -> Result<Outcome, CliError> {
    let report = run_synthetic_benchmark(&config.synth_bench)?;
    let mut long = LongTable::default();
    for s in &report.seeds {
        let e = "synth-bench";
        long.push(e, s.seed, "alpha", s.alpha);
        long.push(e, s.seed, "ess_fraction", s.ess_fraction);
        long.push_opt(e, s.seed, "eos_precision", s.eos_precision);
        long.push_opt(e, s.seed, "eos_recall", s.eos_recall);
        long.push_opt(e, s.seed, "chi2_precision", s.chi2_precision);
        long.push_opt(e, s.seed, "chi2_recall", s.chi2_recall);
        long.push_opt(e, s.seed, "robust_chi2_precision", s.robust_chi2_precision);
        long.push_opt(e, s.seed, "robust_chi2_recall", s.robust_chi2_recall);
    }
    let summary = match report.metric("eos_precision") {
        Some(m) => format!(
            "synth-bench: {} seeds, mean precision {:.3} (eos) vs {:.3} (chi2)",
            report.seeds.len(),
            m.mean,
            report.metric("chi2_precision").map_or(f64::NAN, |c| c.mean)
        ),
        None => format!("synth-bench: {} seeds", report.seeds.len()),
    };
    Ok(Outcome {
        results: serde_json::to_value(&report).map_err(|e| CliError::io(e.to_string()))?,
        files: vec![("metrics.csv", long.into_bytes())],
        summary,
    })
}

fn run_mislabel_bench(config: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = &config.mislabel_bench;
    let data = match &config.input_path {
        Some(_) => load_input(config)?,
        None => generate_two_class(cfg.data.n_instances, cfg.data.dim, cfg.data.mean_norm, cfg.data.seed)?,
    };
    data.require_labels("mislabel-bench")?;
    if cfg.flip_proportions.is_empty() {
        return Err(CliError::config("flip_proportions is empty".into()));
    }
    let mut long = LongTable::default();
    let mut runs = Vec::new();
    let mut summary = String::from("mislabel-bench:");
    for &p in &cfg.flip_proportions {
        let exp = MislabelExperimentConfig {
            flip_proportion: p,
            ..cfg.experiment.clone()
        };
        let report = run_mislabel_experiment(&data, &exp)?;
        let name = format!("mislabel-p{p}");
        for s in &report.splits {
            let split = s.split as u64;
            long.push(&name, split, "plain_auc", s.plain_auc);
            long.push(&name, split, "eos_auc", s.eos_auc);
            long.push(&name, split, "alpha", s.alpha);
            long.push_opt(&name, split, "flipped_mean_weight", s.flipped_mean_weight);
            long.push(&name, split, "clean_mean_weight", s.clean_mean_weight);
        }
        summary.push_str(&format!(
            " p={p}: auc {:.4} -> {:.4};",
            report.plain_auc.mean, report.eos_auc.mean
        ));
        runs.push(report);
    }
    summary.pop();
    Ok(Outcome {
        results: json!({ "n_instances": data.len(), "dim": data.dim(), "runs": runs }),
        files: vec![("metrics.csv", long.into_bytes())],
        summary,
    })
}

fn run_timing(config: &RunConfig) -> Result<Outcome, CliError> {
    let table = timing_probe_wstep(&config.timing)?;
    let mut csv = CsvTable::new(&["axis", "n_instances", "dim", "median_secs", "iqr_secs", "min_secs", "repeats"]);
    for r in &table.rows {
        let axis = serde_json::to_value(r.axis).map_err(|e| CliError::io(e.to_string()))?;
        csv.row([
            axis.as_str().unwrap_or_default().to_string(),
            r.n_instances.to_string(),
            r.dim.map(|d| d.to_string()).unwrap_or_default(),
            num(r.median_secs),
            num(r.iqr_secs),
            num(r.min_secs),
            r.repeats.to_string(),
        ]);
    }
    let ratios = table.instance_ratios();
    let spread = table.dimension_spread();
    Ok(Outcome {
        summary: format!("timing: size ratios {ratios:.3?}, dimension spread {spread:.3?}"),
        results: json!({ "rows": table.rows, "instance_ratios": ratios, "dimension_spread": spread }),
        files: vec![("timing.csv", csv.into_bytes())],
    })
}
