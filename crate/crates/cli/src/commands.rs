//! Subcommand implementations: dataset generation, fitting, summarization.

use crate::config::ExperimentConfig;
use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use spme_core::dataset::{calibrate_current_amplitude, generate_dataset, Dataset, NoiseSpec};
use spme_core::seed::derive_seed;
use spme_core::signal::soc_points;
use spme_infer::chain::{write_histogram2d_csv, write_histogram_csv};
use spme_infer::fim::{fisher_at_mle, FimResult};
use spme_infer::mle::{mle, random_init_within, MleOptions};
use spme_infer::ramh::run_chain_for_dataset;
use spme_infer::{summarize, Chain, LogPosterior, PriorSpec, ThetaVector};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    Mcmc,
    Mle,
    Both,
}

impl FitMethod {
    fn wants_mcmc(self) -> bool {
        matches!(self, FitMethod::Mcmc | FitMethod::Both)
    }
    fn wants_mle(self) -> bool {
        matches!(self, FitMethod::Mle | FitMethod::Both)
    }
}

fn dataset_stem(out_dir: &Path, label: &str) -> PathBuf {
    out_dir.join(label.replace('-', "_"))
}

fn local_label(point: usize) -> String {
    format!("local-point-{point:02}")
}

/// Index used to derive per-dataset seeds: wide takes 0, local points
/// their 1-based index.
fn seed_index(label: &str) -> u64 {
    if label == "wide" {
        0
    } else {
        label
            .rsplit('-')
            .next()
            .and_then(|s| s.parse::<u64>().ok())
            .unwrap_or(99)
    }
}

pub fn cmd_generate(config: &ExperimentConfig, only_point: Option<usize>) -> Result<()> {
    let out_dir = &config.output.dir;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;
    let params = config.parameter_set().map_err(|e| anyhow!(e))?;
    let transport = config.transport_truth();
    let counts = config.node_counts();
    let master = config.seeds.master;

    let mut written: Vec<String> = Vec::new();

    if config.local.enabled {
        let points = config.selected_points(only_point);
        if points.is_empty() && only_point.is_some() {
            bail!(
                "point {} is not in the configured selection",
                only_point.unwrap()
            );
        }
        let template = config.local_signal_template();
        let target_v = config.local.target_response_mv * 1e-3;
        let results: Vec<Result<String>> = points
            .par_iter()
            .map(|&point| {
                let soc = soc_points()[point - 1];
                let amp = calibrate_current_amplitude(
                    target_v, &template, soc, transport, &params, counts,
                )?;
                let signal = template.scaled_amplitudes(amp / template.harmonics[0].amplitude);
                let label = local_label(point);
                let dataset = generate_dataset(
                    &signal,
                    &label,
                    soc,
                    transport,
                    &params,
                    counts,
                    NoiseSpec::Percent(config.local.noise_percent),
                    derive_seed(master, "dataset", point as u64),
                )?;
                dataset.save(&dataset_stem(out_dir, &label))?;
                Ok(label)
            })
            .collect();
        for r in results {
            written.push(r?);
        }
    }

    if config.wide.enabled && only_point.is_none() {
        let signal = config.wide_signal();
        let dataset = generate_dataset(
            &signal,
            "wide",
            (config.wide.stoich_n, config.wide.stoich_p),
            transport,
            &params,
            counts,
            NoiseSpec::Sigma2(config.wide.sigma2),
            derive_seed(master, "dataset", 0),
        )?;
        dataset.save(&dataset_stem(out_dir, "wide"))?;
        written.push("wide".into());
    }

    written.sort();
    let mut manifest = String::new();
    for label in &written {
        let stem = dataset_stem(out_dir, label);
        writeln!(manifest, "{}.csv", stem.display())?;
        writeln!(manifest, "{}.meta.toml", stem.display())?;
    }
    std::fs::write(out_dir.join("manifest.txt"), &manifest)?;
    print!("{manifest}");
    println!("generated {} dataset(s) in {}", written.len(), out_dir.display());
    Ok(())
}

/// Labels of the datasets a fit or summary should cover, in deterministic
/// order.
fn discover_datasets(
    config: &ExperimentConfig,
    only_point: Option<usize>,
) -> Result<Vec<(String, PathBuf)>> {
    let out_dir = &config.output.dir;
    let mut labels: Vec<String> = Vec::new();
    if config.local.enabled {
        for point in config.selected_points(only_point) {
            labels.push(local_label(point));
        }
    }
    if config.wide.enabled && only_point.is_none() {
        labels.push("wide".into());
    }
    let mut found = Vec::new();
    for label in labels {
        let stem = dataset_stem(out_dir, &label);
        let csv = stem.with_extension("csv");
        if !csv.exists() {
            bail!(
                "dataset file {} is missing; run `generate` first",
                csv.display()
            );
        }
        found.push((label, stem));
    }
    Ok(found)
}

pub fn cmd_fit(
    config: &ExperimentConfig,
    method: FitMethod,
    only_point: Option<usize>,
) -> Result<()> {
    let datasets = discover_datasets(config, only_point)?;
    let params = config.parameter_set().map_err(|e| anyhow!(e))?;
    let counts = config.node_counts();
    let truth = ThetaVector::from_physical(config.transport_truth(), config.wide.sigma2);
    let priors = PriorSpec::for_scaled_truth(truth.d_n, truth.d_p, truth.d_e)
        .map_err(|e| anyhow!("prior construction: {e}"))?;
    let master = config.seeds.master;
    let out_dir = config.output.dir.clone();

    let jobs: Vec<Result<Vec<String>>> = datasets
        .par_iter()
        .map(|(label, stem)| -> Result<Vec<String>> {
            let mut produced = Vec::new();
            let dataset = Dataset::load(stem)
                .with_context(|| format!("loading dataset {}", stem.display()))?;
            let mut priors = priors.clone();
            priors.ln_sigma2_init = (
                config.mcmc.ln_sigma2_init[0],
                config.mcmc.ln_sigma2_init[1],
            );
            let posterior = LogPosterior::new(&dataset, &priors, &params, counts)
                .map_err(|e| anyhow!("posterior setup for {label}: {e}"))?;
            let idx = seed_index(label);

            if method.wants_mcmc() {
                let chain_config = config.chain_config(derive_seed(master, "chain", idx));
                let chain = run_chain_for_dataset(&posterior, &chain_config)
                    .map_err(|e| anyhow!("chain for {label}: {e}"))?;
                let chain_stem = out_dir.join(format!("{}_chain", stem_name(stem)));
                chain.save(&chain_stem)?;
                produced.push(format!("{}.csv", chain_stem.display()));
            }

            if method.wants_mle() {
                let init = random_init_within(
                    &ThetaVector::from_physical(dataset.theta_true, dataset.sigma2),
                    config.mle.init_fraction,
                    derive_seed(master, "mle-init", idx),
                );
                let options = MleOptions {
                    tolerance: config.mle.tolerance,
                    max_iterations: config.mle.max_iterations,
                    initial_step: 0.05,
                };
                let fit = mle(&posterior, &init, &options)
                    .map_err(|e| anyhow!("MLE for {label}: {e}"))?;
                let fim = fisher_at_mle(
                    &posterior,
                    &fit.theta,
                    config.mle.jacobian_rel_step,
                    fit.iterations,
                    fit.objective,
                )
                .map_err(|e| anyhow!("FIM for {label}: {e}"))?;
                let path = out_dir.join(format!("{}_mle.txt", stem_name(stem)));
                fim.save(&path)?;
                produced.push(path.display().to_string());
            }
            Ok(produced)
        })
        .collect();

    let mut all = Vec::new();
    for job in jobs {
        all.extend(job?);
    }
    all.sort();
    for f in &all {
        println!("{f}");
    }
    println!("fit wrote {} file(s)", all.len());
    Ok(())
}

fn stem_name(stem: &Path) -> String {
    stem.file_name().unwrap_or_default().to_string_lossy().into_owned()
}

pub fn cmd_summarize(config: &ExperimentConfig, bins: usize) -> Result<()> {
    let out_dir = &config.output.dir;
    // every dataset with at least one fit output becomes a column
    let mut columns: Vec<SummaryColumn> = Vec::new();
    let mut stems: Vec<PathBuf> = std::fs::read_dir(out_dir)
        .with_context(|| format!("cannot read {}", out_dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().ends_with("_chain.csv"))
                .unwrap_or(false)
                || p.file_name()
                    .map(|n| n.to_string_lossy().ends_with("_mle.txt"))
                    .unwrap_or(false)
        })
        .collect();
    stems.sort();

    let mut seen: Vec<String> = Vec::new();
    for path in &stems {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let base = name
            .trim_end_matches("_chain.csv")
            .trim_end_matches("_mle.txt")
            .to_string();
        if !seen.contains(&base) {
            seen.push(base);
        }
    }
    if seen.is_empty() {
        bail!("no fit outputs found in {}", out_dir.display());
    }

    for base in &seen {
        let mut column = SummaryColumn {
            name: base.clone(),
            mmse: None,
            sigma_mcmc: None,
            mle: None,
            sigma_crlb: None,
        };
        let chain_stem = out_dir.join(format!("{base}_chain"));
        if chain_stem.with_extension("csv").exists() {
            let chain = Chain::load(&chain_stem)?;
            let summary = summarize(&chain, chain.burn_in, bins)
                .map_err(|e| anyhow!("summary for {base}: {e}"))?;
            // histogram exports (sampling-space marginals + the two joints)
            for marginal in &summary.marginals {
                let path = out_dir.join(format!("hist_{}_{base}.csv", marginal.parameter));
                write_histogram_csv(&path, marginal)?;
            }
            for joint in &summary.joints {
                let path = out_dir.join(format!(
                    "hist2d_{}_{}_{base}.csv",
                    joint.parameters.0, joint.parameters.1
                ));
                write_histogram2d_csv(&path, joint)?;
            }
            let mut mmse = summary.mmse.clone();
            let mut std = summary.std.clone();
            // report the noise row in variance space, matching the table
            mmse[4] = summary.sigma2_mmse.unwrap_or(f64::NAN);
            std[4] = summary.sigma2_std.unwrap_or(f64::NAN);
            column.mmse = Some(mmse);
            column.sigma_mcmc = Some(std);
        }
        let mle_path = out_dir.join(format!("{base}_mle.txt"));
        if mle_path.exists() {
            let (theta, sigmas) = FimResult::load(&mle_path)?;
            let mut point = theta.as_array().to_vec();
            point[4] = theta.sigma2();
            column.mle = Some(point);
            column.sigma_crlb = Some(sigmas);
        }
        columns.push(column);
    }

    let table = render_table(&columns);
    std::fs::write(out_dir.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

struct SummaryColumn {
    name: String,
    mmse: Option<Vec<f64>>,
    sigma_mcmc: Option<Vec<f64>>,
    mle: Option<Vec<f64>>,
    sigma_crlb: Option<Vec<f64>>,
}

/// Table mirroring the study summary: parameter-major rows, one column
/// per experiment.
fn render_table(columns: &[SummaryColumn]) -> String {
    let params = ["d_n", "d_p", "d_e", "t_plus", "sigma2"];
    let stats = ["theta_mmse", "sigma_mcmc", "theta_mle", "sigma_crlb"];
    let mut out = String::new();
    let _ = write!(out, "{:<10}{:<12}", "parameter", "statistic");
    for c in columns {
        let _ = write!(out, "{:>16}", c.name);
    }
    out.push('\n');
    for (pi, name) in params.iter().enumerate() {
        for (si, stat) in stats.iter().enumerate() {
            let _ = write!(
                out,
                "{:<10}{:<12}",
                if si == 0 { name } else { &"" },
                stat
            );
            for c in columns {
                let source = match si {
                    0 => &c.mmse,
                    1 => &c.sigma_mcmc,
                    2 => &c.mle,
                    _ => &c.sigma_crlb,
                };
                match source {
                    Some(v) => {
                        let _ = write!(out, "{:>16}", format_value(v[pi]));
                    }
                    None => {
                        let _ = write!(out, "{:>16}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return "-".into();
    }
    let a = v.abs();
    if a != 0.0 && (a < 1e-3 || a >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}
