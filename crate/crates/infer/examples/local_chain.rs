//! Desk-scale local-excitation chain at one state-of-charge point:
//! calibrate the multiharmonic drive to an 8 mV response, generate the
//! noisy dataset, run RAMH, and print the posterior summary.
//!
//! Usage: `cargo run --release -p spme-infer --example local_chain [point 1-11] [out.csv]`

use spme_core::dataset::{calibrate_current_amplitude, generate_dataset, NoiseSpec};
use spme_core::model::{NodeCounts, TransportParams};
use spme_core::params::ParameterSet;
use spme_core::signal::{soc_points, SignalSpec};
use spme_infer::ramh::run_chain_for_dataset;
use spme_infer::{summarize, ChainRunConfig, LogPosterior, PriorSpec, ThetaVector};

fn main() {
    let point: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(6);
    let out = std::env::args().nth(2);

    let params = ParameterSet::<f64>::default();
    let transport = TransportParams::from_params(&params);
    let counts = NodeCounts::default();
    let soc = soc_points()[point - 1];

    let template = SignalSpec::multiharmonic_default(1.0);
    let t0 = std::time::Instant::now();
    let amp = calibrate_current_amplitude(8e-3, &template, soc, transport, &params, counts)
        .expect("calibration");
    println!("point {point} soc ({}, {}): per-harmonic amplitude {amp:.4} A/m^2 [{:?}]",
        soc.0, soc.1, t0.elapsed());
    let signal = template.scaled_amplitudes(amp);

    let dataset = generate_dataset(
        &signal,
        &format!("local-point-{point:02}"),
        soc,
        transport,
        &params,
        counts,
        NoiseSpec::Percent(1.0),
        42 + point as u64,
    )
    .expect("dataset");
    println!("sigma2 injected: {:.4e}  n = {}", dataset.sigma2, dataset.len());

    let truth = ThetaVector::from_physical(transport, dataset.sigma2);
    let priors = PriorSpec::for_scaled_truth(3.9, 1.0, 5.34).expect("priors");
    let posterior = LogPosterior::new(&dataset, &priors, &params, counts).expect("posterior");

    let config = ChainRunConfig {
        iterations: 20_000,
        burn_in: 5_000,
        seed: 7_000 + point as u64,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let chain = run_chain_for_dataset(&posterior, &config).expect("chain");
    println!("chain runtime: {:?}", t0.elapsed());
    let summary = summarize(&chain, config.burn_in, 50).expect("summary");

    println!("acceptance (all/late): {:.3}", summary.acceptance_rate);
    let names = ["d_n", "d_p", "d_e", "t_plus", "ln_sigma2"];
    for (i, name) in names.iter().enumerate() {
        println!(
            "{name:>9}: mmse = {:>12.5}  std = {:>11.4e}  truth = {:>9.5}",
            summary.mmse[i],
            summary.std[i],
            truth.as_array()[i]
        );
    }
    println!("sigma2 mmse = {:.4e}", summary.sigma2_mmse.unwrap());

    if let Some(path) = out {
        chain.save(std::path::Path::new(&path)).expect("save");
        println!("chain written to {path}.csv");
    }
}
