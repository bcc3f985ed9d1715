//! Monte-Carlo comparison of MSQ and beta quantization across `lambda` and `K`.

mod config;
mod plot;
mod report;

pub use config::{default_m, ExperimentConfig, SparsityMode};
pub use plot::plot_svg;
pub use report::{
    read_records, summarize, write_aborts, write_records, write_summary, Summary, ABORT_HEADER,
    RECORD_HEADER, SUMMARY_HEADER,
};

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decode::{decode_beta, decode_msq_scaled, Decoded, DecoderOptions};
use crate::error::Result;
use crate::measures::{random_measure_with, AtomicMeasure};
use crate::metrics::{cluster_spikes, error_report, msq_envelope, theoretical_envelope};
use crate::quantize::{beta_quantize, msq_scaled, select_parameters};
use crate::sampling::{fourier_sample, MeasurementVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Msq,
    Beta,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Msq => "msq",
            Method::Beta => "beta",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "msq" => Some(Method::Msq),
            "beta" => Some(Method::Beta),
            _ => None,
        }
    }
}

/// Aggregated statistics of one recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialErrors {
    /// Worst per-spike amplitude error.
    pub max_amp: f64,
    pub sum_amp: f64,
    /// Weighted location error summed over the true spikes.
    pub loc_weighted: f64,
    pub spurious: f64,
}

/// One (trial, lambda, K, method) cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub s: usize,
    pub lambda: usize,
    pub k: usize,
    pub m_total: usize,
    pub method: Method,
    /// Abort reason when quantization or decoding failed.
    pub outcome: std::result::Result<TrialErrors, String>,
    pub envelope: f64,
    pub solver_iters: usize,
    pub wall_ms: f64,
}

/// Seed of trial `trial`; every trial owns an independent stream.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    // splitmix64 finalizer over (seed, trial)
    let mut z = seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The measure of trial `trial`, shared by every method, `lambda` and `K`.
pub fn trial_measure(config: &ExperimentConfig, trial: usize) -> Result<(u64, AtomicMeasure)> {
    let seed = trial_seed(config.seed, trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = match config.sparsity {
        SparsityMode::Fixed(s) => s,
        SparsityMode::Random { max } => rng.random_range(1..=max),
    };
    let mu = random_measure_with(&mut rng, s, config.delta_min, config.amplitudes)?;
    Ok((seed, mu))
}

fn score(truth: &AtomicMeasure, decoded: &Decoded, measurements: usize) -> Result<TrialErrors> {
    let clusters = cluster_spikes(truth, &decoded.estimate, measurements)?;
    let report = error_report(truth, &decoded.estimate, &clusters);
    Ok(TrialErrors {
        max_amp: report.max_amplitude_error,
        sum_amp: report.sum_amplitude_error,
        loc_weighted: report.location_errors.iter().sum(),
        spurious: report.spurious_mass,
    })
}

fn run_msq(
    truth: &AtomicMeasure,
    y: &MeasurementVector,
    k: usize,
    alpha: f64,
    opts: &DecoderOptions,
) -> Result<(TrialErrors, usize)> {
    let q = msq_scaled(y, k, alpha)?.q;
    let dec = decode_msq_scaled(&q, k, alpha, opts)?;
    Ok((score(truth, &dec, y.len())?, dec.recovered.report.newton_steps))
}

fn run_beta(
    truth: &AtomicMeasure,
    y: &MeasurementVector,
    m: usize,
    k: usize,
    lambda: usize,
    alpha: f64,
    opts: &DecoderOptions,
) -> Result<(TrialErrors, usize)> {
    let cfg = select_parameters(k, lambda, alpha)?;
    let plan = cfg.plan(m)?;
    let q = beta_quantize(y, &cfg)?.q;
    let dec = decode_beta(&q, &plan, &cfg, opts)?;
    // the decoder solves on the m condensed measurements
    Ok((score(truth, &dec, m)?, dec.recovered.report.newton_steps))
}

/// All records of one trial, ordered by `lambda`, then `K`, then method.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<TrialRecord>> {
    let (seed, mu) = trial_measure(config, trial)?;
    let opts = config.decoder_options();
    let mut out = Vec::with_capacity(config.lambdas.len() * config.ks.len() * 2);
    for &lambda in &config.lambdas {
        let m_total = config.m * lambda;
        let y = fourier_sample(&mu, m_total);
        for &k in &config.ks {
            for method in [Method::Msq, Method::Beta] {
                let start = Instant::now();
                let (result, envelope) = match method {
                    Method::Msq => (
                        run_msq(&mu, &y, k, config.alpha, &opts),
                        msq_envelope(m_total, k, config.alpha, &config.constants),
                    ),
                    Method::Beta => {
                        let envelope = select_parameters(k, lambda, config.alpha)
                            .and_then(|c| Ok(theoretical_envelope(&c, &c.plan(config.m)?, &config.constants)))
                            .map(|e| e.amplitude)
                            .unwrap_or(f64::NAN);
                        (
                            run_beta(&mu, &y, config.m, k, lambda, config.alpha, &opts),
                            envelope,
                        )
                    }
                };
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let (outcome, solver_iters) = match result {
                    Ok((errors, iters)) => (Ok(errors), iters),
                    Err(e) => (Err(e.to_string()), 0),
                };
                out.push(TrialRecord {
                    trial,
                    seed,
                    s: mu.len(),
                    lambda,
                    k,
                    m_total,
                    method,
                    outcome,
                    envelope,
                    solver_iters,
                    wall_ms,
                });
            }
        }
    }
    Ok(out)
}

/// Run the whole sweep. Trials run in parallel; the result does not depend
/// on the worker count. Decoder aborts are kept as records, not raised.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let per_trial: Vec<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            delta_min: 0.2,
            m: 21,
            lambdas: vec![1, 2],
            ks: vec![3],
            trials: 2,
            grid_factor: 16,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn trial_seeds_differ_and_are_stable() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 0), trial_seed(2, 0));
        assert_eq!(trial_seed(5, 3), trial_seed(5, 3));
    }

    #[test]
    fn record_layout_and_pairing() {
        let cfg = small();
        let recs = run_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 1 * 2);
        for r in &recs {
            let (seed, mu) = trial_measure(&cfg, r.trial).unwrap();
            assert_eq!(r.seed, seed);
            assert_eq!(r.s, mu.len());
            assert_eq!(r.m_total, cfg.m * r.lambda);
        }
        let methods: Vec<Method> = recs.iter().take(2).map(|r| r.method).collect();
        assert_eq!(methods, vec![Method::Msq, Method::Beta]);
    }

    #[test]
    fn fine_alphabet_is_nearly_noiseless() {
        let cfg = ExperimentConfig {
            lambdas: vec![1],
            ks: vec![1 << 14],
            trials: 1,
            ..ExperimentConfig::default()
        };
        for r in run_experiment(&cfg).unwrap() {
            let e = r.outcome.expect("no abort");
            assert!(e.max_amp < 1e-3, "{:?}: {e:?}", r.method);
        }
    }
}
