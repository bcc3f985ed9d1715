//! Cluster-based error statistics against a known ground truth, and the
//! closed-form error envelopes they are compared with.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::decode::neighborhood_radius;
use crate::error::{Error, Result};
use crate::measures::{torus_distance, AtomicMeasure};
use crate::quantize::QuantizerConfig;
use crate::sampling::{c_beta, cis_neg, CondensationPlan};

/// Partition of recovered spike indices by proximity to the true spikes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeClusters {
    /// `neighborhoods[j]`: recovered indices within `radius` of true spike `j`.
    pub neighborhoods: Vec<Vec<usize>>,
    /// Recovered indices outside every neighborhood.
    pub residual: Vec<usize>,
    pub radius: f64,
}

/// Assign recovered spikes to the closed neighborhoods of radius
/// `2 * 0.1649 / (n - 1)` around the true spikes.
pub fn cluster_spikes(
    truth: &AtomicMeasure,
    recovered: &AtomicMeasure,
    n_measurements: usize,
) -> Result<SpikeClusters> {
    let radius = neighborhood_radius(n_measurements);
    let t: Vec<f64> = truth.locations().collect();
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let d = torus_distance(t[i], t[j]).value();
            if d <= 2.0 * radius {
                return Err(Error::Ambiguity {
                    first: i,
                    second: j,
                    distance: d,
                    radius,
                });
            }
        }
    }
    let mut neighborhoods = vec![Vec::new(); t.len()];
    let mut residual = Vec::new();
    for (k, s) in recovered.spikes().iter().enumerate() {
        let mut placed = false;
        for (j, &tj) in t.iter().enumerate() {
            if torus_distance(s.location, tj).value() <= radius {
                neighborhoods[j].push(k);
                placed = true;
            }
        }
        if !placed {
            residual.push(k);
        }
    }
    Ok(SpikeClusters {
        neighborhoods,
        residual,
        radius,
    })
}

/// The three recovery statistics, per true spike where applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `|a_j - sum_{k in I_j} a~_k|`
    pub amplitude_errors: Vec<f64>,
    /// `sum_{k in I_j} |a~_k| |t_j - t~_k|^2`
    pub location_errors: Vec<f64>,
    /// `sum_{k in I_0} |a~_k|`
    pub spurious_mass: f64,
    /// Worst amplitude error over the true spikes.
    pub max_amplitude_error: f64,
    pub sum_amplitude_error: f64,
}

impl ErrorReport {
    pub fn max_location_error(&self) -> f64 {
        self.location_errors.iter().copied().fold(0.0, f64::max)
    }
}

pub fn error_report(
    truth: &AtomicMeasure,
    recovered: &AtomicMeasure,
    clusters: &SpikeClusters,
) -> ErrorReport {
    let rec = recovered.spikes();
    let mut amplitude_errors = Vec::with_capacity(truth.len());
    let mut location_errors = Vec::with_capacity(truth.len());
    for (truth_spike, members) in truth.spikes().iter().zip(&clusters.neighborhoods) {
        let sum: Complex64 = members.iter().map(|&k| rec[k].amplitude).sum();
        amplitude_errors.push((truth_spike.amplitude - sum).norm());
        location_errors.push(
            members
                .iter()
                .map(|&k| {
                    let d = torus_distance(truth_spike.location, rec[k].location).value();
                    rec[k].amplitude.norm() * d * d
                })
                .sum(),
        );
    }
    let spurious_mass = clusters.residual.iter().map(|&k| rec[k].amplitude.norm()).sum();
    ErrorReport {
        max_amplitude_error: amplitude_errors.iter().copied().fold(0.0, f64::max),
        sum_amplitude_error: amplitude_errors.iter().sum(),
        amplitude_errors,
        location_errors,
        spurious_mass,
    }
}

/// Constants of the underlying TV-min stability bounds. The recovery theory
/// does not fix them numerically; envelopes default to one and should be read
/// for their shape in `K` and `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for RecoveryConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        }
    }
}

/// Error envelope of the beta-quantization pipeline for one parameter choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    /// `sqrt(2m) beta^{1-lambda} delta`
    pub eps_v: f64,
    /// `e alpha sqrt(2m) (lambda + 1) K^{-lambda}`, an upper bound on `eps_v`
    /// for the selected parameters.
    pub eps_v_ceiling: f64,
    pub c_beta: f64,
    /// Bound on the Lipschitz constant of the inverse weight profile.
    pub lipschitz: f64,
    /// `c_beta C1 eps_V + C_{beta,lambda} sqrt(c_beta alpha) sqrt(C2 eps_V)`
    pub amplitude: f64,
    /// `c_beta C2 m^{-2} eps_V`
    pub location: f64,
    /// `c_beta C3 eps_V`
    pub spurious: f64,
    /// `sqrt(M) lambda^{3/2} K^{-lambda/2}`, the decay shape used for plotting.
    pub rate: f64,
}

/// `t -> (1 - beta^{-1} e^{-2 pi i t}) / (1 - beta^{-lambda} e^{-2 pi i lambda t})`,
/// i.e. `1 / w(t / m)`.
pub fn inverse_weight_profile(t: f64, beta: f64, lambda: usize) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let num = one - cis_neg(t) / beta;
    let den = one - beta.powi(-(lambda as i32)) * cis_neg((lambda as f64 * t).rem_euclid(1.0));
    num / den
}

/// `4 pi lambda beta / (beta - 1)^2`.
pub fn lipschitz_bound(beta: f64, lambda: usize) -> f64 {
    4.0 * PI * lambda as f64 * beta / ((beta - 1.0) * (beta - 1.0))
}

pub fn theoretical_envelope(
    config: &QuantizerConfig,
    plan: &CondensationPlan,
    constants: &RecoveryConstants,
) -> Envelope {
    let m = plan.m() as f64;
    let lambda = config.lambda as f64;
    let k = config.k as f64;
    let eps_v = config.condensed_error_bound(plan.m());
    let cb = c_beta(config.beta);
    let lipschitz = lipschitz_bound(config.beta, config.lambda);
    Envelope {
        eps_v,
        eps_v_ceiling: E * config.alpha * (2.0 * m).sqrt() * (lambda + 1.0) * k.powf(-lambda),
        c_beta: cb,
        lipschitz,
        amplitude: cb * constants.c1 * eps_v
            + lipschitz * (cb * config.alpha).sqrt() * (constants.c2 * eps_v).sqrt(),
        location: cb * constants.c2 * eps_v / (m * m),
        spurious: cb * constants.c3 * eps_v,
        rate: (m * lambda).sqrt() * lambda.powf(1.5) * k.powf(-lambda / 2.0),
    }
}

/// Amplitude error envelope of the MSQ pipeline: `C1 sqrt(2M) alpha / K`.
pub fn msq_envelope(measurements: usize, k: usize, alpha: f64, constants: &RecoveryConstants) -> f64 {
    constants.c1 * (2.0 * measurements as f64).sqrt() * alpha / k as f64
}
