//! Recovery: gridded TV-min, spike extraction and the two decoders.

mod extract;
pub mod solver;

pub use extract::{extract_spikes, DEFAULT_PRUNE_FLOOR};
pub use solver::{GridOperator, GridSolution, SolverOptions, SolverReport, TraceEntry};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::{AtomicMeasure, Spike};
use crate::quantize::QuantizerConfig;
use crate::sampling::{condense, weight, CondensationPlan, MeasurementVector};

/// Radius of the neighborhood sets for `n` measurements, `2 * 0.1649 / (n - 1)`.
pub fn neighborhood_radius(n: usize) -> f64 {
    if n < 2 {
        // no meaningful resolution scale with a single frequency
        return 0.25;
    }
    2.0 * 0.1649 / (n as f64 - 1.0)
}

/// `min ||nu||_TV  s.t.  ||F nu - measurements||_2 <= noise_bound` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TvMinProblem {
    measurements: MeasurementVector,
    noise_bound: f64,
    grid_size: usize,
    pub solver: SolverOptions,
}

impl TvMinProblem {
    pub fn new(measurements: MeasurementVector, noise_bound: f64, grid_size: usize) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::Parameter("TV-min needs at least one measurement".into()));
        }
        if !(noise_bound >= 0.0) || !noise_bound.is_finite() {
            return Err(Error::Parameter(format!("noise bound {noise_bound} must be finite and >= 0")));
        }
        if grid_size < 4 * measurements.len() {
            return Err(Error::Parameter(format!(
                "grid size {grid_size} below 4 x {} measurements",
                measurements.len()
            )));
        }
        Ok(Self {
            measurements,
            noise_bound,
            grid_size,
            solver: SolverOptions::default(),
        })
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn measurements(&self) -> &MeasurementVector {
        &self.measurements
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }
}

/// A TV-min minimizer on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredMeasure {
    /// Nonzero grid amplitudes as a measure (before pruning and merging).
    pub measure: AtomicMeasure,
    /// Amplitude per grid point, index `n` at location `n / N`.
    pub grid_amplitudes: Vec<Complex64>,
    pub objective_value: f64,
    pub feasibility_residual: f64,
    pub report: SolverReport,
}

pub fn tv_min(problem: &TvMinProblem) -> Result<RecoveredMeasure> {
    let sol = solver::solve(
        problem.measurements.as_slice(),
        problem.noise_bound,
        problem.grid_size,
        &problem.solver,
    )?;
    let n = sol.amplitudes.len() as f64;
    let spikes = sol
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(i, &a)| Spike {
            location: i as f64 / n,
            amplitude: a,
        })
        .collect();
    Ok(RecoveredMeasure {
        measure: AtomicMeasure::from_spikes_allow_empty(spikes)?,
        objective_value: sol.report.objective,
        feasibility_residual: sol.report.feasibility_residual,
        grid_amplitudes: sol.amplitudes,
        report: sol.report,
    })
}

/// Discretization and post-processing knobs shared by both decoders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOptions {
    /// Grid points per measurement when `grid_size` is unset.
    pub grid_factor: usize,
    /// Explicit grid size, overriding `grid_factor`.
    pub grid_size: Option<usize>,
    /// Relative pruning floor applied before merging.
    pub prune_floor: f64,
    /// Merge radius; defaults to the neighborhood radius of the measurement count.
    pub merge_radius: Option<f64>,
    pub solver: SolverOptions,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        Self {
            grid_factor: 64,
            grid_size: None,
            prune_floor: DEFAULT_PRUNE_FLOOR,
            merge_radius: None,
            solver: SolverOptions::default(),
        }
    }
}

impl DecoderOptions {
    pub fn grid_for(&self, measurements: usize) -> usize {
        self.grid_size.unwrap_or(self.grid_factor * measurements)
    }

    pub fn merge_radius_for(&self, measurements: usize) -> f64 {
        self.merge_radius.unwrap_or_else(|| neighborhood_radius(measurements))
    }
}

/// Decoder output: the final estimate plus the TV-min solution it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub estimate: AtomicMeasure,
    /// The TV-min output before extraction (condensed amplitudes for the beta decoder).
    pub recovered: RecoveredMeasure,
    pub noise_bound: f64,
}

fn solve_and_extract(
    measurements: &MeasurementVector,
    noise_bound: f64,
    opts: &DecoderOptions,
) -> Result<(RecoveredMeasure, AtomicMeasure)> {
    let len = measurements.len();
    let problem = TvMinProblem::new(measurements.clone(), noise_bound, opts.grid_for(len))?
        .with_solver(opts.solver);
    let recovered = tv_min(&problem)?;
    let spikes = extract_spikes(
        &recovered.grid_amplitudes,
        opts.merge_radius_for(len),
        opts.prune_floor,
    );
    Ok((recovered, spikes))
}

/// MSQ decoder: TV-min on all `M` measurements with radius `sqrt(2M) / K`.
pub fn decode_msq(q: &MeasurementVector, k: usize, opts: &DecoderOptions) -> Result<Decoded> {
    decode_msq_scaled(q, k, 1.0, opts)
}

/// MSQ decoder for alphabet scale `alpha / K`: radius `sqrt(2M) alpha / K`.
pub fn decode_msq_scaled(
    q: &MeasurementVector,
    k: usize,
    alpha: f64,
    opts: &DecoderOptions,
) -> Result<Decoded> {
    if k < 2 {
        return Err(Error::Parameter(format!("K = {k} levels; need at least 2")));
    }
    let eps = (2.0 * q.len() as f64).sqrt() * alpha / k as f64;
    let (recovered, estimate) = solve_and_extract(q, eps, opts)?;
    Ok(Decoded {
        estimate,
        recovered,
        noise_bound: eps,
    })
}

/// Beta decoder: condense `q`, run TV-min with radius `eps_V`, divide the
/// recovered amplitudes by the weights at the recovered locations.
pub fn decode_beta(
    q: &MeasurementVector,
    plan: &CondensationPlan,
    config: &QuantizerConfig,
    opts: &DecoderOptions,
) -> Result<Decoded> {
    if plan.lambda() != config.lambda || plan.beta() != config.beta {
        return Err(Error::Parameter(format!(
            "plan (lambda {}, beta {}) does not match quantizer (lambda {}, beta {})",
            plan.lambda(),
            plan.beta(),
            config.lambda,
            config.beta
        )));
    }
    let vq = condense(q, plan)?;
    decode_condensed(&vq, config.condensed_error_bound(plan.m()), plan, opts)
}

/// TV-min on condensed data followed by weight correction.
pub fn decode_condensed(
    condensed: &MeasurementVector,
    noise_bound: f64,
    plan: &CondensationPlan,
    opts: &DecoderOptions,
) -> Result<Decoded> {
    if condensed.len() != plan.m() {
        return Err(Error::Dimension {
            expected: plan.m(),
            actual: condensed.len(),
        });
    }
    let (recovered, weighted) = solve_and_extract(condensed, noise_bound, opts)?;
    let floor = 0.5 / plan.c_beta();
    let mut spikes = Vec::with_capacity(weighted.len());
    for s in weighted.spikes() {
        let w = weight(s.location, plan);
        if !(w.norm() >= floor) {
            return Err(Error::Numerical(format!(
                "weight {w} at t = {} below {floor}",
                s.location
            )));
        }
        spikes.push(Spike {
            location: s.location,
            amplitude: s.amplitude / w,
        });
    }
    Ok(Decoded {
        estimate: AtomicMeasure::from_spikes_allow_empty(spikes)?,
        recovered,
        noise_bound,
    })
}
