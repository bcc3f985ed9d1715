use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::measures::{torus_distance, wrap_unit, AtomicMeasure, Spike};

/// Grid amplitudes below this fraction of the largest one are dropped.
pub const DEFAULT_PRUNE_FLOOR: f64 = 1e-6;

/// Turn grid amplitudes (index `n` at `n / N`) into an off-grid atomic measure.
///
/// After pruning, clusters are grown greedily from the largest remaining
/// amplitude: every surviving grid point within `merge_radius` of the peak
/// joins it. A cluster becomes one spike carrying the complex sum of its
/// amplitudes, located at the `|amplitude|`-weighted circular mean.
pub fn extract_spikes(grid: &[Complex64], merge_radius: f64, prune_floor: f64) -> AtomicMeasure {
    let n = grid.len();
    let peak = grid.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 0 || peak == 0.0 {
        return AtomicMeasure::zero();
    }
    let radius = merge_radius.clamp(0.0, 0.499);
    let threshold = prune_floor * peak;
    let alive: Vec<bool> = grid.iter().map(|z| z.norm() > 0.0 && z.norm() >= threshold).collect();

    let mut order: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    order.sort_by(|&a, &b| grid[b].norm().total_cmp(&grid[a].norm()).then(a.cmp(&b)));

    let reach = ((radius * n as f64) + 1e-9).floor() as usize;
    let mut taken = vec![false; n];
    let mut spikes: Vec<Spike> = Vec::new();
    for &i in &order {
        if taken[i] {
            continue;
        }
        let center = i as f64 / n as f64;
        let mut amplitude = Complex64::new(0.0, 0.0);
        // circular mean taken relative to the peak so a lone point stays exact
        let mut direction = Complex64::new(0.0, 0.0);
        let span = reach.min(n / 2);
        for offset in 0..=(2 * span) {
            let j = (i + n + offset - span) % n;
            if !alive[j] || taken[j] {
                continue;
            }
            let tj = j as f64 / n as f64;
            if torus_distance(tj, center).value() > radius && j != i {
                continue;
            }
            taken[j] = true;
            amplitude += grid[j];
            direction += Complex64::from_polar(grid[j].norm(), TAU * (tj - center));
        }
        let location = wrap_unit(center + direction.arg() / TAU);
        spikes.push(Spike { location, amplitude });
    }

    // clusters can only collide at exactly the same location after rounding
    spikes.sort_by(|a, b| a.location.total_cmp(&b.location));
    let mut merged: Vec<Spike> = Vec::with_capacity(spikes.len());
    for s in spikes {
        match merged.last_mut() {
            Some(last) if last.location == s.location => last.amplitude += s.amplitude,
            _ => merged.push(s),
        }
    }
    AtomicMeasure::from_spikes_allow_empty(merged).expect("locations are finite and distinct")
}
