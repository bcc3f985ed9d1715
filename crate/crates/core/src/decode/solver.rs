//! Gridded TV-min: `min ||b||_1  s.t.  ||F b - c||_2 <= eps` over complex grid
//! amplitudes `b` on `N` equispaced points of the torus.
//!
//! `F` is the first `L` rows of the `N`-point DFT, so `F F^H = N I` and both `F`
//! and `F^H` are applied by FFT. The program is solved through its dual
//!
//! ```text
//! maximize  Re<z, c> - eps ||z||_2   s.t.  |(F^H z)_n| <= 1  for all n
//! ```
//!
//! by a log-barrier path-following method in the `2L + 1` real unknowns
//! `(z, u)` with `||z|| <= u`:
//!
//! ```text
//! minimize  tau (eps u - Re<z, c>) - sum_n log(1 - |(F^H z)_n|^2) - log(u^2 - ||z||^2)
//! ```
//!
//! The Hessian of the grid term is a Toeplitz-plus-Hankel matrix read off two
//! FFTs, so each Newton step costs `O(N log N + L^3)`. On the central path
//! `b_n = 2 w_n / (tau (1 - |w_n|^2))` with `w = F^H z` is primal feasible. That
//! estimate is also polished by a least-squares fit on its support, and the
//! better feasible candidate is certified against the dual objective. With
//! `eps = 0` the `u` block is dropped and the constraint is `F b = c`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::sampling::{cis_neg, MeasurementVector};

type C = Complex64;

const ZERO: C = C { re: 0.0, im: 0.0 };

/// Newton steps per centering stage; beyond this the stage is limited by rounding.
const MAX_CENTERING_STEPS: usize = 60;

/// Tolerances and caps for the interior-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Total Newton step cap over all barrier stages.
    pub max_newton_steps: usize,
    /// Stop once the certified duality gap is below `gap_tolerance * max(objective, floor)`.
    pub gap_tolerance: f64,
    /// Multiplicative growth of the barrier weight between centering stages.
    pub barrier_growth: f64,
    /// Centering stops when half the squared Newton decrement falls below this.
    pub centering_tolerance: f64,
    /// Keep a per-Newton-step trace in the report.
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_newton_steps: 1_000,
            gap_tolerance: 1e-4,
            barrier_growth: 4.0,
            centering_tolerance: 1e-9,
            record_trace: false,
        }
    }
}

/// One Newton step of the path-following iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub step: usize,
    pub barrier_weight: f64,
    /// Dual objective `Re<z, c> - eps ||z||`.
    pub dual_objective: f64,
    /// `||F b - c||` of the best primal estimate before the step.
    pub residual: f64,
    /// Squared Newton decrement.
    pub decrement: f64,
    pub step_length: f64,
}

/// Solver diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverReport {
    pub newton_steps: usize,
    pub barrier_stages: usize,
    pub objective: f64,
    pub dual_objective: f64,
    pub feasibility_residual: f64,
    /// `objective - dual_objective`, an upper bound on the distance to the optimum.
    pub gap_bound: f64,
    pub trace: Vec<TraceEntry>,
}

/// `F` and `F^H` on an `N`-point grid with `L` measured frequencies.
pub struct GridOperator {
    grid: usize,
    rows: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl GridOperator {
    pub fn new(rows: usize, grid: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            rows,
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Full forward DFT `sum_n v_n e^{-2 pi i k n / N}` for all `k`.
    pub fn dft(&self, v: &[C]) -> Vec<C> {
        let mut buf = v.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// `F b`: the first `L` DFT coefficients.
    pub fn apply(&self, b: &[C]) -> Vec<C> {
        let mut full = self.dft(b);
        full.truncate(self.rows);
        full
    }

    /// `F^H r = sum_k r_k e^{+2 pi i k n / N}`.
    pub fn adjoint(&self, r: &[C]) -> Vec<C> {
        let mut buf = vec![ZERO; self.grid];
        buf[..r.len()].copy_from_slice(r);
        self.inverse.process(&mut buf);
        buf
    }
}

/// Outcome of a gridded TV-min solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    /// Amplitude at grid point `n / N`.
    pub amplitudes: Vec<C>,
    pub report: SolverReport,
}

/// Dual iterate; `w = F^H z` is kept in sync with `z`.
#[derive(Clone)]
struct Dual {
    z: Vec<C>,
    u: f64,
    w: Vec<C>,
}

fn sq_norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `1 - |w|^2` in a cancellation-free form.
#[inline]
fn disk_slack(w: C) -> f64 {
    let a = w.norm();
    (1.0 - a) * (1.0 + a)
}

fn dual_objective(c: &[C], eps: f64, z: &[C]) -> f64 {
    let inner: f64 = z.iter().zip(c).map(|(zk, ck)| (zk.conj() * ck).re).sum();
    inner - eps * sq_norm(z).sqrt()
}

fn residual(op: &GridOperator, b: &[C], c: &[C]) -> Vec<C> {
    op.apply(b).iter().zip(c).map(|(x, y)| x - y).collect()
}

/// Solve the gridded program for measurements `c`, radius `eps`, grid size `grid`.
pub fn solve(c: &[C], eps: f64, grid: usize, opts: &SolverOptions) -> Result<GridSolution> {
    let rows = c.len();
    if rows == 0 {
        return Err(Error::Parameter("no measurements".into()));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Parameter(format!("noise bound {eps} must be finite and >= 0")));
    }
    if grid < rows {
        return Err(Error::Parameter(format!("grid {grid} smaller than measurement count {rows}")));
    }

    let c_norm = sq_norm(c).sqrt();
    if c_norm <= eps {
        // the zero measure is feasible and has zero TV norm
        return Ok(GridSolution {
            amplitudes: vec![ZERO; grid],
            report: SolverReport {
                feasibility_residual: c_norm,
                ..SolverReport::default()
            },
        });
    }

    let op = GridOperator::new(rows, grid);
    let floor = 1e-6 * c.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut tau = 1.0 / c_norm;
    let mut st = Dual {
        z: vec![ZERO; rows],
        u: if eps > 0.0 { 2.0 / (tau * eps) } else { 0.0 },
        w: vec![ZERO; grid],
    };

    let mut report = SolverReport::default();
    let mut steps = 0usize;
    // primal and dual bounds are tracked separately; any pair certifies a gap
    let mut best: Option<(Vec<C>, f64, f64)> = None;
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_gap = f64::INFINITY;
    let mut stalled = 0;
    // stages without progress tolerated while tau grows a hundredfold
    let patience = (100f64.ln() / opts.barrier_growth.ln()).ceil().max(1.0) as usize;
    loop {
        report.barrier_stages += 1;
        let centered = center(&op, c, eps, tau, &mut st, opts, &mut steps, &mut report)?;
        let (b, objective, res) = recover_primal(&op, c, eps, tau, &st);
        if best.as_ref().is_none_or(|bst| objective < bst.1) {
            best = Some((b, objective, res));
        }
        best_dual = best_dual.max(dual_objective(c, eps, &st.z));
        let (b, objective, res) = best.as_ref().expect("set above");
        let dual = &best_dual;
        let gap = (objective - dual).max(0.0);
        if gap < 0.999 * best_gap {
            stalled = 0;
        } else {
            stalled += 1;
        }
        best_gap = best_gap.min(gap);
        if gap <= opts.gap_tolerance * objective.max(floor) {
            report.newton_steps = steps;
            report.objective = *objective;
            report.dual_objective = *dual;
            report.feasibility_residual = *res;
            report.gap_bound = gap;
            return Ok(GridSolution {
                amplitudes: b.clone(),
                report,
            });
        }
        // stages without progress: rounding has taken over
        if steps >= opts.max_newton_steps || stalled >= patience {
            return Err(Error::Convergence {
                iterations: steps,
                gap,
                residual: *res,
                bound: eps,
            });
        }
        // an uncentered iterate is far from the path; approach the next target more slowly
        tau *= if centered { opts.barrier_growth } else { opts.barrier_growth.sqrt() };
    }
}

fn feasible(res: f64, eps: f64, c_norm: f64) -> bool {
    res <= eps * (1.0 + 1e-9) + 1e-12 * c_norm.max(1.0)
}

/// Best feasible primal point available from the current dual iterate:
/// `(amplitudes, ||b||_1, ||F b - c||)`.
fn recover_primal(op: &GridOperator, c: &[C], eps: f64, tau: f64, st: &Dual) -> (Vec<C>, f64, f64) {
    let nf = op.grid() as f64;
    let c_norm = sq_norm(c).sqrt();
    let z_norm = sq_norm(&st.z).sqrt();

    // central-path estimate shifted onto its own residual target
    let mut b: Vec<C> = st.w.iter().map(|&w| w * (2.0 / (tau * disk_slack(w)))).collect();
    let target: Vec<C> = if eps > 0.0 {
        // on the central path the residual is -2 z / (tau g) with norm below eps
        let g = (st.u - z_norm) * (st.u + z_norm);
        let shift = (2.0 / (tau * g)).min(eps * (1.0 - 1e-12) / z_norm.max(f64::MIN_POSITIVE));
        c.iter().zip(&st.z).map(|(ck, zk)| ck - zk * shift).collect()
    } else {
        c.to_vec()
    };
    let mismatch: Vec<C> = op.apply(&b).iter().zip(&target).map(|(x, t)| t - x).collect();
    for (bn, d) in b.iter_mut().zip(op.adjoint(&mismatch)) {
        *bn += d / nf;
    }
    let mut best_res = sq_norm(&residual(op, &b, c)).sqrt();
    let mut best_obj: f64 = b.iter().map(|z| z.norm()).sum();

    // exact restricted solve on the detected support
    let mut order: Vec<usize> = (0..b.len()).filter(|&n| b[n].norm() > 0.0).collect();
    order.sort_by(|&i, &j| b[j].norm().total_cmp(&b[i].norm()));
    let mut polished: Option<Vec<C>> = None;
    let mut size = 1usize;
    let cap = order.len().min(2 * op.rows());
    while size <= cap {
        let mut support = order[..size].to_vec();
        support.sort_unstable();
        if let Some(cand) = support_fit(op, &support, &st.w, c, eps) {
            let res = sq_norm(&residual(op, &cand, c)).sqrt();
            let obj: f64 = cand.iter().map(|z| z.norm()).sum();
            if feasible(res, eps, c_norm) && (obj < best_obj || !feasible(best_res, eps, c_norm)) {
                best_obj = obj;
                best_res = res;
                polished = Some(cand);
            }
        }
        size = if size == cap { cap + 1 } else { (size * 3 / 2).max(size + 1).min(cap) };
    }
    (polished.unwrap_or(b), best_obj, best_res)
}

/// Minimizer of `sum_n r_n` over `r >= 0` on `support`, with `b_n = r_n w_n / |w_n|`
/// (phases from the dual) and `||F b - c|| <= eps`. The ellipsoid-constrained
/// linear program has a closed form around the least-squares fit; points whose
/// magnitude comes out negative are dropped and the fit repeated.
fn support_fit(op: &GridOperator, support: &[usize], w: &[C], c: &[C], eps: f64) -> Option<Vec<C>> {
    let n = op.grid();
    let l = op.rows();
    let mut active: Vec<usize> = support.iter().copied().filter(|&i| w[i].norm() > 0.0).collect();
    let rhs = DVector::from_iterator(2 * l, c.iter().map(|t| t.re).chain(c.iter().map(|t| t.im)));
    while !active.is_empty() && active.len() <= 2 * l {
        let phases: Vec<C> = active.iter().map(|&i| w[i] / w[i].norm()).collect();
        let a = DMatrix::from_fn(2 * l, active.len(), |row, j| {
            let v = cis_neg(((row % l * active[j]) % n) as f64 / n as f64) * phases[j];
            if row < l {
                v.re
            } else {
                v.im
            }
        });
        let gram = a.transpose() * &a;
        let chol = Cholesky::new(gram)?;
        let r0 = chol.solve(&(a.transpose() * &rhs));
        let e0_sq = (&a * &r0 - &rhs).norm_squared();
        let room = eps * eps * (1.0 - 1e-10) - e0_sq;
        if room < 0.0 {
            return None;
        }
        let ones = DVector::from_element(active.len(), 1.0);
        let m_ones = chol.solve(&ones);
        let scale = room.sqrt() / ones.dot(&m_ones).sqrt();
        let r = if scale.is_finite() { r0 - m_ones * scale } else { r0 };
        let (worst, min_r) = r
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, &v)| if v < acc.1 { (j, v) } else { acc });
        if min_r >= 0.0 {
            let mut out = vec![ZERO; n];
            for ((&i, &ph), &rj) in active.iter().zip(&phases).zip(r.iter()) {
                out[i] = ph * rj;
            }
            return Some(out);
        }
        active.remove(worst);
    }
    None
}

/// Barrier value at step `alpha` along `(dz, du)`; `None` outside the domain.
#[allow(clippy::too_many_arguments)]
fn barrier_value(
    c: &[C],
    eps: f64,
    tau: f64,
    st: &Dual,
    dz: &[C],
    du: f64,
    dw: &[C],
    alpha: f64,
) -> Option<f64> {
    let mut val = 0.0;
    for (w, d) in st.w.iter().zip(dw) {
        let a = disk_slack(w + alpha * d);
        if !(a > 0.0) {
            return None;
        }
        val -= a.ln();
    }
    let mut lin = 0.0;
    let mut z_sq = 0.0;
    for ((zk, dk), ck) in st.z.iter().zip(dz).zip(c) {
        let zn = zk + alpha * dk;
        lin -= (zn.conj() * ck).re;
        z_sq += zn.norm_sqr();
    }
    if eps > 0.0 {
        let u = st.u + alpha * du;
        let zn = z_sq.sqrt();
        let g = (u - zn) * (u + zn);
        if !(u > 0.0) || !(g > 0.0) {
            return None;
        }
        lin += eps * u;
        val -= g.ln();
    }
    Some(val + tau * lin)
}

/// Newton iterations on the barrier problem at weight `tau`.
#[allow(clippy::too_many_arguments)]
fn center(
    op: &GridOperator,
    c: &[C],
    eps: f64,
    tau: f64,
    st: &mut Dual,
    opts: &SolverOptions,
    steps: &mut usize,
    report: &mut SolverReport,
) -> Result<bool> {
    let l = op.rows();
    let first = *steps;
    loop {
        if *steps >= opts.max_newton_steps || *steps - first >= MAX_CENTERING_STEPS {
            return Ok(false);
        }
        *steps += 1;

        let dir = newton_direction(op, c, eps, tau, st)?;
        if !dir.dec_sq.is_finite() {
            return Err(Error::Numerical(format!("Newton decrement is {}", dir.dec_sq)));
        }
        let record = |report: &mut SolverReport, st: &Dual, alpha: f64| {
            if opts.record_trace {
                let (_, _, res) = recover_primal(op, c, eps, tau, st);
                report.trace.push(TraceEntry {
                    step: *steps,
                    barrier_weight: tau,
                    dual_objective: dual_objective(c, eps, &st.z),
                    residual: res,
                    decrement: dir.dec_sq,
                    step_length: alpha,
                });
            }
        };
        if dir.dec_sq * 0.5 <= opts.centering_tolerance {
            record(report, st, 0.0);
            return Ok(true);
        }

        let dw = op.adjoint(&dir.dz);
        let phi0 = barrier_value(c, eps, tau, st, &dir.dz, dir.du, &dw, 0.0)
            .ok_or_else(|| Error::Numerical("iterate left the barrier domain".into()))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-12 {
            if let Some(v) = barrier_value(c, eps, tau, st, &dir.dz, dir.du, &dw, alpha) {
                if v <= phi0 - 0.01 * alpha * dir.dec_sq {
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no descent at working precision: as centered as it gets
            record(report, st, 0.0);
            return Ok(true);
        }
        record(report, st, alpha);
        for k in 0..l {
            st.z[k] += alpha * dir.dz[k];
        }
        st.u += alpha * dir.du;
        st.w = op.adjoint(&st.z);
    }
}

struct Direction {
    dz: Vec<C>,
    du: f64,
    /// Squared Newton decrement `-grad . step`.
    dec_sq: f64,
}

/// Grid points whose barrier curvature exceeds this are split off the Newton
/// matrix and reinserted by Woodbury, which keeps the factored part well conditioned.
const HEAVY_CURVATURE: f64 = 1e4;

/// Newton step of the barrier objective at weight `tau`.
fn newton_direction(op: &GridOperator, c: &[C], eps: f64, tau: f64, st: &Dual) -> Result<Direction> {
    newton_direction_split(op, c, eps, tau, st, HEAVY_CURVATURE)
}

fn newton_direction_split(
    op: &GridOperator,
    c: &[C],
    eps: f64,
    tau: f64,
    st: &Dual,
    heavy_curvature: f64,
) -> Result<Direction> {
    let l = op.rows();
    let n = op.grid();
    let ball = eps > 0.0;
    let dim = 2 * l + usize::from(ball);

    let mut p = vec![ZERO; n];
    let mut q = vec![ZERO; n];
    let mut gw = vec![ZERO; n];
    let mut slack = vec![0.0; n];
    for i in 0..n {
        let w = st.w[i];
        let a = disk_slack(w);
        slack[i] = a;
        // Hessian of -log(1 - |w|^2) as v -> p v + q conj(v)
        p[i] = C::new(2.0 / a + 2.0 * w.norm_sqr() / (a * a), 0.0);
        q[i] = w * w * (2.0 / (a * a));
        gw[i] = w * (2.0 / a);
    }
    let gz_grid = op.apply(&gw);

    let mut heavy: Vec<usize> = (0..n).filter(|&i| p[i].re > heavy_curvature).collect();
    if heavy.len() > 2 * l {
        heavy.sort_by(|&i, &j| p[j].re.total_cmp(&p[i].re));
        heavy.truncate(2 * l);
    }
    for &i in &heavy {
        p[i] = ZERO;
        q[i] = ZERO;
    }

    let mut hess = DMatrix::zeros(dim, dim);
    hess.view_mut((0, 0), (2 * l, 2 * l)).copy_from(&reduced_matrix(op, &p, &q));
    let mut grad = DVector::zeros(dim);
    for k in 0..l {
        let gk = gz_grid[k] - c[k] * tau;
        grad[k] = gk.re;
        grad[l + k] = gk.im;
    }
    // the cone barrier -log(u^2 - ||z||^2) has Hessian
    // (2/g) I + (4/g^2) v v^T - (4/g) e_u e_u^T with v = (z, -u); the
    // isotropic part stays in the factored matrix, the rank-two part joins
    // the heavy points in the low-rank correction
    let mut low_rank: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    let mut cap_blocks: Vec<DMatrix<f64>> = Vec::new();
    if ball {
        let z_sq = sq_norm(&st.z);
        let zn = z_sq.sqrt();
        let g = (st.u - zn) * (st.u + zn);
        let mut v = DVector::zeros(dim);
        for k in 0..l {
            v[k] = st.z[k].re;
            v[l + k] = st.z[k].im;
            grad[k] += 2.0 * st.z[k].re / g;
            grad[l + k] += 2.0 * st.z[k].im / g;
        }
        v[2 * l] = -st.u;
        for a in 0..dim {
            hess[(a, a)] += 2.0 / g;
        }
        grad[2 * l] = tau * eps - 2.0 * st.u / g;
        let mut e_u = DVector::zeros(dim);
        e_u[2 * l] = 1.0;
        low_rank.push((v, e_u));
        cap_blocks.push(DMatrix::from_row_slice(2, 2, &[g * g / 4.0, 0.0, 0.0, -g / 4.0]));
    }

    let chol = factor_spd(hess)?;
    let mut step = chol.solve(&-&grad);
    let h = heavy.len();
    let extra = 2 * low_rank.len();
    if h + extra > 0 {
        // H = H_rest + U K U^T; K is block diagonal and its inverse is formed directly
        let cols = 2 * h + extra;
        let mut u_mat = DMatrix::zeros(dim, cols);
        let mut k_inv = DMatrix::zeros(cols, cols);
        for (j, &i) in heavy.iter().enumerate() {
            for k in 0..l {
                // d w_i / d z_k = e^{+2 pi i k i / N}
                let e = cis_neg(((k * i) % n) as f64 / n as f64).conj();
                u_mat[(k, 2 * j)] = e.re;
                u_mat[(l + k, 2 * j)] = -e.im;
                u_mat[(k, 2 * j + 1)] = e.im;
                u_mat[(l + k, 2 * j + 1)] = e.re;
            }
            // inverse curvature (a/2) [I - w^ w^T + a / (a + 2|w|^2) w^ w^T], free of cancellation
            let w = st.w[i];
            let a = slack[i];
            let wn = w.norm();
            let (ux, uy) = if wn > 0.0 { (w.re / wn, w.im / wn) } else { (1.0, 0.0) };
            let along = a / (a + 2.0 * wn * wn);
            let blk = [
                [1.0 - ux * ux + along * ux * ux, (along - 1.0) * ux * uy],
                [(along - 1.0) * ux * uy, 1.0 - uy * uy + along * uy * uy],
            ];
            for r in 0..2 {
                for s2 in 0..2 {
                    k_inv[(2 * j + r, 2 * j + s2)] = 0.5 * a * blk[r][s2];
                }
            }
        }
        for (j, ((v1, v2), blk)) in low_rank.iter().zip(&cap_blocks).enumerate() {
            let col = 2 * h + 2 * j;
            u_mat.set_column(col, v1);
            u_mat.set_column(col + 1, v2);
            k_inv.view_mut((col, col), (2, 2)).copy_from(blk);
        }
        let y = chol.solve(&u_mat);
        let small = &k_inv + u_mat.transpose() * &y;
        let corr = small
            .lu()
            .solve(&(u_mat.transpose() * &step))
            .ok_or_else(|| Error::Numerical("singular low-rank correction".into()))?;
        step -= y * corr;
    }
    let dec_sq = -grad.dot(&step);
    Ok(Direction {
        dz: (0..l).map(|k| C::new(step[k], step[l + k])).collect(),
        du: if ball { step[2 * l] } else { 0.0 },
        dec_sq,
    })
}

/// Real `2L x 2L` matrix of `z -> F (p F^H z + q conj(F^H z))`,
/// coordinates ordered `[Re z; Im z]`.
fn reduced_matrix(op: &GridOperator, p: &[C], q: &[C]) -> DMatrix<f64> {
    let l = op.rows();
    let n = op.grid();
    let ph = op.dft(p);
    let qh = op.dft(q);
    let mut s = DMatrix::zeros(2 * l, 2 * l);
    for k in 0..l {
        for j in 0..l {
            let tk = ph[(k + n - j) % n];
            let hk = qh[(k + j) % n];
            s[(k, j)] = tk.re + hk.re;
            s[(k, l + j)] = -tk.im + hk.im;
            s[(l + k, j)] = tk.im + hk.im;
            s[(l + k, l + j)] = tk.re - hk.re;
        }
    }
    // symmetrize away rounding
    let st = s.transpose();
    (s + st) * 0.5
}

fn factor_spd(mut s: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let dim = s.nrows();
    let scale = (0..dim).map(|i| s[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..8 {
        if let Some(ch) = Cholesky::new(s.clone()) {
            return Ok(ch);
        }
        let next = if shift == 0.0 { 1e-15 * scale } else { shift * 100.0 };
        for i in 0..dim {
            s[(i, i)] += next - shift;
        }
        shift = next;
    }
    Err(Error::Numerical("Newton system is not positive definite".into()))
}

/// `||F b - c||_2` for grid amplitudes `b`.
pub fn residual_norm(amplitudes: &[C], c: &MeasurementVector) -> f64 {
    let op = GridOperator::new(c.len(), amplitudes.len());
    sq_norm(&residual(&op, amplitudes, c.as_slice())).sqrt()
}
