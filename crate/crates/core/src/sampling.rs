//! Fourier sampling, condensation `V`, noise transfer `H` and the weights
//! relating a measure to its condensed counterpart.
//!
//! Neither `V` nor `H` is ever stored as a matrix. All indices are 0-based:
//! `(Vy)_l = sum_{k<lambda} beta^{-k} y_{mk+l}` for `l = 0..m`.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;

/// A vector of complex measurements (samples, quantized samples, residual
/// states or condensed samples).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementVector(Vec<Complex64>);

impl MeasurementVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    /// Largest entry modulus.
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(other.len(), self.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// `index,re,im` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, z) in self.0.iter().enumerate() {
            writeln!(out, "{i},{},{}", z.re, z.im).unwrap();
        }
        out
    }
}

impl From<Vec<Complex64>> for MeasurementVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for MeasurementVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for MeasurementVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

pub(crate) fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual == expected {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}

/// `e^{-2 pi i x}`.
#[inline]
pub(crate) fn cis_neg(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * x.rem_euclid(1.0))
}

/// First `count` Fourier coefficients `y_k = sum_j a_j e^{-2 pi i k t_j}`.
pub fn fourier_sample(mu: &AtomicMeasure, count: usize) -> MeasurementVector {
    let mut y = vec![Complex64::new(0.0, 0.0); count];
    for spike in mu.spikes() {
        for (k, yk) in y.iter_mut().enumerate() {
            // reduce k t mod 1 before forming the phase to keep the argument small
            *yk += spike.amplitude * cis_neg((k as f64 * spike.location).rem_euclid(1.0));
        }
    }
    MeasurementVector(y)
}

/// Block structure `M = m * lambda` shared by `V`, `H` and the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondensationPlan {
    m: usize,
    lambda: usize,
    beta: f64,
}

impl CondensationPlan {
    pub fn new(m: usize, lambda: usize, beta: f64) -> Result<Self> {
        if m == 0 || lambda == 0 {
            return Err(Error::Parameter(format!(
                "block length m = {m} and oversampling lambda = {lambda} must be positive"
            )));
        }
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta = {beta} must exceed 1")));
        }
        Ok(Self { m, lambda, beta })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Total measurement count `m * lambda`.
    pub fn total(&self) -> usize {
        self.m * self.lambda
    }

    /// `(1 + 1/beta) / (1 - 1/beta)`, the two-sided bound on `|w|`.
    pub fn c_beta(&self) -> f64 {
        c_beta(self.beta)
    }
}

pub fn c_beta(beta: f64) -> f64 {
    (1.0 + 1.0 / beta) / (1.0 - 1.0 / beta)
}

/// Apply `V`: length `m * lambda` in, length `m` out.
pub fn condense(y: &MeasurementVector, plan: &CondensationPlan) -> Result<MeasurementVector> {
    check_len(y.len(), plan.total())?;
    let m = plan.m;
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let mut scale = 1.0;
    for block in y.0.chunks_exact(m) {
        for (o, &v) in out.iter_mut().zip(block) {
            *o += v * scale;
        }
        scale /= plan.beta;
    }
    Ok(MeasurementVector(out))
}

/// `w(t) = (1 - beta^{-lambda} e^{-2 pi i m lambda t}) / (1 - beta^{-1} e^{-2 pi i m t})`.
pub fn weight(t: f64, plan: &CondensationPlan) -> Complex64 {
    let m = plan.m as f64;
    let lam = plan.lambda as i32;
    let one = Complex64::new(1.0, 0.0);
    let num = one - plan.beta.powi(-lam) * cis_neg((m * plan.lambda as f64 * t).rem_euclid(1.0));
    let den = one - cis_neg((m * t).rem_euclid(1.0)) / plan.beta;
    num / den
}

/// `mu_V`: same support, amplitudes `a_j w(t_j)`, so that `V F_M mu = F_m mu_V`.
pub fn apply_weights(mu: &AtomicMeasure, plan: &CondensationPlan) -> AtomicMeasure {
    mu.map_amplitudes(|t, a| a * weight(t, plan))
}

/// Apply `H`: `(Hu)_j = u_j - beta u_{j-m}` (the subtraction only for `j >= m`).
pub fn noise_transfer_apply(
    u: &MeasurementVector,
    plan: &CondensationPlan,
) -> Result<MeasurementVector> {
    check_len(u.len(), plan.total())?;
    let m = plan.m;
    let out = (0..u.len())
        .map(|j| if j >= m { u[j] - plan.beta * u[j - m] } else { u[j] })
        .collect();
    Ok(MeasurementVector(out))
}
