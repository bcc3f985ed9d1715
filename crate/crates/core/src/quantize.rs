//! Quantization alphabets, memoryless scalar quantization (MSQ) and the
//! distributed noise-shaping beta encoder.
//!
//! The complex alphabet is the product `delta (Z_K + i Z_K)` where `Z_K` is the
//! `K`-term origin-symmetric progression of integers with spacing two. Real and
//! imaginary parts are always quantized independently.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sampling::{CondensationPlan, MeasurementVector};

/// Relative slack on range checks, absorbing rounding in `||y||_inf`.
const RANGE_SLACK: f64 = 1e-12;

/// Scaled `K`-level alphabet `{delta (2j - K + 1) : j = 0..K}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alphabet {
    k: usize,
    delta: f64,
}

impl Alphabet {
    pub fn new(k: usize, delta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Parameter(format!("K = {k} levels; need at least 2")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Parameter(format!("alphabet scale delta = {delta} must be positive")));
        }
        Ok(Self { k, delta })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn level(&self, j: usize) -> f64 {
        self.delta * (2.0 * j as f64 - self.k as f64 + 1.0)
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.k).map(|j| self.level(j)).collect()
    }

    /// Largest level magnitude, `(K - 1) delta`.
    pub fn max_level(&self) -> f64 {
        self.level(self.k - 1)
    }

    /// Index of the nearest level. Ties go to the lower level; inputs beyond
    /// the outermost levels saturate.
    pub fn level_index(&self, x: f64) -> usize {
        let pos = (x / self.delta + self.k as f64 - 1.0) / 2.0;
        let j = (pos - 0.5).ceil();
        j.clamp(0.0, (self.k - 1) as f64) as usize
    }

    pub fn round(&self, x: f64) -> f64 {
        self.level(self.level_index(x))
    }

    pub fn round_complex(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.round(z.re), self.round(z.im))
    }
}

/// Nearest level of `alphabet` to `x`; `|x - result| <= delta` whenever `|x| <= K delta`.
pub fn round_to_alphabet(x: f64, alphabet: &Alphabet) -> f64 {
    alphabet.round(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizerKind {
    Msq,
    Beta,
}

/// Quantized vector `q` together with the state `u`.
///
/// For MSQ `u = y - q`; for the beta encoder `y - q = H u`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    pub q: MeasurementVector,
    pub u: MeasurementVector,
    pub kind: QuantizerKind,
    pub alphabet: Alphabet,
}

impl QuantizationResult {
    /// `(re_level_idx, im_level_idx)` per entry.
    pub fn level_indices(&self) -> Vec<(usize, usize)> {
        self.q
            .iter()
            .map(|z| (self.alphabet.level_index(z.re), self.alphabet.level_index(z.im)))
            .collect()
    }

    /// Bit-true export: a `# K=.. delta=..` header then `index re_level_idx im_level_idx` rows.
    pub fn level_indices_text(&self) -> String {
        let mut out = format!("# K={} delta={}\n", self.alphabet.k, self.alphabet.delta);
        for (i, (re, im)) in self.level_indices().into_iter().enumerate() {
            writeln!(out, "{i} {re} {im}").unwrap();
        }
        out
    }
}

/// Parse [`QuantizationResult::level_indices_text`] back into the alphabet and `q`.
pub fn parse_level_indices(text: &str) -> Result<(Alphabet, MeasurementVector)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let mut k = None;
    let mut delta = None;
    for field in header.trim_start_matches('#').split_whitespace() {
        match field.split_once('=') {
            Some(("K", v)) => k = v.parse::<usize>().ok(),
            Some(("delta", v)) => delta = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let (Some(k), Some(delta)) = (k, delta) else {
        return Err(Error::Parse {
            line: 1,
            message: format!("header {header:?} lacks K= and delta="),
        });
    };
    let alphabet = Alphabet::new(k, delta)?;
    let mut q = Vec::new();
    for (i, line) in lines {
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let fields: Vec<usize> = line
            .split_whitespace()
            .map(|f| f.parse::<usize>().map_err(|e| parse_err(format!("{f:?}: {e}"))))
            .collect::<Result<_>>()?;
        if fields.len() != 3 || fields[0] != q.len() {
            return Err(parse_err(format!("malformed row {line:?}")));
        }
        if fields[1] >= k || fields[2] >= k {
            return Err(parse_err(format!("level index out of range in {line:?}")));
        }
        q.push(Complex64::new(alphabet.level(fields[1]), alphabet.level(fields[2])));
    }
    Ok((alphabet, MeasurementVector::new(q)))
}

/// MSQ onto `A_K + i A_K` with `A_K = Z_K / K` (inputs assumed in the unit box).
pub fn msq(y: &MeasurementVector, k: usize) -> Result<QuantizationResult> {
    msq_scaled(y, k, 1.0)
}

/// MSQ for inputs bounded by `alpha`: alphabet scale `alpha / K`.
pub fn msq_scaled(y: &MeasurementVector, k: usize, alpha: f64) -> Result<QuantizationResult> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} must be positive")));
    }
    let alphabet = Alphabet::new(k, alpha / k as f64)?;
    let q: Vec<Complex64> = y.iter().map(|&z| alphabet.round_complex(z)).collect();
    let u = y.iter().zip(&q).map(|(a, b)| a - b).collect();
    Ok(QuantizationResult {
        q: MeasurementVector::new(q),
        u: MeasurementVector::new(u),
        kind: QuantizerKind::Msq,
        alphabet,
    })
}

/// Parameters of the beta encoder. Feasibility: `beta + alpha / delta <= K`
/// and `1 < beta < K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    pub k: usize,
    pub lambda: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
}

impl QuantizerConfig {
    pub fn new(k: usize, lambda: usize, alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        let cfg = Self {
            k,
            lambda,
            alpha,
            beta,
            delta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k as f64;
        if self.k < 2 || self.lambda < 1 {
            return Err(Error::Parameter(format!(
                "need K >= 2 and lambda >= 1 (K = {}, lambda = {})",
                self.k, self.lambda
            )));
        }
        if !(self.alpha > 0.0 && self.delta > 0.0) {
            return Err(Error::Parameter("alpha and delta must be positive".into()));
        }
        if !(self.beta > 1.0 && self.beta < k) {
            return Err(Error::Parameter(format!("beta = {} outside (1, K)", self.beta)));
        }
        let lhs = self.beta + self.alpha / self.delta;
        if lhs > k * (1.0 + RANGE_SLACK) {
            return Err(Error::Parameter(format!(
                "beta + alpha/delta = {lhs} exceeds K = {}",
                self.k
            )));
        }
        Ok(())
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet {
            k: self.k,
            delta: self.delta,
        }
    }

    /// Condensation plan for `m` measurements per block.
    pub fn plan(&self, m: usize) -> Result<CondensationPlan> {
        CondensationPlan::new(m, self.lambda, self.beta)
    }

    /// `sqrt(2m) beta^{1 - lambda} delta`: guaranteed bound on `||Vy - Vq||_2`.
    pub fn condensed_error_bound(&self, m: usize) -> f64 {
        (2.0 * m as f64).sqrt() * self.beta.powi(1 - self.lambda as i32) * self.delta
    }
}

/// `beta = K (lambda + 1) / (lambda + 2)`, `delta = (lambda + 2) alpha / K`,
/// which makes `beta + alpha / delta = K`.
pub fn select_parameters(k: usize, lambda: usize, alpha: f64) -> Result<QuantizerConfig> {
    if k < 2 || lambda < 1 || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Parameter(format!(
            "need K >= 2, lambda >= 1, alpha > 0 (K = {k}, lambda = {lambda}, alpha = {alpha})"
        )));
    }
    let (kf, lf) = (k as f64, lambda as f64);
    QuantizerConfig::new(
        k,
        lambda,
        alpha,
        kf * (lf + 1.0) / (lf + 2.0),
        (lf + 2.0) * alpha / kf,
    )
}

/// Distributed noise-shaping beta encoder.
///
/// Runs `v_j = y_j + beta u_{j-m}`, `q_j = round(v_j)`, `u_j = v_j - q_j` over
/// `j = 0..M` (with `u_{j-m} = 0` for `j < m`), separately on real and imaginary
/// parts. Then `y - q = H u` and `|Re u_j|, |Im u_j| <= delta`.
pub fn beta_quantize(y: &MeasurementVector, config: &QuantizerConfig) -> Result<QuantizationResult> {
    config.validate()?;
    let total = y.len();
    if total == 0 || total % config.lambda != 0 {
        return Err(Error::Parameter(format!(
            "measurement count {total} is not a positive multiple of lambda = {}",
            config.lambda
        )));
    }
    let m = total / config.lambda;
    for (index, z) in y.iter().enumerate() {
        let magnitude = z.norm();
        if !(magnitude <= config.alpha * (1.0 + RANGE_SLACK)) {
            return Err(Error::InputRange {
                index,
                magnitude,
                alpha: config.alpha,
            });
        }
    }

    let alphabet = config.alphabet();
    let reach = config.k as f64 * config.delta * (1.0 + RANGE_SLACK);
    let mut q = Vec::with_capacity(total);
    let mut u: Vec<Complex64> = Vec::with_capacity(total);
    for j in 0..total {
        let feedback = if j >= m { config.beta * u[j - m] } else { Complex64::new(0.0, 0.0) };
        let v = y[j] + feedback;
        if v.re.abs() > reach || v.im.abs() > reach {
            return Err(Error::InputRange {
                index: j,
                magnitude: y[j].norm(),
                alpha: config.alpha,
            });
        }
        let qj = alphabet.round_complex(v);
        q.push(qj);
        u.push(v - qj);
    }
    Ok(QuantizationResult {
        q: MeasurementVector::new(q),
        u: MeasurementVector::new(u),
        kind: QuantizerKind::Beta,
        alphabet,
    })
}
