//! Atomic measures on the unit torus `[0, 1)`.
//!
//! An [`AtomicMeasure`] is a finite sum of weighted Dirac masses
//! `sum_j a_j delta_{t_j}` with complex amplitudes. Locations are always stored
//! reduced modulo one.

use std::fmt::Write as _;
use std::io::BufRead;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rejection sampling attempts before a support draw is declared infeasible.
pub const SUPPORT_RETRY_CAP: usize = 10_000;

/// Wrap-around distance between two points of the torus, in `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TorusDistance(f64);

impl TorusDistance {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<TorusDistance> for f64 {
    fn from(d: TorusDistance) -> f64 {
        d.0
    }
}

/// Reduce a real number into `[0, 1)`.
pub fn wrap_unit(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    // rem_euclid can return exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `min_n |s - t - n|`.
pub fn torus_distance(s: f64, t: f64) -> TorusDistance {
    let d = (s - t).rem_euclid(1.0);
    TorusDistance(d.min(1.0 - d).max(0.0))
}

/// A single Dirac mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    pub location: f64,
    pub amplitude: Complex64,
}

/// Finite atomic measure on the torus with pairwise distinct locations.
///
/// Measures built with [`AtomicMeasure::new`] carry at least one spike. The
/// empty measure exists only as a recovery output ([`AtomicMeasure::zero`]).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    spikes: Vec<Spike>,
}

impl AtomicMeasure {
    pub fn new(spikes: Vec<Spike>) -> Result<Self> {
        if spikes.is_empty() {
            return Err(Error::Parameter("a measure needs at least one spike".into()));
        }
        Self::from_spikes_allow_empty(spikes)
    }

    /// Build from parallel location/amplitude slices.
    pub fn from_parts(locations: &[f64], amplitudes: &[Complex64]) -> Result<Self> {
        if locations.len() != amplitudes.len() {
            return Err(Error::Dimension {
                expected: locations.len(),
                actual: amplitudes.len(),
            });
        }
        Self::new(
            locations
                .iter()
                .zip(amplitudes)
                .map(|(&location, &amplitude)| Spike {
                    location,
                    amplitude,
                })
                .collect(),
        )
    }

    /// The zero measure (no spikes).
    pub fn zero() -> Self {
        Self { spikes: Vec::new() }
    }

    pub(crate) fn from_spikes_allow_empty(mut spikes: Vec<Spike>) -> Result<Self> {
        for s in &mut spikes {
            if !s.location.is_finite() || !s.amplitude.re.is_finite() || !s.amplitude.im.is_finite() {
                return Err(Error::Parameter(format!("non-finite spike {s:?}")));
            }
            s.location = wrap_unit(s.location);
        }
        let mut locs: Vec<f64> = spikes.iter().map(|s| s.location).collect();
        locs.sort_by(f64::total_cmp);
        if let Some(w) = locs.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Parameter(format!("duplicate spike location {}", w[0])));
        }
        Ok(Self { spikes })
    }

    pub fn spikes(&self) -> &[Spike] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.spikes.iter().map(|s| s.location)
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.spikes.iter().map(|s| s.amplitude)
    }

    /// Same support, amplitudes mapped through `f(location, amplitude)`.
    pub fn map_amplitudes(&self, mut f: impl FnMut(f64, Complex64) -> Complex64) -> Self {
        Self {
            spikes: self
                .spikes
                .iter()
                .map(|s| Spike {
                    location: s.location,
                    amplitude: f(s.location, s.amplitude),
                })
                .collect(),
        }
    }

    /// Serialize as one `location amplitude_re amplitude_im` line per spike.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.spikes {
            writeln!(out, "{} {} {}", s.location, s.amplitude.re, s.amplitude.im).unwrap();
        }
        out
    }

    /// Parse the format written by [`AtomicMeasure::to_text`]. Blank lines and
    /// `#` comments are skipped. An empty record yields the zero measure.
    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_from(reader: impl BufRead) -> Result<Self> {
        let mut spikes = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("{s:?}: {e}"),
                })
            };
            spikes.push(Spike {
                location: parse(fields[0])?,
                amplitude: Complex64::new(parse(fields[1])?, parse(fields[2])?),
            });
        }
        Self::from_spikes_allow_empty(spikes)
    }
}

/// Smallest pairwise wrap-around distance of the support; `+inf` with fewer
/// than two spikes.
pub fn min_separation(mu: &AtomicMeasure) -> f64 {
    let mut locs: Vec<f64> = mu.locations().collect();
    if locs.len() < 2 {
        return f64::INFINITY;
    }
    locs.sort_by(f64::total_cmp);
    // on the circle the closest pair is adjacent in sorted order (or wraps)
    let wrap = torus_distance(locs[0], locs[locs.len() - 1]).value();
    locs.windows(2)
        .map(|w| torus_distance(w[0], w[1]).value())
        .fold(wrap, f64::min)
}

/// Sum of amplitude moduli.
pub fn tv_norm(mu: &AtomicMeasure) -> f64 {
    mu.amplitudes().map(|a| a.norm()).sum()
}

/// Amplitude distribution for random measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeMode {
    /// Uniform phase in `[0, 2pi)`, uniform magnitude in `(0, 1]`.
    #[default]
    Complex,
    /// Random sign, uniform magnitude in `(0, 1]`.
    Real,
}

/// Random measure with `s` spikes, separation at least `delta_min` and unit
/// TV norm; complex amplitudes, deterministic in `seed`.
pub fn random_measure(s: usize, delta_min: f64, seed: u64) -> Result<AtomicMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_measure_with(&mut rng, s, delta_min, AmplitudeMode::Complex)
}

pub fn random_measure_with<R: Rng + ?Sized>(
    rng: &mut R,
    s: usize,
    delta_min: f64,
    mode: AmplitudeMode,
) -> Result<AtomicMeasure> {
    if s == 0 {
        return Err(Error::Parameter("spike count must be at least 1".into()));
    }
    if !(delta_min >= 0.0) || (s > 1 && s as f64 * delta_min >= 1.0) {
        return Err(Error::Parameter(format!(
            "{s} spikes cannot have pairwise separation {delta_min} on the torus"
        )));
    }

    let mut locations = vec![0.0; s];
    let mut accepted = false;
    for _ in 0..SUPPORT_RETRY_CAP {
        for t in locations.iter_mut() {
            *t = rng.random::<f64>();
        }
        let candidate = AtomicMeasure::from_parts(&locations, &vec![Complex64::new(1.0, 0.0); s]);
        if let Ok(c) = candidate {
            if min_separation(&c) >= delta_min {
                accepted = true;
                break;
            }
        }
    }
    if !accepted {
        return Err(Error::Parameter(format!(
            "no support with {s} spikes and separation {delta_min} after {SUPPORT_RETRY_CAP} draws"
        )));
    }

    let mut amplitudes: Vec<Complex64> = (0..s)
        .map(|_| {
            let magnitude = 1.0 - rng.random::<f64>();
            match mode {
                AmplitudeMode::Complex => {
                    let phase = std::f64::consts::TAU * rng.random::<f64>();
                    Complex64::from_polar(magnitude, phase)
                }
                AmplitudeMode::Real => {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    Complex64::new(sign * magnitude, 0.0)
                }
            }
        })
        .collect();
    let total: f64 = amplitudes.iter().map(|a| a.norm()).sum();
    for a in &mut amplitudes {
        *a /= total;
    }
    AtomicMeasure::from_parts(&locations, &amplitudes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn at(locs: &[f64]) -> AtomicMeasure {
        AtomicMeasure::from_parts(locs, &vec![c(1.0, 0.0); locs.len()]).unwrap()
    }

    #[test]
    fn torus_distance_examples() {
        assert_eq!(torus_distance(0.0, 0.0).value(), 0.0);
        assert!((torus_distance(0.05, 0.95).value() - 0.10).abs() < 1e-15);
        assert!((torus_distance(0.3, 0.8).value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn min_separation_examples() {
        assert!((min_separation(&at(&[0.0, 0.5])) - 0.5).abs() < 1e-15);
        assert!((min_separation(&at(&[0.0, 0.1, 0.85])) - 0.1).abs() < 1e-15);
        assert_eq!(min_separation(&at(&[0.2])), f64::INFINITY);
    }

    #[test]
    fn min_separation_matches_all_pairs() {
        let mu = at(&[0.9, 0.02, 0.4, 0.47, 0.7]);
        let locs: Vec<f64> = mu.locations().collect();
        let mut brute = f64::INFINITY;
        for i in 0..locs.len() {
            for j in i + 1..locs.len() {
                brute = brute.min(torus_distance(locs[i], locs[j]).value());
            }
        }
        assert_eq!(min_separation(&mu), brute);
    }

    #[test]
    fn tv_norm_examples() {
        let mu = AtomicMeasure::from_parts(&[0.1, 0.2], &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(tv_norm(&mu), 2.0);
        let mu = AtomicMeasure::from_parts(&[0.1, 0.2], &[c(0.6, 0.0), c(0.3, 0.4)]).unwrap();
        assert!((tv_norm(&mu) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(AtomicMeasure::new(vec![]).is_err());
        assert!(AtomicMeasure::from_parts(&[0.25, 1.25], &[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(AtomicMeasure::from_parts(&[0.1], &[]).is_err());
        let mu = AtomicMeasure::from_parts(&[-0.25, 1.5], &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let locs: Vec<f64> = mu.locations().collect();
        assert_eq!(locs, vec![0.75, 0.5]);
    }

    #[test]
    fn random_measure_examples() {
        let one = random_measure(1, 0.1, 7).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one.spikes()[0].amplitude.norm() - 1.0).abs() < 1e-15);

        let five = random_measure(5, 0.1, 7).unwrap();
        assert_eq!(five.len(), 5);
        assert!(min_separation(&five) >= 0.1);
        assert!((tv_norm(&five) - 1.0).abs() < 1e-12);

        assert!(matches!(random_measure(11, 0.1, 7), Err(Error::Parameter(_))));
        assert!(matches!(random_measure(10, 0.1, 7), Err(Error::Parameter(_))));
    }

    #[test]
    fn random_measure_is_deterministic() {
        assert_eq!(random_measure(4, 0.1, 99).unwrap(), random_measure(4, 0.1, 99).unwrap());
        assert_ne!(random_measure(4, 0.1, 99).unwrap(), random_measure(4, 0.1, 100).unwrap());
    }

    #[test]
    fn random_measure_postconditions_many_seeds() {
        for seed in 0..1000u64 {
            let s = 1 + (seed % 5) as usize;
            let mu = random_measure(s, 0.1, seed).unwrap();
            assert!(min_separation(&mu) >= 0.1, "seed {seed}");
            assert!((tv_norm(&mu) - 1.0).abs() < 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn real_mode_has_real_amplitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mu = random_measure_with(&mut rng, 4, 0.1, AmplitudeMode::Real).unwrap();
        assert!(mu.amplitudes().all(|a| a.im == 0.0));
        assert!((tv_norm(&mu) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mu = random_measure(5, 0.1, 11).unwrap();
        let back = AtomicMeasure::from_text(&mu.to_text()).unwrap();
        assert_eq!(mu, back);
        assert_eq!(AtomicMeasure::from_text("# nothing\n\n").unwrap(), AtomicMeasure::zero());
        assert!(matches!(
            AtomicMeasure::from_text("0.1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn torus_distance_is_a_metric(s in -3.0f64..3.0, t in -3.0f64..3.0, u in -3.0f64..3.0) {
            let d = |a, b| torus_distance(a, b).value();
            prop_assert!(d(s, t) <= 0.5);
            prop_assert!((d(s, t) - d(t, s)).abs() < 1e-12);
            prop_assert!(d(s, u) <= d(s, t) + d(t, u) + 1e-12);
            prop_assert!((d(s + 1.0, t) - d(s, t)).abs() < 1e-12);
        }

        #[test]
        fn min_separation_ignores_order(seed in 0u64..500, rot in 0usize..5) {
            let mu = random_measure(5, 0.05, seed).unwrap();
            let mut spikes = mu.spikes().to_vec();
            spikes.rotate_left(rot);
            spikes.swap(0, 4);
            let shuffled = AtomicMeasure::new(spikes).unwrap();
            prop_assert_eq!(min_separation(&mu), min_separation(&shuffled));
        }
    }
}
