//! Noise-shaping quantization of Fourier samples of sparse measures on the
//! torus, with TV-min recovery and benchmarking against plain rounding.

pub mod bench;
pub mod decode;
pub mod error;
pub mod measures;
pub mod metrics;
pub mod quantize;
pub mod sampling;

pub use error::{Error, Result};
pub use measures::{AtomicMeasure, Spike};
pub use sampling::{CondensationPlan, MeasurementVector};
