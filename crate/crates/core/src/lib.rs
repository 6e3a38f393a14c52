//! Fast structured sketching with random signs.
//!
//! * [`transforms`]: orthonormal Walsh–Hadamard transform and a permuted-identity control.
//! * [`sketch`]: SORS (`sqrt(N/m) R F D`) and dense Gaussian operators.
//! * [`rip`]: exact RIP / multiresolution RIP certification and sample-complexity bounds.
//! * [`geometry`]: set families, Gaussian mean width, dimension bounds.
//! * [`chaining`]: successive covers and a gamma_2 upper estimate.
//! * [`harness`]: empirical distortion, JL checks, sweeps and benchmarks.

pub mod chaining;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod report;
pub mod rip;
pub mod rng;
pub mod sketch;
pub mod transforms;

pub use error::{Error, Result};
pub use geometry::{SetFamily, WidthEstimate};
pub use sketch::{EnsembleKind, SketchDescriptor, SketchOperator};
pub use transforms::{OrthonormalTransform, TransformKind};
