//! Fluctuation theory for an ensemble of N quantum harmonic oscillators:
//! canonical thermodynamics, exact energy cumulants, quasithermodynamic
//! duality, the homotopy between dual systems, tomographic reconstruction of
//! the joint quasiprobability of `(δε, δβ)`, and quantum reference objects.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cumulants;
pub mod duality;
pub mod error;
pub mod homotopy;
pub mod quadrature;
pub mod quantum;
pub mod roots;
pub mod sampler;
pub mod thermo;
pub mod tomography;

pub use cumulants::CumulantVector;
pub use duality::{DualPair, DualVariant, DualityReport, SystemParams};
pub use error::{Error, Result};
pub use homotopy::{HomotopyPath, PathPoint};
pub use quantum::{CoherentState, GaussianEvolution, GaussianProfile, WaveProfile};
pub use sampler::{EmpiricalCumulants, SampleRun, SamplerConfig};
pub use thermo::{GaussianFluctuation, ManifoldPoint, OscillatorEnsemble, StateSource, ThermoState};
pub use tomography::{GridSpec, QuasiDensityGrid, ReconstructOptions, Tomogram, TomogramFamily};
