//! Shared fixtures for the kernel benchmarks.

use std::f64::consts::FRAC_PI_2;

use thermoflux_core::duality::solve_mean_anchored;
use thermoflux_core::tomography::{GridSpec, TomogramFamily};
use thermoflux_core::{HomotopyPath, Result};

/// Homotopy family and a 6σ grid for the reference system `a = β = 1`, `N = 100`.
pub fn reference_family(n0: usize, points: usize) -> Result<(TomogramFamily, GridSpec)> {
    let path = HomotopyPath::from_dual(&solve_mean_anchored(1.0, 1.0, 100.0)?)?;
    let spec = GridSpec::centered(
        path.variance_at(0.0).sqrt(),
        path.variance_at(FRAC_PI_2).sqrt(),
        6.0,
        points,
        points,
    )?;
    Ok((TomogramFamily::homotopy(path, n0)?, spec))
}
