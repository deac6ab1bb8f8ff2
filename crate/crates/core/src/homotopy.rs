//! One-parameter family of oscillator ensembles `X_t`, `t ∈ [0, π/2]`,
//! joining a system (t = 0) to its dual (t = π/2).
//!
//! The family is fixed by its first two moments,
//! `ε̄_t = ε̄·cos t + ε̄'·sin t` and `v_t = v·cos²t + v'·sin²t`, and the
//! oscillator relations `Nv_t = ε̄_t(ε̄_t + a_t)`, `ε̄_t = a_t/(e^{β_t a_t} - 1)`:
//!
//! ```text
//! β_t a_t = log(N v_t / ε̄_t²),  a_t = ε̄_t·(N v_t/ε̄_t² - 1),  β_t = (β_t a_t)/a_t.
//! ```
//!
//! Only the product `N·v_t` enters, so the path stores `N·v` and `N·v'`.

use serde::{Deserialize, Serialize};

use crate::cumulants::{fluctuation_cumulants, CumulantVector};
use crate::duality::DualPair;
use crate::error::{Error, Result};
use crate::thermo::{OscillatorEnsemble, ThermoState};

pub const MAX_PATH_DEGREE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyPath {
    pub mean: f64,
    pub mean_dual: f64,
    /// `N·Var(δε)` at the source.
    pub scaled_var: f64,
    /// `N·Var(δε')` at the dual.
    pub scaled_var_dual: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub a: f64,
    pub beta: f64,
    pub mean: f64,
    /// `Var(δε_t) = v_t`.
    pub variance: f64,
    /// `β_t a_t < 0`: the point is evaluated through closed forms only.
    pub formal: bool,
}

impl PathPoint {
    pub fn ensemble(&self, n: f64) -> Result<OscillatorEnsemble> {
        if self.formal {
            OscillatorEnsemble::formal(self.a, n)
        } else {
            OscillatorEnsemble::new(self.a, n)
        }
    }

    pub fn state(&self) -> ThermoState {
        ThermoState::derived(self.beta)
    }
}

impl HomotopyPath {
    /// Endpoints from mean specific energies and variances of `δε`, `δε'`.
    pub fn from_moments(mean: f64, var: f64, mean_dual: f64, var_dual: f64, n: f64) -> Result<Self> {
        for (name, v) in [("v", var), ("v'", var_dual), ("N", n)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if !(mean.is_finite() && mean_dual.is_finite()) {
            return Err(Error::InvalidParameter("endpoint means must be finite".into()));
        }
        Ok(Self {
            mean,
            mean_dual,
            scaled_var: n * var,
            scaled_var_dual: n * var_dual,
            n,
        })
    }

    pub fn from_dual(pair: &DualPair) -> Result<Self> {
        let src = &pair.source;
        let dual = &pair.dual;
        Self::from_moments(
            src.mean_specific_energy(),
            src.fluctuation_variance(),
            dual.mean_specific_energy(),
            dual.fluctuation_variance(),
            src.n,
        )
    }

    pub fn mean_at(&self, t: f64) -> f64 {
        self.mean * t.cos() + self.mean_dual * t.sin()
    }

    /// `N·v_t`.
    pub fn scaled_variance_at(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        self.scaled_var * c * c + self.scaled_var_dual * s * s
    }

    pub fn variance_at(&self, t: f64) -> f64 {
        self.scaled_variance_at(t) / self.n
    }

    /// Same path seen with `N → cN`, `v → v/c`.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        Self::from_moments(
            self.mean,
            self.scaled_var / self.n / c,
            self.mean_dual,
            self.scaled_var_dual / self.n / c,
            self.n * c,
        )
    }

    pub fn params(&self, t: f64) -> Result<PathPoint> {
        path_params_scaled(self.mean_at(t), self.scaled_variance_at(t), t).map(|(a, beta, formal)| {
            PathPoint {
                t,
                a,
                beta,
                mean: self.mean_at(t),
                variance: self.variance_at(t),
                formal,
            }
        })
    }

    /// Cumulants `κ_1..κ_{n0}` of `δε_t`.
    pub fn cumulants(&self, t: f64, n0: usize) -> Result<CumulantVector> {
        if n0 > MAX_PATH_DEGREE {
            return Err(Error::OrderTooLarge {
                order: n0,
                max: MAX_PATH_DEGREE,
            });
        }
        let p = self.params(t)?;
        fluctuation_cumulants(&p.state(), &p.ensemble(self.n)?, n0)
    }
}

/// `(a_t, β_t, formal)` from `ε̄_t` and `N·v_t`.
pub fn path_params_scaled(mean: f64, scaled_var: f64, t: f64) -> Result<(f64, f64, bool)> {
    if !(mean > 0.0) {
        return Err(Error::DegeneratePoint {
            t,
            reason: format!("mean specific energy {mean} is not positive"),
        });
    }
    let y = (scaled_var / (mean * mean)).ln();
    if y == 0.0 || !y.is_finite() {
        return Err(Error::DegeneratePoint {
            t,
            reason: "N·v_t = ε̄_t², the spacing a_t vanishes".into(),
        });
    }
    let a = mean * y.exp_m1();
    Ok((a, y / a, y < 0.0))
}

pub fn path_params(path: &HomotopyPath, t: f64) -> Result<PathPoint> {
    path.params(t)
}

pub fn path_cumulants(path: &HomotopyPath, t: f64, n0: usize) -> Result<CumulantVector> {
    path.cumulants(t, n0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::{solve_mean_anchored, solve_symmetric};
    use crate::thermo::energy_stats;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn anchored_path() -> (DualPair, HomotopyPath) {
        let pair = solve_mean_anchored(1.0, 1.0, 100.0).unwrap();
        let path = HomotopyPath::from_dual(&pair).unwrap();
        (pair, path)
    }

    #[test]
    fn endpoints_are_recovered() {
        let (pair, path) = anchored_path();
        let p0 = path.params(0.0).unwrap();
        assert_relative_eq!(p0.a, 1.0, max_relative = 1e-12);
        assert_relative_eq!(p0.beta, 1.0, max_relative = 1e-12);
        let p1 = path.params(FRAC_PI_2).unwrap();
        assert_relative_eq!(p1.a, pair.dual.a, max_relative = 1e-10);
        assert_relative_eq!(p1.beta, pair.dual.beta, max_relative = 1e-10);
        assert!(!p0.formal && !p1.formal);
    }

    #[test]
    fn midpoint_round_trip() {
        let (_, path) = anchored_path();
        let t = std::f64::consts::FRAC_PI_4;
        let p = path.params(t).unwrap();
        let ens = p.ensemble(100.0).unwrap();
        let stats = energy_stats(&p.state(), &ens).unwrap();
        assert_relative_eq!(stats.mean / 100.0, path.mean_at(t), max_relative = 1e-12);
        assert_relative_eq!(stats.variance / 1e4, path.variance_at(t), max_relative = 1e-12);
    }

    #[test]
    fn cumulants_along_path() {
        let (pair, path) = anchored_path();
        for i in 0..10 {
            let t = i as f64 * FRAC_PI_2 / 9.0;
            let k = path.cumulants(t, 4).unwrap();
            assert_eq!(k.get(1), 0.0);
            let (s, c) = t.sin_cos();
            let expected =
                pair.source.fluctuation_variance() * c * c + pair.dual.fluctuation_variance() * s * s;
            assert_relative_eq!(k.get(2), expected, max_relative = 1e-12);
        }
        let ens = pair.source_ensemble().unwrap();
        let direct = fluctuation_cumulants(&pair.source_state(), &ens, 4).unwrap();
        assert_relative_eq!(
            path.cumulants(0.0, 4).unwrap().get(3),
            direct.get(3),
            max_relative = 1e-12
        );
        assert!(matches!(path.cumulants(0.3, 9), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn particle_number_cancels() {
        let (_, path) = anchored_path();
        for c in [0.25, 2.0, 1024.0] {
            let scaled = path.rescaled(c).unwrap();
            for i in 0..20 {
                let t = i as f64 * 0.08;
                let (p, q) = (path.params(t).unwrap(), scaled.params(t).unwrap());
                assert_eq!((p.a, p.beta), (q.a, q.beta));
            }
        }
    }

    #[test]
    fn degenerate_points() {
        let path = HomotopyPath::from_moments(1.0, 0.01, 1.0, 0.01, 100.0).unwrap();
        assert!(matches!(path.params(0.0), Err(Error::DegeneratePoint { .. })));
        let (_, path) = anchored_path();
        assert!(matches!(path.params(2.8), Err(Error::DegeneratePoint { .. })));
    }

    #[test]
    fn symmetric_dual_path_is_flagged_where_formal() {
        let pair = solve_symmetric(1.0, 1.0, 100.0).unwrap();
        let path = HomotopyPath::from_dual(&pair).unwrap();
        let end = path.params(FRAC_PI_2).unwrap();
        assert!(end.formal);
        assert_relative_eq!(end.a, pair.dual.a, max_relative = 1e-10);
        assert_relative_eq!(end.beta, pair.dual.beta, max_relative = 1e-10);
        let k = path.cumulants(FRAC_PI_2, 3).unwrap();
        assert_relative_eq!(k.get(2), pair.dual.fluctuation_variance(), max_relative = 1e-12);
    }

    #[test]
    fn dense_sampling_has_no_jumps() {
        // second differences at h = 1e-4 stay O(h²): no jumps or kinks
        let (_, path) = anchored_path();
        let h = 1e-4;
        let pts: Vec<PathPoint> = (0..=15_707).map(|i| path.params(i as f64 * h).unwrap()).collect();
        for w in pts.windows(3) {
            assert!((w[2].a - 2.0 * w[1].a + w[0].a).abs() < 1e-6);
            assert!((w[2].beta - 2.0 * w[1].beta + w[0].beta).abs() < 1e-6);
            assert!((w[2].a - w[1].a).abs() < 1e-3);
        }
    }
}
