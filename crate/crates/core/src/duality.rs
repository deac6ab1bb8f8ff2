//! Quasithermodynamic duality: for an ensemble `(a, β, N)` find a second
//! ensemble `(a', β', N)` whose specific-energy fluctuations carry the
//! inverse-temperature fluctuations of the first.
//!
//! Both variants impose the variance condition
//! `(β'β)²·e^{βa}·e^{β'a'} = 1` and differ in the second equation:
//!
//! * [`DualVariant::Symmetric`]: `ε̄·ε̄' = β'β`. Eliminating `β'` leaves
//!   `φ(β'a') = 1/φ(βa)` with `φ(z) = z/(1 - e^{-z})`. Because `φ` is
//!   increasing with `φ(0) = 1`, a positive `βa` forces `β'a' < 0`, so the
//!   dual spacing `a'` comes out negative. The pair is flagged and the dual
//!   evaluated through its closed forms.
//! * [`DualVariant::MeanAnchored`]: `ε̄' = β`, which has the closed form
//!   `β'a' = 2·log(sinh(βa/2)/(βa/2))` and all-positive parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect_newton, RootOptions};
use crate::thermo::{bose_factor, OscillatorEnsemble, ThermoState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualVariant {
    #[serde(rename = "symmetric")]
    Symmetric,
    /// Dual mean specific energy pinned to β. Called `remark1` on the
    /// command line and in serialized output.
    #[serde(rename = "remark1")]
    MeanAnchored,
}

impl DualVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            DualVariant::Symmetric => "symmetric",
            DualVariant::MeanAnchored => "remark1",
        }
    }
}

impl fmt::Display for DualVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DualVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(DualVariant::Symmetric),
            "remark1" | "mean-anchored" => Ok(DualVariant::MeanAnchored),
            other => Err(Error::InvalidParameter(format!(
                "unknown duality variant '{other}' (expected symmetric or remark1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub a: f64,
    pub beta: f64,
    pub n: f64,
}

impl SystemParams {
    pub fn reduced(&self) -> f64 {
        self.a * self.beta
    }

    /// Mean specific energy `a/(e^{βa} - 1)`.
    pub fn mean_specific_energy(&self) -> f64 {
        self.a * bose_factor(self.reduced())
    }

    /// `Var(δε) = a²x(1 + x)/N`.
    pub fn fluctuation_variance(&self) -> f64 {
        // ε̄(ε̄ + a): no a² intermediate to overflow
        let eps = self.a * bose_factor(self.reduced());
        eps * (eps + self.a) / self.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub source: SystemParams,
    pub dual: SystemParams,
    pub variant: DualVariant,
    /// Absolute residuals of the two defining equations.
    pub residuals: [f64; 2],
    /// Set when `a' < 0`: the dual has no bounded-below spectrum.
    pub unphysical_spectrum: bool,
}

impl DualPair {
    pub fn source_ensemble(&self) -> Result<OscillatorEnsemble> {
        OscillatorEnsemble::new(self.source.a, self.source.n)
    }

    pub fn source_state(&self) -> ThermoState {
        ThermoState::thermostat(self.source.beta)
    }

    pub fn dual_ensemble(&self) -> Result<OscillatorEnsemble> {
        if self.unphysical_spectrum {
            OscillatorEnsemble::formal(self.dual.a, self.dual.n)
        } else {
            OscillatorEnsemble::new(self.dual.a, self.dual.n)
        }
    }

    pub fn dual_state(&self) -> ThermoState {
        ThermoState::derived(self.dual.beta)
    }
}

/// `φ(z) = z/(1 - e^{-z})`, continuous at 0 with `φ(0) = 1`.
pub fn phi(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 12.0
    } else if z > 0.0 {
        z / -(-z).exp_m1()
    } else {
        // z·e^z/(e^z - 1), no overflow for z → -∞
        z * z.exp() / z.exp_m1()
    }
}

/// `φ'(z)`; uses `φ(z) - φ(-z) = z` for negative arguments.
pub fn phi_prime(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        0.5 + z / 6.0
    } else if z > 0.0 {
        let e = (-z).exp();
        let d = -(-z).exp_m1();
        (d - z * e) / (d * d)
    } else {
        1.0 - phi_prime(-z)
    }
}

fn check_source(a: f64, beta: f64, n: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("a = {a} must be positive")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be positive")));
    }
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("N = {n} must be positive")));
    }
    Ok(())
}

fn symmetric_residuals(src: &SystemParams, dual: &SystemParams) -> [f64; 2] {
    let bb = src.beta * dual.beta;
    let r1 = src.mean_specific_energy() * dual.mean_specific_energy() - bb;
    let r2 = bb * bb * (src.reduced() + dual.reduced()).exp() - 1.0;
    [r1.abs(), r2.abs()]
}

fn anchored_residuals(src: &SystemParams, dual: &SystemParams) -> [f64; 2] {
    let y = src.reduced();
    let r1 = dual.mean_specific_energy() - src.beta;
    // log of g = y·x(y), kept in log form so e^{y+y'} and g² never overflow
    let log_g = y.ln() - y - (-(-y).exp()).ln_1p();
    let r2 = (y + dual.reduced() + 2.0 * log_g).exp_m1();
    [r1.abs(), r2.abs()]
}

/// Rejects pairs whose parameters or fluctuation variances overflow or
/// underflow, which happens at extreme `βa`.
fn representable(pair: DualPair) -> Result<DualPair> {
    let (src, dual) = (&pair.source, &pair.dual);
    let finite_nonzero = |v: f64| v.is_finite() && v != 0.0;
    let ok = finite_nonzero(dual.a)
        && finite_nonzero(dual.beta)
        && finite_nonzero(src.fluctuation_variance())
        && finite_nonzero(dual.fluctuation_variance())
        && pair.residuals.iter().all(|r| r.is_finite());
    if ok {
        Ok(pair)
    } else {
        Err(Error::Domain(format!(
            "beta*a = {} is too large: the dual pair is not representable in double precision",
            src.reduced()
        )))
    }
}

/// Solves `φ(y) = 1/φ(βa)` for `y = β'a'`, then back-substitutes
/// `β' = β⁻¹·e^{-βa/2}·e^{-y/2}` and `a' = y/β'`.
pub fn solve_symmetric(a: f64, beta: f64, n: f64) -> Result<DualPair> {
    check_source(a, beta, n)?;
    let source = SystemParams { a, beta, n };
    let reduced = a * beta;
    let target = 1.0 / phi(reduced);
    let f = |y: f64| phi(y) - target;

    // f(0) = 1 - target > 0; walk left until the sign flips.
    let mut lo = -1.0;
    let mut steps = 0;
    while f(lo) >= 0.0 {
        lo *= 2.0;
        steps += 1;
        if steps > 60 {
            return Err(Error::NoBracket(format!("phi(y) = {target}")));
        }
    }
    let y = if target == 1.0 {
        0.0
    } else {
        bisect_newton(f, phi_prime, lo, 0.0, RootOptions::default())?
    };
    if y == 0.0 {
        return Err(Error::Domain(format!(
            "beta*a = {reduced} is too small: the dual degenerates to a' = 0"
        )));
    }

    let beta_dual = (-(reduced + y) / 2.0).exp() / beta;
    let dual = SystemParams {
        a: y / beta_dual,
        beta: beta_dual,
        n,
    };
    representable(DualPair {
        source,
        dual,
        variant: DualVariant::Symmetric,
        residuals: symmetric_residuals(&source, &dual),
        unphysical_spectrum: dual.a < 0.0,
    })
}

/// `log(sinh(u)/u)` for `u > 0`.
fn log_sinhc(u: f64) -> f64 {
    if u < 0.5 {
        let u2 = u * u;
        (u2 * (1.0 / 6.0 + u2 * (1.0 / 120.0 + u2 * (1.0 / 5040.0 + u2 / 362_880.0)))).ln_1p()
    } else if u < 20.0 {
        (u.sinh() / u).ln()
    } else {
        u + (-(-2.0 * u).exp()).ln_1p() - std::f64::consts::LN_2 - u.ln()
    }
}

/// Closed-form dual with the dual mean specific energy pinned to β.
pub fn solve_mean_anchored(a: f64, beta: f64, n: f64) -> Result<DualPair> {
    check_source(a, beta, n)?;
    let source = SystemParams { a, beta, n };
    let y = 2.0 * log_sinhc(a * beta / 2.0);
    if !(y > 0.0) {
        return Err(Error::Domain(format!(
            "beta*a = {} is too small: the dual degenerates to a' = 0",
            a * beta
        )));
    }
    let a_dual = beta * y.exp_m1();
    let dual = SystemParams {
        a: a_dual,
        beta: y / a_dual,
        n,
    };
    representable(DualPair {
        source,
        dual,
        variant: DualVariant::MeanAnchored,
        residuals: anchored_residuals(&source, &dual),
        unphysical_spectrum: false,
    })
}

pub fn solve(variant: DualVariant, a: f64, beta: f64, n: f64) -> Result<DualPair> {
    match variant {
        DualVariant::Symmetric => solve_symmetric(a, beta, n),
        DualVariant::MeanAnchored => solve_mean_anchored(a, beta, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub equation_residuals: [f64; 2],
    /// `Var(δε)·Var(δε')·N²`; the uncertainty target is 1.
    pub variance_product: f64,
    pub variance_product_residual: f64,
    /// `ε̄ε̄' - β'β` (symmetric) or `ε̄' - β` (mean-anchored).
    pub imposed_condition_residual: f64,
    /// `φ(β'a')·φ(βa) - 1`, symmetric variant only.
    pub phi_product_residual: Option<f64>,
}

/// Recomputes every defining relation of a solved pair.
///
/// The variance product is compared with the `1/N²` target, which is what
/// the defining system actually implies.
pub fn verify_duality(pair: &DualPair) -> DualityReport {
    let src = &pair.source;
    let dual = &pair.dual;
    let n = src.n;
    let variance_product = src.fluctuation_variance() * dual.fluctuation_variance() * n * n;
    let (equation_residuals, imposed, phi_product) = match pair.variant {
        DualVariant::Symmetric => (
            symmetric_residuals(src, dual),
            src.mean_specific_energy() * dual.mean_specific_energy() - src.beta * dual.beta,
            Some(phi(dual.reduced()) * phi(src.reduced()) - 1.0),
        ),
        DualVariant::MeanAnchored => (
            anchored_residuals(src, dual),
            dual.mean_specific_energy() - src.beta,
            None,
        ),
    };
    DualityReport {
        equation_residuals,
        variance_product,
        variance_product_residual: variance_product - 1.0,
        imposed_condition_residual: imposed,
        phi_product_residual: phi_product,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 1.0);
        assert_relative_eq!(phi(1.0), 1.581_976_706_869_326_4, max_relative = 1e-15);
        assert_relative_eq!(phi(-1.0), 0.581_976_706_869_326_4, max_relative = 1e-15);
        for z in [0.3, 1.0, 4.0, 1e-6, 1e-3] {
            assert_relative_eq!(phi(z) - phi(-z), z, max_relative = 1e-12);
            assert_relative_eq!(phi(z) / phi(-z), z.exp(), max_relative = 1e-12);
        }
        assert!(phi(-800.0) >= 0.0 && phi(-800.0) < 1e-300);
        let mut prev = phi(-50.0);
        for i in -499..500 {
            let z = i as f64 * 0.1;
            let v = phi(z);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn phi_prime_matches_finite_differences() {
        for z in [-3.0, -0.5, -2e-5, 0.0, 2e-5, 0.7, 5.0] {
            let h = 1e-6;
            let fd = (phi(z + h) - phi(z - h)) / (2.0 * h);
            assert_relative_eq!(phi_prime(z), fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn symmetric_reference_point() {
        let pair = solve_symmetric(1.0, 1.0, 100.0).unwrap();
        assert_relative_eq!(
            pair.dual.reduced(),
            -0.856_576_273_424_530_6,
            max_relative = 1e-12
        );
        assert_relative_eq!(pair.dual.beta, 0.930_799_054_555_520_2, max_relative = 1e-12);
        assert_relative_eq!(pair.dual.a, -0.920_259_071_205_833, max_relative = 1e-12);
        assert!(pair.residuals.iter().all(|r| *r < 1e-10));
        assert!(pair.unphysical_spectrum);
        assert_eq!(pair.dual.n, 100.0);
        let rep = verify_duality(&pair);
        assert!(rep.variance_product_residual.abs() < 1e-9);
        assert!(rep.imposed_condition_residual.abs() < 1e-12);
        assert!(rep.phi_product_residual.unwrap().abs() < 1e-12);
    }

    #[test]
    fn symmetric_small_reduced_beta() {
        let pair = solve_symmetric(1e-4, 1.0, 10.0).unwrap();
        assert!(pair.dual.reduced() < 0.0 && pair.dual.reduced() > -2e-4);
        let pair = solve_symmetric(1e-7, 1.0, 10.0).unwrap();
        assert_relative_eq!(pair.dual.reduced(), -1e-7, max_relative = 1e-6);
    }

    #[test]
    fn anchored_reference_point() {
        let pair = solve_mean_anchored(1.0, 1.0, 100.0).unwrap();
        assert_relative_eq!(
            pair.dual.reduced(),
            0.082_649_709_225_836_22,
            max_relative = 1e-12
        );
        assert_relative_eq!(pair.dual.a, 0.086_161_269_630_487_56, max_relative = 1e-12);
        assert_relative_eq!(pair.dual.beta, 0.959_244_328_458_586_2, max_relative = 1e-12);
        assert!(!pair.unphysical_spectrum);
        let rep = verify_duality(&pair);
        assert!(rep.imposed_condition_residual.abs() < 1e-12);
        assert!(rep.variance_product_residual.abs() < 1e-9);
        assert!(rep.phi_product_residual.is_none());
    }

    #[test]
    fn anchored_small_and_large_reduced_beta() {
        let small = solve_mean_anchored(1e-3, 1.0, 1.0).unwrap();
        assert_relative_eq!(small.dual.reduced(), 2.0 * (1e-6f64 / 24.0), max_relative = 1e-6);
        let large = solve_mean_anchored(60.0, 1.0, 1.0).unwrap();
        assert!(large.residuals[0] / large.source.beta < 1e-12);
    }

    #[test]
    fn rejects_invalid_sources() {
        assert!(solve_symmetric(-1.0, 1.0, 1.0).is_err());
        assert!(solve_mean_anchored(1.0, 0.0, 1.0).is_err());
        assert!("nope".parse::<DualVariant>().is_err());
        assert_eq!(
            "remark1".parse::<DualVariant>().unwrap(),
            DualVariant::MeanAnchored
        );
    }

    #[test]
    fn overflowing_duals_are_rejected() {
        assert!(matches!(
            solve_mean_anchored(1.0, 800.0, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(solve_symmetric(1.0, 800.0, 1.0), Err(Error::Domain(_))));
    }
}
