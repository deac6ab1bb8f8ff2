//! Canonical thermodynamics of N independent quantum harmonic oscillators
//! and the Gaussian (quasithermodynamic) fluctuation layer on top of it.
//!
//! Units: k_B = 1 throughout, energies measured from the ground level, so a
//! single oscillator has levels `0, a, 2a, ...`.
//!
//! All closed forms are written in terms of the Bose factor
//! `x = 1/(e^{βa} - 1)`, evaluated as `q/(1 - q)` with `q = e^{-βa}` for
//! positive `βa` (and `1/expm1(βa)` otherwise). In that form the mean energy
//! is `N·a·x` and the variance `N·a²·x·(1 + x)`, which neither overflow nor
//! lose precision for large `βa`; past `βa ≈ 745` they underflow cleanly to 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant in erg/K, used only for physical-unit output.
pub const BOLTZMANN_CGS: f64 = 1.380_648_8e-16;

/// Whether an ensemble has a genuine (bounded-below) spectrum or only a
/// formal one produced by the symmetric duality solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    Physical,
    Formal,
}

/// N oscillators with level spacing `a = ħω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorEnsemble {
    a: f64,
    n: f64,
    spectrum: Spectrum,
}

impl OscillatorEnsemble {
    /// A physical ensemble: `a > 0`, `n > 0`.
    pub fn new(a: f64, n: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy quantum a = {a} must be positive and finite"
            )));
        }
        Self::checked(a, n, Spectrum::Physical)
    }

    /// An ensemble allowed to carry `a < 0`. Formulas are evaluated formally
    /// through their closed forms.
    pub fn formal(a: f64, n: f64) -> Result<Self> {
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy quantum a = {a} must be non-zero and finite"
            )));
        }
        Self::checked(a, n, Spectrum::Formal)
    }

    fn checked(a: f64, n: f64, spectrum: Spectrum) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "particle count N = {n} must be positive and finite"
            )));
        }
        Ok(Self { a, n, spectrum })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn spectrum(&self) -> Spectrum {
        self.spectrum
    }

    pub fn is_formal(&self) -> bool {
        self.spectrum == Spectrum::Formal
    }

    /// Same spacing, different particle count.
    pub fn with_particles(&self, n: f64) -> Result<Self> {
        Self::checked(self.a, n, self.spectrum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    /// β imposed by a thermostat.
    Thermostat,
    /// β computed from other quantities (duality, homotopy, manifold).
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoState {
    pub beta: f64,
    pub source: StateSource,
}

impl ThermoState {
    pub fn thermostat(beta: f64) -> Self {
        Self {
            beta,
            source: StateSource::Thermostat,
        }
    }

    pub fn derived(beta: f64) -> Self {
        Self {
            beta,
            source: StateSource::Derived,
        }
    }
}

/// Reduced inverse temperature `βa`, validated for use in closed forms.
///
/// Positive values are always accepted (including `+∞`). Negative values are
/// accepted only for formal ensembles; zero and NaN never are.
pub(crate) fn reduced_beta(state: &ThermoState, ens: &OscillatorEnsemble) -> Result<f64> {
    let y = state.beta * ens.a;
    if y > 0.0 || (ens.is_formal() && y < 0.0 && y.is_finite()) {
        Ok(y)
    } else {
        Err(Error::DivergentPartition { reduced: y })
    }
}

/// Bose factor `1/(e^y - 1)` for `y ≠ 0`.
pub(crate) fn bose_factor(y: f64) -> f64 {
    if y > 0.0 {
        let q = (-y).exp();
        q / -(-y).exp_m1()
    } else {
        1.0 / y.exp_m1()
    }
}

/// `log Z_N = -N·log(1 - e^{-βa})`.
pub fn log_partition(state: &ThermoState, ens: &OscillatorEnsemble) -> Result<f64> {
    let y = state.beta * ens.a;
    if !(y > 0.0) {
        return Err(Error::DivergentPartition { reduced: y });
    }
    Ok(-ens.n * (-(-y).exp()).ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of the total energy.
pub fn energy_stats(state: &ThermoState, ens: &OscillatorEnsemble) -> Result<EnergyStats> {
    let y = reduced_beta(state, ens)?;
    let x = bose_factor(y);
    Ok(EnergyStats {
        mean: ens.n * ens.a * x,
        variance: ens.n * ens.a * ens.a * x * (1.0 + x),
    })
}

/// `(1 + u)·ln(1 + u) - u·ln(u)`, the entropy per oscillator at mean
/// occupation `u`. Continuous at `u = 0`.
fn occupation_entropy(u: f64) -> f64 {
    let tail = if u == 0.0 { 0.0 } else { u * u.ln() };
    (1.0 + u) * u.ln_1p() - tail
}

/// Statistical entropy `S(N, E)` of the ensemble, first-degree homogeneous
/// in `(N, E)`.
pub fn entropy_stat(ens: &OscillatorEnsemble, energy: f64) -> Result<f64> {
    if ens.is_formal() || ens.a <= 0.0 {
        return Err(Error::Domain("entropy requires a > 0".into()));
    }
    if !(energy > 0.0) {
        return Err(Error::Domain(format!("energy E = {energy} must be positive")));
    }
    Ok(ens.n * occupation_entropy(energy / (ens.a * ens.n)))
}

/// Specific entropy and its first two derivatives at `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecificEntropy {
    pub s: f64,
    pub ds: f64,
    pub d2s: f64,
}

pub fn specific_entropy(eps: f64, ens: &OscillatorEnsemble) -> Result<SpecificEntropy> {
    let a = ens.a;
    if ens.is_formal() || a <= 0.0 {
        return Err(Error::Domain("specific entropy requires a > 0".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!(
            "specific energy eps = {eps} must be positive"
        )));
    }
    Ok(SpecificEntropy {
        s: occupation_entropy(eps / a),
        ds: (a / eps).ln_1p() / a,
        d2s: -1.0 / (eps * (eps + a)),
    })
}

/// A point of the equilibrium curve `β = a⁻¹·log(1 + a/ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldPoint {
    pub epsilon: f64,
    pub beta: f64,
    /// Curvature `-s''(ε) = 1/(ε(ε + a))`.
    pub lambda: f64,
}

impl ManifoldPoint {
    pub fn from_epsilon(eps: f64, ens: &OscillatorEnsemble) -> Result<Self> {
        let se = specific_entropy(eps, ens)?;
        Ok(Self {
            epsilon: eps,
            beta: se.ds,
            lambda: -se.d2s,
        })
    }

    pub fn from_beta(state: &ThermoState, ens: &OscillatorEnsemble) -> Result<Self> {
        if ens.is_formal() {
            return Err(Error::Domain(
                "manifold points require a physical ensemble".into(),
            ));
        }
        let y = reduced_beta(state, ens)?;
        let eps = ens.a * bose_factor(y);
        if !(eps > 0.0) {
            return Err(Error::Domain(format!(
                "beta*a = {y} is too large: specific energy underflows to zero"
            )));
        }
        Ok(Self {
            epsilon: eps,
            beta: state.beta,
            lambda: 1.0 / (eps * (eps + ens.a)),
        })
    }
}

/// Legendre transform `φ(β) = -βε + s(ε)` at `ε = ε(β)`, with its second
/// derivative `φ'' = ε(ε + a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendrePhi {
    pub epsilon: f64,
    pub phi: f64,
    pub phi_second: f64,
}

pub fn legendre_phi(state: &ThermoState, ens: &OscillatorEnsemble) -> Result<LegendrePhi> {
    let point = ManifoldPoint::from_beta(state, ens)?;
    let se = specific_entropy(point.epsilon, ens)?;
    let eps = point.epsilon;
    Ok(LegendrePhi {
        epsilon: eps,
        phi: -state.beta * eps + se.s,
        phi_second: eps * (eps + ens.a),
    })
}

/// Gaussian fluctuations of `δε` and `δβ` at a manifold point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFluctuation {
    pub variance_eps: f64,
    pub variance_beta: f64,
    pub n: f64,
}

impl GaussianFluctuation {
    /// Normalized density of `δε`.
    pub fn density_eps(&self, x: f64) -> f64 {
        normal_pdf(x, self.variance_eps)
    }

    /// Normalized density of `δβ`.
    pub fn density_beta(&self, y: f64) -> f64 {
        normal_pdf(y, self.variance_beta)
    }

    /// `Var(δε)·Var(δβ)·N²`, identically 1.
    pub fn uncertainty_product(&self) -> f64 {
        self.variance_eps * self.variance_beta * self.n * self.n
    }
}

pub(crate) fn normal_pdf(x: f64, variance: f64) -> f64 {
    (-0.5 * x * x / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

pub fn quasi_fluctuations(alpha: &ManifoldPoint, n: f64) -> Result<GaussianFluctuation> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("N = {n} must be positive")));
    }
    if !(alpha.lambda > 0.0 && alpha.lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "curvature lambda = {} must be positive",
            alpha.lambda
        )));
    }
    Ok(GaussianFluctuation {
        variance_eps: 1.0 / (n * alpha.lambda),
        variance_beta: alpha.lambda / n,
        n,
    })
}
