//! Quantum reference objects: coherent states and their Wigner functions,
//! the harmonic-oscillator propagator and the Gaussian evolution law.
//!
//! Wave profiles are analytic, so they can be evaluated off the real axis.
//! [`propagate`] integrates `∫ G(y, x, t) φ(x) dx` with
//!
//! ```text
//! G(y, x, t) = (2π e^{iπ/2} h sin t)^{-1/2} · exp{(i/h)[(cot t/2)(y² + x²) - yx/sin t]}
//! ```
//!
//! along the line through the complex stationary point of the integrand's
//! Gaussian envelope, `x = x_c + u/√(-A)`, where Gauss-Hermite nodes in `u`
//! see a non-oscillating integrand. [`h_fourier`] integrates on the real axis
//! instead and serves as an independent check at `t = π/2`.
//!
//! Normalizations use unit-norm prefactors: `(λ/(2πħ))^{1/4}` for coherent
//! states and `(λ/(πh))^{1/4}` for thermodynamic profiles.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_hermite, QuadratureRule};

pub const DEFAULT_NODES: usize = 128;
const SINGULAR_SIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub p0: f64,
    pub q0: f64,
    pub lambda: f64,
    pub hbar: f64,
}

impl CoherentState {
    pub fn new(p0: f64, q0: f64, lambda: f64, hbar: f64) -> Result<Self> {
        if !(lambda > 0.0 && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coherent state needs λ > 0 and ħ > 0 (got {lambda}, {hbar})"
            )));
        }
        Ok(Self { p0, q0, lambda, hbar })
    }

    /// `ψ(x) = (λ/(2πħ))^{1/4}·e^{ip₀x/ħ}·e^{-λ(x - q₀)²/(4ħ)}`.
    pub fn profile(&self) -> GaussianProfile {
        let (l, hb) = (self.lambda, self.hbar);
        let alpha = -l / (4.0 * hb);
        GaussianProfile {
            alpha: Complex64::new(alpha, 0.0),
            b: Complex64::new(l * self.q0 / (2.0 * hb), self.p0 / hb),
            c: Complex64::new(alpha * self.q0 * self.q0 + 0.25 * (l / (2.0 * PI * hb)).ln(), 0.0),
        }
    }

    pub fn variance_q(&self) -> f64 {
        self.hbar / self.lambda
    }

    pub fn variance_p(&self) -> f64 {
        self.lambda * self.hbar / 4.0
    }
}

/// `W(p, q) = 2·exp(-λ(q - q₀)²/(2ħ))·exp(-2(p - p₀)²/(λħ))`, with
/// `(2πħ)⁻¹∫∫W dp dq = 1`.
pub fn wigner_coherent(state: &CoherentState, p: f64, q: f64) -> f64 {
    let dq = q - state.q0;
    let dp = p - state.p0;
    2.0 * (-state.lambda * dq * dq / (2.0 * state.hbar)).exp()
        * (-2.0 * dp * dp / (state.lambda * state.hbar)).exp()
}

/// `W(p, q) = ∫ ψ(q + x/2) ψ̄(q - x/2) e^{-ipx/ħ} dx` by quadrature.
pub fn wigner_from_wavefunction(state: &CoherentState, p: f64, q: f64, nodes: usize) -> Result<f64> {
    let rule = gauss_hermite(nodes)?;
    let psi = state.profile();
    let hb = state.hbar;
    // |ψ(q + x/2)ψ(q - x/2)| ∝ e^{-λx²/(8ħ)}
    let s = (8.0 * hb / state.lambda).sqrt();
    let total: Complex64 = rule
        .iter()
        .map(|(u, w)| {
            let x = s * u;
            let v = psi.eval(Complex64::new(q + x / 2.0, 0.0))
                * psi.eval(Complex64::new(q - x / 2.0, 0.0)).conj()
                * Complex64::cis(-p * x / hb);
            v * (w * s * (u * u).exp())
        })
        .sum();
    Ok(total.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerMoments {
    /// `(2πħ)⁻¹∫∫W`.
    pub mass: f64,
    pub var_q: f64,
    pub var_p: f64,
}

impl WignerMoments {
    pub fn uncertainty_product(&self) -> f64 {
        self.var_q * self.var_p
    }
}

/// Mass and central second moments of `W/(2πħ)` by a 2D Gauss-Hermite rule.
pub fn wigner_moments(state: &CoherentState, nodes: usize) -> Result<WignerMoments> {
    let rule = gauss_hermite(nodes)?;
    let sq = (2.0 * state.hbar / state.lambda).sqrt();
    let sp = (state.lambda * state.hbar / 2.0).sqrt();
    let norm = sq * sp / (2.0 * PI * state.hbar);
    let (mut mass, mut mq, mut mp) = (0.0, 0.0, 0.0);
    for (u, wu) in rule.iter() {
        for (v, wv) in rule.iter() {
            let (q, p) = (state.q0 + sq * u, state.p0 + sp * v);
            let w = wu * wv * norm * wigner_coherent(state, p, q) * (u * u + v * v).exp();
            mass += w;
            mq += w * (q - state.q0).powi(2);
            mp += w * (p - state.p0).powi(2);
        }
    }
    Ok(WignerMoments {
        mass,
        var_q: mq / mass,
        var_p: mp / mass,
    })
}

/// An analytic wave profile with a known Gaussian envelope.
pub trait WaveProfile: Sync {
    fn eval(&self, x: Complex64) -> Complex64;

    /// `(α, b)` with `φ(x) ∝ exp(αx² + bx)`, `Re α < 0`; used to place
    /// quadrature contours.
    fn envelope(&self) -> (Complex64, Complex64);
}

/// `φ(x) = exp(αx² + bx + c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianProfile {
    pub alpha: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl GaussianProfile {
    /// `φ_h(x; λ, x₀, y₀) = (λ/(πh))^{1/4}·exp{(i/h)[(iλ/2)(x - x₀)² + y₀x]}`.
    pub fn thermodynamic(lambda: f64, x0: f64, y0: f64, h: f64) -> Result<Self> {
        if !(lambda > 0.0 && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "profile needs λ > 0 and h > 0 (got {lambda}, {h})"
            )));
        }
        let alpha = -lambda / (2.0 * h);
        Ok(Self {
            alpha: Complex64::new(alpha, 0.0),
            b: Complex64::new(lambda * x0 / h, y0 / h),
            c: Complex64::new(alpha * x0 * x0 + 0.25 * (lambda / (PI * h)).ln(), 0.0),
        })
    }
}

impl WaveProfile for GaussianProfile {
    fn eval(&self, x: Complex64) -> Complex64 {
        (self.alpha * x * x + self.b * x + self.c).exp()
    }

    fn envelope(&self) -> (Complex64, Complex64) {
        (self.alpha, self.b)
    }
}

/// `φ^t(y) = ∫ G(y, x, t) φ(x) dx`, evaluated on demand.
#[derive(Debug, Clone)]
pub struct Propagated<P> {
    inner: P,
    t: f64,
    h: f64,
    rule: QuadratureRule,
    prefactor: Complex64,
    cot_half: f64,
}

/// Propagates `initial` to angle `t` with the default node count.
pub fn propagate<P: WaveProfile>(initial: P, t: f64, h: f64) -> Result<Propagated<P>> {
    propagate_with(initial, t, h, DEFAULT_NODES)
}

pub fn propagate_with<P: WaveProfile>(initial: P, t: f64, h: f64, nodes: usize) -> Result<Propagated<P>> {
    let s = t.sin();
    if s.abs() < SINGULAR_SIN {
        return Err(Error::SingularTime { t });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("h = {h} must be positive")));
    }
    let prefactor = (Complex64::new(0.0, 2.0 * PI * h * s)).sqrt().inv();
    Ok(Propagated {
        inner: initial,
        t,
        h,
        rule: gauss_hermite(nodes)?,
        prefactor,
        cot_half: t.cos() / s / 2.0,
    })
}

impl<P: WaveProfile> Propagated<P> {
    pub fn time(&self) -> f64 {
        self.t
    }

    fn kernel(&self, y: Complex64, x: Complex64) -> Complex64 {
        let i = Complex64::i();
        self.prefactor * (i / self.h * (self.cot_half * (y * y + x * x) - y * x / self.t.sin())).exp()
    }
}

impl<P: WaveProfile> WaveProfile for Propagated<P> {
    fn eval(&self, y: Complex64) -> Complex64 {
        let i = Complex64::i();
        let (alpha, b) = self.inner.envelope();
        let a = i * self.cot_half / self.h + alpha;
        let bb = b - i * y / (self.h * self.t.sin());
        let xc = -bb / (2.0 * a);
        let jac = (-a).sqrt().inv();
        self.rule
            .iter()
            .map(|(u, w)| {
                let x = xc + jac * u;
                self.kernel(y, x) * self.inner.eval(x) * (w * (u * u).exp())
            })
            .sum::<Complex64>()
            * jac
    }

    fn envelope(&self) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let (alpha, b) = self.inner.envelope();
        let s = self.t.sin();
        let a = i * self.cot_half / self.h + alpha;
        let alpha_t = i * self.cot_half / self.h + (4.0 * a * self.h * self.h * s * s).inv();
        let b_t = i * b / (2.0 * a * self.h * s);
        (alpha_t, b_t)
    }
}

/// Real-axis mapping `x = center + scale·u` matched to `|φ|`.
fn real_axis_frame<P: WaveProfile>(profile: &P) -> Result<(f64, f64)> {
    let (alpha, b) = profile.envelope();
    if !(alpha.re < 0.0) {
        return Err(Error::QuadratureFailure(
            "profile envelope is not decaying".into(),
        ));
    }
    Ok((-b.re / (2.0 * alpha.re), (-alpha.re).sqrt().recip()))
}

/// `(2π e^{iπ/2} h)^{-1/2} ∫ e^{-iyx/h} φ(x) dx` by real-axis quadrature.
pub fn h_fourier<P: WaveProfile>(profile: &P, y: f64, h: f64, nodes: usize) -> Result<Complex64> {
    let rule = gauss_hermite(nodes)?;
    let (center, scale) = real_axis_frame(profile)?;
    let prefactor = Complex64::new(0.0, 2.0 * PI * h).sqrt().inv();
    let sum: Complex64 = rule
        .iter()
        .map(|(u, w)| {
            let x = center + scale * u;
            profile.eval(Complex64::new(x, 0.0)) * Complex64::cis(-y * x / h) * (w * (u * u).exp())
        })
        .sum();
    Ok(prefactor * sum * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMoments {
    /// `∫|φ|²`.
    pub norm: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Norm, mean and variance of `|φ|²` on the real axis.
pub fn density_moments<P: WaveProfile>(profile: &P, nodes: usize) -> Result<DensityMoments> {
    let rule = gauss_hermite(nodes)?;
    let (center, scale) = real_axis_frame(profile)?;
    // |φ|² decays like e^{2 Re α x²}: tighten the frame by √2
    let scale = scale / std::f64::consts::SQRT_2;
    let pts: Vec<(f64, f64)> = rule
        .iter()
        .map(|(u, w)| {
            let x = center + scale * u;
            (
                x,
                w * scale * (u * u).exp() * profile.eval(Complex64::new(x, 0.0)).norm_sqr(),
            )
        })
        .collect();
    let norm: f64 = pts.iter().map(|(_, d)| d).sum();
    let mean = pts.iter().map(|(x, d)| x * d).sum::<f64>() / norm;
    let variance = pts.iter().map(|(x, d)| (x - mean).powi(2) * d).sum::<f64>() / norm;
    Ok(DensityMoments { norm, mean, variance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEvolution {
    pub t: f64,
    /// `c_t = x₀ cos t + y₀ sin t`.
    pub c_t: f64,
    /// `λ_t = (λ⁻¹cos²t + λ sin²t)⁻¹`.
    pub lambda_t: f64,
}

impl GaussianEvolution {
    /// Variance of `|φ^t|²`: `(h/2)(λ⁻¹cos²t + λ sin²t)`.
    pub fn variance(&self, h: f64) -> f64 {
        h / (2.0 * self.lambda_t)
    }

    /// `|φ^t(y)|² = (λ_t/(πh))^{1/2}·exp(-λ_t(y - c_t)²/h)`.
    pub fn density(&self, y: f64, h: f64) -> f64 {
        (self.lambda_t / (PI * h)).sqrt() * (-self.lambda_t * (y - self.c_t).powi(2) / h).exp()
    }
}

pub fn gaussian_evolution_params(x0: f64, y0: f64, lambda: f64, t: f64) -> Result<GaussianEvolution> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("λ = {lambda} must be positive")));
    }
    let (s, c) = t.sin_cos();
    Ok(GaussianEvolution {
        t,
        c_t: x0 * c + y0 * s,
        lambda_t: 1.0 / (c * c / lambda + lambda * s * s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn coherent_state_wigner() {
        let st = CoherentState::new(0.3, -0.2, 1.7, 0.05).unwrap();
        assert_eq!(wigner_coherent(&st, 0.3, -0.2), 2.0);
        let m = wigner_moments(&st, 24).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-12);
        assert_relative_eq!(m.var_q, st.variance_q(), max_relative = 1e-12);
        assert_relative_eq!(m.var_p, st.variance_p(), max_relative = 1e-12);
        assert_relative_eq!(m.uncertainty_product(), 0.05 * 0.05 / 4.0, max_relative = 1e-12);
        for (p, q) in [(0.3, -0.2), (0.5, 0.0), (-0.1, -0.4)] {
            let direct = wigner_from_wavefunction(&st, p, q, 64).unwrap();
            assert!((direct - wigner_coherent(&st, p, q)).abs() < 1e-12);
        }
        assert!(CoherentState::new(0.0, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn profiles_are_normalized() {
        let st = CoherentState::new(1.0, 0.5, 2.0, 0.1).unwrap();
        let m = density_moments(&st.profile(), 64).unwrap();
        assert!((m.norm - 1.0).abs() < 1e-13);
        assert_relative_eq!(m.mean, 0.5, max_relative = 1e-13);
        assert_relative_eq!(m.variance, st.variance_q(), max_relative = 1e-12);
        let phi = GaussianProfile::thermodynamic(2.0, 0.1, 0.2, 0.02).unwrap();
        let m = density_moments(&phi, 64).unwrap();
        assert!((m.norm - 1.0).abs() < 1e-13);
        assert_relative_eq!(m.variance, 0.02 / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn evolution_params() {
        let e = gaussian_evolution_params(1.0, 1.0, 2.0, 0.0).unwrap();
        assert_eq!((e.c_t, e.lambda_t), (1.0, 2.0));
        let e = gaussian_evolution_params(1.0, 3.0, 2.0, FRAC_PI_2).unwrap();
        assert_relative_eq!(e.c_t, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.lambda_t, 0.5, max_relative = 1e-15);
        let e = gaussian_evolution_params(1.0, 1.0, 2.0, FRAC_PI_4).unwrap();
        assert_relative_eq!(e.c_t, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(e.lambda_t, 0.8, max_relative = 1e-15);
        assert!(gaussian_evolution_params(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn quarter_period_is_the_fourier_transform() {
        let h = 0.02;
        let phi = GaussianProfile::thermodynamic(2.0, 0.05, -0.03, h).unwrap();
        let prop = propagate(phi, FRAC_PI_2, h).unwrap();
        for k in -20..=20 {
            let y = k as f64 * 0.01;
            let a = prop.eval(Complex64::new(y, 0.0));
            let b = h_fourier(&phi, y, h, 128).unwrap();
            assert!((a - b).norm() < 1e-10, "y = {y}");
        }
    }

    #[test]
    fn propagated_width_and_drift() {
        let h = 0.02;
        let (lambda, x0, y0) = (2.0, 0.1, -0.05);
        for t in [0.3, FRAC_PI_4, 1.2, 2.5, -0.7] {
            let phi = GaussianProfile::thermodynamic(lambda, x0, y0, h).unwrap();
            let prop = propagate(phi, t, h).unwrap();
            let m = density_moments(&prop, 64).unwrap();
            let e = gaussian_evolution_params(x0, y0, lambda, t).unwrap();
            assert!((m.norm - 1.0).abs() < 1e-10, "t = {t}");
            assert_relative_eq!(m.mean, e.c_t, epsilon = 1e-12);
            assert_relative_eq!(m.variance, e.variance(h), max_relative = 1e-10);
            let y = e.c_t + 0.07;
            let d = prop.eval(Complex64::new(y, 0.0)).norm_sqr();
            assert_relative_eq!(d, e.density(y, h), max_relative = 1e-9);
        }
    }

    #[test]
    fn unit_width_is_invariant() {
        let h = 0.1;
        let phi = GaussianProfile::thermodynamic(1.0, 0.0, 0.0, h).unwrap();
        for t in [0.2, 1.0, 2.0, 3.0] {
            let prop = propagate(phi, t, h).unwrap();
            for y in [0.0, 0.1, 0.3] {
                let a = prop.eval(Complex64::new(y, 0.0)).norm_sqr();
                let b = phi.eval(Complex64::new(y, 0.0)).norm_sqr();
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn widths_compose() {
        let h = 0.05;
        let phi = GaussianProfile::thermodynamic(2.0, 0.0, 0.0, h).unwrap();
        let (t1, t2) = (0.4, 0.7);
        let twice = propagate(propagate(phi, t1, h).unwrap(), t2, h).unwrap();
        let m = density_moments(&twice, 48).unwrap();
        let e = gaussian_evolution_params(0.0, 0.0, 2.0, t1 + t2).unwrap();
        assert_relative_eq!(m.variance, e.variance(h), max_relative = 1e-8);
        assert!((m.norm - 1.0).abs() < 1e-8);
    }

    #[test]
    fn singular_times_are_rejected() {
        let phi = GaussianProfile::thermodynamic(1.0, 0.0, 0.0, 0.1).unwrap();
        assert!(matches!(
            propagate(phi, 0.0, 0.1),
            Err(Error::SingularTime { .. })
        ));
        assert!(matches!(propagate(phi, PI, 0.1), Err(Error::SingularTime { .. })));
    }
}
