//! Angle-indexed tomograms of the fluctuation pair `(δε, δβ)` and their
//! inversion to a joint quasiprobability density `R(x, y)`.
//!
//! A tomogram at angle `θ` is the density of `cos θ·δε + sin θ·δβ`, with
//! `δβ` represented by the dual system's `δε'`. Each one is a truncated
//! Gram-Charlier A series around the zero-mean Gaussian of matching variance,
//!
//! ```text
//! T(z) = g(z; v)·[1 + Σ_{n=1}^{n0} γ_n He_n(z/σ)],   σ = √v,
//! χ(r) = e^{-v r²/2}·[1 + Σ γ_n (irσ)ⁿ],
//! ```
//!
//! with `γ_n` fixed by the raw moments through order `n0`. The inversion is
//!
//! ```text
//! R(x, y) = 1/(4π²) ∫₀^π dθ ∫ |r| χ_θ(-r) e^{ir(x cos θ + y sin θ)} dr.
//! ```
//!
//! The `r` integral substitutes `r = √(2/v_θ)·ρ`, which turns `|r|e^{-v_θ r²/2}`
//! into the weight `|ρ|e^{-ρ²}` handled by [`gauss_hermite_abs`]; the `θ`
//! integral is the trapezoid rule on `θ_j = jπ/n_θ`.
//!
//! `R` carries unit Lebesgue mass. The Wigner-normalized object is
//! `W = 2πh·R` with `h = 2/N`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::{cumulants_to_moments, CumulantVector};
use crate::error::{Error, Result};
use crate::homotopy::HomotopyPath;
use crate::quadrature::{gauss_hermite, gauss_hermite_abs, QuadratureRule};
use crate::thermo::ManifoldPoint;

pub const MAX_DEGREE: usize = 8;
pub const MIN_ANGLES: usize = 32;
pub const PURITY_MIN_SIGMAS: f64 = 6.0;
/// Imaginary residue (relative to `max|R|`) above which reconstruction fails.
pub const IMAGINARY_FAILURE: f64 = 1e-6;

/// `He_0..=He_n` at `u`.
fn hermite_he(n: usize, u: f64) -> Vec<f64> {
    let mut he = Vec::with_capacity(n + 1);
    he.push(1.0);
    if n >= 1 {
        he.push(u);
    }
    for k in 1..n {
        let next = u * he[k] - k as f64 * he[k - 1];
        he.push(next);
    }
    he
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `E[Uᵏ He_n(U)]` for standard normal `U`: `k!/(j!·2ʲ)` with `k - n = 2j`.
fn gaussian_hermite_moment(k: usize, n: usize) -> f64 {
    if k < n || (k - n) % 2 == 1 {
        return 0.0;
    }
    let j = (k - n) / 2;
    factorial(k) / (factorial(j) * 2f64.powi(j as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tomogram {
    pub angle: f64,
    pub variance: f64,
    pub degree: usize,
    /// `κ_1..κ_{n0}` the tomogram was matched to.
    pub cumulants: Vec<f64>,
    /// `γ_0..=γ_{n0}`, with `γ_0 = 1`.
    coefficients: Vec<f64>,
}

/// Matches a Gram-Charlier A density to `cumulants` (`κ_1..`) through order `n0`.
pub fn build_tomogram(angle: f64, cumulants: &CumulantVector, n0: usize) -> Result<Tomogram> {
    if !(2..=MAX_DEGREE).contains(&n0) {
        return Err(Error::InvalidParameter(format!(
            "degree of truncation n0 = {n0} outside 2..={MAX_DEGREE}"
        )));
    }
    if cumulants.order() < n0 {
        return Err(Error::InvalidParameter(format!(
            "{} cumulants supplied, n0 = {n0} needs more",
            cumulants.order()
        )));
    }
    let kappa = &cumulants.as_slice()[..n0];
    let variance = kappa[1];
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tomogram variance {variance} must be positive"
        )));
    }
    let sigma = variance.sqrt();
    // raw moments of U = Z/σ, from cumulants standardized with κ̃_2 = 1
    let standardized: Vec<f64> = kappa
        .iter()
        .enumerate()
        .map(|(i, k)| if i == 1 { 1.0 } else { k / sigma.powi(i as i32 + 1) })
        .collect();
    let moments = cumulants_to_moments(&standardized);

    // Lower-triangular system: μ_k - E[Uᵏ] = Σ_{n=1}^{k} γ_n E[Uᵏ He_n(U)].
    let mut gamma = vec![0.0; n0 + 1];
    gamma[0] = 1.0;
    for k in 1..=n0 {
        let mut rhs = moments[k] - gaussian_hermite_moment(k, 0);
        for (n, g) in gamma.iter().enumerate().take(k).skip(1) {
            rhs -= g * gaussian_hermite_moment(k, n);
        }
        let diag = gaussian_hermite_moment(k, k);
        if diag == 0.0 || !rhs.is_finite() {
            return Err(Error::IllConditioned(format!(
                "moment matching breaks down at order {k}"
            )));
        }
        gamma[k] = rhs / diag;
    }
    Ok(Tomogram {
        angle,
        variance,
        degree: n0,
        cumulants: kappa.to_vec(),
        coefficients: gamma,
    })
}

impl Tomogram {
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_gaussian(&self) -> bool {
        self.coefficients[1..].iter().all(|&g| g == 0.0)
    }

    /// `T(z)` at the tomogram's own angle.
    pub fn density(&self, z: f64) -> f64 {
        let sigma = self.sigma();
        let u = z / sigma;
        let he = hermite_he(self.degree, u);
        let poly: f64 = self.coefficients.iter().zip(&he).map(|(g, h)| g * h).sum();
        (-0.5 * u * u).exp() / (sigma * (2.0 * PI).sqrt()) * poly
    }

    /// `T(z; λ cos θ, λ sin θ) = |λ|⁻¹·T(z/λ; cos θ, sin θ)` for `λ ≠ 0`.
    pub fn density_scaled(&self, z: f64, lambda: f64) -> f64 {
        self.density(z / lambda) / lambda.abs()
    }

    /// `χ(r) = E[e^{irZ}]`.
    pub fn characteristic(&self, r: f64) -> Complex64 {
        self.characteristic_polynomial(r) * (-0.5 * self.variance * r * r).exp()
    }

    /// The polynomial factor `1 + Σ γ_n (irσ)ⁿ` of the characteristic function.
    pub fn characteristic_polynomial(&self, r: f64) -> Complex64 {
        let w = Complex64::new(0.0, r * self.sigma());
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &g| acc * w + g)
    }

    /// Target raw moments `m_0..=m_{n0}` from the matched cumulants.
    pub fn target_moments(&self) -> Vec<f64> {
        cumulants_to_moments(&self.cumulants)
    }

    /// `∫ zⁿ T(z) dz` for `n = 0..=max_order`, by Gauss-Hermite quadrature.
    pub fn quadrature_moments(&self, max_order: usize) -> Result<Vec<f64>> {
        let rule = gauss_hermite((max_order + self.degree) / 2 + 2)?;
        let scale = self.sigma() * std::f64::consts::SQRT_2;
        Ok((0..=max_order)
            .map(|n| {
                rule.integrate(|u| {
                    let he = hermite_he(self.degree, std::f64::consts::SQRT_2 * u);
                    let poly: f64 = self.coefficients.iter().zip(&he).map(|(g, h)| g * h).sum();
                    (scale * u).powi(n as i32) * poly
                }) / PI.sqrt()
            })
            .collect())
    }

    /// Negative part `∫ max(-T, 0) dz`, estimated on `±12σ`.
    pub fn negative_mass(&self) -> f64 {
        if self.is_gaussian() {
            return 0.0;
        }
        let sigma = self.sigma();
        let n = 4800;
        let dz = 24.0 * sigma / n as f64;
        (0..=n)
            .map(|i| (-self.density(-12.0 * sigma + i as f64 * dz)).max(0.0))
            .sum::<f64>()
            * dz
    }
}

/// How tomograms at arbitrary angles are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySource {
    /// Homotopy cumulants on `[0, π/2]`; beyond `π/2` the path has no
    /// admissible point for every angle, so the cumulants of
    /// `cos θ·δε + sin θ·δε'` with independent endpoints are used:
    /// `κ_n(θ) = cosⁿθ·κ_n(0) + sinⁿθ·κ_n(π/2)`.
    Homotopy { path: HomotopyPath },
    /// `κ_n(θ) = cosⁿθ·κ_n + sinⁿθ·κ'_n` everywhere.
    Independent { source: Vec<f64>, dual: Vec<f64> },
    /// Pure Gaussians with `v_θ = v cos²θ + v' sin²θ`.
    Gaussian { var_x: f64, var_y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomogramFamily {
    pub source: FamilySource,
    pub degree: usize,
}

fn combine_independent(source: &[f64], dual: &[f64], theta: f64) -> CumulantVector {
    let (s, c) = theta.sin_cos();
    CumulantVector::new(
        source
            .iter()
            .zip(dual)
            .enumerate()
            .map(|(i, (k, kd))| {
                let p = i as i32 + 1;
                c.powi(p) * k + s.powi(p) * kd
            })
            .collect(),
    )
}

impl TomogramFamily {
    pub fn homotopy(path: HomotopyPath, n0: usize) -> Result<Self> {
        check_degree(n0)?;
        Ok(Self {
            source: FamilySource::Homotopy { path },
            degree: n0,
        })
    }

    pub fn independent(source: &CumulantVector, dual: &CumulantVector, n0: usize) -> Result<Self> {
        check_degree(n0)?;
        if source.order() < n0 || dual.order() < n0 {
            return Err(Error::InvalidParameter("not enough endpoint cumulants".into()));
        }
        Ok(Self {
            source: FamilySource::Independent {
                source: source.as_slice()[..n0].to_vec(),
                dual: dual.as_slice()[..n0].to_vec(),
            },
            degree: n0,
        })
    }

    pub fn gaussian(var_x: f64, var_y: f64) -> Result<Self> {
        if !(var_x > 0.0 && var_y > 0.0) {
            return Err(Error::InvalidParameter("variances must be positive".into()));
        }
        Ok(Self {
            source: FamilySource::Gaussian { var_x, var_y },
            degree: 2,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self.source {
            FamilySource::Homotopy { .. } => "homotopy",
            FamilySource::Independent { .. } => "independent",
            FamilySource::Gaussian { .. } => "gaussian",
        }
    }

    /// Cumulants of the tomogram at `θ ∈ [0, π)`.
    pub fn cumulants_at(&self, theta: f64) -> Result<CumulantVector> {
        match &self.source {
            FamilySource::Homotopy { path } => {
                if theta <= std::f64::consts::FRAC_PI_2 {
                    path.cumulants(theta, self.degree)
                } else {
                    let k0 = path.cumulants(0.0, self.degree)?;
                    let k1 = path.cumulants(std::f64::consts::FRAC_PI_2, self.degree)?;
                    Ok(combine_independent(k0.as_slice(), k1.as_slice(), theta))
                }
            }
            FamilySource::Independent { source, dual } => Ok(combine_independent(source, dual, theta)),
            FamilySource::Gaussian { var_x, var_y } => {
                let (s, c) = theta.sin_cos();
                Ok(CumulantVector::new(vec![0.0, var_x * c * c + var_y * s * s]))
            }
        }
    }

    pub fn at(&self, theta: f64) -> Result<Tomogram> {
        build_tomogram(theta, &self.cumulants_at(theta)?, self.degree)
    }

    /// `T(z; μ, ν)` for any non-zero direction, through homogeneity and the
    /// reflection `T(z; -μ, -ν) = T(-z; μ, ν)`.
    pub fn density_along(&self, z: f64, mu: f64, nu: f64) -> Result<f64> {
        let lambda = mu.hypot(nu);
        if lambda == 0.0 {
            return Err(Error::InvalidParameter("direction (0, 0) has no tomogram".into()));
        }
        let theta = nu.atan2(mu);
        let (theta, lambda) = if (0.0..PI).contains(&theta) {
            (theta, lambda)
        } else if theta < 0.0 {
            (theta + PI, -lambda)
        } else {
            (0.0, -lambda)
        };
        Ok(self.at(theta)?.density_scaled(z, lambda))
    }
}

fn check_degree(n0: usize) -> Result<()> {
    if (2..=MAX_DEGREE).contains(&n0) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "degree of truncation n0 = {n0} outside 2..={MAX_DEGREE}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, nx: usize, y_min: f64, y_max: f64, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || !(x_max > x_min) || !(y_max > y_min) {
            return Err(Error::InvalidParameter(
                "grid needs at least 2×2 points and positive extent".into(),
            ));
        }
        Ok(Self {
            x_min,
            x_max,
            nx,
            y_min,
            y_max,
            ny,
        })
    }

    /// Symmetric grid covering `±extent` standard deviations in each axis.
    pub fn centered(sigma_x: f64, sigma_y: f64, extent: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(
            -extent * sigma_x,
            extent * sigma_x,
            nx,
            -extent * sigma_y,
            extent * sigma_y,
            ny,
        )
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    /// Half-width of the grid in units of the given deviations.
    pub fn coverage(&self, sigma_x: f64, sigma_y: f64) -> (f64, f64) {
        (
            self.x_min.abs().min(self.x_max.abs()) / sigma_x,
            self.y_min.abs().min(self.y_max.abs()) / sigma_y,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub n_theta: usize,
    pub r_nodes: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            n_theta: 64,
            r_nodes: 96,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDiagnostics {
    /// `max|Im R| / max|Re R|` before the imaginary part is discarded.
    pub imaginary_residue: f64,
    /// Share of `Σ|R|` carried by negative cells.
    pub negativity_fraction: f64,
    pub purity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiDensityGrid {
    pub spec: GridSpec,
    pub h: f64,
    /// Reference deviations of the two marginals, used for coverage checks.
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub degree: usize,
    pub imaginary_residue: f64,
    /// Row-major in `x`: value `(i, j)` at index `i·ny + j`.
    values: Vec<f64>,
}

impl QuasiDensityGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.ny + j]
    }

    fn cell(&self) -> f64 {
        self.spec.dx() * self.spec.dy()
    }

    /// `Σ R·Δx·Δy`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// `∫ R dy` at each grid `x`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let dy = self.spec.dy();
        self.values
            .chunks(self.spec.ny)
            .map(|row| row.iter().sum::<f64>() * dy)
            .collect()
    }

    /// `∫ R dx` at each grid `y`.
    pub fn marginal_y(&self) -> Vec<f64> {
        let dx = self.spec.dx();
        (0..self.spec.ny)
            .map(|j| (0..self.spec.nx).map(|i| self.value(i, j)).sum::<f64>() * dx)
            .collect()
    }

    /// `Σ xⁿ R·Δx·Δy` for `n = 0..=max_order`.
    pub fn moments_x(&self, max_order: usize) -> Vec<f64> {
        let xs = self.spec.xs();
        let dx = self.spec.dx();
        let marginal = self.marginal_x();
        (0..=max_order)
            .map(|n| {
                xs.iter()
                    .zip(&marginal)
                    .map(|(x, m)| x.powi(n as i32) * m)
                    .sum::<f64>()
                    * dx
            })
            .collect()
    }

    pub fn moments_y(&self, max_order: usize) -> Vec<f64> {
        let ys = self.spec.ys();
        let dy = self.spec.dy();
        let marginal = self.marginal_y();
        (0..=max_order)
            .map(|n| {
                ys.iter()
                    .zip(&marginal)
                    .map(|(y, m)| y.powi(n as i32) * m)
                    .sum::<f64>()
                    * dy
            })
            .collect()
    }

    pub fn negativity_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        let negative: f64 = self.values.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
        if total == 0.0 {
            0.0
        } else {
            negative / total
        }
    }

    /// `2πh·Σ R²·Δx·Δy`; 1 for a pure Gaussian state.
    pub fn purity(&self) -> Result<f64> {
        let (cx, cy) = self.spec.coverage(self.sigma_x, self.sigma_y);
        // a little slack for grids specified as exactly ±6σ
        if cx < PURITY_MIN_SIGMAS * (1.0 - 1e-9) || cy < PURITY_MIN_SIGMAS * (1.0 - 1e-9) {
            return Err(Error::GridTooSmall(format!(
                "grid covers {cx:.2}σ × {cy:.2}σ, purity needs {PURITY_MIN_SIGMAS}σ"
            )));
        }
        Ok(2.0 * PI * self.h * self.values.iter().map(|v| v * v).sum::<f64>() * self.cell())
    }

    /// Wigner-normalized values `2πh·R`.
    pub fn wigner(&self) -> Vec<f64> {
        let s = 2.0 * PI * self.h;
        self.values.iter().map(|v| s * v).collect()
    }

    pub fn diagnostics(&self) -> GridDiagnostics {
        GridDiagnostics {
            imaginary_residue: self.imaginary_residue,
            negativity_fraction: self.negativity_fraction(),
            purity: self.purity().ok(),
        }
    }

    /// Largest `|R - other|` over the common grid.
    pub fn max_abs_diff(&self, other: &QuasiDensityGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::InvalidParameter("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// `x,y,value` rows under a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,value")?;
        for i in 0..self.spec.nx {
            for j in 0..self.spec.ny {
                writeln!(out, "{},{},{}", self.spec.x(i), self.spec.y(j), self.value(i, j))?;
            }
        }
        Ok(())
    }

    pub fn header(&self) -> GridHeader {
        GridHeader {
            grid: self.spec,
            h: self.h,
            n0: self.degree,
            diagnostics: self.diagnostics(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub grid: GridSpec,
    pub h: f64,
    pub n0: usize,
    pub diagnostics: GridDiagnostics,
}

/// Per-angle data for the inner sum: `(cos θ, sin θ, r_k, c_k)` with
/// `c_k = Δθ/(4π²)·s²·w_k·P_θ(-r_k)`.
struct AngleTerms {
    cos: f64,
    sin: f64,
    r: Vec<f64>,
    c: Vec<Complex64>,
}

fn angle_terms(tomo: &Tomogram, rule: &QuadratureRule, dtheta: f64) -> AngleTerms {
    let s = (2.0 / tomo.variance).sqrt();
    let scale = dtheta / (4.0 * PI * PI) * s * s;
    let (sin, cos) = tomo.angle.sin_cos();
    let (r, c) = rule
        .iter()
        .map(|(rho, w)| {
            let r = s * rho;
            (r, tomo.characteristic_polynomial(-r) * (scale * w))
        })
        .unzip();
    AngleTerms { cos, sin, r, c }
}

/// Inverts a tomogram family on a grid.
pub fn reconstruct(
    family: &TomogramFamily,
    h: f64,
    spec: &GridSpec,
    opts: &ReconstructOptions,
) -> Result<QuasiDensityGrid> {
    if opts.n_theta < MIN_ANGLES {
        return Err(Error::InvalidParameter(format!(
            "n_theta = {} below the minimum {MIN_ANGLES}",
            opts.n_theta
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("h = {h} must be positive")));
    }
    let rule = gauss_hermite_abs(opts.r_nodes)?;
    let dtheta = PI / opts.n_theta as f64;
    let tomograms: Vec<Tomogram> = (0..opts.n_theta)
        .map(|j| family.at(j as f64 * dtheta))
        .collect::<Result<_>>()?;
    let terms: Vec<AngleTerms> = tomograms.iter().map(|t| angle_terms(t, &rule, dtheta)).collect();

    let ny = spec.ny;
    let complex: Vec<Complex64> = (0..spec.nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (x, y) = (spec.x(idx / ny), spec.y(idx % ny));
            let mut acc = Complex64::new(0.0, 0.0);
            for term in &terms {
                let p = x * term.cos + y * term.sin;
                for (r, c) in term.r.iter().zip(&term.c) {
                    acc += c * Complex64::cis(r * p);
                }
            }
            acc
        })
        .collect();

    let max_re = complex.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let max_im = complex.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let imaginary_residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    if imaginary_residue > IMAGINARY_FAILURE {
        return Err(Error::QuadratureFailure(format!(
            "imaginary residue {imaginary_residue:e} exceeds {IMAGINARY_FAILURE:e}"
        )));
    }
    Ok(QuasiDensityGrid {
        spec: *spec,
        h,
        sigma_x: tomograms[0].sigma(),
        sigma_y: family.at(std::f64::consts::FRAC_PI_2)?.sigma(),
        degree: family.degree,
        imaginary_residue,
        values: complex.into_iter().map(|z| z.re).collect(),
    })
}

/// Independent centered Gaussian `R(x, y)` with the given variances.
pub fn gaussian_grid(var_x: f64, var_y: f64, h: f64, spec: &GridSpec) -> Result<QuasiDensityGrid> {
    if !(var_x > 0.0 && var_y > 0.0) {
        return Err(Error::InvalidParameter("variances must be positive".into()));
    }
    let norm = 1.0 / (2.0 * PI * (var_x * var_y).sqrt());
    let values = (0..spec.nx * spec.ny)
        .map(|idx| {
            let (x, y) = (spec.x(idx / spec.ny), spec.y(idx % spec.ny));
            norm * (-0.5 * (x * x / var_x + y * y / var_y)).exp()
        })
        .collect();
    Ok(QuasiDensityGrid {
        spec: *spec,
        h,
        sigma_x: var_x.sqrt(),
        sigma_y: var_y.sqrt(),
        degree: 2,
        imaginary_residue: 0.0,
        values,
    })
}

/// `R(x, y) = N/(2π)·exp{N(x²s'' + y²/s'')/2}` with `s'' = -λ`.
///
/// The marginal variances are `1/(Nλ)` and `λ/N`; their product is `(h/2)²`.
pub fn gaussian_limit(alpha: &ManifoldPoint, n: f64, spec: &GridSpec) -> Result<QuasiDensityGrid> {
    if !(alpha.lambda > 0.0) {
        return Err(Error::Domain(format!("λ = {} must be positive", alpha.lambda)));
    }
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("N = {n} must be positive")));
    }
    gaussian_grid(1.0 / (n * alpha.lambda), alpha.lambda / n, 2.0 / n, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::solve_mean_anchored;
    use crate::thermo::OscillatorEnsemble;
    use approx::assert_relative_eq;

    fn homotopy_family(n0: usize) -> TomogramFamily {
        let pair = solve_mean_anchored(1.0, 1.0, 100.0).unwrap();
        TomogramFamily::homotopy(HomotopyPath::from_dual(&pair).unwrap(), n0).unwrap()
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_he(4, 2.0), vec![1.0, 2.0, 3.0, 2.0, -5.0]);
        assert_eq!(gaussian_hermite_moment(4, 0), 3.0);
        assert_eq!(gaussian_hermite_moment(4, 2), 12.0);
        assert_eq!(gaussian_hermite_moment(3, 2), 0.0);
    }

    #[test]
    fn gaussian_tomogram_has_no_corrections() {
        let t = build_tomogram(0.0, &CumulantVector::new(vec![0.0, 0.3, 0.0, 0.0]), 4).unwrap();
        assert!(t.is_gaussian());
        let z: f64 = 0.4;
        let expected = (-z * z / 0.6).exp() / (2.0 * PI * 0.3f64).sqrt();
        assert_relative_eq!(t.density(z), expected, max_relative = 1e-14);
        assert_eq!(t.negative_mass(), 0.0);
    }

    #[test]
    fn moments_are_matched() {
        let fam = homotopy_family(4);
        let t = fam.at(0.0).unwrap();
        let q = t.quadrature_moments(4).unwrap();
        let target = t.target_moments();
        assert!((q[0] - 1.0).abs() < 1e-10);
        assert!((q[3] - t.cumulants[2]).abs() < 1e-10 * t.cumulants[2].abs().max(1e-12));
        for n in 0..=4 {
            assert!(
                (q[n] - target[n]).abs() <= 1e-8 * target[n].abs().max(t.sigma().powi(n as i32)),
                "n = {n}: {} vs {}",
                q[n],
                target[n]
            );
        }
        // matching works with a non-zero mean too
        let shifted = build_tomogram(0.0, &CumulantVector::new(vec![0.2, 0.5, 0.1, 0.05, 0.02]), 5).unwrap();
        let q = shifted.quadrature_moments(5).unwrap();
        for (a, b) in q.iter().zip(shifted.target_moments()) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn characteristic_function_matches_direct_transform() {
        let t = build_tomogram(0.0, &CumulantVector::new(vec![0.0, 0.5, 0.2, 0.1]), 4).unwrap();
        let rule = gauss_hermite(80).unwrap();
        let scale = t.sigma() * std::f64::consts::SQRT_2;
        for r in [0.0, 0.7, 2.5] {
            // ∫ T(z) e^{irz} dz with the Gaussian absorbed into the rule
            let direct: Complex64 = rule
                .iter()
                .map(|(u, w)| {
                    let z = scale * u;
                    Complex64::cis(r * z) * (w * t.density(z) / (-u * u).exp() * scale)
                })
                .sum();
            let chi = t.characteristic(r);
            assert!((direct - chi).norm() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn homogeneity_and_reflection() {
        let fam = homotopy_family(4);
        let theta: f64 = 0.6;
        let t = fam.at(theta).unwrap();
        for z in [-0.2, 0.01, 0.15] {
            let a = fam
                .density_along(z, 2.0 * theta.cos(), 2.0 * theta.sin())
                .unwrap();
            assert_eq!(a, t.density(z / 2.0) / 2.0);
            let b = fam.density_along(z, -theta.cos(), -theta.sin()).unwrap();
            assert_relative_eq!(b, t.density(-z), max_relative = 1e-12);
        }
        assert!(fam.density_along(0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn homotopy_family_is_continuous_at_quarter_turn() {
        let fam = homotopy_family(4);
        let below = fam.cumulants_at(std::f64::consts::FRAC_PI_2).unwrap();
        let above = fam.cumulants_at(std::f64::consts::FRAC_PI_2 + 1e-9).unwrap();
        for n in 2..=4 {
            assert_relative_eq!(below.get(n), above.get(n), max_relative = 1e-7);
        }
        let end = fam.cumulants_at(PI - 1e-12).unwrap();
        let start = fam.cumulants_at(0.0).unwrap();
        assert_relative_eq!(end.get(3), -start.get(3), max_relative = 1e-9);
    }

    #[test]
    fn gaussian_limit_values() {
        let ens = OscillatorEnsemble::new(1.0, 100.0).unwrap();
        let alpha = ManifoldPoint::from_epsilon(1.0, &ens).unwrap();
        let spec = GridSpec::centered(0.02f64.sqrt(), 0.005f64.sqrt(), 6.0, 41, 41).unwrap();
        let grid = gaussian_limit(&alpha, 100.0, &spec).unwrap();
        assert_relative_eq!(grid.value(20, 20), 100.0 / (2.0 * PI), max_relative = 1e-12);
        assert!((grid.mass() - 1.0).abs() < 1e-6);
        let mx = grid.moments_x(2);
        let my = grid.moments_y(2);
        assert_relative_eq!(mx[2], 0.02, max_relative = 1e-6);
        assert_relative_eq!(my[2], 0.005, max_relative = 1e-6);
        assert!((grid.purity().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn purity_of_broader_states() {
        let h: f64 = 0.02;
        let vx: f64 = 0.01;
        let vy = h * h / vx;
        let spec = GridSpec::centered(vx.sqrt(), vy.sqrt(), 7.0, 61, 61).unwrap();
        let p1 = gaussian_grid(vx, vy, h, &spec).unwrap().purity().unwrap();
        assert!((p1 - 0.5).abs() < 1e-6);
        let spec2 = GridSpec::centered((2.0 * vx).sqrt(), (2.0 * vy).sqrt(), 7.0, 61, 61).unwrap();
        let p2 = gaussian_grid(2.0 * vx, 2.0 * vy, h, &spec2)
            .unwrap()
            .purity()
            .unwrap();
        assert_relative_eq!(p2, p1 / 2.0, max_relative = 1e-6);

        let small = GridSpec::centered(vx.sqrt(), vy.sqrt(), 4.0, 41, 41).unwrap();
        assert!(matches!(
            gaussian_grid(vx, vy, h, &small).unwrap().purity(),
            Err(Error::GridTooSmall(_))
        ));
    }

    #[test]
    fn small_gaussian_round_trip() {
        let (vx, vy) = (0.02, 0.005);
        let fam = TomogramFamily::gaussian(vx, vy).unwrap();
        let spec = GridSpec::centered(vx.sqrt(), vy.sqrt(), 6.0, 21, 21).unwrap();
        let rec = reconstruct(&fam, 0.02, &spec, &ReconstructOptions::default()).unwrap();
        let exact = gaussian_grid(vx, vy, 0.02, &spec).unwrap();
        assert!(rec.max_abs_diff(&exact).unwrap() < 1e-6);
        assert!(rec.imaginary_residue < 1e-10);
    }

    #[test]
    fn reconstruct_rejects_coarse_angles() {
        let fam = TomogramFamily::gaussian(1.0, 1.0).unwrap();
        let spec = GridSpec::centered(1.0, 1.0, 6.0, 5, 5).unwrap();
        let opts = ReconstructOptions {
            n_theta: 16,
            r_nodes: 32,
        };
        assert!(reconstruct(&fam, 0.02, &spec, &opts).is_err());
        assert!(reconstruct(&fam, 0.0, &spec, &ReconstructOptions::default()).is_err());
    }

    #[test]
    fn csv_and_header() {
        let spec = GridSpec::centered(1.0, 1.0, 6.0, 3, 2).unwrap();
        let grid = gaussian_grid(1.0, 1.0, 1.0, &spec).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().next(), Some("x,y,value"));
        let json = serde_json::to_string(&grid.header()).unwrap();
        assert!(json.contains("imaginary_residue"));
    }
}
