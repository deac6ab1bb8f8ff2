//! `verify`: seeded spot checks of the library invariants.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thermoflux_core::cumulants::{
    c_explicit, coefficient_table, cumulants_to_moments, energy_cumulants, moments_to_cumulants,
    power_sum_check, stirling2,
};
use thermoflux_core::duality::{solve_mean_anchored, solve_symmetric, verify_duality};
use thermoflux_core::quantum::{
    density_moments, gaussian_evolution_params, h_fourier, propagate, wigner_moments, CoherentState,
    GaussianProfile, WaveProfile,
};
use thermoflux_core::sampler::{empirical_cumulants, sample_energies};
use thermoflux_core::thermo::{energy_stats, legendre_phi, quasi_fluctuations};
use thermoflux_core::tomography::{
    gaussian_limit, reconstruct, GridSpec, ReconstructOptions, TomogramFamily,
};
use thermoflux_core::{HomotopyPath, ManifoldPoint, OscillatorEnsemble, Result, SamplerConfig, ThermoState};

use crate::commands::{num, PlotKind, Report, Table};
use crate::config::{RunConfig, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Pass,
    Fail,
    /// Reported for information; does not affect the exit code.
    KnownUnattainable,
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    suite: &'static str,
    name: &'static str,
    value: f64,
    tolerance: f64,
    status: Status,
}

struct Checks(Vec<Check>);

impl Checks {
    /// Passes when `value < tolerance`.
    fn below(&mut self, suite: &'static str, name: &'static str, value: f64, tolerance: f64) {
        let status = if value < tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        self.0.push(Check {
            suite,
            name,
            value,
            tolerance,
            status,
        });
    }

    fn info(&mut self, suite: &'static str, name: &'static str, value: f64, tolerance: f64) {
        let status = if value < tolerance {
            Status::Pass
        } else {
            Status::KnownUnattainable
        };
        self.0.push(Check {
            suite,
            name,
            value,
            tolerance,
            status,
        });
    }
}

struct Draws(ChaCha8Rng);

impl Draws {
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    /// `(a, β)` with `βa` uniform in `[lo, hi]` and `a` log-uniform in `[0.1, 10]`.
    fn pair(&mut self, lo: f64, hi: f64) -> (f64, f64) {
        let y = self.uniform(lo, hi);
        let a = 10f64.powf(self.uniform(-1.0, 1.0));
        (a, y / a)
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

fn identities(c: &mut Checks, d: &mut Draws) -> Result<()> {
    let (mut gibbs, mut legendre) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (a, beta) = d.pair(0.1, 5.0);
        let ens = OscillatorEnsemble::new(a, 1.0)?;
        let state = ThermoState::thermostat(beta);
        let eps = energy_stats(&state, &ens)?.mean;
        let point = ManifoldPoint::from_beta(&state, &ens)?;
        let quasi = quasi_fluctuations(&point, 1.0)?.variance_eps;
        gibbs = gibbs.max(rel((beta * a).exp() * eps * eps, quasi));
        legendre = legendre.max((point.lambda * legendre_phi(&state, &ens)?.phi_second - 1.0).abs());
    }
    c.below("identities", "gibbs_vs_quasi_variance", gibbs, 1e-12);
    c.below("identities", "legendre_curvature", legendre, 1e-10);
    Ok(())
}

fn coefficients(c: &mut Checks) -> Result<()> {
    let table = coefficient_table(15)?;
    let mut bad = 0;
    for n in 1..=15 {
        for m in 1..=n {
            let via_stirling = (1..m as i128).product::<i128>() * stirling2(n, m)?;
            if table.get(n, m) != c_explicit(n, m)? || table.get(n, m) != via_stirling {
                bad += 1;
            }
        }
    }
    c.below("coefficients", "c_table_mismatches", bad as f64, 0.5);
    let mut bad = 0;
    for m in 1..=8 {
        for n in 1..=200 {
            if !power_sum_check(m, n)?.agrees() {
                bad += 1;
            }
        }
    }
    c.below("coefficients", "power_sum_mismatches", bad as f64, 0.5);
    Ok(())
}

fn cumulant_checks(c: &mut Checks, d: &mut Draws) -> Result<()> {
    let (mut low, mut round_trip, mut extensive) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let (a, beta) = d.pair(0.1, 5.0);
        let n = d.uniform(1.0, 500.0).round();
        let state = ThermoState::thermostat(beta);
        let ens = OscillatorEnsemble::new(a, n)?;
        let k = energy_cumulants(&state, &ens, 6)?;
        let e = energy_stats(&state, &ens)?;
        low = low.max(rel(k.get(1), e.mean)).max(rel(k.get(2), e.variance));
        // centered, so the mean does not swamp the higher orders
        let mut centered = k.as_slice().to_vec();
        centered[0] = 0.0;
        let back = moments_to_cumulants(&cumulants_to_moments(&centered));
        for (i, v) in back.iter().enumerate().skip(1) {
            round_trip = round_trip.max(rel(*v, centered[i]));
        }
        let doubled = energy_cumulants(&state, &ens.with_particles(2.0 * n)?, 6)?;
        for i in 1..=6 {
            extensive = extensive.max(rel(doubled.get(i), 2.0 * k.get(i)));
        }
    }
    c.below("cumulants", "mean_and_variance", low, 1e-12);
    c.below("cumulants", "moment_round_trip", round_trip, 1e-10);
    c.below("cumulants", "linear_in_n", extensive, 1e-13);
    Ok(())
}

fn sampler(c: &mut Checks, cfg: &RunConfig) -> Result<()> {
    let run = sample_energies(&SamplerConfig::new(1.0, 1.0, 100, cfg.sweeps, cfg.seed))?;
    let est = empirical_cumulants(&run, 4)?;
    let exact = energy_cumulants(&run.state, &run.ensemble, 4)?;
    let worst = est
        .z_scores(exact.as_slice())
        .iter()
        .fold(0.0f64, |m, z| m.max(z.abs()));
    c.below("sampler", "max_abs_z_score", worst, 5.0);
    Ok(())
}

fn duality(c: &mut Checks, d: &mut Draws) -> Result<()> {
    let (mut residual, mut product, mut signs) = (0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let (a, beta) = d.pair(0.05, 10.0);
        let sym = solve_symmetric(a, beta, 100.0)?;
        let anc = solve_mean_anchored(a, beta, 100.0)?;
        for pair in [&sym, &anc] {
            let r = verify_duality(pair);
            residual = residual
                .max(r.equation_residuals[0].abs())
                .max(r.equation_residuals[1].abs());
            product = product.max(r.variance_product_residual.abs());
        }
        if !(sym.dual.reduced() < 0.0 && sym.unphysical_spectrum) {
            signs += 1;
        }
        if !(anc.dual.a > 0.0 && anc.dual.beta > 0.0) {
            signs += 1;
        }
    }
    c.below("duality", "equation_residual", residual, 1e-10);
    c.below("duality", "variance_product", product, 1e-9);
    c.below("duality", "sign_law_violations", signs as f64, 0.5);
    Ok(())
}

fn homotopy(c: &mut Checks, d: &mut Draws) -> Result<()> {
    let (mut ends, mut k2) = (0.0f64, 0.0f64);
    let mut cancel_bad = 0;
    for _ in 0..10 {
        let (a, beta) = d.pair(0.2, 5.0);
        let pair = solve_mean_anchored(a, beta, 100.0)?;
        let path = HomotopyPath::from_dual(&pair)?;
        let (p0, p1) = (path.params(0.0)?, path.params(FRAC_PI_2)?);
        ends = ends
            .max(rel(p0.a, a))
            .max(rel(p0.beta, beta))
            .max(rel(p1.a, pair.dual.a))
            .max(rel(p1.beta, pair.dual.beta));
        let scaled = path.rescaled(8.0)?;
        for j in 0..50 {
            let t = FRAC_PI_2 * j as f64 / 49.0;
            let (s, co) = t.sin_cos();
            let want =
                pair.source.fluctuation_variance() * co * co + pair.dual.fluctuation_variance() * s * s;
            k2 = k2.max(rel(path.cumulants(t, 2)?.get(2), want));
            let (p, q) = (path.params(t)?, scaled.params(t)?);
            if p.a != q.a || p.beta != q.beta {
                cancel_bad += 1;
            }
        }
    }
    c.below("homotopy", "endpoint_recovery", ends, 1e-10);
    c.below("homotopy", "kappa2_interpolation", k2, 1e-12);
    c.below("homotopy", "n_cancellation_mismatches", cancel_bad as f64, 0.5);
    Ok(())
}

fn max_moment_error(grid: &thermoflux_core::QuasiDensityGrid, tx: &[f64], ty: &[f64]) -> f64 {
    let (mx, my) = (grid.moments_x(4), grid.moments_y(4));
    let mut worst = 0.0f64;
    for n in 0..=4 {
        let (sx, sy) = (grid.sigma_x.powi(n as i32), grid.sigma_y.powi(n as i32));
        worst = worst
            .max((mx[n] - tx[n]).abs() / tx[n].abs().max(sx))
            .max((my[n] - ty[n]).abs() / ty[n].abs().max(sy));
    }
    worst
}

fn tomography(c: &mut Checks) -> Result<()> {
    let n = 100.0;
    let alpha = ManifoldPoint::from_epsilon(1.0, &OscillatorEnsemble::new(1.0, n)?)?;
    let (vx, vy) = (1.0 / (n * alpha.lambda), alpha.lambda / n);
    let spec = GridSpec::centered(vx.sqrt(), vy.sqrt(), 6.0, 41, 41)?;
    let opts = ReconstructOptions::default();
    let rec = reconstruct(&TomogramFamily::gaussian(vx, vy)?, 2.0 / n, &spec, &opts)?;
    c.below(
        "tomography",
        "gaussian_linf",
        rec.max_abs_diff(&gaussian_limit(&alpha, n, &spec)?)?,
        1e-6,
    );
    c.below("tomography", "gaussian_mass", (rec.mass() - 1.0).abs(), 1e-4);
    c.below("tomography", "gaussian_purity", (rec.purity()? - 1.0).abs(), 1e-3);

    let path = HomotopyPath::from_dual(&solve_mean_anchored(1.0, 1.0, n)?)?;
    let (k0, k1) = (path.cumulants(0.0, 4)?, path.cumulants(FRAC_PI_2, 4)?);
    let spec = GridSpec::centered(k0.get(2).sqrt(), k1.get(2).sqrt(), 6.0, 41, 41)?;
    let (tx, ty) = (k0.raw_moments(), k1.raw_moments());
    let ind = reconstruct(&TomogramFamily::independent(&k0, &k1, 4)?, 2.0 / n, &spec, &opts)?;
    c.below(
        "tomography",
        "independent_family_marginal_moments",
        max_moment_error(&ind, &tx, &ty),
        1e-5,
    );
    c.below("tomography", "imaginary_residue", ind.imaginary_residue, 1e-10);
    let hom = reconstruct(&TomogramFamily::homotopy(path, 4)?, 2.0 / n, &spec, &opts)?;
    c.info(
        "tomography",
        "homotopy_family_marginal_moments",
        max_moment_error(&hom, &tx, &ty),
        1e-5,
    );
    Ok(())
}

fn quantum(c: &mut Checks) -> Result<()> {
    let h = 0.02;
    let phi0 = GaussianProfile::thermodynamic(2.0, 0.03, -0.02, h)?;
    let quarter = propagate(phi0, FRAC_PI_2, h)?;
    let mut linf = 0.0f64;
    for k in -20..=20 {
        let y = k as f64 * 0.01;
        linf = linf.max((quarter.eval(Complex64::new(y, 0.0)) - h_fourier(&phi0, y, h, 128)?).norm());
    }
    c.below("quantum", "quarter_period_vs_fourier", linf, 1e-8);
    let centered = GaussianProfile::thermodynamic(2.0, 0.0, 0.0, h)?;
    let mut width = 0.0f64;
    for t in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3] {
        let m = density_moments(&propagate(centered, t, h)?, 64)?;
        width = width.max(rel(
            m.variance,
            gaussian_evolution_params(0.0, 0.0, 2.0, t)?.variance(h),
        ));
    }
    c.below("quantum", "evolved_width", width, 1e-6);
    let st = CoherentState::new(0.4, -0.3, 1.5, 0.01)?;
    let w = wigner_moments(&st, 32)?;
    c.below("quantum", "wigner_mass", (w.mass - 1.0).abs(), 1e-10);
    c.below(
        "quantum",
        "uncertainty_product",
        rel(w.uncertainty_product(), st.hbar * st.hbar / 4.0),
        1e-10,
    );
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let mut draws = Draws(ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut checks = Checks(Vec::new());
    let want = |s: Suite| cfg.suite == Suite::All || cfg.suite == s;
    if want(Suite::Identities) {
        identities(&mut checks, &mut draws)?;
    }
    if want(Suite::Coefficients) {
        coefficients(&mut checks)?;
    }
    if want(Suite::Cumulants) {
        cumulant_checks(&mut checks, &mut draws)?;
    }
    if want(Suite::Sampler) {
        sampler(&mut checks, cfg)?;
    }
    if want(Suite::Duality) {
        duality(&mut checks, &mut draws)?;
    }
    if want(Suite::Homotopy) {
        homotopy(&mut checks, &mut draws)?;
    }
    if want(Suite::Tomography) {
        tomography(&mut checks)?;
    }
    if want(Suite::Quantum) {
        quantum(&mut checks)?;
    }

    let mut table = Table {
        header: ["suite", "check", "value", "tolerance", "status"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for ch in &checks.0 {
        let status = serde_json::to_value(ch.status).expect("enum serializes");
        table.rows.push(vec![
            ch.suite.into(),
            ch.name.into(),
            num(ch.value),
            num(ch.tolerance),
            status.as_str().unwrap_or_default().into(),
        ]);
    }
    let failures: Vec<String> = checks
        .0
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(|c| format!("{}.{}", c.suite, c.name))
        .collect();
    let passed = checks.0.iter().filter(|c| c.status == Status::Pass).count();
    Ok(Report {
        results: json!({ "checks": checks.0 }),
        diagnostics: json!({ "passed": passed, "total": checks.0.len(), "failed": failures }),
        table,
        plot: PlotKind::None,
        failures,
    })
}
