use std::f64::consts::FRAC_PI_2;

use serde_json::{json, Value};
use thermoflux_core::cumulants::{energy_cumulants, fluctuation_cumulants};
use thermoflux_core::duality::{solve, verify_duality};
use thermoflux_core::sampler::{empirical_cumulants, sample_energies};
use thermoflux_core::thermo::{energy_stats, entropy_stat, log_partition, ManifoldPoint, BOLTZMANN_CGS};
use thermoflux_core::tomography::{reconstruct, GridSpec, ReconstructOptions, TomogramFamily};
use thermoflux_core::{DualPair, HomotopyPath, OscillatorEnsemble, Result, SamplerConfig, ThermoState};

use crate::config::{Command, Family, RunConfig, Units};
use crate::verify;

/// Rows for the CSV artifact.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

/// How a gnuplot companion should draw the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// First column against each of the listed columns (1-based).
    Lines {
        last_column: usize,
    },
    Surface,
    None,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub results: Value,
    pub diagnostics: Value,
    pub table: Table,
    pub plot: PlotKind,
    /// Checks that did not pass (verify only).
    pub failures: Vec<String>,
}

impl Report {
    fn new(results: Value, diagnostics: Value, table: Table, plot: PlotKind) -> Self {
        Self {
            results,
            diagnostics,
            table,
            plot,
            failures: Vec::new(),
        }
    }
}

/// Shortest round-trip text, in exponent form away from unit scale.
pub fn num(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-4..1e15).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    match cfg.command {
        Command::Stats => stats(cfg),
        Command::Cumulants => cumulants(cfg),
        Command::Dual => dual(cfg),
        Command::Homotopy => homotopy(cfg),
        Command::Tomogram => tomogram(cfg),
        Command::Reconstruct => reconstruction(cfg),
        Command::Sample => sample(cfg),
        Command::Verify => verify::run(cfg),
    }
}

fn system(cfg: &RunConfig) -> Result<(ThermoState, OscillatorEnsemble)> {
    Ok((
        ThermoState::thermostat(cfg.beta),
        OscillatorEnsemble::new(cfg.a, cfg.n)?,
    ))
}

fn stats(cfg: &RunConfig) -> Result<Report> {
    let (state, ens) = system(cfg)?;
    let e = energy_stats(&state, &ens)?;
    let point = ManifoldPoint::from_beta(&state, &ens)?;
    let (kb, kb_unit) = match cfg.units {
        Units::Internal => (1.0, "k_B"),
        Units::Cgs => (BOLTZMANN_CGS, "erg/K"),
    };
    let entropy = entropy_stat(&ens, e.mean)?;
    let heat_capacity = cfg.beta * cfg.beta * e.variance;
    let rows: [(&str, f64, &str); 8] = [
        ("mean", e.mean, "energy"),
        ("variance", e.variance, "energy^2"),
        ("specific_energy", point.epsilon, "energy"),
        ("fluctuation_variance", e.variance / (cfg.n * cfg.n), "energy^2"),
        ("log_partition", log_partition(&state, &ens)?, "1"),
        ("entropy", kb * entropy, kb_unit),
        ("heat_capacity", kb * heat_capacity, kb_unit),
        (
            "lambda",
            kb * point.lambda,
            if cfg.units == Units::Cgs {
                "erg/K/energy^2"
            } else {
                "k_B/energy^2"
            },
        ),
    ];
    let mut table = Table::new(&["quantity", "value", "unit"]);
    let mut results = serde_json::Map::new();
    let mut units = serde_json::Map::new();
    for (name, value, unit) in rows {
        table.push([name.to_string(), num(value), unit.to_string()]);
        results.insert(name.into(), json!(value));
        units.insert(name.into(), json!(unit));
    }
    results.insert("units".into(), Value::Object(units));
    Ok(Report::new(
        Value::Object(results),
        json!({ "reduced_beta": cfg.beta * cfg.a }),
        table,
        PlotKind::None,
    ))
}

fn cumulants(cfg: &RunConfig) -> Result<Report> {
    let (state, ens) = system(cfg)?;
    let big = energy_cumulants(&state, &ens, cfg.n0)?;
    let small = fluctuation_cumulants(&state, &ens, cfg.n0)?;
    let mut table = Table::new(&["n", "energy_cumulant", "fluctuation_cumulant"]);
    for n in 1..=cfg.n0 {
        table.push([n.to_string(), num(big.get(n)), num(small.get(n))]);
    }
    Ok(Report::new(
        json!({ "energy_cumulants": big.as_slice(), "fluctuation_cumulants": small.as_slice() }),
        json!({ "reduced_beta": cfg.beta * cfg.a, "max_order": cfg.n0 }),
        table,
        PlotKind::None,
    ))
}

fn solve_pair(cfg: &RunConfig) -> Result<DualPair> {
    solve(cfg.variant, cfg.a, cfg.beta, cfg.n)
}

fn dual(cfg: &RunConfig) -> Result<Report> {
    let pair = solve_pair(cfg)?;
    let report = verify_duality(&pair);
    let mut table = Table::new(&["quantity", "value"]);
    for (name, value) in [
        ("a", pair.source.a),
        ("beta", pair.source.beta),
        ("a_dual", pair.dual.a),
        ("beta_dual", pair.dual.beta),
        ("residual_1", pair.residuals[0]),
        ("residual_2", pair.residuals[1]),
        ("variance_product", report.variance_product),
        ("imposed_condition_residual", report.imposed_condition_residual),
    ] {
        table.push([name.to_string(), num(value)]);
    }
    Ok(Report::new(
        json!({
            "variant": pair.variant,
            "source": pair.source,
            "dual": pair.dual,
            "residuals": pair.residuals,
            "unphysical_spectrum": pair.unphysical_spectrum,
        }),
        serde_json::to_value(report).expect("plain data serializes"),
        table,
        PlotKind::None,
    ))
}

fn homotopy(cfg: &RunConfig) -> Result<Report> {
    let pair = solve_pair(cfg)?;
    let path = HomotopyPath::from_dual(&pair)?;
    let mut header = vec!["t", "a", "beta", "mean", "variance", "formal"];
    let kappa_names: Vec<String> = (1..=cfg.n0).map(|n| format!("kappa_{n}")).collect();
    header.extend(kappa_names.iter().map(String::as_str));
    let mut table = Table::new(&header);
    let mut skipped = Vec::new();
    let mut points = Vec::new();
    for i in 0..cfg.points {
        let t = FRAC_PI_2 * i as f64 / (cfg.points - 1) as f64;
        let (p, k) = match path.params(t).and_then(|p| Ok((p, path.cumulants(t, cfg.n0)?))) {
            Ok(v) => v,
            Err(e) => {
                skipped.push(json!({ "t": t, "reason": e.to_string() }));
                continue;
            }
        };
        let mut row = vec![
            num(t),
            num(p.a),
            num(p.beta),
            num(p.mean),
            num(p.variance),
            p.formal.to_string(),
        ];
        row.extend(k.as_slice().iter().map(|&v| num(v)));
        table.push(row);
        points.push(json!({ "point": p, "cumulants": k.as_slice() }));
    }
    Ok(Report::new(
        json!({ "path": path, "points": points }),
        json!({ "variant": cfg.variant, "skipped": skipped }),
        table,
        PlotKind::Lines { last_column: 3 },
    ))
}

/// The requested family, built from the homotopy through the chosen dual.
fn family(cfg: &RunConfig) -> Result<TomogramFamily> {
    let path = HomotopyPath::from_dual(&solve_pair(cfg)?)?;
    match cfg.family {
        Family::Homotopy => TomogramFamily::homotopy(path, cfg.n0),
        Family::Independent => {
            let k0 = path.cumulants(0.0, cfg.n0)?;
            let k1 = path.cumulants(FRAC_PI_2, cfg.n0)?;
            TomogramFamily::independent(&k0, &k1, cfg.n0)
        }
        Family::Gaussian => TomogramFamily::gaussian(path.variance_at(0.0), path.variance_at(FRAC_PI_2)),
    }
}

fn tomogram(cfg: &RunConfig) -> Result<Report> {
    let theta = cfg.theta.rem_euclid(std::f64::consts::PI);
    let tomo = family(cfg)?.at(theta)?;
    let half = cfg.extent * tomo.sigma();
    let mut table = Table::new(&["z", "density"]);
    for i in 0..cfg.points {
        let z = -half + 2.0 * half * i as f64 / (cfg.points - 1) as f64;
        table.push([num(z), num(tomo.density(z))]);
    }
    Ok(Report::new(
        json!({
            "angle": tomo.angle,
            "variance": tomo.variance,
            "degree": tomo.degree,
            "cumulants": tomo.cumulants,
            "coefficients": tomo.coefficients(),
        }),
        json!({ "family": cfg.family, "negative_mass": tomo.negative_mass() }),
        table,
        PlotKind::Lines { last_column: 2 },
    ))
}

fn reconstruction(cfg: &RunConfig) -> Result<Report> {
    let family = family(cfg)?;
    let sx = family.at(0.0)?.sigma();
    let sy = family.at(FRAC_PI_2)?.sigma();
    let spec = GridSpec::centered(sx, sy, cfg.extent, cfg.nx, cfg.ny)?;
    let opts = ReconstructOptions {
        n_theta: cfg.n_theta,
        r_nodes: cfg.r_nodes,
    };
    let grid = reconstruct(&family, 2.0 / cfg.n, &spec, &opts)?;
    let mut table = Table::new(&["x", "y", "value"]);
    for i in 0..spec.nx {
        for j in 0..spec.ny {
            table.push([num(spec.x(i)), num(spec.y(j)), num(grid.value(i, j))]);
        }
    }
    Ok(Report::new(
        json!({
            "header": grid.header(),
            "mass": grid.mass(),
            "moments_x": grid.moments_x(4),
            "moments_y": grid.moments_y(4),
        }),
        json!({ "family": cfg.family, "grid": grid.diagnostics() }),
        table,
        PlotKind::Surface,
    ))
}

fn sample(cfg: &RunConfig) -> Result<Report> {
    let run = sample_energies(&SamplerConfig::new(
        cfg.a,
        cfg.beta,
        cfg.n as u64,
        cfg.sweeps,
        cfg.seed,
    ))?;
    let est = empirical_cumulants(&run, cfg.n0)?;
    let exact = energy_cumulants(&run.state, &run.ensemble, cfg.n0)?;
    let mut table = Table::new(&["energy"]);
    for e in run.energies() {
        table.push([num(e)]);
    }
    Ok(Report::new(
        json!({
            "estimates": est.estimates,
            "standard_errors": est.standard_errors,
            "exact": exact.as_slice(),
        }),
        json!({ "z_scores": est.z_scores(exact.as_slice()), "sweeps": est.sweeps }),
        table,
        PlotKind::None,
    ))
}
