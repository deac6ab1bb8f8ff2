//! Monte-Carlo sampling of the canonical Gibbs distribution.
//!
//! Each oscillator occupation is geometric, `P(n) = (1 - q)qⁿ` with
//! `q = e^{-βa}`, drawn by inversion: `n = floor(ln U / ln q)`. Uniforms come
//! from ChaCha8 and are formed from the top 53 bits of each `u64` as
//! `(bits + 1/2)·2⁻⁵³`, so `U ∈ (0, 1)` strictly.
//!
//! Sweep `s` consumes exactly `N` words of 64 bits starting at stream word
//! `2·N·s`, so any chunk can seek directly to its first sweep. The sample
//! sequence is therefore a function of the seed alone, independent of chunk
//! size and thread count.

use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::{OscillatorEnsemble, ThermoState};

pub const MIN_SWEEPS_FOR_ESTIMATES: usize = 100;
pub const DEFAULT_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub a: f64,
    pub beta: f64,
    pub n: u64,
    pub sweeps: usize,
    pub seed: u64,
    /// Sweeps per parallel work item. Has no effect on the result.
    pub chunk: usize,
}

impl SamplerConfig {
    pub fn new(a: f64, beta: f64, n: u64, sweeps: usize, seed: u64) -> Self {
        Self {
            a,
            beta,
            n,
            sweeps,
            seed,
            chunk: DEFAULT_CHUNK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub seed: u64,
    pub sweeps: usize,
    pub ensemble: OscillatorEnsemble,
    pub state: ThermoState,
    /// Total quanta `Σ n_i` per sweep; the energy is `a` times this.
    quanta: Vec<u64>,
}

impl SampleRun {
    /// Wraps externally produced quanta counts.
    pub fn from_quanta(
        seed: u64,
        ensemble: OscillatorEnsemble,
        state: ThermoState,
        quanta: Vec<u64>,
    ) -> Self {
        Self {
            seed,
            sweeps: quanta.len(),
            ensemble,
            state,
            quanta,
        }
    }

    pub fn quanta(&self) -> &[u64] {
        &self.quanta
    }

    pub fn energies(&self) -> Vec<f64> {
        let a = self.ensemble.a();
        self.quanta.iter().map(|&k| a * k as f64).collect()
    }

    /// One energy per line under an `energy` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "energy")?;
        for e in self.energies() {
            writeln!(out, "{e}")?;
        }
        Ok(())
    }
}

#[inline]
fn uniform_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn geometric(rng: &mut ChaCha8Rng, reduced: f64) -> u64 {
    let u = uniform_open(rng.next_u64());
    if reduced.is_infinite() {
        return 0;
    }
    (-u.ln() / reduced).floor() as u64
}

pub fn sample_energies(cfg: &SamplerConfig) -> Result<SampleRun> {
    let ensemble = OscillatorEnsemble::new(cfg.a, cfg.n as f64)?;
    let state = ThermoState::thermostat(cfg.beta);
    let reduced = cfg.a * cfg.beta;
    if !(reduced > 0.0) {
        return Err(Error::DivergentPartition { reduced });
    }
    if cfg.n == 0 || cfg.sweeps == 0 {
        return Err(Error::InvalidParameter("N and sweeps must be at least 1".into()));
    }
    let chunk = cfg.chunk.max(1);
    let words_per_sweep = 2 * cfg.n as u128;

    let mut quanta = vec![0u64; cfg.sweeps];
    quanta.par_chunks_mut(chunk).enumerate().for_each(|(c, out)| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_word_pos(words_per_sweep * (c * chunk) as u128);
        for slot in out.iter_mut() {
            *slot = (0..cfg.n).map(|_| geometric(&mut rng, reduced)).sum();
        }
    });

    Ok(SampleRun {
        seed: cfg.seed,
        sweeps: cfg.sweeps,
        ensemble,
        state,
        quanta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCumulants {
    /// k-statistics `k_1..k_order`.
    pub estimates: Vec<f64>,
    /// Jackknife standard errors, same indexing.
    pub standard_errors: Vec<f64>,
    pub sweeps: usize,
}

impl EmpiricalCumulants {
    /// `(k_n - reference_n)/SE_n` for each order present in both.
    pub fn z_scores(&self, reference: &[f64]) -> Vec<f64> {
        self.estimates
            .iter()
            .zip(&self.standard_errors)
            .zip(reference)
            .map(|((k, se), r)| (k - r) / se)
            .collect()
    }
}

/// Unbiased k-statistics from the sample size and the power sums
/// `p[k] = Σ dᵏ` (k = 1..4) of deviations `d` from an arbitrary shift `c`.
fn k_statistics(n: f64, shift: f64, p: &[f64; 5], order: usize) -> Vec<f64> {
    let mean_d = p[1] / n;
    // central sums about the sample mean
    let s2 = p[2] - n * mean_d * mean_d;
    let s3 = p[3] - 3.0 * mean_d * p[2] + 2.0 * n * mean_d.powi(3);
    let s4 = p[4] - 4.0 * mean_d * p[3] + 6.0 * mean_d * mean_d * p[2] - 3.0 * n * mean_d.powi(4);
    let (m2, m3, m4) = (s2 / n, s3 / n, s4 / n);
    let k = [
        shift + mean_d,
        n / (n - 1.0) * m2,
        n * n / ((n - 1.0) * (n - 2.0)) * m3,
        n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0)),
    ];
    k[..order].to_vec()
}

/// k-statistics of the total energy with leave-one-out jackknife errors.
///
/// All sums are accumulated serially in sample order.
pub fn empirical_cumulants(run: &SampleRun, order: usize) -> Result<EmpiricalCumulants> {
    if !(1..=4).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "cumulant order {order} outside 1..=4"
        )));
    }
    let m = run.sweeps.min(run.quanta.len());
    if m < MIN_SWEEPS_FOR_ESTIMATES {
        return Err(Error::InsufficientSamples {
            required: MIN_SWEEPS_FOR_ESTIMATES,
            got: m,
        });
    }
    let energies = run.energies();
    let n = m as f64;
    let shift = energies.iter().sum::<f64>() / n;

    let mut p = [n, 0.0, 0.0, 0.0, 0.0];
    for e in &energies {
        let d = e - shift;
        let d2 = d * d;
        p[1] += d;
        p[2] += d2;
        p[3] += d2 * d;
        p[4] += d2 * d2;
    }
    let estimates = k_statistics(n, shift, &p, order);

    let loo: Vec<Vec<f64>> = energies
        .iter()
        .map(|e| {
            let d = e - shift;
            let d2 = d * d;
            let q = [n - 1.0, p[1] - d, p[2] - d2, p[3] - d2 * d, p[4] - d2 * d2];
            k_statistics(n - 1.0, shift, &q, order)
        })
        .collect();
    // two passes: leave-one-out values are nearly equal, so a running
    // sum of squares would cancel catastrophically
    let standard_errors = (0..order)
        .map(|j| {
            let mean = loo.iter().map(|v| v[j]).sum::<f64>() / n;
            let ss: f64 = loo.iter().map(|v| (v[j] - mean).powi(2)).sum();
            ((n - 1.0) / n * ss).sqrt()
        })
        .collect();

    Ok(EmpiricalCumulants {
        estimates,
        standard_errors,
        sweeps: m,
    })
}
