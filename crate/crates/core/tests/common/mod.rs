//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls into the library's algorithms.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reproducible uniform draws for parameter sweeps.
pub struct Draws(ChaCha8Rng);

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    /// `(a, β)` with `βa` uniform in `[lo, hi]` and `a` log-uniform in `[0.1, 10]`.
    pub fn reduced_pair(&mut self, lo: f64, hi: f64) -> (f64, f64) {
        let y = self.uniform(lo, hi);
        let a = 10f64.powf(self.uniform(-1.0, 1.0));
        (a, y / a)
    }
}

/// Stirling numbers of the second kind `S2(n, 0..=n)` by enumerating all
/// set partitions of `n` labelled items as restricted growth strings.
pub fn stirling2_enumerated(n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n + 1];
    if n == 0 {
        counts[0] = 1;
        return counts;
    }
    let mut word = vec![0usize; n];
    let mut maxima = vec![0usize; n];
    loop {
        counts[maxima[n - 1] + 1] += 1;
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return counts;
            }
            if word[i] <= maxima[i - 1] {
                word[i] += 1;
                break;
            }
            word[i] = 0;
            i -= 1;
        }
        for j in i..n {
            if j > i {
                word[j] = 0;
            }
            maxima[j] = maxima[j - 1].max(word[j]);
        }
    }
}

/// `S2(n, k)` from `iⁿ = Σ_k S2(n, k)·i(i-1)…(i-k+1)` at `i = 0..=n`.
pub fn stirling2_falling(n: usize) -> Vec<BigInt> {
    let mut s = vec![BigInt::zero(); n + 1];
    for i in 0..=n {
        let target = num_traits::pow(BigInt::from(i), n);
        let mut falling = BigInt::one();
        let mut acc = BigInt::zero();
        for (k, sk) in s.iter().enumerate().take(i) {
            acc += sk * &falling;
            falling *= BigInt::from(i - k);
        }
        // falling is now i!, the coefficient of S2(n, i)
        s[i] = (target - acc) / falling;
    }
    s
}

pub fn factorial_big(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `log Z = -N·log(1 - e^{-βa})`, written out directly.
pub fn log_z(a: f64, beta: f64, n: f64) -> f64 {
    -n * (1.0 - (-beta * a).exp()).ln()
}

/// Central `k`-th difference quotient with step `h`.
fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64, k: usize, h: f64) -> f64 {
    let mut binom = 1.0;
    let mut sum = 0.0;
    for j in 0..=k {
        let offset = (k as f64 / 2.0 - j as f64) * h;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * f(x + offset);
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    sum / h.powi(k as i32)
}

/// `k`-th derivative from central differences at `h, h/2, …, h/2^{levels-1}`
/// combined in a Richardson table (each column cancels the next even power).
pub fn richardson_derivative<F: Fn(f64) -> f64>(f: F, x: f64, k: usize, h: f64, levels: usize) -> f64 {
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for i in 0..levels {
        let mut row = vec![central_difference(&f, x, k, h / 2f64.powi(i as i32))];
        for j in 1..=i {
            let p = 4f64.powi(j as i32);
            let v = (p * row[j - 1] - table[i - 1][j - 1]) / (p - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    table[levels - 1][levels - 1]
}

/// `K_n = (-∂/∂β)ⁿ log Z` from four Richardson levels starting at `0.12·β`.
pub fn cumulant_by_differences(a: f64, beta: f64, n_particles: f64, order: usize) -> f64 {
    let d = richardson_derivative(|b| log_z(a, b, n_particles), beta, order, 0.12 * beta, 4);
    if order % 2 == 1 {
        -d
    } else {
        d
    }
}

/// Raw moments `E[Eᵏ]`, `k = 0..=kmax`, of the total energy by summing the
/// negative-binomial Gibbs weights `C(n+N-1, N-1)(1-q)^N qⁿ` directly.
pub fn series_moments(a: f64, beta: f64, n_particles: u32, kmax: usize) -> Vec<f64> {
    let q = (-beta * a).exp();
    let nn = n_particles as f64;
    let mut log_w = nn * (1.0 - q).ln();
    let mut moments = vec![0.0; kmax + 1];
    let mut n = 0u64;
    loop {
        let w = log_w.exp();
        let e = a * n as f64;
        let mut p = w;
        for m in moments.iter_mut() {
            *m += p;
            p *= e;
        }
        // stop once past the mode and the weights are negligible
        let mode = (nn - 1.0) * q / (1.0 - q);
        if n as f64 > mode && w * (e + 1.0).powi(kmax as i32) < 1e-18 {
            break;
        }
        log_w += ((n as f64 + nn) / (n as f64 + 1.0)).ln() + q.ln();
        n += 1;
    }
    moments
}

/// Closed-form centered 2D Gaussian density.
pub fn gaussian_2d(x: f64, y: f64, var_x: f64, var_y: f64) -> f64 {
    (-0.5 * (x * x / var_x + y * y / var_y)).exp() / (2.0 * std::f64::consts::PI * (var_x * var_y).sqrt())
}

/// Mean specific energy `a/(e^{βa} - 1)` written naively.
pub fn mean_specific_energy(a: f64, beta: f64) -> f64 {
    a / ((beta * a).exp() - 1.0)
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}
