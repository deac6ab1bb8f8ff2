//! Exact energy cumulants of the oscillator ensemble.
//!
//! The n-th cumulant of the total energy is
//!
//! ```text
//! K_n = N aⁿ Σ_{m=1}^{n} c(n, m) x^m,     x = 1/(e^{βa} - 1),
//! ```
//!
//! where the integers `c(n, m) = (m-1)!·S2(n, m)` obey
//! `c(n+1, m) = m·c(n, m) + (m-1)·c(n, m-1)`. The table is kept in exact
//! `i128` arithmetic up to `n = 20`; past that the largest entries no longer
//! fit and construction is refused.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::{bose_factor, reduced_beta, OscillatorEnsemble, ThermoState};

/// Largest order for which `c(n, m)` is tabulated.
pub const MAX_ORDER: usize = 20;

/// Largest power-sum exponent accepted by [`power_sum_check`].
pub const MAX_POWER_SUM_EXPONENT: usize = 10;
pub const MAX_POWER_SUM_COUNT: u64 = 1000;

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        Err(Error::OrderTooLarge {
            order: n,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

fn overflow(n: usize) -> Error {
    Error::OrderTooLarge {
        order: n,
        max: MAX_ORDER,
    }
}

/// Triangular table of `c(n, m)`, `1 ≤ m ≤ n ≤ n_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    rows: Vec<Vec<i128>>,
}

impl CoefficientTable {
    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// `c(n, m)`; zero outside `1 ≤ m ≤ n ≤ n_max`.
    pub fn get(&self, n: usize, m: usize) -> i128 {
        if n == 0 || m == 0 || m > n || n > self.rows.len() {
            return 0;
        }
        self.rows[n - 1][m - 1]
    }

    /// Row `n` as `[c(n,1), ..., c(n,n)]`.
    pub fn row(&self, n: usize) -> &[i128] {
        &self.rows[n - 1]
    }
}

/// Builds the table from the seeds `c(n,1) = 1` and the recurrence.
pub fn coefficient_table(n_max: usize) -> Result<CoefficientTable> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    check_order(n_max)?;
    let mut rows: Vec<Vec<i128>> = vec![vec![1]];
    for n in 1..n_max {
        let prev = &rows[n - 1];
        let at = |m: usize| if m >= 1 && m <= n { prev[m - 1] } else { 0 };
        let mut next = Vec::with_capacity(n + 1);
        next.push(1);
        for m in 2..=n + 1 {
            let mi = m as i128;
            let v = mi
                .checked_mul(at(m))
                .and_then(|u| (mi - 1).checked_mul(at(m - 1)).and_then(|w| u.checked_add(w)))
                .ok_or_else(|| overflow(n + 1))?;
            next.push(v);
        }
        rows.push(next);
    }
    Ok(CoefficientTable { rows })
}

fn binomial_i128(n: u64, k: u64) -> Option<i128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as i128)? / (i as i128 + 1);
    }
    Some(acc)
}

/// `c(n, m) = (1/m)·Σ_{k=0}^{m} (-1)^{m-k} C(m, k) kⁿ`.
pub fn c_explicit(n: usize, m: usize) -> Result<i128> {
    if n == 0 || m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "c(n, m) requires 1 <= m <= n, got n = {n}, m = {m}"
        )));
    }
    check_order(n)?;
    let mut sum: i128 = 0;
    for k in 0..=m {
        let term = binomial_i128(m as u64, k as u64)
            .and_then(|b| (k as i128).checked_pow(n as u32).and_then(|p| b.checked_mul(p)))
            .ok_or_else(|| overflow(n))?;
        sum = if (m - k).is_multiple_of(2) {
            sum.checked_add(term)
        } else {
            sum.checked_sub(term)
        }
        .ok_or_else(|| overflow(n))?;
    }
    Ok(sum / m as i128)
}

/// Stirling numbers of the second kind by the triangle recurrence.
pub fn stirling2(n: usize, k: usize) -> Result<i128> {
    check_order(n)?;
    let mut row = vec![0i128; n + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=i).rev() {
            row[j] = (j as i128)
                .checked_mul(row[j])
                .and_then(|v| v.checked_add(row[j - 1]))
                .ok_or_else(|| overflow(n))?;
        }
        row[0] = 0;
    }
    Ok(if k <= n { row[k] } else { 0 })
}

/// Bernoulli numbers `B_0..=B_m` from `x/(e^x - 1)`, so `B_1 = -1/2`.
pub fn bernoulli(m: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(m + 1);
    b.push(BigRational::one());
    for k in 1..=m {
        // Σ_{j=0}^{k} C(k+1, j) B_j = 0
        let mut acc = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += bj * BigRational::from_integer(binomial_big(k as u64 + 1, j as u64));
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(k + 1)));
    }
    b
}

fn binomial_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Three evaluations of the power sum `S_m(n) = 1^m + ... + n^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerSumCheck {
    pub direct: i128,
    pub bernoulli_form: i128,
    pub c_form: i128,
}

impl PowerSumCheck {
    pub fn agrees(&self) -> bool {
        self.direct == self.bernoulli_form && self.direct == self.c_form
    }
}

pub fn power_sum_check(m: usize, n: u64) -> Result<PowerSumCheck> {
    if m == 0 || m > MAX_POWER_SUM_EXPONENT {
        return Err(Error::OrderTooLarge {
            order: m,
            max: MAX_POWER_SUM_EXPONENT,
        });
    }
    if n == 0 || n > MAX_POWER_SUM_COUNT {
        return Err(Error::Domain(format!(
            "power sums are checked for 1 <= n <= {MAX_POWER_SUM_COUNT}, got {n}"
        )));
    }

    let direct: i128 = (1..=n as i128).map(|j| j.pow(m as u32)).sum();

    // Bernoulli-polynomial form with B_1 taken as +1/2, i.e. (-1)^k B_k.
    let b = bernoulli(m);
    let nb = BigInt::from(n);
    let mut acc = BigRational::zero();
    for (k, bk) in b.iter().enumerate() {
        let signed = if k % 2 == 1 { -bk.clone() } else { bk.clone() };
        let power = num_traits::pow(nb.clone(), m + 1 - k);
        acc += signed * BigRational::from_integer(binomial_big(m as u64 + 1, k as u64) * power);
    }
    acc /= BigRational::from_integer(BigInt::from(m + 1));
    if !acc.is_integer() {
        return Err(Error::Domain(
            "Bernoulli form did not reduce to an integer".into(),
        ));
    }
    let bernoulli_form = acc.to_integer().to_i128().ok_or_else(|| overflow(m))?;

    // S_m(n) = Σ_{k=1}^{m} C(n+1, k+1)·k·c(m, k)
    let table = coefficient_table(m)?;
    let mut c_form: i128 = 0;
    for k in 1..=m {
        let term = binomial_i128(n + 1, k as u64 + 1)
            .and_then(|bin| bin.checked_mul(k as i128 * table.get(m, k)))
            .ok_or_else(|| overflow(m))?;
        c_form += term;
    }

    Ok(PowerSumCheck {
        direct,
        bernoulli_form,
        c_form,
    })
}

/// Cumulants `K_1..K_n` (or `κ_1..κ_n`), stored from order 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantVector {
    values: Vec<f64>,
}

impl CumulantVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// The cumulant of order `n ≥ 1`.
    pub fn get(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Raw moments `m_0..=m_n`.
    pub fn raw_moments(&self) -> Vec<f64> {
        cumulants_to_moments(&self.values)
    }

    /// Central moments `μ_0..=μ_n` (the first cumulant is dropped).
    pub fn central_moments(&self) -> Vec<f64> {
        let mut centered = self.values.clone();
        if let Some(first) = centered.first_mut() {
            *first = 0.0;
        }
        cumulants_to_moments(&centered)
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `m_n = Σ_{k=0}^{n-1} C(n-1, k)·κ_{k+1}·m_{n-1-k}`, `m_0 = 1`.
/// Input slice starts at `κ_1`; output starts at `m_0`.
pub fn cumulants_to_moments(kappa: &[f64]) -> Vec<f64> {
    let mut m = Vec::with_capacity(kappa.len() + 1);
    m.push(1.0);
    for n in 1..=kappa.len() {
        let v = (0..n)
            .map(|k| binomial_f64(n - 1, k) * kappa[k] * m[n - 1 - k])
            .sum();
        m.push(v);
    }
    m
}

/// Inverse of [`cumulants_to_moments`]; `moments[0]` must be 1.
pub fn moments_to_cumulants(moments: &[f64]) -> Vec<f64> {
    let order = moments.len().saturating_sub(1);
    let mut kappa: Vec<f64> = Vec::with_capacity(order);
    for n in 1..=order {
        let lower: f64 = (0..n - 1)
            .map(|k| binomial_f64(n - 1, k) * kappa[k] * moments[n - 1 - k])
            .sum();
        kappa.push(moments[n] - lower);
    }
    kappa
}

/// Energy cumulants `K_1..K_{n_max}`.
pub fn energy_cumulants(
    state: &ThermoState,
    ens: &OscillatorEnsemble,
    n_max: usize,
) -> Result<CumulantVector> {
    let table = coefficient_table(n_max)?;
    let y = reduced_beta(state, ens)?;
    let x = bose_factor(y);
    let values = (1..=n_max)
        .map(|n| {
            // Horner in x over c(n, n), ..., c(n, 1), times x.
            let poly = table.row(n).iter().rev().fold(0.0, |acc, &c| acc * x + c as f64) * x;
            ens.n() * ens.a().powi(n as i32) * poly
        })
        .collect();
    Ok(CumulantVector::new(values))
}

/// Cumulants of `δε = (E - ⟨E⟩)/N`: `κ_1 = 0`, `κ_n = K_n/Nⁿ`.
pub fn fluctuation_cumulants(
    state: &ThermoState,
    ens: &OscillatorEnsemble,
    n_max: usize,
) -> Result<CumulantVector> {
    let k = energy_cumulants(state, ens, n_max)?;
    let n = ens.n();
    let values = k
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &kn)| if i == 0 { 0.0 } else { kn / n.powi(i as i32 + 1) })
        .collect();
    Ok(CumulantVector::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn table_seeds_and_values() {
        let t = coefficient_table(6).unwrap();
        assert_eq!(t.get(3, 2), 3);
        assert_eq!(t.get(4, 4), 6);
        assert_eq!(t.get(4, 2), 7);
        let mut fact = 1i128;
        for n in 1..=6 {
            assert_eq!(t.get(n, 1), 1);
            assert_eq!(t.get(n, n), fact);
            fact *= n as i128;
        }
    }

    #[test]
    fn table_limits() {
        assert!(coefficient_table(20).is_ok());
        assert!(matches!(
            coefficient_table(21),
            Err(Error::OrderTooLarge { order: 21, .. })
        ));
        assert!(c_explicit(21, 3).is_err());
        assert!(c_explicit(20, 20).is_ok());
    }

    #[test]
    fn explicit_matches_recurrence_and_stirling() {
        let t = coefficient_table(20).unwrap();
        let mut fact = 1i128;
        for m in 1..=20usize {
            for n in m..=20 {
                assert_eq!(c_explicit(n, m).unwrap(), t.get(n, m), "c({n},{m})");
                assert_eq!(fact * stirling2(n, m).unwrap(), t.get(n, m));
            }
            fact *= m as i128;
        }
        assert_eq!(c_explicit(1, 1).unwrap(), 1);
        assert_eq!(c_explicit(5, 5).unwrap(), 24);
    }

    #[test]
    fn bernoulli_numbers() {
        let b = bernoulli(4);
        let r = |p: i64, q: i64| BigRational::new(BigInt::from(p), BigInt::from(q));
        assert_eq!(b[1], r(-1, 2));
        assert_eq!(b[2], r(1, 6));
        assert_eq!(b[3], r(0, 1));
        assert_eq!(b[4], r(-1, 30));
    }

    #[test]
    fn power_sums() {
        assert_eq!(power_sum_check(2, 3).unwrap().direct, 14);
        assert!(power_sum_check(2, 3).unwrap().agrees());
        assert_eq!(power_sum_check(3, 5).unwrap().c_form, 225);
        for n in 1..=100u64 {
            let p = power_sum_check(1, n).unwrap();
            assert_eq!(p.direct, (n * (n + 1) / 2) as i128);
            assert!(p.agrees());
        }
        let big = power_sum_check(10, 1000).unwrap();
        assert!(big.agrees());
        assert!(power_sum_check(11, 3).is_err());
        assert!(power_sum_check(3, 1001).is_err());
    }

    #[test]
    fn moment_conversion_special_cases() {
        let v = 0.3;
        let m = cumulants_to_moments(&[0.0, v, 0.0, 0.0]);
        assert_relative_eq!(m[2], v);
        assert_eq!(m[3], 0.0);
        assert_relative_eq!(m[4], 3.0 * v * v, max_relative = 1e-15);
        let mu = 1.7;
        let m = cumulants_to_moments(&[mu, 0.0, 0.0]);
        for (n, mn) in m.iter().enumerate() {
            assert_relative_eq!(*mn, mu.powi(n as i32), max_relative = 1e-15);
        }
    }

    #[test]
    fn energy_cumulant_values() {
        let s = ThermoState::thermostat(1.0);
        let ens = OscillatorEnsemble::new(1.0, 1.0).unwrap();
        let k = energy_cumulants(&s, &ens, 6).unwrap();
        assert_relative_eq!(k.get(1), 0.581_976_706_869_326_4, max_relative = 1e-14);
        assert_relative_eq!(k.get(2), 0.920_673_594_207_792_3, max_relative = 1e-14);
        assert_relative_eq!(k.get(3), 1.992_294_767_124_987_4, max_relative = 1e-14);
        let k7 = energy_cumulants(&s, &ens.with_particles(7.0).unwrap(), 6).unwrap();
        for n in 1..=6 {
            assert_relative_eq!(k7.get(n), 7.0 * k.get(n), max_relative = 1e-14);
        }
        assert!(energy_cumulants(&s, &ens, 21).is_err());
    }

    #[test]
    fn fluctuation_cumulant_values() {
        let s = ThermoState::thermostat(1.0);
        let ens = OscillatorEnsemble::new(1.0, 10.0).unwrap();
        let k = fluctuation_cumulants(&s, &ens, 4).unwrap();
        assert_eq!(k.get(1), 0.0);
        assert_relative_eq!(k.get(2), 9.206_735_942_077_923e-2, max_relative = 1e-14);
        let k100 = fluctuation_cumulants(&s, &ens.with_particles(100.0).unwrap(), 4).unwrap();
        assert_relative_eq!(k.get(3) * 100.0, k100.get(3) * 1e4, max_relative = 1e-14);
    }
}
