//! Analytical symbol and bit error probabilities.
//!
//! Two evaluators are provided:
//!
//! * [`ser_coherent_awgn`]: coherent detection with maximal ratio combining
//!   of `L` antennas in AWGN, which is orthogonal `M`-ary signalling with
//!   `E_s` replaced by `L·E_s`:
//!   `P_s = ∫ φ(y − √(2LE_s/N_0))·(1 − Φ(y)^{M−1}) dy`.
//! * [`ser_noncoherent_rayleigh`]: square-law combining of `L` independent
//!   Rayleigh branches, averaging the probability that every noise bin loses
//!   against a Gamma-distributed signal bin:
//!   `P_s = ∫ f_L(u)·(1 − (1 − Q(L, (1 + γ̄_c)u))^{M−1}) du`, with `f_L` the
//!   unit-scale Gamma(L) density and `Q(L, λ) = e^{−λ}Σ_{q<L} λ^q/q!`.
//!
//! Both integrate the error probability directly (rather than one minus the
//! success probability) and raise to the `M−1` power in log domain, so tiny
//! error rates keep full relative accuracy even for `M = 4096`.

mod quadrature;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use quadrature::{integrate, QuadratureResult, Tolerance};

/// Largest diversity order the evaluators accept.
pub const MAX_ANTENNAS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoryDetector {
    #[serde(rename = "coh-awgn")]
    CoherentAwgn,
    #[serde(rename = "noncoh-rayleigh")]
    NoncoherentRayleigh,
}

impl fmt::Display for TheoryDetector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoryDetector::CoherentAwgn => "coh-awgn",
            TheoryDetector::NoncoherentRayleigh => "noncoh-rayleigh",
        })
    }
}

impl FromStr for TheoryDetector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coh-awgn" | "coherent-awgn" => Ok(TheoryDetector::CoherentAwgn),
            "noncoh-rayleigh" | "noncoherent-rayleigh" => Ok(TheoryDetector::NoncoherentRayleigh),
            other => Err(Error::InvalidParameter(format!(
                "unknown theory detector `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub detector: TheoryDetector,
    pub m: usize,
    pub l: usize,
    pub snr_db: f64,
    pub ser: f64,
    pub ber: f64,
}

/// An error probability together with its numerical error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerEstimate {
    pub ser: f64,
    /// Quadrature error estimate.
    pub abs_error: f64,
    /// Upper bound on the discarded integrand mass beyond the truncation point.
    pub tail_bound: f64,
}

/// `γ̄_c = E_s/N_0 = M·SNR` for a per-antenna SNR in dB.
pub fn es_over_n0(m: usize, snr_db: f64) -> f64 {
    m as f64 * 10f64.powf(snr_db / 10.0)
}

/// `P_b = P_s·M/(2(M−1))`, clamped to `[0, 1]`.
pub fn ber_from_ser(ser: f64, m: usize) -> f64 {
    let m = m as f64;
    (ser * m / (2.0 * (m - 1.0))).clamp(0.0, 1.0)
}

fn validate(m: usize, l: usize, snr: f64) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "alphabet size {m} is not a power of two >= 2"
        )));
    }
    if l < 1 || l > MAX_ANTENNAS {
        return Err(Error::InvalidParameter(format!(
            "antenna count {l} outside 1..={MAX_ANTENNAS}"
        )));
    }
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "signal-to-noise ratio {snr} must be non-negative"
        )));
    }
    Ok(())
}

fn max_ser(m: usize) -> f64 {
    (m as f64 - 1.0) / m as f64
}

/// Upper Gaussian tail `Q(y)`.
fn gaussian_q(y: f64) -> f64 {
    0.5 * libm::erfc(y * FRAC_1_SQRT_2)
}

/// `ln Φ(y)` without cancellation on either side.
fn ln_gaussian_cdf(y: f64) -> f64 {
    if y < 0.0 {
        (0.5 * libm::erfc(-y * FRAC_1_SQRT_2)).ln()
    } else {
        (-gaussian_q(y)).ln_1p()
    }
}

/// `1 − exp(n·ln_p)` evaluated as `−expm1`.
fn one_minus_power(n: f64, ln_p: f64) -> f64 {
    -(n * ln_p).exp_m1()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
}

/// `ln Q(L, λ)` with `Q(L, λ) = e^{−λ} Σ_{q<L} λ^q/q!`, the probability that
/// a noise-only square-law bin exceeds `λ` (unit noise power per branch).
fn ln_upper_gamma(l: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let ln_lambda = lambda.ln();
    let mut ln_fact = 0.0;
    let terms = (0..l).map(|q| {
        if q > 0 {
            ln_fact += (q as f64).ln();
        }
        q as f64 * ln_lambda - ln_fact
    });
    -lambda + log_sum_exp(terms)
}

/// `ln P(L, λ) = ln(1 − Q(L, λ))` from the lower series, accurate when
/// `P` is small.
fn ln_lower_gamma_series(l: usize, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..100_000 {
        term *= lambda / (l + j) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    -lambda + l as f64 * lambda.ln() - ln_factorial(l) + sum.ln()
}

/// `ln(1 − Q(L, λ))`, switching formulas to avoid cancellation.
fn ln_noise_bin_below(l: usize, lambda: f64) -> f64 {
    let ln_q = ln_upper_gamma(l, lambda);
    if ln_q < -std::f64::consts::LN_2 {
        (-ln_q.exp()).ln_1p()
    } else {
        ln_lower_gamma_series(l, lambda)
    }
}

fn finish(m: usize, q: QuadratureResult, tail_bound: f64) -> SerEstimate {
    SerEstimate {
        ser: q.value.clamp(0.0, max_ser(m)),
        abs_error: q.abs_error,
        tail_bound,
    }
}

/// Coherent MRC detection in AWGN with the given quadrature tolerance.
pub fn ser_coherent_awgn_with(m: usize, l: usize, es_over_n0: f64, tol: Tolerance) -> Result<SerEstimate> {
    validate(m, l, es_over_n0)?;
    if es_over_n0.is_infinite() {
        return Ok(SerEstimate {
            ser: 0.0,
            abs_error: 0.0,
            tail_bound: 0.0,
        });
    }
    let mean = (2.0 * l as f64 * es_over_n0).sqrt();
    let n = (m - 1) as f64;
    let norm = 1.0 / (2.0 * PI).sqrt();
    let integrand = |y: f64| {
        let d = y - mean;
        norm * (-0.5 * d * d).exp() * one_minus_power(n, ln_gaussian_cdf(y))
    };
    // beyond 40 standard deviations from either centre the integrand is below e^{-800}
    let lo = -40.0;
    let hi = mean + 40.0;
    let mut breaks = vec![lo, 0.0, 2.0, 4.0, 6.0, 0.5 * mean, mean, hi];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = integrate(integrand, &breaks, tol);
    Ok(finish(m, q, 0.0))
}

/// Symbol error probability of coherent MRC detection in AWGN.
pub fn ser_coherent_awgn(m: usize, l: usize, es_over_n0: f64) -> Result<f64> {
    ser_coherent_awgn_with(m, l, es_over_n0, Tolerance::default()).map(|e| e.ser)
}

/// Default truncation point in the scaled variable `u = λ/(1 + γ̄_c)`.
fn default_upper_limit(l: usize) -> f64 {
    l as f64 + 40.0 + 10.0 * (l as f64).sqrt()
}

/// Non-coherent square-law detection in Rayleigh fading with the given
/// quadrature tolerance.
pub fn ser_noncoherent_rayleigh_with(m: usize, l: usize, gamma_c: f64, tol: Tolerance) -> Result<SerEstimate> {
    validate(m, l, gamma_c)?;
    if gamma_c.is_infinite() {
        return Ok(SerEstimate {
            ser: 0.0,
            abs_error: 0.0,
            tail_bound: 0.0,
        });
    }
    let scale = 1.0 + gamma_c;
    let n = (m - 1) as f64;
    let ln_gamma_l = ln_factorial(l - 1);
    let shape = (l - 1) as f64;
    let bracket = |lambda: f64| one_minus_power(n, ln_noise_bin_below(l, lambda));
    let integrand = |u: f64| {
        let density = if l == 1 {
            (-u).exp()
        } else if u == 0.0 {
            0.0
        } else {
            (shape * u.ln() - u - ln_gamma_l).exp()
        };
        if density == 0.0 {
            0.0
        } else {
            density * bracket(scale * u)
        }
    };

    let mut upper = default_upper_limit(l);
    loop {
        // the bracket decreases in λ, so this bounds the discarded mass
        let tail_bound = ln_upper_gamma(l, upper).exp() * bracket(scale * upper);
        let mut breaks = vec![0.0, shape, upper];
        let transition = (n.ln() + l as f64).max(1.0);
        for lambda in [0.25, 1.0, 0.5 * transition, transition, 2.0 * transition, 4.0 * transition, 64.0, 256.0] {
            breaks.push(lambda / scale);
        }
        breaks.retain(|b| (0.0..=upper).contains(b));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let q = integrate(integrand, &breaks, tol);
        if tail_bound <= 1e-12 * q.value || q.value == 0.0 || upper > 1e4 {
            return Ok(finish(m, q, tail_bound));
        }
        upper *= 2.0;
    }
}

/// Symbol error probability of non-coherent square-law combining in
/// Rayleigh fading, with `gamma_c = E_s/N_0 = M·SNR`.
pub fn ser_noncoherent_rayleigh(m: usize, l: usize, gamma_c: f64) -> Result<f64> {
    ser_noncoherent_rayleigh_with(m, l, gamma_c, Tolerance::default()).map(|e| e.ser)
}

pub fn ser(detector: TheoryDetector, m: usize, l: usize, es_over_n0: f64) -> Result<f64> {
    match detector {
        TheoryDetector::CoherentAwgn => ser_coherent_awgn(m, l, es_over_n0),
        TheoryDetector::NoncoherentRayleigh => ser_noncoherent_rayleigh(m, l, es_over_n0),
    }
}

pub fn theory_point(detector: TheoryDetector, m: usize, l: usize, snr_db: f64) -> Result<TheoryPoint> {
    let ser = ser(detector, m, l, es_over_n0(m, snr_db))?;
    Ok(TheoryPoint {
        detector,
        m,
        l,
        snr_db,
        ser,
        ber: ber_from_ser(ser, m),
    })
}

/// Evaluate a whole SNR grid (dB, ascending).
pub fn theory_curve(detector: TheoryDetector, m: usize, l: usize, snr_db: &[f64]) -> Result<Vec<TheoryPoint>> {
    if snr_db.is_empty() {
        return Err(Error::EmptyInput("SNR grid"));
    }
    if snr_db.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("SNR grid must be ascending".into()));
    }
    snr_db
        .iter()
        .map(|&s| theory_point(detector, m, l, s))
        .collect()
}
