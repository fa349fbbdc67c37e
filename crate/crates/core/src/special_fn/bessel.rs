//! Modified Bessel function of the first kind, real order and argument.

use super::gamma::ln_gamma;
use crate::error::{domain, Error, Result};

const ASYMPTOTIC_FROM: f64 = 50.0;

/// `I_v(z)` for `v >= 0`, `z >= 0`.
pub fn bessel_i(v: f64, z: f64) -> Result<f64> {
    let (scaled, ln_scale) = scaled_parts(v, z)?;
    if ln_scale > 709.0 {
        return Err(Error::Overflow(format!("I_{v}({z})")));
    }
    Ok(scaled * ln_scale.exp())
}

/// `e^{-z} I_v(z)`, finite for any `z`.
pub fn bessel_i_scaled(v: f64, z: f64) -> Result<f64> {
    let (scaled, ln_scale) = scaled_parts(v, z)?;
    Ok(scaled * (ln_scale - z).exp())
}

/// Returns `(s, L)` with `I_v(z) = s e^L`.
fn scaled_parts(v: f64, z: f64) -> Result<(f64, f64)> {
    if !(v >= 0.0) || !(z >= 0.0) {
        return Err(domain(format!("bessel_i needs v >= 0 and z >= 0, got v = {v}, z = {z}")));
    }
    if z == 0.0 {
        return Ok((if v == 0.0 { 1.0 } else { 0.0 }, 0.0));
    }
    if z > ASYMPTOTIC_FROM && z > v * v {
        return Ok((asymptotic(v, z), z - 0.5 * (2.0 * std::f64::consts::PI * z).ln()));
    }
    // Σ (z/2)^{2k+v} / (k! Γ(k+v+1)): every term positive
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    let mut ln_shift = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + v));
        sum += term;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            ln_shift += 280.0 * std::f64::consts::LN_10;
        }
        if term < sum * 1e-17 {
            break;
        }
        if k > 1e5 {
            return Err(Error::NonConvergence { what: "Bessel I series", iterations: 100_000 });
        }
    }
    // rescale the sum so that very large z do not overflow the accumulator
    let ln_lead = v * (0.5 * z).ln() - ln_gamma(v + 1.0);
    Ok((1.0, ln_lead + ln_shift + sum.ln()))
}

/// `sqrt(2πz) e^{-z} I_v(z) ~ Σ (-1)^k a_k(v) / z^k`.
fn asymptotic(v: f64, z: f64) -> f64 {
    let mu = 4.0 * v * v;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * z);
        if term.abs() >= prev || term == 0.0 {
            break;
        }
        prev = term.abs();
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}
