//! Confluent hypergeometric function `M(a, b, x) = 1F1(a; b; x)`.

use super::gamma::ln_gamma;
use super::{KahanSum, SeriesControl};
use crate::error::{domain, Error, Result};

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Kummer's function by its power series.
///
/// Intended for moderate arguments, `|x| <= 50`. Negative `x` goes through
/// Kummer's transformation `M(a, b, x) = e^x M(b - a, b, -x)` so that the
/// summed terms never alternate in sign because of `x`.
pub fn kummer_m(a: f64, b: f64, x: f64, ctl: SeriesControl) -> Result<f64> {
    if is_nonpositive_integer(b) {
        return Err(domain(format!("Kummer M undefined for b = {b}")));
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    if x < 0.0 && !is_nonpositive_integer(a) {
        return Ok(x.exp() * series(b - a, b, -x, ctl)?);
    }
    series(a, b, x, ctl)
}

fn series(a: f64, b: f64, x: f64, ctl: SeriesControl) -> Result<f64> {
    let mut sum = KahanSum::default();
    let mut term = 1.0;
    sum.add(term);
    for k in 0..ctl.max_terms {
        let kf = k as f64;
        let ratio = (a + kf) * x / ((b + kf) * (kf + 1.0));
        term *= ratio;
        sum.add(term);
        if term == 0.0 {
            return Ok(sum.value());
        }
        // once the ratio of successive terms settles below one the tail is
        // dominated by a geometric series
        let next = ((a + kf + 1.0) * x / ((b + kf + 1.0) * (kf + 2.0))).abs();
        if next < 1.0 {
            let tail = term.abs() * next / (1.0 - next);
            if tail <= ctl.rel_tol * sum.value().abs() {
                return Ok(sum.value());
            }
        }
    }
    Err(Error::NonConvergence { what: "Kummer series", iterations: ctl.max_terms })
}

/// `e^{-x} M(a, b, x)` for `x >= 0`, valid for arbitrarily large `x`.
///
/// Uses the series below `x = 40` and the large-argument expansion
/// `Γ(b)/Γ(a) x^{a-b} Σ (b-a)_s (1-a)_s / (s! x^s)` above it. The second,
/// exponentially small branch of the expansion is below `e^{-40}` relative and
/// is dropped.
pub fn kummer_m_scaled(a: f64, b: f64, x: f64, ctl: SeriesControl) -> Result<f64> {
    if x < 0.0 {
        return Err(domain(format!("scaled Kummer M needs x >= 0, got {x}")));
    }
    if is_nonpositive_integer(b) {
        return Err(domain(format!("Kummer M undefined for b = {b}")));
    }
    if x <= 40.0 || is_nonpositive_integer(a) {
        return Ok((-x).exp() * series(a, b, x, ctl)?);
    }
    let c = b - a;
    let mut term = 1.0;
    let mut sum = KahanSum::default();
    sum.add(term);
    let mut prev = f64::INFINITY;
    for s in 0..ctl.max_terms {
        let sf = s as f64;
        term *= (c + sf) * (1.0 - a + sf) / ((sf + 1.0) * x);
        if term.abs() >= prev {
            // asymptotic series started to diverge; the smallest term bounds the error
            break;
        }
        prev = term.abs();
        sum.add(term);
        if term.abs() <= ctl.rel_tol * sum.value().abs() {
            break;
        }
    }
    let lead = ln_gamma(b) - ln_gamma(a) + (a - b) * x.ln();
    let sign = gamma_sign(b) * gamma_sign(a);
    Ok(sign * lead.exp() * sum.value())
}

fn gamma_sign(x: f64) -> f64 {
    if x > 0.0 || (x.floor() as i64) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
