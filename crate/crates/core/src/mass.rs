//! Probability that the forward has been absorbed at zero.
//!
//! With `ρ = 0` the forward is a CEV process run on the clock
//! `∫_0^t Y_s² ds`, so its mass at zero is the CEV absorption probability
//! averaged over the law of that clock.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cev::ln_cev_mass_at_zero;
use crate::error::{domain, Error, Result};
use crate::params::SabrParams;
use crate::quadrature::{integrate_exp, try_integrate_panels, QuadratureSpec};
use crate::special_fn::{ln_gamma, SeriesControl};
use crate::timechange::{density_infinite, ln_density_finite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassMethod {
    FiniteQuadrature,
    SmallTimeAsymptotic,
    LargeTimeIntegral,
    LargeTimeSeries,
    ClosedFormBeta0,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassResult {
    pub value: f64,
    /// `ln value`, meaningful when `value` underflows.
    pub ln_value: f64,
    pub method: MassMethod,
    pub error_estimate: Option<f64>,
    pub terms_used: Option<usize>,
    pub nodes_used: Option<usize>,
}

impl MassResult {
    pub(crate) fn new(value: f64, method: MassMethod) -> Self {
        Self { value, ln_value: value.ln(), method, error_estimate: None, terms_used: None, nodes_used: None }
    }

    pub(crate) fn from_ln(ln_value: f64, method: MassMethod) -> Self {
        Self { value: ln_value.exp().min(1.0), ln_value: ln_value.min(0.0), ..Self::new(0.0, method) }
    }
}

/// Above this `ν² t` the finite-horizon clock is replaced by its limit.
pub const PERPETUAL_FROM: f64 = 64.0;

/// `P(X_t = 0)` by quadrature of the CEV mass against the law of the clock.
///
/// Needs `2ν²t >= q.y_floor`. Past `ν²t = 64` the value is bracketed between
/// the mass at `ν²t = 64` and the perpetual limit, both of which it lies
/// between since absorption only accumulates; the limit is returned and the
/// bracket width is the error estimate.
pub fn mass_finite(p: &SabrParams, t: f64, q: &QuadratureSpec) -> Result<MassResult> {
    p.require_uncorrelated()?;
    q.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("horizon must be positive, got {t}")));
    }
    let nu2 = p.nu * p.nu;
    let y = 2.0 * nu2 * t;
    if y < q.y_floor {
        return Err(Error::RegimeTooSmall { y, floor: q.y_floor });
    }
    if nu2 * t > PERPETUAL_FROM {
        let upper = mass_largetime(p, q)?;
        let lower = finite_quadrature(p, PERPETUAL_FROM / nu2, q)?;
        let gap = (upper.value - lower.value).max(0.0);
        return Ok(MassResult {
            error_estimate: Some(gap + upper.error_estimate.unwrap_or(0.0)),
            nodes_used: lower.nodes_used,
            ..MassResult::new(upper.value, MassMethod::FiniteQuadrature)
        });
    }
    finite_quadrature(p, t, q)
}

fn finite_quadrature(p: &SabrParams, t: f64, q: &QuadratureSpec) -> Result<MassResult> {
    let v = p.vol();
    let cev = p.cev();
    let ctl = SeriesControl::default();
    let mean = v.integrated_variance_mean(t);
    let center = mean.min(p.y0 * p.y0 / (p.nu * p.nu)).ln();
    let mut worst_rel = 0.0f64;
    let r = integrate_exp(
        |s| {
            let r = s.exp();
            let lc = ln_cev_mass_at_zero(&cev, r)?.value;
            if lc == f64::NEG_INFINITY {
                return Ok(lc);
            }
            let (ld, m) = ln_density_finite(&v, t, r, ctl, q)?;
            if m.scaled > 0.0 {
                worst_rel = worst_rel.max(m.scaled_error / m.scaled);
            }
            Ok(lc + ld + s)
        },
        center,
        0.5,
        40.0,
        q.rel_tol,
        q.max_subdivisions,
    )?;
    let mut out = MassResult::from_ln(r.ln_value, MassMethod::FiniteQuadrature);
    // integrand dropped by e^{-40} at both ends
    out.error_estimate = Some(out.value * (r.rel_error + worst_rel.min(1.0) + 1e-16));
    out.nodes_used = Some(r.evaluations);
    Ok(out)
}

fn largetime_ln_integrand(p: &SabrParams) -> impl Fn(f64) -> Result<f64> {
    let v = p.vol();
    let cev = p.cev();
    move |s: f64| {
        let r = s.exp();
        let lc = ln_cev_mass_at_zero(&cev, r)?.value;
        Ok(lc + density_infinite(&v, r)?.ln() + s)
    }
}

/// `P_∞ = lim_{t→∞} P(X_t = 0)` by quadrature against the perpetual clock.
pub fn mass_largetime(p: &SabrParams, q: &QuadratureSpec) -> Result<MassResult> {
    p.require_uncorrelated()?;
    q.validate()?;
    let scale = p.y0 * p.y0 / (p.nu * p.nu);
    let r = integrate_exp(largetime_ln_integrand(p), scale.ln(), 0.5, 40.0, q.rel_tol, q.max_subdivisions)?;
    // mass of the perpetual clock above the last node, where the CEV factor is at most one
    let rt_hi = r.hi.exp() / (p.y0 * p.y0);
    let right_tail = 2.0 / (p.nu * (2.0 * PI).sqrt() * rt_hi.sqrt());
    let mut out = MassResult::from_ln(r.ln_value, MassMethod::LargeTimeIntegral);
    out.error_estimate = Some(out.value * r.rel_error + right_tail + 1e-16);
    out.nodes_used = Some(r.evaluations);
    Ok(out)
}

/// The integral behind [`mass_largetime`] cut at `r <= r_max`.
///
/// The neglected tail decays only like `r_max^{-1/2}`.
pub fn mass_largetime_truncated(p: &SabrParams, r_max: f64, q: &QuadratureSpec) -> Result<MassResult> {
    p.require_uncorrelated()?;
    q.validate()?;
    if !(r_max > 0.0) {
        return Err(domain(format!("truncation point must be positive, got {r_max}")));
    }
    let f = largetime_ln_integrand(p);
    let scale = p.y0 * p.y0 / (p.nu * p.nu);
    let whole = integrate_exp(&f, scale.ln(), 0.5, 40.0, q.rel_tol, q.max_subdivisions)?;
    let hi = r_max.ln().min(whole.hi);
    if hi <= whole.lo {
        return Ok(MassResult { error_estimate: Some(0.0), ..MassResult::new(0.0, MassMethod::LargeTimeIntegral) });
    }
    let n = ((hi - whole.lo) / 0.5).ceil() as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| whole.lo + (hi - whole.lo) * i as f64 / n as f64).collect();
    let part = try_integrate_panels(|s| Ok((f(s)? - whole.ln_value).exp()), &breaks, 1e-3 * q.rel_tol, q.rel_tol, q.max_subdivisions + n)?;
    let value = part.value * whole.value();
    let mut out = MassResult::new(value.min(1.0), MassMethod::LargeTimeIntegral);
    out.error_estimate = Some(value * (part.error / part.value.max(f64::MIN_POSITIVE) + whole.rel_error) + 1e-16);
    out.nodes_used = Some(whole.evaluations);
    Ok(out)
}

/// Closed form of the perpetual mass for `β = 0`.
pub fn mass_largetime_beta0(p: &SabrParams) -> Result<MassResult> {
    p.require_uncorrelated()?;
    if p.beta != 0.0 {
        return Err(domain(format!("closed form needs beta = 0, got {}", p.beta)));
    }
    let value = 1.0 - 2.0 / PI * (p.nu * p.x0 / p.y0).atan();
    Ok(MassResult { error_estimate: Some(0.0), ..MassResult::new(value, MassMethod::ClosedFormBeta0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesClass {
    Divergent,
    Convergent,
}

/// Convergence of the alternating series for `P_∞`.
///
/// The boundary case (ratio equal to one within `1e-12` relative) converges
/// exactly when `β < 2/3`.
pub fn series_classify(p: &SabrParams) -> Result<SeriesClass> {
    p.require_uncorrelated()?;
    let ratio = p.series_ratio();
    if (ratio - 1.0).abs() <= 1e-12 {
        return Ok(if p.beta < 2.0 / 3.0 { SeriesClass::Convergent } else { SeriesClass::Divergent });
    }
    Ok(if ratio < 1.0 { SeriesClass::Convergent } else { SeriesClass::Divergent })
}

/// Terms and partial sums of the alternating series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesState {
    /// `b_0, …, b_{n+1}`; the last one bounds the truncation error.
    pub coefficients: Vec<f64>,
    /// `P^{(0)}, …, P^{(n)}`.
    pub partial_sums: Vec<f64>,
    pub ratio: f64,
}

/// `ln b_k`, assembled from log-gamma differences so that large `k` is safe.
pub fn series_ln_coefficient(p: &SabrParams, k: usize) -> f64 {
    let omb = 1.0 - p.beta;
    let kf = k as f64;
    let ln_lead = (2.0 * p.y0 * omb).ln() - ln_gamma(0.5 / omb) - p.nu.ln() - 0.5 * PI.ln() - omb * p.x0.ln();
    ln_lead + kf * p.series_ratio().ln() + ln_gamma(kf + 1.0 + p.beta / (2.0 - 2.0 * p.beta))
        - ln_gamma(kf + 1.0)
        - (1.0 + 2.0 * kf).ln()
}

/// `n`-th partial sum of the small-`y0` expansion of `P_∞`.
pub fn mass_largetime_series(p: &SabrParams, n: usize) -> Result<(MassResult, SeriesState)> {
    p.require_uncorrelated()?;
    if series_classify(p)? == SeriesClass::Divergent {
        return Err(Error::DivergentRegime { ratio: p.series_ratio() });
    }
    let coefficients: Vec<f64> = (0..=n + 1).map(|k| series_ln_coefficient(p, k).exp()).collect();
    let mut partial_sums = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for (k, b) in coefficients.iter().take(n + 1).enumerate() {
        acc += if k % 2 == 0 { *b } else { -*b };
        partial_sums.push(acc);
    }
    let result = MassResult {
        error_estimate: Some(coefficients[n + 1]),
        terms_used: Some(n + 1),
        ..MassResult::new(acc, MassMethod::LargeTimeSeries)
    };
    Ok((result, SeriesState { coefficients, partial_sums, ratio: p.series_ratio() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> SabrParams {
        SabrParams::uncorrelated(0.2, 0.1, 1.0, 0.2).unwrap()
    }

    #[test]
    fn truncation_tail_is_inverse_square_root() {
        let p = base();
        let q = QuadratureSpec::default();
        let full = mass_largetime(&p, &q).unwrap().value;
        for r_max in [1e4, 1e6] {
            let tail = full - mass_largetime_truncated(&p, r_max, &q).unwrap().value;
            let leading = 2.0 * p.y0 / (p.nu * (2.0 * PI * r_max).sqrt());
            assert_relative_eq!(tail, leading, max_relative = 2e-2);
        }
        assert_relative_eq!(mass_largetime_truncated(&p, 1e300, &q).unwrap().value, full, max_relative = 1e-12);
    }

    #[test]
    fn zeroth_order_closed_form() {
        let p = base();
        let omb = 1.0 - p.beta;
        let expected = 2.0 * crate::special_fn::gamma(1.0 + p.beta / (2.0 - 2.0 * p.beta)) / crate::special_fn::gamma(0.5 / omb)
            * p.y0
            * omb
            / (p.nu * PI.sqrt() * p.x0.powf(omb));
        let (r, _) = mass_largetime_series(&p, 0).unwrap();
        assert_relative_eq!(r.value, expected, max_relative = 1e-14);
    }

    #[test]
    fn classifier_boundary() {
        // choose y0 so the ratio is exactly one
        for &(beta, expected) in &[(0.7, SeriesClass::Divergent), (0.5, SeriesClass::Convergent)] {
            let (x0, nu) = (0.5f64, 0.4f64);
            let y0 = nu * x0.powf(1.0 - beta) / (1.0 - beta);
            let p = SabrParams::uncorrelated(x0, y0, nu, beta).unwrap();
            assert_eq!(series_classify(&p).unwrap(), expected);
        }
        assert_eq!(series_classify(&base()).unwrap(), SeriesClass::Convergent);
    }

    #[test]
    fn divergent_series_refused() {
        let p = SabrParams::uncorrelated(0.01, 1.0, 0.1, 0.3).unwrap();
        assert!(matches!(mass_largetime_series(&p, 3), Err(Error::DivergentRegime { .. })));
    }

    #[test]
    fn log_coefficients_past_gamma_overflow() {
        let p = base();
        let l = series_ln_coefficient(&p, 400);
        assert!(l.is_finite() && l < 0.0);
    }

    #[test]
    fn beta0_closed_form_values() {
        let p = SabrParams::uncorrelated(0.35, 0.05, 0.3, 0.0).unwrap();
        assert_relative_eq!(mass_largetime_beta0(&p).unwrap().value, 1.0 - 2.0 / PI * 2.1f64.atan(), max_relative = 1e-15);
        let p = SabrParams::uncorrelated(0.5, 0.5, 1.0, 0.0).unwrap();
        assert_relative_eq!(mass_largetime_beta0(&p).unwrap().value, 0.5, max_relative = 1e-15);
        assert!(mass_largetime_beta0(&base()).is_err());
    }

    #[test]
    fn correlated_rejected() {
        let p = SabrParams::new(0.2, 0.1, 1.0, 0.2, 0.3).unwrap();
        assert!(matches!(mass_largetime(&p, &QuadratureSpec::default()), Err(Error::Correlated(_))));
    }
}
