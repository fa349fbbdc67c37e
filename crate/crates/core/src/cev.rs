//! Absorption probability of the driftless CEV process.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::CevParams;
use crate::special_fn::ln_reg_upper_gamma;

/// Above this exponent the process is treated as lognormal and never absorbs.
pub const LOGNORMAL_CUTOFF: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevMass {
    pub value: f64,
    /// Set when `β` is within `1e-6` of one and zero was returned.
    pub lognormal_limit: bool,
}

/// Shape and argument `(a, z)` of the incomplete gamma giving the mass after
/// variance time `r`.
pub fn gamma_arguments(p: &CevParams, r: f64) -> (f64, f64) {
    let one_m_beta = 1.0 - p.beta;
    let a = 0.5 / one_m_beta;
    let z = p.x0.powf(2.0 * one_m_beta) / (2.0 * r * one_m_beta * one_m_beta);
    (a, z)
}

/// `P(X̃_r = 0)` for `dX̃ = X̃^β dW`, `X̃_0 = x0`, absorbed at zero.
pub fn cev_mass_at_zero(p: &CevParams, r: f64) -> Result<CevMass> {
    let ln = ln_cev_mass_at_zero(p, r)?;
    Ok(CevMass { value: ln.value.exp(), lognormal_limit: ln.lognormal_limit })
}

/// Logarithm of the absorption probability, usable where it underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnCevMass {
    pub value: f64,
    pub lognormal_limit: bool,
}

pub fn ln_cev_mass_at_zero(p: &CevParams, r: f64) -> Result<LnCevMass> {
    if !(r > 0.0) || r.is_nan() {
        return Err(domain(format!("variance time must be positive, got {r}")));
    }
    if !(p.x0 > 0.0) || !(0.0..1.0).contains(&p.beta) {
        return Err(domain(format!("invalid CEV parameters {p:?}")));
    }
    if p.beta > LOGNORMAL_CUTOFF {
        return Ok(LnCevMass { value: f64::NEG_INFINITY, lognormal_limit: true });
    }
    let (a, z) = gamma_arguments(p, r);
    Ok(LnCevMass { value: ln_reg_upper_gamma(a, z)?.min(0.0), lognormal_limit: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::ln_gamma;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cev(x0: f64, beta: f64) -> CevParams {
        CevParams::new(x0, beta).unwrap()
    }

    #[test]
    fn square_root_case_is_exponential() {
        let m = cev_mass_at_zero(&cev(1.0, 0.5), 2.0).unwrap();
        assert_relative_eq!(m.value, (-1.0f64).exp(), max_relative = 1e-14);
        assert!(!m.lognormal_limit);
    }

    #[test]
    fn vanishes_at_small_variance() {
        let p = cev(0.2, 0.2);
        let r = 1e-8 * p.x0.powf(1.6);
        assert!(cev_mass_at_zero(&p, r).unwrap().value < 1e-12);
    }

    #[test]
    fn extended_precision_value() {
        // mpmath gammainc, 30 digits
        let m = cev_mass_at_zero(&cev(0.2, 0.2), 1.0).unwrap();
        assert_relative_eq!(m.value, 0.813_117_021_840_352, max_relative = 1e-13);
    }

    #[test]
    fn lognormal_limit_flagged() {
        let p = CevParams { x0: 1.0, beta: 1.0 - 1e-9 };
        let m = cev_mass_at_zero(&p, 5.0).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(m.lognormal_limit);
    }

    #[test]
    fn rejects_nonpositive_variance() {
        assert!(cev_mass_at_zero(&cev(1.0, 0.3), 0.0).is_err());
        assert!(cev_mass_at_zero(&cev(1.0, 0.3), -1.0).is_err());
    }

    #[test]
    fn small_variance_asymptotic() {
        // Q(a, z) ~ z^{a-1} e^{-z} / Γ(a) as z grows
        let p = cev(0.3, 0.4);
        let mut last_gap = f64::INFINITY;
        for k in 1..8 {
            let r = 0.05 / 2f64.powi(k);
            let (a, z) = gamma_arguments(&p, r);
            let approx = (a - 1.0) * z.ln() - z - ln_gamma(a);
            let gap = (ln_cev_mass_at_zero(&p, r).unwrap().value - approx).abs();
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 1e-2);
    }

    proptest! {
        #[test]
        fn in_unit_interval_and_monotone(x0 in 0.01f64..5.0, beta in 0.0f64..0.95, r in 1e-4f64..100.0) {
            let p = cev(x0, beta);
            let m1 = cev_mass_at_zero(&p, r).unwrap().value;
            let m2 = cev_mass_at_zero(&p, 1.5 * r).unwrap().value;
            let m3 = cev_mass_at_zero(&cev(1.5 * x0, beta), r).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&m1));
            prop_assert!(m2 >= m1);
            prop_assert!(m3 <= m1);
        }
    }
}
