//! Model parameter sets and their validity ranges.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Parameters of the SABR dynamics
///
/// ```text
/// dX = Y X^β dW,   X_0 = x0
/// dY = ν Y dZ,     Y_0 = y0
/// d<W, Z> = ρ dt
/// ```
///
/// with the origin absorbing for X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SabrParams {
    pub x0: f64,
    pub y0: f64,
    pub nu: f64,
    pub beta: f64,
    pub rho: f64,
}

impl SabrParams {
    pub fn new(x0: f64, y0: f64, nu: f64, beta: f64, rho: f64) -> Result<Self> {
        let p = Self { x0, y0, nu, beta, rho };
        p.validate()?;
        Ok(p)
    }

    /// Uncorrelated parameter set, the only one the mass and pricing routines accept.
    pub fn uncorrelated(x0: f64, y0: f64, nu: f64, beta: f64) -> Result<Self> {
        Self::new(x0, y0, nu, beta, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0 && self.x0.is_finite()) {
            return Err(domain(format!("x0 must be positive, got {}", self.x0)));
        }
        if !(self.y0 > 0.0 && self.y0.is_finite()) {
            return Err(domain(format!("y0 must be positive, got {}", self.y0)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(domain(format!("nu must be nonnegative, got {}", self.nu)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(domain(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(domain(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        Ok(())
    }

    /// Checks `ρ = 0` together with `β < 1` and `ν > 0`, the setting of the
    /// time-change routines.
    pub(crate) fn require_uncorrelated(&self) -> Result<()> {
        self.validate()?;
        if self.rho != 0.0 {
            return Err(Error::Correlated(self.rho));
        }
        if self.beta >= 1.0 {
            return Err(domain("the origin is only reached for beta < 1"));
        }
        if self.nu == 0.0 {
            return Err(domain("nu must be positive"));
        }
        Ok(())
    }

    pub fn cev(&self) -> CevParams {
        CevParams { x0: self.x0, beta: self.beta }
    }

    pub fn vol(&self) -> VolParams {
        VolParams { y0: self.y0, nu: self.nu }
    }

    /// `y0² (β-1)² / (ν² x0^{2(1-β)})`, the geometric ratio of the large-time series.
    pub fn series_ratio(&self) -> f64 {
        let one_m_beta = 1.0 - self.beta;
        (self.y0 * one_m_beta / self.nu).powi(2) / self.x0.powf(2.0 * one_m_beta)
    }
}

/// Driftless CEV process `dX = X^β dW` absorbed at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CevParams {
    pub x0: f64,
    pub beta: f64,
}

impl CevParams {
    pub fn new(x0: f64, beta: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(domain(format!("x0 must be positive, got {x0}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(domain(format!("beta must lie in [0, 1), got {beta}")));
        }
        Ok(Self { x0, beta })
    }
}

/// Geometric Brownian volatility `dY = ν Y dZ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolParams {
    pub y0: f64,
    pub nu: f64,
}

impl VolParams {
    pub fn new(y0: f64, nu: f64) -> Result<Self> {
        if !(y0 > 0.0 && y0.is_finite()) {
            return Err(domain(format!("y0 must be positive, got {y0}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(domain(format!("nu must be positive, got {nu}")));
        }
        Ok(Self { y0, nu })
    }

    /// Mean of the integrated variance `E ∫_0^t Y_s² ds = y0² (e^{ν² t} - 1) / ν²`.
    pub fn integrated_variance_mean(&self, t: f64) -> f64 {
        self.y0 * self.y0 * (self.nu * self.nu * t).exp_m1() / (self.nu * self.nu)
    }

    /// Second moment of the integrated variance.
    pub fn integrated_variance_second_moment(&self, t: f64) -> f64 {
        let n2 = self.nu * self.nu;
        let y4 = self.y0.powi(4);
        2.0 * y4 / n2
            * ((n2 * t).exp() * (5.0 * n2 * t).exp_m1() / (5.0 * n2) - (6.0 * n2 * t).exp_m1() / (6.0 * n2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(SabrParams::new(0.0, 0.1, 1.0, 0.2, 0.0).is_err());
        assert!(SabrParams::new(0.2, 0.1, 1.0, 1.1, 0.0).is_err());
        assert!(SabrParams::uncorrelated(0.2, 0.1, 1.0, 1.0).unwrap().require_uncorrelated().is_err());
        assert!(SabrParams::uncorrelated(0.2, 0.1, 0.0, 0.5).unwrap().require_uncorrelated().is_err());
        assert!(SabrParams::new(0.2, 0.1, 1.0, 0.2, 1.0).is_err());
        assert!(SabrParams::new(0.2, 0.1, -1.0, 0.2, 0.0).is_err());
        let p = SabrParams::new(0.2, 0.1, 1.0, 0.2, 0.3).unwrap();
        assert_eq!(p.require_uncorrelated(), Err(Error::Correlated(0.3)));
    }

    #[test]
    fn series_ratio_matches_hand_value() {
        let p = SabrParams::uncorrelated(0.2, 0.1, 1.0, 0.2).unwrap();
        let expected = 0.01 * 0.64 / 0.2f64.powf(1.6);
        assert!((p.series_ratio() - expected).abs() < 1e-15);
    }

    #[test]
    fn second_moment_small_t_limit() {
        // A_t ≈ y0² t for small t
        let v = VolParams::new(0.3, 1.0).unwrap();
        let t = 1e-4;
        let m2 = v.integrated_variance_second_moment(t);
        let approx = (0.09 * t).powi(2);
        assert!((m2 / approx - 1.0).abs() < 1e-3);
    }
}
