//! Special functions used by the mass, density and pricing routines.
//!
//! Everything here is a pure function of its arguments. The complex-parameter
//! helpers in [`complex`] exist for the Laplace-inversion route of the
//! integrated-variance density.

pub mod bessel;
pub mod complex;
pub mod gamma;
pub mod kummer;
pub mod normal;

pub use bessel::{bessel_i, bessel_i_scaled};
pub use gamma::{gamma, ln_gamma, ln_reg_upper_gamma, reg_lower_gamma, reg_upper_gamma};
pub use kummer::{kummer_m, kummer_m_scaled};
pub use normal::{norm_cdf, norm_pdf, norm_quantile};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Truncation policy for power series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-6) {
            return Err(domain(format!("series rel_tol must lie in (0, 1e-6], got {rel_tol}")));
        }
        if max_terms < 50 {
            return Err(domain(format!("series max_terms must be at least 50, got {max_terms}")));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-15, max_terms: 10_000 }
    }
}

/// Kahan-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}
