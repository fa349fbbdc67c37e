//! Complex-parameter gamma and confluent hypergeometric functions.

use num_complex::Complex64;

use super::SeriesControl;
use crate::error::{domain, Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k - 1)) for k = 1..8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Γ(z)` for complex `z` off the non-positive integers.
///
/// The imaginary part is correct modulo `2π`, which is all that matters once
/// the value is exponentiated.
pub fn ln_gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Err(domain(format!("ln_gamma pole at {z}")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(domain(format!("ln_gamma argument not finite: {z}")));
    }
    // shift into the Stirling region with the recurrence
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    let mut prod = Complex64::new(1.0, 0.0);
    let mut n = 0;
    while w.re < 12.0 || w.norm() < 15.0 {
        prod *= w;
        n += 1;
        if n % 16 == 0 {
            shift += prod.ln();
            prod = Complex64::new(1.0, 0.0);
        }
        w += 1.0;
    }
    shift += prod.ln();
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut corr = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        corr += p * c;
        p *= inv2;
    }
    Ok((w - 0.5) * w.ln() - w + HALF_LN_2PI + corr - shift)
}

/// Log of a series value with the log of the absolute-term sum, which bounds
/// the cancellation in the summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSeries {
    pub ln_value: Complex64,
    pub ln_abs_sum: f64,
}

/// `ln M(a, b, x)` for complex `a`, `b` and real `x >= 0`.
///
/// Plain power series, rescaled as it goes so that `x` in the hundreds is
/// safe. Cancellation is reported through [`LogSeries::ln_abs_sum`].
pub fn ln_kummer_complex(a: Complex64, b: Complex64, x: f64, ctrl: SeriesControl) -> Result<LogSeries> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain(format!("complex Kummer series needs finite x >= 0, got {x}")));
    }
    if b.im == 0.0 && b.re <= 0.0 && b.re == b.re.floor() {
        return Err(domain(format!("Kummer b at a pole: {b}")));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut abs_sum = 1.0;
    let mut ln_scale = 0.0;
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * (x / (nf + 1.0));
        n += 1;
        sum += term;
        let mag = term.norm();
        abs_sum += mag;
        if abs_sum > 1e250 {
            term *= 1e-250;
            sum *= 1e-250;
            abs_sum *= 1e-250;
            ln_scale += 250.0 * std::f64::consts::LN_10;
        }
        // terms only decay once n passes x and |a|
        let decaying = nf + 1.0 > x && nf + 1.0 > a.norm();
        if decaying && mag <= ctrl.rel_tol * 1e-2 * abs_sum {
            break;
        }
        if term == Complex64::new(0.0, 0.0) {
            break;
        }
        if n >= ctrl.max_terms.max((4.0 * x) as usize + 200) {
            return Err(Error::NonConvergence { what: "complex Kummer series", iterations: n });
        }
    }
    Ok(LogSeries { ln_value: sum.ln() + ln_scale, ln_abs_sum: abs_sum.ln() + ln_scale })
}

#[cfg(test)]
mod tests {
    use super::super::{kummer_m, ln_gamma};
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_axis_matches_real_ln_gamma() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 30.0] {
            let z = ln_gamma_complex(c(x, 0.0)).unwrap();
            assert_relative_eq!(z.re, ln_gamma(x), epsilon = 1e-13, max_relative = 1e-13);
        }
    }

    #[test]
    fn complex_gamma_oracles() {
        // mpmath loggamma, 30 digits; compare exponentials to avoid branch issues
        let g = ln_gamma_complex(c(0.5, 3.0)).unwrap().exp();
        assert_relative_eq!(g.re, 0.021_445_670_552_430_646, max_relative = 1e-12);
        assert_relative_eq!(g.im, 0.006_865_364_837_261_678, max_relative = 1e-12);
        let g = ln_gamma_complex(c(-2.3, 0.7)).unwrap().exp();
        assert_relative_eq!(g.re, -0.062_275_072_013_688_24, max_relative = 1e-12);
        assert_relative_eq!(g.im, -0.274_869_820_381_396_9, max_relative = 1e-12);
    }

    #[test]
    fn recurrence() {
        let z = c(1.3, -4.2);
        let lhs = ln_gamma_complex(z + 1.0).unwrap().exp();
        let rhs = z * ln_gamma_complex(z).unwrap().exp();
        assert_relative_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-13 * lhs.norm());
    }

    #[test]
    fn kummer_real_parameters_agree() {
        let ctrl = SeriesControl::default();
        for &(a, b, x) in &[(0.25, 2.5, 0.8), (0.5, 1.5, 40.0), (1.25, 3.0, 150.0)] {
            let v = ln_kummer_complex(c(a, 0.0), c(b, 0.0), x, ctrl).unwrap();
            assert_relative_eq!(v.ln_value.re, kummer_m(a, b, x, ctrl).unwrap().ln(), max_relative = 1e-13);
            assert_relative_eq!(v.ln_value.im, 0.0);
        }
    }

    #[test]
    fn kummer_complex_oracle() {
        // mpmath hyp1f1 at 30 digits
        let ctrl = SeriesControl::default();
        let v = ln_kummer_complex(c(0.5, 2.0), c(2.5, 4.0), 6.0, ctrl).unwrap().ln_value.exp();
        assert_relative_eq!(v.re, ORACLE_RE, max_relative = 1e-12);
        assert_relative_eq!(v.im, ORACLE_IM, max_relative = 1e-12);
    }

    const ORACLE_RE: f64 = 20.880_502_194_429_076;
    const ORACLE_IM: f64 = 3.718_443_264_047_155;
}
