//! Law of the integrated variance `∫_0^t Y_s² ds` of a geometric Brownian
//! volatility, at finite and infinite horizon.
//!
//! The finite-horizon density is expressed through the function
//!
//! ```text
//! m_y(μ, z) = 8 z^{3/2} Γ(μ+3/2) e^{π²/(4y)} / (π √(2πy))
//!             ∫_0^∞ e^{-z cosh 2u - u²/y} M(-μ, 3/2, 2z sinh²u) sinh 2u sin(πu/y) du.
//! ```
//!
//! For `y >= 0.5` that integral is evaluated as written, split at the zeros of
//! the sine. Below, the prefactor `e^{π²/(4y)}` turns it into a difference of
//! huge numbers, so `m` is recovered instead from its Laplace representation
//! by a Bromwich integral along a vertical line `s = σ + iτ`:
//!
//! ```text
//! m_y(μ, z) = (2 e^{-z} / π) ∫_0^∞ Re[ e^{y s²} s F(s) ] dτ,
//! F(s) = Γ(μ+1/2+s) / Γ(1+2s) (2z)^{1/2+s} M(μ+1/2+s, 1+2s, 2z).
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::VolParams;
use crate::quadrature::{try_integrate_panels, QuadratureSpec};
use crate::special_fn::complex::{ln_gamma_complex, ln_kummer_complex};
use crate::special_fn::{kummer_m_scaled, ln_gamma, SeriesControl};

/// Order parameter of the integrated-variance law.
pub const MU: f64 = -0.75;

/// `y` below which the Bromwich route replaces the real-axis integral.
pub const CONTOUR_BELOW: f64 = 0.5;

/// Arguments of `m_y(μ, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MArgs {
    pub y: f64,
    pub mu: f64,
    pub z: f64,
}

impl MArgs {
    pub fn new(y: f64, mu: f64, z: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(domain(format!("m-function needs y > 0, got {y}")));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(domain(format!("m-function needs z > 0, got {z}")));
        }
        if !(mu > -1.5) {
            return Err(domain(format!("m-function needs mu > -3/2, got {mu}")));
        }
        Ok(Self { y, mu, z })
    }

    /// Arguments for the integrated variance at horizon `t` and level `r`.
    pub fn for_variance(v: &VolParams, t: f64, r: f64) -> Result<Self> {
        let nu2 = v.nu * v.nu;
        Self::new(2.0 * nu2 * t, MU, v.y0 * v.y0 / (4.0 * nu2 * r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MRoute {
    RealAxis,
    Contour,
}

/// Value of `m_y(μ, z)` stored as `e^{-z} m`, which stays representable for
/// every `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MValue {
    pub scaled: f64,
    /// Absolute error bound on `scaled`.
    pub scaled_error: f64,
    pub z: f64,
    pub route: MRoute,
    /// The quadrature result was negative within tolerance, or no larger than
    /// its own error estimate, and was set to zero.
    pub clamped: bool,
}

impl MValue {
    /// `m` itself; infinite when `e^z` overflows.
    pub fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            0.0
        } else {
            (self.scaled.ln() + self.z).exp()
        }
    }
}

/// Evaluates `m_y(μ, z)`.
///
/// Fails with [`Error::OscillationBudgetExceeded`] below `q.y_floor`.
pub fn m_function(args: MArgs, ctl: SeriesControl, q: &QuadratureSpec) -> Result<MValue> {
    let args = MArgs::new(args.y, args.mu, args.z)?;
    if args.y < q.y_floor {
        return Err(Error::OscillationBudgetExceeded { y: args.y, floor: q.y_floor });
    }
    let (raw, err, route) = if args.y >= CONTOUR_BELOW {
        let (v, e) = real_axis(&args, ctl, q)?;
        (v, e, MRoute::RealAxis)
    } else {
        let (v, e) = contour(&args, ctl, q)?;
        (v, e, MRoute::Contour)
    };
    let slack = err.max(q.abs_tol);
    let (scaled, clamped) = if raw > err {
        (raw, false)
    } else if raw > -slack {
        (0.0, true)
    } else {
        return Err(Error::NegativeValue { value: raw, tolerance: slack });
    };
    Ok(MValue { scaled, scaled_error: err, z: args.z, route, clamped })
}

/// Returns `e^{-z} m` and its error from the defining oscillatory integral.
fn real_axis(a: &MArgs, ctl: SeriesControl, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let (y, z, mu) = (a.y, a.z, a.mu);
    // e^{-z cosh 2u} M(-μ, 3/2, x) = e^{-z} e^{-x} M(-μ, 3/2, x) with x = 2z sinh²u;
    // the outer e^{-z} joins the requested scaling, giving e^{-2z} overall
    let ln_amp = |u: f64| -> Result<f64> {
        let s = u.sinh();
        let k = kummer_m_scaled(-mu, 1.5, 2.0 * z * s * s, ctl)?;
        Ok(-u * u / y + k.ln() + (2.0 * u).sinh().ln())
    };
    let u_max = match q.u_max {
        Some(u) => u,
        None => {
            // the Kummer factor grows where e^{-z cosh 2u} decays, so the cutoff
            // is read off the combined magnitude rather than the exponential alone
            let h = 0.25 * y.min(1.0);
            let mut peak = f64::NEG_INFINITY;
            let mut u = h;
            loop {
                let l = ln_amp(u)?;
                peak = peak.max(l);
                if l < peak - 40.0 && u > 0.5 * y {
                    break u;
                }
                u += h;
                if u > 1e4 {
                    return Err(Error::NonConvergence { what: "m-function truncation scan", iterations: (1e4 / h) as usize });
                }
            }
        }
    };
    let mut breaks = vec![0.0];
    let mut k = 1.0;
    while k * y < u_max {
        breaks.push(k * y);
        k += 1.0;
    }
    breaks.push(u_max);
    let mut scale = 0.0f64;
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        scale = scale.max(ln_amp(mid)?.exp() * (w[1] - w[0]));
    }
    let integral = try_integrate_panels(
        |u| {
            if u == 0.0 {
                return Ok(0.0);
            }
            Ok(ln_amp(u)?.exp() * (PI * u / y).sin())
        },
        &breaks,
        1e-14 * scale,
        q.rel_tol,
        q.max_subdivisions + breaks.len(),
    )?;
    let ln_c = 8f64.ln() + 1.5 * z.ln() + ln_gamma(mu + 1.5) + PI * PI / (4.0 * y)
        - PI.ln()
        - 0.5 * (2.0 * PI * y).ln()
        - 2.0 * z;
    let c = ln_c.exp();
    let round_off = 1e-15 * scale * breaks.len() as f64;
    Ok((c * integral.value, c * (integral.error + round_off)))
}

struct ContourIntegrand {
    y: f64,
    z: f64,
    mu: f64,
    ctl: SeriesControl,
}

impl ContourIntegrand {
    /// `ln(e^{y s²} s F(s) e^{-2z})` and a relative condition number for its exponential.
    fn ln_g(&self, s: Complex64) -> Result<(Complex64, f64)> {
        let a = s + self.mu + 0.5;
        let b = 2.0 * s + 1.0;
        let two_z = 2.0 * self.z;
        let k = ln_kummer_complex(a, b, two_z, self.ctl)?;
        let v = self.y * s * s + ln_gamma_complex(a)? - ln_gamma_complex(b)? + (s + 0.5) * two_z.ln() + k.ln_value + s.ln()
            - two_z;
        // rounding in exp(v) is relative to |v|, on top of the Kummer cancellation
        Ok((v, (k.ln_abs_sum - k.ln_value.re).exp() + v.norm()))
    }
}

/// Returns `e^{-z} m` and its error from the Bromwich integral.
fn contour(a: &MArgs, ctl: SeriesControl, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let g = ContourIntegrand { y: a.y, z: a.z, mu: a.mu, ctl };
    let width = 1.0 / a.y.sqrt();
    let pole = -(a.mu + 0.5);
    let base = pole.max(0.0);

    // the line is placed where the integrand's largest modulus is smallest,
    // which keeps cancellation along the line to a minimum
    let probe: Vec<f64> = std::iter::once(0.0).chain((0..25).map(|j| 0.25 * 1.4f64.powi(j))).collect();
    let mut best: Option<(f64, f64)> = None;
    for k in 0..16 {
        let sigma = base + 0.5 * 1.6f64.powi(k);
        let mut worst = f64::NEG_INFINITY;
        for &t in &probe {
            worst = worst.max(g.ln_g(Complex64::new(sigma, t))?.0.re);
        }
        if best.is_none_or(|(w, _)| worst < w) {
            best = Some((worst, sigma));
        }
    }
    let (_, sigma) = best.expect("sixteen candidates scanned");

    // extent along the line and a modulus profile for the error bound
    let step = 0.125 * width;
    let mut peak = f64::NEG_INFINITY;
    let mut abs_integral = 0.0;
    let mut cancel_integral = 0.0;
    let mut t = 0.0;
    let t_max = loop {
        let (l, cond) = g.ln_g(Complex64::new(sigma, t))?;
        peak = peak.max(l.re);
        let m = l.re.exp();
        abs_integral += m * step;
        cancel_integral += m * cond * step;
        if l.re < peak - 45.0 && t > width {
            break t;
        }
        t += step;
        if t > 1e3 * width {
            return Err(Error::NonConvergence { what: "Bromwich truncation scan", iterations: 8000 });
        }
    };
    let mut breaks = vec![0.0];
    for f in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0] {
        if f * width < t_max {
            breaks.push(f * width);
        }
    }
    breaks.push(t_max);
    let integral = try_integrate_panels(
        |t| Ok(g.ln_g(Complex64::new(sigma, t))?.0.exp().re),
        &breaks,
        // below the rounding noise of the integrand no refinement can help
        1e-15 * abs_integral + 8.0 * f64::EPSILON * cancel_integral,
        q.rel_tol,
        q.max_subdivisions + breaks.len(),
    )?;
    let scale = 2.0 / PI;
    let round_off = 4.0 * f64::EPSILON * (abs_integral + cancel_integral);
    Ok((scale * integral.value, scale * (integral.error + round_off)))
}

/// Density of `∫_0^t Y_s² ds` at `r`.
pub fn density_finite(v: &VolParams, t: f64, r: f64, ctl: SeriesControl, q: &QuadratureSpec) -> Result<f64> {
    Ok(density_finite_detail(v, t, r, ctl, q)?.0)
}

/// Density together with the underlying `m` evaluation.
pub fn density_finite_detail(v: &VolParams, t: f64, r: f64, ctl: SeriesControl, q: &QuadratureSpec) -> Result<(f64, MValue)> {
    if !(t > 0.0) {
        return Err(domain(format!("horizon must be positive, got {t}")));
    }
    if !(r > 0.0) {
        return Err(domain(format!("variance level must be positive, got {r}")));
    }
    let args = MArgs::for_variance(v, t, r)?;
    let m = m_function(args, ctl, q)?;
    Ok((density_prefactor(v, t, r) * m.scaled, m))
}

/// Logarithm of [`density_finite`]; `-inf` where `m` was clamped to zero.
pub fn ln_density_finite(v: &VolParams, t: f64, r: f64, ctl: SeriesControl, q: &QuadratureSpec) -> Result<(f64, MValue)> {
    let (_, m) = density_finite_detail(v, t, r, ctl, q)?;
    let ln = if m.scaled > 0.0 { ln_density_prefactor(v, t, r) + m.scaled.ln() } else { f64::NEG_INFINITY };
    Ok((ln, m))
}

pub(crate) fn ln_density_prefactor(v: &VolParams, t: f64, r: f64) -> f64 {
    let y02 = v.y0 * v.y0;
    let rt = r / y02;
    0.25 * 2f64.ln() + 0.5 * v.nu.ln() - 0.75 * rt.ln() - v.nu * v.nu * t / 8.0 - y02.ln()
}

/// Factor multiplying `e^{-z} m_y(μ, z)` in the finite-horizon density.
pub(crate) fn density_prefactor(v: &VolParams, t: f64, r: f64) -> f64 {
    ln_density_prefactor(v, t, r).exp()
}

/// Limit law of `∫_0^∞ Y_s² ds` (an inverse gamma with shape 1/2).
pub fn density_infinite(v: &VolParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain(format!("variance level must be positive, got {r}")));
    }
    let y02 = v.y0 * v.y0;
    let rt = r / y02;
    let nu2 = v.nu * v.nu;
    Ok(rt.powf(-1.5) / (v.nu * (2.0 * PI).sqrt()) * (-1.0 / (2.0 * nu2 * rt)).exp() / y02)
}

/// Integrates a density in `r` over `(0, ∞)` on the log scale.
///
/// The range is split around `center` and extended geometrically until the
/// integrand is negligible at both ends.
pub fn integrate_log_scale<F: FnMut(f64) -> Result<f64>>(mut f: F, center: f64, q: &QuadratureSpec) -> Result<f64> {
    let mut g = |s: f64| -> Result<f64> {
        let r = s.exp();
        Ok(f(r)? * r)
    };
    let c = center.ln();
    let mut lo = c - 1.0;
    let mut hi = c + 1.0;
    let peak = g(c)?.abs().max(g(lo)?.abs()).max(g(hi)?.abs());
    while g(lo)?.abs() > 1e-17 * peak {
        lo -= 1.0;
        if lo < c - 200.0 {
            break;
        }
    }
    while g(hi)?.abs() > 1e-17 * peak {
        hi += 1.0;
        if hi > c + 200.0 {
            break;
        }
    }
    let n = ((hi - lo) * 2.0).ceil() as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    Ok(try_integrate_panels(g, &breaks, q.abs_tol, q.rel_tol, q.max_subdivisions + n)?.value)
}
