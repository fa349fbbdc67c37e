//! Call prices and implied volatilities.
//!
//! Rates are zero throughout, so prices are forward prices and the
//! Black-Scholes formula is Black's formula on the forward.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::SabrParams;
use crate::quadrature::{integrate, QuadratureSpec};
use crate::smile_asym::SmileCurve;
use crate::special_fn::{norm_cdf, norm_pdf};

/// Vol bracket searched by [`implied_vol`].
pub const VOL_BRACKET: (f64, f64) = (1e-6, 10.0);

/// Log-strike step of the finite differences in [`smile_density`].
pub const DENSITY_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub strike: f64,
    pub maturity: f64,
    pub forward: f64,
    pub price: f64,
    pub implied_vol: f64,
}

impl OptionQuote {
    /// Quote for a call price, with its implied vol.
    pub fn from_price(forward: f64, strike: f64, maturity: f64, price: f64) -> Result<Self> {
        let implied_vol = implied_vol(price, forward, strike, maturity)?;
        Ok(Self { strike, maturity, forward, price, implied_vol })
    }
}

fn check_contract(forward: f64, strike: f64, t: f64) -> Result<()> {
    if !(forward > 0.0 && forward.is_finite()) {
        return Err(domain(format!("forward must be positive, got {forward}")));
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(domain(format!("strike must be positive, got {strike}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("maturity must be positive, got {t}")));
    }
    Ok(())
}

/// Price of the out-of-the-money option (call above the forward, put below).
fn otm_price(f: f64, k: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let x = (f / k).ln();
    let d1 = x / s + 0.5 * s;
    let d2 = d1 - s;
    if k >= f {
        f * norm_cdf(d1) - k * norm_cdf(d2)
    } else {
        k * norm_cdf(-d2) - f * norm_cdf(-d1)
    }
    .max(0.0)
}

pub fn bs_call(forward: f64, strike: f64, t: f64, vol: f64) -> Result<f64> {
    check_contract(forward, strike, t)?;
    if !(vol >= 0.0 && vol.is_finite()) {
        return Err(domain(format!("vol must be nonnegative, got {vol}")));
    }
    let otm = otm_price(forward, strike, vol * t.sqrt());
    Ok(otm + (forward - strike).max(0.0))
}

pub fn bs_put(forward: f64, strike: f64, t: f64, vol: f64) -> Result<f64> {
    Ok(bs_call(forward, strike, t, vol)? - forward + strike)
}

/// Black-Scholes vol matching a call price.
///
/// Works on the out-of-the-money part of the price: Newton on its logarithm,
/// falling back to geometric bisection whenever a step leaves the current
/// bracket. Returns 0 for a price equal to intrinsic value and
/// [`Error::PriceOutOfBounds`] when the price cannot be matched by a vol in
/// [`VOL_BRACKET`].
pub fn implied_vol(price: f64, forward: f64, strike: f64, t: f64) -> Result<f64> {
    check_contract(forward, strike, t)?;
    let intrinsic = (forward - strike).max(0.0);
    let slack = 4.0 * f64::EPSILON * forward;
    if !(price.is_finite() && price >= intrinsic - slack && price <= forward + slack) {
        return Err(Error::PriceOutOfBounds { price, lower: intrinsic, upper: forward });
    }
    let target = price - intrinsic;
    // rounding of an in-the-money price leaves a few ulps of the forward
    if target <= 0.0 || (intrinsic > 0.0 && target <= slack) {
        return Ok(0.0);
    }
    let sqrt_t = t.sqrt();
    let (mut lo, mut hi) = VOL_BRACKET;
    let p_lo = otm_price(forward, strike, lo * sqrt_t);
    let p_hi = otm_price(forward, strike, hi * sqrt_t);
    if target < p_lo || target > p_hi {
        return Err(Error::PriceOutOfBounds { price, lower: intrinsic + p_lo, upper: intrinsic + p_hi });
    }
    let ln_target = target.ln();
    let x = (forward / strike).ln();
    // start from the inflexion point of the price in vol, where Newton is safest
    let mut vol = ((2.0 * x.abs()).sqrt() / sqrt_t).clamp(lo, hi).max(0.2_f64.min(hi));
    for _ in 0..200 {
        let s = vol * sqrt_t;
        let p = otm_price(forward, strike, s);
        let h = if p > 0.0 { p.ln() - ln_target } else { f64::NEG_INFINITY };
        if h == 0.0 {
            return Ok(vol);
        }
        if h < 0.0 {
            lo = vol;
        } else {
            hi = vol;
        }
        let vega = forward * norm_pdf(x / s + 0.5 * s) * sqrt_t;
        let newton = if h.is_finite() && vega > 0.0 { vol - h * p / vega } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { (lo * hi).sqrt() };
        if (next - vol).abs() <= 4.0 * f64::EPSILON * vol || hi - lo <= 4.0 * f64::EPSILON * vol {
            return Ok(next);
        }
        vol = next;
    }
    Err(Error::NonConvergence { what: "implied vol", iterations: 200 })
}

/// Strike-dependent constants of the exact uncorrelated call price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntonovContext {
    pub eta: f64,
    pub q: f64,
    pub q0: f64,
    pub s_minus: f64,
    pub s_plus: f64,
}

impl AntonovContext {
    pub fn new(p: &SabrParams, strike: f64) -> Result<Self> {
        p.require_uncorrelated()?;
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(domain(format!("strike must be positive, got {strike}")));
        }
        let omb = 1.0 - p.beta;
        let eta = 1.0 / (2.0 * omb);
        let q = strike.powf(omb) / omb;
        let q0 = p.x0.powf(omb) / omb;
        let s_minus = (p.nu / p.y0 * (q - q0).abs()).asinh();
        let s_plus = (p.nu / p.y0 * (q + q0)).asinh();
        Ok(Self { eta, q, q0, s_minus, s_plus })
    }

    /// Angle on `[s_-, s_+]`, rising from 0 to π.
    pub fn phi(&self, s: f64) -> f64 {
        let num = (s - self.s_minus).sinh() * (s + self.s_minus).sinh();
        let den = (self.s_plus - s).sinh() * (self.s_plus + s).sinh();
        2.0 * (num / den).max(0.0).sqrt().atan()
    }

    /// Decay exponent on `[s_+, ∞)`, zero at `s_+`.
    pub fn psi(&self, s: f64) -> f64 {
        let num = (s - self.s_plus).sinh() * (s + self.s_plus).sinh();
        let den = (s - self.s_minus).sinh() * (s + self.s_minus).sinh();
        2.0 * (num / den).clamp(0.0, 1.0).sqrt().atanh()
    }
}

/// `ln sinh(x)` for `x > 0` without overflow.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        let e = (-2.0 * x).exp();
        x - std::f64::consts::LN_2 + (-e).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Point past which `e^{u/2 - u²/(2t)}` has dropped by `e^{-40}` from its
/// value at `max(a, t/2)`.
fn decay_limit(a: f64, t: f64) -> f64 {
    a.max(0.5 * t) + (80.0 * t).sqrt()
}

/// `G(t, s) = 2e^{-t/8} / (t^{3/2} √π) ∫_s^∞ u √(cosh u - cosh s) e^{-u²/(2t)} du`.
///
/// Integrated in `w` with `u = s + w²`, which removes the square-root zero at
/// the lower end; `cosh u - cosh s = 2 sinh(s + w²/2) sinh(w²/2)`.
pub fn g_function(t: f64, s: f64, rel_tol: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite() && s >= 0.0 && s.is_finite()) {
        return Err(domain(format!("G needs t > 0 and s >= 0, got ({t}, {s})")));
    }
    let ln_pre = std::f64::consts::LN_2 - t / 8.0 - 1.5 * t.ln() - 0.5 * PI.ln();
    let w_max = (decay_limit(s, t) - s).max(1.0).sqrt();
    let integrand = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let w2 = w * w;
        let u = s + w2;
        let ln_root = 0.5 * (std::f64::consts::LN_2 + ln_sinh(s + 0.5 * w2) + ln_sinh(0.5 * w2));
        2.0 * w * u * (ln_pre + ln_root - u * u / (2.0 * t)).exp()
    };
    Ok(integrate(integrand, 0.0, w_max, 0.0, rel_tol, 2000)?.value)
}

/// Call price `E(X_T - K)_+` of the uncorrelated model by double quadrature.
///
/// Both outer integrals are mapped so that the square-root behaviour of
/// `φ` at `s_±` and of `ψ` at `s_+` becomes smooth. At `K = x0`, `s_- = 0`
/// and the first integrand has a finite limit at the origin that the
/// quadrature never samples.
pub fn antonov_call(p: &SabrParams, strike: f64, t: f64, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("maturity must be positive, got {t}")));
    }
    if strike == 0.0 {
        // the forward is a nonnegative martingale
        p.require_uncorrelated()?;
        return Ok(p.x0);
    }
    let ctx = AntonovContext::new(p, strike)?;
    let tau = p.nu * p.nu * t;
    let g_tol = (q.rel_tol * 1e-2).max(1e-13);
    let mut failure = None;
    let mut g = |s: f64| match g_function(tau, s, g_tol) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };

    let (sm, sp) = (ctx.s_minus, ctx.s_plus);
    let half = 0.5 * (sp - sm);
    let first = if half > 0.0 {
        // s = s_- + half (1 - cos θ)
        integrate(
            |th: f64| {
                let s = sm + half * (1.0 - th.cos());
                if s <= 0.0 {
                    return 0.0;
                }
                (ctx.eta * ctx.phi(s)).sin() / s.sinh() * g(s) * half * th.sin()
            },
            0.0,
            PI,
            0.0,
            q.rel_tol,
            q.max_subdivisions,
        )?
        .value
    } else {
        0.0
    };
    let weight = (ctx.eta * PI).sin();
    let second = if weight.abs() > 1e-15 {
        // s = s_+ + v²
        let v_max = (decay_limit(sp, tau) - sp).sqrt();
        integrate(
            |v: f64| {
                let s = sp + v * v;
                (-ctx.eta * ctx.psi(s)).exp() / s.sinh() * g(s) * 2.0 * v
            },
            0.0,
            v_max,
            0.0,
            q.rel_tol,
            q.max_subdivisions,
        )?
        .value
    } else {
        0.0
    };
    if let Some(e) = failure {
        return Err(e);
    }
    let price = (p.x0 - strike).max(0.0) + 2.0 * (p.x0 * strike).sqrt() / PI * (first + weight * second);
    if !price.is_finite() {
        return Err(domain("call price is not finite"));
    }
    Ok(price)
}

/// Implied vol expansion of Obłój (2008, "Fine-tune your smile: correction
/// to Hagan et al."): `σ = I⁰ (1 + I¹ T)` with
///
/// ```text
/// z  = ν (x0^{1-β} - K^{1-β}) / (α (1-β))          (ν log(x0/K)/α when β = 1)
/// I⁰ = ν log(x0/K) / x(z),  x(z) = log((√(1 - 2ρz + z²) + z - ρ) / (1 - ρ))
/// I¹ = (1-β)² α² / (24 (x0 K)^{1-β}) + ρνβα / (4 (x0 K)^{(1-β)/2}) + (2 - 3ρ²) ν² / 24
/// ```
///
/// where `α = y0`. The removable singularities at `K = x0` and `ν = 0` are
/// evaluated through their limits, so `ν = 0, β = 1` gives `σ = y0`.
pub fn obloj_vol(p: &SabrParams, strike: f64, t: f64) -> Result<f64> {
    p.validate()?;
    check_contract(p.x0, strike, t)?;
    let (f, k, a, nu, b, rho) = (p.x0, strike, p.y0, p.nu, p.beta, p.rho);
    let omb = 1.0 - b;
    let lfk = (f / k).ln();
    // ν log(f/K) / z = α / D with D = (f^{1-β} - K^{1-β}) / ((1-β) log(f/K))
    let d = k.powf(omb) * exprel(omb * lfk);
    let z = nu * lfk * d / a;
    let i0 = a / d * z_over_x(z, rho);
    let fk = f * k;
    let i1 = omb * omb * a * a / (24.0 * fk.powf(omb)) + rho * nu * b * a / (4.0 * fk.powf(0.5 * omb)) + (2.0 - 3.0 * rho * rho) * nu * nu / 24.0;
    Ok(i0 * (1.0 + i1 * t))
}

/// `(e^x - 1) / x`.
fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// `z / x(z)`, using the Legendre expansion of `x(z)` near the origin.
fn z_over_x(z: f64, rho: f64) -> f64 {
    if z.abs() < 1e-3 {
        let x_over_z = 1.0 + rho * z / 2.0 + (3.0 * rho * rho - 1.0) * z * z / 6.0 + (5.0 * rho.powi(3) - 3.0 * rho) * z.powi(3) / 8.0;
        return 1.0 / x_over_z;
    }
    let root = (1.0 - 2.0 * rho * z + z * z).sqrt();
    let arg = if z - rho >= 0.0 { root + z - rho } else { (1.0 - rho * rho) / (root - z + rho) };
    z / (arg / (1.0 - rho)).ln()
}

/// Density of the log-moneyness `log(X_T / x0)` implied by a smile.
///
/// With total variance `w = I² T` and `d₋ = -k/√w - √w/2`,
///
/// ```text
/// p(k) = g(k) e^{-d₋²/2} / √(2π w),
/// g    = (1 - k w'/(2w))² - (w'²/4)(1/w + 1/4) + w''/2,
/// ```
///
/// with derivatives from central differences of step [`DENSITY_STEP`] on the
/// spline through the curve's samples. A negative value signals arbitrage.
pub fn smile_density(curve: &SmileCurve, k: f64) -> Result<f64> {
    let h = DENSITY_STEP;
    let (lo, hi) = curve.domain();
    if !(k - h >= lo && k + h <= hi) {
        return Err(Error::StencilOutOfDomain { k, lo, hi });
    }
    let t = curve.maturity;
    let w = |k: f64| curve.vol(k).map(|v| v * v * t);
    let (wm, w0, wp) = (w(k - h)?, w(k)?, w(k + h)?);
    if !(w0 > 0.0) {
        return Err(domain(format!("total variance must be positive at k = {k}")));
    }
    let w1 = (wp - wm) / (2.0 * h);
    let w2 = (wp - 2.0 * w0 + wm) / (h * h);
    let g = (1.0 - k * w1 / (2.0 * w0)).powi(2) - 0.25 * w1 * w1 * (1.0 / w0 + 0.25) + 0.5 * w2;
    let sw = w0.sqrt();
    let dm = -k / sw - 0.5 * sw;
    Ok(g * (-0.5 * dm * dm).exp() / (2.0 * PI * w0).sqrt())
}
