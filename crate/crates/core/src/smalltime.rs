//! Small-time saddlepoint asymptotics of the integrated-variance law and of
//! the mass at zero.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cev::ln_cev_mass_at_zero;
use crate::error::{domain, Error, Result};
use crate::mass::{MassMethod, MassResult};
use crate::params::SabrParams;
use crate::quadrature::{integrate_exp, QuadratureSpec};
use crate::timechange::MU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlepointContext {
    pub y: f64,
    pub z: f64,
    pub mu: f64,
    pub alpha: f64,
}

impl SaddlepointContext {
    pub fn new(y: f64, z: f64) -> Result<Self> {
        if !(y > 0.0 && y.is_finite()) || !(z > 0.0 && z.is_finite()) {
            return Err(domain(format!("saddlepoint needs y > 0 and z > 0, got y = {y}, z = {z}")));
        }
        Ok(Self { y, z, mu: MU, alpha: 1.0 + z.ln() - 2f64.ln() })
    }

    /// Context for the integrated variance of `p` over `[0, t]` at level `r`.
    pub fn for_variance(p: &SabrParams, t: f64, r: f64) -> Result<Self> {
        let nu2 = p.nu * p.nu;
        Self::new(2.0 * nu2 * t, p.y0 * p.y0 / (4.0 * nu2 * r))
    }

    /// Left side of the saddlepoint equation and the sum of its term magnitudes.
    pub fn residual(&self, u: f64) -> (f64, f64) {
        let su = u.sqrt();
        let terms = [2.0 * self.mu - 1.0, 4.0 * u * self.y, 2.0 * (0.5 * self.z).ln() * su, -su * u.ln()];
        (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
    }

    fn residual_derivative(&self, u: f64) -> f64 {
        let su = u.sqrt();
        4.0 * self.y + (0.5 * self.z).ln() / su - (u.ln() + 2.0) / (2.0 * su)
    }

    /// Leading small-`y` behaviour of the root, used to place the search.
    pub fn bootstrap_u(&self) -> f64 {
        let ly = self.y.ln();
        ly * ly / (4.0 * self.y * self.y) * (1.0 - 2.0 * (-ly).ln() / ly + (self.z * self.z).ln() / ly)
    }

    pub fn curvature(&self, u: f64) -> f64 {
        let u32 = u.powf(1.5);
        u.ln() / (16.0 * u32) - self.alpha / (8.0 * u32) + (1.0 - 2.0 * self.mu) / (8.0 * u * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlepointResult {
    /// Largest positive root.
    pub u_y: f64,
    /// Curvature `M_y` at the root.
    pub m_y: f64,
    pub residual: f64,
    /// Sum of term magnitudes at the root; `residual / scale` is the relative residual.
    pub scale: f64,
    pub bootstrap_u: f64,
}

const SCAN_POINTS: usize = 256;
const SCAN_SPAN: f64 = 1e3;

/// Largest root of the saddlepoint equation.
pub fn solve_saddlepoint(ctx: &SaddlepointContext) -> Result<SaddlepointResult> {
    solve_saddlepoint_near(ctx, None)
}

/// As [`solve_saddlepoint`], centring the search on `guess` when one is given.
pub fn solve_saddlepoint_near(ctx: &SaddlepointContext, guess: Option<f64>) -> Result<SaddlepointResult> {
    let bootstrap = ctx.bootstrap_u();
    let center = match guess {
        Some(g) if g > 0.0 && g.is_finite() => g,
        _ if bootstrap > 0.0 && bootstrap.is_finite() => bootstrap,
        _ => 1.0 / (ctx.y * ctx.y),
    };
    let mut lo = (center / SCAN_SPAN).ln();
    let mut hi = (center * SCAN_SPAN).ln();
    // the residual is negative at 0 and positive at infinity; slide the
    // window until it straddles the last crossing
    for _ in 0..40 {
        if ctx.residual(hi.exp()).0 < 0.0 {
            lo = hi - 1.0;
            hi += SCAN_SPAN.ln();
        } else if ctx.residual(lo.exp()).0 >= 0.0 && ctx.residual((lo + 1e-3).exp()).0 >= 0.0 && lo > -700.0 {
            lo -= SCAN_SPAN.ln();
        } else {
            break;
        }
    }
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| (lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).exp()).collect();
    let signs: Vec<f64> = grid.iter().map(|&u| ctx.residual(u).0).collect();
    let bracket = (1..SCAN_POINTS).rev().find(|&i| signs[i - 1] < 0.0 && signs[i] >= 0.0);
    let Some(i) = bracket else {
        let profile: String = signs.iter().step_by(16).map(|s| if *s < 0.0 { '-' } else { '+' }).collect();
        return Err(Error::NoRoot { y: ctx.y, z: ctx.z, profile });
    };
    let (mut a, mut b) = (grid[i - 1], grid[i]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if ctx.residual(m).0 < 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-13 * b {
            break;
        }
    }
    let mut u = 0.5 * (a + b);
    for _ in 0..3 {
        let d = ctx.residual_derivative(u);
        let step = ctx.residual(u).0 / d;
        let next = u - step;
        if !(next > a && next < b) || !d.is_finite() {
            break;
        }
        u = next;
    }
    let (residual, scale) = ctx.residual(u);
    Ok(SaddlepointResult { u_y: u, m_y: ctx.curvature(u), residual, scale, bootstrap_u: bootstrap })
}

/// `ln` of the saddlepoint approximation of `m_y(μ, z)`.
pub fn ln_m_asymptotic(ctx: &SaddlepointContext, s: &SaddlepointResult) -> Result<f64> {
    if !(s.m_y > 0.0) {
        return Err(Error::CurvatureNonpositive(s.m_y));
    }
    let u = s.u_y;
    Ok(0.5 * ctx.z.ln() + (0.5 - ctx.mu) - (2.0 * PI).ln() + 0.5 * u.ln() * (ctx.mu - 0.5) - u * ctx.y + u.sqrt()
        + 0.5 * (PI / s.m_y).ln())
}

/// Saddlepoint approximation of `m_y(μ, z)` as `y → 0`.
pub fn m_asymptotic(ctx: &SaddlepointContext, s: &SaddlepointResult) -> Result<f64> {
    Ok(ln_m_asymptotic(ctx, s)?.exp())
}

/// Cruder closed-form estimate of `m_y(μ, z)` obtained by expanding the root
/// itself in `y`. Kept as a diagnostic; it is markedly less accurate than
/// [`m_asymptotic`].
pub fn m_closed_form_estimate(ctx: &SaddlepointContext) -> f64 {
    let ly = ctx.y.ln().abs();
    let y = ctx.y;
    let ln = 0.5 * ctx.z.ln() + ly.ln() - (2.0 * PI.sqrt()).ln() - ly * ly / (4.0 * y) + ly / (2.0 * y)
        + (0.5 - ctx.mu) * (1.0 - (ly / (2.0 * y)).ln())
        - 1.5 * y.ln();
    ln.exp()
}

/// `ln` of the small-time approximation of the density of `∫_0^t Y_s² ds` at `r`.
pub fn ln_density_smalltime(p: &SabrParams, t: f64, r: f64) -> Result<f64> {
    ln_density_smalltime_near(p, t, r, None).map(|(l, _)| l)
}

fn ln_density_smalltime_near(p: &SabrParams, t: f64, r: f64, guess: Option<f64>) -> Result<(f64, SaddlepointResult)> {
    p.require_uncorrelated()?;
    if !(t > 0.0) || !(r > 0.0) {
        return Err(domain(format!("need t > 0 and r > 0, got t = {t}, r = {r}")));
    }
    let ctx = SaddlepointContext::for_variance(p, t, r)?;
    let s = solve_saddlepoint_near(&ctx, guess)?;
    let ln_m = ln_m_asymptotic(&ctx, &s)?;
    // same change of variables as the exact density, with m replaced by its approximation
    let y02 = p.y0 * p.y0;
    let rt = r / y02;
    let ln_pre = 0.25 * 2f64.ln() + 0.5 * p.nu.ln() - 0.75 * rt.ln() - p.nu * p.nu * t / 8.0 - ctx.z - y02.ln();
    Ok((ln_pre + ln_m, s))
}

/// Small-time approximation of the density of `∫_0^t Y_s² ds` at `r`.
pub fn density_smalltime(p: &SabrParams, t: f64, r: f64) -> Result<f64> {
    Ok(ln_density_smalltime(p, t, r)?.exp())
}

/// Small-time approximation of `P(X_t = 0)`.
///
/// The saddlepoint is re-solved at every node, starting from the root found
/// at the previous one.
pub fn mass_smalltime(p: &SabrParams, t: f64, q: &QuadratureSpec) -> Result<MassResult> {
    p.require_uncorrelated()?;
    q.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("horizon must be positive, got {t}")));
    }
    let cev = p.cev();
    let mut previous: Option<f64> = None;
    let center = (p.vol().integrated_variance_mean(t)).ln();
    let r = integrate_exp(
        |s| {
            let r = s.exp();
            let lc = ln_cev_mass_at_zero(&cev, r)?.value;
            if lc == f64::NEG_INFINITY {
                return Ok(lc);
            }
            let (ld, sp) = ln_density_smalltime_near(p, t, r, previous)?;
            previous = Some(sp.u_y);
            Ok(lc + ld + s)
        },
        center,
        0.25,
        40.0,
        q.rel_tol,
        q.max_subdivisions,
    )?;
    let mut out = MassResult::from_ln(r.ln_value, MassMethod::SmallTimeAsymptotic);
    out.nodes_used = Some(r.evaluations);
    Ok(out)
}
