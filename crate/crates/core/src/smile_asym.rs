//! Small-strike wing of the implied volatility smile.
//!
//! Log-strikes are `k = log(K / x0)` throughout, so the wing expansion sees
//! strikes in forward units.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pricing::smile_density;
use crate::special_fn::norm_quantile;

/// Samples with `k` above this are not tested against the slope bound.
pub const LEE_K_MAX: f64 = -2.0;

/// Width in log-strike of the linear blend of [`regularize_left_wing`].
pub const BLEND_WIDTH: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WingSource {
    Model,
    Dmhj,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub k: f64,
    pub vol: f64,
    pub source: WingSource,
}

/// Implied vols at one maturity, interpolated by a cubic spline with
/// parabolic end segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmileCurve {
    pub maturity: f64,
    pub points: Vec<SmilePoint>,
    #[serde(skip)]
    second: Vec<f64>,
}

impl SmileCurve {
    pub fn new(maturity: f64, points: Vec<SmilePoint>) -> Result<Self> {
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(domain(format!("maturity must be positive, got {maturity}")));
        }
        if points.len() < 2 {
            return Err(domain("a smile needs at least two samples"));
        }
        if let Some(p) = points.iter().find(|p| !(p.vol > 0.0 && p.vol.is_finite() && p.k.is_finite())) {
            return Err(domain(format!("invalid sample (k = {}, vol = {})", p.k, p.vol)));
        }
        if points.windows(2).any(|w| w[1].k <= w[0].k) {
            return Err(domain("log-strikes must be strictly increasing"));
        }
        let second = spline_second_derivatives(&points);
        Ok(Self { maturity, points, second })
    }

    /// Samples `vol(k)` on a grid.
    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(maturity: f64, ks: &[f64], mut vol: F, source: WingSource) -> Result<Self> {
        let points = ks.iter().map(|&k| Ok(SmilePoint { k, vol: vol(k)?, source })).collect::<Result<Vec<_>>>()?;
        Self::new(maturity, points)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].k, self.points[self.points.len() - 1].k)
    }

    pub fn vol(&self, k: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(k >= lo && k <= hi) {
            return Err(domain(format!("log-strike {k} outside the smile domain [{lo}, {hi}]")));
        }
        let i = self.points.partition_point(|p| p.k <= k).clamp(1, self.points.len() - 1);
        let (a, b) = (&self.points[i - 1], &self.points[i]);
        let h = b.k - a.k;
        let s = (k - a.k) / h;
        let r = 1.0 - s;
        Ok(r * a.vol + s * b.vol + h * h / 6.0 * ((r * r * r - r) * self.second[i - 1] + (s * s * s - s) * self.second[i]))
    }
}

fn spline_second_derivatives(points: &[SmilePoint]) -> Vec<f64> {
    let n = points.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations; the end values are tied to
    // their neighbours, which keeps the spline exact on quadratics
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = points[i].k - points[i - 1].k;
        let h1 = points[i + 1].k - points[i].k;
        let rhs = 6.0 * ((points[i + 1].vol - points[i].vol) / h1 - (points[i].vol - points[i - 1].vol) / h0);
        let mut diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
        if i == 1 {
            diag += h0;
        }
        if i == n - 2 {
            diag += h1;
        }
        c[i] = h1 / diag;
        d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    m[n - 2] = d[n - 2];
    for i in (1..n - 2).rev() {
        m[i] = d[i] - c[i] * m[i + 1];
    }
    m[0] = m[1];
    m[n - 1] = m[n - 2];
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WingOrder {
    Order1,
    Order2,
    Order4,
}

/// Mass-driven small-strike expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingExpansion {
    pub mass: f64,
    pub maturity: f64,
    pub order: WingOrder,
}

impl WingExpansion {
    pub fn new(mass: f64, maturity: f64, order: WingOrder) -> Result<Self> {
        if !(mass > 0.0 && mass < 1.0) {
            return Err(domain(format!("mass must lie in (0, 1), got {mass}")));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(domain(format!("maturity must be positive, got {maturity}")));
        }
        Ok(Self { mass, maturity, order })
    }

    /// The four terms of the expansion at forward-normalized strike `K`.
    pub fn terms(&self, strike: f64) -> Result<[f64; 4]> {
        if !(strike > 0.0 && strike < 1.0) {
            return Err(domain(format!("wing expansion needs 0 < K < 1, got {strike}")));
        }
        let l = -strike.ln();
        let t = self.maturity;
        let q = norm_quantile(self.mass)?;
        Ok([
            (2.0 * l / t).sqrt(),
            q / t.sqrt(),
            (q * q + 2.0) / (2.0 * (2.0 * t * l).sqrt()),
            q / (4.0 * l * t.sqrt()),
        ])
    }
}

/// Implied vol from the first one, two or four terms of the wing expansion.
pub fn dmhj_vol(w: &WingExpansion, strike: f64) -> Result<f64> {
    let terms = w.terms(strike)?;
    let n = match w.order {
        WingOrder::Order1 => 1,
        WingOrder::Order2 => 2,
        WingOrder::Order4 => 4,
    };
    let v: f64 = terms[..n].iter().sum();
    if v <= 0.0 {
        return Err(Error::NonpositiveVol(v));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeeSample {
    pub k: f64,
    pub vol: f64,
    /// `I √(T / |k|)`, at most `√2` in the limit `k → -∞`.
    pub ratio: f64,
    pub violated: bool,
}

/// `I √(T/|k|)` for a sample with negative log-strike.
pub fn lee_ratio(vol: f64, k: f64, maturity: f64) -> f64 {
    vol * (maturity / k.abs()).sqrt()
}

/// Tests every sample with `k <= k_max` (and `k < 0`) against `√2`.
pub fn lee_bound_check(curve: &SmileCurve, k_max: f64) -> Vec<LeeSample> {
    curve
        .points
        .iter()
        .filter(|p| p.k < 0.0 && p.k <= k_max)
        .map(|p| {
            let ratio = lee_ratio(p.vol, p.k, curve.maturity);
            LeeSample { k: p.k, vol: p.vol, ratio, violated: ratio > SQRT_2 }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpliceConfig {
    pub lee_k_max: f64,
    /// Smallest blend window, in log-strike.
    pub blend_width: f64,
}

impl Default for SpliceConfig {
    fn default() -> Self {
        Self { lee_k_max: LEE_K_MAX, blend_width: BLEND_WIDTH }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedSmile {
    pub curve: SmileCurve,
    /// Largest log-strike where the input had negative density or broke the
    /// slope bound; `None` when neither happened and the input is returned.
    pub crossover: Option<f64>,
    /// Width of the blend window actually used; zero when nothing was spliced.
    pub blend_width: f64,
}

impl RegularizedSmile {
    pub fn violation_found(&self) -> bool {
        self.crossover.is_some()
    }
}

/// `6s⁵ - 15s⁴ + 10s³` on `[0, 1]`, flat to second order at both ends.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (6.0 * s - 15.0))
}

/// Replaces the left wing of `model` by the wing expansion.
///
/// The crossover `k*` is the largest negative sample log-strike where the
/// model density is negative or the slope bound fails. Below `k*` the
/// expansion is used; on `[k*, k* + width]` the two are mixed with a
/// weight that moves from 0 to 1 with two vanishing derivatives at each end,
/// so the density sees no kink; above, the model is kept.
///
/// `width` starts at `cfg.blend_width` and grows in steps of it until no
/// adjacent gap of the result exceeds twice the larger of the two inputs'
/// gaps there, or a wider window would reach the end of the grid or a strike
/// where the expansion is undefined.
pub fn regularize_left_wing(model: &SmileCurve, w: &WingExpansion, cfg: &SpliceConfig) -> Result<RegularizedSmile> {
    if !(cfg.blend_width > 0.0) {
        return Err(domain(format!("blend width must be positive, got {}", cfg.blend_width)));
    }
    let lee = lee_bound_check(model, cfg.lee_k_max).into_iter().filter(|s| s.violated).map(|s| s.k);
    let negative = model.points.iter().filter(|p| p.k < 0.0).filter_map(|p| match smile_density(model, p.k) {
        Ok(d) if d < 0.0 => Some(p.k),
        _ => None,
    });
    let crossover = lee.chain(negative).fold(None, |acc: Option<f64>, k| Some(acc.map_or(k, |a| a.max(k))));
    let Some(k_star) = crossover else {
        return Ok(RegularizedSmile { curve: model.clone(), crossover: None, blend_width: 0.0 });
    };
    if k_star + cfg.blend_width >= 0.0 {
        return Err(domain(format!("crossover {k_star} leaves no room for the blend below the forward")));
    }
    let wing: Vec<Option<f64>> = model.points.iter().map(|p| dmhj_vol(w, p.k.exp()).ok()).collect();
    let hi = model.domain().1;
    let mut width = cfg.blend_width;
    loop {
        let points = model
            .points
            .iter()
            .zip(&wing)
            .map(|(p, wing)| {
                if p.k >= k_star + width {
                    return Ok(*p);
                }
                let wing = wing.ok_or_else(|| domain(format!("wing expansion undefined at k = {}", p.k)))?;
                let lambda = smoothstep((p.k - k_star) / width);
                Ok(SmilePoint { k: p.k, vol: (1.0 - lambda) * wing + lambda * p.vol, source: WingSource::Dmhj })
            })
            .collect::<Result<Vec<_>>>()?;
        let next = k_star + width + cfg.blend_width;
        let blocked = next >= hi || model.points.iter().zip(&wing).any(|(p, v)| p.k < next && v.is_none());
        if blocked || splice_is_continuous(model, &wing, &points) {
            return Ok(RegularizedSmile { curve: SmileCurve::new(model.maturity, points)?, crossover, blend_width: width });
        }
        width += cfg.blend_width;
    }
}

fn splice_is_continuous(model: &SmileCurve, wing: &[Option<f64>], out: &[SmilePoint]) -> bool {
    (0..out.len() - 1).all(|i| {
        let input = (model.points[i + 1].vol - model.points[i].vol).abs();
        let expansion = match (wing[i], wing[i + 1]) {
            (Some(a), Some(b)) => (b - a).abs(),
            _ => 0.0,
        };
        (out[i + 1].vol - out[i].vol).abs() <= 2.0 * input.max(expansion)
    })
}
