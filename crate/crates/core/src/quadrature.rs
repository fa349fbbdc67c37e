//! Adaptive Gauss-Kronrod integration and summation helpers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerances and truncation for every numerical integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper truncation of the outer integral in the m-function. `None` picks
    /// it from the decay of the integrand.
    pub u_max: Option<f64>,
    pub max_subdivisions: usize,
    /// Smallest `y = 2ν²t` accepted by the finite-time routines.
    pub y_floor: f64,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let q = Self { abs_tol, rel_tol, max_subdivisions, ..Self::default() };
        q.validate()?;
        Ok(q)
    }

    pub fn with_u_max(mut self, u_max: f64) -> Result<Self> {
        self.u_max = Some(u_max);
        self.validate()?;
        Ok(self)
    }

    pub fn with_y_floor(mut self, y_floor: f64) -> Result<Self> {
        self.y_floor = y_floor;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !(tol > 0.0 && tol <= 1e-4) {
                return Err(domain(format!("{name} must lie in (0, 1e-4], got {tol}")));
            }
        }
        if let Some(u) = self.u_max {
            if !(u > 0.0 && u.is_finite()) {
                return Err(domain(format!("u_max must be positive, got {u}")));
            }
        }
        if self.max_subdivisions < 10 {
            return Err(domain(format!("max_subdivisions must be at least 10, got {}", self.max_subdivisions)));
        }
        if !(self.y_floor > 0.0) {
            return Err(domain(format!("y_floor must be positive, got {}", self.y_floor)));
        }
        Ok(())
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, u_max: None, max_subdivisions: 4000, y_floor: 0.02 }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the odd entries of XGK
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// One 21-point Kronrod panel with the embedded 10-point Gauss estimate.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_panels: usize) -> Result<Integral> {
    integrate_panels(f, &[a, b], abs_tol, rel_tol, max_panels)
}

/// Adaptive integration over consecutive `breaks`, refining globally by
/// largest error. The final sum is taken pairwise in position order.
pub fn integrate_panels<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    if breaks.len() < 2 {
        return Err(domain("integration needs at least two break points"));
    }
    if breaks.iter().any(|x| !x.is_finite()) {
        return Err(domain("integration limits must be finite"));
    }
    let mut heap = BinaryHeap::with_capacity(breaks.len() + 16);
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        let (value, error) = gauss_kronrod(&mut f, w[0], w[1]);
        total += value;
        total_err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    let budget = max_panels.max(breaks.len() - 1);
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(domain("integrand produced a non-finite value"));
        }
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= budget {
            return Err(Error::NonConvergence { what: "adaptive quadrature", iterations: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point; accept it
            heap.push(Panel { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gauss_kronrod(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let error = panels.iter().map(|p| p.error).sum();
    Ok(Integral { value: pairwise_sum(&values), error, panels: panels.len() })
}

/// [`integrate_panels`] for an integrand that can fail. The first error
/// raised by `f` aborts the integration and is returned as is.
pub fn try_integrate_panels<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    let mut failure: Option<Error> = None;
    let out = integrate_panels(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            match f(x) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        breaks,
        abs_tol,
        rel_tol,
        max_panels,
    );
    match failure {
        Some(e) => Err(e),
        None => out,
    }
}

/// `∫ exp(ln_f(s)) ds` over the real line, kept in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    /// Logarithm of the integral; `-inf` when the integrand vanished everywhere scanned.
    pub ln_value: f64,
    pub rel_error: f64,
    /// Range actually integrated.
    pub lo: f64,
    pub hi: f64,
    /// A scan hit its step cap before the integrand had decayed.
    pub truncated: bool,
    pub evaluations: usize,
}

impl LogIntegral {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Integrates `exp(ln_f)` for a single-humped log-integrand.
///
/// Scans outward from `center` in steps of `step` until `ln_f` has fallen
/// `drop` below its running maximum on both sides, then integrates the
/// integrand divided by its maximum, so that results far below the smallest
/// double are returned accurately through `ln_value`.
pub fn integrate_exp<F: FnMut(f64) -> Result<f64>>(
    mut ln_f: F,
    center: f64,
    step: f64,
    drop: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<LogIntegral> {
    const MAX_STEPS: usize = 400;
    let mut evaluations = 0usize;
    let mut eval = |s: f64, n: &mut usize| -> Result<f64> {
        *n += 1;
        let v = ln_f(s)?;
        if v.is_nan() {
            return Err(domain(format!("log-integrand is NaN at {s}")));
        }
        Ok(v)
    };
    let mid = eval(center, &mut evaluations)?;
    let mut peak = mid;
    let mut samples = vec![(center, mid)];
    let mut truncated = false;
    for dir in [1.0, -1.0] {
        let mut prev = mid;
        let mut k = 1;
        loop {
            let s = center + dir * step * k as f64;
            let l = eval(s, &mut evaluations)?;
            samples.push((s, l));
            peak = peak.max(l);
            if peak.is_finite() && l < peak - drop && l <= prev {
                break;
            }
            if k >= MAX_STEPS {
                truncated = true;
                break;
            }
            prev = l;
            k += 1;
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
    if peak == f64::NEG_INFINITY {
        return Ok(LogIntegral { ln_value: f64::NEG_INFINITY, rel_error: 0.0, lo, hi, truncated, evaluations });
    }
    let trapezoid: f64 = samples.windows(2).map(|w| 0.5 * step * ((w[0].1 - peak).exp() + (w[1].1 - peak).exp())).sum();
    let breaks: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let integral = try_integrate_panels(
        |s| Ok((eval(s, &mut evaluations)? - peak).exp()),
        &breaks,
        1e-3 * rel_tol * trapezoid,
        rel_tol,
        max_panels + breaks.len(),
    )?;
    if !(integral.value > 0.0) {
        return Err(domain("log-scaled integral is not positive"));
    }
    Ok(LogIntegral {
        ln_value: integral.value.ln() + peak,
        rel_error: integral.error / integral.value,
        lo,
        hi,
        truncated,
        evaluations,
    })
}

/// Cascade summation with a fixed reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1..=8 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
