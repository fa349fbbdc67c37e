//! Path simulation with absorption at zero.
//!
//! `Y` is advanced with its exact lognormal transition and `X` with an Euler
//! type step on a grid of `steps_per_unit` steps per unit time. Absorption is
//! only checked on the grid, which misses crossings between grid points.
//!
//! Path `i` draws from a ChaCha8 stream selected by the seed and the path
//! index (the pair index under antithetics), so results do not depend on the
//! number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mass::{MassMethod, MassResult};
use crate::params::SabrParams;
use crate::quadrature::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// `X += Y X^β √dt W`, absorbed once the step lands at or below zero.
    EulerFullTruncation,
    /// Log-Euler step for `X`; absorbed when the plain Euler step would have
    /// crossed zero. Exact in distribution for `β = 1` given `Y`.
    LogEulerX,
}

/// Simulation settings. With `antithetic` set, paths are generated in mirrored
/// pairs and an odd `paths` count is rounded down to the nearest even number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub steps_per_unit: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(paths: usize, steps_per_unit: usize, seed: u64) -> Result<Self> {
        let c = Self { paths, steps_per_unit, seed, scheme: Scheme::EulerFullTruncation, antithetic: false };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidConfig("paths must be at least 1".into()));
        }
        if self.steps_per_unit == 0 {
            return Err(Error::InvalidConfig("steps per unit time must be at least 1".into()));
        }
        if self.antithetic && self.paths < 2 {
            return Err(Error::InvalidConfig("antithetic sampling needs at least 2 paths".into()));
        }
        Ok(())
    }
}

/// State of one path at each requested horizon.
#[derive(Debug, Clone, PartialEq)]
struct PathRecord {
    terminal: Vec<f64>,
}

fn time_grid(horizons: &[f64], steps_per_unit: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if horizons.is_empty() {
        return Err(domain("at least one horizon is needed"));
    }
    if let Some(t) = horizons.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(domain(format!("horizons must be positive, got {t}")));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("horizons must be strictly increasing"));
    }
    let n = steps_per_unit as f64;
    let last = horizons[horizons.len() - 1];
    let mut times: Vec<f64> = (1..).map(|j| j as f64 / n).take_while(|&t| t < last * (1.0 - 1e-12)).collect();
    times.extend_from_slice(horizons);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let marks = horizons
        .iter()
        .map(|h| times.iter().position(|t| (t - h).abs() <= 1e-12 * h).expect("horizon is on the grid"))
        .collect();
    let mut prev = 0.0;
    let steps = times
        .iter()
        .map(|&t| {
            let dt = t - prev;
            prev = t;
            dt
        })
        .collect();
    Ok((steps, marks))
}

fn simulate_pair(p: &SabrParams, steps: &[f64], marks: &[usize], cfg: &McConfig, pair: u64, twin: bool) -> [PathRecord; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(pair);
    let lanes = if twin { 2 } else { 1 };
    let mut x = [p.x0; 2];
    let mut y = [p.y0; 2];
    let mut out = [PathRecord { terminal: Vec::with_capacity(marks.len()) }, PathRecord { terminal: Vec::new() }];
    let rho_bar = (1.0 - p.rho * p.rho).sqrt();
    let mut next_mark = 0;
    for (i, &dt) in steps.iter().enumerate() {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let sq = dt.sqrt();
        for lane in 0..lanes {
            let sign = if lane == 0 { 1.0 } else { -1.0 };
            let (zy, zx) = (sign * z1, sign * (p.rho * z1 + rho_bar * z2));
            if x[lane] > 0.0 {
                x[lane] = step_x(cfg.scheme, x[lane], y[lane], p.beta, sq * zx, dt);
            }
            debug_assert!(x[lane] >= 0.0);
            y[lane] *= (p.nu * sq * zy - 0.5 * p.nu * p.nu * dt).exp();
        }
        if next_mark < marks.len() && marks[next_mark] == i {
            for lane in 0..lanes {
                out[lane].terminal.push(x[lane]);
            }
            next_mark += 1;
        }
    }
    out
}

fn step_x(scheme: Scheme, x: f64, y: f64, beta: f64, dw: f64, dt: f64) -> f64 {
    let diffusion = y * x.powf(beta);
    let euler = x + diffusion * dw;
    match scheme {
        Scheme::EulerFullTruncation => euler.max(0.0),
        Scheme::LogEulerX => {
            if beta < 1.0 && euler <= 0.0 {
                return 0.0;
            }
            let s = diffusion / x;
            x * (s * dw - 0.5 * s * s * dt).exp()
        }
    }
}

fn simulate(p: &SabrParams, horizons: &[f64], cfg: &McConfig) -> Result<Vec<PathRecord>> {
    p.validate()?;
    cfg.validate()?;
    let (steps, marks) = time_grid(horizons, cfg.steps_per_unit)?;
    let paths = if cfg.antithetic {
        let pairs = cfg.paths / 2;
        (0..pairs)
            .into_par_iter()
            .flat_map_iter(|j| simulate_pair(p, &steps, &marks, cfg, j as u64, true))
            .collect()
    } else {
        (0..cfg.paths)
            .into_par_iter()
            .map(|j| {
                let [a, _] = simulate_pair(p, &steps, &marks, cfg, j as u64, false);
                a
            })
            .collect()
    };
    Ok(paths)
}

/// `X_T` of every path, in path order.
pub fn terminal_values(p: &SabrParams, t: f64, cfg: &McConfig) -> Result<Vec<f64>> {
    Ok(simulate(p, &[t], cfg)?.into_iter().map(|r| r.terminal[0]).collect())
}

fn mass_from_flags(absorbed: usize, m: usize) -> MassResult {
    let value = absorbed as f64 / m as f64;
    MassResult {
        error_estimate: Some(1.96 * (value * (1.0 - value) / m as f64).sqrt()),
        ..MassResult::new(value, MassMethod::MonteCarlo)
    }
}

/// Fraction of paths absorbed by `t`, with a 95% half-width as error.
pub fn simulate_mass(p: &SabrParams, t: f64, cfg: &McConfig) -> Result<MassResult> {
    Ok(simulate_mass_horizons(p, &[t], cfg)?.remove(0))
}

/// [`simulate_mass`] at several horizons from the same paths.
pub fn simulate_mass_horizons(p: &SabrParams, horizons: &[f64], cfg: &McConfig) -> Result<Vec<MassResult>> {
    let paths = simulate(p, horizons, cfg)?;
    let m = paths.len();
    Ok((0..horizons.len()).map(|h| mass_from_flags(paths.iter().filter(|r| r.terminal[h] == 0.0).count(), m)).collect())
}

/// [`simulate_mass`] at `steps_per_unit`, twice that, four times, and so on.
pub fn step_refinement(p: &SabrParams, t: f64, cfg: &McConfig, levels: usize) -> Result<Vec<(usize, MassResult)>> {
    (0..levels)
        .map(|l| {
            let c = McConfig { steps_per_unit: cfg.steps_per_unit << l, ..*cfg };
            Ok((c.steps_per_unit, simulate_mass(p, t, &c)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub strike: f64,
    pub price: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Sample mean of `X_T`, equal to `x0` up to noise for a martingale.
    pub mean_terminal: f64,
    pub terminal_std_error: f64,
    pub paths: usize,
}

impl McPrice {
    pub fn martingale_ok(&self, x0: f64) -> bool {
        (self.mean_terminal - x0).abs() <= 3.0 * self.terminal_std_error
    }
}

/// Mean and standard error, averaging antithetic pairs first.
fn mean_and_error(xs: &[f64], antithetic: bool) -> (f64, f64) {
    let units: Vec<f64> = if antithetic { xs.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect() } else { xs.to_vec() };
    let n = units.len() as f64;
    let mean = pairwise_sum(&units) / n;
    if units.len() < 2 {
        return (mean, f64::NAN);
    }
    let dev: Vec<f64> = units.iter().map(|u| (u - mean) * (u - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

/// `E(X_T - K)_+` over simulated paths, with a 95% interval.
pub fn simulate_call(p: &SabrParams, strike: f64, t: f64, cfg: &McConfig) -> Result<McPrice> {
    Ok(simulate_calls(p, &[strike], t, cfg)?.remove(0))
}

/// [`simulate_call`] for several strikes on the same paths.
pub fn simulate_calls(p: &SabrParams, strikes: &[f64], t: f64, cfg: &McConfig) -> Result<Vec<McPrice>> {
    if let Some(k) = strikes.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(domain(format!("strike must be nonnegative, got {k}")));
    }
    let xs = terminal_values(p, t, cfg)?;
    let (mean_terminal, terminal_std_error) = mean_and_error(&xs, cfg.antithetic);
    Ok(strikes
        .iter()
        .map(|&k| {
            let payoff: Vec<f64> = xs.iter().map(|x| (x - k).max(0.0)).collect();
            let (price, std_error) = mean_and_error(&payoff, cfg.antithetic);
            McPrice {
                strike: k,
                price,
                std_error,
                ci_low: price - 1.96 * std_error,
                ci_high: price + 1.96 * std_error,
                mean_terminal,
                terminal_std_error,
                paths: xs.len(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SabrParams {
        SabrParams::uncorrelated(0.2, 0.1, 1.0, 0.2).unwrap()
    }

    #[test]
    fn grid_contains_every_horizon() {
        let (steps, marks) = time_grid(&[0.25, 1.0, 1.3], 4).unwrap();
        assert_eq!(marks, vec![0, 3, 5]);
        assert!((steps.iter().sum::<f64>() - 1.3).abs() < 1e-14);
        assert!(time_grid(&[1.0, 0.5], 4).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(0, 10, 1).is_err());
        assert!(McConfig::new(10, 0, 1).is_err());
        let c = McConfig { antithetic: true, ..McConfig::new(1, 10, 1).unwrap() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn same_seed_same_bits() {
        let c = McConfig::new(200, 20, 7).unwrap();
        let a = terminal_values(&base(), 3.0, &c).unwrap();
        let b = terminal_values(&base(), 3.0, &c).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
        let d = terminal_values(&base(), 3.0, &McConfig { seed: 8, ..c }).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn lognormal_forward_is_never_absorbed() {
        let p = SabrParams::uncorrelated(0.2, 0.3, 0.0, 1.0).unwrap();
        for scheme in [Scheme::EulerFullTruncation, Scheme::LogEulerX] {
            let c = McConfig { scheme, ..McConfig::new(500, 50, 3).unwrap() };
            assert_eq!(simulate_mass(&p, 5.0, &c).unwrap().value, 0.0);
        }
    }

    #[test]
    fn antithetic_pairs_mirror_the_noise() {
        // with β = 1 and ν = 0 the log-Euler step is exact, so the two members
        // of a pair multiply to x0² e^{-y0² t}
        let p = SabrParams::uncorrelated(1.5, 0.2, 0.0, 1.0).unwrap();
        let c = McConfig { scheme: Scheme::LogEulerX, antithetic: true, ..McConfig::new(20, 8, 11).unwrap() };
        let xs = terminal_values(&p, 2.0, &c).unwrap();
        for pair in xs.chunks_exact(2) {
            let expected = 2.25 * (-0.04 * 2.0f64).exp();
            assert!((pair[0] * pair[1] / expected - 1.0).abs() < 1e-12);
        }
    }
}
