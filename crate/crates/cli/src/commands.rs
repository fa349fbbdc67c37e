use std::time::Instant;

use rayon::prelude::*;
use sabr_atom::mass::{
    mass_finite, mass_largetime, mass_largetime_beta0, mass_largetime_series, mass_largetime_truncated, MassResult,
};
use sabr_atom::montecarlo::{simulate_calls, simulate_mass, simulate_mass_horizons, McConfig, Scheme};
use sabr_atom::pricing::{antonov_call, bs_call, implied_vol, obloj_vol, smile_density};
use sabr_atom::quadrature::QuadratureSpec;
use sabr_atom::smalltime::{ln_density_smalltime, mass_smalltime};
use sabr_atom::smile_asym::{
    dmhj_vol, lee_ratio, regularize_left_wing, SmileCurve, SmilePoint, SpliceConfig, WingExpansion, WingOrder, WingSource,
    LEE_K_MAX,
};
use sabr_atom::special_fn::SeriesControl;
use sabr_atom::timechange::{density_infinite, integrate_log_scale, ln_density_finite};
use sabr_atom::{SabrParams, VolParams};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::grid::Grid;
use crate::output::{Report, Row};
use crate::{
    Command, DensityArgs, DensityMethod, MassArgs, MassMethodArg, McArgs, ModelArgs, PriceArgs, PriceMethod, QuadArgs,
    SchemeArg, SimArgs, SmileArgs, SmileModel, WingMassArg,
};

type Result<T> = std::result::Result<T, CliError>;

macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = Row::new();
        $(m.insert($k.to_string(), json!($v));)*
        m
    }};
}

pub fn dispatch(cmd: &Command) -> Result<Report> {
    let start = Instant::now();
    let mut report = match cmd {
        Command::Mass(a) => mass(a)?,
        Command::Smile(a) => smile(a)?,
        Command::Density(a) => density(a)?,
        Command::Price(a) => price(a)?,
        Command::Mc(a) => mc(a)?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn nonempty<'a>(g: &'a Grid, what: &str) -> Result<&'a [f64]> {
    if g.0.is_empty() {
        return Err(usage(format!("--{what} is empty")));
    }
    Ok(&g.0)
}

fn single(g: &Grid, what: &str) -> Result<f64> {
    g.single(what).map_err(usage)
}

fn model_params(m: &ModelArgs) -> Result<Row> {
    let list = |g: &Grid| if g.0.len() == 1 { json!(g.0[0]) } else { json!(g.0) };
    Ok(row! { "x0" => list(&m.x0), "y0" => m.y0, "nu" => m.nu, "beta" => list(&m.beta), "rho" => m.rho })
}

/// Every `(x0, β)` combination of the sweep.
fn param_grid(m: &ModelArgs) -> Result<Vec<SabrParams>> {
    let mut out = Vec::new();
    for &x0 in nonempty(&m.x0, "x0")? {
        for &beta in nonempty(&m.beta, "beta")? {
            out.push(SabrParams::new(x0, m.y0, m.nu, beta, m.rho)?);
        }
    }
    Ok(out)
}

fn single_params(m: &ModelArgs) -> Result<SabrParams> {
    Ok(SabrParams::new(single(&m.x0, "x0")?, m.y0, m.nu, single(&m.beta, "beta")?, m.rho)?)
}

fn quad_spec(q: &QuadArgs) -> Result<QuadratureSpec> {
    let spec = QuadratureSpec { abs_tol: q.abs_tol, rel_tol: q.rel_tol, ..QuadratureSpec::default() };
    spec.validate()?;
    Ok(spec)
}

fn mc_config(s: &SimArgs) -> Result<McConfig> {
    let scheme = match s.scheme {
        SchemeArg::Euler => Scheme::EulerFullTruncation,
        SchemeArg::LogEuler => Scheme::LogEulerX,
    };
    let cfg = McConfig { scheme, antithetic: s.antithetic, ..McConfig::new(s.paths, s.steps, s.seed)? };
    cfg.validate()?;
    Ok(cfg)
}

fn sim_params(s: &SimArgs) -> Row {
    let scheme = method_name(&s.scheme);
    row! { "paths" => s.paths, "steps_per_unit" => s.steps, "seed" => s.seed, "scheme" => scheme, "antithetic" => s.antithetic }
}

fn method_name<E: clap::ValueEnum>(e: &E) -> String {
    e.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn timed<T>(f: impl FnOnce() -> sabr_atom::Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn mass_row(p: &SabrParams, r: &MassResult, secs: f64) -> Row {
    row! {
        "x0" => p.x0,
        "beta" => p.beta,
        "value" => r.value,
        "ln_value" => r.ln_value,
        "error_estimate" => r.error_estimate,
        "nodes_used" => r.nodes_used,
        "wall_time_s" => secs,
    }
}

fn with_first(key: &str, value: Value, rest: Row) -> Row {
    let mut m = Row::new();
    m.insert(key.into(), value);
    m.extend(rest);
    m
}

fn mass(a: &MassArgs) -> Result<Report> {
    let q = quad_spec(&a.quad)?;
    let grid = param_grid(&a.model)?;
    let mut params = model_params(&a.model)?;
    let horizons = || -> Result<&[f64]> {
        let t = a.t.as_ref().ok_or_else(|| usage(format!("--method {} needs --t", method_name(&a.method))))?;
        nonempty(t, "t")
    };
    let mut results = Vec::new();
    let mut extras = Row::new();
    for p in &grid {
        match a.method {
            MassMethodArg::Finite | MassMethodArg::Smalltime => {
                for &t in horizons()? {
                    let (r, secs) = if a.method == MassMethodArg::Finite {
                        timed(|| mass_finite(p, t, &q))?
                    } else {
                        timed(|| mass_smalltime(p, t, &q))?
                    };
                    results.push(with_first("t", json!(t), mass_row(p, &r, secs)));
                }
            }
            MassMethodArg::Largetime => {
                let (r, secs) = timed(|| mass_largetime(p, &q))?;
                results.push(mass_row(p, &r, secs));
            }
            MassMethodArg::LargetimeSeries => {
                let (reference, ref_secs) = timed(|| mass_largetime(p, &q))?;
                for n in 0..=a.n {
                    let ((r, state), secs) = timed(|| mass_largetime_series(p, n))?;
                    results.push(row! {
                        "x0" => p.x0,
                        "beta" => p.beta,
                        "n" => n,
                        "value" => r.value,
                        "bound" => state.coefficients[n + 1],
                        "error" => (r.value - reference.value).abs(),
                        "wall_time_s" => secs,
                    });
                }
                extras.insert("series_ratio".into(), json!(p.series_ratio()));
                extras.insert("reference_value".into(), json!(reference.value));
                extras.insert("reference_error_estimate".into(), json!(reference.error_estimate));
                extras.insert("reference_wall_time_s".into(), json!(ref_secs));
            }
            MassMethodArg::Truncated => {
                let r_max = a.r_max.as_ref().ok_or_else(|| usage("--method truncated needs --r-max"))?;
                let (whole, whole_secs) = timed(|| mass_largetime(p, &q))?;
                for &r in nonempty(r_max, "r-max")? {
                    let (cut, secs) = timed(|| mass_largetime_truncated(p, r, &q))?;
                    results.push(row! {
                        "x0" => p.x0,
                        "beta" => p.beta,
                        "r_max" => r,
                        "value" => cut.value,
                        "error" => (whole.value - cut.value).abs(),
                        "wall_time_s" => secs,
                    });
                }
                extras.insert("reference_value".into(), json!(whole.value));
                extras.insert("reference_wall_time_s".into(), json!(whole_secs));
            }
            MassMethodArg::Beta0 => {
                let p0 = SabrParams::new(p.x0, p.y0, p.nu, 0.0, p.rho)?;
                let (r, secs) = timed(|| mass_largetime_beta0(&p0))?;
                results.push(mass_row(&p0, &r, secs));
            }
            MassMethodArg::Mc => {
                let cfg = mc_config(&a.sim)?;
                for &t in horizons()? {
                    let (r, secs) = timed(|| simulate_mass(p, t, &cfg))?;
                    let half = r.error_estimate.unwrap_or(f64::NAN);
                    results.push(row! {
                        "t" => t,
                        "x0" => p.x0,
                        "beta" => p.beta,
                        "value" => r.value,
                        "ci_low" => (r.value - half).max(0.0),
                        "ci_high" => (r.value + half).min(1.0),
                        "wall_time_s" => secs,
                    });
                }
                params.extend(sim_params(&a.sim));
            }
        }
    }
    if a.method == MassMethodArg::Beta0 {
        params.insert("beta".into(), json!(0.0));
    }
    Ok(Report { params, method: method_name(&a.method), results, extras, ..Report::default() })
}

fn wing_vol(w: &WingExpansion, k: f64) -> Option<f64> {
    if k < 0.0 {
        dmhj_vol(w, k.exp()).ok()
    } else {
        None
    }
}

fn ratio_below_zero(vol: Option<f64>, k: f64, t: f64) -> Option<f64> {
    vol.filter(|_| k < 0.0).map(|v| lee_ratio(v, k, t))
}

fn smile(a: &SmileArgs) -> Result<Report> {
    let ks = &a.k.0;
    if ks.len() < 2 {
        return Err(usage("the log-strike grid needs at least two points"));
    }
    let p = single_params(&a.model)?;
    let q = quad_spec(&a.quad)?;
    let t = a.t;
    // model vol at every grid point; None where the model could not produce one
    let model: Vec<Option<f64>> = match a.method {
        SmileModel::Obloj => ks.iter().map(|&k| obloj_vol(&p, p.x0 * k.exp(), t).map(Some)).collect::<sabr_atom::Result<_>>()?,
        SmileModel::Antonov => ks
            .par_iter()
            .map(|&k| {
                let strike = p.x0 * k.exp();
                antonov_call(&p, strike, t, &q).and_then(|c| implied_vol(c, p.x0, strike, t)).ok().filter(|v| *v > 0.0)
            })
            .collect(),
    };
    let points: Vec<SmilePoint> = ks
        .iter()
        .zip(&model)
        .filter_map(|(&k, v)| v.map(|vol| SmilePoint { k, vol, source: WingSource::Model }))
        .collect();
    if points.len() < 2 {
        return Err(sabr_atom::Error::NonConvergence { what: "smile inversion", iterations: points.len() }.into());
    }
    let curve = SmileCurve::new(t, points)?;
    let mass = match (a.mass, a.wing_mass) {
        (Some(m), _) => m,
        (None, WingMassArg::Largetime) => mass_largetime(&p, &q)?.value,
        (None, WingMassArg::Finite) => mass_finite(&p, t, &q)?.value,
    };
    let wings = [WingOrder::Order1, WingOrder::Order2, WingOrder::Order4]
        .map(|o| WingExpansion::new(mass, t, o))
        .into_iter()
        .collect::<sabr_atom::Result<Vec<_>>>()?;
    let mut extras = row! { "mass" => mass, "failed_points" => model.iter().filter(|v| v.is_none()).count() };
    let out = if a.regularize {
        let cfg = SpliceConfig { lee_k_max: LEE_K_MAX, blend_width: a.blend_width };
        let r = regularize_left_wing(&curve, &wings[2], &cfg)?;
        extras.insert("crossover".into(), json!(r.crossover));
        extras.insert("blend_width_used".into(), json!(r.blend_width));
        r.curve
    } else {
        curve
    };
    let mut results = Vec::with_capacity(ks.len());
    let mut used = out.points.iter().peekable();
    for (&k, &model_vol) in ks.iter().zip(&model) {
        let point = used.next_if(|pt| pt.k == k);
        let vol = point.map(|pt| pt.vol);
        let source = point.map(|pt| match pt.source {
            WingSource::Model => "model",
            WingSource::Dmhj => "wing",
        });
        let density = point.and_then(|_| smile_density(&out, k).ok());
        let d: Vec<Option<f64>> = wings.iter().map(|w| wing_vol(w, k)).collect();
        results.push(row! {
            "k" => k,
            "strike" => p.x0 * k.exp(),
            "vol" => vol,
            "source" => source,
            "lee_ratio" => ratio_below_zero(vol, k, t),
            "density" => density,
            "model_vol" => model_vol,
            "model_lee_ratio" => ratio_below_zero(model_vol, k, t),
            "dmhj1" => d[0],
            "dmhj2" => d[1],
            "dmhj4" => d[2],
            "dmhj1_lee_ratio" => ratio_below_zero(d[0], k, t),
            "dmhj2_lee_ratio" => ratio_below_zero(d[1], k, t),
            "dmhj4_lee_ratio" => ratio_below_zero(d[2], k, t),
        });
    }
    let mut params = model_params(&a.model)?;
    params.insert("t".into(), json!(t));
    params.insert("regularize".into(), json!(a.regularize));
    Ok(Report { params, method: method_name(&a.method), results, extras, ..Report::default() })
}

fn density(a: &DensityArgs) -> Result<Report> {
    let v = VolParams::new(a.model.y0, a.model.nu)?;
    let q = quad_spec(&a.quad)?;
    let ctl = SeriesControl::default();
    let p = match a.method {
        DensityMethod::Smalltime => Some(single_params(&a.model)?),
        _ => None,
    };
    let ts: Vec<Option<f64>> = match a.method {
        DensityMethod::Infinite => vec![None],
        _ => nonempty(&a.t, "t")?.iter().map(|&t| Some(t)).collect(),
    };
    // natural scale of the integrated variance at each horizon
    let center = |t: Option<f64>| t.map_or(v.y0 * v.y0 / (v.nu * v.nu), |t| v.integrated_variance_mean(t));
    let ln_f = |t: Option<f64>, r: f64| -> sabr_atom::Result<f64> {
        match (a.method, t) {
            (DensityMethod::Infinite, _) => Ok(density_infinite(&v, r)?.ln()),
            (DensityMethod::Finite, Some(t)) => Ok(ln_density_finite(&v, t, r, ctl, &q)?.0),
            (DensityMethod::Smalltime, Some(t)) => ln_density_smalltime(p.as_ref().expect("set above"), t, r),
            _ => unreachable!("finite horizons always carry t"),
        }
    };
    let mut results = Vec::new();
    for &t in &ts {
        if a.grid_integrate {
            let (integral, secs) = timed(|| integrate_log_scale(|r| Ok(ln_f(t, r)?.exp()), center(t), &q))?;
            results.push(row! { "t" => t, "integral" => integral, "error" => (integral - 1.0).abs(), "wall_time_s" => secs });
            continue;
        }
        let rs: Vec<f64> = match &a.r {
            Some(g) => nonempty(g, "r")?.to_vec(),
            None => (-60..=40).map(|i| center(t) * (0.1 * i as f64).exp()).collect(),
        };
        let values = rs.par_iter().map(|&r| ln_f(t, r)).collect::<sabr_atom::Result<Vec<f64>>>()?;
        for (r, ln) in rs.iter().zip(values) {
            results.push(row! { "t" => t, "r" => r, "density" => ln.exp(), "ln_density" => ln });
        }
    }
    let params = row! { "y0" => v.y0, "nu" => v.nu };
    Ok(Report { params, method: method_name(&a.method), results, ..Report::default() })
}

fn implied_or_none(price: f64, p: &SabrParams, strike: f64, t: f64) -> Option<f64> {
    if strike > 0.0 {
        implied_vol(price, p.x0, strike, t).ok()
    } else {
        None
    }
}

fn log_strike(p: &SabrParams, strike: f64) -> Option<f64> {
    (strike > 0.0).then(|| (strike / p.x0).ln())
}

fn price(a: &PriceArgs) -> Result<Report> {
    let p = single_params(&a.model)?;
    let strikes = nonempty(&a.strikes, "K")?;
    let t = a.t;
    let mut params = model_params(&a.model)?;
    params.insert("t".into(), json!(t));
    let mut extras = Row::new();
    let results = match a.method {
        PriceMethod::Antonov | PriceMethod::Obloj => {
            let q = quad_spec(&a.quad)?;
            let one = |&k: &f64| -> Result<Row> {
                let (c, secs) = timed(|| match a.method {
                    PriceMethod::Antonov => antonov_call(&p, k, t, &q),
                    _ if k == 0.0 => Ok(p.x0),
                    _ => obloj_vol(&p, k, t).and_then(|s| bs_call(p.x0, k, t, s)),
                })?;
                Ok(row! {
                    "strike" => k,
                    "k" => log_strike(&p, k),
                    "price" => c,
                    "implied_vol" => implied_or_none(c, &p, k, t),
                    "wall_time_s" => secs,
                })
            };
            strikes.par_iter().map(one).collect::<Result<Vec<_>>>()?
        }
        PriceMethod::Mc => {
            let cfg = mc_config(&a.sim)?;
            let prices = simulate_calls(&p, strikes, t, &cfg)?;
            if let Some(first) = prices.first() {
                extras.insert("mean_terminal".into(), json!(first.mean_terminal));
                extras.insert("terminal_std_error".into(), json!(first.terminal_std_error));
                extras.insert("martingale_ok".into(), json!(first.martingale_ok(p.x0)));
            }
            params.extend(sim_params(&a.sim));
            prices
                .iter()
                .map(|m| {
                    row! {
                        "strike" => m.strike,
                        "k" => log_strike(&p, m.strike),
                        "price" => m.price,
                        "std_error" => m.std_error,
                        "ci_low" => m.ci_low,
                        "ci_high" => m.ci_high,
                        "implied_vol" => implied_or_none(m.price, &p, m.strike, t),
                    }
                })
                .collect()
        }
    };
    Ok(Report { params, method: method_name(&a.method), results, extras, ..Report::default() })
}

fn mc(a: &McArgs) -> Result<Report> {
    if a.refine == 0 {
        return Err(usage("--refine must be at least 1"));
    }
    let grid = param_grid(&a.model)?;
    let horizons = nonempty(&a.t, "t")?;
    let base = mc_config(&a.sim)?;
    let mut results = Vec::new();
    for p in &grid {
        for level in 0..a.refine {
            let cfg = McConfig { steps_per_unit: base.steps_per_unit << level, ..base };
            match &a.strikes {
                None => {
                    let masses = simulate_mass_horizons(p, horizons, &cfg)?;
                    for (&t, r) in horizons.iter().zip(&masses) {
                        let half = r.error_estimate.unwrap_or(f64::NAN);
                        results.push(row! {
                            "x0" => p.x0,
                            "beta" => p.beta,
                            "steps_per_unit" => cfg.steps_per_unit,
                            "t" => t,
                            "mass" => r.value,
                            "ci_low" => (r.value - half).max(0.0),
                            "ci_high" => (r.value + half).min(1.0),
                        });
                    }
                }
                Some(k) => {
                    let strikes = nonempty(k, "K")?;
                    for &t in horizons {
                        for m in simulate_calls(p, strikes, t, &cfg)? {
                            results.push(row! {
                                "x0" => p.x0,
                                "beta" => p.beta,
                                "steps_per_unit" => cfg.steps_per_unit,
                                "t" => t,
                                "strike" => m.strike,
                                "price" => m.price,
                                "ci_low" => m.ci_low,
                                "ci_high" => m.ci_high,
                                "mean_terminal" => m.mean_terminal,
                            });
                        }
                    }
                }
            }
        }
    }
    let mut params = model_params(&a.model)?;
    params.extend(sim_params(&a.sim));
    let method = if a.strikes.is_some() { "calls" } else { "mass" };
    Ok(Report { params, method: method.into(), results, ..Report::default() })
}
