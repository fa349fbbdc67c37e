use proptest::prelude::*;
use sabr_atom::mass::mass_finite;
use sabr_atom::pricing::{antonov_call, bs_call, bs_put, implied_vol, smile_density, OptionQuote};
use sabr_atom::quadrature::{integrate, QuadratureSpec};
use sabr_atom::smile_asym::{SmileCurve, WingSource};
use sabr_atom::special_fn::norm_pdf;
use sabr_atom::SabrParams;

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

#[test]
fn exact_smile_density_carries_the_missing_mass() {
    let p = SabrParams::uncorrelated(0.1, 0.15, 0.8, 0.1).unwrap();
    let t = 20.0;
    let ks: Vec<f64> = (0..=260).map(|i| -10.0 + 0.05 * i as f64).collect();
    let curve = SmileCurve::from_fn(
        t,
        &ks,
        |k| {
            let strike = p.x0 * k.exp();
            OptionQuote::from_price(p.x0, strike, t, antonov_call(&p, strike, t, &q())?).map(|o| o.implied_vol)
        },
        WingSource::Model,
    )
    .unwrap();
    let (lo, hi) = curve.domain();
    let body = integrate(|k| smile_density(&curve, k).unwrap(), lo + 0.01, hi - 0.01, 1e-8, 1e-6, 2000).unwrap().value;
    let mass = mass_finite(&p, t, &q()).unwrap().value;
    assert!((body + mass - 1.0).abs() <= 2e-2, "density {body} + mass {mass}");
}

#[test]
fn antonov_price_at_the_money_is_inside_bounds_for_several_betas() {
    for beta in [0.0, 0.3, 0.6] {
        let p = SabrParams::uncorrelated(0.1, 0.15, 0.8, beta).unwrap();
        let c = antonov_call(&p, p.x0, 2.0, &q()).unwrap();
        assert!(c > 0.0 && c < p.x0, "beta {beta}: {c}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn implied_vol_round_trip(k in -3.0f64..3.0, sigma in 0.02f64..2.0, t in 0.05f64..10.0) {
        let strike = k.exp();
        let price = bs_call(1.0, strike, t, sigma).unwrap();
        let s = sigma * t.sqrt();
        let vega = norm_pdf(-k / s + 0.5 * s) * t.sqrt();
        // skip inputs where a one-ulp price change moves the vol by more than the tolerance
        prop_assume!(f64::EPSILON * price / vega < 1e-11);
        prop_assume!(price - (1.0 - strike).max(0.0) > 1e-280);
        let back = implied_vol(price, 1.0, strike, t).unwrap();
        prop_assert!((back - sigma).abs() <= 1e-10, "{} vs {}", back, sigma);
    }

    #[test]
    fn put_call_parity_holds(f in 0.1f64..10.0, k in 0.1f64..10.0, t in 0.01f64..5.0, sigma in 0.01f64..1.5) {
        let lhs = bs_call(f, k, t, sigma).unwrap() - bs_put(f, k, t, sigma).unwrap();
        prop_assert!((lhs - (f - k)).abs() <= 1e-13 * f.max(k));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn antonov_prices_are_arbitrage_free(
        x0 in 0.05f64..0.5, y0 in 0.05f64..0.4, nu in 0.2f64..1.0, beta in 0.0f64..0.8, t in 0.5f64..10.0
    ) {
        let p = SabrParams::uncorrelated(x0, y0, nu, beta).unwrap();
        let strikes: Vec<f64> = (1..=30).map(|i| x0 * 0.1 * i as f64).collect();
        let prices: Vec<f64> = strikes.iter().map(|&k| antonov_call(&p, k, t, &q()).unwrap()).collect();
        for (k, c) in strikes.iter().zip(&prices) {
            prop_assert!(*c >= (x0 - k).max(0.0) - 1e-12 && *c <= x0 + 1e-12, "K = {}, C = {}", k, c);
        }
        for w in prices.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for w in prices.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-8);
        }
    }
}
