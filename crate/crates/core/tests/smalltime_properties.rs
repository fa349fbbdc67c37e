use proptest::prelude::*;
use sabr_atom::quadrature::QuadratureSpec;
use sabr_atom::smalltime::{ln_density_smalltime, m_asymptotic, mass_smalltime, solve_saddlepoint, SaddlepointContext};
use sabr_atom::SabrParams;

fn curvature_ratio(y: f64) -> f64 {
    let s = solve_saddlepoint(&SaddlepointContext::new(y, 1.0).unwrap()).unwrap();
    s.m_y * y.ln().powi(2) / y.powi(3)
}

#[test]
fn curvature_ratio_settles() {
    let ratios: Vec<f64> = (2..=6).map(|e| curvature_ratio(10f64.powi(-e))).collect();
    println!("M_y log(y)^2 / y^3: {ratios:?}");
    assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    let steps: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.windows(2).all(|w| w[1] < w[0]), "{steps:?}");
}

#[test]
fn asymptotic_outputs_are_positive() {
    let p = SabrParams::uncorrelated(0.2, 0.1, 1.0, 0.2).unwrap();
    for &t in &[1e-4, 1e-3, 5e-3] {
        for i in 0..40 {
            let r = 1e-5 * 1.3f64.powi(i);
            let ld = ln_density_smalltime(&p, t, r).unwrap();
            assert!(ld.is_finite(), "t = {t}, r = {r}, log density = {ld}");
        }
    }
    let m = mass_smalltime(&SabrParams::uncorrelated(0.05, 0.3, 1.0, 0.5).unwrap(), 0.005, &QuadratureSpec::default()).unwrap();
    assert!(m.value > 0.0 && m.value < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn root_is_the_largest_and_accurate(ly in -6.0f64..-1.0, lz in -2.0f64..2.0) {
        let ctx = SaddlepointContext::new(10f64.powf(ly), 10f64.powf(lz)).unwrap();
        let s = solve_saddlepoint(&ctx).unwrap();
        prop_assert!(s.u_y > 0.0);
        prop_assert!(s.residual.abs() < 1e-10 * s.scale);
        let sign = ctx.residual(s.u_y * 1.01).0.signum();
        for i in 1..=300 {
            let u = s.u_y * 1.01 * 10f64.powf(3.0 * i as f64 / 300.0);
            prop_assert_eq!(ctx.residual(u).0.signum(), sign, "sign change at u = {}", u);
        }
    }

    #[test]
    fn asymptotic_m_is_positive(ly in -6.0f64..-1.0, lz in -2.0f64..2.0) {
        let ctx = SaddlepointContext::new(10f64.powf(ly), 10f64.powf(lz)).unwrap();
        let s = solve_saddlepoint(&ctx).unwrap();
        let m = m_asymptotic(&ctx, &s).unwrap();
        prop_assert!(m >= 0.0 && m.is_finite());
    }
}
