use proptest::prelude::*;
use sabr_atom::montecarlo::{simulate_call, simulate_mass, simulate_mass_horizons, step_refinement, terminal_values, McConfig, Scheme};
use sabr_atom::SabrParams;

fn base() -> SabrParams {
    SabrParams::uncorrelated(0.2, 0.1, 1.0, 0.2).unwrap()
}

#[test]
fn absorbed_sets_are_nested_across_horizons() {
    let cfg = McConfig::new(500, 20, 11).unwrap();
    let early = terminal_values(&base(), 2.0, &cfg).unwrap();
    let late = terminal_values(&base(), 5.0, &cfg).unwrap();
    assert!(early.contains(&0.0));
    for (a, b) in early.iter().zip(&late) {
        assert!(*a >= 0.0 && *b >= 0.0);
        if *a == 0.0 {
            assert_eq!(*b, 0.0);
        }
    }
}

#[test]
fn common_horizons_reuse_the_same_paths() {
    let cfg = McConfig::new(400, 25, 5).unwrap();
    let together = simulate_mass_horizons(&base(), &[1.0, 3.0], &cfg).unwrap();
    let alone = simulate_mass(&base(), 3.0, &cfg).unwrap();
    assert_eq!(together[1].value, alone.value);
    assert!(together[0].value <= together[1].value);
}

#[test]
fn refinement_doubles_the_step_count() {
    let cfg = McConfig::new(200, 10, 3).unwrap();
    let levels = step_refinement(&base(), 1.0, &cfg, 3).unwrap();
    assert_eq!(levels.iter().map(|l| l.0).collect::<Vec<_>>(), vec![10, 20, 40]);
    assert!(levels.iter().all(|l| l.1.error_estimate.is_some()));
}

#[test]
fn antithetic_odd_count_drops_one_path() {
    let cfg = McConfig { antithetic: true, ..McConfig::new(101, 10, 9).unwrap() };
    assert_eq!(terminal_values(&base(), 1.0, &cfg).unwrap().len(), 100);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn same_seed_gives_identical_results(seed in any::<u64>(), log_euler in any::<bool>(), antithetic in any::<bool>()) {
        let scheme = if log_euler { Scheme::LogEulerX } else { Scheme::EulerFullTruncation };
        let cfg = McConfig { scheme, antithetic, ..McConfig::new(64, 10, seed).unwrap() };
        let a = terminal_values(&base(), 2.0, &cfg).unwrap();
        let b = terminal_values(&base(), 2.0, &cfg).unwrap();
        prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let c1 = simulate_call(&base(), 0.2, 2.0, &cfg).unwrap();
        let c2 = simulate_call(&base(), 0.2, 2.0, &cfg).unwrap();
        prop_assert_eq!(c1.price.to_bits(), c2.price.to_bits());
    }

    #[test]
    fn absorption_is_permanent(seed in any::<u64>(), t1 in 1usize..20, extra in 1usize..20) {
        let cfg = McConfig::new(64, 10, seed).unwrap();
        let t1 = t1 as f64 / 10.0;
        let t2 = t1 + extra as f64 / 10.0;
        let early = terminal_values(&base(), t1, &cfg).unwrap();
        let late = terminal_values(&base(), t2, &cfg).unwrap();
        for (a, b) in early.iter().zip(&late) {
            prop_assert!(*a >= 0.0);
            prop_assert!(*a != 0.0 || *b == 0.0);
        }
    }
}
