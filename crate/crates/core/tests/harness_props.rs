use proptest::prelude::*;

use metafeat_core::harness::{Scenario, ScenarioConfig};

fn config() -> impl Strategy<Value = ScenarioConfig> {
    (
        prop::sample::select(Scenario::ALL.to_vec()),
        (1usize..200, 1usize..500, 1usize..20, 1usize..9, 1usize..5, 1usize..4),
        (0.001f64..0.49, 0.001f64..0.99, 0.0f64..0.1, 0.1f64..100.0),
        (any::<u64>(), 1usize..100, any::<bool>()),
    )
        .prop_map(|(s, (n, m, k, r, tau, c), (eps, delta, beta, b), (seed, trials, violate))| {
            let mut cfg = ScenarioConfig::defaults(s);
            cfg.n = n;
            cfg.m = m;
            cfg.k = k;
            cfg.r = r;
            cfg.tau = tau;
            cfg.c = c;
            cfg.eps = eps;
            cfg.delta = delta;
            cfg.beta = beta;
            cfg.b = b;
            cfg.seed = seed;
            cfg.trials = trials;
            cfg.plant_violation = violate;
            cfg
        })
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in config()) {
        let back = ScenarioConfig::parse(&cfg.to_text()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn set_matches_text_override(cfg in config(), m in 1usize..1000) {
        let mut a = cfg.clone();
        a.set("m", &m.to_string()).unwrap();
        let b = ScenarioConfig::parse(&format!("{}m={m}\n", cfg.to_text())).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn unknown_keys_and_values_are_rejected() {
    let mut c = ScenarioConfig::defaults(Scenario::SharedSubspace);
    assert!(c.set("no_such_key", "1").is_err());
    assert!(c.set("n", "-3").is_err());
    assert!(c.set("eps", "abc").is_err());
    assert!(ScenarioConfig::parse("scenario=shared_subspace\nn 5\n").is_err());
}
