use regp_bench::functions::{self, corpus, problem_by_name, PROBLEM_NAMES};

fn assert_min(name: &str, x: &[f64], want: f64) {
    let p = problem_by_name(name, Some(x.len())).or_else(|| problem_by_name(name, None)).unwrap();
    let got = p.evaluate(x);
    assert!((got - want).abs() <= 1e-6, "{name} at {x:?}: {got} vs {want}");
    assert!(p.domain.contains(x), "{name}: minimizer outside the domain");
}

#[test]
fn known_minima() {
    let pi = std::f64::consts::PI;
    for x in [[-pi, 12.275], [pi, 2.275], [3.0 * pi, 2.475]] {
        assert_min("branin", &x, 0.397_887_357_729_738_2);
    }
    assert_min("goldstein-price", &[0.0, -1.0], 3.0);
    assert_min("log-goldstein-price", &[0.0, -1.0], 3f64.ln());
    assert_min("six-hump-camel", &[0.089_842_01, -0.712_656_4], -1.031_628_453_489_877);
    assert_min("six-hump-camel", &[-0.089_842_01, 0.712_656_4], -1.031_628_453_489_877);
    assert_min("three-hump-camel", &[0.0, 0.0], 0.0);
    assert_min("beale", &[3.0, 0.5], 0.0);
    assert_min("rosenbrock", &[1.0; 4], 0.0);
    assert_min("ackley", &[0.0; 4], 0.0);
    assert_min("zakharov", &[0.0; 4], 0.0);
    assert_min("perm", &[1.0, 2.0, 3.0, 4.0], 0.0);
}

#[test]
fn minima_are_global_on_random_points() {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let floors = [
        ("branin", 0.397_887),
        ("goldstein-price", 3.0),
        ("six-hump-camel", -1.031_629),
        ("beale", 0.0),
        ("perm", 0.0),
    ];
    for (name, floor) in floors {
        let p = problem_by_name(name, None).unwrap();
        for _ in 0..10_000 {
            let u: Vec<f64> = (0..p.dimension).map(|_| r.random()).collect();
            assert!(p.evaluate(&p.domain.from_unit(&u)) >= floor - 1e-6);
        }
    }
}

#[test]
fn corpus_lookup() {
    assert_eq!(corpus().len(), PROBLEM_NAMES.len());
    for name in PROBLEM_NAMES {
        let p = problem_by_name(name, None).unwrap();
        assert_eq!(p.name, name);
        assert_eq!(p.domain.dim(), p.dimension);
    }
    assert_eq!(problem_by_name("Goldstein_Price", None).unwrap().name, "goldstein-price");
    assert_eq!(problem_by_name("rosenbrock", Some(6)).unwrap().dimension, 6);
    assert!(problem_by_name("branin", Some(3)).is_none());
    assert!(problem_by_name("nope", None).is_none());
    assert!((functions::log_goldstein_price(&[0.3, 0.1]) - functions::goldstein_price(&[0.3, 0.1]).ln()).abs() < 1e-12);
}
