use proptest::prelude::*;
use rggmod_core::domain::{sample, Density, DensityBounds, Domain, Region, SampleCloud};
use rggmod_core::quadrature::QuadratureRule;
use rggmod_core::rng::derive_seed;
use rggmod_core::transport::*;

fn unit() -> Density {
    Density::uniform(Domain::interval(0.0, 1.0).unwrap())
}

fn bump() -> Density {
    let b = DensityBounds { lower: 0.3, upper: 1.5, lipschitz: 5.0 };
    Density::truncated_bump(Domain::interval(0.0, 1.0).unwrap(), &[0.4], 4.0, 2.0, 1.5, b, &QuadratureRule::default()).unwrap()
}

fn polys() -> Vec<Box<dyn Fn(f64) -> f64>> {
    (0..10)
        .map(|j| -> Box<dyn Fn(f64) -> f64> {
            Box::new(move |x: f64| match j {
                0 => 1.0,
                1 => x,
                2 => x * x,
                3 => x * x * x - 0.5 * x,
                4 => (2.0 * x - 1.0).powi(4),
                5 => 1.0 - 3.0 * x + x.powi(5),
                6 => x.powi(6) - x.powi(2),
                7 => 7.0 * x.powi(7),
                8 => (x - 0.3) * (x - 0.6) * (x - 0.9),
                _ => x.powi(9) + x.powi(4) - 2.0,
            })
        })
        .collect()
}

#[test]
fn pushforward_identity_on_polynomials() {
    let q = QuadratureRule::default();
    for (d, name) in [(unit(), "uniform"), (bump(), "bump")] {
        for seed in 0..3 {
            let cloud = sample(&d, 500, seed).unwrap();
            let map = build_quantile_map(&d, &cloud, &q).unwrap();
            for (j, g) in polys().iter().enumerate() {
                let lhs = map.pushforward_integral(&mut |x| g(x), &q);
                let rhs = map.empirical_mean(&mut |x| g(x));
                assert!((lhs - rhs).abs() < 1e-8, "{name} seed {seed} g{j}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn bump_cdf_is_monotone_and_exact_at_ends() {
    let q = QuadratureRule::default();
    let d = bump();
    let cloud = sample(&d, 10, 1).unwrap();
    let map = build_quantile_map(&d, &cloud, &q).unwrap();
    assert_eq!(map.cdf(0.0), 0.0);
    assert_eq!(map.cdf(1.0), 1.0);
    let mut prev = 0.0;
    for i in 1..=10_000 {
        let f = map.cdf(i as f64 / 10_000.0);
        assert!(f >= prev);
        prev = f;
    }
    assert!(map.cells().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn lil_statistic_stays_bounded() {
    let q = QuadratureRule::default();
    let d = unit();
    let mut lil: Vec<f64> = (0..20)
        .map(|s| {
            let cloud = sample(&d, 10_000, derive_seed(11, s)).unwrap();
            sup_deviation(&build_quantile_map(&d, &cloud, &q).unwrap()).lil.unwrap()
        })
        .collect();
    lil.sort_by(f64::total_cmp);
    assert!(lil[10] < 3.0, "median LIL statistic {}", lil[10]);
}

fn median_tl1(n: usize, q: &QuadratureRule) -> f64 {
    let d = unit();
    let half = Region::intervals(&[(0.0, 0.5)]).unwrap();
    let mut js: Vec<f64> = (0..20)
        .map(|s| {
            let cloud = sample(&d, n, derive_seed(5, s)).unwrap();
            let u_n: Vec<f64> = cloud.points().map(|p| if p[0] < 0.5 { 1.0 } else { 0.0 }).collect();
            let map = build_quantile_map(&d, &cloud, q).unwrap();
            tl1_surrogate(&map, &half, &u_n, q).unwrap()
        })
        .collect();
    js.sort_by(f64::total_cmp);
    0.5 * (js[9] + js[10])
}

#[test]
fn tl1_surrogate_shrinks_with_n() {
    let q = QuadratureRule::gauss_legendre(4).unwrap();
    let small = median_tl1(100, &q);
    let large = median_tl1(10_000, &q);
    assert!(large < small, "{small} -> {large}");
}

#[test]
fn weak_errors_shrink_with_n() {
    let q = QuadratureRule::default();
    let d = unit();
    let mut medians = Vec::new();
    for n in [100, 1000, 10_000] {
        let clouds: Vec<SampleCloud> = (0..20).map(|s| sample(&d, n, derive_seed(n as u64, s)).unwrap()).collect();
        let rows = weak_convergence_diagnostic(&clouds, &d, &q).unwrap();
        assert!(rows.iter().all(|r| r.errors[0] < 1e-12));
        let mut cols: Vec<Vec<f64>> = (1..5).map(|j| rows.iter().map(|r| r.errors[j]).collect()).collect();
        for c in cols.iter_mut() {
            c.sort_by(f64::total_cmp);
        }
        medians.push(cols.iter().map(|c| 0.5 * (c[9] + c[10])).collect::<Vec<_>>());
    }
    for j in 0..4 {
        assert!(medians[0][j] > medians[1][j] && medians[1][j] > medians[2][j], "column {j}: {medians:?}");
    }
}

#[test]
fn scores_are_exact_for_induced_labels() {
    use rggmod_core::continuum::ContinuumPartition;
    let dom = Domain::axis_box(&[0.0, 0.0], &[1.0, 4.0]).unwrap();
    let part = ContinuumPartition::slabs(&dom, 1, &[2.0]).unwrap();
    let cloud = sample(&Density::uniform(dom), 300, 2).unwrap();
    let induced = part.induce(&cloud).unwrap();
    let s = misclassification(&induced, &part, &cloud).unwrap();
    assert_eq!((s.overall, s.min, s.max), (1.0, 1.0, 1.0));
    let swapped = induced.relabeled(&[1, 0]).unwrap();
    let s = misclassification(&swapped, &part, &cloud).unwrap();
    assert_eq!((s.overall, s.min), (1.0, 1.0));
    assert_eq!(s.permutation, vec![1, 0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn misclassification_ignores_relabeling(
        k in 1usize..5,
        raw in prop::collection::vec((0u32..4, 0u32..4), 1..40),
        seed in any::<u64>(),
    ) {
        let truth: Vec<u32> = raw.iter().map(|p| p.0 % k as u32).collect();
        let found: Vec<u32> = raw.iter().map(|p| p.1 % k as u32).collect();
        let base = misclassification_labels(&truth, &found, k).unwrap();
        let mut perm: Vec<u32> = (0..k as u32).collect();
        let mut rng = rggmod_core::rng::rng_from_seed(seed);
        rggmod_core::rng::shuffle(&mut rng, &mut perm);
        let relabeled: Vec<u32> = found.iter().map(|&l| perm[l as usize]).collect();
        let moved = misclassification_labels(&truth, &relabeled, k).unwrap();
        prop_assert_eq!(base.overall, moved.overall);
        let truth2: Vec<u32> = truth.iter().map(|&l| perm[l as usize]).collect();
        let moved = misclassification_labels(&truth2, &found, k).unwrap();
        prop_assert_eq!(base.overall, moved.overall);
        prop_assert!(base.min <= base.max && base.overall <= 1.0);
    }
}
