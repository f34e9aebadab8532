use rggmod_core::continuum::{
    continuum_energy, lambda, lambda_eps, mu_quantile, reference_minimizer, tv_eps, ContinuumPartition, Field,
    DEFAULT_BALANCE_TOL,
};
use rggmod_core::domain::{measure_mu, sample, AxisBox, Density, DensityBounds, Domain, Region};
use rggmod_core::functional::gtv;
use rggmod_core::geograph::build_graph;
use rggmod_core::kernel::{Kernel, Profile};
use rggmod_core::quadrature::QuadratureRule;
use std::f64::consts::PI;

fn bump_density() -> Density {
    let dom = Domain::axis_box(&[0.0, 0.0], &[1.0, 3.0]).unwrap();
    let bounds = DensityBounds { lower: 1e-7, upper: 0.75, lipschitz: 5.0 };
    Density::truncated_bump(dom, &[0.5, 2.0], 4.0, 2.0, 0.5, bounds, &QuadratureRule::default()).unwrap()
}

#[test]
fn bump_density_cut_matches_dense_scan() {
    let rho = bump_density();
    let q = QuadratureRule::default();
    let r = reference_minimizer(rho.domain(), &rho, 1.0, 2, &q).unwrap();
    assert!(r.heuristic);
    let Region::Boxes(bs) = &r.partition.regions()[0] else { panic!("expected a slab") };
    let cut = bs[0].hi()[1];

    // cumulative μ on a fine grid, crossing located by linear interpolation
    let steps = 600;
    let h = 3.0 / steps as f64;
    let mut prev = 0.0;
    let mut scan = f64::NAN;
    for s in 1..=steps {
        let t = s as f64 * h;
        let slab = Region::single_box(AxisBox::new(&[0.0, 0.0], &[1.0, t]).unwrap());
        let m = measure_mu(&rho, 1.0, &slab, &q).unwrap();
        if prev < 0.5 && m >= 0.5 {
            scan = t - h + h * (0.5 - prev) / (m - prev);
            break;
        }
        prev = m;
    }
    assert!((cut - scan).abs() < 1e-3, "root {cut} scan {scan}");
    let left = &r.partition.regions()[0];
    assert!((measure_mu(&rho, 1.0, left, &q).unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn reference_beats_perturbed_cuts() {
    let q = QuadratureRule::default();
    let k = Kernel::new(Profile::Indicator, 2).unwrap();
    for rho in [Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 4.0]).unwrap()), bump_density()] {
        let r = reference_minimizer(rho.domain(), &rho, 1.0, 2, &q).unwrap();
        let best = continuum_energy(&r.partition, &rho, 1.0, &k, DEFAULT_BALANCE_TOL, &q).unwrap();
        assert!(best.is_finite());
        let Region::Boxes(bs) = &r.partition.regions()[0] else { panic!() };
        let cut = bs[0].hi()[1];
        for j in 1..=20 {
            let delta = if j % 2 == 0 { 1.0 } else { -1.0 } * 0.01 * j as f64;
            let p = ContinuumPartition::slabs(rho.domain(), 1, &[cut + delta]).unwrap();
            let e = continuum_energy(&p, &rho, 1.0, &k, DEFAULT_BALANCE_TOL, &q).unwrap();
            assert!(best.value <= e.value, "{delta}");
        }
    }
}

#[test]
fn mu_quantile_on_uniform_box() {
    let rho = Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 4.0]).unwrap());
    let q = QuadratureRule::default();
    for (target, want) in [(0.25, 1.0), (0.5, 2.0), (0.9, 3.6)] {
        assert!((mu_quantile(&rho, 0.7, 1, target, &q).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn tv_eps_matches_square_closed_form() {
    // unit square, cut x = 1/2, indicator kernel: TV_ε = σ_η − ε/(2π)
    let rho = Density::uniform(Domain::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap());
    let k = Kernel::new(Profile::Indicator, 2).unwrap();
    let left = Region::single_box(AxisBox::new(&[0.0, 0.0], &[0.5, 1.0]).unwrap());
    let sigma = 4.0 / (3.0 * PI);
    let mut errors = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let est = tv_eps(Field::Indicator(&left), &rho, &k, eps, 2_000_000, 17).unwrap();
        let exact = sigma - eps / (2.0 * PI);
        assert!((est.mean - exact).abs() < 4.0 * est.std_err, "{eps}: {est:?} vs {exact}");
        errors.push((est.mean - sigma).abs());
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn mean_gtv_is_unbiased_for_tv_eps() {
    let rho = Density::uniform(Domain::interval(0.0, 1.0).unwrap());
    let k = Kernel::new(Profile::Indicator, 1).unwrap();
    let eps = 0.1;
    let trials = 200;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let cloud = sample(&rho, 300, 1000 + t).unwrap();
        let g = build_graph(&cloud, &k, eps).unwrap();
        let u: Vec<f64> = cloud.points().map(|p| if p[0] < 0.5 { 1.0 } else { 0.0 }).collect();
        let v = gtv(&g, &u).unwrap();
        sum += v;
        sum_sq += v * v;
    }
    let n = trials as f64;
    let mean = sum / n;
    let se = ((sum_sq / n - mean * mean) / (n - 1.0)).sqrt();
    assert!((mean - 0.5).abs() < 4.0 * se, "mean {mean} se {se}");
}

#[test]
fn lambda_eps_converges_linearly() {
    let q = QuadratureRule::gauss_legendre(48).unwrap();
    let k = Kernel::new(Profile::Epanechnikov, 1).unwrap();
    let rho = Density::uniform(Domain::interval(0.0, 1.0).unwrap());
    let r = Region::intervals(&[(0.0, 0.5)]).unwrap();
    for alpha in [-1.0, 0.5, 2.0] {
        let exact = lambda(Field::Indicator(&r), &rho, alpha, &q).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| (lambda_eps(Field::Indicator(&r), &rho, alpha, &k, e, &q).unwrap() - exact).abs())
            .collect();
        assert!(errs[0] > 0.0);
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 1.8, "alpha {alpha}: {errs:?}");
        }
    }
}
