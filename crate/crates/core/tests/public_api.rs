use mzkit::diagnostics::{frame_bounds, riesz_bounds, separation_constant, DiscreteMeasure};
use mzkit::generators::{generate_family, FamilyKind, GeneratorParams};
use mzkit::transport::vaserstein1;
use mzkit::{orthonormal_basis, poly_dim, Measure};
use proptest::prelude::*;

fn measures() -> Vec<Measure> {
    vec![
        Measure::ball(1, 0.5).unwrap(),
        Measure::ball(1, 1.5).unwrap(),
        Measure::ball(2, 0.5).unwrap(),
        Measure::ball(2, 1.0).unwrap(),
        Measure::cube(vec![(-1.0, 1.0), (0.0, 2.0)]).unwrap(),
        Measure::ellipsoid(vec![1.0, 0.5]).unwrap(),
    ]
}

#[test]
fn christoffel_integrates_to_dimension() {
    let k = 4;
    for m in measures() {
        let ps = orthonormal_basis(&m, k).unwrap();
        let total = m.integrate(|x| ps.kernel(x, x), 2 * k).unwrap();
        let dim = poly_dim(m.n(), k) as f64;
        assert!((total - dim).abs() < 1e-9 * dim, "{:?}: {total} vs {dim}", m.domain());
    }
}

#[test]
fn kernel_reproduces_monomials() {
    let k = 3;
    for m in measures() {
        let ps = orthonormal_basis(&m, k).unwrap();
        let x: Vec<f64> = (0..m.n()).map(|i| 0.2 + 0.1 * i as f64).collect();
        let p = |y: &[f64]| y.iter().map(|v| v * v * v - 0.5 * v).sum::<f64>() + 1.0;
        let got = m.integrate(|y| ps.kernel(&x, y) * p(y), 2 * k).unwrap();
        assert!((got - p(&x)).abs() < 1e-9, "{:?}: {got} vs {}", m.domain(), p(&x));
    }
}

#[test]
fn gauss_family_is_exact_interpolation_with_unit_weights() {
    let mut params = GeneratorParams::new(FamilyKind::Gauss1d, 1, vec![3, 7, 15]);
    params.a = 1.0;
    let fam = generate_family(&params).unwrap().family;
    let m = Measure::ball(1, 1.0).unwrap();
    for level in &fam.levels {
        let ps = orthonormal_basis(&m, level.k).unwrap();
        let r = riesz_bounds(&ps, &level.points).unwrap();
        assert!((r.eigmin - 1.0).abs() < 1e-10 && (r.eigmax - 1.0).abs() < 1e-10);
        let f = frame_bounds(&ps, &level.points).unwrap();
        assert_eq!(f.rank, level.k + 1);
        let sigma = DiscreteMeasure::from_level(&ps, &level.points);
        assert!((sigma.total_mass() - m.total_mass()).abs() < 1e-10);
    }
}

#[test]
fn random_separated_levels_respect_epsilon() {
    let mut params = GeneratorParams::new(FamilyKind::RandomSeparated, 2, vec![3, 6]);
    params.epsilon = Some(0.8);
    params.seed = 5;
    let fam = generate_family(&params).unwrap().family;
    let m = Measure::ball(2, 0.5).unwrap();
    for level in &fam.levels {
        let sep = separation_constant(&m, level.k, &level.points).unwrap();
        assert!(sep >= 0.8 - 1e-12, "k = {}: {sep}", level.k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_is_symmetric_and_cauchy_schwarz(
        x in prop::collection::vec(-0.7f64..0.7, 2),
        y in prop::collection::vec(-0.7f64..0.7, 2),
    ) {
        let m = Measure::ball(2, 0.5).unwrap();
        let ps = orthonormal_basis(&m, 5).unwrap();
        let kxy = ps.kernel(&x, &y);
        prop_assert!((kxy - ps.kernel(&y, &x)).abs() < 1e-10 * (1.0 + kxy.abs()));
        let bound = (ps.kernel(&x, &x) * ps.kernel(&y, &y)).sqrt();
        prop_assert!(kxy.abs() <= bound * (1.0 + 1e-10));
    }

    #[test]
    fn transport_is_a_metric_on_the_line(
        xs in prop::collection::vec(-1.0f64..1.0, 1..6),
        ys in prop::collection::vec(-1.0f64..1.0, 1..6),
    ) {
        let uniform = |pts: &[f64]| {
            let w = 1.0 / pts.len() as f64;
            DiscreteMeasure::new(
                pts.iter().map(|&p| mzkit::diagnostics::Atom { point: vec![p], mass: w }).collect(),
            )
            .unwrap()
        };
        let (a, b) = (uniform(&xs), uniform(&ys));
        let ab = vaserstein1(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - vaserstein1(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(vaserstein1(&a, &a).unwrap() < 1e-12);
    }
}
