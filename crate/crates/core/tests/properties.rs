use proptest::prelude::*;

use wellsplit::quadrature::integrate;
use wellsplit::wellbox::inner_product_quadrature;
use wellsplit::{
    combined_cost, evolve, evolve_split, helstrom_cost, posterior_update, split, split_overlap,
    BoxState, Complex64, Outcome, Quadrature, Scenario, SignalModel, WellGeometry,
};

fn geometry() -> impl Strategy<Value = WellGeometry> {
    (-2.0..2.0f64, 0.3..3.0f64, 0.2..5.0f64, 0.2..3.0f64)
        .prop_map(|(x, l, m, h)| WellGeometry::new(x, l, m, h).unwrap())
}

fn state_in(geom: WellGeometry, max_modes: usize) -> impl Strategy<Value = BoxState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=max_modes).prop_filter_map(
        "zero vector",
        move |ws| {
            let weights: Vec<_> = ws
                .iter()
                .enumerate()
                .map(|(k, &(re, im))| (k + 1, Complex64::new(re, im)))
                .collect();
            BoxState::from_weights(geom, &weights).ok().map(|(s, _)| s)
        },
    )
}

fn pair(max_modes: usize) -> impl Strategy<Value = (BoxState, BoxState)> {
    geometry().prop_flat_map(move |g| (state_in(g, max_modes), state_in(g, max_modes)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalized_self_overlap_is_one((a, _) in pair(32)) {
        prop_assert!((a.inner_product(&a).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn walls_are_nodes((a, _) in pair(32)) {
        let g = *a.geometry();
        prop_assert_eq!(a.eval(g.x_left).unwrap(), Complex64::new(0.0, 0.0));
        prop_assert_eq!(a.eval(g.x_right()).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn spectral_overlap_equals_position_quadrature((a, b) in pair(32)) {
        let spectral = a.inner_product(&b).unwrap();
        let quad = inner_product_quadrature(&a, &b, &Quadrature::new(1e-12)).unwrap();
        prop_assert!((spectral - quad).norm() < 1e-10, "{} vs {}", spectral, quad);
    }

    #[test]
    fn pure_states_have_their_eigenenergy(g in geometry(), n in 1usize..40) {
        let s = BoxState::eigenstate(g, n).unwrap();
        prop_assert_eq!(s.energy_expectation().unwrap(), g.eigenenergy(n).unwrap());
    }

    #[test]
    fn evolution_is_unitary((a, b) in pair(24), t in -50.0..50.0f64) {
        let before = a.inner_product(&b).unwrap().norm();
        let after = evolve(&a, t).inner_product(&evolve(&b, t)).unwrap().norm();
        prop_assert!((before - after).abs() < 1e-12);
        prop_assert!((evolve(&a, t).norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_is_linear(
        (u, v) in pair(8),
        frac in 0.05..0.95f64,
        alpha in (-1.0..1.0f64, -1.0..1.0f64),
        beta in (-1.0..1.0f64, -1.0..1.0f64),
    ) {
        let (alpha, beta) = (Complex64::new(alpha.0, alpha.1), Complex64::new(beta.0, beta.1));
        let mix = u.combine(alpha, &v, beta).unwrap();
        prop_assume!(mix.norm_sq() > 1e-3);
        let norm = mix.norm_sq().sqrt();
        let mix = mix.scaled(Complex64::new(1.0 / norm, 0.0));
        let a = u.geometry().x_left + frac * u.geometry().width;
        let n_cut = 40;
        let (su, sv, sm) = (split(&u, a, n_cut).unwrap(), split(&v, a, n_cut).unwrap(), split(&mix, a, n_cut).unwrap());
        for (side_u, side_v, side_m) in [(su.left(), sv.left(), sm.left()), (su.right(), sv.right(), sm.right())] {
            for n in 1..=n_cut {
                let expected = (alpha * side_u.coefficient(n) + beta * side_v.coefficient(n)) / norm;
                prop_assert!((side_m.coefficient(n) - expected).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn residual_shrinks_with_the_cutoff((a, _) in pair(6), frac in 0.05..0.95f64) {
        let x = a.geometry().x_left + frac * a.geometry().width;
        let mut last = f64::INFINITY;
        for n_cut in [4, 16, 64, 256, 1024] {
            let r = split(&a, x, n_cut).unwrap().truncation_residual();
            prop_assert!(r > -1e-12);
            prop_assert!(r <= last + 1e-14);
            last = r;
        }
        prop_assert!(last < 2e-2);
    }

    #[test]
    fn split_overlap_recovers_the_full_overlap((a, b) in pair(6), frac in 0.05..0.95f64) {
        let x = a.geometry().x_left + frac * a.geometry().width;
        let full = a.inner_product(&b).unwrap();
        let mut last = f64::INFINITY;
        for n_cut in [64, 512, 4096] {
            let o = split_overlap(&split(&a, x, n_cut).unwrap(), &split(&b, x, n_cut).unwrap()).unwrap();
            let err = (o.total - full).norm();
            prop_assert!(err <= last * 1.01 + 1e-12);
            last = err;
        }
        prop_assert!(last < 2e-3);
    }

    #[test]
    fn split_evolution_preserves_overlaps((a, b) in pair(6), t in 0.0..10.0f64) {
        let x = a.geometry().x_left + 0.4 * a.geometry().width;
        let (sa, sb) = (split(&a, x, 64).unwrap(), split(&b, x, 64).unwrap());
        let before = split_overlap(&sa, &sb).unwrap();
        let after = split_overlap(&evolve_split(&sa, t), &evolve_split(&sb, t)).unwrap();
        prop_assert!((before.left.norm() - after.left.norm()).abs() < 1e-12);
        prop_assert!((before.right.norm() - after.right.norm()).abs() < 1e-12);
    }

    #[test]
    fn helstrom_is_symmetric_and_bounded(xi in 0.0..=1.0f64, k in 0.0..=1.0f64) {
        let c = helstrom_cost(xi, k).unwrap();
        prop_assert!((c - helstrom_cost(1.0 - xi, k).unwrap()).abs() < 1e-15);
        prop_assert!(c >= 0.0 && c <= xi.min(1.0 - xi) + 1e-15);
    }

    #[test]
    fn posterior_stays_a_probability(xi in 0.0..=1.0f64, fp in 0.0..=1.0f64, fnr in 0.0..=1.0f64, detect in any::<bool>()) {
        let model = SignalModel::BinaryDetector { false_positive: fp, false_negative: fnr };
        let outcome = if detect { Outcome::Detect } else { Outcome::NoDetect };
        if let Ok(p) = posterior_update(xi, &model, outcome) {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        let coin = SignalModel::symmetric_detector(0.5);
        prop_assert_eq!(posterior_update(xi, &coin, outcome).unwrap(), xi);
    }

    #[test]
    fn combined_cost_never_beats_zero_or_exceeds_baseline(
        xi in 0.0..=1.0f64,
        fp in 0.0..=1.0f64,
        fnr in 0.0..=1.0f64,
        gauss in (0.0..3.0f64, 0.05..2.0f64),
        use_gauss in any::<bool>(),
    ) {
        let g = WellGeometry::default();
        let one = Complex64::new(1.0, 0.0);
        let a = BoxState::eigenstate(g, 2).unwrap();
        let b = BoxState::from_weights(g, &[(1, one), (2, one)]).unwrap().0;
        let signal = if use_gauss {
            SignalModel::GaussianReadout { mu_nodal: 0.0, mu_nonnodal: gauss.0, sigma: gauss.1 }
        } else {
            SignalModel::BinaryDetector { false_positive: fp, false_negative: fnr }
        };
        let c = combined_cost(&Scenario::new(xi, a.clone(), b.clone(), 0.5, signal).unwrap(), 16).unwrap();
        prop_assert!(c.combined_cost >= 0.0);
        prop_assert!(c.combined_cost <= c.helstrom_baseline + 1e-12);
        prop_assert!(c.combined_cost <= xi.min(1.0 - xi) + 1e-12);
        let mass: f64 = c.posterior_table.iter().map(|r| r.probability).sum();
        prop_assert!((mass - 1.0).abs() < 1e-9);

        // relabel: B becomes the first hypothesis with prior 1 - xi
        let swapped = combined_cost(&Scenario::new(1.0 - xi, b, a, 0.5, signal).unwrap(), 16).unwrap();
        prop_assert!((swapped.combined_cost - c.combined_cost).abs() < 1e-12);
    }
}

#[test]
fn helstrom_is_concave_in_the_prior() {
    for k in [0.1, 0.5, 0.9, 1.0] {
        let h = 1e-3;
        let mut xi = h;
        while xi < 1.0 - h {
            let second = helstrom_cost(xi + h, k).unwrap() - 2.0 * helstrom_cost(xi, k).unwrap()
                + helstrom_cost(xi - h, k).unwrap();
            assert!(second <= 1e-14, "k = {k}, xi = {xi}: {second}");
            xi += 0.01;
        }
    }
}

#[test]
fn closed_form_quadrature_oracle_for_the_first_modes() {
    use wellsplit::midpoint_coefficients_n1;
    use std::f64::consts::{PI, SQRT_2};
    for n in 1..=16 {
        let nf = n as f64;
        let left = integrate(|x| SQRT_2 * (PI * x).sin() * 2.0 * (2.0 * nf * PI * x).sin(), 0.0, 0.5, 1e-13).unwrap();
        let right = integrate(
            |x| SQRT_2 * (PI * x).sin() * 2.0 * (2.0 * nf * PI * (x - 0.5)).sin(),
            0.5,
            1.0,
            1e-13,
        )
        .unwrap();
        let (l, r) = midpoint_coefficients_n1(n).unwrap();
        assert!((l - left).abs() < 1e-12 && (r - right).abs() < 1e-12, "n = {n}");
    }
}
