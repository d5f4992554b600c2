mod common;

use common::{codes, mean, pearson, var};
use proptest::prelude::*;
use qualest::estimators::{eval_estimate, EstimatorSpec, Known, NShape, Weights};
use qualest::moments::{compute_moments, Design, Population, PopulationMoments, Sample};
use qualest::montecarlo::{draw_srswor, replication_rng};
use qualest::synth::{synthesize, MomentTargets};
use qualest::theory::{
    constants_n, gs_min_theory, gs_theory, ratio_theory, tn_min_mse, tn_quadratic, tnq_fixed,
    tnq_theory,
};
use qualest::Error;

fn population() -> impl Strategy<Value = Population<f64>> {
    (3usize..30)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(0.5f64..100.0, n),
            )
        })
        .prop_filter("attribute must vary", |(phi, _)| {
            phi.iter().any(|&b| b) && !phi.iter().all(|&b| b)
        })
        .prop_filter("x must vary", |(_, x)| {
            x.iter().any(|&v| (v - x[0]).abs() > 1e-6)
        })
        .prop_map(|(phi, x)| Population::new(phi, x).unwrap())
}

fn moments() -> impl Strategy<Value = (PopulationMoments<f64>, Design<f64>)> {
    (
        20usize..400,
        0.05f64..0.95,
        0.5f64..60.0,
        0.05f64..1.2,
        -0.98f64..0.98,
        0.0f64..1.0,
    )
        .prop_map(|(size, p, xbar, cx, rho, frac)| {
            let c_phi = (size as f64 * (1.0 - p) / ((size - 1) as f64 * p)).sqrt();
            let n = 2 + ((size - 3) as f64 * frac) as usize;
            (
                PopulationMoments::from_summary(p, xbar, c_phi, cx, rho).unwrap(),
                Design::new(n, size).unwrap(),
            )
        })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn moments_are_permutation_invariant(pop in population(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..pop.size()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut replication_rng(seed, 0));
        let shuffled = Population::new(
            order.iter().map(|&i| pop.phi()[i]).collect(),
            order.iter().map(|&i| pop.x()[i]).collect(),
        ).unwrap();
        let (a, b) = (compute_moments(&pop).unwrap(), compute_moments(&shuffled).unwrap());
        prop_assert!(close(a.proportion, b.proportion, 1e-12));
        prop_assert!(close(a.xbar, b.xbar, 1e-12));
        prop_assert!(close(a.c_x, b.c_x, 1e-10));
        prop_assert!(close(a.rho, b.rho, 1e-10));
    }

    #[test]
    fn attribute_variance_identity(pop in population()) {
        let m = compute_moments(&pop).unwrap();
        let n = pop.size() as f64;
        let p = m.proportion;
        prop_assert!(close(m.s2_phi, n * p * (1.0 - p) / (n - 1.0), 1e-13));
        prop_assert!(close(m.s2_phi, var(&codes(&pop)), 1e-13));
        prop_assert!(close(m.xbar, mean(pop.x()), 1e-13));
    }

    #[test]
    fn correlation_matches_pearson_and_ignores_affine_maps(
        pop in population(),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let m = compute_moments(&pop).unwrap();
        prop_assert!(close(m.rho, pearson(&codes(&pop), pop.x()), 1e-10));
        let moved = Population::new(pop.phi().to_vec(), pop.x().iter().map(|v| scale * v + shift + 1e3).collect()).unwrap();
        prop_assert!(close(compute_moments(&moved).unwrap().rho, m.rho, 1e-9));
        let flipped = Population::new(pop.phi().to_vec(), pop.x().iter().map(|v| 1e3 - scale * v).collect()).unwrap();
        prop_assert!(close(compute_moments(&flipped).unwrap().rho, -m.rho, 1e-9));
    }

    #[test]
    fn first_order_orderings((m, dz) in moments()) {
        let tn = tn_min_mse(&m, &dz).unwrap().mse;
        let gs = gs_min_theory(&m, &dz).unwrap().mse;
        let ts = ratio_theory(&m, &dz).unwrap().mse;
        prop_assert!(tn <= gs * (1.0 + 1e-12));
        prop_assert!(gs <= ts * (1.0 + 1e-12));
        for h in [-1.0, 0.0, 0.3, 2.0] {
            prop_assert!(gs <= gs_theory(&m, &dz, h * m.proportion).unwrap().mse * (1.0 + 1e-12));
        }
    }

    #[test]
    fn optimal_weights_minimize_the_surface(
        (m, dz) in moments(),
        alpha in -2.0f64..2.0,
        eta in 0.0f64..3.0,
        lambda in 0.1f64..5.0,
        w1 in -3.0f64..3.0,
        w2 in -3.0f64..3.0,
    ) {
        let c = constants_n(alpha, eta, lambda, m.xbar).unwrap();
        let q = tn_quadratic(&m, &dz, &c);
        let (best, _) = q.minimum().unwrap();
        prop_assert!(best <= q.value(w1, w2) + 1e-12 * q.constant.abs());
        let nq = tnq_theory(&m, &dz, &c).unwrap();
        prop_assert!(nq.mse <= tnq_fixed(&m, &dz, &c, w1).unwrap().mse + 1e-15);
        prop_assert!(nq.mse <= tnq_fixed(&m, &dz, &c, 1.0).unwrap().mse + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn synthesis_round_trip(
        size in 10usize..200,
        p in 0.1f64..0.9,
        xbar in 1.0f64..100.0,
        cx in 0.05f64..0.5,
        rho in -0.9f64..0.9,
        seed in any::<u64>(),
    ) {
        let t = MomentTargets { population_size: size, proportion: p, xbar, c_x: cx, rho };
        match synthesize(&t, seed) {
            Ok(pop) => {
                let m = compute_moments(&pop).unwrap();
                prop_assert_eq!(pop.attribute_count(), t.attribute_count());
                prop_assert!(close(m.xbar, xbar, 1e-9));
                prop_assert!(close(m.c_x, cx, 1e-9));
                prop_assert!((m.rho - rho).abs() < 1e-6);
                prop_assert!(pop.x().iter().all(|&v| v > 0.0));
            }
            Err(Error::InfeasibleTargets(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn named_members_reduce_to_their_closed_forms(pop in population(), seed in any::<u64>(), frac in 0.0f64..1.0) {
        let n = 2 + ((pop.size() - 2) as f64 * frac) as usize;
        let s: Sample<f64> = draw_srswor(&pop, n, &mut replication_rng(seed, 1)).unwrap();
        let big_x = pop.x_mean();
        let known = Known::auxiliary_mean(big_x);
        let member = |alpha: f64| EstimatorSpec::NClass {
            shape: NShape::new(alpha, 0.0, 1.0),
            weights: Weights::Fixed([1.0, 0.0]),
        };
        let eval = |spec: &EstimatorSpec<f64>| eval_estimate(spec, &s, &known).unwrap();
        prop_assert!(close(eval(&member(0.0)), s.p, 1e-13));
        prop_assert!(close(eval(&member(1.0)), eval(&EstimatorSpec::Ratio), 1e-12));
        prop_assert!(close(eval(&member(-1.0)), s.p * s.xbar / big_x, 1e-12));
        // d2 = 1, d1 = 0 returns the sample mean of x
        let aux = EstimatorSpec::NClass { shape: NShape::new(1.0, 1.0, 1.0), weights: Weights::Fixed([0.0, 1.0]) };
        prop_assert!(close(eval(&aux), s.xbar, 1e-12));
        let nq = EstimatorSpec::NqClass { shape: NShape::new(0.0, 0.0, 1.0), weights: Weights::Fixed(0.7) };
        prop_assert!(close(eval(&nq), 0.7 * s.p, 1e-13));

        prop_assert_eq!(s.size(), n);
        prop_assert!(s.indices.windows(2).all(|w| w[0] < w[1]));
    }
}
