mod common;

use common::{random_population, rng};
use qualest::moments::{
    compute_moments, read_population_csv, write_population_csv, Design, Population,
};
use qualest::montecarlo::{enumerate_exact, simulate, DEFAULT_ENUMERATION_CAP};
use qualest::report::ParameterSet;
use qualest::synth::{synthesize, MomentTargets};
use qualest::theory::{ratio_theory, tn_min_mse};
use qualest::Preset;

fn home_population() -> (Population<f64>, Design<f64>) {
    let ps = ParameterSet::home_ownership();
    let t = MomentTargets {
        population_size: ps.population_size,
        proportion: ps.proportion,
        xbar: ps.xbar,
        c_x: ps.c_x,
        rho: ps.rho,
    };
    (synthesize(&t, 1).unwrap(), ps.design().unwrap())
}

#[test]
fn sample_estimated_weights_track_the_class_minimum() {
    let (pop, dz) = home_population();
    let m = compute_moments(&pop).unwrap();
    let r = simulate(
        &pop,
        dz.sample_size,
        &Preset::TnAdaptive.spec(&m),
        20_000,
        11,
    )
    .unwrap();
    let theory = tn_min_mse(&m, &dz).unwrap().mse;
    let gap = (r.empirical_mse - theory).abs() / theory;
    assert!(
        gap <= 0.25,
        "adaptive MSE {} vs {theory}: {gap}",
        r.empirical_mse
    );
    assert!(r.degenerate_sample_count < r.replications / 100);
}

#[test]
fn ratio_estimator_on_synthesized_population() {
    let (pop, dz) = home_population();
    let m = compute_moments(&pop).unwrap();
    let r = simulate(&pop, dz.sample_size, &Preset::Ts.spec(&m), 20_000, 5).unwrap();
    let theory = ratio_theory(&m, &dz).unwrap();
    assert!((r.empirical_mse - theory.mse).abs() / theory.mse <= 0.2);
    let bias_se = (r.empirical_mse / r.replications as f64).sqrt();
    assert!((r.empirical_bias - theory.bias).abs() < 5.0 * bias_se);
    assert_eq!(r.degenerate_sample_count, 0);
}

#[test]
fn simulation_agrees_with_enumeration_on_small_populations() {
    let mut g = rng(21);
    for _ in 0..5 {
        let pop = random_population(&mut g, 10, 5, 0.2);
        let m = compute_moments(&pop).unwrap();
        for preset in [
            Preset::P,
            Preset::Ts,
            Preset::Tn,
            Preset::TnqMember(1),
            Preset::Tns,
        ] {
            let spec = preset.spec(&m);
            let exact = enumerate_exact(&pop, 4, &spec, DEFAULT_ENUMERATION_CAP).unwrap();
            let mc = simulate(&pop, 4, &spec, 20_000, 3).unwrap();
            assert!(
                (mc.empirical_mse - exact.exact_mse).abs() < 5.0 * mc.mc_standard_error,
                "{preset}: {} vs {} (se {})",
                mc.empirical_mse,
                exact.exact_mse,
                mc.mc_standard_error
            );
        }
    }
}

#[test]
fn csv_round_trip_preserves_moments() {
    let (pop, _) = home_population();
    let mut buf = Vec::new();
    write_population_csv(&pop, &mut buf).unwrap();
    let back: Population<f64> = read_population_csv(buf.as_slice()).unwrap();
    assert_eq!(back, pop);
    assert_eq!(
        compute_moments(&back).unwrap(),
        compute_moments(&pop).unwrap()
    );
}
