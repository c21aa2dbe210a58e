use cbml::controllers::{deadbeat_platoon, StrategyKind};
use cbml::metrics::{
    analytic_ratio_static, estimate_ratios, optimal_cost, plant_seed, Numerator, RatioOptions,
};
use cbml::plantspace::{sample_plant, Density, EntryDensity, PlantFamily, Which};
use cbml::platoon::{build_platoon, PlatoonParams};
use cbml::sim::lyapunov_cost;

fn family() -> PlantFamily {
    build_platoon(&PlatoonParams::default()).unwrap()
}

#[test]
fn deadbeat_grid_exceeds_optimal() {
    let est = analytic_ratio_static(&family(), StrategyKind::Deadbeat, 5).unwrap();
    assert_eq!(est.n_plants, 625);
    assert!(est.skipped.is_empty());
    assert!(est.r_sup_hat > 1.01, "{}", est.r_sup_hat);
    assert!(est.per_plant.iter().all(|p| p.ratio >= 1.0 - 1e-9));
    assert!(est.r_ave_hat <= est.r_sup_hat);
}

#[test]
fn analytic_ratios_use_independent_costs() {
    let fam = family();
    let opts = RatioOptions {
        n_plants: 8,
        master_seed: 21,
        numerator: Numerator::Analytic,
        ..Default::default()
    };
    let est = estimate_ratios(&fam, StrategyKind::Deadbeat, &opts).unwrap();
    for p in &est.per_plant {
        let plant = sample_plant(&fam, plant_seed(21, p.index)).unwrap();
        let j = lyapunov_cost(&plant, &deadbeat_platoon(&plant).unwrap()).unwrap();
        assert!((p.j_strategy - j).abs() < 1e-12 * j);
        assert!((p.j_optimal - optimal_cost(&plant).unwrap()).abs() < 1e-12);
        assert_eq!(p.parameters, fam.free_values(&plant));
    }
}

#[test]
fn simulated_static_ratio_matches_analytic() {
    let fam = family();
    let base = RatioOptions {
        n_plants: 6,
        seeds_per_plant: 4,
        horizon: 20_000,
        master_seed: 2,
        ..Default::default()
    };
    let sim = estimate_ratios(&fam, StrategyKind::Deadbeat, &base).unwrap();
    let ana = estimate_ratios(
        &fam,
        StrategyKind::Deadbeat,
        &RatioOptions {
            numerator: Numerator::Analytic,
            ..base.clone()
        },
    )
    .unwrap();
    for (s, a) in sim.per_plant.iter().zip(&ana.per_plant) {
        assert_eq!(s.parameters, a.parameters);
        assert!(
            (s.ratio - a.ratio).abs() < 0.05 * a.ratio,
            "{} vs {}",
            s.ratio,
            a.ratio
        );
    }
    assert!((sim.r_ave_hat - ana.r_ave_hat).abs() < 0.05 * ana.r_ave_hat);
}

#[test]
fn ratio_estimates_are_deterministic() {
    let fam = family();
    let opts = RatioOptions {
        n_plants: 4,
        horizon: 400,
        master_seed: 8,
        ..Default::default()
    };
    let a = estimate_ratios(&fam, StrategyKind::ModifiedCk, &opts).unwrap();
    let b = estimate_ratios(&fam, StrategyKind::ModifiedCk, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.r_ave_hat <= a.r_sup_hat);
    assert_eq!(a.per_plant.len() + a.skipped.len(), 4);
}

#[test]
fn weighted_average_uses_density() {
    let mut fam = family();
    fam.density = Density::PiecewiseLinear(vec![EntryDensity {
        matrix: Which::A,
        row: 0,
        col: 0,
        knots: vec![0.0, 1.0],
    }]);
    let est = analytic_ratio_static(&fam, StrategyKind::Deadbeat, 3).unwrap();
    let (num, den) = est.per_plant.iter().fold((0.0, 0.0), |(n, d), p| {
        (n + p.weight * p.ratio, d + p.weight)
    });
    assert!((est.r_ave_hat - num / den).abs() < 1e-14);
    // a11 = 0 has zero density
    assert!(est
        .per_plant
        .iter()
        .filter(|p| p.parameters[0] == 0.0)
        .all(|p| p.weight == 0.0));
}

#[test]
fn invalid_options_rejected() {
    let fam = family();
    let zero = RatioOptions {
        n_plants: 0,
        ..Default::default()
    };
    assert!(estimate_ratios(&fam, StrategyKind::OptimalFullInfo, &zero).is_err());
    assert!(analytic_ratio_static(&fam, StrategyKind::Deadbeat, 0).is_err());
    let json = analytic_ratio_static(&fam, StrategyKind::Deadbeat, 2)
        .unwrap()
        .to_json();
    assert!(json.contains("\"r_sup_hat\""));
}
