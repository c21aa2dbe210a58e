use cbml::controllers::optimal_full_info;
use cbml::matlin::{solve_dare, DareOptions, Mat};
use cbml::plantspace::{
    centralized_mask, known_mask, sample_plant, unwhiten, whiten, Density, EntryDensity, EntryRole,
    EntrySpec, InfoStructure, NoiseModel, PlantFamily, Which, MAX_REJECTIONS,
};
use cbml::platoon::{build_platoon, platoon_plant, PlatoonParams};
use cbml::sim::lyapunov_cost_with;
use cbml::Error;

fn platoon() -> PlantFamily {
    build_platoon(&PlatoonParams::default()).unwrap()
}

#[test]
fn whitening_scales_inputs_by_inverse_root() {
    let plant = platoon_plant(&PlatoonParams::default()).unwrap();
    let h = NoiseModel::Covariances(vec![Mat::from_diag(&[4.0]), Mat::from_diag(&[4.0, 4.0])]);
    let w = whiten(&plant, &h).unwrap();
    assert!((&w.b - &plant.b.scale(0.5)).max_abs() < 1e-12);
    // D⁻¹AD with D = 2I leaves A alone
    assert!((&w.a - &plant.a).max_abs() < 1e-12);
    assert!((&w.q - &plant.q.scale(4.0)).max_abs() < 1e-12);
}

#[test]
fn whitening_round_trips_and_keeps_optimal_cost() {
    let plant = platoon_plant(&PlatoonParams::default()).unwrap();
    let h1 = Mat::from_diag(&[2.5]);
    let h2 = Mat::from_rows(&[[1.5, 0.4], [0.4, 0.8]]).unwrap();
    let noise = NoiseModel::Covariances(vec![h1.clone(), h2.clone()]);
    let w = whiten(&plant, &noise).unwrap();
    let back = unwhiten(&w, &noise).unwrap();
    assert!((&back.a - &plant.a).max_abs() < 1e-12);
    assert!((&back.b - &plant.b).max_abs() < 1e-12);
    assert!((&back.q - &plant.q).max_abs() < 1e-12);

    // The white-noise optimum of the transformed plant must equal the
    // coloured-noise cost of the original optimal gain.
    let mut cov = Mat::zeros(3, 3);
    cov.set_block(0, 0, &h1);
    cov.set_block(1, 1, &h2);
    let coloured = lyapunov_cost_with(&plant, &optimal_full_info(&plant).unwrap(), &cov).unwrap();
    let white = solve_dare(&w.a, &w.b, &w.q, &w.r, &DareOptions::default())
        .unwrap()
        .x
        .trace();
    assert!(
        (white - coloured).abs() < 1e-8 * coloured,
        "{white} vs {coloured}"
    );
}

#[test]
fn unit_covariance_is_identity_transform() {
    let plant = platoon_plant(&PlatoonParams::default()).unwrap();
    assert_eq!(whiten(&plant, &NoiseModel::UnitCovariance).unwrap(), plant);
}

#[test]
fn covariance_shape_is_checked() {
    let plant = platoon_plant(&PlatoonParams::default()).unwrap();
    let wrong = NoiseModel::Covariances(vec![Mat::identity(1)]);
    assert!(matches!(
        whiten(&plant, &wrong),
        Err(Error::DimensionMismatch(_))
    ));
    let indefinite = NoiseModel::Covariances(vec![Mat::from_diag(&[-1.0]), Mat::identity(2)]);
    assert_eq!(
        whiten(&plant, &indefinite).unwrap_err(),
        Error::NotPositiveDefinite
    );
}

#[test]
fn samples_lie_in_box_and_are_reproducible() {
    let fam = platoon();
    let free = fam.free_entries();
    for seed in 0..50 {
        let p = sample_plant(&fam, seed).unwrap();
        let v = fam.free_values(&p);
        for (f, x) in free.iter().zip(&v) {
            assert!(f.lo <= *x && *x <= f.hi, "{} = {x}", f.label());
        }
        assert_eq!(sample_plant(&fam, seed).unwrap(), p);
        // fixed entries untouched
        assert_eq!(p.a[(1, 1)], 1.0);
        assert_eq!(p.b[(1, 0)], 0.0);
    }
    assert_ne!(
        sample_plant(&fam, 1).unwrap(),
        sample_plant(&fam, 2).unwrap()
    );
}

#[test]
fn unstabilizable_box_exhausts_rejections() {
    let fam = PlantFamily::new(
        InfoStructure::single(1, 1),
        vec![vec![EntrySpec::Free([2.0, 3.0])]],
        vec![vec![EntrySpec::Zero]],
        Mat::identity(1),
        Mat::identity(1),
        Density::Uniform,
    )
    .unwrap();
    assert_eq!(
        sample_plant(&fam, 0).unwrap_err(),
        Error::RejectionLimitExceeded(MAX_REJECTIONS)
    );
}

#[test]
fn json_round_trip() {
    let fam = PlantFamily::new(
        platoon().info,
        platoon().a_spec,
        platoon().b_spec,
        Mat::identity(3),
        Mat::identity(2),
        Density::PiecewiseLinear(vec![EntryDensity {
            matrix: Which::A,
            row: 0,
            col: 0,
            knots: vec![1.0, 3.0],
        }]),
    )
    .unwrap();
    let text = fam.to_json();
    assert_eq!(PlantFamily::from_json(&text).unwrap(), fam);
    assert!(PlantFamily::from_json("{\"state_dims\": [1]}").is_err());
}

#[test]
fn density_weights_follow_knots() {
    let mut fam = platoon();
    fam.density = Density::PiecewiseLinear(vec![EntryDensity {
        matrix: Which::A,
        row: 0,
        col: 0,
        knots: vec![1.0, 3.0],
    }]);
    // linear 1 → 3 on [0, 1] has mean 2
    assert!((fam.density_weight(&[0.0, 0.5, 1.0, 1.0]) - 0.5).abs() < 1e-12);
    assert!((fam.density_weight(&[1.0, 0.5, 1.0, 1.0]) - 1.5).abs() < 1e-12);
    assert!((fam.density_weight(&[0.5, 0.5, 1.0, 1.0]) - 1.0).abs() < 1e-12);
}

#[test]
fn masks_partition_free_entries() {
    let fam = platoon();
    let total = fam.free_entries().len();
    let labels = |roles: &[EntryRole], mask: &cbml::plantspace::EntryMask| -> Vec<String> {
        fam.free_entries()
            .into_iter()
            .filter(|f| roles.contains(&mask.role(f.matrix, f.row, f.col)))
            .map(|f| f.label())
            .collect()
    };
    let m1 = known_mask(&fam, 0).unwrap();
    let m2 = known_mask(&fam, 1).unwrap();
    assert_eq!(labels(&[EntryRole::Known], &m1), ["a11", "b11"]);
    assert_eq!(labels(&[EntryRole::Free], &m1), ["a33", "b32"]);
    assert_eq!(labels(&[EntryRole::Free], &m2), ["a11", "b11"]);
    for m in [&m1, &m2] {
        assert_eq!(
            m.free_entries(&fam).len() + labels(&[EntryRole::Known], m).len(),
            total
        );
        assert_eq!(
            m.count(EntryRole::Known) + m.count(EntryRole::Free) + m.count(EntryRole::ZeroByGraph),
            15
        );
    }
    let c = centralized_mask(&fam);
    assert_eq!(c.free_entries(&fam).len(), total);
    // graph zeros are never decision variables
    assert_eq!(c.role(Which::A, 0, 1), EntryRole::ZeroByGraph);
    assert!(known_mask(&fam, 2).is_err());
}
