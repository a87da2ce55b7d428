use entrobound::bounds::min_valid_m;
use entrobound::densities::affine_rescale;
use entrobound::estimators::{
    estimate_entropy_certified, estimate_mi_certified, kl_demo, DemoConfig, EstimateKind,
};
use entrobound::oracle::{check_lipschitz, numeric_mass};
use entrobound::{BoxSupport, DensityModel, Error, Samples};

#[test]
fn tent_estimate_is_covered() {
    let tent = DensityModel::tent(1).unwrap();
    let s = tent.sample(100_000, 7).unwrap();
    let r = estimate_entropy_certified(&s, 4.0, 0.1, None).unwrap();
    assert_eq!(r.kind, EstimateKind::Entropy);
    assert!(r.valid_for_theorem());
    assert!(r.covers(tent.analytic_entropy().unwrap()));
}

#[test]
fn single_sample_degenerate_estimate() {
    let m = min_valid_m(1, 4.0).unwrap();
    let s = Samples::from_scalars(vec![0.3]);
    let r = estimate_entropy_certified(&s, 4.0, 0.1, Some(m)).unwrap();
    assert_eq!(r.estimate, -(m as f64).ln());
    assert_eq!(r.bound.stat_dev, 0.0);
    assert!(r.bound.total.is_finite());
}

#[test]
fn invalid_inputs_rejected() {
    let s = Samples::from_scalars(vec![0.2, 1.5]);
    assert!(matches!(
        estimate_entropy_certified(&s, 4.0, 0.1, Some(100)),
        Err(Error::OutOfSupport { sample: 1, .. })
    ));
    let ok = Samples::from_scalars(vec![0.2, 0.5]);
    assert!(matches!(
        estimate_entropy_certified(&ok, 4.0, 0.1, Some(8)),
        Err(Error::BelowValidSteps { steps: 8, min_steps: 9 })
    ));
}

#[test]
fn stretched_tent_agrees_with_direct_estimate() {
    let tent = DensityModel::tent(1).unwrap();
    let s = tent.sample(100_000, 21).unwrap();
    let direct = estimate_entropy_certified(&s, 4.0, 0.1, None).unwrap();
    let stretched = s.map(|x| 2.0 * x);
    let support = BoxSupport::new(vec![0.0], vec![2.0]).unwrap();
    let r = affine_rescale(&stretched, &support, 1.0).unwrap();
    assert_eq!(r.lipschitz, 4.0);
    let via = estimate_entropy_certified(&r.samples, r.lipschitz, 0.1, None).unwrap();
    let shifted = via.estimate + r.entropy_offset - 2f64.ln();
    assert!((shifted - direct.estimate).abs() <= direct.bound.total + via.bound.total);
}

#[test]
fn independent_mi_near_zero() {
    let tent = DensityModel::tent(1).unwrap();
    let x = tent.sample(100_000, 1).unwrap();
    let y = tent.sample(100_000, 2).unwrap();
    // The joint of two independent tents is the 2-D tent.
    let r = estimate_mi_certified(&x, &y, 8.0, 0.1).unwrap();
    assert_eq!(r.kind, EstimateKind::MutualInformation);
    assert!(r.estimate.abs() <= r.bound.total);
    let [hx, hy, hxy] = [0, 1, 2].map(|i| r.terms[i].estimate);
    assert_eq!(r.estimate, hx + hy - hxy);
    let swapped = estimate_mi_certified(&y, &x, 8.0, 0.1).unwrap();
    assert_eq!(swapped.estimate, r.estimate);
}

#[test]
fn models_normalized_and_lipschitz() {
    let models = [
        DensityModel::tent(1).unwrap(),
        DensityModel::tent(2).unwrap(),
        DensityModel::uniform(2).unwrap(),
        DensityModel::trapezoid(0.3).unwrap(),
        DensityModel::scaled_tent(1, 0.25f64.ln()).unwrap(),
    ];
    for m in &models {
        let mass = numeric_mass(m, 1e-8).unwrap().value;
        assert!((mass - 1.0).abs() <= 1e-6, "{m:?}: mass {mass}");
        if let Some(l) = m.lipschitz() {
            let ratio = check_lipschitz(m, 100_000, 3).unwrap();
            assert!(ratio <= l * (1.0 + 1e-9), "{m:?}: {ratio} > {l}");
        }
    }
}

#[test]
fn kl_demo_parameters() {
    let r = kl_demo(&DemoConfig::new(1.0, 0.1, 100, 100, 5)).unwrap();
    assert!(r.true_value >= r.calibrated_b + 1.0);
    assert!(r.failure_fraction >= 0.9);
}
