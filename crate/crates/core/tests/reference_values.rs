//! Closed-form values checked against high-precision references.

use approx::assert_abs_diff_eq;
use entrobound::bounds::{
    alpha, discrete_entropy_bounds, empirical_bias, eta, min_valid_m, quantization_bias,
    statistical_deviation, total_bound,
};
use entrobound::densities::{
    discrete_mi_adversary, low_entropy_alt, prop1_mixture, TENT_ENTROPY_1D,
};
use entrobound::oracle::{
    check_xlogx_gap, entropy_continuity_gap, exact_discrete_entropy,
    expected_plugin_entropy_enum, kl_true_divergence, numeric_entropy, quantized_companion, sup_bound_constant,
};
use entrobound::{BoundParams, ContaminationSpec, DensityModel};

#[test]
fn constants() {
    assert_abs_diff_eq!(alpha::<f64>(), 0.120_753_802_434_276_43, epsilon = 1e-16);
    let table = [
        (1, 4.0, 1.0, 9),
        (1, 1.0, 2.0, 5),
        (2, 1.0, 1.144_714_242_553_331_9, 8),
        (2, 8.0, 0.572_357_121_276_665_9, 15),
        (1, 16.0, 0.5, 17),
        (5, 64.0, 0.336_042_145_371_266_52, 25),
        (25, 3.0, 0.415_508_861_242_024_8, 20),
    ];
    for (dim, l, e, m) in table {
        assert_abs_diff_eq!(eta::<f64>(dim, l).unwrap(), e, epsilon = 1e-13);
        assert_eq!(min_valid_m(dim, l).unwrap(), m, "K = {dim}, L = {l}");
    }
}

#[test]
fn bound_terms() {
    assert_abs_diff_eq!(
        quantization_bias::<f64>(1, 4.0, 16).unwrap(),
        0.346_573_590_279_972_65,
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        statistical_deviation::<f64>(10_000, 0.05).unwrap(),
        0.250_171_544_393_357_5,
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        empirical_bias::<f64>(4, 1000, 1_000_000).unwrap(),
        13.815_511_557_962_774,
        epsilon = 1e-12
    );
    let b = total_bound(&BoundParams::new(1, 1.0, 100, 1_000_000, 0.05).unwrap()).unwrap();
    assert_abs_diff_eq!(b.total, 0.064_116_313_591_567_22, epsilon = 1e-14);
}

#[test]
fn bound_in_single_precision() {
    let b = total_bound(&BoundParams::<f32>::new(1, 1.0, 100, 1_000_000, 0.05).unwrap()).unwrap();
    assert_abs_diff_eq!(b.total, 0.064_116_31f32, epsilon = 1e-6);
}

#[test]
fn discrete_entropy_lemma() {
    let b = discrete_entropy_bounds::<f64>(3, 5, 1.0).unwrap();
    assert_abs_diff_eq!(b.bias, 1.4f64.ln(), epsilon = 1e-15);
    assert_abs_diff_eq!(b.deviation, 0.847_455_599_643_759_5, epsilon = 1e-14);
    let pmf = [0.5, 0.3, 0.2];
    assert_abs_diff_eq!(exact_discrete_entropy(&pmf).unwrap(), 1.029_653_014_064_573_5, epsilon = 1e-14);
    assert_abs_diff_eq!(
        expected_plugin_entropy_enum(&pmf, 5).unwrap(),
        0.786_928_399_467_586_3,
        epsilon = 1e-13
    );
}

#[test]
fn entropies() {
    assert_abs_diff_eq!(TENT_ENTROPY_1D, -0.193_147_180_559_945_31, epsilon = 1e-16);
    let scaled = DensityModel::scaled_tent(1, 0.5f64.ln()).unwrap();
    assert_abs_diff_eq!(scaled.analytic_entropy().unwrap(), -0.886_294_361_119_890_6, epsilon = 1e-14);
    let q = numeric_entropy(&scaled, 1e-7).unwrap();
    assert_abs_diff_eq!(q.value, -0.886_294_361_119_890_6, epsilon = 1e-5);
}

#[test]
fn contamination_mixture_entropy() {
    let spec = ContaminationSpec {
        base: DensityModel::tent(1).unwrap(),
        alt: low_entropy_alt(1, -20.0).unwrap(),
        epsilon: 5e-4,
        gap: 19.0,
    };
    let mix = prop1_mixture(&spec).unwrap();
    assert_abs_diff_eq!(mix.analytic_entropy().unwrap(), -0.198_750_280_760_732_84, epsilon = 1e-12);
}

#[test]
fn adversary_values() {
    let adv = discrete_mi_adversary(1_000_000, 16, 1).unwrap();
    assert_abs_diff_eq!(adv.collision_bound(1000), 0.631_936_327_647_734_8, epsilon = 1e-12);
    assert!(adv.collision_probability(1000) <= adv.collision_bound(1000));
    let d = [
        (1.0, 0.1, 0.017_996_030_023_863_606),
        (1.0, 1.0, 0.725_596_469_771_984),
        (1.0, 3.0, 2.710_128_833_473_107_3),
        (2.0, 0.1, 0.032_047_264_505_248_53),
        (2.0, 1.0, 0.874_338_432_343_990_8),
        (2.0, 3.0, 2.874_266_113_665_855_4),
        (5.0, 0.1, 0.093_284_806_521_305_34),
        (5.0, 1.0, 0.993_284_804_121_976_2),
        (5.0, 3.0, 2.993_284_804_121_976),
    ];
    for (a, k, v) in d {
        assert_abs_diff_eq!(kl_true_divergence(a, k).unwrap(), v, epsilon = 1e-12);
    }
}

#[test]
fn lemma_constants() {
    assert_abs_diff_eq!(sup_bound_constant(2, 8.0).unwrap(), 4.578_856_970_213_327_5, epsilon = 1e-13);
    assert_abs_diff_eq!(sup_bound_constant(1, 16.0).unwrap(), 4.0, epsilon = 1e-14);
    let (lhs, rhs) = check_xlogx_gap(0.0, 0.1).unwrap();
    assert!(lhs <= rhs);
    assert_abs_diff_eq!(rhs, 0.230_258_509_299_404_57, epsilon = 1e-15);
    let tent = DensityModel::tent(1).unwrap();
    let q = quantized_companion(&tent, 32).unwrap();
    let c = entropy_continuity_gap(&tent, &q, 0.0625, 2.0, 1e-9).unwrap();
    assert_abs_diff_eq!(c.rhs, 0.216_608_493_924_982_9, epsilon = 1e-14);
    assert!(c.lhs < c.rhs && c.hypothesis_met);
}
