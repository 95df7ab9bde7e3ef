use aperture_dof_core::fresnel::{
    effective_aperture, fresnel_dof, fresnel_equivalence_check, merge_tolerance, sbp_g3_fresnel,
    ApertureFunction, KernelModel,
};
use aperture_dof_core::sbp::{sbp_closed_form_g1, sbp_numeric};
use aperture_dof_core::{Aperture, Architecture, ArrayLayout, SceneSegment, WaveContext};
use proptest::collection::vec;
use proptest::prelude::*;

const LAMBDA: f64 = 0.005;

fn wave() -> WaveContext {
    WaveContext::new(LAMBDA).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effective_aperture_is_commutative(
        tx in vec(-0.075f64..0.075, 1..20),
        rx in vec(-0.075f64..0.075, 1..20),
    ) {
        let tol = merge_tolerance(&wave());
        let a = ApertureFunction::from_positions(&tx, tol).unwrap();
        let b = ApertureFunction::from_positions(&rx, tol).unwrap();
        prop_assert_eq!(effective_aperture(&a, &b, tol), effective_aperture(&b, &a, tol));
    }

    #[test]
    fn effective_aperture_keeps_every_pair(
        tx in vec(-0.075f64..0.075, 1..20),
        rx in vec(-0.075f64..0.075, 1..20),
    ) {
        let tol = merge_tolerance(&wave());
        let a = ApertureFunction::from_positions(&tx, tol).unwrap();
        let b = ApertureFunction::from_positions(&rx, tol).unwrap();
        let eff = effective_aperture(&a, &b, tol);
        prop_assert_eq!(eff.total_count(), tx.len() * rx.len());
        let lo = tx.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0
            + rx.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
        prop_assert_eq!(eff.positions()[0], lo);
    }

    #[test]
    fn fresnel_dof_tends_to_g1_sbp(l1 in 0.02f64..0.5, l2 in 0.02f64..0.5) {
        let d = 10.0 * (l1 + l2);
        let f = fresnel_dof(l1, l2, d, LAMBDA).unwrap();
        let s = sbp_closed_form_g1(l1, l2, d, LAMBDA).unwrap().value;
        prop_assert!((f - s).abs() / f < 0.02);
    }
}

#[test]
fn fresnel_gap_is_second_order_in_size_over_standoff() {
    let (l1, l2) = (0.15, 0.1);
    let gap = |d: f64| {
        let f = fresnel_dof(l1, l2, d, LAMBDA).unwrap();
        (f - sbp_closed_form_g1(l1, l2, d, LAMBDA).unwrap().value) / f
    };
    for d in [2.0, 4.0, 8.0] {
        let ratio = gap(d) / gap(2.0 * d);
        assert!((ratio - 4.0).abs() < 0.05, "D = {d}: {ratio}");
    }
}

#[test]
fn rotated_fresnel_sbp_near_numeric_at_moderate_range() {
    let w = wave();
    let d = 0.6;
    let theta = 35f64.to_radians();
    let ap = Aperture::centered(0.15, d).unwrap();
    let scene = SceneSegment::with_length(0.1, theta, 0.0).unwrap();
    let numeric = sbp_numeric(&scene, &ap, &w, 512).unwrap().value;
    let approx = sbp_g3_fresnel(0.15, 0.1, d, LAMBDA, theta).unwrap();
    assert!((approx - numeric).abs() / numeric < 0.10, "{approx} vs {numeric}");
}

#[test]
fn uniform_array_effective_aperture_is_triangular() {
    let tol = merge_tolerance(&wave());
    let ap = Aperture::centered(0.15, 0.2).unwrap();
    let n = 40;
    let layout = ArrayLayout::uniform(Architecture::Multistatic, &ap, n).unwrap();
    let a = ApertureFunction::from_positions(layout.tx_positions(), tol).unwrap();
    let eff = effective_aperture(&a, &a, tol);
    assert_eq!(eff.len(), 2 * n - 1);
    for (i, &(_, m)) in eff.elements().iter().enumerate() {
        assert_eq!(m, (i + 1).min(2 * n - 1 - i));
    }
}

#[test]
fn exact_kernel_breaks_the_equivalence_at_short_range() {
    let w = wave();
    let scene = SceneSegment::with_length(0.1, 0.0, 0.0).unwrap();
    let d = 0.2;
    let ap = Aperture::centered(0.15, d).unwrap();
    let layout = ArrayLayout::uniform(Architecture::Multistatic, &ap, 40).unwrap();
    let fresnel = fresnel_equivalence_check(&layout, &scene, &w, d, 120, KernelModel::Fresnel).unwrap();
    let exact = fresnel_equivalence_check(&layout, &scene, &w, d, 120, KernelModel::Exact).unwrap();
    assert!(fresnel.max_relative_discrepancy < 1e-6, "{}", fresnel.max_relative_discrepancy);
    assert!(exact.max_relative_discrepancy > 1e-3, "{}", exact.max_relative_discrepancy);
}

#[test]
fn monostatic_array_is_its_own_effective_aperture() {
    let w = wave();
    let scene = SceneSegment::with_length(0.1, 0.0, 0.0).unwrap();
    let ap = Aperture::centered(0.15, 0.5).unwrap();
    let layout = ArrayLayout::uniform(Architecture::Monostatic, &ap, 30).unwrap();
    for model in [KernelModel::Fresnel, KernelModel::Exact] {
        let r = fresnel_equivalence_check(&layout, &scene, &w, 0.5, 60, model).unwrap();
        assert_eq!(r.effective_aperture.len(), 30);
        assert!(r.max_relative_discrepancy < 1e-6);
    }
}
