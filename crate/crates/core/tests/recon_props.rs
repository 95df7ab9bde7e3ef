use aperture_dof_core::kspace::bandwidth;
use aperture_dof_core::operator::{build_operator, build_operator_on_points};
use aperture_dof_core::recon::{
    beamwidth_3db, reconstruct_mf, reconstruct_pinv, resolution_sweep, Reconstructor, ReconMethod,
    ResolutionSettings,
};
use aperture_dof_core::{Aperture, Architecture, ArrayLayout, DiscreteOperator, Point2, SceneSegment, WaveContext};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn wave() -> WaveContext {
    WaveContext::new(0.005).unwrap()
}

fn operator(arch: Architecture, n: usize, scene: &SceneSegment, d: f64, n_scene: usize) -> DiscreteOperator {
    let ap = Aperture::centered(0.15, d).unwrap();
    let layout = ArrayLayout::uniform(arch, &ap, n).unwrap();
    build_operator(scene, &layout, &ap, &wave(), n_scene).unwrap()
}

fn g1() -> SceneSegment {
    SceneSegment::with_length(0.1, 0.0, 0.0).unwrap()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn random_reflectivity(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn pinv_beats_any_scaled_matched_filter() {
    let op = operator(Architecture::Monostatic, 60, &g1(), 0.05, 20);
    let rec = Reconstructor::new(&op, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let gamma = random_reflectivity(&mut rng, 20);
        let data = op.forward(&gamma).unwrap();
        let pinv = rec.pinv(&data, rec.max_rank()).unwrap();
        let mf = rec.mf(&data).unwrap();
        let m = mf.values();
        let c = m.iter().zip(&gamma).map(|(a, b)| a.conj() * b).sum::<Complex64>()
            / m.iter().map(|a| a.norm_sqr()).sum::<f64>();
        let e_pinv: Vec<Complex64> = pinv.values().iter().zip(&gamma).map(|(a, b)| a - b).collect();
        let e_mf: Vec<Complex64> = m.iter().zip(&gamma).map(|(a, b)| a * c - b).collect();
        assert!(norm(&e_pinv) <= norm(&e_mf) + 1e-12 * norm(&gamma));
    }
}

#[test]
fn truncated_pinv_is_the_projection_onto_leading_vectors() {
    let op = operator(Architecture::Multistatic, 16, &g1(), 0.2, 60);
    let rec = Reconstructor::new(&op, 1).unwrap();
    let right = rec.spectrum().right_vectors().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gamma = random_reflectivity(&mut rng, 60);
    let g = op.reflectivity_to_scaled(&gamma);
    let rank = rec.default_rank();
    let mut proj = vec![Complex64::new(0.0, 0.0); 60];
    for i in 0..rank {
        let c: Complex64 = (0..60).map(|r| right[(r, i)].conj() * g[r]).sum();
        for r in 0..60 {
            proj[r] += c * right[(r, i)];
        }
    }
    let expect = op.scaled_to_reflectivity(&proj);
    let img = rec.pinv(&op.forward(&gamma).unwrap(), rank).unwrap();
    let diff: Vec<Complex64> = img.values().iter().zip(&expect).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-8 * norm(&expect));
}

#[test]
fn flat_spectrum_pinv_is_scaled_matched_filter() {
    // A single scene sample has one singular value.
    let w = wave();
    let ap = Aperture::centered(0.15, 0.2).unwrap();
    let layout = ArrayLayout::uniform(Architecture::Multistatic, &ap, 10).unwrap();
    let op = build_operator_on_points(vec![0.0], vec![Point2::new(0.01, 0.0)], 0.1, &layout, &ap, &w).unwrap();
    let rec = Reconstructor::new(&op, 1).unwrap();
    let sigma = rec.spectrum().singular_values()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = random_reflectivity(&mut rng, op.rows());
    let pinv = rec.pinv(&data, 1).unwrap();
    let mf = reconstruct_mf(&op, &data).unwrap();
    let scaled = mf.values()[0] / (sigma * sigma);
    assert!((pinv.values()[0] - scaled).norm() <= 1e-12 * scaled.norm());
}

#[test]
fn single_measurement_mf_is_the_conjugate_kernel() {
    let w = wave();
    let ap = Aperture::centered(0.15, 0.2).unwrap();
    let layout = ArrayLayout::monostatic(vec![0.02], 0.15).unwrap();
    let scene = g1();
    let op = build_operator(&scene, &layout, &ap, &w, 50).unwrap();
    let img = reconstruct_mf(&op, &[Complex64::new(1.0, 0.0)]).unwrap();
    for c in 0..50 {
        let expected = op.raw_entry(0, c).conj() * op.row_weight();
        assert!((img.values()[c] - expected).norm() < 1e-12);
    }
}

#[test]
fn matched_filter_kernel_is_hermitian() {
    let op = operator(Architecture::Multistatic, 20, &SceneSegment::with_length(0.1, 0.4, 0.05).unwrap(), 0.2, 80);
    let kappa = op.cross_gram(op.scene_points()).unwrap();
    let scale = kappa.iter().map(|x| x.norm()).fold(0.0, f64::max);
    for r in 0..80 {
        for c in 0..80 {
            assert!((kappa[(r, c)] - kappa[(c, r)].conj()).norm() <= 1e-10 * scale);
        }
    }
}

#[test]
fn point_targets_reconstruct_at_their_position() {
    let op = operator(Architecture::Monostatic, 200, &g1(), 0.2, 400);
    let rec = Reconstructor::new(&op, 1).unwrap();
    let rank = rec.default_rank();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cell = 0.1 / 400.0;
    for _ in 0..20 {
        let p = rng.gen_range(40..360);
        let mut gamma = vec![Complex64::new(0.0, 0.0); 400];
        gamma[p] = Complex64::new(1.0 / op.col_weight(), 0.0);
        let img = reconstruct_pinv(&op, &op.forward(&gamma).unwrap(), rank).unwrap();
        let peak = img.peak_coord().unwrap();
        assert!((peak - op.scene_coords()[p]).abs() <= cell + 1e-12, "target {p}");
    }
}

#[test]
fn pinv_psf_translates_with_the_target() {
    let op = operator(Architecture::Monostatic, 200, &g1(), 0.2, 400);
    let rec = Reconstructor::new(&op, 1).unwrap();
    let rank = rec.default_rank();
    let cell = 0.1 / 400.0;
    let base = rec.psf(200, ReconMethod::Pinv, rank).unwrap().peak_coord().unwrap();
    for shift in [-120i64, -37, 15, 90] {
        let p = (200 + shift) as usize;
        let peak = rec.psf(p, ReconMethod::Pinv, rank).unwrap().peak_coord().unwrap();
        assert!((peak - base - shift as f64 * cell).abs() <= cell + 1e-12);
    }
}

#[test]
fn flat_band_mf_width_matches_sinc() {
    let w = wave();
    let (l1, d) = (0.15, 2.0);
    let scene = g1();
    let op = operator(Architecture::Monostatic, 200, &scene, d, 400);
    let rec = Reconstructor::new(&op, 4).unwrap();
    let width = beamwidth_3db(&rec.psf(200, ReconMethod::Mf, 1).unwrap()).unwrap();
    // |sin x / x| = 1/√2 by bisection.
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid.sin() / mid > std::f64::consts::FRAC_1_SQRT_2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let half = l1 / 2.0;
    let b = 2.0 / w.wavelength() * 2.0 * half / half.hypot(d);
    let expected = 2.0 * lo / (std::f64::consts::PI * b);
    assert!((width - expected).abs() / expected < 0.05, "{width} vs {expected}");
}

#[test]
fn pinv_is_sharper_than_mf_at_the_center() {
    for arch in [Architecture::Monostatic, Architecture::Multistatic] {
        let op = operator(arch, 100, &g1(), 0.4, 200);
        let rec = Reconstructor::new(&op, 4).unwrap();
        let rank = rec.default_rank();
        let pinv = beamwidth_3db(&rec.psf(100, ReconMethod::Pinv, rank).unwrap()).unwrap();
        let mf = beamwidth_3db(&rec.psf(100, ReconMethod::Mf, rank).unwrap()).unwrap();
        assert!(pinv <= mf, "{arch:?}: {pinv} vs {mf}");
    }
}

#[test]
fn multistatic_mf_loses_more_resolution() {
    let ratio = |arch| {
        let op = operator(arch, 100, &g1(), 0.4, 200);
        let rec = Reconstructor::new(&op, 4).unwrap();
        let rank = rec.default_rank();
        let pinv = beamwidth_3db(&rec.psf(100, ReconMethod::Pinv, rank).unwrap()).unwrap();
        let mf = beamwidth_3db(&rec.psf(100, ReconMethod::Mf, rank).unwrap()).unwrap();
        mf / pinv
    };
    let mono = ratio(Architecture::Monostatic);
    let multi = ratio(Architecture::Multistatic);
    assert!(multi > mono, "{mono} vs {multi}");
}

fn sweep(scene: &SceneSegment, d: f64, stride: usize) -> (Vec<f64>, Vec<Option<f64>>, Vec<f64>) {
    let ap = Aperture::centered(0.15, d).unwrap();
    let layout = ArrayLayout::uniform(Architecture::Monostatic, &ap, 100).unwrap();
    let settings = ResolutionSettings::strided(200, stride);
    let curve = resolution_sweep(scene, &ap, &wave(), &layout, &[ReconMethod::Pinv], &settings).unwrap();
    let widths = curve.widths(ReconMethod::Pinv).unwrap().to_vec();
    (curve.positions, widths, curve.reciprocal_bandwidth)
}

#[test]
fn offset_scene_resolution_degrades_away_from_the_aperture() {
    let scene = SceneSegment::with_length(0.1, 0.0, 0.15).unwrap();
    let (_, widths, inv_b) = sweep(&scene, 0.2, 40);
    let widths: Vec<f64> = widths.into_iter().map(|w| w.expect("interior scatterer")).collect();
    assert!(widths.windows(2).all(|p| p[1] > p[0]), "{widths:?}");
    assert!(inv_b.windows(2).all(|p| p[1] > p[0]));
}

#[test]
fn rotated_scene_resolves_better_at_the_near_end() {
    let scene = SceneSegment::with_length(0.1, 40f64.to_radians(), 0.0).unwrap();
    let (pos, widths, _) = sweep(&scene, 0.2, 20);
    // Positive arc length moves toward the aperture.
    let first = widths.iter().position(|w| w.is_some()).unwrap();
    let last = widths.iter().rposition(|w| w.is_some()).unwrap();
    assert!(pos[last] > pos[first]);
    assert!(widths[last].unwrap() < widths[first].unwrap(), "{widths:?}");
}

#[test]
fn reciprocal_bandwidth_matches_kspace() {
    let scene = g1();
    let (pos, _, inv_b) = sweep(&scene, 0.4, 50);
    let ap = Aperture::centered(0.15, 0.4).unwrap();
    for (u, r) in pos.iter().zip(&inv_b) {
        let b = bandwidth(scene.point(*u), &scene, &ap, &wave()).unwrap();
        assert!((r * b - 1.0).abs() < 1e-12);
    }
}
