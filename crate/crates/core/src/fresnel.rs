//! Fresnel-regime kernels and DoF counts, and the effective monostatic
//! aperture of a multistatic array.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, DofError, Result};
use crate::geometry::{path_length, Aperture, Point2, SceneSegment, WaveContext};
use crate::operator::{hermitian_singular_values, Architecture, ArrayLayout};

/// Position merge tolerance used when accumulating multiplicities: `λ/1000`.
pub fn merge_tolerance(wave: &WaveContext) -> f64 {
    wave.wavelength() / 1000.0
}

/// Delta-train aperture function: element positions with multiplicities,
/// sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApertureFunction {
    elements: Vec<(f64, usize)>,
}

impl ApertureFunction {
    /// One delta per position; coincident positions (within `merge_tol`)
    /// accumulate multiplicity.
    pub fn from_positions(positions: &[f64], merge_tol: f64) -> Result<Self> {
        Self::from_weighted(positions.iter().map(|&x| (x, 1)).collect(), merge_tol)
    }

    pub fn from_weighted(mut elements: Vec<(f64, usize)>, merge_tol: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(DofError::InvalidParameter {
                name: "aperture function",
                reason: "no elements".into(),
            });
        }
        if let Some(&(x, m)) = elements.iter().find(|(x, m)| !x.is_finite() || *m == 0) {
            return Err(DofError::InvalidParameter {
                name: "aperture function",
                reason: format!("invalid element ({x}, multiplicity {m})"),
            });
        }
        elements.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, usize)> = Vec::with_capacity(elements.len());
        let mut anchor = f64::NEG_INFINITY;
        for (x, m) in elements {
            match merged.last_mut() {
                Some(last) if x - anchor <= merge_tol => last.1 += m,
                _ => {
                    anchor = x;
                    merged.push((x, m));
                }
            }
        }
        Ok(Self { elements: merged })
    }

    pub fn elements(&self) -> &[(f64, usize)] {
        &self.elements
    }

    pub fn positions(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.0).collect()
    }

    /// Number of distinct positions.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Sum of multiplicities.
    pub fn total_count(&self) -> usize {
        self.elements.iter().map(|e| e.1).sum()
    }

    /// `a(factor · x)`: every delta moves to `x / factor`.
    pub fn shrink(&self, factor: f64) -> Self {
        Self {
            elements: self.elements.iter().map(|&(x, m)| (x / factor, m)).collect(),
        }
    }

    /// Convolution of two delta trains.
    pub fn convolve(&self, other: &Self, merge_tol: f64) -> Self {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for &(x, m) in &self.elements {
            for &(y, n) in &other.elements {
                out.push((x + y, m * n));
            }
        }
        Self::from_weighted(out, merge_tol).expect("convolution of non-empty trains")
    }
}

/// Effective monostatic aperture `a_tx(2x) * a_rx(2x)`: one transceiver at
/// the midpoint of every Tx/Rx pair.
pub fn effective_aperture(
    a_tx: &ApertureFunction,
    a_rx: &ApertureFunction,
    merge_tol: f64,
) -> ApertureFunction {
    a_tx.shrink(2.0).convolve(&a_rx.shrink(2.0), merge_tol)
}

/// Fresnel approximation of the parallel-scene kernel for a Tx/Rx pair and
/// the scene point `(x_scene, 0)`.
pub fn fresnel_kernel(x_tx: f64, x_rx: f64, x_scene: f64, d: f64, wave: &WaveContext) -> Complex64 {
    let k = wave.wavenumber();
    let q = k / (2.0 * d);
    let phase = -2.0 * k * d - q * (x_tx - x_scene).powi(2) - q * (x_rx - x_scene).powi(2);
    Complex64::from_polar(1.0, phase)
}

/// Same kernel written around the pair midpoint: a quadratic phase mask in
/// the pair separation times a monostatic term at the midpoint.
pub fn fresnel_kernel_midpoint(
    x_tx: f64,
    x_rx: f64,
    x_scene: f64,
    d: f64,
    wave: &WaveContext,
) -> Complex64 {
    let k = wave.wavenumber();
    let mid = 0.5 * (x_tx + x_rx);
    let mask = -k / (4.0 * d) * (x_tx - x_rx).powi(2);
    let mono = -k / d * (x_scene - mid).powi(2);
    Complex64::from_polar(1.0, -2.0 * k * d + mask + mono)
}

/// Classical Fresnel DoF count `2 L1 L2 / (λ D)`, shared by monostatic and
/// multistatic arrays.
pub fn fresnel_dof(l1: f64, l2: f64, d: f64, lambda: f64) -> Result<f64> {
    positive("aperture length", l1)?;
    positive("scene length", l2)?;
    positive("standoff", d)?;
    positive("wavelength", lambda)?;
    Ok(2.0 * l1 * l2 / (lambda * d))
}

/// Far-field SBP of a rotated scene, `(2 L1 L2 / λD) cos θ`.
pub fn sbp_g3_fresnel(l1: f64, l2: f64, d: f64, lambda: f64, theta: f64) -> Result<f64> {
    if !theta.is_finite() || theta.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(DofError::InvalidParameter {
            name: "theta",
            reason: format!("|theta| must not exceed pi/2, got {theta}"),
        });
    }
    Ok(fresnel_dof(l1, l2, d, lambda)? * theta.cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelModel {
    /// Quadratic-phase path lengths.
    Fresnel,
    /// Exact Euclidean path lengths.
    Exact,
}

/// Singular values of an array operator and of its effective monostatic
/// replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub model: KernelModel,
    pub effective_aperture: ApertureFunction,
    pub array_singular_values: Vec<f64>,
    pub effective_singular_values: Vec<f64>,
    /// `max_i |σ_i - σ'_i| / σ_1`.
    pub max_relative_discrepancy: f64,
}

fn one_way_table(
    positions: &[f64],
    scene_x: &[f64],
    d: f64,
    wave: &WaveContext,
    model: KernelModel,
) -> DMatrix<Complex64> {
    let k = wave.wavenumber();
    let aperture = Aperture::new(0.0, 0.0, d).expect("positive standoff");
    DMatrix::from_fn(positions.len(), scene_x.len(), |i, c| {
        let x = positions[i];
        let phase = match model {
            KernelModel::Fresnel => -k * (d + (x - scene_x[c]).powi(2) / (2.0 * d)),
            KernelModel::Exact => -k * path_length(x, Point2::new(scene_x[c], 0.0), &aperture),
        };
        Complex64::from_polar(1.0, phase)
    })
}

fn gram_of_rows(rows: &DMatrix<Complex64>, weight: f64) -> DMatrix<Complex64> {
    let mut g = rows.ad_mul(rows) * Complex64::new(weight, 0.0);
    let n = g.nrows();
    for c in 0..n {
        g[(c, c)].im = 0.0;
        for r in (c + 1)..n {
            g[(c, r)] = g[(r, c)].conj();
        }
    }
    g
}

/// Compares the array's operator with a monostatic operator placed on the
/// effective aperture, on a parallel scene at standoff `d` sampled at
/// `n_scene` cell centers.
///
/// Rows of the effective operator are scaled by `sqrt(multiplicity)`. The
/// per-pair phase masks `exp(-j k Δx² / 4D)` are unit-modulus row factors and
/// leave the singular values unchanged, so merged rows carry none.
pub fn fresnel_equivalence_check(
    array: &ArrayLayout,
    scene: &SceneSegment,
    wave: &WaveContext,
    d: f64,
    n_scene: usize,
    model: KernelModel,
) -> Result<EquivalenceReport> {
    positive("standoff", d)?;
    if scene.theta() != 0.0 {
        return Err(DofError::InvalidParameter {
            name: "scene",
            reason: "equivalence check needs a parallel scene (theta = 0)".into(),
        });
    }
    if n_scene < 2 {
        return Err(DofError::InvalidParameter {
            name: "n_scene",
            reason: format!("need at least 2 scene samples, got {n_scene}"),
        });
    }
    let scene_x: Vec<f64> = scene
        .cell_centers(n_scene)
        .into_iter()
        .map(|u| scene.point(u).x)
        .collect();
    let w = array.row_weight() * scene.length() / n_scene as f64;
    let tol = merge_tolerance(wave);

    let tx = one_way_table(array.tx_positions(), &scene_x, d, wave, model);
    let (array_gram, eff) = match array.architecture() {
        Architecture::Monostatic => {
            let rows = tx.component_mul(&tx);
            let eff = ApertureFunction::from_positions(array.tx_positions(), tol)?;
            (gram_of_rows(&rows, w), eff)
        }
        Architecture::Multistatic => {
            let rx = one_way_table(array.rx_positions(), &scene_x, d, wave, model);
            let gt = tx.ad_mul(&tx);
            let gr = rx.ad_mul(&rx);
            let mut g = gt.component_mul(&gr) * Complex64::new(w, 0.0);
            let n = g.nrows();
            for c in 0..n {
                g[(c, c)].im = 0.0;
                for r in (c + 1)..n {
                    g[(c, r)] = g[(r, c)].conj();
                }
            }
            let a_tx = ApertureFunction::from_positions(array.tx_positions(), tol)?;
            let a_rx = ApertureFunction::from_positions(array.rx_positions(), tol)?;
            (g, effective_aperture(&a_tx, &a_rx, tol))
        }
    };

    // Monostatic transceivers at the midpoints: two-way one-element kernel.
    let k = wave.wavenumber();
    let flat = Aperture::new(0.0, 0.0, d)?;
    let eff_rows: Vec<Vec<Complex64>> = eff
        .elements()
        .par_iter()
        .map(|&(m, count)| {
            let amp = (count as f64).sqrt();
            scene_x
                .iter()
                .map(|&x| {
                    let one_way = match model {
                        KernelModel::Fresnel => d + (m - x).powi(2) / (2.0 * d),
                        KernelModel::Exact => path_length(m, Point2::new(x, 0.0), &flat),
                    };
                    Complex64::from_polar(amp, -2.0 * k * one_way)
                })
                .collect()
        })
        .collect();
    let eff_matrix = DMatrix::from_fn(eff_rows.len(), n_scene, |r, c| eff_rows[r][c]);
    let eff_gram = gram_of_rows(&eff_matrix, w);

    let array_sv = hermitian_singular_values(array_gram)?;
    let eff_sv = hermitian_singular_values(eff_gram)?;
    let s1 = array_sv.first().copied().unwrap_or(0.0);
    if s1 <= 0.0 {
        return Err(DofError::EmptySpectrum);
    }
    let max_relative_discrepancy = array_sv
        .iter()
        .zip(&eff_sv)
        .map(|(a, b)| (a - b).abs() / s1)
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        model,
        effective_aperture: eff,
        array_singular_values: array_sv,
        effective_singular_values: eff_sv,
        max_relative_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbp::sbp_closed_form_g1;

    const LAMBDA: f64 = 0.005;

    fn wave() -> WaveContext {
        WaveContext::new(LAMBDA).unwrap()
    }

    #[test]
    fn kernel_at_coincident_points() {
        let w = wave();
        let d = 0.3;
        let k = fresnel_kernel(0.02, 0.02, 0.02, d, &w);
        let expected = Complex64::from_polar(1.0, -2.0 * w.wavenumber() * d);
        assert!((k - expected).norm() < 1e-12);
    }

    #[test]
    fn midpoint_form_is_the_same_kernel() {
        let w = wave();
        for &(a, b, x) in &[(0.01, -0.03, 0.02), (0.07, 0.07, -0.04), (-0.075, 0.075, 0.0)] {
            let direct = fresnel_kernel(a, b, x, 0.4, &w);
            let mid = fresnel_kernel_midpoint(a, b, x, 0.4, &w);
            assert!((direct - mid).norm() < 1e-10);
        }
    }

    #[test]
    fn kernel_converges_to_exact_far_away() {
        let w = wave();
        let l1 = 0.15;
        let d = 100.0 * l1;
        let ap = Aperture::centered(l1, d).unwrap();
        let k = w.wavenumber();
        for &(a, b, x) in &[(-0.075, 0.075, 0.05), (0.03, -0.06, -0.05), (0.0, 0.0, 0.0)] {
            let p = Point2::new(x, 0.0);
            let exact = -k * (path_length(a, p, &ap) + path_length(b, p, &ap));
            let fres = fresnel_kernel(a, b, x, d, &w).arg();
            let diff = Complex64::from_polar(1.0, exact - fres).arg();
            assert!(diff.abs() < 1e-3, "{diff}");
        }
    }

    #[test]
    fn dof_caption_values() {
        assert!((fresnel_dof(0.15, 0.10, 0.10, LAMBDA).unwrap() - 60.0).abs() < 1e-9);
        assert!((fresnel_dof(0.15, 0.10, 0.20, LAMBDA).unwrap() - 30.0).abs() < 1e-9);
        assert!(fresnel_dof(0.15, 0.10, 0.0, LAMBDA).is_err());
    }

    #[test]
    fn dof_approaches_sbp_far_away() {
        let (l1, l2) = (0.15, 0.10);
        let d = 10.0 * (l1 + l2);
        let f = fresnel_dof(l1, l2, d, LAMBDA).unwrap();
        let s = sbp_closed_form_g1(l1, l2, d, LAMBDA).unwrap().value;
        assert!((f - s).abs() / f < 0.02);
    }

    #[test]
    fn rotated_fresnel_sbp() {
        let f = fresnel_dof(0.15, 0.1, 0.2, LAMBDA).unwrap();
        assert_eq!(sbp_g3_fresnel(0.15, 0.1, 0.2, LAMBDA, 0.0).unwrap(), f);
        let v = sbp_g3_fresnel(0.15, 0.1, 0.2, LAMBDA, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(sbp_g3_fresnel(0.15, 0.1, 0.2, LAMBDA, 2.0).is_err());
    }

    #[test]
    fn single_pair_effective_element() {
        let tol = merge_tolerance(&wave());
        let tx = ApertureFunction::from_positions(&[0.0], tol).unwrap();
        let rx = ApertureFunction::from_positions(&[0.03], tol).unwrap();
        let eff = effective_aperture(&tx, &rx, tol);
        assert_eq!(eff.elements(), &[(0.015, 1)]);
    }

    #[test]
    fn uniform_arrays_give_triangular_multiplicities() {
        let tol = merge_tolerance(&wave());
        let n = 6;
        let pitch = 0.01;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * pitch).collect();
        let a = ApertureFunction::from_positions(&xs, tol).unwrap();
        let eff = effective_aperture(&a, &a, tol);
        assert_eq!(eff.len(), 2 * n - 1);
        // Brute-force double loop.
        let mut counts = vec![0usize; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                counts[i + j] += 1;
            }
        }
        for (idx, &(x, m)) in eff.elements().iter().enumerate() {
            assert!((x - idx as f64 * pitch / 2.0).abs() < 1e-12);
            assert_eq!(m, counts[idx]);
        }
        assert_eq!(eff.total_count(), n * n);
    }

    #[test]
    fn aperture_function_validation() {
        assert!(ApertureFunction::from_positions(&[], 1e-6).is_err());
        assert!(ApertureFunction::from_weighted(vec![(0.0, 0)], 1e-6).is_err());
        assert!(ApertureFunction::from_positions(&[f64::NAN], 1e-6).is_err());
        let a = ApertureFunction::from_positions(&[0.1, 0.1 + 1e-9, 0.2], 1e-6).unwrap();
        assert_eq!(a.elements(), &[(0.1, 2), (0.2, 1)]);
    }

    #[test]
    fn colocated_array_has_no_discrepancy() {
        let layout = ArrayLayout::multistatic(vec![0.01], vec![0.01], 0.01, 0.01).unwrap();
        let scene = SceneSegment::with_length(0.1, 0.0, 0.0).unwrap();
        for model in [KernelModel::Fresnel, KernelModel::Exact] {
            let r = fresnel_equivalence_check(&layout, &scene, &wave(), 0.2, 40, model).unwrap();
            // Square roots of eigenvalues near zero carry ~sqrt(eps) noise.
            assert!(r.max_relative_discrepancy < 1e-6, "{}", r.max_relative_discrepancy);
        }
    }

    #[test]
    fn rejects_tilted_scene() {
        let layout = ArrayLayout::monostatic(vec![0.0], 0.01).unwrap();
        let scene = SceneSegment::with_length(0.1, 0.3, 0.0).unwrap();
        assert!(fresnel_equivalence_check(&layout, &scene, &wave(), 0.2, 40, KernelModel::Fresnel).is_err());
    }
}
