//! Discretized Born forward operator.
//!
//! The continuous kernel `exp(-jkR(x_tx, p)) · exp(-jkR(x_rx, p))` is sampled
//! on the measurement pairs of an [`ArrayLayout`] and on a midpoint grid
//! along the scene. Every entry is scaled by `sqrt(w_row · w_col)` so that the
//! discrete singular values approximate those of the integral operator and
//! the squared Frobenius norm approximates `V_A · V_B`.
//!
//! The matrix is never stored densely. Each entry factors into a Tx phase
//! and an Rx phase, so a multistatic operator with `N²` rows is represented
//! by two `N × n_scene` phase tables.

mod spectrum;

pub use spectrum::{
    dof_knee, hermitian_singular_values, sigma_bar, sigma_bar_sq, svd, svd_with, SvdRoute,
    SvdSpectrum, DEFAULT_KNEE_DB,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, DofError, Result};
use crate::geometry::{path_length, Aperture, Point2, SceneSegment, WaveContext};

/// Default number of array elements.
pub const DEFAULT_ELEMENTS: usize = 200;
/// Default number of scene samples.
pub const DEFAULT_SCENE_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    Monostatic,
    Multistatic,
}

impl Architecture {
    pub fn short_name(&self) -> &'static str {
        match self {
            Architecture::Monostatic => "mono",
            Architecture::Multistatic => "multi",
        }
    }
}

/// Element positions and quadrature weights of an array.
///
/// Monostatic layouts measure the pairs `(x_i, x_i)`; multistatic layouts
/// measure every `(x_tx(i), x_rx(j))`, ordered row-major in the Tx index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    architecture: Architecture,
    tx: Vec<f64>,
    rx: Vec<f64>,
    tx_weight: f64,
    rx_weight: f64,
}

fn check_positions(name: &'static str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(DofError::InvalidParameter {
            name,
            reason: "array has no elements".into(),
        });
    }
    if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
        return Err(DofError::InvalidParameter {
            name,
            reason: format!("non-finite element position {x}"),
        });
    }
    Ok(())
}

impl ArrayLayout {
    /// Transceivers at `positions`, each with quadrature weight `weight` (m).
    pub fn monostatic(positions: Vec<f64>, weight: f64) -> Result<Self> {
        check_positions("positions", &positions)?;
        positive("element weight", weight)?;
        Ok(Self {
            architecture: Architecture::Monostatic,
            rx: positions.clone(),
            tx: positions,
            tx_weight: weight,
            rx_weight: weight,
        })
    }

    pub fn multistatic(tx: Vec<f64>, rx: Vec<f64>, tx_weight: f64, rx_weight: f64) -> Result<Self> {
        check_positions("tx positions", &tx)?;
        check_positions("rx positions", &rx)?;
        positive("tx weight", tx_weight)?;
        positive("rx weight", rx_weight)?;
        Ok(Self {
            architecture: Architecture::Multistatic,
            tx,
            rx,
            tx_weight,
            rx_weight,
        })
    }

    /// `n` elements at the cell centers of the aperture; for multistatic
    /// arrays every element transmits and receives.
    pub fn uniform(architecture: Architecture, aperture: &Aperture, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(DofError::InvalidParameter {
                name: "elements",
                reason: "need at least one element".into(),
            });
        }
        let positions = aperture.cell_centers(n);
        let weight = aperture.length() / n as f64;
        match architecture {
            Architecture::Monostatic => Self::monostatic(positions, weight),
            Architecture::Multistatic => {
                Self::multistatic(positions.clone(), positions, weight, weight)
            }
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    pub fn tx_positions(&self) -> &[f64] {
        &self.tx
    }

    pub fn rx_positions(&self) -> &[f64] {
        &self.rx
    }

    pub fn tx_weight(&self) -> f64 {
        self.tx_weight
    }

    pub fn rx_weight(&self) -> f64 {
        self.rx_weight
    }

    /// Quadrature weight of one measurement: `Δx` for monostatic rows,
    /// `Δx_tx · Δx_rx` for multistatic rows.
    pub fn row_weight(&self) -> f64 {
        match self.architecture {
            Architecture::Monostatic => self.tx_weight,
            Architecture::Multistatic => self.tx_weight * self.rx_weight,
        }
    }

    pub fn measurement_count(&self) -> usize {
        match self.architecture {
            Architecture::Monostatic => self.tx.len(),
            Architecture::Multistatic => self.tx.len() * self.rx.len(),
        }
    }

    /// `(tx index, rx index)` of measurement `row`.
    pub fn pair(&self, row: usize) -> (usize, usize) {
        match self.architecture {
            Architecture::Monostatic => (row, row),
            Architecture::Multistatic => (row / self.rx.len(), row % self.rx.len()),
        }
    }
}

/// Weighted, discretized forward operator.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    layout: ArrayLayout,
    aperture: Aperture,
    wave: WaveContext,
    scene_u: Vec<f64>,
    scene_points: Vec<Point2>,
    col_weight: f64,
    // n_elements × n_scene tables of exp(-jkR).
    tx_phase: DMatrix<Complex64>,
    rx_phase: DMatrix<Complex64>,
}

fn phase_table(
    positions: &[f64],
    points: &[Point2],
    aperture: &Aperture,
    wave: &WaveContext,
) -> DMatrix<Complex64> {
    let k = wave.wavenumber();
    DMatrix::from_fn(positions.len(), points.len(), |i, c| {
        let r = path_length(positions[i], points[c], aperture);
        Complex64::from_polar(1.0, -k * r)
    })
}

/// Builds the operator on a midpoint grid of `n_scene` samples along `scene`.
pub fn build_operator(
    scene: &SceneSegment,
    array: &ArrayLayout,
    aperture: &Aperture,
    wave: &WaveContext,
    n_scene: usize,
) -> Result<DiscreteOperator> {
    if n_scene < 2 {
        return Err(DofError::InvalidParameter {
            name: "n_scene",
            reason: format!("need at least 2 scene samples, got {n_scene}"),
        });
    }
    scene.ensure_in_front(aperture)?;
    let u = scene.cell_centers(n_scene);
    let points = u.iter().map(|&u| scene.point(u)).collect();
    build_operator_on_points(u, points, scene.length() / n_scene as f64, array, aperture, wave)
}

/// Builds the operator on explicit scene samples with a common quadrature
/// weight `col_weight`. `coords` are the reconstruction coordinates reported
/// with images (arc length along the scene for [`build_operator`]).
pub fn build_operator_on_points(
    coords: Vec<f64>,
    points: Vec<Point2>,
    col_weight: f64,
    array: &ArrayLayout,
    aperture: &Aperture,
    wave: &WaveContext,
) -> Result<DiscreteOperator> {
    if points.is_empty() || coords.len() != points.len() {
        return Err(DofError::DimensionMismatch {
            expected: points.len().max(1),
            actual: coords.len(),
        });
    }
    positive("scene weight", col_weight)?;
    for p in &points {
        if p.z <= aperture.plane_z() {
            return Err(DofError::BehindAperture {
                x: p.x,
                z: p.z,
                plane: aperture.plane_z(),
            });
        }
    }
    let tol = 1e-9 * aperture.length().max(1e-3);
    for &x in array.tx_positions().iter().chain(array.rx_positions()) {
        if !aperture.contains(x, tol) {
            return Err(DofError::InvalidParameter {
                name: "array",
                reason: format!(
                    "element at {x} lies outside the aperture [{}, {}]",
                    aperture.a1(),
                    aperture.a2()
                ),
            });
        }
    }
    let tx_phase = phase_table(array.tx_positions(), &points, aperture, wave);
    let rx_phase = match array.architecture() {
        Architecture::Monostatic => tx_phase.clone(),
        Architecture::Multistatic => phase_table(array.rx_positions(), &points, aperture, wave),
    };
    Ok(DiscreteOperator {
        layout: array.clone(),
        aperture: *aperture,
        wave: *wave,
        scene_u: coords,
        scene_points: points,
        col_weight,
        tx_phase,
        rx_phase,
    })
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl DiscreteOperator {
    pub fn architecture(&self) -> Architecture {
        self.layout.architecture()
    }

    pub fn layout(&self) -> &ArrayLayout {
        &self.layout
    }

    pub fn aperture(&self) -> &Aperture {
        &self.aperture
    }

    pub fn wave(&self) -> &WaveContext {
        &self.wave
    }

    pub fn rows(&self) -> usize {
        self.layout.measurement_count()
    }

    pub fn cols(&self) -> usize {
        self.scene_points.len()
    }

    pub fn scene_coords(&self) -> &[f64] {
        &self.scene_u
    }

    pub fn scene_points(&self) -> &[Point2] {
        &self.scene_points
    }

    pub fn row_weight(&self) -> f64 {
        self.layout.row_weight()
    }

    pub fn col_weight(&self) -> f64 {
        self.col_weight
    }

    fn scale(&self) -> f64 {
        (self.row_weight() * self.col_weight).sqrt()
    }

    /// `(x_tx, x_rx)` of measurement `row`.
    pub fn measurement(&self, row: usize) -> (f64, f64) {
        let (i, j) = self.layout.pair(row);
        (self.layout.tx_positions()[i], self.layout.rx_positions()[j])
    }

    /// Unweighted kernel sample; unit magnitude.
    pub fn raw_entry(&self, row: usize, col: usize) -> Complex64 {
        let (i, j) = self.layout.pair(row);
        self.tx_phase[(i, col)] * self.rx_phase[(j, col)]
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.raw_entry(row, col) * self.scale()
    }

    /// Materializes the weighted matrix. Intended for small operators.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows(), self.cols(), |r, c| self.entry(r, c))
    }

    /// Sum of squared magnitudes of the weighted entries.
    pub fn frobenius_norm_sq(&self) -> f64 {
        let w = self.row_weight() * self.col_weight;
        (0..self.cols())
            .map(|c| {
                (0..self.rows())
                    .map(|r| self.raw_entry(r, c).norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            * w
    }

    /// Weighted matrix-vector product `A g`.
    pub fn apply(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if g.len() != self.cols() {
            return Err(DofError::DimensionMismatch {
                expected: self.cols(),
                actual: g.len(),
            });
        }
        let s = self.scale();
        let out = (0..self.rows())
            .into_par_iter()
            .map(|r| {
                let (i, j) = self.layout.pair(r);
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, gc) in g.iter().enumerate() {
                    acc += self.tx_phase[(i, c)] * self.rx_phase[(j, c)] * gc;
                }
                acc * s
            })
            .collect();
        Ok(out)
    }

    /// Weighted adjoint product `A^H v`.
    pub fn apply_adjoint(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.rows() {
            return Err(DofError::DimensionMismatch {
                expected: self.rows(),
                actual: v.len(),
            });
        }
        let s = self.scale();
        let out = (0..self.cols())
            .into_par_iter()
            .map(|c| {
                let mut acc = Complex64::new(0.0, 0.0);
                match self.architecture() {
                    Architecture::Monostatic => {
                        for (r, vr) in v.iter().enumerate() {
                            acc += (self.tx_phase[(r, c)] * self.rx_phase[(r, c)]).conj() * vr;
                        }
                    }
                    Architecture::Multistatic => {
                        let n_rx = self.layout.rx_positions().len();
                        for i in 0..self.layout.tx_positions().len() {
                            let mut inner = Complex64::new(0.0, 0.0);
                            for j in 0..n_rx {
                                inner += self.rx_phase[(j, c)].conj() * v[i * n_rx + j];
                            }
                            acc += self.tx_phase[(i, c)].conj() * inner;
                        }
                    }
                }
                acc * s
            })
            .collect();
        Ok(out)
    }

    /// Physical measurements `s = ∫ ξ γ dμ` for reflectivity samples `γ`.
    pub fn forward(&self, reflectivity: &[Complex64]) -> Result<Vec<Complex64>> {
        let scaled = self.reflectivity_to_scaled(reflectivity);
        let out = self.apply(&scaled)?;
        let inv = 1.0 / self.row_weight().sqrt();
        Ok(out.into_iter().map(|x| x * inv).collect())
    }

    /// Maps physical reflectivity samples to the weighted column space.
    pub fn reflectivity_to_scaled(&self, reflectivity: &[Complex64]) -> Vec<Complex64> {
        let s = self.col_weight.sqrt();
        reflectivity.iter().map(|x| x * s).collect()
    }

    /// Inverse of [`DiscreteOperator::reflectivity_to_scaled`].
    pub fn scaled_to_reflectivity(&self, scaled: &[Complex64]) -> Vec<Complex64> {
        let s = 1.0 / self.col_weight.sqrt();
        scaled.iter().map(|x| x * s).collect()
    }

    /// Maps physical measurements to the weighted row space.
    pub fn data_to_scaled(&self, data: &[Complex64]) -> Vec<Complex64> {
        let s = self.row_weight().sqrt();
        data.iter().map(|x| x * s).collect()
    }

    /// `n_scene × n_scene` Gram matrix `A^H A`.
    pub fn gram(&self) -> DMatrix<Complex64> {
        let mut g = self.cross_gram_tables(&self.tx_phase, &self.rx_phase);
        // Enforce exact Hermitian symmetry.
        let n = g.nrows();
        for c in 0..n {
            g[(c, c)].im = 0.0;
            for r in (c + 1)..n {
                g[(c, r)] = g[(r, c)].conj();
            }
        }
        g
    }

    /// `A_f^H A`, where `A_f` is the operator evaluated (with the same weights)
    /// at the scene samples `points`. Rows follow `points`.
    pub fn cross_gram(&self, points: &[Point2]) -> Result<DMatrix<Complex64>> {
        for p in points {
            if p.z <= self.aperture.plane_z() {
                return Err(DofError::BehindAperture {
                    x: p.x,
                    z: p.z,
                    plane: self.aperture.plane_z(),
                });
            }
        }
        let tx_f = phase_table(self.layout.tx_positions(), points, &self.aperture, &self.wave);
        let rx_f = match self.architecture() {
            Architecture::Monostatic => tx_f.clone(),
            Architecture::Multistatic => {
                phase_table(self.layout.rx_positions(), points, &self.aperture, &self.wave)
            }
        };
        Ok(self.cross_gram_tables(&tx_f, &rx_f))
    }

    fn cross_gram_tables(
        &self,
        tx_f: &DMatrix<Complex64>,
        rx_f: &DMatrix<Complex64>,
    ) -> DMatrix<Complex64> {
        let w = self.row_weight() * self.col_weight;
        let n_f = tx_f.ncols();
        let n = self.cols();
        let columns: Vec<Vec<Complex64>> = match self.architecture() {
            Architecture::Monostatic => {
                // Rows of A are t_i ∘ r_i.
                let combined = self.tx_phase.component_mul(&self.rx_phase);
                let combined_f = tx_f.component_mul(rx_f);
                (0..n)
                    .into_par_iter()
                    .map(|v| {
                        let col = combined.column(v);
                        let col = col.as_slice();
                        (0..n_f)
                            .map(|u| dot_conj(combined_f.column(u).as_slice(), col) * w)
                            .collect()
                    })
                    .collect()
            }
            Architecture::Multistatic => {
                // Σ_ij conj(t_iu r_ju) t_iv r_jv = (T^H T)_uv (R^H R)_uv
                (0..n)
                    .into_par_iter()
                    .map(|v| {
                        let t = self.tx_phase.column(v);
                        let r = self.rx_phase.column(v);
                        (0..n_f)
                            .map(|u| {
                                dot_conj(tx_f.column(u).as_slice(), t.as_slice())
                                    * dot_conj(rx_f.column(u).as_slice(), r.as_slice())
                                    * w
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        DMatrix::from_fn(n_f, n, |u, v| columns[v][u])
    }
}
