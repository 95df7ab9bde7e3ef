//! Image formation: truncated-SVD pseudoinverse (PINV) and matched filter
//! (MF), point-spread functions and 3 dB beamwidths.
//!
//! Reconstructions are computed in the weighted coordinates of the
//! discretized operator and reported as physical reflectivity. With
//! `oversample > 1` the image is additionally evaluated on a refined grid
//! through the kernel itself, which interpolates the same image (it adds no
//! information) and only smooths the beamwidth measurement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DofError, Result};
use crate::geometry::{Aperture, Point2, SceneSegment, WaveContext};
use crate::kspace::bandwidth;
use crate::operator::{
    build_operator, build_operator_on_points, dof_knee, svd, Architecture, ArrayLayout,
    DiscreteOperator, SvdSpectrum, DEFAULT_KNEE_DB,
};

/// Default refinement of the reconstruction grid for beamwidth measurement.
pub const DEFAULT_OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReconMethod {
    Pinv,
    Mf,
}

impl ReconMethod {
    pub fn short_name(&self) -> &'static str {
        match self {
            ReconMethod::Pinv => "pinv",
            ReconMethod::Mf => "mf",
        }
    }
}

/// Reconstructed reflectivity along the scene line.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageProfile {
    coords: Vec<f64>,
    values: Vec<Complex64>,
    method: ReconMethod,
    rank: Option<usize>,
}

impl ImageProfile {
    pub fn new(
        coords: Vec<f64>,
        values: Vec<Complex64>,
        method: ReconMethod,
        rank: Option<usize>,
    ) -> Result<Self> {
        if coords.len() != values.len() {
            return Err(DofError::DimensionMismatch {
                expected: coords.len(),
                actual: values.len(),
            });
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        let unordered = coords.windows(2).any(|w| !(w[1] > w[0]));
        if unordered {
            return Err(DofError::InvalidParameter {
                name: "coords",
                reason: "coordinates must be strictly increasing".into(),
            });
        }
        Ok(Self {
            coords,
            values,
            method,
            rank,
        })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn method(&self) -> ReconMethod {
        self.method
    }

    /// Truncation rank (PINV only).
    pub fn rank(&self) -> Option<usize> {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Coordinate of the largest magnitude.
    pub fn peak_coord(&self) -> Option<f64> {
        peak_index(&self.magnitudes()).map(|i| self.coords[i])
    }
}

fn peak_index(m: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in m.iter().enumerate() {
        if best.is_none_or(|b| v > m[b]) {
            best = Some(i);
        }
    }
    best
}

/// Width between the half-power crossings (`|·| = max/√2`) around the global
/// magnitude peak, interpolated linearly between samples.
pub fn beamwidth_3db(profile: &ImageProfile) -> Result<f64> {
    let m = profile.magnitudes();
    let x = profile.coords();
    let peak = peak_index(&m).ok_or(DofError::UnresolvableAtEdge)?;
    if peak == 0 || peak + 1 == m.len() || m[peak] <= 0.0 {
        return Err(DofError::UnresolvableAtEdge);
    }
    let level = m[peak] / std::f64::consts::SQRT_2;
    let cross = |a: usize, b: usize| x[a] + (level - m[a]) / (m[b] - m[a]) * (x[b] - x[a]);

    let mut i = peak;
    while m[i - 1] >= level {
        i -= 1;
        if i == 0 {
            return Err(DofError::UnresolvableAtEdge);
        }
    }
    let left = cross(i - 1, i);

    let mut j = peak;
    while m[j + 1] >= level {
        j += 1;
        if j + 1 == m.len() {
            return Err(DofError::UnresolvableAtEdge);
        }
    }
    let right = cross(j, j + 1);
    Ok(right - left)
}

struct FineGrid {
    coords: Vec<f64>,
    op: DiscreteOperator,
    /// `A_f^H A`, `n_fine × n_scene`.
    cross: DMatrix<Complex64>,
}

/// Shares one SVD (and Gram matrix) across many reconstructions.
pub struct Reconstructor<'a> {
    op: &'a DiscreteOperator,
    spectrum: SvdSpectrum,
    right: DMatrix<Complex64>,
    gram: DMatrix<Complex64>,
    fine: Option<FineGrid>,
}

impl<'a> Reconstructor<'a> {
    pub fn new(op: &'a DiscreteOperator, oversample: usize) -> Result<Self> {
        let spectrum = svd(op, true)?;
        Self::with_spectrum(op, spectrum, oversample)
    }

    /// Uses a precomputed spectrum, which must carry right singular vectors.
    pub fn with_spectrum(
        op: &'a DiscreteOperator,
        spectrum: SvdSpectrum,
        oversample: usize,
    ) -> Result<Self> {
        if oversample == 0 {
            return Err(DofError::InvalidParameter {
                name: "oversample",
                reason: "must be at least 1".into(),
            });
        }
        let right = spectrum.right_vectors().ok_or(DofError::MissingVectors)?.clone();
        if right.nrows() != op.cols() {
            return Err(DofError::DimensionMismatch {
                expected: op.cols(),
                actual: right.nrows(),
            });
        }
        let coords = op.scene_coords();
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        let unordered = coords.windows(2).any(|w| !(w[1] > w[0]));
        if unordered {
            return Err(DofError::InvalidParameter {
                name: "scene coordinates",
                reason: "must be strictly increasing".into(),
            });
        }
        let fine = if oversample > 1 {
            Some(fine_grid(op, oversample)?)
        } else {
            None
        };
        Ok(Self {
            op,
            spectrum,
            right,
            gram: op.gram(),
            fine,
        })
    }

    pub fn operator(&self) -> &DiscreteOperator {
        self.op
    }

    pub fn spectrum(&self) -> &SvdSpectrum {
        &self.spectrum
    }

    /// Coordinates of the reconstructed images.
    pub fn image_coords(&self) -> &[f64] {
        match &self.fine {
            Some(f) => &f.coords,
            None => self.op.scene_coords(),
        }
    }

    /// Number of singular components available for truncation.
    pub fn max_rank(&self) -> usize {
        self.right.ncols()
    }

    /// Truncation rank from the spectrum knee at [`DEFAULT_KNEE_DB`].
    pub fn default_rank(&self) -> usize {
        dof_knee(&self.spectrum, DEFAULT_KNEE_DB).clamp(1, self.max_rank())
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if rank == 0 || rank > self.max_rank() {
            return Err(DofError::RankOutOfRange {
                rank,
                len: self.max_rank(),
            });
        }
        if self.spectrum.singular_values()[rank - 1] <= 0.0 {
            return Err(DofError::ZeroSingularValue { rank });
        }
        Ok(())
    }

    fn check_data(&self, data: &[Complex64]) -> Result<()> {
        if data.len() != self.op.rows() {
            return Err(DofError::DimensionMismatch {
                expected: self.op.rows(),
                actual: data.len(),
            });
        }
        Ok(())
    }

    /// Weighted image `Σ_{i≤r} ψ_i ψ_i^H b / σ_i^(2p)` for `b = A^H ŝ`.
    fn filter(&self, b: &DVector<Complex64>, rank: usize, power: i32) -> DVector<Complex64> {
        let sv = self.spectrum.singular_values();
        let mut out = DVector::zeros(self.op.cols());
        for (i, s) in sv.iter().take(rank).enumerate() {
            let psi = self.right.column(i);
            let c = psi.dotc(b) / s.powi(2 * power);
            out.axpy(c, &psi, Complex64::new(1.0, 0.0));
        }
        out
    }

    fn profile(
        &self,
        scaled: Vec<Complex64>,
        method: ReconMethod,
        rank: Option<usize>,
    ) -> Result<ImageProfile> {
        let values = self.op.scaled_to_reflectivity(&scaled);
        ImageProfile::new(self.image_coords().to_vec(), values, method, rank)
    }

    /// Truncated pseudoinverse of physical measurements `data`.
    pub fn pinv(&self, data: &[Complex64], rank: usize) -> Result<ImageProfile> {
        self.check_rank(rank)?;
        self.check_data(data)?;
        let b = DVector::from_vec(self.op.apply_adjoint(&self.op.data_to_scaled(data))?);
        let scaled = match &self.fine {
            // ψ_f,i = A_f^H A ψ_i / σ_i².
            Some(f) => (&f.cross * self.filter(&b, rank, 2)).as_slice().to_vec(),
            None => self.filter(&b, rank, 1).as_slice().to_vec(),
        };
        self.profile(scaled, ReconMethod::Pinv, Some(rank))
    }

    /// Matched filter (adjoint) image of physical measurements `data`.
    pub fn mf(&self, data: &[Complex64]) -> Result<ImageProfile> {
        self.check_data(data)?;
        let s = self.op.data_to_scaled(data);
        let scaled = match &self.fine {
            Some(f) => f.op.apply_adjoint(&s)?,
            None => self.op.apply_adjoint(&s)?,
        };
        self.profile(scaled, ReconMethod::Mf, None)
    }

    /// Matched-filter image of noiseless data from `reflectivity`, evaluated
    /// from the spectrum as `Σ σ_i² ψ_i ψ_i^H g` on the scene grid.
    pub fn mf_from_spectrum(&self, reflectivity: &[Complex64]) -> Result<ImageProfile> {
        if reflectivity.len() != self.op.cols() {
            return Err(DofError::DimensionMismatch {
                expected: self.op.cols(),
                actual: reflectivity.len(),
            });
        }
        let g = DVector::from_vec(self.op.reflectivity_to_scaled(reflectivity));
        let sv = self.spectrum.singular_values();
        let mut out = DVector::zeros(self.op.cols());
        for (i, s) in sv.iter().take(self.max_rank()).enumerate() {
            let psi = self.right.column(i);
            let c = psi.dotc(&g) * s * s;
            out.axpy(c, &psi, Complex64::new(1.0, 0.0));
        }
        let values = self.op.scaled_to_reflectivity(out.as_slice());
        ImageProfile::new(self.op.scene_coords().to_vec(), values, ReconMethod::Mf, None)
    }

    /// Image of a unit point scatterer at scene sample `index`: a single
    /// sample of amplitude `1 / w_col`. `rank` is used by PINV only.
    pub fn psf(&self, index: usize, method: ReconMethod, rank: usize) -> Result<ImageProfile> {
        let n = self.op.cols();
        if index >= n {
            return Err(DofError::DimensionMismatch {
                expected: n,
                actual: index,
            });
        }
        // Scaled delta g = e_p / sqrt(w_col); A^H A g is a Gram column.
        let amp = 1.0 / self.op.col_weight().sqrt();
        match method {
            ReconMethod::Mf => {
                let scaled: Vec<Complex64> = match &self.fine {
                    Some(f) => f.cross.column(index).iter().map(|v| v * amp).collect(),
                    None => self.gram.column(index).iter().map(|v| v * amp).collect(),
                };
                self.profile(scaled, method, None)
            }
            ReconMethod::Pinv => {
                self.check_rank(rank)?;
                // ψ_i^H A^H A e_p = σ_i² conj(ψ_i[p]).
                let sv = self.spectrum.singular_values();
                let power = if self.fine.is_some() { 2 } else { 1 };
                let mut h = DVector::<Complex64>::zeros(n);
                for (i, s) in sv.iter().take(rank).enumerate() {
                    let psi = self.right.column(i);
                    let c = psi[index].conj() * amp * s.powi(2 - 2 * power);
                    h.axpy(c, &psi, Complex64::new(1.0, 0.0));
                }
                let scaled = match &self.fine {
                    Some(f) => (&f.cross * h).as_slice().to_vec(),
                    None => h.as_slice().to_vec(),
                };
                self.profile(scaled, method, Some(rank))
            }
        }
    }
}

fn fine_grid(op: &DiscreteOperator, factor: usize) -> Result<FineGrid> {
    let u = op.scene_coords();
    let p = op.scene_points();
    let mut coords = Vec::with_capacity((u.len() - 1) * factor + 1);
    let mut points = Vec::with_capacity(coords.capacity());
    for i in 0..u.len() - 1 {
        for s in 0..factor {
            let f = s as f64 / factor as f64;
            coords.push(u[i] + f * (u[i + 1] - u[i]));
            points.push(Point2::new(
                p[i].x + f * (p[i + 1].x - p[i].x),
                p[i].z + f * (p[i + 1].z - p[i].z),
            ));
        }
    }
    coords.push(u[u.len() - 1]);
    points.push(p[p.len() - 1]);
    let cross = op.cross_gram(&points)?;
    let fine_op = build_operator_on_points(
        coords.clone(),
        points,
        op.col_weight(),
        op.layout(),
        op.aperture(),
        op.wave(),
    )?;
    Ok(FineGrid {
        coords,
        op: fine_op,
        cross,
    })
}

/// Truncated pseudoinverse with a fresh SVD, on the scene grid.
pub fn reconstruct_pinv(op: &DiscreteOperator, data: &[Complex64], rank: usize) -> Result<ImageProfile> {
    Reconstructor::new(op, 1)?.pinv(data, rank)
}

/// Matched-filter image on the scene grid.
pub fn reconstruct_mf(op: &DiscreteOperator, data: &[Complex64]) -> Result<ImageProfile> {
    let scaled = op.apply_adjoint(&op.data_to_scaled(data))?;
    ImageProfile::new(
        op.scene_coords().to_vec(),
        op.scaled_to_reflectivity(&scaled),
        ReconMethod::Mf,
        None,
    )
}

/// Point-spread function with a fresh SVD, on the scene grid.
pub fn psf(index: usize, op: &DiscreteOperator, method: ReconMethod, rank: usize) -> Result<ImageProfile> {
    Reconstructor::new(op, 1)?.psf(index, method, rank)
}

/// Discretization and truncation choices for [`resolution_sweep`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionSettings {
    pub n_scene: usize,
    pub oversample: usize,
    /// Fixed PINV rank; the spectrum knee when `None`.
    pub rank: Option<usize>,
    /// Scene-grid indices of the point scatterers.
    pub scatterers: Vec<usize>,
}

impl ResolutionSettings {
    /// Every `stride`-th scene sample, starting at `stride / 2`.
    pub fn strided(n_scene: usize, stride: usize) -> Self {
        let stride = stride.max(1);
        Self {
            n_scene,
            oversample: DEFAULT_OVERSAMPLE,
            rank: None,
            scatterers: (stride / 2..n_scene).step_by(stride).collect(),
        }
    }
}

/// Beamwidths of one method over the scatterer set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodWidths {
    pub method: ReconMethod,
    /// `None` where the mainlobe is clipped by the scene boundary.
    pub widths: Vec<Option<f64>>,
    /// PSF magnitudes, one row per scatterer, on [`ResolutionCurve::image_coords`].
    pub psf: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionCurve {
    pub architecture: Architecture,
    pub rank: usize,
    /// Scatterer coordinates along the scene (m).
    pub positions: Vec<f64>,
    /// `1/B` at each scatterer (m).
    pub reciprocal_bandwidth: Vec<f64>,
    pub image_coords: Vec<f64>,
    pub methods: Vec<MethodWidths>,
}

impl ResolutionCurve {
    pub fn widths(&self, method: ReconMethod) -> Option<&[Option<f64>]> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| m.widths.as_slice())
    }
}

/// PSF beamwidths for point scatterers along `scene`, next to the
/// reciprocal bandwidth `1/B` of each scatterer.
pub fn resolution_sweep(
    scene: &SceneSegment,
    aperture: &Aperture,
    wave: &WaveContext,
    array: &ArrayLayout,
    methods: &[ReconMethod],
    settings: &ResolutionSettings,
) -> Result<ResolutionCurve> {
    let op = build_operator(scene, array, aperture, wave, settings.n_scene)?;
    let rec = Reconstructor::new(&op, settings.oversample)?;
    let rank = settings.rank.unwrap_or_else(|| rec.default_rank());
    if let Some(&bad) = settings.scatterers.iter().find(|&&i| i >= op.cols()) {
        return Err(DofError::DimensionMismatch {
            expected: op.cols(),
            actual: bad,
        });
    }
    let positions: Vec<f64> = settings.scatterers.iter().map(|&i| op.scene_coords()[i]).collect();
    let reciprocal_bandwidth = settings
        .scatterers
        .iter()
        .map(|&i| bandwidth(op.scene_points()[i], scene, aperture, wave).map(|b| 1.0 / b))
        .collect::<Result<Vec<_>>>()?;
    let methods = methods
        .iter()
        .map(|&method| {
            let rows = settings
                .scatterers
                .par_iter()
                .map(|&i| {
                    let profile = rec.psf(i, method, rank)?;
                    let width = match beamwidth_3db(&profile) {
                        Ok(w) => Some(w),
                        Err(DofError::UnresolvableAtEdge) => None,
                        Err(e) => return Err(e),
                    };
                    Ok((width, profile.magnitudes()))
                })
                .collect::<Result<Vec<_>>>()?;
            let (widths, psf) = rows.into_iter().unzip();
            Ok(MethodWidths { method, widths, psf })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResolutionCurve {
        architecture: array.architecture(),
        rank,
        positions,
        reciprocal_bandwidth,
        image_coords: rec.image_coords().to_vec(),
        methods,
    })
}
