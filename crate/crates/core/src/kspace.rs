//! k-space sample sets of a point scatterer seen through monostatic and
//! multistatic arrays, their projections, and the spatial-frequency
//! bandwidth used by the space-bandwidth product.
//!
//! A Tx (or Rx) element with viewing angle `θ` contributes the plane-wave
//! vector `k (sin θ, cos θ)`; a Tx/Rx pair samples the scene spectrum at the
//! sum of its two vectors. Monostatic pairs fall on the arc of radius `2k`
//! between the extreme viewing angles `[α, β]`; multistatic pairs fill the
//! region between that arc and its chord.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{DofError, Result};
use crate::geometry::{viewing_angle, viewing_angles, Aperture, Point2, SceneSegment, WaveContext};

/// Default number of angle samples per axis for multistatic sets.
pub const DEFAULT_MULTI_SAMPLES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KVector {
    pub kx: f64,
    pub kz: f64,
}

impl KVector {
    pub const fn new(kx: f64, kz: f64) -> Self {
        Self { kx, kz }
    }

    /// Single-element plane-wave vector for viewing angle `theta`.
    pub fn from_angle(theta: f64, k: f64) -> Self {
        Self::new(k * theta.sin(), k * theta.cos())
    }

    pub fn norm(&self) -> f64 {
        self.kx.hypot(self.kz)
    }

    /// Angle from the kz axis, positive toward +kx.
    pub fn angle(&self) -> f64 {
        self.kx.atan2(self.kz)
    }

    /// Scalar projection onto the unit vector at `line_angle` from the kx axis.
    pub fn project(&self, line_angle: f64) -> f64 {
        self.kx * line_angle.cos() + self.kz * line_angle.sin()
    }
}

impl std::ops::Add for KVector {
    type Output = KVector;

    fn add(self, rhs: KVector) -> KVector {
        KVector::new(self.kx + rhs.kx, self.kz + rhs.kz)
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta.abs() >= FRAC_PI_2 {
        return Err(DofError::GrazingAngle { angle: theta });
    }
    Ok(())
}

/// Spectrum sample `k_tx + k_rx` of a Tx/Rx pair with the given viewing angles.
pub fn sample_point(theta_tx: f64, theta_rx: f64, wave: &WaveContext) -> Result<KVector> {
    check_angle(theta_tx)?;
    check_angle(theta_rx)?;
    let k = wave.wavenumber();
    Ok(KVector::from_angle(theta_tx, k) + KVector::from_angle(theta_rx, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralKind {
    MonoArc,
    MultiRegion,
}

/// Closed interval of projected spatial frequencies (rad/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// k-space sample set of one point scatterer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSet {
    kind: SpectralKind,
    k: f64,
    alpha: f64,
    beta: f64,
    samples: Vec<KVector>,
    grid: usize,
}

impl SpectralSet {
    pub fn kind(&self) -> SpectralKind {
        self.kind
    }

    /// Outer radius `2k`.
    pub fn radius(&self) -> f64 {
        2.0 * self.k
    }

    pub fn angular_span(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    /// Discrete members. Empty for a monostatic arc, which is handled
    /// analytically; use [`SpectralSet::arc_samples`] to discretize it.
    pub fn samples(&self) -> &[KVector] {
        &self.samples
    }

    /// Angle samples per axis used for a multistatic set.
    pub fn grid_size(&self) -> usize {
        self.grid
    }

    /// `n` evenly spaced points on the monostatic arc `[α, β]`.
    pub fn arc_samples(&self, n: usize) -> Vec<KVector> {
        angle_grid(self.alpha, self.beta, n)
            .into_iter()
            .map(|phi| KVector::from_angle(phi, 2.0 * self.k))
            .collect()
    }

    fn member(&self, theta_tx: f64, theta_rx: f64) -> KVector {
        KVector::from_angle(theta_tx, self.k) + KVector::from_angle(theta_rx, self.k)
    }
}

fn angle_grid(alpha: f64, beta: f64, n: usize) -> Vec<f64> {
    if n <= 1 || alpha == beta {
        return vec![alpha; n.max(1)];
    }
    let step = (beta - alpha) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { beta } else { alpha + i as f64 * step })
        .collect()
}

/// Monostatic sample set: arc of radius `2k` over the viewing angles `[α, β]`.
pub fn mono_spectrum(
    scene_point: Point2,
    aperture: &Aperture,
    wave: &WaveContext,
) -> Result<SpectralSet> {
    let (alpha, beta) = viewing_angles(scene_point, aperture)?;
    Ok(SpectralSet {
        kind: SpectralKind::MonoArc,
        k: wave.wavenumber(),
        alpha,
        beta,
        samples: Vec::new(),
        grid: 0,
    })
}

/// Multistatic sample set: `k_tx + k_rx` over an `n_samples × n_samples` grid of
/// (θtx, θrx) spanning `[α, β]²`. Row-major in θtx.
pub fn multi_spectrum(
    scene_point: Point2,
    aperture: &Aperture,
    wave: &WaveContext,
    n_samples: usize,
) -> Result<SpectralSet> {
    if n_samples < 2 {
        return Err(DofError::InvalidParameter {
            name: "n_samples",
            reason: format!("need at least 2 samples per axis, got {n_samples}"),
        });
    }
    let (alpha, beta) = viewing_angles(scene_point, aperture)?;
    let k = wave.wavenumber();
    let angles = angle_grid(alpha, beta, n_samples);
    let units: Vec<KVector> = angles.iter().map(|&a| KVector::from_angle(a, k)).collect();
    let mut samples = Vec::with_capacity(n_samples * n_samples);
    for tx in &units {
        for rx in &units {
            samples.push(*tx + *rx);
        }
    }
    Ok(SpectralSet {
        kind: SpectralKind::MultiRegion,
        k,
        alpha,
        beta,
        samples,
        grid: n_samples,
    })
}

/// Extremes of `sin(φ)` for `φ ∈ [lo, hi]`.
fn sine_range(lo: f64, hi: f64) -> (f64, f64) {
    let mut min = lo.sin().min(hi.sin());
    let mut max = lo.sin().max(hi.sin());
    // Interior critical points at π/2 + nπ.
    let first = ((lo - FRAC_PI_2) / PI).ceil() as i64;
    let last = ((hi - FRAC_PI_2) / PI).floor() as i64;
    for n in first..=last {
        let s = (FRAC_PI_2 + n as f64 * PI).sin();
        min = min.min(s);
        max = max.max(s);
    }
    (min, max)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

impl SpectralSet {
    /// Polishes a grid extremum of the multistatic projection over the
    /// continuous (θtx, θrx) rectangle, searching one grid cell either side
    /// along each axis in turn.
    fn polish(&self, start: usize, line_angle: f64, sign: f64) -> f64 {
        let n = self.grid;
        let angles = angle_grid(self.alpha, self.beta, n);
        let step = (self.beta - self.alpha) / (n - 1) as f64;
        let (mut tx, mut rx) = (angles[start / n], angles[start % n]);
        let objective = |a: f64, b: f64| sign * self.member(a, b).project(line_angle);
        let mut best = objective(tx, rx);
        for _ in 0..4 {
            let lo = (tx - step).max(self.alpha);
            let hi = (tx + step).min(self.beta);
            let (a, v) = golden_max(|a| objective(a, rx), lo, hi, 1e-12);
            if v > best {
                tx = a;
                best = v;
            }
            let lo = (rx - step).max(self.alpha);
            let hi = (rx + step).min(self.beta);
            let (b, v) = golden_max(|b| objective(tx, b), lo, hi, 1e-12);
            if v > best {
                rx = b;
                best = v;
            }
        }
        sign * best
    }
}

/// Range of scalar projections of `set` onto the unit vector at `line_angle`
/// (measured from the kx axis).
///
/// Monostatic arcs are handled exactly through the extremes of a sinusoid.
/// Multistatic sets take the extremes over their samples, then refine them
/// over the continuous angle rectangle.
pub fn project_onto_line(set: &SpectralSet, line_angle: f64) -> Interval {
    match set.kind {
        SpectralKind::MonoArc => {
            // 2k (sin φ, cos φ) · (cos a, sin a) = 2k sin(φ + a)
            let (lo, hi) = sine_range(set.alpha + line_angle, set.beta + line_angle);
            Interval {
                lo: set.radius() * lo,
                hi: set.radius() * hi,
            }
        }
        SpectralKind::MultiRegion => {
            let mut imin = 0;
            let mut imax = 0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (i, s) in set.samples.iter().enumerate() {
                let p = s.project(line_angle);
                if p < lo {
                    lo = p;
                    imin = i;
                }
                if p > hi {
                    hi = p;
                    imax = i;
                }
            }
            if set.alpha == set.beta {
                return Interval { lo, hi };
            }
            Interval {
                lo: lo.min(set.polish(imin, line_angle, -1.0)),
                hi: hi.max(set.polish(imax, line_angle, 1.0)),
            }
        }
    }
}

/// Direction (from the kx axis) of the redundancy-free projection line for a
/// scene: the scene tangent `(cos θ, -sin θ)`, i.e. the kx axis for `θ = 0`
/// and the line `kx = ρ kz` otherwise.
pub fn scene_line_angle(scene: &SceneSegment) -> f64 {
    -scene.theta()
}

/// Projected width of `set` along the scene line, in cycles per meter.
pub fn bandwidth_of_set(set: &SpectralSet, scene: &SceneSegment) -> f64 {
    project_onto_line(set, scene_line_angle(scene)).width() / (2.0 * PI)
}

/// Spatial-frequency bandwidth `B` (cycles/m) of `scene_point` for a scene
/// lying along `scene`.
pub fn bandwidth(
    scene_point: Point2,
    scene: &SceneSegment,
    aperture: &Aperture,
    wave: &WaveContext,
) -> Result<f64> {
    let set = mono_spectrum(scene_point, aperture, wave)?;
    Ok(bandwidth_of_set(&set, scene))
}

/// Single monostatic element equivalent to a Tx/Rx pair for one scatterer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveElement {
    /// Position on the aperture plane.
    pub x_eff: f64,
    /// Wavelength of the equivalent transceiver.
    pub lambda_eff: f64,
}

/// Monostatic element whose `2 k_eff` vector coincides with the pair's
/// sample `k_tx + k_rx`: it views the scatterer at `(θtx + θrx)/2` and
/// radiates at `λ / cos(|θtx - θrx| / 2)`.
pub fn effective_monostatic_point(
    x_tx: f64,
    x_rx: f64,
    scene_point: Point2,
    aperture: &Aperture,
    wave: &WaveContext,
) -> Result<EffectiveElement> {
    let tol = 1e-12 * aperture.length().max(1.0);
    for (name, x) in [("x_tx", x_tx), ("x_rx", x_rx)] {
        if !aperture.contains(x, tol) {
            return Err(DofError::InvalidParameter {
                name,
                reason: format!(
                    "element at {x} lies outside the aperture [{}, {}]",
                    aperture.a1(),
                    aperture.a2()
                ),
            });
        }
    }
    let theta_tx = viewing_angle(x_tx, scene_point, aperture)?;
    let theta_rx = viewing_angle(x_rx, scene_point, aperture)?;
    let theta_eff = 0.5 * (theta_tx + theta_rx);
    let depth = scene_point.z - aperture.plane_z();
    let x_eff = scene_point.x - depth * theta_eff.tan();
    let lambda_eff = wave.wavelength() / (0.5 * (theta_tx - theta_rx).abs()).cos();
    Ok(EffectiveElement { x_eff, lambda_eff })
}
