//! Apertures, scene segments and the elementary path/angle computations
//! shared by every other module.
//!
//! Coordinates are `(x, z)` in meters. The aperture lies on the plane
//! `z = -D`; the scene is a straight segment centered near the origin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, DofError, Result};

/// Carrier wavelength and the derived wavenumber `k = 2π/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveContext {
    lambda: f64,
}

impl WaveContext {
    pub fn new(lambda: f64) -> Result<Self> {
        positive("wavelength", lambda)?;
        Ok(Self { lambda })
    }

    pub fn wavelength(&self) -> f64 {
        self.lambda
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda
    }
}

/// A point in the `(x, z)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub z: f64,
}

impl Point2 {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
}

/// Linear aperture `[a1, a2]` on the plane `z = -D`.
///
/// `a1 == a2` is accepted and models a single element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aperture {
    a1: f64,
    a2: f64,
    standoff: f64,
}

impl Aperture {
    pub fn new(a1: f64, a2: f64, standoff: f64) -> Result<Self> {
        finite("a1", a1)?;
        finite("a2", a2)?;
        positive("standoff", standoff)?;
        if a1 > a2 {
            return Err(DofError::InvalidParameter {
                name: "aperture",
                reason: format!("a1 = {a1} must not exceed a2 = {a2}"),
            });
        }
        Ok(Self { a1, a2, standoff })
    }

    /// Aperture of length `l1` centered on `x = 0`.
    pub fn centered(l1: f64, standoff: f64) -> Result<Self> {
        positive("aperture length", l1)?;
        Self::new(-l1 / 2.0, l1 / 2.0, standoff)
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn standoff(&self) -> f64 {
        self.standoff
    }

    pub fn length(&self) -> f64 {
        self.a2 - self.a1
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a1 + self.a2)
    }

    /// z coordinate of the aperture plane.
    pub fn plane_z(&self) -> f64 {
        -self.standoff
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.a1 - tol && x <= self.a2 + tol
    }

    /// `n` element positions at the centers of `n` equal cells spanning the
    /// aperture. Each element owns a quadrature weight of `length / n`.
    pub fn cell_centers(&self, n: usize) -> Vec<f64> {
        let step = self.length() / n as f64;
        (0..n)
            .map(|i| self.a1 + (i as f64 + 0.5) * step)
            .collect()
    }
}

/// Which of the four canonical geometries a scene/aperture pair realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometryClass {
    /// Parallel and centered.
    G1,
    /// Parallel and translated.
    G2,
    /// Rotated about the origin.
    G3,
    /// Rotated and translated.
    G4,
}

/// Straight scene segment of length `2 * half_length`.
///
/// Parameterized by arc length `u ∈ [-L2/2, L2/2]` as
/// `p(u) = (t + u cos θ, -u sin θ)`. For `θ ∈ (0, π/2)` the `u > 0` end is
/// tilted toward the aperture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSegment {
    half_length: f64,
    theta: f64,
    offset: f64,
}

impl SceneSegment {
    pub fn new(half_length: f64, theta: f64, offset: f64) -> Result<Self> {
        positive("scene half length", half_length)?;
        finite("theta", theta)?;
        finite("translation", offset)?;
        Ok(Self {
            half_length,
            theta,
            offset,
        })
    }

    /// Scene of full length `l2` rotated by `theta` and translated by `t`.
    pub fn with_length(l2: f64, theta: f64, t: f64) -> Result<Self> {
        positive("scene length", l2)?;
        Self::new(l2 / 2.0, theta, t)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn point(&self, u: f64) -> Point2 {
        Point2::new(
            self.offset + u * self.theta.cos(),
            -u * self.theta.sin(),
        )
    }

    /// Unit tangent of the segment, `(cos θ, -sin θ)`.
    pub fn direction(&self) -> (f64, f64) {
        (self.theta.cos(), -self.theta.sin())
    }

    /// Slope `ρ = -1/tan θ` of the line `x' = ρ z' + t`; `None` when `θ = 0`
    /// and the scene lies on `z' = 0`.
    pub fn rho(&self) -> Option<f64> {
        if self.theta == 0.0 {
            None
        } else {
            Some(-1.0 / self.theta.tan())
        }
    }

    pub fn class(&self) -> GeometryClass {
        match (self.theta == 0.0, self.offset == 0.0) {
            (true, true) => GeometryClass::G1,
            (true, false) => GeometryClass::G2,
            (false, true) => GeometryClass::G3,
            (false, false) => GeometryClass::G4,
        }
    }

    /// Midpoint-rule grid of `n` arc-length samples; every sample carries a
    /// quadrature weight of `length / n`.
    pub fn cell_centers(&self, n: usize) -> Vec<f64> {
        let step = self.length() / n as f64;
        (0..n)
            .map(|i| -self.half_length + (i as f64 + 0.5) * step)
            .collect()
    }

    /// Uniform grid including both endpoints.
    pub fn uniform_with_endpoints(&self, n: usize) -> Vec<f64> {
        if n < 2 {
            return vec![0.0; n];
        }
        let step = self.length() / (n - 1) as f64;
        (0..n).map(|i| -self.half_length + i as f64 * step).collect()
    }

    /// Fails if any part of the segment reaches the aperture plane.
    pub fn ensure_in_front(&self, aperture: &Aperture) -> Result<()> {
        for u in [-self.half_length, self.half_length] {
            let p = self.point(u);
            if p.z <= aperture.plane_z() {
                return Err(DofError::BehindAperture {
                    x: p.x,
                    z: p.z,
                    plane: aperture.plane_z(),
                });
            }
        }
        Ok(())
    }
}

/// Distance from the aperture point `(x, -D)` to `scene_point`.
pub fn path_length(x: f64, scene_point: Point2, aperture: &Aperture) -> f64 {
    (x - scene_point.x).hypot(aperture.plane_z() - scene_point.z)
}

/// Viewing angle of `scene_point` from the aperture point `x`, measured from
/// the z axis with `sin θ = (x' - x) / R`.
pub fn viewing_angle(x: f64, scene_point: Point2, aperture: &Aperture) -> Result<f64> {
    let depth = scene_point.z - aperture.plane_z();
    if depth <= 0.0 {
        return Err(DofError::BehindAperture {
            x: scene_point.x,
            z: scene_point.z,
            plane: aperture.plane_z(),
        });
    }
    Ok((scene_point.x - x).atan2(depth))
}

/// Extreme viewing angles `(α, β)` of `scene_point`: `α` is seen from `a2`,
/// `β` from `a1`, and `α ≤ β`.
pub fn viewing_angles(scene_point: Point2, aperture: &Aperture) -> Result<(f64, f64)> {
    let alpha = viewing_angle(aperture.a2(), scene_point, aperture)?;
    let beta = viewing_angle(aperture.a1(), scene_point, aperture)?;
    Ok((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nominal() -> Aperture {
        Aperture::centered(0.15, 0.2).unwrap()
    }

    #[test]
    fn wavenumber_follows_wavelength() {
        let w = WaveContext::new(0.005).unwrap();
        assert_eq!(w.wavenumber(), 2.0 * PI / 0.005);
        assert!(WaveContext::new(0.0).is_err());
        assert!(WaveContext::new(-1.0).is_err());
        assert!(WaveContext::new(f64::NAN).is_err());
    }

    #[test]
    fn aperture_validation() {
        assert!(Aperture::new(0.1, -0.1, 0.2).is_err());
        assert!(Aperture::new(-0.1, 0.1, 0.0).is_err());
        let single = Aperture::new(0.03, 0.03, 0.2).unwrap();
        assert_eq!(single.length(), 0.0);
    }

    #[test]
    fn path_length_examples() {
        let ap = nominal();
        assert!((path_length(0.0, Point2::new(0.0, 0.0), &ap) - 0.2).abs() < 1e-15);
        let r = path_length(-0.075, Point2::new(0.20, 0.0), &ap);
        assert!((r - (0.04f64 + 0.275 * 0.275).sqrt()).abs() < 1e-15);
        assert!((r - 0.34004).abs() < 1e-5);
    }

    #[test]
    fn path_length_symmetric_in_lateral_coordinates() {
        let ap = nominal();
        let a = path_length(0.031, Point2::new(-0.02, 0.013), &ap);
        let b = path_length(-0.02, Point2::new(0.031, 0.013), &ap);
        assert_eq!(a, b);
    }

    #[test]
    fn path_length_translation_invariant() {
        let ap = nominal();
        let shifted = Aperture::new(ap.a1() + 0.3, ap.a2() + 0.3, 0.2).unwrap();
        let p = Point2::new(0.04, 0.01);
        let q = Point2::new(0.34, 0.01);
        let d = path_length(0.02, p, &ap) - path_length(0.32, q, &shifted);
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn viewing_angles_symmetric_center() {
        let ap = nominal();
        let (alpha, beta) = viewing_angles(Point2::new(0.0, 0.0), &ap).unwrap();
        assert!((beta - (0.075f64 / 0.2).atan()).abs() < 1e-15);
        assert!((alpha + beta).abs() < 1e-15);
    }

    #[test]
    fn viewing_angles_translated_point() {
        let ap = nominal();
        let (alpha, beta) = viewing_angles(Point2::new(0.20, 0.0), &ap).unwrap();
        assert!((beta.sin() - 0.275 / 0.34004).abs() < 1e-4);
        assert!((beta.sin() - 0.8088).abs() < 1e-4);
        assert!((alpha.sin() - 0.5300).abs() < 1e-4);
        assert!(alpha <= beta);
    }

    #[test]
    fn viewing_angles_single_element() {
        let ap = Aperture::new(0.01, 0.01, 0.2).unwrap();
        let (alpha, beta) = viewing_angles(Point2::new(0.01, 0.0), &ap).unwrap();
        assert_eq!(alpha, beta);
    }

    #[test]
    fn viewing_angles_reject_points_behind_plane() {
        let ap = nominal();
        assert!(matches!(
            viewing_angles(Point2::new(0.0, -0.2), &ap),
            Err(DofError::BehindAperture { .. })
        ));
        assert!(viewing_angles(Point2::new(0.0, -0.3), &ap).is_err());
    }

    #[test]
    fn viewing_angles_monotone_in_x() {
        let ap = nominal();
        let mut prev = viewing_angles(Point2::new(-0.3, 0.02), &ap).unwrap();
        for i in 1..=60 {
            let x = -0.3 + i as f64 * 0.01;
            let cur = viewing_angles(Point2::new(x, 0.02), &ap).unwrap();
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    #[test]
    fn scene_points_lie_on_declared_line() {
        for &theta in &[0.3, -0.7, 1.2, 55f64.to_radians()] {
            let scene = SceneSegment::new(0.05, theta, 0.13).unwrap();
            let rho = scene.rho().unwrap();
            for i in 0..=40 {
                let u = -0.05 + i as f64 * 0.0025;
                let p = scene.point(u);
                assert!((p.x - (rho * p.z + 0.13)).abs() < 1e-14);
            }
        }
        let flat = SceneSegment::new(0.05, 0.0, 0.1).unwrap();
        assert!(flat.rho().is_none());
        assert_eq!(flat.point(0.03).z, 0.0);
    }

    #[test]
    fn geometry_classes() {
        let c = |theta, t| SceneSegment::new(0.05, theta, t).unwrap().class();
        assert_eq!(c(0.0, 0.0), GeometryClass::G1);
        assert_eq!(c(0.0, 0.1), GeometryClass::G2);
        assert_eq!(c(0.5, 0.0), GeometryClass::G3);
        assert_eq!(c(0.5, 0.1), GeometryClass::G4);
    }

    #[test]
    fn grids_span_the_segment() {
        let scene = SceneSegment::with_length(0.1, 0.0, 0.0).unwrap();
        let mid = scene.cell_centers(4);
        for (a, b) in mid.iter().zip([-0.0375, -0.0125, 0.0125, 0.0375]) {
            assert!((a - b).abs() < 1e-15);
        }
        let ends = scene.uniform_with_endpoints(5);
        assert_eq!(ends.first(), Some(&-0.05));
        assert_eq!(ends.last(), Some(&0.05));
        let ap = nominal();
        let cells = ap.cell_centers(3);
        assert!((cells[1]).abs() < 1e-16);
    }

    #[test]
    fn scene_crossing_plane_rejected() {
        let ap = nominal();
        let vertical = SceneSegment::new(0.25, PI / 2.0, 0.0).unwrap();
        assert!(vertical.ensure_in_front(&ap).is_err());
        let ok = SceneSegment::new(0.05, PI / 2.0, 0.0).unwrap();
        assert!(ok.ensure_in_front(&ap).is_ok());
    }
}
