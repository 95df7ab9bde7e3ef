//! Space-bandwidth product: closed forms for parallel scenes, a scene
//! integral of the per-point bandwidth for rotated/translated scenes, and the
//! rotation angle that maximizes it.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{positive, DofError, Result};
use crate::geometry::{path_length, Aperture, Point2, SceneSegment, WaveContext};
use crate::kspace::bandwidth;

/// Default number of scene samples for the numeric integral.
pub const DEFAULT_SBP_POINTS: usize = 512;

const THETA_GRID: usize = 181;
const THETA_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SbpMethod {
    ClosedFormG1,
    ClosedFormG2,
    NumericIntegral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbpResult {
    pub value: f64,
    pub method: SbpMethod,
    pub aperture: Aperture,
    pub scene: SceneSegment,
    pub wavelength: f64,
}

/// SBP of a parallel scene `[s1, s2]` facing the aperture `[a1, a2]`:
/// `(2/λ)((R(s2,a1) - R(s2,a2)) + (R(s1,a2) - R(s1,a1)))`.
pub fn sbp_closed_form_g2(
    aperture: &Aperture,
    s1: f64,
    s2: f64,
    wave: &WaveContext,
) -> Result<SbpResult> {
    if !(s1.is_finite() && s2.is_finite()) || s1 > s2 {
        return Err(DofError::InvalidParameter {
            name: "scene interval",
            reason: format!("need finite s1 <= s2, got [{s1}, {s2}]"),
        });
    }
    let r = |s: f64, a: f64| path_length(a, Point2::new(s, 0.0), aperture);
    let (a1, a2) = (aperture.a1(), aperture.a2());
    let value = 2.0 / wave.wavelength() * ((r(s2, a1) - r(s2, a2)) + (r(s1, a2) - r(s1, a1)));
    // A zero-length interval is stored as the smallest representable segment.
    let half = (0.5 * (s2 - s1)).max(f64::MIN_POSITIVE);
    Ok(SbpResult {
        value,
        method: SbpMethod::ClosedFormG2,
        aperture: *aperture,
        scene: SceneSegment::new(half, 0.0, 0.5 * (s1 + s2))?,
        wavelength: wave.wavelength(),
    })
}

/// SBP of the symmetric parallel geometry:
/// `(4D/λ)(sqrt(1 + ((L1+L2)/2D)²) - sqrt(1 + ((L1-L2)/2D)²))`.
pub fn sbp_closed_form_g1(l1: f64, l2: f64, d: f64, lambda: f64) -> Result<SbpResult> {
    positive("aperture length", l1)?;
    positive("scene length", l2)?;
    let aperture = Aperture::centered(l1, d)?;
    let wave = WaveContext::new(lambda)?;
    let plus = (l1 + l2) / (2.0 * d);
    let minus = (l1 - l2) / (2.0 * d);
    let value = 4.0 * d / lambda * ((1.0 + plus * plus).sqrt() - (1.0 + minus * minus).sqrt());
    Ok(SbpResult {
        value,
        method: SbpMethod::ClosedFormG1,
        aperture,
        scene: SceneSegment::with_length(l2, 0.0, 0.0)?,
        wavelength: wave.wavelength(),
    })
}

/// Trapezoidal integral of the bandwidth `B(p(u))` over the scene arc length.
pub fn sbp_numeric(
    scene: &SceneSegment,
    aperture: &Aperture,
    wave: &WaveContext,
    n_points: usize,
) -> Result<SbpResult> {
    if n_points < 16 {
        return Err(DofError::InvalidParameter {
            name: "n_points",
            reason: format!("need at least 16 scene points, got {n_points}"),
        });
    }
    scene.ensure_in_front(aperture)?;
    let us = scene.uniform_with_endpoints(n_points);
    let step = scene.length() / (n_points - 1) as f64;
    let mut sum = 0.0;
    for (i, &u) in us.iter().enumerate() {
        let b = bandwidth(scene.point(u), scene, aperture, wave)?;
        let w = if i == 0 || i == n_points - 1 { 0.5 } else { 1.0 };
        sum += w * b;
    }
    Ok(SbpResult {
        value: sum * step,
        method: SbpMethod::NumericIntegral,
        aperture: *aperture,
        scene: *scene,
        wavelength: wave.wavelength(),
    })
}

/// SBP by the cheapest applicable route: the parallel-scene closed form when
/// `θ = 0`, the numeric integral otherwise.
pub fn sbp_for_scene(
    scene: &SceneSegment,
    aperture: &Aperture,
    wave: &WaveContext,
    n_points: usize,
) -> Result<SbpResult> {
    if scene.theta() == 0.0 {
        let t = scene.offset();
        let half = scene.half_length();
        let mut r = sbp_closed_form_g2(aperture, t - half, t + half, wave)?;
        r.scene = *scene;
        Ok(r)
    } else {
        sbp_numeric(scene, aperture, wave, n_points)
    }
}

/// Rotation that makes the scene orthogonal to the line joining the aperture
/// and scene midpoints: `asin(t / sqrt(t² + D²))`.
pub fn theta_heu(t: f64, d: f64) -> Result<f64> {
    positive("standoff", d)?;
    Ok((t / t.hypot(d)).asin())
}

/// Rotation in `[-90°, 90°]` maximizing the numeric SBP of a scene of the
/// given half length translated by `t`.
///
/// Coarse search on a 181-point grid, then golden-section refinement to
/// 1e-4 rad inside the bracketing grid cells. Grid ties resolve to the
/// smaller `|θ|`.
pub fn theta_max(
    t: f64,
    half_length: f64,
    aperture: &Aperture,
    wave: &WaveContext,
    n_points: usize,
) -> Result<f64> {
    let sbp_at = |theta: f64| -> Result<f64> {
        let scene = SceneSegment::new(half_length, theta, t)?;
        Ok(sbp_numeric(&scene, aperture, wave, n_points)?.value)
    };
    let step = 2.0 * FRAC_PI_2 / (THETA_GRID - 1) as f64;
    let thetas: Vec<f64> = (0..THETA_GRID).map(|i| -FRAC_PI_2 + i as f64 * step).collect();
    let values = thetas
        .iter()
        .map(|&th| sbp_at(th))
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for i in 1..THETA_GRID {
        let better = values[i] > values[best]
            || (values[i] == values[best] && thetas[i].abs() < thetas[best].abs());
        if better {
            best = i;
        }
    }

    let mut lo = thetas[best.saturating_sub(1)];
    let mut hi = thetas[(best + 1).min(THETA_GRID - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = sbp_at(c)?;
    let mut fd = sbp_at(d)?;
    while hi - lo > THETA_TOL {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = sbp_at(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = sbp_at(d)?;
        }
    }
    let refined = 0.5 * (lo + hi);
    // Never return something worse than the grid winner.
    if sbp_at(refined)? >= values[best] {
        Ok(refined)
    } else {
        Ok(thetas[best])
    }
}
