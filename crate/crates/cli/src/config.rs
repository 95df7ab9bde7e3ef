//! Experiment configuration files.
//!
//! Lengths are either bare numbers in meters or strings with an `m`, `cm`
//! or `mm` suffix. Angles are in degrees. Unknown keys are errors.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use aperture_dof_core::operator::{DEFAULT_ELEMENTS, DEFAULT_SCENE_SAMPLES};
use aperture_dof_core::recon::{ReconMethod, DEFAULT_OVERSAMPLE};
use aperture_dof_core::{Aperture, Architecture, SceneSegment, WaveContext};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

/// A length in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Length(pub f64);

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct LengthVisitor;

        impl Visitor<'_> for LengthVisitor {
            type Value = Length;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a length in meters or a string such as \"15cm\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Length, E> {
                Ok(Length(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Length, E> {
                Ok(Length(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Length, E> {
                parse_length(v).map(Length).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(LengthVisitor)
    }
}

pub fn parse_length(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let (number, scale) = if let Some(n) = s.strip_suffix("mm") {
        (n, 1e-3)
    } else if let Some(n) = s.strip_suffix("cm") {
        (n, 1e-2)
    } else if let Some(n) = s.strip_suffix('m') {
        (n, 1.0)
    } else {
        (s, 1.0)
    };
    number
        .trim()
        .parse::<f64>()
        .map(|v| v * scale)
        .map_err(|_| format!("invalid length {s:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchChoice {
    Mono,
    Multi,
    Both,
}

impl ArchChoice {
    pub fn architectures(self) -> Vec<Architecture> {
        match self {
            ArchChoice::Mono => vec![Architecture::Monostatic],
            ArchChoice::Multi => vec![Architecture::Multistatic],
            ArchChoice::Both => vec![Architecture::Monostatic, Architecture::Multistatic],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub aperture_length: Length,
    pub scene_length: Length,
    pub standoff: Length,
    /// Scene rotation in degrees.
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "zero_length")]
    pub offset: Length,
    pub wavelength: Length,
}

fn zero_length() -> Length {
    Length(0.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(default = "default_arch")]
    pub architecture: ArchChoice,
    pub elements: Option<usize>,
    /// Element pitch; fixes the element count as `round(L1 / spacing)`.
    pub spacing: Option<Length>,
}

fn default_arch() -> ArchChoice {
    ArchChoice::Both
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            architecture: ArchChoice::Both,
            elements: None,
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    pub scene_samples: usize,
    pub kspace_samples: usize,
    pub sbp_points: usize,
    pub oversample: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            scene_samples: DEFAULT_SCENE_SAMPLES,
            kspace_samples: aperture_dof_core::kspace::DEFAULT_MULTI_SAMPLES,
            sbp_points: aperture_dof_core::sbp::DEFAULT_SBP_POINTS,
            oversample: DEFAULT_OVERSAMPLE,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "t")]
    Offset,
    #[serde(rename = "D")]
    Standoff,
    #[serde(rename = "L2")]
    SceneLength,
    #[serde(rename = "theta")]
    Theta,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Offset => "t",
            SweepParam::Standoff => "D",
            SweepParam::SceneLength => "L2",
            SweepParam::Theta => "theta",
        }
    }
}

/// Swept values: an explicit list, or `count` evenly spaced values from
/// `start` to `stop`. Lengths for `t`, `D`, `L2`; degrees for `theta`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: Option<Vec<Length>>,
    pub start: Option<Length>,
    pub stop: Option<Length>,
    pub count: Option<usize>,
}

impl SweepConfig {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match (&self.values, self.start, self.stop, self.count) {
            (Some(v), None, None, None) if !v.is_empty() => Ok(v.iter().map(|l| l.0).collect()),
            (None, Some(a), Some(b), Some(n)) if n >= 2 => Ok((0..n)
                .map(|i| a.0 + (b.0 - a.0) * i as f64 / (n - 1) as f64)
                .collect()),
            (None, Some(a), Some(_), Some(1)) => Ok(vec![a.0]),
            _ => bail!("sweep: give either a non-empty `values` list or `start`, `stop` and `count`"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub rank: Option<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
}

fn default_stride() -> usize {
    10
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::Pinv, MethodName::Mf]
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        Self {
            stride: default_stride(),
            rank: None,
            methods: default_methods(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Pinv,
    Mf,
}

impl From<MethodName> for ReconMethod {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Pinv => ReconMethod::Pinv,
            MethodName::Mf => ReconMethod::Mf,
        }
    }
}

/// Standoffs at which the Fresnel command tabulates its counts.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FresnelConfig {
    pub standoffs: Option<Vec<Length>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub run: RunConfig,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub resolution: ResolutionConfig,
    #[serde(default)]
    pub fresnel: FresnelConfig,
}

/// Geometry objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub aperture: Aperture,
    pub scene: SceneSegment,
    pub wave: WaveContext,
    pub elements: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        for (key, v) in [
            ("geometry.aperture_length", g.aperture_length.0),
            ("geometry.scene_length", g.scene_length.0),
            ("geometry.standoff", g.standoff.0),
            ("geometry.wavelength", g.wavelength.0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bail!("{key}: must be positive, got {v}");
            }
        }
        if !g.offset.0.is_finite() {
            bail!("geometry.offset: must be finite");
        }
        if !(g.theta.is_finite() && g.theta.abs() < 90.0) {
            bail!("geometry.theta: must lie strictly between -90 and 90 degrees, got {}", g.theta);
        }
        if let Some(0) = self.array.elements {
            bail!("array.elements: must be positive");
        }
        if let Some(s) = self.array.spacing {
            if !(s.0.is_finite() && s.0 > 0.0) {
                bail!("array.spacing: must be positive, got {}", s.0);
            }
            let n = (g.aperture_length.0 / s.0).round() as usize;
            if n == 0 {
                bail!("array.spacing: larger than the aperture");
            }
            if let Some(e) = self.array.elements {
                if e != n {
                    bail!("array.elements: {e} disagrees with array.spacing, which implies {n}");
                }
            }
        }
        let d = &self.discretization;
        if d.scene_samples < 2 {
            bail!("discretization.scene_samples: need at least 2");
        }
        if d.kspace_samples < 2 {
            bail!("discretization.kspace_samples: need at least 2");
        }
        if d.sbp_points < 16 {
            bail!("discretization.sbp_points: need at least 16");
        }
        if d.oversample == 0 {
            bail!("discretization.oversample: must be at least 1");
        }
        if self.resolution.stride == 0 {
            bail!("resolution.stride: must be positive");
        }
        if self.resolution.methods.is_empty() {
            bail!("resolution.methods: must not be empty");
        }
        if let Some(sweep) = &self.sweep {
            sweep.resolve()?;
        }
        self.setup()?;
        Ok(())
    }

    pub fn elements(&self) -> usize {
        match (self.array.elements, self.array.spacing) {
            (Some(n), _) => n,
            (None, Some(s)) => (self.geometry.aperture_length.0 / s.0).round() as usize,
            (None, None) => DEFAULT_ELEMENTS,
        }
    }

    pub fn setup(&self) -> Result<Setup> {
        let g = &self.geometry;
        let aperture = Aperture::centered(g.aperture_length.0, g.standoff.0)?;
        let scene = SceneSegment::with_length(g.scene_length.0, g.theta.to_radians(), g.offset.0)?;
        scene
            .ensure_in_front(&aperture)
            .context("geometry: the scene must lie in front of the aperture plane")?;
        Ok(Setup {
            aperture,
            scene,
            wave: WaveContext::new(g.wavelength.0)?,
            elements: self.elements(),
        })
    }
}
