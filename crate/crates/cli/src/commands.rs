use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use aperture_dof_core::fresnel::{
    effective_aperture, fresnel_dof, fresnel_equivalence_check, merge_tolerance, sbp_g3_fresnel,
    ApertureFunction, KernelModel,
};
use aperture_dof_core::geometry::viewing_angles;
use aperture_dof_core::kspace::{bandwidth_of_set, mono_spectrum, multi_spectrum};
use aperture_dof_core::operator::{
    build_operator, dof_knee, sigma_bar, sigma_bar_sq, svd, DEFAULT_KNEE_DB,
};
use aperture_dof_core::recon::{resolution_sweep, ReconMethod, ResolutionSettings};
use aperture_dof_core::sbp::{sbp_for_scene, theta_heu, theta_max};
use aperture_dof_core::{Aperture, Architecture, ArrayLayout, SceneSegment};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Setup, SweepParam};
use crate::output::{num, opt_num, write_file, Csv, Plot, Series};

/// Files written by a command and any internal checks that failed.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl Report {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn layout(setup: &Setup, arch: Architecture) -> Result<ArrayLayout> {
    Ok(ArrayLayout::uniform(arch, &setup.aperture, setup.elements)?)
}

fn geometry_json(config: &ExperimentConfig, setup: &Setup) -> serde_json::Value {
    json!({
        "aperture_length": setup.aperture.length(),
        "scene_length": setup.scene.length(),
        "standoff": setup.aperture.standoff(),
        "theta_deg": config.geometry.theta,
        "offset": setup.scene.offset(),
        "wavelength": setup.wave.wavelength(),
        "elements": setup.elements,
        "scene_samples": config.discretization.scene_samples,
        "seed": config.run.seed,
    })
}

#[derive(Serialize)]
struct ArchDof {
    sigma_bar: f64,
    sigma_bar_sq: f64,
    knee: usize,
    hs_norm_sq: f64,
}

pub fn svd_cmd(config: &ExperimentConfig, archs: &[Architecture], out: &Path) -> Result<Report> {
    let setup = config.setup()?;
    let mut report = Report::default();
    let sbp = sbp_for_scene(&setup.scene, &setup.aperture, &setup.wave, config.discretization.sbp_points)?;
    let fresnel = fresnel_dof(
        setup.aperture.length(),
        setup.scene.length(),
        setup.aperture.standoff(),
        setup.wave.wavelength(),
    )?;
    let mut per_arch = BTreeMap::new();
    let mut series = Vec::new();
    for &arch in archs {
        let op = build_operator(
            &setup.scene,
            &layout(&setup, arch)?,
            &setup.aperture,
            &setup.wave,
            config.discretization.scene_samples,
        )?;
        let spec = svd(&op, false)?;
        let fro = op.frobenius_norm_sq();
        let gap = (spec.hs_norm_sq() - fro).abs() / fro;
        report.check(gap <= 1e-8, || {
            format!("{}: sum of squared singular values differs from the norm by {gap:.3e}", arch.short_name())
        });

        let normalized = spec.normalized();
        let mut csv = Csv::new(&["index", "sigma", "sigma_normalized"]);
        for (i, (s, n)) in spec.singular_values().iter().zip(&normalized).enumerate() {
            csv.row(&[(i + 1).to_string(), num(*s), num(*n)]);
        }
        report.files.push(csv.write(out, &format!("svd_{}.csv", arch.short_name()))?);
        series.push(Series::solid(
            arch.short_name(),
            normalized.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect(),
        ));
        per_arch.insert(
            arch.short_name(),
            ArchDof {
                sigma_bar: sigma_bar(&spec)?,
                sigma_bar_sq: sigma_bar_sq(&spec)?,
                knee: dof_knee(&spec, DEFAULT_KNEE_DB),
                hs_norm_sq: spec.hs_norm_sq(),
            },
        );
    }
    let dof = json!({
        "geometry": geometry_json(config, &setup),
        "geometry_class": format!("{:?}", setup.scene.class()),
        "sbp": sbp.value,
        "sbp_method": format!("{:?}", sbp.method),
        "fresnel_dof": fresnel,
        "knee_db": DEFAULT_KNEE_DB,
        "architectures": per_arch,
    });
    report
        .files
        .push(write_file(out, "dof.json", &format!("{}\n", serde_json::to_string_pretty(&dof)?))?);
    let plot = Plot {
        title: "Normalized singular values".into(),
        x_label: "index".into(),
        y_label: "sigma / sigma_1".into(),
        log_y: true,
        series,
        markers: vec![(sbp.value, format!("SBP {:.1}", sbp.value))],
    };
    report.files.push(write_file(out, "svd.svg", &plot.render())?);
    Ok(report)
}

fn swept_setup(setup: &Setup, param: SweepParam, v: f64) -> Result<(Aperture, SceneSegment)> {
    let ap = setup.aperture;
    let sc = setup.scene;
    Ok(match param {
        SweepParam::Offset => (ap, SceneSegment::new(sc.half_length(), sc.theta(), v)?),
        SweepParam::Standoff => (Aperture::centered(ap.length(), v)?, sc),
        SweepParam::SceneLength => (ap, SceneSegment::with_length(v, sc.theta(), sc.offset())?),
        SweepParam::Theta => (ap, SceneSegment::new(sc.half_length(), v.to_radians(), sc.offset())?),
    })
}

pub fn sbp_sweep_cmd(config: &ExperimentConfig, out: &Path) -> Result<Report> {
    let setup = config.setup()?;
    let sweep = config
        .sweep
        .as_ref()
        .context("sbp-sweep needs a [sweep] section")?;
    let values = sweep.resolve()?;
    let n_points = config.discretization.sbp_points;
    let with_theta = sweep.param == SweepParam::Offset;
    let with_fresnel = !with_theta && setup.scene.offset() == 0.0;

    let rows = values
        .par_iter()
        .map(|&v| -> Result<Vec<Option<f64>>> {
            let (ap, scene) = swept_setup(&setup, sweep.param, v)
                .with_context(|| format!("sweep value {v}"))?;
            let sbp = sbp_for_scene(&scene, &ap, &setup.wave, n_points)
                .with_context(|| format!("sweep value {v}"))?
                .value;
            let mut row = vec![Some(v), Some(sbp)];
            if with_fresnel {
                row.push(Some(sbp_g3_fresnel(
                    ap.length(),
                    scene.length(),
                    ap.standoff(),
                    setup.wave.wavelength(),
                    scene.theta(),
                )?));
            }
            if with_theta {
                row.push(Some(theta_heu(v, ap.standoff())?.to_degrees()));
                row.push(Some(
                    theta_max(v, scene.half_length(), &ap, &setup.wave, n_points)?.to_degrees(),
                ));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut header = vec!["param_value", "sbp"];
    if with_fresnel {
        header.push("fresnel_approx");
    }
    if with_theta {
        header.extend(["theta_heu", "theta_max"]);
    }
    let mut csv = Csv::new(&header);
    for row in &rows {
        csv.row(&row.iter().map(|v| opt_num(*v)).collect::<Vec<_>>());
    }
    let mut report = Report::default();
    report.files.push(csv.write(out, "sbp_sweep.csv")?);
    for row in &rows {
        report.check(row[1].is_some_and(|s| s >= 0.0), || format!("negative SBP at {:?}", row[0]));
    }

    let mut series = vec![Series::solid("SBP", rows.iter().map(|r| (r[0].unwrap(), r[1].unwrap())).collect())];
    if with_fresnel {
        series.push(Series::dashed(
            "Fresnel",
            rows.iter().map(|r| (r[0].unwrap(), r[2].unwrap())).collect(),
        ));
    }
    let unit = match sweep.param {
        SweepParam::Theta => "deg",
        _ => "m",
    };
    let plot = Plot {
        title: format!("SBP versus {}", sweep.param.name()),
        x_label: format!("{} ({unit})", sweep.param.name()),
        y_label: "SBP".into(),
        log_y: false,
        series,
        markers: vec![],
    };
    report.files.push(write_file(out, "sbp_sweep.svg", &plot.render())?);
    Ok(report)
}

const KSPACE_SCENE_POINTS: usize = 41;
const KSPACE_PLOT_GRID: usize = 48;

pub fn kspace_cmd(config: &ExperimentConfig, out: &Path) -> Result<Report> {
    let setup = config.setup()?;
    let (scene, ap, wave) = (&setup.scene, &setup.aperture, &setup.wave);
    let k = wave.wavenumber();
    let grid = config.discretization.kspace_samples;
    let us = scene.uniform_with_endpoints(KSPACE_SCENE_POINTS);

    let rows = us
        .par_iter()
        .map(|&u| -> Result<[f64; 7]> {
            let p = scene.point(u);
            let (alpha, beta) = viewing_angles(p, ap)?;
            let b_mono = bandwidth_of_set(&mono_spectrum(p, ap, wave)?, scene);
            let b_multi = bandwidth_of_set(&multi_spectrum(p, ap, wave, grid)?, scene);
            Ok([u, p.x, p.z, alpha.to_degrees(), beta.to_degrees(), b_mono, b_multi])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = Report::default();
    let mut csv = Csv::new(&["u", "x", "z", "alpha_deg", "beta_deg", "bandwidth_mono", "bandwidth_multi"]);
    for r in &rows {
        csv.row(&r.iter().map(|v| num(*v)).collect::<Vec<_>>());
        let gap = (r[5] - r[6]).abs() * 2.0 * std::f64::consts::PI / k;
        report.check(gap <= 1e-9, || format!("projected widths differ by {gap:.3e} k at u = {}", r[0]));
    }
    report.files.push(csv.write(out, "kspace_bandwidth.csv")?);

    // Sample sets of the scene midpoint and both ends.
    let mut sets = Csv::new(&["u", "set", "kx", "kz"]);
    for &u in [us[0], 0.0, us[us.len() - 1]].iter() {
        let p = scene.point(u);
        for s in mono_spectrum(p, ap, wave)?.arc_samples(KSPACE_PLOT_GRID) {
            sets.row(&[num(u), "mono".into(), num(s.kx), num(s.kz)]);
        }
        for s in multi_spectrum(p, ap, wave, KSPACE_PLOT_GRID)?.samples() {
            sets.row(&[num(u), "multi".into(), num(s.kx), num(s.kz)]);
        }
    }
    report.files.push(sets.write(out, "kspace_sets.csv")?);

    let plot = Plot {
        title: "Spatial-frequency bandwidth along the scene".into(),
        x_label: "u (m)".into(),
        y_label: "B (cycles/m)".into(),
        log_y: false,
        series: vec![
            Series::solid("mono", rows.iter().map(|r| (r[0], r[5])).collect()),
            Series::dashed("multi", rows.iter().map(|r| (r[0], r[6])).collect()),
        ],
        markers: vec![],
    };
    report.files.push(write_file(out, "kspace.svg", &plot.render())?);
    Ok(report)
}

const DEFAULT_FRESNEL_STANDOFFS: [f64; 8] = [0.1, 0.15, 0.2, 0.3, 0.5, 0.8, 1.5, 2.5];

pub fn fresnel_cmd(config: &ExperimentConfig, out: &Path) -> Result<Report> {
    let setup = config.setup()?;
    let (l1, l2, lambda) = (setup.aperture.length(), setup.scene.length(), setup.wave.wavelength());
    let standoffs: Vec<f64> = match &config.fresnel.standoffs {
        Some(v) => v.iter().map(|l| l.0).collect(),
        None => DEFAULT_FRESNEL_STANDOFFS.to_vec(),
    };
    let mut report = Report::default();
    let rows = standoffs
        .par_iter()
        .map(|&d| -> Result<[f64; 4]> {
            let ap = Aperture::centered(l1, d)?;
            let sbp = sbp_for_scene(&setup.scene, &ap, &setup.wave, config.discretization.sbp_points)?.value;
            Ok([
                d,
                fresnel_dof(l1, l2, d, lambda)?,
                sbp_g3_fresnel(l1, l2, d, lambda, setup.scene.theta())?,
                sbp,
            ])
        })
        .collect::<Result<Vec<_>>>()
        .context("fresnel.standoffs")?;
    let mut csv = Csv::new(&["standoff", "fresnel_dof", "fresnel_sbp", "sbp"]);
    for r in &rows {
        csv.row(&r.iter().map(|v| num(*v)).collect::<Vec<_>>());
    }
    report.files.push(csv.write(out, "fresnel.csv")?);

    let multi = layout(&setup, Architecture::Multistatic)?;
    let tol = merge_tolerance(&setup.wave);
    let a_tx = ApertureFunction::from_positions(multi.tx_positions(), tol)?;
    let a_rx = ApertureFunction::from_positions(multi.rx_positions(), tol)?;
    let eff = effective_aperture(&a_tx, &a_rx, tol);
    report.check(eff.total_count() == setup.elements * setup.elements, || {
        format!("effective aperture holds {} pairs, expected {}", eff.total_count(), setup.elements.pow(2))
    });
    let mut csv = Csv::new(&["position", "multiplicity"]);
    for &(x, m) in eff.elements() {
        csv.row(&[num(x), m.to_string()]);
    }
    report.files.push(csv.write(out, "effective_aperture.csv")?);

    let d = setup.aperture.standoff();
    let mut summary = json!({
        "geometry": geometry_json(config, &setup),
        "fresnel_dof": fresnel_dof(l1, l2, d, lambda)?,
        "fresnel_sbp": sbp_g3_fresnel(l1, l2, d, lambda, setup.scene.theta())?,
        "effective_elements": eff.len(),
        "effective_pairs": eff.total_count(),
    });
    if setup.scene.theta() == 0.0 {
        let n = config.discretization.scene_samples;
        let fres = fresnel_equivalence_check(&multi, &setup.scene, &setup.wave, d, n, KernelModel::Fresnel)?;
        let exact = fresnel_equivalence_check(&multi, &setup.scene, &setup.wave, d, n, KernelModel::Exact)?;
        report.check(fres.max_relative_discrepancy <= 0.01, || {
            format!("Fresnel-kernel equivalence gap {:.3e}", fres.max_relative_discrepancy)
        });
        summary["equivalence_gap_fresnel"] = json!(fres.max_relative_discrepancy);
        summary["equivalence_gap_exact"] = json!(exact.max_relative_discrepancy);
    }
    report.files.push(write_file(
        out,
        "fresnel.json",
        &format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?);

    let plot = Plot {
        title: "Fresnel DoF and SBP versus standoff".into(),
        x_label: "D (m)".into(),
        y_label: "count".into(),
        log_y: true,
        series: vec![
            Series::solid("SBP", rows.iter().map(|r| (r[0], r[3])).collect()),
            Series::dashed("Fresnel", rows.iter().map(|r| (r[0], r[2])).collect()),
        ],
        markers: vec![],
    };
    report.files.push(write_file(out, "fresnel.svg", &plot.render())?);
    Ok(report)
}

pub fn resolution_cmd(config: &ExperimentConfig, archs: &[Architecture], out: &Path) -> Result<Report> {
    let setup = config.setup()?;
    let methods: Vec<ReconMethod> = config.resolution.methods.iter().map(|&m| m.into()).collect();
    let mut settings = ResolutionSettings::strided(config.discretization.scene_samples, config.resolution.stride);
    settings.oversample = config.discretization.oversample;
    settings.rank = config.resolution.rank;

    let mut report = Report::default();
    let mut curves = Vec::new();
    for &arch in archs {
        let curve = resolution_sweep(
            &setup.scene,
            &setup.aperture,
            &setup.wave,
            &layout(&setup, arch)?,
            &methods,
            &settings,
        )
        .with_context(|| format!("{} resolution sweep", arch.short_name()))?;
        for m in &curve.methods {
            let mut csv = Csv::new(&["position", "coordinate", "magnitude", "normalized"]);
            for (pos, row) in curve.positions.iter().zip(&m.psf) {
                let peak = row.iter().cloned().fold(0.0, f64::max);
                for (c, v) in curve.image_coords.iter().zip(row) {
                    let norm = if peak > 0.0 { v / peak } else { 0.0 };
                    csv.row(&[num(*pos), num(*c), num(*v), num(norm)]);
                }
            }
            let name = format!("psf_{}_{}.csv", m.method.short_name(), arch.short_name());
            report.files.push(csv.write(out, &name)?);
            for w in m.widths.iter().flatten() {
                report.check(*w > 0.0, || format!("non-positive beamwidth {w}"));
            }
        }
        curves.push(curve);
    }

    let first = &curves[0];
    let mut header = vec!["position".to_string(), "reciprocal_bandwidth".to_string()];
    for c in &curves {
        for m in &c.methods {
            header.push(format!("width_{}_{}", m.method.short_name(), c.architecture.short_name()));
        }
    }
    header.push("flag".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for i in 0..first.positions.len() {
        let mut row = vec![num(first.positions[i]), num(first.reciprocal_bandwidth[i])];
        let mut clipped = Vec::new();
        for c in &curves {
            for m in &c.methods {
                row.push(opt_num(m.widths[i]));
                if m.widths[i].is_none() {
                    clipped.push(format!("{}_{}", m.method.short_name(), c.architecture.short_name()));
                }
            }
        }
        row.push(if clipped.is_empty() {
            "ok".into()
        } else {
            format!("edge:{}", clipped.join(";"))
        });
        csv.row(&row);
    }
    report.files.push(csv.write(out, "resolution.csv")?);

    let mut series = Vec::new();
    for c in &curves {
        for m in &c.methods {
            let pts = c
                .positions
                .iter()
                .zip(&m.widths)
                .filter_map(|(p, w)| w.map(|w| (*p, w)))
                .collect();
            series.push(Series::solid(
                format!("{} {}", m.method.short_name(), c.architecture.short_name()),
                pts,
            ));
        }
    }
    series.push(Series::dashed(
        "1/B",
        first.positions.iter().cloned().zip(first.reciprocal_bandwidth.iter().cloned()).collect(),
    ));
    let plot = Plot {
        title: "3 dB beamwidth along the scene".into(),
        x_label: "u (m)".into(),
        y_label: "width (m)".into(),
        log_y: false,
        series,
        markers: vec![],
    };
    report.files.push(write_file(out, "resolution.svg", &plot.render())?);
    Ok(report)
}
