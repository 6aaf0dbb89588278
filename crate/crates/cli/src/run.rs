//! Mode drivers. Each writes its artifacts under `output.dir` and returns a
//! short summary for stdout.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use scatter_core::export::{fmt_f64, write_atomic, write_json};
use scatter_core::greens::{eval_g, hessian_g};
use scatter_core::incident::IncidentField;
use scatter_core::interaction::FieldSample;
use scatter_core::las::{default_exclusion, eval_fields, neglect_estimates, solve_cloud, CurlSolution};
use scatter_core::limit::{design_materials, effective_medium, eval_limit_fields, solve_limit, DensityChoice};
use scatter_core::oracle::{asymptotics_report, SphereMesh};
use scatter_core::particles::{diagnose, place_particles_seeded, DEFAULT_SEED};
use scatter_core::study::{convergence_study, filter_probes};
use scatter_core::voxel::{GridSpec, VoxelGrid};
use scatter_core::{CVec3, Vec3};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;

const CSV_HEADER: &str = "x,y,z,Re(Ex),Im(Ex),Re(Ey),Im(Ey),Re(Ez),Im(Ez),Re(Hx),Im(Hx),Re(Hy),Im(Hy),Re(Hz),Im(Hz)";

pub fn fields_csv(samples: &[FieldSample]) -> String {
    let mut out = String::with_capacity(64 * 15 * (samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in samples {
        let mut cols: Vec<String> = s.x.to_array().iter().map(|v| fmt_f64(*v)).collect();
        for v in s.e.to_array().iter().chain(s.h.to_array().iter()) {
            cols.push(fmt_f64(v.re));
            cols.push(fmt_f64(v.im));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Artifacts written by one invocation.
#[derive(Debug, Default, Serialize)]
pub struct Summary {
    pub mode: String,
    pub artifacts: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
}

struct Writer<'a> {
    dir: &'a Path,
    summary: Summary,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a RunConfig, mode: &str) -> Self {
        Writer {
            dir: &cfg.output.dir,
            summary: Summary {
                mode: mode.into(),
                ..Summary::default()
            },
        }
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_json(&path, value)?;
        self.summary.artifacts.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        self.summary.artifacts.push(path);
        Ok(())
    }
}

fn solver_info(sol: &CurlSolution) -> Value {
    json!({
        "solver_used": sol.solver_used,
        "iterations": sol.iterations,
        "residual_norm": sol.residual_norm,
        "condition_estimate": sol.condition_estimate,
        "warnings": sol.warnings,
    })
}

pub fn run(cfg: &RunConfig) -> Result<Summary, CliError> {
    cfg.check()?;
    match cfg.solver.mode {
        Mode::Las => run_las(cfg),
        Mode::Limit => run_limit(cfg),
        Mode::Oracle => run_oracle(cfg),
        Mode::Design => run_design(cfg),
        Mode::Validate => run_validate(cfg),
    }
}

fn run_las(cfg: &RunConfig) -> Result<Summary, CliError> {
    let a = cfg.require_a()?;
    let fields = cfg.fields()?;
    let seed = cfg.solver.seed.unwrap_or(DEFAULT_SEED);
    let cloud = place_particles_seeded(&cfg.domain, &fields, a, cfg.solver.kappa, seed)
        .map_err(|e| CliError::schema("solver.a", e.to_string()))?;
    log::info!("placed {} particles", cloud.len());
    let (system, sol) = solve_cloud(&cloud, &cfg.medium, &cfg.wave, &cfg.solve_options())?;
    let probes = cfg.probes();
    let samples = eval_fields(&system, &sol, &cfg.medium, &cfg.wave, &probes, default_exclusion(&cloud));
    let k = cfg.medium.wavenumber()?;

    let mut w = Writer::new(cfg, "las");
    if !cfg.output.no_fields {
        w.text("fields.csv", &fields_csv(&samples))?;
    }
    w.json("solution.json", &json!({"config": cfg, "cloud": cloud, "solution": sol}))?;
    w.json(
        "diagnostics.json",
        &json!({
            "config": cfg,
            "particles": cloud.len(),
            "cloud": diagnose(&cloud, k),
            "neglect": neglect_estimates(&cloud, &cfg.medium, &sol)?,
            "solver": solver_info(&sol),
            "probes_inside_exclusion": samples.iter().filter(|s| s.dropped_terms > 0).count(),
        }),
    )?;
    Ok(w.summary)
}

fn run_limit(cfg: &RunConfig) -> Result<Summary, CliError> {
    let fields = cfg.fields()?;
    let sol = solve_limit(
        &cfg.domain,
        &fields,
        &cfg.medium,
        &cfg.wave,
        cfg.solver.cells_per_axis,
        &cfg.solve_options(),
    )
    .map_err(|e| match e {
        scatter_core::Error::InvalidParameter { .. } => CliError::schema("solver.cells_per_axis", e.to_string()),
        other => other.into(),
    })?;
    let probes = cfg.probes();
    let samples = eval_limit_fields(&sol, &cfg.medium, &cfg.wave, &probes);

    let mut w = Writer::new(cfg, "limit");
    if !cfg.output.no_fields {
        w.text("fields.csv", &fields_csv(&samples))?;
    }
    w.json(
        "solution.json",
        &json!({"config": cfg, "nodes": sol.grid.nodes(), "weights": sol.grid.weights, "W": sol.w()}),
    )?;
    let spec = sol.grid.spec;
    let em = effective_medium(&fields, &cfg.medium, spec)?;
    w.text("effective_medium.csv", &em.to_csv())?;
    w.json(
        "diagnostics.json",
        &json!({
            "config": cfg,
            "nodes": sol.grid.len(),
            "cell_volume": sol.grid.cell_volume,
            "solver": solver_info(&sol.curl),
            "probes_inside_weighted_cells": samples.iter().filter(|s| s.dropped_terms > 0).count(),
        }),
    )?;
    Ok(w.summary)
}

fn run_oracle(cfg: &RunConfig) -> Result<Summary, CliError> {
    let seq = if cfg.solver.a_sequence.is_empty() {
        vec![cfg.require_a()?]
    } else {
        cfg.solver.a_sequence.clone()
    };
    let fields = cfg.fields()?;
    let h = cfg.solver.oracle_h.unwrap_or_else(|| fields.h(cfg.domain.center()));
    let rep = asymptotics_report(&seq, cfg.solver.kappa, h, &cfg.medium, &cfg.wave, cfg.solver.n_theta)?;
    let mut w = Writer::new(cfg, "oracle");
    w.json("oracle.json", &json!({"config": cfg, "h": h, "report": rep}))?;
    Ok(w.summary)
}

fn run_design(cfg: &RunConfig) -> Result<Summary, CliError> {
    let block = cfg
        .design
        .as_ref()
        .ok_or_else(|| CliError::schema("design", "required for mode `design`"))?;
    let spec = GridSpec::spanning(&cfg.domain, block.grid).map_err(|e| CliError::schema("design.grid", e.to_string()))?;
    let target = VoxelGrid::from_fn(spec, |p| block.target_mu.eval(p));
    let fields = cfg.fields()?;
    let density = block
        .density
        .clone()
        .unwrap_or_else(|| DensityChoice::Grid(VoxelGrid::from_fn(spec, |p| fields.density(p))));
    let (h, feasibility) = design_materials(&target, &cfg.medium, &density)?;
    let mut w = Writer::new(cfg, "design");
    w.json("h.json", &h)?;
    w.json("design.json", &json!({"config": cfg, "feasibility": feasibility, "h": h}))?;
    Ok(w.summary)
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

fn helmholtz_check(k: Complex64) -> Result<(f64, f64), CliError> {
    const W: [f64; 4] = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let pairs = [
        (Vec3::new(0.7, -0.2, 0.3), Vec3::new(0.0, 0.1, -0.4)),
        (Vec3::new(-1.0, 0.5, 1.2), Vec3::new(0.3, 0.0, 0.0)),
        (Vec3::new(0.2, 0.2, 2.0), Vec3::new(-0.5, 0.4, 0.1)),
    ];
    let (mut helm, mut trace) = (0.0f64, 0.0f64);
    for (x, y) in pairs {
        let r = (x - y).norm();
        let step = 0.01 * r;
        let g = |p: Vec3| eval_g(p, y, k);
        let g0 = g(x)?;
        let mut lap = g0 * (3.0 * W[0]);
        for axis in 0..3 {
            for (m, w) in W.iter().enumerate().skip(1) {
                let e = Vec3::axis(axis) * (m as f64 * step);
                lap += (g(x + e)? + g(x - e)?) * *w;
            }
        }
        lap /= step * step;
        let k2g = k * k * g0;
        helm = helm.max((lap + k2g).norm() / lap.norm().max(k2g.norm()));
        let hess = hessian_g(x, y, k)?;
        trace = trace.max((hess.trace() + k2g).norm() / k2g.norm().max(hess.max_abs()));
    }
    Ok((helm, trace))
}

/// Largest relative mismatch of `∇×E = iωμ₀H` and `∇·(E − E₀)/|∇(E − E₀)|`
/// from central differences.
fn maxwell_fd(
    field: impl Fn(Vec3) -> Result<FieldSample, CliError>,
    incident: &dyn IncidentField,
    k: Complex64,
    i_omega_mu: Complex64,
    probes: &[Vec3],
    step: f64,
) -> Result<(f64, f64), CliError> {
    let (mut curl_err, mut div_err) = (0.0f64, 0.0f64);
    for &x in probes {
        let mut jac = [[Complex64::new(0.0, 0.0); 3]; 3];
        let mut div = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for j in 0..3 {
            let d = Vec3::axis(j) * step;
            let (p, m) = (field(x + d)?.e, field(x - d)?.e);
            let de = (p - m) * (0.5 / step);
            let ds = (p - incident.e(k, x + d) - (m - incident.e(k, x - d))) * (0.5 / step);
            for (i, v) in de.to_array().iter().enumerate() {
                jac[i][j] = *v;
            }
            div += ds.to_array()[j];
            scale += ds.norm_sqr();
        }
        let curl = CVec3::new(jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]);
        let target = field(x)?.h * i_omega_mu;
        curl_err = curl_err.max((curl - target).norm() / target.norm());
        if scale > 0.0 {
            div_err = div_err.max(div.norm() / scale.sqrt());
        }
    }
    Ok((curl_err, div_err))
}

fn run_validate(cfg: &RunConfig) -> Result<Summary, CliError> {
    let k = cfg.medium.wavenumber()?;
    let iwm = cfg.medium.i_omega_mu();
    let mut checks = Vec::new();

    let (helm, trace) = helmholtz_check(k)?;
    checks.push(Check::new("green_helmholtz_residual", helm, 1e-6));
    checks.push(Check::new("green_hessian_trace", trace, 1e-12));

    let incident_probes = [Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.7, 1.1, 0.4), Vec3::new(2.0, -0.5, 1.5)];
    let plain = |x: Vec3| {
        Ok(FieldSample {
            x,
            e: cfg.wave.e(k, x),
            h: cfg.wave.curl_e(k, x) * (1.0 / iwm),
            source: scatter_core::interaction::FieldSource::Incident,
            dropped_terms: 0,
        })
    };
    let (curl, _) = maxwell_fd(plain, &cfg.wave, k, iwm, &incident_probes, 1e-4)?;
    checks.push(Check::new("incident_faraday", curl, 1e-6));
    let div = incident_probes
        .iter()
        .map(|&x| {
            let s = 1e-4;
            (0..3)
                .map(|j| {
                    let d = Vec3::axis(j) * s;
                    (cfg.wave.e(k, x + d) - cfg.wave.e(k, x - d)).to_array()[j] / (2.0 * s)
                })
                .sum::<Complex64>()
                .norm()
                / (k.norm() * cfg.wave.e(k, x).norm())
        })
        .fold(0.0, f64::max);
    checks.push(Check::new("incident_divergence", div, 1e-6));

    let a_mesh = cfg.solver.a.unwrap_or(0.05);
    let mesh = SphereMesh::new(a_mesh, cfg.solver.n_theta).map_err(|e| CliError::schema("solver.n_theta", e.to_string()))?;
    let area = 4.0 * std::f64::consts::PI * a_mesh * a_mesh;
    checks.push(Check::new("mesh_area", (mesh.area() - area).abs() / area, 1e-12));
    let moment = mesh.normal_moment();
    let mut dev: f64 = 0.0;
    for (i, row) in moment.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let t = if i == j { area / 3.0 } else { 0.0 };
            dev = dev.max((v - t).abs() / (area / 3.0));
        }
    }
    checks.push(Check::new("mesh_normal_moment", dev, 1e-8));

    let mut skipped = Vec::new();
    if let Some(a) = cfg.solver.a {
        let fields = cfg.fields()?;
        let seed = cfg.solver.seed.unwrap_or(DEFAULT_SEED);
        let cloud = place_particles_seeded(&cfg.domain, &fields, a, cfg.solver.kappa, seed)
            .map_err(|e| CliError::schema("solver.a", e.to_string()))?;
        let (system, sol) = solve_cloud(&cloud, &cfg.medium, &cfg.wave, &cfg.solve_options())?;
        let far: Vec<Vec3> = filter_probes(&cfg.probes(), cloud.centers(), 10.0 * a).into_iter().take(8).collect();
        if far.is_empty() {
            skipped.push("las_maxwell: no probe at least 10a from every particle");
        } else {
            let field = |x: Vec3| {
                Ok(eval_fields(&system, &sol, &cfg.medium, &cfg.wave, &[x], default_exclusion(&cloud))
                    .pop()
                    .expect("one probe in, one sample out"))
            };
            let (curl, div) = maxwell_fd(field, &cfg.wave, k, iwm, &far, 1e-3)?;
            checks.push(Check::new("las_faraday", curl, 1e-4));
            checks.push(Check::new("las_scattered_divergence", div, 1e-4));
        }
        checks.push(Check::new("las_relative_residual", sol.residual_norm, 1e-6));
    } else {
        skipped.push("las_*: solver.a not set");
    }

    let passed = checks.iter().all(|c| c.passed);
    let mut w = Writer::new(cfg, "validate");
    w.json(
        "validate.json",
        &json!({"config": cfg, "passed": passed, "checks": checks, "skipped": skipped}),
    )?;
    if !passed {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        return Err(CliError::Validation(failed.join(", ")));
    }
    w.summary.passed = Some(true);
    Ok(w.summary)
}

pub fn run_study(cfg: &RunConfig) -> Result<Summary, CliError> {
    cfg.check()?;
    if cfg.solver.a_sequence.is_empty() {
        return Err(CliError::schema("solver.a_sequence", "study needs a non-empty radius sequence"));
    }
    let fields = cfg.fields()?;
    let rep = convergence_study(
        &cfg.domain,
        &fields,
        &cfg.medium,
        &cfg.wave,
        &cfg.solver.a_sequence,
        cfg.solver.kappa,
        &cfg.probes(),
        cfg.solver.cells_per_axis,
        &cfg.solve_options(),
    )?;
    let mut w = Writer::new(cfg, "study");
    w.json("study.json", &json!({"config": cfg, "study": rep}))?;
    w.summary.passed = Some(rep.passed);
    if !rep.passed {
        log::warn!("study FAILED: {}", rep.failure.as_deref().unwrap_or(""));
    }
    Ok(w.summary)
}
