use std::cell::RefCell;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use tetsdf::energy::EnergyLog;
use tetsdf::isosurface::{clamp_small_phi, marching_tetrahedra, EPS_CLAMP, EPS_GRAD};
use tetsdf::mesh::{build_band_tetmesh, sample_exact_sdf, ScalarField, TetMesh};
use tetsdf::optim::{
    depth_meters, e_depth, e_normal, evaluate_views, fd_gradient_check, fit_sdf_observed, objective,
    prune_inconsistent_triangles, refine_cameras, FitMode, FitReport, IterationRecord, View,
};
use tetsdf::render::{rasterize, raytrace_oracle, read_normal_png, Camera};
use tetsdf::skinning::{compute_skin_weights, skin_tet_vertices, Pose, RigidTransform, Skeleton};

use crate::config::{load_camera, Initial, SceneConfig};
use crate::error::CliError;
use crate::io;

fn print_json(value: &impl Serialize) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

// ---------------------------------------------------------------------------------------
// template

#[derive(Args)]
pub struct TemplateArgs {
    /// Scene TOML; only the template and grid are used.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the scene's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn template(wd: &Path, a: TemplateArgs) -> Result<(), CliError> {
    let cfg = SceneConfig::load(wd, &a.config)?;
    cfg.validate(wd, false)?;
    let mesh = build_band_tetmesh(&cfg.template, cfg.grid.cell_size, cfg.grid.inflation)?;
    let phi = sample_exact_sdf(&cfg.template, &mesh);
    let out = wd.join(a.out.unwrap_or(cfg.output));
    io::save_mesh(&mesh, &out.join("mesh.tet"))?;
    io::save_field(&phi, &out.join("phi.field"))?;
    print_json(&json!({
        "vertices": mesh.num_vertices(),
        "tets": mesh.num_tets(),
        "edges": mesh.num_edges(),
    }))
}

// ---------------------------------------------------------------------------------------
// render

#[derive(Args)]
pub struct RenderArgs {
    /// Tet mesh file.
    #[arg(long)]
    mesh: PathBuf,
    /// Scalar field file with one value per mesh vertex.
    #[arg(long)]
    field: PathBuf,
    /// Camera JSON or TOML.
    #[arg(long)]
    camera: PathBuf,
    /// Normal-map PNG to write.
    #[arg(long)]
    out: PathBuf,
    /// Optional 16-bit depth PNG to write.
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Use the ray-cast reference renderer instead of the rasterizer.
    #[arg(long)]
    oracle: bool,
}

pub fn render(wd: &Path, a: RenderArgs) -> Result<(), CliError> {
    let mesh = io::load_mesh(&wd.join(&a.mesh))?;
    let field = io::load_field(&wd.join(&a.field))?;
    field.check_len(&mesh)?;
    let cam = load_camera(&wd.join(&a.camera))?;
    let tri = marching_tetrahedra(&mesh, &clamp_small_phi(&field, EPS_CLAMP)?)?;
    let nm = if a.oracle { raytrace_oracle(&tri, &cam)? } else { rasterize(&tri, &cam)? };
    io::save_normal_png(&nm, &wd.join(&a.out))?;
    if let Some(d) = &a.depth {
        io::save_depth_png(&nm, &wd.join(d))?;
    }
    print_json(&json!({
        "renderer": if a.oracle { "oracle" } else { "raster" },
        "triangles": tri.triangles.len(),
        "covered_pixels": nm.coverage_count(),
    }))
}

// ---------------------------------------------------------------------------------------
// fit

#[derive(Args)]
pub struct FitArgs {
    /// Scene TOML.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the scene's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep wall-clock timings in the report. Off by default so reruns are bitwise identical.
    #[arg(long)]
    timings: bool,
}

/// A scene with everything loaded: the (posed) mesh, the starting field as read, and views.
struct Loaded {
    mesh: TetMesh,
    phi0: ScalarField,
    views: Vec<View>,
}

fn load_scene(wd: &Path, cfg: &SceneConfig) -> Result<Loaded, CliError> {
    let mut mesh = match &cfg.mesh {
        Some(p) => io::load_mesh(&wd.join(p))?,
        None => build_band_tetmesh(&cfg.template, cfg.grid.cell_size, cfg.grid.inflation)?,
    };
    let phi0 = match &cfg.initial {
        Some(Initial::File { field }) => io::load_field(&wd.join(field))?,
        Some(Initial::Shape(shape)) => {
            shape.validate()?;
            sample_exact_sdf(shape, &mesh)
        }
        None => sample_exact_sdf(&cfg.template, &mesh),
    };
    phi0.check_len(&mesh)?;
    if let (Some(sk), Some(po)) = (&cfg.skeleton, &cfg.pose) {
        let skel: Skeleton = io::load_json(&wd.join(sk))?;
        let pose: Pose = io::load_json(&wd.join(po))?;
        let weights = compute_skin_weights(&mesh, &skel);
        mesh = mesh.with_vertices(skin_tet_vertices(&mesh, &weights, &skel, &pose)?)?;
    }
    let views = cfg
        .views
        .iter()
        .map(|v| {
            let camera = v.camera.resolve(wd)?;
            let target = io::load_target(&wd.join(&v.target), v.depth.as_ref().map(|d| wd.join(d)).as_deref())?;
            if target.dims() != (camera.width(), camera.height()) {
                return Err(CliError::Validation(format!(
                    "{}: image is {:?} but the camera is {}x{}",
                    v.target.display(),
                    target.dims(),
                    camera.width(),
                    camera.height()
                )));
            }
            Ok(View { camera, target })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Loaded { mesh, phi0, views })
}

const TERMS: [&str; 8] = ["total", "normal", "eikonal", "curvature", "shrink", "expand", "multiview", "anchor"];

fn term_values(r: &IterationRecord) -> [f64; 8] {
    [r.total, r.normal, r.eikonal, r.curvature, r.shrink, r.expand, r.multiview, r.anchor]
}

fn strip_timings(report: &mut FitReport) {
    report.seconds = 0.0;
    report.iterations.iter_mut().for_each(|r| r.millis = 0.0);
}

/// Writes the fitted fields, surfaces and per-view renders.
fn write_results(out: &Path, mesh: &TetMesh, fields: &[ScalarField], views: &[View], selected: &[usize]) -> Result<(), CliError> {
    io::save_field(&fields[0], &out.join("phi.field"))?;
    let tri = marching_tetrahedra(mesh, &clamp_small_phi(&fields[0], EPS_CLAMP)?)?;
    io::save_obj(&tri, &out.join("fit.obj"))?;
    if fields.len() > 1 {
        for (&v, f) in selected.iter().zip(fields) {
            io::save_field(f, &out.join(format!("phi_view{v}.field")))?;
            let t = marching_tetrahedra(mesh, &clamp_small_phi(f, EPS_CLAMP)?)?;
            io::save_obj(&t, &out.join(format!("fit_view{v}.obj")))?;
        }
    }
    for (i, &v) in selected.iter().enumerate() {
        let f = if fields.len() > 1 { &fields[i] } else { &fields[0] };
        let t = marching_tetrahedra(mesh, &clamp_small_phi(f, EPS_CLAMP)?)?;
        let nm = rasterize(&t, &views[v].camera)?;
        io::save_normal_png(&nm, &out.join(format!("renders/view{v}.png")))?;
        io::save_depth_png(&nm, &out.join(format!("renders/view{v}_depth.png")))?;
    }
    Ok(())
}

pub fn fit(wd: &Path, a: FitArgs) -> Result<(), CliError> {
    let cfg = SceneConfig::load(wd, &a.config)?;
    cfg.validate(wd, true)?;
    let Loaded { mesh, phi0, views } = load_scene(wd, &cfg)?;
    let out = wd.join(a.out.as_ref().unwrap_or(&cfg.output));
    std::fs::create_dir_all(&out)?;
    let selected: Vec<usize> = match &cfg.fit.views {
        Some(v) => v.clone(),
        None => (0..views.len()).collect(),
    };
    if let Some(&bad) = selected.iter().find(|&&v| v >= views.len()) {
        return Err(CliError::Validation(format!("view index {bad} out of range")));
    }

    if cfg.fit.iterations == 0 {
        // Nothing to optimize: the outputs are the inputs, scored.
        let clamped = clamp_small_phi(&phi0, EPS_GRAD)?;
        let per_field = if cfg.fit.mode == FitMode::PerView { selected.len() } else { 1 };
        write_results(&out, &mesh, &vec![clamped.clone(); per_field], &views, &selected)?;
        io::save_field(&phi0, &out.join("phi.field"))?;
        std::fs::write(out.join("loss.ndjson"), "")?;
        let report = FitReport {
            phi: vec![phi0.values().to_vec(); per_field],
            view_metrics: evaluate_views(&mesh, &clamped, &views, &selected)?,
            ..Default::default()
        };
        io::save_json(&report, &out.join("report.json"))?;
        return print_json(&report.view_metrics);
    }

    let log = RefCell::new(EnergyLog::new(BufWriter::new(File::create(out.join("loss.ndjson"))?)));
    let every = cfg.checkpoint_every;
    let result = fit_sdf_observed(&mesh, &phi0, &views, &cfg.fit, |rec, fields| {
        let mut log = log.borrow_mut();
        for (name, value) in TERMS.iter().zip(term_values(rec)) {
            log.record(rec.iteration, name, value)?;
        }
        if every > 0 && (rec.iteration + 1) % every == 0 {
            let path = out.join(format!("checkpoints/phi_{:06}.field", rec.iteration + 1));
            std::fs::create_dir_all(path.parent().expect("has parent"))?;
            tetsdf::mesh::io::write_field(&fields[0], BufWriter::new(File::create(&path)?))?;
        }
        Ok(())
    });
    {
        use std::io::Write;
        let mut w = log.into_inner().into_inner();
        w.flush()?;
    }
    match result {
        Ok(mut report) => {
            if !a.timings {
                strip_timings(&mut report);
            }
            let fields = report
                .phi
                .iter()
                .map(|p| ScalarField::new(p.clone()))
                .collect::<tetsdf::Result<Vec<_>>>()?;
            write_results(&out, &mesh, &fields, &views, &selected)?;
            io::save_json(&report, &out.join("report.json"))?;
            print_json(&report.view_metrics)
        }
        Err(tetsdf::Error::Divergence { iteration, loss, mut partial }) => {
            if !a.timings {
                strip_timings(&mut partial);
            }
            if let Some(p) = partial.phi.first() {
                io::save_field(&ScalarField::new(p.clone())?, &out.join("phi.field"))?;
            }
            io::save_json(&partial, &out.join("report.json"))?;
            Err(CliError::Numerical(format!(
                "optimization diverged at iteration {iteration} (loss {loss:e}); partial report written to {}",
                out.join("report.json").display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------------------
// eval

#[derive(Args)]
pub struct EvalArgs {
    /// Predicted normal-map PNG.
    #[arg(long)]
    pred: PathBuf,
    /// Target normal-map PNG.
    #[arg(long)]
    target: PathBuf,
    /// Predicted 16-bit depth PNG.
    #[arg(long, requires_all = ["target_depth", "camera"])]
    pred_depth: Option<PathBuf>,
    /// Target 16-bit depth PNG.
    #[arg(long, requires = "pred_depth")]
    target_depth: Option<PathBuf>,
    /// Camera that produced both depth maps, needed to convert depth to meters.
    #[arg(long)]
    camera: Option<PathBuf>,
}

pub fn eval(wd: &Path, a: EvalArgs) -> Result<(), CliError> {
    let pred = io::load_target(&wd.join(&a.pred), a.pred_depth.as_ref().map(|p| wd.join(p)).as_deref())?;
    let target = io::load_target(&wd.join(&a.target), a.target_depth.as_ref().map(|p| wd.join(p)).as_deref())?;
    let en = e_normal(&pred, &target)?;
    let ed = match &a.camera {
        Some(c) if a.pred_depth.is_some() => {
            let cam = load_camera(&wd.join(c))?;
            Some(e_depth(&depth_meters(&pred, &cam), &depth_meters(&target, &cam))?)
        }
        _ => None,
    };
    print_json(&json!({ "e_normal": en, "e_depth": ed }))
}

// ---------------------------------------------------------------------------------------
// gradcheck

#[derive(Args)]
pub struct GradcheckArgs {
    /// Scene TOML; the objective is evaluated at its initial field.
    #[arg(long)]
    config: PathBuf,
    /// Number of field entries to check, drawn from those with nonzero gradient.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn gradcheck(wd: &Path, a: GradcheckArgs) -> Result<(), CliError> {
    let cfg = SceneConfig::load(wd, &a.config)?;
    cfg.validate(wd, true)?;
    if !(a.step > 0.0) || !(a.threshold >= 0.0) || a.samples == 0 {
        return Err(CliError::Validation("need step > 0, threshold >= 0 and at least one sample".into()));
    }
    let Loaded { mesh, phi0, views } = load_scene(wd, &cfg)?;
    let views: Vec<View> = match &cfg.fit.views {
        Some(sel) => sel
            .iter()
            .map(|&v| views.get(v).cloned())
            .collect::<Option<_>>()
            .ok_or_else(|| CliError::Validation("view index out of range".into()))?,
        None => views,
    };
    let phi = clamp_small_phi(&phi0, cfg.fit.energy.eps_grad)?;
    let base = objective(&mesh, &phi, &views, &cfg.fit)?;
    // Entries near the clamp threshold would cross it under perturbation.
    let margin = cfg.fit.energy.eps_grad + 2.0 * a.step;
    let live: Vec<usize> = (0..phi.len())
        .filter(|&k| base.grad_phi[k] != 0.0 && phi[k].abs() > margin)
        .collect();
    if live.is_empty() {
        return Err(CliError::Numerical("the objective gradient is zero everywhere".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut idx: Vec<usize> = sample(&mut rng, live.len(), a.samples.min(live.len()))
        .into_iter()
        .map(|i| live[i])
        .collect();
    idx.sort_unstable();
    let worst = fd_gradient_check(|f| objective(&mesh, f, &views, &cfg.fit), &phi, &idx, a.step)?;
    let pass = worst <= a.threshold;
    print_json(&json!({
        "max_rel_error": worst,
        "threshold": a.threshold,
        "samples": idx.len(),
        "pass": pass,
    }))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("gradient check failed: {worst:e} > {:e}", a.threshold)))
    }
}

// ---------------------------------------------------------------------------------------
// icp-refine

#[derive(Args)]
pub struct IcpArgs {
    /// JSON array of cameras, one per mesh.
    #[arg(long)]
    cameras: PathBuf,
    /// Per-view OBJ meshes in world coordinates, in camera order.
    #[arg(long, num_args = 1.., required = true)]
    meshes: Vec<PathBuf>,
    /// Index of the view the others are aligned to.
    #[arg(long, default_value_t = 0)]
    reference: usize,
    #[arg(long, default_value_t = 10)]
    max_outer: usize,
    /// Stop when the largest translation update falls below this.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Where to write the refined cameras as a JSON array.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn icp_refine(wd: &Path, a: IcpArgs) -> Result<(), CliError> {
    let cameras: Vec<Camera> = io::load_json(&wd.join(&a.cameras))?;
    let meshes = a
        .meshes
        .iter()
        .map(|p| io::load_obj(&wd.join(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = refine_cameras(&meshes, &cameras, a.reference, a.max_outer, a.tol)?;
    // The world-space correction applied to each view's geometry.
    let transforms: Vec<RigidTransform> = cameras
        .iter()
        .zip(&rep.cameras)
        .map(|(old, new)| {
            let rt = old.rotation().transpose();
            RigidTransform::new(rt * new.rotation(), rt * (new.translation() - old.translation())).inverse()
        })
        .collect();
    if let Some(out) = &a.out {
        io::save_json(&rep.cameras, &wd.join(out))?;
    }
    print_json(&json!({
        "cameras": rep.cameras,
        "transforms": transforms,
        "rms_history": rep.rms_history,
    }))
}

// ---------------------------------------------------------------------------------------
// prune

#[derive(Args)]
pub struct PruneArgs {
    /// Triangle mesh OBJ.
    #[arg(long)]
    mesh: PathBuf,
    /// Camera of the target view.
    #[arg(long)]
    camera: PathBuf,
    /// Target normal-map PNG.
    #[arg(long)]
    target: PathBuf,
    /// Largest accepted angle between rendered and target normals, in degrees.
    #[arg(long, default_value_t = 30.0)]
    tol_deg: f64,
    /// Output OBJ.
    #[arg(long)]
    out: PathBuf,
}

pub fn prune(wd: &Path, a: PruneArgs) -> Result<(), CliError> {
    let tri = io::load_obj(&wd.join(&a.mesh))?;
    let cam = load_camera(&wd.join(&a.camera))?;
    let target = read_normal_png(wd.join(&a.target))?;
    let kept = prune_inconsistent_triangles(&tri, &cam, &target, a.tol_deg)?;
    io::save_obj(&kept, &wd.join(&a.out))?;
    print_json(&json!({
        "triangles_in": tri.triangles.len(),
        "triangles_out": kept.triangles.len(),
    }))
}
