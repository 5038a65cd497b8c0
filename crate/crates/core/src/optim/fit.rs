use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::precond::smooth_gradient;
use super::metrics::{depth_meters, e_depth, e_normal, eikonal_deviation};
use crate::energy::{
    eikonal_energy_with, expand_loss, mean_curvature_energy_with, multiview_consistency, normal_map_loss,
    shrink_loss, silhouette_sets, EnergyConfig, EnergyResult, GradientOperator,
};
use crate::isosurface::{clamp_small_phi, marching_tetrahedra, mt_vertex_jacobian, TriMesh};
use crate::mesh::{ScalarField, TetMesh};
use crate::render::{backprop_pixels, rasterize, Camera, NormalMap};
use crate::{Error, Result};

/// A camera and the normal map it should see.
#[derive(Clone, Debug)]
pub struct View {
    pub camera: Camera,
    pub target: NormalMap,
}

/// How views share the field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// One field fitted to every view.
    #[default]
    Shared,
    /// One field per view, coupled by the multiview consistency term and an optional
    /// quadratic anchor to the initial field.
    PerView,
}

/// Optimizer settings.
///
/// Each step is `phi -= step_i * v` with heavy-ball velocity `v = momentum * v + g`, where
/// `g` is the total gradient rescaled to norm at most `grad_clip` and, when `smoothing > 0`,
/// preconditioned by `(I + smoothing L)^-1` over the tet-mesh edge graph. Per-vertex updates are
/// capped at `max_update` (default a quarter of the average edge length), and the field is
/// re-clamped away from zero afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub iterations: usize,
    pub step: f64,
    /// `step_i = max(step * step_decay^i, min_step)`.
    pub step_decay: f64,
    pub min_step: f64,
    pub momentum: f64,
    pub grad_clip: Option<f64>,
    pub max_update: Option<f64>,
    /// Strength of the Laplacian preconditioner applied to the gradient; 0 disables it.
    pub smoothing: f64,
    /// Indices of the views to fit; all when unset.
    pub views: Option<Vec<usize>>,
    pub mode: FitMode,
    /// Weight of `1/2 |phi - phi0|^2` in per-view mode.
    pub anchor_weight: f64,
    /// Loss above which the fit aborts.
    pub divergence_limit: f64,
    pub energy: EnergyConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            step: 1.0,
            step_decay: 1.0,
            min_step: 0.0,
            momentum: 0.0,
            grad_clip: None,
            max_update: None,
            smoothing: 10.0,
            views: None,
            mode: FitMode::Shared,
            anchor_weight: 0.0,
            divergence_limit: 1e6,
            energy: EnergyConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) || self.iterations == 0 {
            return Err(Error::InvalidArgument("need step > 0 and at least one iteration".into()));
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) || !(self.min_step >= 0.0) {
            return Err(Error::InvalidArgument("step decay must lie in (0, 1] and min_step >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument("momentum must lie in [0, 1)".into()));
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) || self.max_update.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::InvalidArgument("clip thresholds must be positive".into()));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidArgument("smoothing must be finite and nonnegative".into()));
        }
        if !(self.anchor_weight >= 0.0) || !(self.divergence_limit > 0.0) {
            return Err(Error::InvalidArgument("anchor weight and divergence limit must be nonnegative".into()));
        }
        self.energy.validate()
    }

    fn step_at(&self, i: usize) -> f64 {
        (self.step * self.step_decay.powi(i as i32)).max(self.min_step)
    }
}

/// Loss terms of one iteration, summed over fields in per-view mode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub total: f64,
    pub normal: f64,
    pub eikonal: f64,
    pub curvature: f64,
    pub shrink: f64,
    pub expand: f64,
    pub multiview: f64,
    pub anchor: f64,
    pub step: f64,
    pub triangles: usize,
    /// Mean over tets of `| |grad phi|^2 - 1 |`, averaged over fields.
    pub eikonal_deviation: f64,
    pub millis: f64,
}

/// Final metrics for one view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMetrics {
    pub view: usize,
    pub e_normal: f64,
    /// Missing when the target carries no depth.
    pub e_depth: Option<f64>,
}

/// Trace and result of [`fit_sdf`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: Vec<IterationRecord>,
    /// Final fields: one in shared mode, one per fitted view otherwise.
    pub phi: Vec<Vec<f64>>,
    pub view_metrics: Vec<ViewMetrics>,
    pub seconds: f64,
}

/// Values and gradient of the image terms of one field against a set of views.
#[derive(Default)]
struct ImageTerms {
    normal: f64,
    shrink: f64,
    expand: f64,
    grad: Vec<f64>,
    triangles: usize,
}

fn image_terms(
    mesh: &TetMesh,
    phi: &ScalarField,
    views: &[&View],
    cfg: &EnergyConfig,
    eps_s: f64,
) -> Result<ImageTerms> {
    let n = phi.len();
    let tri = marching_tetrahedra(mesh, phi)?;
    let mut out = ImageTerms {
        grad: vec![0.0; n],
        triangles: tri.triangles.len(),
        ..Default::default()
    };
    if tri.is_empty() {
        return Ok(out);
    }
    let jac = mt_vertex_jacobian(mesh, phi, &tri, cfg.eps_grad)?;
    let scale = 1.0 / views.len() as f64;
    let w = &cfg.weights;
    let per_view = views
        .par_iter()
        .map(|view| -> Result<(f64, EnergyResult, EnergyResult, Vec<f64>)> {
            let nm = rasterize(&tri, &view.camera)?;
            let loss = normal_map_loss(&nm, &view.target)?;
            let vg = backprop_pixels(&tri, &view.camera, &nm, &loss.pixel_grads)?;
            let gphi = jac.vjp(&vg, n)?;
            let sets = silhouette_sets(&nm, &view.target, mesh, phi, &tri, &view.camera, eps_s)?;
            Ok((loss.value, shrink_loss(phi, &sets.shrink, eps_s), expand_loss(phi, &sets.expand, eps_s), gphi))
        })
        .collect::<Result<Vec<_>>>()?;
    for (normal, shrink, expand, gphi) in per_view {
        out.normal += scale * normal;
        out.shrink += scale * shrink.value;
        out.expand += scale * expand.value;
        for k in 0..n {
            out.grad[k] += scale * (w.normal * gphi[k] + w.shrink * shrink.grad_phi[k] + w.expand * expand.grad_phi[k]);
        }
    }
    Ok(out)
}

/// Image, Eikonal and curvature terms of one field, accumulated into `rec`.
fn field_terms(
    mesh: &TetMesh,
    op: &GradientOperator,
    phi: &ScalarField,
    views: &[&View],
    cfg: &FitConfig,
    rec: &mut IterationRecord,
) -> Result<EnergyResult> {
    let ecfg = &cfg.energy;
    let h = mesh.average_edge_length();
    let img = image_terms(mesh, phi, views, ecfg, ecfg.eps_s(h))?;
    let w = &ecfg.weights;
    let mut total = EnergyResult {
        value: w.normal * img.normal + w.shrink * img.shrink + w.expand * img.expand,
        grad_phi: img.grad,
    };
    rec.normal += img.normal;
    rec.shrink += img.shrink;
    rec.expand += img.expand;
    rec.triangles += img.triangles;
    if w.eikonal > 0.0 {
        let e = eikonal_energy_with(op, mesh, phi, ecfg.eikonal_variant)?;
        let scale = mesh.num_tets() as f64 / op.total_volume();
        rec.eikonal += e.value * scale;
        total.add_scaled(&e, w.eikonal * scale);
    }
    if w.curvature > 0.0 {
        let e = mean_curvature_energy_with(op, mesh, phi, ecfg.eps_h(h), ecfg.grad_h_floor)?;
        rec.curvature += e.value;
        total.add_scaled(&e, w.curvature);
    }
    Ok(total)
}

/// The objective minimized by [`fit_sdf`] in shared mode for one field and the given
/// views, with its gradient. Silhouette sets are recomputed from `phi`.
pub fn objective(mesh: &TetMesh, phi: &ScalarField, views: &[View], cfg: &FitConfig) -> Result<EnergyResult> {
    cfg.energy.validate()?;
    phi.check_len(mesh)?;
    let op = GradientOperator::new(mesh)?;
    let refs: Vec<&View> = views.iter().collect();
    field_terms(mesh, &op, phi, &refs, cfg, &mut IterationRecord::default())
}

/// Fits the field to the views' target normal maps; see [`fit_sdf_observed`].
pub fn fit_sdf(mesh: &TetMesh, phi0: &ScalarField, views: &[View], cfg: &FitConfig) -> Result<FitReport> {
    fit_sdf_observed(mesh, phi0, views, cfg, |_, _| Ok(()))
}

/// Gradient-descent fit of the field to the target normal maps.
///
/// Each iteration extracts the surface, renders every view, and combines the normal-map
/// loss (backpropagated through the rasterizer and the extraction Jacobian), the silhouette
/// shrink/expand losses, the Eikonal term and the curvature term. The Eikonal value is
/// divided by the mean tet volume, so the volume weights average to one. The total
/// loss is not guaranteed to decrease monotonically.
///
/// `observe` runs after every iteration with the record and the updated fields.
pub fn fit_sdf_observed(
    mesh: &TetMesh,
    phi0: &ScalarField,
    views: &[View],
    cfg: &FitConfig,
    mut observe: impl FnMut(&IterationRecord, &[ScalarField]) -> Result<()>,
) -> Result<FitReport> {
    cfg.validate()?;
    phi0.check_len(mesh)?;
    let selected: Vec<usize> = match &cfg.views {
        Some(v) => v.clone(),
        None => (0..views.len()).collect(),
    };
    if selected.is_empty() {
        return Err(Error::InvalidArgument("no views to fit".into()));
    }
    if let Some(&bad) = selected.iter().find(|&&v| v >= views.len()) {
        return Err(Error::InvalidArgument(format!("view index {bad} out of range")));
    }
    let start = Instant::now();
    let ecfg = &cfg.energy;
    let h = mesh.average_edge_length();
    let max_update = cfg.max_update.unwrap_or(0.25 * h);
    let op = GradientOperator::new(mesh)?;
    let n = phi0.len();

    let anchor = clamp_small_phi(phi0, ecfg.eps_grad)?;
    let groups: Vec<Vec<&View>> = match cfg.mode {
        FitMode::Shared => vec![selected.iter().map(|&v| &views[v]).collect()],
        FitMode::PerView => selected.iter().map(|&v| vec![&views[v]]).collect(),
    };
    let mut fields = vec![anchor.clone(); groups.len()];
    let mut velocity = vec![vec![0.0; n]; groups.len()];
    let mut report = FitReport::default();

    for it in 0..cfg.iterations {
        let t0 = Instant::now();
        let mut rec = IterationRecord {
            iteration: it,
            step: cfg.step_at(it),
            ..Default::default()
        };
        let mut grads = Vec::with_capacity(fields.len());
        for (g, group) in groups.iter().enumerate() {
            let phi = &fields[g];
            let mut total = field_terms(mesh, &op, phi, group, cfg, &mut rec)?;
            let w = &ecfg.weights;
            if cfg.mode == FitMode::PerView {
                if w.multiview > 0.0 && fields.len() > 1 {
                    let e = multiview_consistency(&fields, g)?;
                    rec.multiview += e.value;
                    total.add_scaled(&e, w.multiview);
                }
                if cfg.anchor_weight > 0.0 {
                    let mut value = 0.0;
                    for k in 0..n {
                        let d = phi[k] - anchor[k];
                        value += 0.5 * d * d;
                        total.grad_phi[k] += cfg.anchor_weight * d;
                    }
                    rec.anchor += value;
                    total.value += cfg.anchor_weight * value;
                }
            }
            rec.total += total.value;
            rec.eikonal_deviation += eikonal_deviation(&op, mesh, phi) / fields.len() as f64;
            grads.push(total.grad_phi);
        }
        rec.millis = t0.elapsed().as_secs_f64() * 1e3;
        let finite = rec.total.is_finite() && grads.iter().flatten().all(|g| g.is_finite());
        if !finite || rec.total > cfg.divergence_limit {
            report.iterations.push(rec.clone());
            report.phi = fields.iter().map(|f| f.values().to_vec()).collect();
            report.seconds = start.elapsed().as_secs_f64();
            return Err(Error::Divergence {
                iteration: it,
                loss: rec.total,
                partial: Box::new(report),
            });
        }

        for (g, grad) in grads.iter_mut().enumerate() {
            if let Some(c) = cfg.grad_clip {
                let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > c {
                    grad.iter_mut().for_each(|x| *x *= c / norm);
                }
            }
            if cfg.smoothing > 0.0 {
                *grad = smooth_gradient(mesh, grad, cfg.smoothing, 1e-6, 200);
            }
            let v = &mut velocity[g];
            let mut next = fields[g].values().to_vec();
            for k in 0..n {
                v[k] = cfg.momentum * v[k] + grad[k];
                next[k] -= (rec.step * v[k]).clamp(-max_update, max_update);
            }
            fields[g] = clamp_small_phi(&ScalarField::new(next)?, ecfg.eps_grad)?;
        }
        observe(&rec, &fields)?;
        report.iterations.push(rec);
    }

    report.view_metrics = match cfg.mode {
        FitMode::Shared => evaluate_views(mesh, &fields[0], views, &selected)?,
        FitMode::PerView => selected
            .iter()
            .zip(&fields)
            .map(|(&v, f)| evaluate_views(mesh, f, views, &[v]).map(|mut m| m.remove(0)))
            .collect::<Result<Vec<_>>>()?,
    };
    report.phi = fields.into_iter().map(ScalarField::into_inner).collect();
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Renders the zero level set of `phi` into the chosen views and scores it.
pub fn evaluate_views(mesh: &TetMesh, phi: &ScalarField, views: &[View], which: &[usize]) -> Result<Vec<ViewMetrics>> {
    let tri = marching_tetrahedra(mesh, phi)?;
    which
        .par_iter()
        .map(|&v| {
            let view = views
                .get(v)
                .ok_or_else(|| Error::InvalidArgument(format!("view index {v} out of range")))?;
            score(&tri, view, v)
        })
        .collect()
}

fn score(tri: &TriMesh, view: &View, index: usize) -> Result<ViewMetrics> {
    let nm = rasterize(tri, &view.camera)?;
    let has_depth = view.target.pixels().iter().flatten().all(|f| f.depth.is_some());
    let e_depth = if has_depth {
        Some(e_depth(&depth_meters(&nm, &view.camera), &depth_meters(&view.target, &view.camera))?)
    } else {
        None
    };
    Ok(ViewMetrics {
        view: index,
        e_normal: e_normal(&nm, &view.target)?,
        e_depth,
    })
}
