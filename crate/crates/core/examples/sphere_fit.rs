//! Fits a field to eight synthetic normal maps of a unit sphere, starting from a sphere of
//! radius 1.2, and prints the loss trace.

use tetsdf::isosurface::{clamp_small_phi, EPS_GRAD};
use tetsdf::mesh::{build_band_tetmesh, sample_exact_sdf, TemplateShape};
use tetsdf::optim::{fit_sdf_observed, FitConfig, View};
use tetsdf::render::{rasterize, shapes::icosphere, Camera};
use tetsdf::Vec3;

fn main() -> tetsdf::Result<()> {
    let truth = icosphere(5, 1.0, Vec3::zeros());
    let mut views = Vec::new();
    for sx in [-1.0, 1.0] {
        for sy in [-0.7, 0.7] {
            for sz in [-1.0, 1.0] {
                let eye = Vec3::new(sx, sy, sz).normalize() * 4.0;
                let camera = Camera::look_at(eye, Vec3::zeros(), Vec3::y(), 0.1, 20.0, 0.6, 96, 96)?;
                let target = rasterize(&truth, &camera)?;
                views.push(View { camera, target });
            }
        }
    }
    let mesh = build_band_tetmesh(&TemplateShape::sphere(Vec3::zeros(), 1.0), 0.14, 0.35)?;
    let phi0 = clamp_small_phi(&sample_exact_sdf(&TemplateShape::sphere(Vec3::zeros(), 1.2), &mesh), EPS_GRAD)?;
    println!("{} tets, average edge {:.3}", mesh.num_tets(), mesh.average_edge_length());

    let cfg = FitConfig {
        iterations: 300,
        ..Default::default()
    };
    let report = fit_sdf_observed(&mesh, &phi0, &views, &cfg, |r, _| {
        if r.iteration % 25 == 0 {
            println!(
                "{:4}  total {:.4}  normal {:.5}  shrink {:.4}  expand {:.4}  triangles {}",
                r.iteration, r.total, r.normal, r.shrink, r.expand, r.triangles
            );
        }
        Ok(())
    })?;
    let mean = report.view_metrics.iter().map(|m| m.e_normal).sum::<f64>() / views.len() as f64;
    println!("mean e_normal {mean:.5} after {:.1} s", report.seconds);
    Ok(())
}
