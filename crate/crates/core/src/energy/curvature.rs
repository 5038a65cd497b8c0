use std::f64::consts::PI;

use rayon::prelude::*;

use super::eikonal::GradientOperator;
use super::{scatter, EnergyResult};
use crate::mesh::{ScalarField, TetMesh};
use crate::Result;

/// Smeared Heaviside of bandwidth `eps`: 0 below `-eps`, 1 above `eps`, and
/// `1/2 + phi/(2 eps) + sin(pi phi / eps)/(2 pi)` in between.
pub fn smeared_heaviside(phi: f64, eps: f64) -> f64 {
    if phi <= -eps {
        0.0
    } else if phi >= eps {
        1.0
    } else {
        0.5 + phi / (2.0 * eps) + (PI * phi / eps).sin() / (2.0 * PI)
    }
}

pub fn smeared_heaviside_derivative(phi: f64, eps: f64) -> f64 {
    if phi.abs() >= eps {
        0.0
    } else {
        (1.0 + (PI * phi / eps).cos()) / (2.0 * eps)
    }
}

/// Surface-area functional `E2 = sum_t |grad H(phi)|_t Vol(t)`; its gradient flow is motion
/// by mean curvature. Tets with `|grad H| < grad_h_floor` contribute nothing.
pub fn mean_curvature_energy(
    mesh: &TetMesh,
    field: &ScalarField,
    eps_h: f64,
    grad_h_floor: f64,
) -> Result<EnergyResult> {
    let op = GradientOperator::new(mesh)?;
    mean_curvature_energy_with(&op, mesh, field, eps_h, grad_h_floor)
}

pub fn mean_curvature_energy_with(
    op: &GradientOperator,
    mesh: &TetMesh,
    field: &ScalarField,
    eps_h: f64,
    grad_h_floor: f64,
) -> Result<EnergyResult> {
    field.check_len(mesh)?;
    let phi = field.values();
    let local: Vec<(f64, [f64; 4])> = mesh
        .tets()
        .par_iter()
        .enumerate()
        .map(|(t, tet)| {
            let s = tet.map(|k| phi[k as usize]);
            let h = s.map(|p| smeared_heaviside(p, eps_h));
            let g = op.apply(t, &h);
            let len = g.norm();
            if len < grad_h_floor {
                return (0.0, [0.0; 4]);
            }
            let vol = op.volume(t);
            let dh = op.apply_transpose(t, &(g * (vol / len)));
            let mut out = [0.0; 4];
            for i in 0..4 {
                out[i] = dh[i] * smeared_heaviside_derivative(s[i], eps_h);
            }
            (vol * len, out)
        })
        .collect();
    Ok(scatter(phi.len(), mesh.tets(), &local))
}
