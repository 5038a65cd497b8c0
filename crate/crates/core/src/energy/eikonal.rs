use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{scatter, EnergyResult};
use crate::mesh::{ScalarField, TetMesh};
use crate::{Error, Result, Vec3};

/// Coefficients `(a, b, c, d)` of the affine function `s = a x + b y + c z + d` through the
/// four `(u_k, s_k)` pairs.
pub fn tet_linear_coeffs(u: &[Vec3; 4], s: &[f64; 4]) -> Result<[f64; 4]> {
    let m = tet_system(u);
    let lu = m.lu();
    let x = lu
        .solve(&Vector4::from(*s))
        .ok_or_else(|| Error::InvalidArgument("degenerate tetrahedron".into()))?;
    Ok([x[0], x[1], x[2], x[3]])
}

fn tet_system(u: &[Vec3; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| if c < 3 { u[r][c] } else { 1.0 })
}

/// Per-tet linear maps from the four vertex values to the constant gradient of their
/// affine interpolant, plus tet volumes.
#[derive(Clone, Debug)]
pub struct GradientOperator {
    rows: Vec<[[f64; 4]; 3]>,
    volumes: Vec<f64>,
}

impl GradientOperator {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        let rows = (0..mesh.num_tets())
            .into_par_iter()
            .map(|t| {
                let inv = tet_system(&mesh.tet_positions(t))
                    .try_inverse()
                    .ok_or(Error::DegenerateTet(t))?;
                Ok([0, 1, 2].map(|r| [inv[(r, 0)], inv[(r, 1)], inv[(r, 2)], inv[(r, 3)]]))
            })
            .collect::<Result<Vec<_>>>()?;
        let volumes = (0..mesh.num_tets()).map(|t| mesh.tet_volume(t)).collect();
        Ok(Self { rows, volumes })
    }

    pub fn volume(&self, t: usize) -> f64 {
        self.volumes[t]
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Gradient of the affine interpolant of `s` on tet `t`.
    pub fn apply(&self, t: usize, s: &[f64; 4]) -> Vec3 {
        let g = &self.rows[t];
        Vec3::from_fn(|r, _| g[r].iter().zip(s).map(|(a, b)| a * b).sum())
    }

    /// Transpose applied to a gradient-space vector: `∂(gᵀ G s)/∂s`.
    pub fn apply_transpose(&self, t: usize, g: &Vec3) -> [f64; 4] {
        let m = &self.rows[t];
        [0, 1, 2, 3].map(|k| m[0][k] * g.x + m[1][k] * g.y + m[2][k] * g.z)
    }
}

/// Which Eikonal penalty to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EikonalVariant {
    /// `1/2 sum (|grad phi| - 1)^2`.
    E1a,
    /// `1/2 sum (|grad phi|^2 - 1)^2`.
    E1b,
    /// `1/2 sum Vol(t) (|grad phi|^2 - 1)^2`.
    #[default]
    E1c,
}

/// Eikonal energy over all tets.
pub fn eikonal_energy(mesh: &TetMesh, field: &ScalarField, variant: EikonalVariant) -> Result<EnergyResult> {
    let op = GradientOperator::new(mesh)?;
    eikonal_energy_with(&op, mesh, field, variant)
}

/// As [`eikonal_energy`] with a precomputed operator.
pub fn eikonal_energy_with(
    op: &GradientOperator,
    mesh: &TetMesh,
    field: &ScalarField,
    variant: EikonalVariant,
) -> Result<EnergyResult> {
    field.check_len(mesh)?;
    let phi = field.values();
    let local: Vec<(f64, [f64; 4])> = mesh
        .tets()
        .par_iter()
        .enumerate()
        .map(|(t, tet)| {
            let s = tet.map(|k| phi[k as usize]);
            let g = op.apply(t, &s);
            let q = g.norm_squared();
            match variant {
                EikonalVariant::E1a => {
                    let len = q.sqrt();
                    let value = 0.5 * (len - 1.0) * (len - 1.0);
                    if len < 1e-12 {
                        // Direction undefined at a vanishing gradient.
                        return (value, [0.0; 4]);
                    }
                    (value, op.apply_transpose(t, &(g * ((len - 1.0) / len))))
                }
                EikonalVariant::E1b | EikonalVariant::E1c => {
                    let w = if variant == EikonalVariant::E1c { op.volume(t) } else { 1.0 };
                    let r = q - 1.0;
                    (0.5 * w * r * r, op.apply_transpose(t, &(g * (2.0 * w * r))))
                }
            }
        })
        .collect();
    Ok(scatter(phi.len(), mesh.tets(), &local))
}
