//! Training losses and regularizers with analytic gradients with respect to `phi`.

mod curvature;
mod eikonal;
mod log;
mod multiview;
mod normal_loss;
mod silhouette;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use curvature::{mean_curvature_energy, mean_curvature_energy_with, smeared_heaviside, smeared_heaviside_derivative};
pub use eikonal::{eikonal_energy, eikonal_energy_with, tet_linear_coeffs, EikonalVariant, GradientOperator};
pub use log::EnergyLog;
pub use multiview::multiview_consistency;
pub use normal_loss::{normal_map_loss, NormalLoss};
pub use silhouette::{expand_loss, shrink_loss, silhouette_sets, SilhouetteSets};

/// Scalar energy and its gradient with respect to every field value.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyResult {
    pub value: f64,
    pub grad_phi: Vec<f64>,
}

impl EnergyResult {
    pub fn zero(n: usize) -> Self {
        Self {
            value: 0.0,
            grad_phi: vec![0.0; n],
        }
    }

    /// Adds `weight * other` in place.
    pub fn add_scaled(&mut self, other: &EnergyResult, weight: f64) {
        self.value += weight * other.value;
        for (a, b) in self.grad_phi.iter_mut().zip(&other.grad_phi) {
            *a += weight * b;
        }
    }
}

/// Per-term multipliers of the training objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyWeights {
    pub normal: f64,
    pub eikonal: f64,
    pub curvature: f64,
    pub shrink: f64,
    pub expand: f64,
    pub multiview: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        Self {
            normal: 10.0,
            eikonal: 1e-3,
            curvature: 0.0,
            shrink: 1.0,
            expand: 1.0,
            multiview: 0.0,
        }
    }
}

/// Numerical constants and loss weights. Bandwidths left unset scale with the mesh:
/// `eps_h = 1.5 h`, `eps_s = 0.5 h` for average edge length `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub eps_clamp: f64,
    pub eps_grad: f64,
    pub eps_h: Option<f64>,
    pub eps_s: Option<f64>,
    pub grad_h_floor: f64,
    pub eikonal_variant: EikonalVariant,
    pub weights: EnergyWeights,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            eps_clamp: crate::isosurface::EPS_CLAMP,
            eps_grad: crate::isosurface::EPS_GRAD,
            eps_h: None,
            eps_s: None,
            grad_h_floor: 1e-8,
            eikonal_variant: EikonalVariant::E1c,
            weights: EnergyWeights::default(),
        }
    }
}

impl EnergyConfig {
    pub fn eps_h(&self, avg_edge: f64) -> f64 {
        self.eps_h.unwrap_or(1.5 * avg_edge)
    }

    pub fn eps_s(&self, avg_edge: f64) -> f64 {
        self.eps_s.unwrap_or(0.5 * avg_edge)
    }

    pub fn validate(&self) -> Result<()> {
        let eps = [
            self.eps_clamp,
            self.eps_grad,
            self.eps_h.unwrap_or(1.0),
            self.eps_s.unwrap_or(1.0),
            self.grad_h_floor,
        ];
        if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("all epsilons must be positive and finite".into()));
        }
        let w = &self.weights;
        let ws = [w.normal, w.eikonal, w.curvature, w.shrink, w.expand, w.multiview];
        if ws.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("loss weights must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Gathers per-tet local gradients into a per-vertex vector in tet order.
pub(crate) fn scatter(n: usize, tets: &[[u32; 4]], local: &[(f64, [f64; 4])]) -> EnergyResult {
    let mut out = EnergyResult::zero(n);
    for (t, (v, g)) in tets.iter().zip(local) {
        out.value += v;
        for (k, gk) in t.iter().zip(g) {
            out.grad_phi[*k as usize] += gk;
        }
    }
    out
}
