use std::ops::Index;

use crate::mesh::{TemplateShape, TetMesh};
use crate::{Error, Result};

/// One finite value per tet-mesh vertex; signed distance, negative inside.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at vertex {k}")));
        }
        Ok(Self(values))
    }

    /// Checks that the field belongs to `mesh`.
    pub fn check_len(&self, mesh: &TetMesh) -> Result<()> {
        if self.0.len() != mesh.num_vertices() {
            return Err(Error::LengthMismatch {
                expected: mesh.num_vertices(),
                got: self.0.len(),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with `f` applied to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Evaluates the template's analytic distance at every mesh vertex.
pub fn sample_exact_sdf(shape: &TemplateShape, mesh: &TetMesh) -> ScalarField {
    ScalarField(mesh.vertices().iter().map(|p| shape.sdf(p)).collect())
}
