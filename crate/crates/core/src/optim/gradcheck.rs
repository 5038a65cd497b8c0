use crate::energy::EnergyResult;
use crate::mesh::ScalarField;
use crate::{Error, Result};

/// Worst relative error between central differences and the analytic gradient over the
/// sampled indices: `|fd - g| / max(|fd|, |g|, 1e-12)`.
pub fn fd_gradient_check(
    loss: impl Fn(&ScalarField) -> Result<EnergyResult>,
    field: &ScalarField,
    indices: &[usize],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let base = loss(field)?;
    let mut worst: f64 = 0.0;
    for &k in indices {
        let eval = |d: f64| -> Result<f64> {
            let mut v = field.values().to_vec();
            v[k] += d;
            let value = loss(&ScalarField::new(v)?)?.value;
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("loss at index {k}")));
            }
            Ok(value)
        };
        let fd = (eval(h)? - eval(-h)?) / (2.0 * h);
        let g = base.grad_phi[k];
        worst = worst.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-12));
    }
    Ok(worst)
}
