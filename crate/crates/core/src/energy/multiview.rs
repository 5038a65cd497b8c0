use super::EnergyResult;
use crate::mesh::ScalarField;
use crate::{Error, Result};

/// Smoothing of the norm at zero.
const DELTA: f64 = 1e-12;

/// Consistency of view `reference`'s field with every other view:
/// `sum_{c != ref} (sqrt(|phi_ref - phi_c|^2 + delta) - sqrt(delta))`.
///
/// The smoothed norm is differentiable everywhere and vanishes when the fields agree.
/// The gradient is with respect to the reference field only.
pub fn multiview_consistency(fields: &[ScalarField], reference: usize) -> Result<EnergyResult> {
    let base = fields
        .get(reference)
        .ok_or_else(|| Error::InvalidArgument(format!("reference view {reference} out of range")))?;
    let n = base.len();
    let mut out = EnergyResult::zero(n);
    for (c, other) in fields.iter().enumerate() {
        if other.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: other.len(),
            });
        }
        if c == reference {
            continue;
        }
        let sq: f64 = base
            .values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let norm = (sq + DELTA).sqrt();
        out.value += norm - DELTA.sqrt();
        for (g, (a, b)) in out.grad_phi.iter_mut().zip(base.values().iter().zip(other.values())) {
            *g += (a - b) / norm;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::testing::check_fd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(v: Vec<f64>) -> ScalarField {
        ScalarField::new(v).unwrap()
    }

    #[test]
    fn examples() {
        let a = field(vec![0.1, -0.3, 0.7]);
        let e = multiview_consistency(&[a.clone(), a.clone(), a.clone()], 1).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.grad_phi.iter().all(|g| *g == 0.0));
        let v = 16;
        let e = multiview_consistency(&[field(vec![0.0; v]), field(vec![1.0; v])], 0).unwrap();
        // The smoothing shifts each term by at most sqrt(delta).
        assert!((e.value - 4.0).abs() <= DELTA.sqrt());
        assert!(multiview_consistency(&[a, field(vec![0.0])], 0).is_err());
    }

    #[test]
    fn matches_direct_norms_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fields: Vec<ScalarField> = (0..3)
            .map(|_| field((0..40).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let e = multiview_consistency(&fields, 2).unwrap();
        let direct: f64 = (0..2)
            .map(|c| {
                fields[2]
                    .values()
                    .iter()
                    .zip(fields[c].values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum();
        assert!((e.value - direct).abs() <= 2.0 * DELTA.sqrt());
        check_fd(
            &fields[2],
            |f| {
                let mut all = fields.clone();
                all[2] = f.clone();
                multiview_consistency(&all, 2).unwrap()
            },
            40,
            1e-6,
            1e-5,
        );
    }
}
