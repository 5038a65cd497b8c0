use serde::{Deserialize, Serialize};

use crate::Vec3;

/// A capsule: all points within `radius` of the segment `a`–`b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            radius,
        }
    }

    pub fn sdf(&self, p: &Vec3) -> f64 {
        distance_to_segment(p, &Vec3::from(self.a), &Vec3::from(self.b)) - self.radius
    }

    fn bounds(&self) -> (Vec3, Vec3) {
        let (a, b) = (Vec3::from(self.a), Vec3::from(self.b));
        let r = Vec3::repeat(self.radius);
        (a.inf(&b) - r, a.sup(&b) + r)
    }
}

/// Analytic template shape standing in for a body model. Only its signed distance is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemplateShape {
    Sphere { center: [f64; 3], radius: f64 },
    Capsule(Capsule),
    CapsuleUnion { capsules: Vec<Capsule> },
}

impl TemplateShape {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self::Sphere {
            center: center.into(),
            radius,
        }
    }

    pub fn capsule(a: Vec3, b: Vec3, radius: f64) -> Self {
        Self::Capsule(Capsule::new(a, b, radius))
    }

    /// Signed distance, negative inside.
    ///
    /// Exact for spheres and single capsules; for unions the minimum is exact outside and a
    /// lower bound on the magnitude inside where capsules overlap.
    pub fn sdf(&self, p: &Vec3) -> f64 {
        match self {
            Self::Sphere { center, radius } => (p - Vec3::from(*center)).norm() - radius,
            Self::Capsule(c) => c.sdf(p),
            Self::CapsuleUnion { capsules } => capsules
                .iter()
                .map(|c| c.sdf(p))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Axis-aligned bounds of the zero level set.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match self {
            Self::Sphere { center, radius } => {
                let c = Vec3::from(*center);
                (c.add_scalar(-radius), c.add_scalar(*radius))
            }
            Self::Capsule(c) => c.bounds(),
            Self::CapsuleUnion { capsules } => capsules.iter().map(Capsule::bounds).fold(
                (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
                |(lo, hi), (a, b)| (lo.inf(&a), hi.sup(&b)),
            ),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |msg: &str| Err(crate::Error::InvalidArgument(msg.to_string()));
        match self {
            Self::Sphere { radius, .. } if !(*radius > 0.0) => bad("sphere radius must be positive"),
            Self::Capsule(c) if !(c.radius > 0.0) => bad("capsule radius must be positive"),
            Self::CapsuleUnion { capsules } if capsules.is_empty() => bad("capsule union is empty"),
            Self::CapsuleUnion { capsules } if capsules.iter().any(|c| !(c.radius > 0.0)) => {
                bad("capsule radius must be positive")
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn distance_to_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}
