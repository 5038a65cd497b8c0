use nalgebra::{Matrix3, Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// `x -> rotation * x + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RigidJson", into = "RigidJson")]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

#[derive(Serialize, Deserialize)]
struct RigidJson {
    /// Unit quaternion `[w, x, y, z]`.
    rotation: [f64; 4],
    translation: [f64; 3],
}

impl TryFrom<RigidJson> for RigidTransform {
    type Error = Error;

    fn try_from(j: RigidJson) -> Result<Self> {
        let [w, x, y, z] = j.rotation;
        let q = Quaternion::new(w, x, y, z);
        if !((q.norm() - 1.0).abs() <= 1e-6) {
            return Err(Error::InvalidArgument("rotation quaternion is not unit length".into()));
        }
        let r = UnitQuaternion::from_quaternion(q);
        Ok(Self::new(*r.to_rotation_matrix().matrix(), Vec3::from(j.translation)))
    }
}

impl From<RigidTransform> for RigidJson {
    fn from(t: RigidTransform) -> Self {
        let q = UnitQuaternion::from_matrix(&t.rotation);
        Self {
            rotation: [q.w, q.i, q.j, q.k],
            translation: t.translation.into(),
        }
    }
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vec3::zeros())
    }

    pub fn translation(t: Vec3) -> Self {
        Self::new(Matrix3::identity(), t)
    }

    /// Rotation by `angle` about `axis` through `center`.
    pub fn rotation_about(axis: Vec3, angle: f64, center: Vec3) -> Self {
        let r = *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix();
        Self::new(r, center - r * center)
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::new(self.rotation * other.rotation, self.apply(&other.translation))
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vec3::zeros()
    }

    pub fn validate(&self) -> Result<()> {
        let orth = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if !(orth <= 1e-9) || !(self.rotation.determinant() > 0.0) {
            return Err(Error::InvalidArgument("rotation block is not orthonormal".into()));
        }
        if !self.translation.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("rigid translation".into()));
        }
        Ok(())
    }
}

/// A joint's rest frame (world from joint) and the bone segment it drives, from the joint
/// origin to `bone_end`, both in world rest coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    #[serde(default)]
    pub parent: Option<usize>,
    pub rest: RigidTransform,
    pub bone_end: [f64; 3],
}

impl Joint {
    pub fn segment(&self) -> (Vec3, Vec3) {
        (self.rest.translation, Vec3::from(self.bone_end))
    }
}

/// Tree of joints; every parent index precedes its child.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkeletonJson")]
pub struct Skeleton {
    joints: Vec<Joint>,
}

#[derive(Deserialize)]
struct SkeletonJson {
    joints: Vec<Joint>,
}

impl TryFrom<SkeletonJson> for Skeleton {
    type Error = Error;

    fn try_from(s: SkeletonJson) -> Result<Self> {
        Skeleton::new(s.joints)
    }
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidArgument("skeleton has no joints".into()));
        }
        for (j, joint) in joints.iter().enumerate() {
            if let Some(p) = joint.parent {
                if p >= j {
                    return Err(Error::InvalidArgument(format!(
                        "joint {j} has parent {p}; parents must precede children"
                    )));
                }
            }
            joint.rest.validate()?;
        }
        Ok(Self { joints })
    }

    /// Single joint at `origin` with the bone running to `end`.
    pub fn single(origin: Vec3, end: Vec3) -> Self {
        Self::new(vec![Joint {
            name: "root".into(),
            parent: None,
            rest: RigidTransform::translation(origin),
            bone_end: end.into(),
        }])
        .expect("valid single-joint skeleton")
    }

    /// Chain of joints at `points[0..n-1]`, joint `j` driving the segment to `points[j+1]`.
    pub fn chain(points: &[Vec3]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("chain needs at least two points".into()));
        }
        Self::new(
            points
                .windows(2)
                .enumerate()
                .map(|(j, w)| Joint {
                    name: format!("joint{j}"),
                    parent: j.checked_sub(1),
                    rest: RigidTransform::translation(w[0]),
                    bone_end: w[1].into(),
                })
                .collect(),
        )
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    /// `(parent, child)` joint index pairs.
    pub fn bones(&self) -> Vec<(usize, usize)> {
        self.joints
            .iter()
            .enumerate()
            .filter_map(|(j, joint)| joint.parent.map(|p| (p, j)))
            .collect()
    }
}

/// Per-joint world-from-joint transforms `T_j(theta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub transforms: Vec<RigidTransform>,
}

impl Pose {
    /// The rest pose: each joint at its rest frame.
    pub fn rest(skel: &Skeleton) -> Self {
        Self {
            transforms: skel.joints.iter().map(|j| j.rest).collect(),
        }
    }

    /// Applies `g` on the world side of every rest frame.
    pub fn global(skel: &Skeleton, g: &RigidTransform) -> Self {
        Self {
            transforms: skel.joints.iter().map(|j| g.compose(&j.rest)).collect(),
        }
    }

    /// Rest-to-posed maps `M_j = T_j * rest_j^-1`; exactly the identity where `T_j` equals
    /// the rest frame.
    pub fn relative(&self, skel: &Skeleton) -> Result<Vec<RigidTransform>> {
        if self.transforms.len() != skel.num_joints() {
            return Err(Error::LengthMismatch {
                expected: skel.num_joints(),
                got: self.transforms.len(),
            });
        }
        self.transforms
            .iter()
            .zip(skel.joints())
            .map(|(t, j)| {
                t.validate()?;
                Ok(if *t == j.rest {
                    RigidTransform::identity()
                } else {
                    t.compose(&j.rest.inverse())
                })
            })
            .collect()
    }
}
