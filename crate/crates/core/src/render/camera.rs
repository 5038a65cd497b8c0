use nalgebra::{Matrix3, Matrix4, Quaternion, Rotation3, UnitQuaternion, Vector4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Perspective camera. Camera space is right-handed with `+z` forward (into the image),
/// `+y` up and `+x` to the left; screen space has its origin at the top-left corner with
/// `+x` right and `+y` down.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CameraJson", into = "CameraJson")]
pub struct Camera {
    rotation: Rotation3<f64>,
    translation: Vec3,
    near: f64,
    far: f64,
    fov: f64,
    aspect: f64,
    width: usize,
    height: usize,
}

impl Camera {
    /// `v_c = rotation * v_g + translation`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vec3,
        near: f64,
        far: f64,
        fov: f64,
        aspect: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(orth <= 1e-9) || !(rotation.determinant() > 0.0) {
            return Err(Error::InvalidArgument("camera rotation is not a proper rotation".into()));
        }
        if !(near > 0.0 && far > near && far.is_finite()) {
            return Err(Error::InvalidArgument(format!("need 0 < near < far, got {near}, {far}")));
        }
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("fov {fov} outside (0, pi)")));
        }
        if !(aspect > 0.0 && aspect.is_finite()) || width == 0 || height == 0 {
            return Err(Error::InvalidArgument("bad image size or aspect".into()));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("camera translation".into()));
        }
        Ok(Self {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            translation,
            near,
            far,
            fov,
            aspect,
            width,
            height,
        })
    }

    /// Camera at `eye` looking at `target`, with `up` projecting to screen-up.
    /// The aspect ratio is taken from the pixel dimensions.
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        near: f64,
        far: f64,
        fov: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let z = (target - eye).normalize();
        let x = up.cross(&z);
        if !(x.norm() > 1e-12) {
            return Err(Error::InvalidArgument("up vector parallel to view direction".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        Self::new(r, -(r * eye), near, far, fov, width as f64 / height as f64, width, height)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        self.rotation.matrix()
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn aspect(&self) -> f64 {
        self.aspect
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Camera centre in world space.
    pub fn eye(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    /// Same intrinsics with new extrinsics.
    pub fn with_pose(&self, rotation: Matrix3<f64>, translation: Vec3) -> Result<Self> {
        Self::new(
            rotation,
            translation,
            self.near,
            self.far,
            self.fov,
            self.aspect,
            self.width,
            self.height,
        )
    }

    pub fn to_camera(&self, v_g: &Vec3) -> Vec3 {
        self.rotation * v_g + self.translation
    }

    /// Focal lengths in pixels: the near-plane NDC scale composed with the pixel-unit
    /// screen transform.
    pub fn focal(&self) -> (f64, f64) {
        let t = (0.5 * self.fov).tan();
        (
            self.width as f64 / (2.0 * self.aspect * t),
            self.height as f64 / (2.0 * t),
        )
    }

    /// Principal point (image centre) in pixels.
    pub fn center(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    /// Maps a camera-space point to screen `(x', y', z')` and returns its depth `z_c`.
    pub fn project_to_screen(&self, v_c: &Vec3) -> Result<(Vec3, f64)> {
        let z = v_c.z;
        if !(z > 0.0) {
            return Err(Error::BehindCamera(z));
        }
        Ok((self.project_unchecked(v_c), z))
    }

    pub(crate) fn project_unchecked(&self, v_c: &Vec3) -> Vec3 {
        let (fx, fy) = self.focal();
        let (cx, cy) = self.center();
        let z = v_c.z;
        Vec3::new(
            -fx * v_c.x / z + cx,
            -fy * v_c.y / z + cy,
            self.far * (z - self.near) / ((self.far - self.near) * z),
        )
    }

    /// Perspective matrix into normalized device coordinates, with the near-plane
    /// extent `H = 2 n tan(fov / 2)` and `W = a H`. Multiplying a homogeneous camera-space
    /// point gives `(x_ndc z_c, y_ndc z_c, z_ndc z_c, z_c)`.
    pub fn ndc_matrix(&self) -> Matrix4<f64> {
        let (n, f) = (self.near, self.far);
        let h = 2.0 * n * (0.5 * self.fov).tan();
        let w = h * self.aspect;
        Matrix4::new(
            2.0 * n / w, 0.0, 0.0, 0.0,
            0.0, 2.0 * n / h, 0.0, 0.0,
            0.0, 0.0, f / (f - n), -f * n / (f - n),
            0.0, 0.0, 1.0, 0.0,
        )
    }

    /// NDC to pixel screen coordinates (origin top-left, `+y` down).
    pub fn screen_matrix(&self) -> Matrix4<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        Matrix4::new(
            -w / 2.0, 0.0, 0.0, w / 2.0,
            0.0, -h / 2.0, 0.0, h / 2.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        )
    }

    /// Inverts the depth row: camera depth `z_c` from screen depth `z'`.
    pub fn depth_from_ndc(&self, z_ndc: f64) -> f64 {
        let (n, f) = (self.near, self.far);
        f * n / (f - z_ndc * (f - n))
    }

    /// World-space ray through the screen point `(px, py)`: origin and unit direction.
    pub fn ray_through(&self, px: f64, py: f64) -> (Vec3, Vec3) {
        let (fx, fy) = self.focal();
        let (cx, cy) = self.center();
        let d_c = Vec3::new((cx - px) / fx, (cy - py) / fy, 1.0);
        (self.eye(), (self.rotation.transpose() * d_c).normalize())
    }
}

/// On-disk camera: rotation as a unit quaternion `[w, x, y, z]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct CameraJson {
    rotation: [f64; 4],
    translation: [f64; 3],
    near: f64,
    far: f64,
    fov: f64,
    aspect: f64,
    width: usize,
    height: usize,
}

impl TryFrom<CameraJson> for Camera {
    type Error = Error;

    fn try_from(c: CameraJson) -> Result<Self> {
        let [w, x, y, z] = c.rotation;
        let q = Quaternion::new(w, x, y, z);
        if !((q.norm() - 1.0).abs() <= 1e-6) {
            return Err(Error::InvalidArgument("camera quaternion is not unit length".into()));
        }
        let r = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        Camera::new(
            *r.matrix(),
            Vec3::from(c.translation),
            c.near,
            c.far,
            c.fov,
            c.aspect,
            c.width,
            c.height,
        )
    }
}

impl From<Camera> for CameraJson {
    fn from(c: Camera) -> Self {
        let q = UnitQuaternion::from_rotation_matrix(&c.rotation);
        Self {
            rotation: [q.w, q.i, q.j, q.k],
            translation: c.translation.into(),
            near: c.near,
            far: c.far,
            fov: c.fov,
            aspect: c.aspect,
            width: c.width,
            height: c.height,
        }
    }
}

/// Screen point via the two-stage matrix route: NDC projection, divide by `z_c`, then the
/// screen transform. Used to cross-check [`Camera::project_to_screen`].
pub fn project_via_matrices(cam: &Camera, v_c: &Vec3) -> Vec3 {
    let clip = cam.ndc_matrix() * Vector4::new(v_c.x, v_c.y, v_c.z, 1.0);
    let ndc = Vector4::new(clip.x / clip.w, clip.y / clip.w, clip.z / clip.w, 1.0);
    let s = cam.screen_matrix() * ndc;
    Vec3::new(s.x, s.y, s.z)
}
