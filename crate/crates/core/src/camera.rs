//! Projection and ray generation for mono and stereo eyes.
//!
//! Camera space is right-handed and y-up, looking down `-z`. The inverse view
//! basis of an eye is `u` (right), `v` (up), `w` (backward), so the viewing
//! direction is `-w`.
//!
//! The canonical perspective matrix from [`make_perspective`] works in the
//! projective space where `x` points right, `y` points down and `z` forward,
//! which is what makes raster row 0 map to NDC `y = -1`. An eye's projection
//! is therefore `make_perspective(p) * CAMERA_TO_CANONICAL`.

use core::fmt;

use crate::math::{tan, Mat4, Vec2, Vec3, PI};

/// Near plane used for ray generation. Only directions matter, so any
/// positive value works.
pub const RAY_NEAR: f64 = 0.1;
/// Far plane used for ray generation.
pub const RAY_FAR: f64 = 1000.0;

/// Maps right-handed y-up camera space (looking down `-z`) onto the
/// canonical projective space (x right, y down, z forward).
pub const CAMERA_TO_CANONICAL: Mat4 = Mat4::from_rows([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraError {
    InvalidNear(f64),
    InvalidFar { near: f64, far: f64 },
    InvalidFov(f64),
    InvalidAspect(f64),
    PixelOutOfRange { x: f64, y: f64, width: u32, height: u32 },
    EmptyImage,
    SingularMatrix,
    DegeneratePose,
    InvalidIpd(f64),
}

impl fmt::Display for CameraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CameraError::InvalidNear(n) => write!(f, "near plane must be positive, got {n}"),
            CameraError::InvalidFar { near, far } => {
                write!(f, "far plane {far} must be beyond near plane {near}")
            }
            CameraError::InvalidFov(v) => write!(f, "field of view {v} rad is outside (0, pi)"),
            CameraError::InvalidAspect(a) => write!(f, "aspect ratio must be positive, got {a}"),
            CameraError::PixelOutOfRange { x, y, width, height } => {
                write!(f, "pixel ({x}, {y}) is outside a {width}x{height} image")
            }
            CameraError::EmptyImage => write!(f, "image dimensions must be non-zero"),
            CameraError::SingularMatrix => write!(f, "matrix is singular"),
            CameraError::DegeneratePose => write!(f, "camera pose is degenerate"),
            CameraError::InvalidIpd(v) => write!(f, "interocular distance must be >= 0, got {v}"),
        }
    }
}

impl core::error::Error for CameraError {}

/// Image dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub width: u32,
    pub height: u32,
}

impl Dims {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixel_count(self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn aspect(self) -> f64 {
        self.width as f64 / self.height as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionParams {
    pub near: f64,
    pub far: f64,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    /// Width over height.
    pub aspect: f64,
}

impl ProjectionParams {
    pub fn new(near: f64, far: f64, fov_y: f64, aspect: f64) -> Result<Self, CameraError> {
        let p = Self { near, far, fov_y, aspect };
        p.validate()?;
        Ok(p)
    }

    /// Ray-generation defaults (`RAY_NEAR`, `RAY_FAR`) for a given fov and aspect.
    pub fn for_rays(fov_y: f64, aspect: f64) -> Result<Self, CameraError> {
        Self::new(RAY_NEAR, RAY_FAR, fov_y, aspect)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.near > 0.0) || !self.near.is_finite() {
            return Err(CameraError::InvalidNear(self.near));
        }
        if !(self.far > self.near) || !self.far.is_finite() {
            return Err(CameraError::InvalidFar { near: self.near, far: self.far });
        }
        if !(self.fov_y > 0.0 && self.fov_y < PI) {
            return Err(CameraError::InvalidFov(self.fov_y));
        }
        if !(self.aspect > 0.0) || !self.aspect.is_finite() {
            return Err(CameraError::InvalidAspect(self.aspect));
        }
        Ok(())
    }
}

/// `1 / tan(fov_y / 2)`.
pub fn fov_scale(fov_y: f64) -> Result<f64, CameraError> {
    if !(fov_y > 0.0 && fov_y < PI) {
        return Err(CameraError::InvalidFov(fov_y));
    }
    Ok(1.0 / tan(fov_y / 2.0))
}

/// Canonical perspective matrix scaled by the fov factor.
///
/// In canonical space (`z` forward) a point with `z` in `[n, f]` lands at
/// `z' = f (z - n) / (z (f - n))` in `[0, 1]` after the divide by `w = z`.
pub fn make_perspective(p: &ProjectionParams) -> Result<Mat4, CameraError> {
    make_perspective_off_center(p, Vec2::default())
}

/// Perspective matrix whose image window is shifted by `shift` NDC units,
/// i.e. an asymmetric frustum as used by head-mounted display eyes.
pub fn make_perspective_off_center(p: &ProjectionParams, shift: Vec2) -> Result<Mat4, CameraError> {
    p.validate()?;
    let s = fov_scale(p.fov_y)?;
    let (n, f) = (p.near, p.far);
    Ok(Mat4::from_rows([
        [s / p.aspect, 0.0, shift.x, 0.0],
        [0.0, s, shift.y, 0.0],
        [0.0, 0.0, f / (f - n), -f * n / (f - n)],
        [0.0, 0.0, 1.0, 0.0],
    ]))
}

/// `n = 2 (r + 0.5) / d - 1` per axis.
pub fn raster_to_ndc(r: Vec2, d: Dims) -> Result<Vec2, CameraError> {
    if d.width == 0 || d.height == 0 {
        return Err(CameraError::EmptyImage);
    }
    let in_range = |v: f64, max: u32| v >= 0.0 && v < max as f64;
    if !in_range(r.x, d.width) || !in_range(r.y, d.height) {
        return Err(CameraError::PixelOutOfRange { x: r.x, y: r.y, width: d.width, height: d.height });
    }
    Ok(ndc_from_raster(r.x + 0.5, r.y + 0.5, d))
}

/// NDC of a continuous raster position (pixel centers sit at `i + 0.5`).
#[inline]
pub fn ndc_from_raster(x: f64, y: f64, d: Dims) -> Vec2 {
    Vec2::new(2.0 * x / d.width as f64 - 1.0, 2.0 * y / d.height as f64 - 1.0)
}

/// Continuous raster position of an NDC point.
#[inline]
pub fn raster_from_ndc(n: Vec2, d: Dims) -> Vec2 {
    Vec2::new((n.x + 1.0) * 0.5 * d.width as f64, (n.y + 1.0) * 0.5 * d.height as f64)
}

/// Ray with parametric bounds and a bounce counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub direction: Vec3,
    pub t_min: f64,
    pub t_max: f64,
    pub depth: u32,
}

impl Ray {
    /// Unbounded ray; `direction` is normalized.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self { origin, direction: direction.normalize(), t_min: 0.0, t_max: f64::INFINITY, depth: 0 }
    }

    pub fn with_bounds(mut self, t_min: f64, t_max: f64) -> Self {
        self.t_min = t_min;
        self.t_max = t_max;
        self
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// How first intersections are found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RayGenMode {
    /// Closed-form direction from the inverse view basis. Ignores any
    /// per-eye frustum asymmetry, so stereo pairs can misregister.
    OptimizedExpression,
    /// Unprojection through the inverse view-projection matrix.
    InverseMatrix,
    /// First hits read from the rasterized G-buffer.
    GBufferDerived,
}

impl RayGenMode {
    pub const ALL: [RayGenMode; 3] =
        [RayGenMode::OptimizedExpression, RayGenMode::InverseMatrix, RayGenMode::GBufferDerived];

    pub fn as_str(self) -> &'static str {
        match self {
            RayGenMode::OptimizedExpression => "optimized",
            RayGenMode::InverseMatrix => "inverse",
            RayGenMode::GBufferDerived => "gbuffer",
        }
    }
}

impl core::str::FromStr for RayGenMode {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RayGenMode::ALL.into_iter().find(|m| m.as_str() == s).ok_or(UnknownName)
    }
}

/// Returned when parsing an enum from an unrecognized name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownName;

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unrecognized name")
    }
}

impl core::error::Error for UnknownName {}

/// Camera position and orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    /// Points away from the view direction.
    pub back: Vec3,
}

impl Pose {
    pub fn look_at(position: Vec3, target: Vec3, up: Vec3) -> Result<Self, CameraError> {
        if !position.is_finite() || !target.is_finite() || !up.is_finite() {
            return Err(CameraError::DegeneratePose);
        }
        let fwd = target - position;
        if fwd.length() < 1e-12 {
            return Err(CameraError::DegeneratePose);
        }
        let back = (-fwd).normalize();
        let right = up.cross(back);
        if right.length() < 1e-9 * up.length().max(1e-300) {
            return Err(CameraError::DegeneratePose);
        }
        let right = right.normalize();
        let up = back.cross(right).normalize();
        Ok(Self { position, right, up, back })
    }

    /// Axis-aligned pose at `position` looking down `-z`.
    pub fn identity_at(position: Vec3) -> Self {
        Self { position, right: Vec3::X, up: Vec3::Y, back: Vec3::Z }
    }

    /// Largest absolute component difference to another pose.
    pub fn max_abs_diff(&self, o: &Pose) -> f64 {
        [
            self.position - o.position,
            self.right - o.right,
            self.up - o.up,
            self.back - o.back,
        ]
        .iter()
        .map(|d| d.abs().max_component())
        .fold(0.0, f64::max)
    }
}

/// Per-eye camera state consumed by ray generation and rasterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eye {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub w: Vec3,
    pub params: ProjectionParams,
    /// Frustum window shift in NDC units; zero for a symmetric frustum.
    pub shift: Vec2,
    pub view: Mat4,
    pub proj: Mat4,
    pub view_proj: Mat4,
    pub inv_view_proj: Mat4,
}

impl Eye {
    pub fn new(pose: &Pose, params: ProjectionParams, shift: Vec2) -> Result<Self, CameraError> {
        params.validate()?;
        let (u, v, w, o) = (pose.right, pose.up, pose.back, pose.position);
        let view = Mat4::from_rows([
            [u.x, u.y, u.z, -u.dot(o)],
            [v.x, v.y, v.z, -v.dot(o)],
            [w.x, w.y, w.z, -w.dot(o)],
            [0.0, 0.0, 0.0, 1.0],
        ]);
        let proj = make_perspective_off_center(&params, shift)? * CAMERA_TO_CANONICAL;
        let view_proj = proj * view;
        let inv_view_proj = view_proj.inverse().ok_or(CameraError::SingularMatrix)?;
        Ok(Self { origin: o, u, v, w, params, shift, view, proj, view_proj, inv_view_proj })
    }

    pub fn pose(&self) -> Pose {
        Pose { position: self.origin, right: self.u, up: self.v, back: self.w }
    }

    /// World point to NDC (`z'` in `[0, 1]` between the planes). `None`
    /// behind the eye.
    pub fn project(&self, p: Vec3) -> Option<Vec3> {
        let [x, y, z, w] = self.view_proj.mul_vec4([p.x, p.y, p.z, 1.0]);
        if w <= 0.0 {
            return None;
        }
        Some(Vec3::new(x / w, y / w, z / w))
    }

    /// World point to continuous raster coordinates.
    pub fn world_to_raster(&self, p: Vec3, d: Dims) -> Option<Vec2> {
        self.project(p).map(|n| raster_from_ndc(Vec2::new(n.x, n.y), d))
    }

    /// Direction from the closed-form expression at an NDC point.
    pub fn direction_optimized(&self, n: Vec2, p: &ProjectionParams) -> Vec3 {
        let f = tan(p.fov_y / 2.0);
        (self.u * (p.aspect * f * n.x) - self.v * (f * n.y) - self.w).normalize()
    }

    /// Direction by unprojecting the NDC point on the far plane.
    pub fn direction_inverse(&self, n: Vec2) -> Vec3 {
        let far = self.inv_view_proj.transform_point(Vec3::new(n.x, n.y, 1.0));
        (far - self.origin).normalize()
    }
}

/// Ray through a raster position from the closed-form expression
/// `normalize(a f n_x u - f n_y v - w)` with `f = tan(fov_y / 2)`.
pub fn gen_ray_optimized(pixel: Vec2, dims: Dims, eye: &Eye, p: &ProjectionParams) -> Result<Ray, CameraError> {
    let n = raster_to_ndc(pixel, dims)?;
    Ok(Ray::new(eye.origin, eye.direction_optimized(n, p)))
}

/// Ray through a raster position by inverse view-projection unprojection.
pub fn gen_ray_inverse_matrix(pixel: Vec2, dims: Dims, eye: &Eye) -> Result<Ray, CameraError> {
    if !eye.inv_view_proj.is_finite() {
        return Err(CameraError::SingularMatrix);
    }
    let n = raster_to_ndc(pixel, dims)?;
    Ok(Ray::new(eye.origin, eye.direction_inverse(n)))
}

/// Primary ray reconstructed from a G-buffer position. `None` for
/// uncovered pixels.
pub fn gen_ray_from_gbuffer(gbuffer_position: Option<Vec3>, eye: &Eye) -> Option<Ray> {
    let p = gbuffer_position?;
    let d = p - eye.origin;
    if !(d.length_squared() > 0.0) {
        return None;
    }
    Some(Ray::new(eye.origin, d))
}

/// Per-eye frustum shifts for asymmetric stereo projections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrustumOverride {
    pub left_shift: Vec2,
    pub right_shift: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub left: Eye,
    pub right: Eye,
    pub ipd: f64,
    pub center: Pose,
}

impl StereoRig {
    /// Rig with the eyes exchanged.
    pub fn swapped(&self) -> StereoRig {
        StereoRig { left: self.right, right: self.left, ipd: self.ipd, center: self.center }
    }
}

/// Two eyes displaced by `∓ipd/2` along the pose's right vector, sharing
/// its orientation.
pub fn make_stereo_rig(
    center: &Pose,
    ipd: f64,
    p: &ProjectionParams,
    frustum: Option<FrustumOverride>,
) -> Result<StereoRig, CameraError> {
    if !(ipd >= 0.0) || !ipd.is_finite() {
        return Err(CameraError::InvalidIpd(ipd));
    }
    let basis_ok = [center.right, center.up, center.back]
        .iter()
        .all(|b| b.is_finite() && (b.length() - 1.0).abs() < 1e-6)
        && center.right.dot(center.up).abs() < 1e-6
        && center.right.dot(center.back).abs() < 1e-6
        && center.up.dot(center.back).abs() < 1e-6;
    if !basis_ok || !center.position.is_finite() {
        return Err(CameraError::DegeneratePose);
    }
    let fo = frustum.unwrap_or_default();
    let half = center.right * (ipd * 0.5);
    let left_pose = Pose { position: center.position - half, ..*center };
    let right_pose = Pose { position: center.position + half, ..*center };
    Ok(StereoRig {
        left: Eye::new(&left_pose, *p, fo.left_shift)?,
        right: Eye::new(&right_pose, *p, fo.right_shift)?,
        ipd,
        center: *center,
    })
}
