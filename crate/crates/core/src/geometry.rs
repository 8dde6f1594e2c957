//! Rigid motions, Plücker lines and the pinhole measurement model.
//!
//! Conventions used across the crate:
//!
//! - right-handed frames, bending happens in the x-y plane;
//! - `rot_z(a)` is the active rotation `[[c, -s, 0], [s, c, 0], [0, 0, 1]]`, so
//!   `rot_z(a) * ŷ = (-sin a, cos a, 0)`;
//! - a [`RigidTransform`] `T_ab` maps coordinates in frame `b` to frame `a`.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Orthonormality / determinant tolerance for rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Unit-norm tolerance for bearing vectors handed to [`plucker`].
pub const BEARING_TOL: f64 = 1e-6;

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation about the y axis (the base tangent of a segment).
pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn is_rotation(m: &Mat3) -> bool {
    let gram = m.transpose() * m;
    (gram - Mat3::identity()).abs().max() <= ROTATION_TOL
        && (m.determinant() - 1.0).abs() <= ROTATION_TOL
}

/// A proper rigid motion. The rotation is validated on construction, so every
/// value of this type satisfies the rotation invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Mat3,
    translation: Vec3,
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !rotation.iter().all(|v| v.is_finite())
            || !translation.iter().all(|v| v.is_finite())
            || !is_rotation(&rotation)
        {
            return Err(Error::NotARotation);
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    /// Builds a transform from a rotation known to be proper (e.g. `rot_z`).
    pub(crate) fn from_parts(rotation: Mat3, translation: Vec3) -> Self {
        debug_assert!(is_rotation(&rotation));
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::from_parts(Mat3::identity(), Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::from_parts(Mat3::identity(), translation)
    }

    pub fn from_rotation_z(angle: f64) -> Self {
        Self::from_parts(rot_z(angle), Vec3::zeros())
    }

    /// Planar motion: rotation about z followed by a translation.
    pub fn planar(angle: f64, translation: Vec3) -> Self {
        Self::from_parts(rot_z(angle), translation)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// `self ∘ other`, i.e. the homogeneous product `self * other`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// Largest absolute component difference of rotation and translation.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        (self.rotation - other.rotation)
            .abs()
            .max()
            .max((self.translation - other.translation).abs().max())
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        self.compose(&rhs)
    }
}

impl Mul<&RigidTransform> for &RigidTransform {
    type Output = RigidTransform;

    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        self.compose(rhs)
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

/// A measurement ray in Plücker coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerLine {
    pub direction: Vec3,
    pub moment: Vec3,
}

impl PluckerLine {
    /// Reciprocal product; zero iff the two lines are coplanar.
    pub fn reciprocal(&self, other: &PluckerLine) -> f64 {
        self.direction.dot(&other.moment) + self.moment.dot(&other.direction)
    }

    pub fn transformed(&self, t: &RigidTransform) -> PluckerLine {
        let direction = t.rotation() * self.direction;
        let moment = t.rotation() * self.moment + t.translation().cross(&direction);
        PluckerLine { direction, moment }
    }
}

/// Ray through `cam_position` along the unit bearing `f`.
pub fn plucker(f: &Vec3, cam_position: &Vec3) -> Result<PluckerLine> {
    let norm = f.norm();
    if !((norm - 1.0).abs() <= BEARING_TOL) {
        return Err(Error::NonUnitBearing(norm));
    }
    Ok(PluckerLine {
        direction: *f,
        moment: cam_position.cross(f),
    })
}

/// Ideal pinhole camera rigidly mounted on a segment tip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    pub focal: f64,
    pub principal: Vector2<f64>,
    /// Pose of the optical frame expressed in the tip frame D.
    pub mounting: RigidTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl PinholeCamera {
    /// Camera looking along the tip tangent (+y of D), image x along +x of D.
    pub fn tip_aligned(focal: f64) -> Result<Self> {
        Self::new(focal, Vector2::zeros(), default_mounting())
    }

    pub fn new(focal: f64, principal: Vector2<f64>, mounting: RigidTransform) -> Result<Self> {
        if !(focal > 0.0) || !focal.is_finite() {
            return Err(Error::InvalidParams(format!("focal must be > 0, got {focal}")));
        }
        Ok(Self {
            focal,
            principal,
            mounting,
        })
    }
}

/// Optical axis along +y of the tip frame, image rows along -z.
pub fn default_mounting() -> RigidTransform {
    // columns: optical x, y, z expressed in D
    let r = Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
    RigidTransform::from_parts(r, Vec3::zeros())
}

pub fn project(cam: &PinholeCamera, point_in_tip_frame: &Vec3) -> Result<Pixel> {
    let p = cam.mounting.inverse().transform_point(point_in_tip_frame);
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera);
    }
    Ok(Pixel {
        u: cam.focal * p.x / p.z + cam.principal.x,
        v: cam.focal * p.y / p.z + cam.principal.y,
    })
}

/// Unit bearing, in the tip frame, of the ray through `pixel`.
pub fn back_project(cam: &PinholeCamera, pixel: &Pixel) -> Vec3 {
    let ray = Vec3::new(
        (pixel.u - cam.principal.x) / cam.focal,
        (pixel.v - cam.principal.y) / cam.focal,
        1.0,
    )
    .normalize();
    cam.mounting.transform_vector(&ray)
}
