//! Rigid transforms, planes, perspective projection through a point and the
//! half-cone predicates used to reason about observer trajectories.

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, Unit, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Placement of the camera body frame in the world frame.
///
/// Stored as a unit quaternion plus translation; the translation is the
/// optical centre and the third rotation column is the principal axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    iso: Isometry3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            iso: Isometry3::identity(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            iso: Isometry3::from_parts(Translation3::from(translation), rotation),
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    /// Builds a pose from a rotation matrix. The matrix is re-orthonormalised
    /// through the quaternion conversion.
    pub fn from_matrix(rotation: &Matrix3<f64>, translation: Vec3) -> Self {
        let rot = Rotation3::from_matrix(rotation);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), translation)
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.iso.rotation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.iso.rotation.to_rotation_matrix().into_inner()
    }

    /// Optical centre in the world frame.
    pub fn translation(&self) -> Vec3 {
        self.iso.translation.vector
    }

    /// Principal axis (body +z) expressed in the world frame.
    pub fn principal_axis(&self) -> Vec3 {
        self.iso.rotation * Vec3::z()
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.iso.rotation * p + self.iso.translation.vector
    }

    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.iso.rotation.inverse() * (p - self.iso.translation.vector)
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.iso.rotation * v
    }

    pub fn inverse_transform_vector(&self, v: &Vec3) -> Vec3 {
        self.iso.rotation.inverse() * v
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            iso: self.iso * other.iso,
        }
    }

    pub fn inverse(&self) -> Pose {
        Pose {
            iso: self.iso.inverse(),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Unit<Vec3>,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self {
            point,
            normal: Unit::new_normalize(normal),
        }
    }

    /// The plane `z = z0` with normal `+z`.
    pub fn z_const(z0: f64) -> Self {
        Self::new(Vec3::new(0.0, 0.0, z0), Vec3::z())
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }
}

/// Intersection of the line through `q` and `p` with `plane`.
pub fn project_through_point(q: &Vec3, plane: &Plane, p: &Vec3) -> Result<Vec3> {
    let dir = p - q;
    let denom = dir.dot(&plane.normal);
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateProjection);
    }
    let s = (plane.point - q).dot(&plane.normal) / denom;
    Ok(q + dir * s)
}

/// A half-cone with an apex outside an open ball base.
///
/// The positive cone holds the points `apex + α (apex − x')` for `α > 0` and
/// `x'` in the base ball: it opens away from the ball. The negative cone holds
/// `apex + α (x' − apex)` for `0 < α < 1`, minus the closed ball: the region
/// between the apex and the base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCone {
    base_center: Vec3,
    base_radius: f64,
    apex: Vec3,
}

impl HalfCone {
    pub fn new(base_center: Vec3, base_radius: f64, apex: Vec3) -> Result<Self> {
        if !(base_radius > 0.0) || !((apex - base_center).norm() > base_radius) {
            return Err(Error::InvalidCone);
        }
        Ok(Self {
            base_center,
            base_radius,
            apex,
        })
    }

    pub fn base_center(&self) -> Vec3 {
        self.base_center
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn apex(&self) -> Vec3 {
        self.apex
    }

    /// Same base, different apex.
    pub fn with_apex(&self, apex: Vec3) -> Result<Self> {
        Self::new(self.base_center, self.base_radius, apex)
    }

    /// Membership in the open positive half-cone. The apex itself is excluded.
    pub fn positive_contains(&self, p: &Vec3) -> bool {
        let v = p - self.apex;
        let x = self.base_center - self.apex;
        let vv = v.norm_squared();
        if vv == 0.0 {
            return false;
        }
        // the ray from p through the apex continues along -v and must enter the ball
        let along = -v.dot(&x);
        along > 0.0 && along * along > vv * (x.norm_squared() - self.base_radius * self.base_radius)
    }

    /// Membership in the open negative half-cone.
    pub fn negative_contains(&self, p: &Vec3) -> bool {
        let v = p - self.apex;
        let x = self.base_center - self.apex;
        let len = v.norm();
        if len == 0.0 || (p - self.base_center).norm() <= self.base_radius {
            return false;
        }
        let vx = v.dot(&x);
        let r2 = self.base_radius * self.base_radius;
        let disc = vx * vx - len * len * (x.norm_squared() - r2);
        if vx <= 0.0 || disc <= 0.0 {
            return false;
        }
        // first entry of the ray apex + t·v/|v| into the ball
        let ux = vx / len;
        let t_enter = ux - (ux * ux - x.norm_squared() + r2).max(0.0).sqrt();
        len < t_enter
    }

    /// Membership in the positive cone with its apex added back.
    pub fn positive_contains_closed_apex(&self, p: &Vec3) -> bool {
        *p == self.apex || self.positive_contains(p)
    }
}

/// The constant `c = sqrt(1 − r²/‖x‖²)` for which, with the apex at the
/// origin, `p ∈ C⁺(B_r(x), 0)` iff `−p·x > c‖p‖‖x‖`.
pub fn cone_axis_bound(base_center: &Vec3, base_radius: f64) -> Result<f64> {
    let n = base_center.norm();
    if !(base_radius > 0.0) || n <= base_radius {
        return Err(Error::InvalidCone);
    }
    Ok((1.0 - (base_radius * base_radius) / (n * n)).sqrt())
}

/// Radius of a ball about the apex that encloses a right cone with base
/// radius `b` and height `h`.
pub fn right_cone_enclosing_radius(b: f64, h: f64) -> f64 {
    2.0 * (b * b + h * h).sqrt()
}
