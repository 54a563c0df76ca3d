//! Point-cloud depth observer: each estimate slides along the central ray of
//! the lenslet it projects to, down the photometric depth gradient.

use rayon::prelude::*;

use crate::camera::{LensletId, PlenopticCamera, Vec2};
use crate::error::{Error, ErrorCode, Result};
use crate::geometry::{Pose, Vec3};
use crate::lightfield::LightField;
use crate::photometric::{depth_gradient, ErrorEvalContext, DEFAULT_GRADIENT_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointStatus {
    /// No step taken yet.
    #[default]
    Unvisited,
    Updated,
    OutsideApertureSet,
    BehindCamera,
    GradientError(ErrorCode),
}

/// Where a point lands on the pupilar plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PupilarHit {
    Lenslet(LensletId),
    BehindCamera,
    OutsideApertureSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimateCloud {
    points: Vec<Vec3>,
    status: Vec<PointStatus>,
    updates: Vec<u32>,
}

impl PointEstimateCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        let n = points.len();
        Self {
            points,
            status: vec![PointStatus::Unvisited; n],
            updates: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn status(&self) -> &[PointStatus] {
        &self.status
    }

    /// Frames in which each point received a gradient update.
    pub fn update_counts(&self) -> &[u32] {
        &self.updates
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub gain: f64,
    #[serde(default = "default_frame_dt")]
    pub frame_dt_s: f64,
    #[serde(default = "default_step")]
    pub gradient_step: f64,
}

fn default_frame_dt() -> f64 {
    1.0
}

fn default_step() -> f64 {
    DEFAULT_GRADIENT_STEP
}

impl Default for ObserverConfig {
    fn default() -> Self {
        Self {
            gain: 1.0,
            frame_dt_s: default_frame_dt(),
            gradient_step: default_step(),
        }
    }
}

impl ObserverConfig {
    pub fn with_gain(gain: f64) -> Self {
        Self { gain, ..Self::default() }
    }

    /// A zero gain is accepted (it freezes the cloud).
    pub fn validate(&self) -> Result<()> {
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return Err(Error::Config(format!("gain must be finite and non-negative, got {}", self.gain)));
        }
        if !(self.frame_dt_s > 0.0 && self.frame_dt_s.is_finite()) {
            return Err(Error::Config(format!("frame_dt_s must be positive, got {}", self.frame_dt_s)));
        }
        if !(self.gradient_step > 0.0 && self.gradient_step < 0.1) {
            return Err(Error::Config(format!("gradient_step must lie in (0, 0.1), got {}", self.gradient_step)));
        }
        Ok(())
    }
}

/// Perspective projection of a world point through the optical centre onto
/// the pupilar plane, snapped to the nearest lenslet.
pub fn project_to_pupilar(p: &Vec3, pose: &Pose, camera: &PlenopticCamera) -> PupilarHit {
    let pc = pose.inverse_transform_point(p);
    if !(pc.z > 0.0) {
        return PupilarHit::BehindCamera;
    }
    let hit = -pc.xy() * (camera.lens_to_pupilar() / pc.z);
    match camera.nearest_lenslet(&Vec2::new(hit.x, hit.y)) {
        Some(l) => PupilarHit::Lenslet(l),
        None => PupilarHit::OutsideApertureSet,
    }
}

/// World-frame velocity of an estimate and the status it earns.
pub fn vector_field(
    p: &Vec3,
    pose: &Pose,
    camera: &PlenopticCamera,
    light_field: &LightField,
    gradient_step: f64,
) -> (Vec3, PointStatus) {
    let l = match project_to_pupilar(p, pose, camera) {
        PupilarHit::Lenslet(l) => l,
        PupilarHit::BehindCamera => return (Vec3::zeros(), PointStatus::BehindCamera),
        PupilarHit::OutsideApertureSet => return (Vec3::zeros(), PointStatus::OutsideApertureSet),
    };
    let eta = camera.direction(&l);
    let depth = pose.inverse_transform_point(p).dot(&eta);
    let grad = ErrorEvalContext::new(light_field, l)
        .with_step(gradient_step)
        .and_then(|ctx| depth_gradient(&ctx, depth));
    match grad {
        Ok(g) => (pose.transform_vector(&eta) * -g, PointStatus::Updated),
        Err(e) => (Vec3::zeros(), PointStatus::GradientError(e.code())),
    }
}

/// One forward-Euler step `P ← P + K·dt·v(P)` for every point.
pub fn step(
    cloud: &PointEstimateCloud,
    pose: &Pose,
    camera: &PlenopticCamera,
    light_field: &LightField,
    cfg: &ObserverConfig,
) -> PointEstimateCloud {
    let scale = cfg.gain * cfg.frame_dt_s;
    let moved: Vec<(Vec3, PointStatus)> = cloud
        .points
        .par_iter()
        .map(|p| {
            let (v, status) = vector_field(p, pose, camera, light_field, cfg.gradient_step);
            let next = if v == Vec3::zeros() || scale == 0.0 { *p } else { p + v * scale };
            (next, status)
        })
        .collect();
    let mut out = cloud.clone();
    for (k, (p, s)) in moved.into_iter().enumerate() {
        out.points[k] = p;
        out.status[k] = s;
        if s == PointStatus::Updated {
            out.updates[k] += 1;
        }
    }
    out
}
