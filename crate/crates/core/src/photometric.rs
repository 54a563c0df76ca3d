//! Photometric depth error of a lenslet against its visibility window, and
//! its derivative with respect to the depth hypothesis.

use crate::camera::{LensletId, PlenopticCamera};
use crate::error::{Error, Result};
use crate::lightfield::LightField;

pub const DEFAULT_GRADIENT_STEP: f64 = 1e-3;

/// What is integrated over the window. `Unit` replaces the pairwise error by
/// 1 so the result measures the prefactor and quadrature alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrand {
    #[default]
    Photometric,
    Unit,
}

#[derive(Debug, Clone, Copy)]
pub struct ErrorEvalContext<'a> {
    pub light_field: &'a LightField,
    pub lenslet: LensletId,
    /// Quadrature weight per window lenslet, m².
    pub weight: f64,
    /// Relative finite-difference step.
    pub h: f64,
    pub integrand: Integrand,
}

impl<'a> ErrorEvalContext<'a> {
    pub fn new(light_field: &'a LightField, lenslet: LensletId) -> Self {
        let pitch = light_field.camera().lenslet_pitch();
        Self {
            light_field,
            lenslet,
            weight: pitch * pitch,
            h: DEFAULT_GRADIENT_STEP,
            integrand: Integrand::Photometric,
        }
    }

    pub fn with_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 0.1) {
            return Err(Error::Config(format!("gradient step must lie in (0, 0.1), got {h}")));
        }
        self.h = h;
        Ok(self)
    }

    pub fn with_integrand(mut self, integrand: Integrand) -> Self {
        self.integrand = integrand;
        self
    }

    fn camera(&self) -> &PlenopticCamera {
        self.light_field.camera()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalError {
    pub value: f64,
    pub window_len: usize,
    pub truncated: bool,
    /// `(1 + D/Q̂z)⁻²`.
    pub prefactor: f64,
}

/// Squared RGB distance between the central sample of the context lenslet
/// and the sample of `lp` at the projection of the hypothesised image point.
pub fn pairwise_error(ctx: &ErrorEvalContext, lp: &LensletId, depth: f64) -> Result<f64> {
    let cam = ctx.camera();
    let l = &ctx.lenslet;
    let delta = cam.virtual_distance(depth, l)?;
    let phi = cam.lenslet_project(lp, delta, l)?;
    let reference = ctx.light_field.sample(l, &cam.central_pixel(l).xy())?;
    let other = ctx.light_field.sample(lp, &phi.xy())?;
    Ok((reference - other).norm_squared())
}

/// `(1 + D/Q̂z)⁻²`, `Q̂ = ι(Δ̂ η(ℓ))`.
pub fn prefactor(cam: &PlenopticCamera, l: &LensletId, depth: f64) -> Result<f64> {
    let qz = cam.thin_lens_image(&(cam.direction(l) * depth))?.z;
    let g = 1.0 + cam.lens_to_pupilar() / qz;
    if !(g.abs() >= 1e-9) {
        return Err(Error::DegeneratePrefactor);
    }
    Ok(1.0 / (g * g))
}

/// Windowed local error at depth hypothesis `depth` (midpoint rule over the
/// window lenslets).
pub fn local_error(ctx: &ErrorEvalContext, depth: f64) -> Result<LocalError> {
    let cam = ctx.camera();
    let l = &ctx.lenslet;
    let window = cam.visibility_window(depth, l)?;
    let pf = prefactor(cam, l, depth)?;
    let sum = match ctx.integrand {
        Integrand::Unit => window.len() as f64,
        Integrand::Photometric => {
            let reference = ctx.light_field.sample(l, &cam.central_pixel(l).xy())?;
            let mut acc = 0.0;
            for m in &window.members {
                let other = ctx.light_field.sample(&m.lenslet, &m.projection)?;
                acc += (reference - other).norm_squared();
            }
            acc
        }
    };
    Ok(LocalError {
        value: pf * sum * ctx.weight,
        window_len: window.len(),
        truncated: window.truncated,
        prefactor: pf,
    })
}

/// Central difference of the local error in depth with relative step `h`.
pub fn depth_gradient(ctx: &ErrorEvalContext, depth: f64) -> Result<f64> {
    let lo = depth * (1.0 - ctx.h);
    let hi = depth * (1.0 + ctx.h);
    if !(lo > ctx.camera().min_depth()?) {
        return Err(Error::TooClose);
    }
    let e_hi = local_error(ctx, hi)?.value;
    let e_lo = local_error(ctx, lo)?.value;
    Ok((e_hi - e_lo) / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::geometry::{Pose, Vec3};
    use crate::lightfield::render;
    use crate::scene::{BrightnessMap, SceneModel};
    use nalgebra::UnitQuaternion;

    fn camera() -> PlenopticCamera {
        PlenopticCamera::new(Intrinsics::default()).unwrap()
    }

    fn pose() -> Pose {
        Pose::new(UnitQuaternion::from_euler_angles(0.2, 0.1, -0.4), Vec3::new(0.1, 0.05, -0.2))
    }

    /// Unit sphere with a radial ramp anchored at the true surface point of `l`.
    fn anchored(cam: &PlenopticCamera, pose: &Pose, l: &LensletId) -> (SceneModel, f64) {
        let base = SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::Constant { rgb: [0.0; 3] }).unwrap();
        let truth = base.distance_map(pose, cam, l).unwrap();
        let anchor = pose.translation() + pose.transform_vector(&cam.direction(l)) * truth;
        let scene = base.with_brightness(BrightnessMap::RadialMonotone {
            anchor: [anchor.x, anchor.y, anchor.z],
            scale: 4.0,
        });
        (scene, truth)
    }

    #[test]
    fn self_pair_is_zero() {
        let cam = camera();
        let scene = SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::CoordinateRgb { frequency: 6.0 }).unwrap();
        let lf = render(&scene, &cam, &pose()).unwrap();
        let l = cam.lenslet(6, 8).unwrap();
        let ctx = ErrorEvalContext::new(&lf, l);
        for depth in [0.3, 0.7, 1.5] {
            assert_eq!(pairwise_error(&ctx, &l, depth).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_scene_has_flat_error() {
        let cam = camera();
        let scene = SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::Constant { rgb: [0.5; 3] }).unwrap();
        let lf = render(&scene, &cam, &pose()).unwrap();
        let l = cam.lenslet(3, 11).unwrap();
        let ctx = ErrorEvalContext::new(&lf, l);
        let dmin = cam.min_depth().unwrap();
        for depth in [1.01, 1.5, 3.0, 8.0].map(|k| k * dmin) {
            assert_eq!(local_error(&ctx, depth).unwrap().value, 0.0);
            assert_eq!(depth_gradient(&ctx, depth).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_integrand_recovers_window_area() {
        let cam = camera();
        let lf = LightField::blank(&cam);
        for l in cam.lenslets().step_by(7) {
            let ctx = ErrorEvalContext::new(&lf, l).with_integrand(Integrand::Unit);
            for depth in [1.0001, 1.3, 3.0, 10.0].map(|k| k * cam.min_depth().unwrap()) {
                let e = local_error(&ctx, depth).unwrap();
                let area = e.window_len as f64 * ctx.weight;
                let qz = cam.thin_lens_image(&(cam.direction(&l) * depth)).unwrap().z;
                let g = 1.0 + cam.lens_to_pupilar() / qz;
                assert!((e.value / area * g * g - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn guards() {
        let cam = camera();
        let lf = LightField::blank(&cam);
        let l = cam.central_lenslet();
        let ctx = ErrorEvalContext::new(&lf, l);
        let dmin = cam.min_depth().unwrap();
        assert!(matches!(local_error(&ctx, 0.9 * dmin), Err(Error::BelowMinDepth { .. })));
        assert!(matches!(depth_gradient(&ctx, dmin * 1.0005), Err(Error::TooClose)));
        assert!(ctx.with_step(0.0).is_err());
        assert!(ctx.with_step(0.2).is_err());
    }

    #[test]
    fn error_vanishes_at_truth_and_gradient_points_home() {
        let cam = camera();
        let pose = pose();
        let dmin = cam.min_depth().unwrap();
        for (i, j) in [(7, 7), (2, 5), (12, 10), (4, 13)] {
            let l = cam.lenslet(i, j).unwrap();
            let (scene, truth) = anchored(&cam, &pose, &l);
            let lf = render(&scene, &cam, &pose).unwrap();
            let ctx = ErrorEvalContext::new(&lf, l);
            let at = local_error(&ctx, truth).unwrap().value;
            let peak = (1..=30)
                .map(|k| dmin * (3.0 * truth / dmin).powf(k as f64 / 31.0))
                .map(|d| local_error(&ctx, d).unwrap().value)
                .fold(0.0, f64::max);
            assert!(at <= 1e-3 * peak, "({i},{j}): {at} vs {peak}");
            assert!(depth_gradient(&ctx, 0.6 * truth + 0.4 * dmin).unwrap() < 0.0);
            assert!(depth_gradient(&ctx, 1.6 * truth).unwrap() > 0.0);
        }
    }

    #[test]
    fn refined_steps_agree() {
        use rand::{Rng, SeedableRng};
        let cam = camera();
        let scene = SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::CoordinateRgb { frequency: 6.0 }).unwrap();
        let lf = render(&scene, &cam, &pose()).unwrap();
        let dmin = cam.min_depth().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let members = |d: f64, l: &LensletId| -> Vec<(usize, usize)> {
            let w = cam.visibility_window(d, l).unwrap();
            w.members.iter().map(|m| (m.lenslet.i, m.lenslet.j)).collect()
        };
        let mut checked = 0;
        while checked < 100 {
            let l = cam.lenslet(rng.random_range(0..15), rng.random_range(0..15)).unwrap();
            let depth = dmin * rng.random_range(1.1..8.0);
            // keep away from changes of window membership
            let here = members(depth, &l);
            if members(depth * 1.001, &l) != here || members(depth * 0.999, &l) != here {
                continue;
            }
            let base = ErrorEvalContext::new(&lf, l);
            let g = |h: f64| depth_gradient(&base.with_step(h).unwrap(), depth).unwrap();
            let (g3, g4, g5) = (g(1e-3), g(1e-4), g(1e-5));
            assert!((g3 - g4).abs() <= 10.0 * (g4 - g5).abs() + 1e-6, "({}, {}) at {depth}: {g3} {g4} {g5}", l.i, l.j);
            checked += 1;
        }
    }
}
