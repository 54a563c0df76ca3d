//! Outward-facing Lissajous camera paths and checks of the scenario
//! assumptions the observer's convergence argument relies on.

use std::io::Write;

use nalgebra::{Matrix3, Vector2};

use crate::camera::PlenopticCamera;
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::observer::{project_to_pupilar, PupilarHit};
use crate::scene::{BrightnessMap, SceneModel};

#[derive(Debug, Clone, PartialEq)]
pub struct LissajousPath {
    amplitudes: Vec3,
    /// rad/frame
    frequencies: Vec3,
    phases: Vec3,
    center: Vec3,
}

impl LissajousPath {
    pub fn new(amplitudes: Vec3, frequencies: Vec3, phases: Vec3, center: Vec3) -> Result<Self> {
        let all = [amplitudes, frequencies, phases, center];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Config("Lissajous parameters must be finite".into()));
        }
        if amplitudes.iter().all(|&a| a == 0.0) {
            // the camera would sit at the centre with no outward direction
            return Err(Error::DegenerateOrientation);
        }
        Ok(Self {
            amplitudes,
            frequencies,
            phases,
            center,
        })
    }

    /// Amplitudes `fraction·radius` on every axis, `cycles[k]` full periods of
    /// axis `k` over `period` frames.
    pub fn around_sphere(center: Vec3, radius: f64, fraction: f64, cycles: [f64; 3], phases: [f64; 3], period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Config(format!("trajectory period must be positive, got {period}")));
        }
        let w = 2.0 * std::f64::consts::PI / period;
        Self::new(
            Vec3::repeat(fraction * radius),
            Vec3::from(cycles) * w,
            Vec3::from(phases),
            center,
        )
    }

    pub fn amplitudes(&self) -> Vec3 {
        self.amplitudes
    }

    pub fn frequencies(&self) -> Vec3 {
        self.frequencies
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.center
            + Vec3::from_fn(|k, _| self.amplitudes[k] * (self.frequencies[k] * t + self.phases[k]).sin())
    }

    /// Bound on the distance travelled per frame.
    pub fn speed_bound(&self) -> f64 {
        self.amplitudes.abs().dot(&self.frequencies.abs())
    }

    /// Camera pose at frame `t`: principal axis pointing away from the centre,
    /// camera +y as close to world +y as possible (world +x near the poles).
    pub fn pose_at(&self, t: f64) -> Result<Pose> {
        let pos = self.position(t);
        let out = pos - self.center;
        let r = out.norm();
        if !(r > 1e-12) {
            return Err(Error::DegenerateOrientation);
        }
        let z = out / r;
        let mut up = Vec3::y() - z * z.y;
        if up.norm() < 1e-6 {
            up = Vec3::x() - z * z.x;
        }
        let y = up.normalize();
        let x = y.cross(&z);
        Ok(Pose::from_matrix(&Matrix3::from_columns(&[x, y, z]), pos))
    }

    pub fn write_poses_csv<W: Write>(&self, out: W, frames: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["frame", "x", "y", "z", "qw", "qx", "qy", "qz"])?;
        for t in 0..frames {
            let pose = self.pose_at(t as f64)?;
            let p = pose.translation();
            let q = pose.rotation().quaternion();
            let mut rec = vec![t.to_string()];
            rec.extend([p.x, p.y, p.z, q.w, q.i, q.j, q.k].iter().map(|v| format!("{v:.12e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevisitStats {
    /// Frames in which each estimate projects onto the lenslet grid in front
    /// of the camera.
    pub visible_frames: Vec<usize>,
    /// Longest run of frames between consecutive sightings, per estimate;
    /// `None` for estimates seen fewer than twice.
    pub max_gap: Vec<Option<usize>>,
}

impl RevisitStats {
    pub fn never_seen(&self) -> usize {
        self.visible_frames.iter().filter(|&&n| n == 0).count()
    }

    pub fn worst_gap(&self) -> Option<usize> {
        if self.max_gap.iter().any(Option::is_none) {
            return None;
        }
        self.max_gap.iter().flatten().copied().max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub frames: usize,
    /// Radius of the origin-centred ball holding every optical centre and
    /// every minimum-depth frustum.
    pub ball_radius: f64,
    pub ball_inside_scene: bool,
    pub scene_convex: bool,
    /// The brightness map is monotone in distance from a fixed point.
    pub monotone_brightness: bool,
    pub revisits: RevisitStats,
}

impl AssumptionReport {
    /// Everything except the monotone-brightness surrogate holds.
    pub fn geometric_ok(&self) -> bool {
        self.ball_inside_scene && self.scene_convex && self.revisits.worst_gap().is_some()
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mark = |b: bool| if b { "pass" } else { "FAIL" };
        writeln!(out, "frames = {}", self.frames)?;
        writeln!(out, "camera ball radius_m = {:.6}", self.ball_radius)?;
        writeln!(out, "[{}] camera ball inside scene", mark(self.ball_inside_scene))?;
        writeln!(out, "[{}] scene convex", mark(self.scene_convex))?;
        writeln!(
            out,
            "[{}] brightness monotone about a fixed point{}",
            mark(self.monotone_brightness),
            if self.monotone_brightness { "" } else { " (warning only)" }
        )?;
        let r = &self.revisits;
        let seen = r.visible_frames.len() - r.never_seen();
        writeln!(out, "estimates seen = {seen} / {}", r.visible_frames.len())?;
        let mut counts = r.visible_frames.clone();
        counts.sort_unstable();
        if let Some(&med) = counts.get(counts.len() / 2) {
            writeln!(out, "median frames visible = {med}")?;
        }
        match r.worst_gap() {
            Some(g) => writeln!(out, "[pass] every estimate revisited, longest gap = {g} frames")?,
            None => writeln!(out, "[FAIL] some estimates are seen fewer than twice")?,
        }
        Ok(())
    }
}

/// Optical centre and the far corners of the minimum-depth frustum over the
/// lenslet grid footprint, in world coordinates.
pub fn frustum_vertices(pose: &Pose, camera: &PlenopticCamera) -> Result<[Vec3; 5]> {
    let dmin = camera.min_depth()?;
    let (rows, cols) = camera.lenslet_counts();
    let p = camera.lenslet_pitch();
    let half = Vector2::new(rows as f64, cols as f64) * (0.5 * p);
    let big_d = camera.lens_to_pupilar();
    let mut out = [pose.translation(); 5];
    for (k, (sx, sy)) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)].into_iter().enumerate() {
        // ray from the pupilar corner through the optical centre, cut at
        // axial depth dmin
        let eta = -Vec3::new(sx * half.x, sy * half.y, -big_d).normalize();
        out[k + 1] = pose.transform_point(&(eta * (dmin / eta.z)));
    }
    Ok(out)
}

pub fn revisit_stats(path: &LissajousPath, camera: &PlenopticCamera, estimates: &[Vec3], frames: usize) -> Result<RevisitStats> {
    let poses: Vec<Pose> = (0..frames).map(|t| path.pose_at(t as f64)).collect::<Result<_>>()?;
    let mut visible_frames = Vec::with_capacity(estimates.len());
    let mut max_gap = Vec::with_capacity(estimates.len());
    for p in estimates {
        let mut last: Option<usize> = None;
        let mut gap: Option<usize> = None;
        let mut seen = 0;
        for (t, pose) in poses.iter().enumerate() {
            if let PupilarHit::Lenslet(_) = project_to_pupilar(p, pose, camera) {
                if let Some(prev) = last {
                    gap = Some(gap.unwrap_or(0).max(t - prev));
                }
                last = Some(t);
                seen += 1;
            }
        }
        visible_frames.push(seen);
        max_gap.push(gap);
    }
    Ok(RevisitStats { visible_frames, max_gap })
}

pub fn validate_assumptions(
    path: &LissajousPath,
    camera: &PlenopticCamera,
    scene: &SceneModel,
    estimates: &[Vec3],
    frames: usize,
) -> Result<AssumptionReport> {
    let mut ball_radius: f64 = 0.0;
    for t in 0..frames {
        let pose = path.pose_at(t as f64)?;
        for v in frustum_vertices(&pose, camera)? {
            ball_radius = ball_radius.max(v.norm());
        }
    }
    Ok(AssumptionReport {
        frames,
        ball_radius,
        ball_inside_scene: scene.contains_ball(&Vec3::zeros(), ball_radius),
        scene_convex: scene.is_convex(),
        monotone_brightness: matches!(
            scene.brightness(),
            BrightnessMap::RadialMonotone { .. } | BrightnessMap::Constant { .. }
        ),
        revisits: revisit_stats(path, camera, estimates, frames)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::scene::make_icosphere;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn default_path(frames: f64) -> LissajousPath {
        LissajousPath::around_sphere(Vec3::zeros(), 1.0, 0.25, [3.0, 4.0, 7.0], [PI / 2.0, PI / 3.0, PI / 5.0], frames).unwrap()
    }

    #[test]
    fn zero_amplitude_is_rejected() {
        let r = LissajousPath::new(Vec3::zeros(), Vec3::repeat(0.1), Vec3::zeros(), Vec3::zeros());
        assert!(matches!(r, Err(Error::DegenerateOrientation)));
    }

    #[test]
    fn first_pose_example() {
        let path = LissajousPath::new(Vec3::new(0.3, 0.0, 0.0), Vec3::new(0.1, 0.2, 0.3), Vec3::new(PI / 2.0, 0.0, 0.0), Vec3::zeros()).unwrap();
        let pose = path.pose_at(0.0).unwrap();
        assert_relative_eq!(pose.translation(), Vec3::new(0.3, 0.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(pose.principal_axis(), Vec3::x(), epsilon = 1e-15);
        // roll keeps camera +y on world +y
        assert_relative_eq!(pose.transform_vector(&Vec3::y()), Vec3::y(), epsilon = 1e-15);
        // crossing the centre has no outward direction
        assert!(matches!(path.pose_at(PI / 0.1 * 0.5), Err(Error::DegenerateOrientation)));
    }

    #[test]
    fn poses_are_rotations_facing_outward() {
        let path = default_path(600.0);
        let bound = path.speed_bound();
        for t in 1..2000 {
            let pose = path.pose_at(t as f64 * 0.37).unwrap();
            let r = pose.rotation_matrix();
            assert_relative_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-12);
            assert!((r.determinant() - 1.0).abs() < 1e-12);
            assert!((pose.translation() - path.center()).dot(&pose.principal_axis()) > 0.0);
        }
        for t in 0..600 {
            let a = path.pose_at(t as f64).unwrap().translation();
            let b = path.pose_at(t as f64 + 1.0).unwrap().translation();
            assert!((b - a).norm() <= bound);
        }
    }

    #[test]
    fn camera_ball_example() {
        // amplitudes 0.2 and a frustum no deeper than 0.3 keep the ball
        // within 0.5 of the centre
        let cam = PlenopticCamera::new(Intrinsics {
            focal_length_m: 0.1,
            lens_to_pupilar_m: 0.05,
            lenslet_pitch_m: 0.002,
            aperture_radius_m: 0.01,
            pupilar_to_retinal_m: 0.002,
            pixel_pitch_m: 0.0001,
            ..Intrinsics::default()
        })
        .unwrap();
        let path = LissajousPath::around_sphere(Vec3::zeros(), 1.0, 0.2, [2.0, 3.0, 5.0], [0.3, 1.0, 2.0], 200.0).unwrap();
        let scene = SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::CoordinateRgb { frequency: 6.0 }).unwrap();
        let far = frustum_vertices(&path.pose_at(0.0).unwrap(), &cam).unwrap();
        let reach = far[1..].iter().map(|v| (v - far[0]).norm()).fold(0.0, f64::max);
        assert!(reach < 0.3, "{reach}");
        let rep = validate_assumptions(&path, &cam, &scene, &[], 200).unwrap();
        assert!(rep.ball_radius <= 0.2 * 3f64.sqrt() + reach + 1e-12);
        assert!(rep.ball_radius <= 0.5 + 0.15);
        assert!(rep.ball_inside_scene && rep.scene_convex && !rep.monotone_brightness);
    }

    #[test]
    fn concave_scene_fails_convexity() {
        let mut mesh = make_icosphere(Vec3::zeros(), 1.0, 1);
        mesh.vertices[0] *= 0.5;
        let scene = SceneModel::mesh(mesh, BrightnessMap::Constant { rgb: [0.5; 3] });
        let cam = PlenopticCamera::new(Intrinsics::default()).unwrap();
        let rep = validate_assumptions(&default_path(100.0), &cam, &scene, &[], 10).unwrap();
        assert!(!rep.scene_convex);
        assert!(!rep.geometric_ok());
    }

    #[test]
    fn surrounding_estimates_are_all_revisited() {
        let cam = PlenopticCamera::new(Intrinsics::default()).unwrap();
        let path = default_path(600.0);
        let est = make_icosphere(Vec3::zeros(), 0.85, 3).vertices;
        let stats = revisit_stats(&path, &cam, &est, 600).unwrap();
        assert_eq!(stats.never_seen(), 0);
        assert!(stats.worst_gap().is_some());
    }

    #[test]
    fn poses_csv_has_one_row_per_frame() {
        let mut buf = Vec::new();
        default_path(50.0).write_poses_csv(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "frame,x,y,z,qw,qx,qy,qz");
        assert_eq!(lines.len(), 6);
    }
}
