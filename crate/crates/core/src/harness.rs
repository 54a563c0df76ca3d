//! End-to-end simulation: configuration, the render/observe loop, metrics,
//! gain sweeps and file exports.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::camera::{Intrinsics, PlenopticCamera};
use crate::error::{Error, Result};
use crate::geometry::{HalfCone, Vec3};
use crate::lightfield::{render, LightField};
use crate::observer::{step, ObserverConfig, PointEstimateCloud, PointStatus};
use crate::ply::{self, PlyData};
use crate::scene::{make_icosphere, BrightnessMap, SceneModel};
use crate::trajectory::{validate_assumptions, AssumptionReport, LissajousPath};

pub const METRICS_HEADER: &str = "frame,total_sq_error_m2,mean_dist_m,n_updated,n_outside,n_behind,n_grad_err";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub center_m: [f64; 3],
    pub radius_m: f64,
    pub brightness: BrightnessMap,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            center_m: [0.0; 3],
            radius_m: 1.0,
            brightness: BrightnessMap::CoordinateRgb { frequency: 4.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    /// Amplitude on every axis as a fraction of the scene radius; ignored when
    /// `amplitudes_m` is given.
    pub amplitude_fraction: f64,
    pub amplitudes_m: Option<[f64; 3]>,
    /// Full periods per axis over `period_frames`.
    pub cycles: [f64; 3],
    pub phases_rad: [f64; 3],
    /// Defaults to the number of frames.
    pub period_frames: Option<f64>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            amplitude_fraction: 0.25,
            amplitudes_m: None,
            cycles: [3.0, 4.0, 7.0],
            phases_rad: [PI / 2.0, PI / 3.0, PI / 5.0],
            period_frames: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObserverBlock {
    pub frames: usize,
    pub gain: f64,
    /// Gains tried by a sweep.
    pub gains: Vec<f64>,
    pub frame_dt_s: f64,
    pub gradient_step: f64,
}

impl Default for ObserverBlock {
    fn default() -> Self {
        let base = ObserverConfig::default();
        Self {
            frames: 600,
            gain: DEFAULT_GAIN,
            gains: vec![1e3, 3e3, 1e4, 3e4],
            frame_dt_s: base.frame_dt_s,
            gradient_step: base.gradient_step,
        }
    }
}

pub const DEFAULT_GAIN: f64 = 1e4;

impl ObserverBlock {
    pub fn observer_config(&self, gain: f64) -> ObserverConfig {
        ObserverConfig {
            gain,
            frame_dt_s: self.frame_dt_s,
            gradient_step: self.gradient_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub subdivisions: u32,
    pub radius_m: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            subdivisions: 3,
            radius_m: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Cloud PLY cadence in frames; 0 disables periodic exports.
    pub export_every: usize,
    /// Light-field PNG cadence in frames; 0 disables.
    pub png_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            export_every: 50,
            png_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for randomised checks; the simulation itself is deterministic.
    pub seed: u64,
    pub camera: Intrinsics,
    pub scene: SceneConfig,
    pub trajectory: TrajectoryConfig,
    pub observer: ObserverBlock,
    pub estimate: EstimateConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.build()?;
        self.observer.observer_config(self.observer.gain).validate()?;
        for &g in &self.observer.gains {
            self.observer.observer_config(g).validate()?;
        }
        if !(self.estimate.radius_m > 0.0) {
            return Err(Error::Config("estimate radius must be positive".into()));
        }
        if self.estimate.subdivisions > 7 {
            return Err(Error::Config("at most 7 icosphere subdivisions".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Scenario> {
        let camera = PlenopticCamera::new(self.camera)?;
        let center = Vec3::from(self.scene.center_m);
        let scene = SceneModel::sphere(center, self.scene.radius_m, self.scene.brightness)
            .map_err(|e| Error::Config(format!("scene: {e}")))?;
        let t = &self.trajectory;
        let period = t.period_frames.unwrap_or(self.observer.frames.max(1) as f64);
        let mut path = LissajousPath::around_sphere(center, self.scene.radius_m, t.amplitude_fraction, t.cycles, t.phases_rad, period)?;
        if let Some(a) = t.amplitudes_m {
            path = LissajousPath::new(Vec3::from(a), path.frequencies(), Vec3::from(t.phases_rad), center)?;
        }
        let initial = make_icosphere(center, self.estimate.radius_m, self.estimate.subdivisions).vertices;
        Ok(Scenario {
            camera,
            scene,
            path,
            initial,
        })
    }
}

/// The built objects of a configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub camera: PlenopticCamera,
    pub scene: SceneModel,
    pub path: LissajousPath,
    pub initial: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMetrics {
    pub total_sq_error: f64,
    pub mean_dist: f64,
    pub n_updated: usize,
    pub n_outside: usize,
    pub n_behind: usize,
    pub n_grad_err: usize,
}

/// Per-frame metrics; entry `t` describes the cloud after the update at
/// frame `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub initial_sq_error: f64,
    pub initial_mean_dist: f64,
    pub frames: Vec<FrameMetrics>,
    pub wall_s: Vec<f64>,
}

impl RunMetrics {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn final_sq_error(&self) -> f64 {
        self.frames.last().map_or(self.initial_sq_error, |f| f.total_sq_error)
    }

    /// Error exceeded ten times its initial value at some frame.
    pub fn diverged(&self) -> bool {
        self.frames
            .iter()
            .any(|f| !(f.total_sq_error <= 10.0 * self.initial_sq_error))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(w, "{METRICS_HEADER}")?;
        for (t, f) in self.frames.iter().enumerate() {
            writeln!(
                w,
                "{t},{},{},{},{},{},{}",
                f.total_sq_error, f.mean_dist, f.n_updated, f.n_outside, f.n_behind, f.n_grad_err
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Empirical check that each tracked estimate stays in the pointed cone
/// spanned by the camera ball with apex at its initial position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContainmentStats {
    /// Estimates that start inside the scene and outside the closed ball.
    pub tracked: usize,
    pub samples: usize,
    pub violations: usize,
    /// Tracked estimates found outside the scene at some frame.
    pub crossed_surface: usize,
    /// Largest distance of a tracked estimate outside the scene.
    pub max_overshoot_m: f64,
    /// Largest single-frame displacement of any estimate.
    pub max_step_m: f64,
}

impl ContainmentStats {
    /// Some estimate left the scene by more than one step can explain.
    pub fn overshoot_flag(&self) -> bool {
        self.max_overshoot_m > self.max_step_m
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub gain: f64,
    pub metrics: RunMetrics,
    pub assumptions: AssumptionReport,
    pub containment: ContainmentStats,
    pub cloud: PointEstimateCloud,
}

impl RunOutcome {
    pub fn median_updates(&self) -> u32 {
        let mut c = self.cloud.update_counts().to_vec();
        c.sort_unstable();
        c.get(c.len() / 2).copied().unwrap_or(0)
    }
}

pub fn frame_metrics(scene: &SceneModel, cloud: &PointEstimateCloud) -> FrameMetrics {
    let mut m = FrameMetrics::default();
    let mut sum_d = 0.0;
    for (p, s) in cloud.points().iter().zip(cloud.status()) {
        let d = scene.point_distance(p);
        m.total_sq_error += d * d;
        sum_d += d;
        match s {
            PointStatus::Updated => m.n_updated += 1,
            PointStatus::OutsideApertureSet => m.n_outside += 1,
            PointStatus::BehindCamera => m.n_behind += 1,
            PointStatus::GradientError(_) => m.n_grad_err += 1,
            PointStatus::Unvisited => {}
        }
    }
    if !cloud.is_empty() {
        m.mean_dist = sum_d / cloud.len() as f64;
    }
    m
}

fn status_colour(s: &PointStatus) -> [u8; 3] {
    match s {
        PointStatus::Unvisited => [255, 255, 255],
        PointStatus::Updated => [40, 200, 60],
        PointStatus::OutsideApertureSet => [140, 140, 140],
        PointStatus::BehindCamera => [50, 90, 230],
        PointStatus::GradientError(_) => [230, 40, 40],
    }
}

pub fn cloud_ply(cloud: &PointEstimateCloud) -> PlyData {
    PlyData {
        vertices: cloud.points().to_vec(),
        colours: cloud.status().iter().map(status_colour).collect(),
        faces: Vec::new(),
    }
}

/// Runs the scenario with `gain`, writing artifacts under `out` when given.
pub fn run_with_gain(config: &RunConfig, gain: f64, out: Option<&Path>) -> Result<RunOutcome> {
    config.validate()?;
    let sc = config.build()?;
    let frames = config.observer.frames;
    let obs = config.observer.observer_config(gain);
    obs.validate()?;

    let assumptions = validate_assumptions(&sc.path, &sc.camera, &sc.scene, &sc.initial, frames)?;
    if !(assumptions.ball_inside_scene && assumptions.scene_convex) {
        let mut text = Vec::new();
        assumptions.write_text(&mut text)?;
        return Err(Error::Config(format!(
            "scenario violates the camera-ball or convexity assumption:\n{}",
            String::from_utf8_lossy(&text)
        )));
    }
    if !assumptions.monotone_brightness {
        log::warn!("brightness map is not monotone about a fixed point; continuing");
    }
    if assumptions.revisits.worst_gap().is_none() && frames > 0 {
        log::warn!("{} estimates are seen fewer than twice", assumptions.revisits.max_gap.iter().filter(|g| g.is_none()).count());
    }

    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        assumptions.write_text(File::create(dir.join("assumptions.txt"))?)?;
        sc.path.write_poses_csv(File::create(dir.join("poses.csv"))?, frames)?;
        fs::write(dir.join("config.toml"), config.to_toml_string()?)?;
    }

    let mut cloud = PointEstimateCloud::new(sc.initial.clone());
    let init = frame_metrics(&sc.scene, &cloud);
    let mut metrics = RunMetrics {
        initial_sq_error: init.total_sq_error,
        initial_mean_dist: init.mean_dist,
        ..Default::default()
    };

    let ball = assumptions.ball_radius;
    let cones: Vec<Option<HalfCone>> = sc
        .initial
        .iter()
        .map(|p| {
            if sc.scene.contains(p) && p.norm() > ball {
                HalfCone::new(Vec3::zeros(), ball, *p).ok()
            } else {
                None
            }
        })
        .collect();
    let mut containment = ContainmentStats {
        tracked: cones.iter().flatten().count(),
        ..Default::default()
    };
    let mut crossed = vec![false; cones.len()];

    let export = |dir: &Path, name: &str, cloud: &PointEstimateCloud| -> Result<()> {
        ply::write_file(&dir.join(name), &cloud_ply(cloud))
    };
    if let Some(dir) = out {
        export(dir, "cloud_initial.ply", &cloud)?;
    }

    for t in 0..frames {
        let start = Instant::now();
        let pose = sc.path.pose_at(t as f64)?;
        let lf = render(&sc.scene, &sc.camera, &pose)?;
        let next = step(&cloud, &pose, &sc.camera, &lf, &obs);
        for (a, b) in cloud.points().iter().zip(next.points()) {
            containment.max_step_m = containment.max_step_m.max((b - a).norm());
        }
        cloud = next;
        metrics.frames.push(frame_metrics(&sc.scene, &cloud));
        metrics.wall_s.push(start.elapsed().as_secs_f64());

        for (k, cone) in cones.iter().enumerate() {
            let Some(cone) = cone else { continue };
            let p = &cloud.points()[k];
            containment.samples += 1;
            if !cone.positive_contains_closed_apex(p) {
                containment.violations += 1;
            }
            if !sc.scene.contains(p) {
                crossed[k] = true;
                containment.max_overshoot_m = containment.max_overshoot_m.max(sc.scene.point_distance(p));
            }
        }

        if let Some(dir) = out {
            let every = config.output.export_every;
            if every > 0 && (t + 1) % every == 0 {
                export(dir, &format!("cloud_{:05}.ply", t + 1), &cloud)?;
            }
            let png = config.output.png_every;
            if png > 0 && t % png == 0 {
                write_frame(dir, &lf, &pose, t)?;
            }
        }
        log::debug!("frame {t}: error {:.6e}", metrics.frames[t].total_sq_error);
    }
    containment.crossed_surface = crossed.iter().filter(|&&c| c).count();
    if containment.overshoot_flag() {
        log::warn!(
            "estimates left the scene by {:.3e} m, more than the largest step {:.3e} m; consider a smaller gain",
            containment.max_overshoot_m,
            containment.max_step_m
        );
    }

    if let Some(dir) = out {
        export(dir, "cloud_final.ply", &cloud)?;
        metrics.write_csv(File::create(dir.join("metrics.csv"))?)?;
    }
    Ok(RunOutcome {
        gain,
        metrics,
        assumptions,
        containment,
        cloud,
    })
}

pub fn run(config: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    run_with_gain(config, config.observer.gain, out)
}

fn write_frame(dir: &Path, lf: &LightField, pose: &crate::geometry::Pose, t: usize) -> Result<()> {
    lf.write_png(&dir.join(format!("frame_{t:05}.png")))?;
    let mut meta = BufWriter::new(File::create(dir.join(format!("frame_{t:05}.txt")))?);
    lf.write_metadata(&mut meta, pose, t)?;
    meta.flush()?;
    Ok(())
}

/// Renders frame `t` of the configured trajectory to `dir`.
pub fn render_frame(config: &RunConfig, t: usize, dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let sc = config.build()?;
    let pose = sc.path.pose_at(t as f64)?;
    let lf = render(&sc.scene, &sc.camera, &pose)?;
    fs::create_dir_all(dir)?;
    write_frame(dir, &lf, &pose, t)?;
    Ok(dir.join(format!("frame_{t:05}.png")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub gain: f64,
    pub initial_sq_error: f64,
    pub final_sq_error: f64,
    pub diverged: bool,
    pub median_updates: u32,
    pub metrics: RunMetrics,
}

/// One run per gain. Writes `sweep.csv` (error curves) and
/// `sweep_summary.csv` under `out` when given.
pub fn gain_sweep(config: &RunConfig, gains: &[f64], out: Option<&Path>) -> Result<Vec<SweepEntry>> {
    if gains.is_empty() {
        return Err(Error::Config("gain sweep needs at least one gain".into()));
    }
    let mut entries = Vec::with_capacity(gains.len());
    for &g in gains {
        let o = run_with_gain(config, g, None)?;
        entries.push(SweepEntry {
            gain: g,
            initial_sq_error: o.metrics.initial_sq_error,
            final_sq_error: o.metrics.final_sq_error(),
            diverged: o.metrics.diverged(),
            median_updates: o.median_updates(),
            metrics: o.metrics,
        });
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_sweep_csv(File::create(dir.join("sweep.csv"))?, &entries)?;
        write_sweep_summary(File::create(dir.join("sweep_summary.csv"))?, &entries)?;
    }
    Ok(entries)
}

pub fn write_sweep_csv<W: Write>(out: W, entries: &[SweepEntry]) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "gain,frame,total_sq_error_m2,mean_dist_m")?;
    for e in entries {
        for (t, f) in e.metrics.frames.iter().enumerate() {
            writeln!(w, "{},{t},{},{}", e.gain, f.total_sq_error, f.mean_dist)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_summary<W: Write>(out: W, entries: &[SweepEntry]) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "gain,initial_sq_error_m2,final_sq_error_m2,final_ratio,diverged,median_updates")?;
    for e in entries {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.gain,
            e.initial_sq_error,
            e.final_sq_error,
            e.final_sq_error / e.initial_sq_error,
            e.diverged,
            e.median_updates
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.estimate.subdivisions = 1;
        c.observer.frames = 12;
        c
    }

    #[test]
    fn default_config_roundtrips_through_toml() {
        let c = RunConfig::default();
        let text = c.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
        assert_eq!(RunConfig::from_file(&path).unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_and_bad_configs() {
        let c = RunConfig::from_toml_str("[observer]\nframes = 5\n[scene.brightness]\nkind = \"constant\"\nrgb = [0.1, 0.2, 0.3]\n").unwrap();
        assert_eq!(c.observer.frames, 5);
        assert_eq!(c.camera, Intrinsics::default());
        assert!(matches!(RunConfig::from_toml_str("[camera]\nfocal_length = 1.0\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("[observer]\ngain = -1.0\n"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml_str("[scene]\nradius_m = -2.0\n").is_err());
    }

    #[test]
    fn zero_frames_exports_the_initial_cloud() {
        let mut c = small();
        c.observer.frames = 0;
        let dir = tempfile::tempdir().unwrap();
        let o = run(&c, Some(dir.path())).unwrap();
        assert!(o.metrics.is_empty());
        let back = ply::read_file(&dir.path().join("cloud_final.ply")).unwrap();
        assert_eq!(back.vertices, c.build().unwrap().initial);
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(csv, format!("{METRICS_HEADER}\n"));
    }

    #[test]
    fn zero_gain_keeps_error_constant() {
        let mut c = small();
        c.observer.frames = 10;
        let o = run_with_gain(&c, 0.0, None).unwrap();
        assert_eq!(o.metrics.len(), 10);
        assert!(o.metrics.frames.iter().all(|f| f.total_sq_error == o.metrics.initial_sq_error));
        assert!(!o.metrics.diverged());
    }

    #[test]
    fn identical_configs_give_identical_files() {
        let c = small();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(&c, Some(a.path())).unwrap();
        run(&c, Some(b.path())).unwrap();
        for name in ["metrics.csv", "cloud_final.ply", "poses.csv", "assumptions.txt"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
        }
    }

    #[test]
    fn points_that_are_not_updated_do_not_move() {
        let c = small();
        let sc = c.build().unwrap();
        let mut cloud = PointEstimateCloud::new(sc.initial.clone());
        let obs = c.observer.observer_config(DEFAULT_GAIN);
        for t in 0..4 {
            let pose = sc.path.pose_at(t as f64).unwrap();
            let lf = render(&sc.scene, &sc.camera, &pose).unwrap();
            let next = step(&cloud, &pose, &sc.camera, &lf, &obs);
            for k in 0..next.len() {
                if next.status()[k] != PointStatus::Updated {
                    assert_eq!(next.points()[k], cloud.points()[k]);
                }
            }
            cloud = next;
        }
    }

    #[test]
    fn camera_ball_outside_scene_is_rejected() {
        let mut c = small();
        c.trajectory.amplitude_fraction = 0.9;
        assert!(matches!(run(&c, None), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_writes_curves_and_summary() {
        let c = small();
        let dir = tempfile::tempdir().unwrap();
        let e = gain_sweep(&c, &[0.0, DEFAULT_GAIN], Some(dir.path())).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].final_sq_error, e[0].initial_sq_error);
        let curves = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(curves.lines().count(), 1 + 2 * c.observer.frames);
        let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 3);
        assert!(gain_sweep(&c, &[], None).is_err());
    }
}
