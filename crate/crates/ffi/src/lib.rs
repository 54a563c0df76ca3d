//! C ABI over the plenoptic simulator and observer.
//!
//! Objects are opaque handles created by `plen_*_new`/constructor functions
//! and released with the matching `plen_*_free`. Every fallible call returns a
//! status code (`PLEN_OK` on success) and writes results through out-pointers.
//! Panics never cross the boundary; they surface as `PLEN_ERR_PANIC`.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{Quaternion, UnitQuaternion};
use plenoptic::camera::{Intrinsics, PlenopticCamera};
use plenoptic::geometry::{Pose, Vec3};
use plenoptic::lightfield::{render, LightField};
use plenoptic::observer::{step, ObserverConfig, PointEstimateCloud, PointStatus};
use plenoptic::scene::{BrightnessMap, SceneModel};
use plenoptic::trajectory::LissajousPath;
use plenoptic::Error;

pub type PlenStatus = i32;

pub const PLEN_OK: PlenStatus = 0;
pub const PLEN_ERR_DEGENERATE_PROJECTION: PlenStatus = 1;
pub const PLEN_ERR_INVALID_CONE: PlenStatus = 2;
pub const PLEN_ERR_AT_FOCAL_PLANE: PlenStatus = 3;
pub const PLEN_ERR_INVALID_INTRINSICS: PlenStatus = 4;
pub const PLEN_ERR_BELOW_MIN_DEPTH: PlenStatus = 5;
pub const PLEN_ERR_TOO_CLOSE: PlenStatus = 6;
pub const PLEN_ERR_DEGENERATE_PREFACTOR: PlenStatus = 7;
pub const PLEN_ERR_OUT_OF_SUBIMAGE: PlenStatus = 8;
pub const PLEN_ERR_NO_INTERSECTION: PlenStatus = 9;
pub const PLEN_ERR_DEGENERATE_ORIENTATION: PlenStatus = 10;
pub const PLEN_ERR_INVALID_SCENE: PlenStatus = 11;
pub const PLEN_ERR_CONFIG: PlenStatus = 12;
pub const PLEN_ERR_PARSE: PlenStatus = 13;
pub const PLEN_ERR_IO: PlenStatus = 14;
/// A required pointer argument was null.
pub const PLEN_ERR_NULL: PlenStatus = 100;
/// A buffer was too small or an argument out of range.
pub const PLEN_ERR_ARGUMENT: PlenStatus = 101;
pub const PLEN_ERR_PANIC: PlenStatus = 102;

/// Per-point observer status values written by `plen_cloud_status`.
pub const PLEN_POINT_UNVISITED: i32 = 0;
pub const PLEN_POINT_UPDATED: i32 = 1;
pub const PLEN_POINT_OUTSIDE_APERTURE: i32 = 2;
pub const PLEN_POINT_BEHIND_CAMERA: i32 = 3;
/// Gradient failures are reported as `PLEN_POINT_GRADIENT_ERROR_BASE + code`.
pub const PLEN_POINT_GRADIENT_ERROR_BASE: i32 = 1000;

/// Rigid camera-to-world transform: unit quaternion (w, x, y, z) and
/// translation in metres.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlenPose {
    pub rotation_wxyz: [f64; 4],
    pub translation: [f64; 3],
}

/// Camera intrinsics; lengths in metres.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlenIntrinsics {
    pub focal_length_m: f64,
    pub lens_to_pupilar_m: f64,
    pub pupilar_to_retinal_m: f64,
    pub aperture_radius_m: f64,
    pub pixel_pitch_m: f64,
    pub lenslet_pitch_m: f64,
    pub lenslet_rows: u32,
    pub lenslet_cols: u32,
    pub subimage_rows: u32,
    pub subimage_cols: u32,
}

pub struct PlenCamera(PlenopticCamera);
pub struct PlenScene(SceneModel);
pub struct PlenPath(LissajousPath);
pub struct PlenLightField(LightField);
pub struct PlenCloud(PointEstimateCloud);

fn status_of(e: &Error) -> PlenStatus {
    e.code() as i32
}

fn guard(f: impl FnOnce() -> Result<(), PlenStatus>) -> PlenStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PLEN_OK,
        Ok(Err(s)) => s,
        Err(_) => PLEN_ERR_PANIC,
    }
}

fn core<T>(r: plenoptic::Result<T>) -> Result<T, PlenStatus> {
    r.map_err(|e| status_of(&e))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, PlenStatus> {
    p.as_ref().ok_or(PLEN_ERR_NULL)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), PlenStatus> {
    if out.is_null() {
        return Err(PLEN_ERR_NULL);
    }
    out.write(value);
    Ok(())
}

unsafe fn read3(p: *const f64) -> Result<Vec3, PlenStatus> {
    if p.is_null() {
        return Err(PLEN_ERR_NULL);
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

fn to_pose(p: &PlenPose) -> Result<Pose, PlenStatus> {
    let [w, x, y, z] = p.rotation_wxyz;
    let q = Quaternion::new(w, x, y, z);
    if q.norm() <= 1e-12 || !q.norm().is_finite() || p.translation.iter().any(|v| !v.is_finite()) {
        return Err(PLEN_ERR_ARGUMENT);
    }
    Ok(Pose::new(UnitQuaternion::from_quaternion(q), Vec3::from(p.translation)))
}

fn from_pose(p: &Pose) -> PlenPose {
    let q = p.rotation().quaternion();
    let t = p.translation();
    PlenPose {
        rotation_wxyz: [q.w, q.i, q.j, q.k],
        translation: [t.x, t.y, t.z],
    }
}

fn point_status_code(s: &PointStatus) -> i32 {
    match s {
        PointStatus::Unvisited => PLEN_POINT_UNVISITED,
        PointStatus::Updated => PLEN_POINT_UPDATED,
        PointStatus::OutsideApertureSet => PLEN_POINT_OUTSIDE_APERTURE,
        PointStatus::BehindCamera => PLEN_POINT_BEHIND_CAMERA,
        PointStatus::GradientError(c) => PLEN_POINT_GRADIENT_ERROR_BASE + *c as i32,
    }
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn plen_status_message(status: PlenStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        PLEN_OK => b"ok\0",
        PLEN_ERR_DEGENERATE_PROJECTION => b"degenerate projection\0",
        PLEN_ERR_INVALID_CONE => b"invalid cone\0",
        PLEN_ERR_AT_FOCAL_PLANE => b"point on the focal plane\0",
        PLEN_ERR_INVALID_INTRINSICS => b"invalid intrinsics\0",
        PLEN_ERR_BELOW_MIN_DEPTH => b"depth below the minimum depth\0",
        PLEN_ERR_TOO_CLOSE => b"gradient probe below the minimum depth\0",
        PLEN_ERR_DEGENERATE_PREFACTOR => b"degenerate window prefactor\0",
        PLEN_ERR_OUT_OF_SUBIMAGE => b"position outside the subimage\0",
        PLEN_ERR_NO_INTERSECTION => b"no intersection\0",
        PLEN_ERR_DEGENERATE_ORIENTATION => b"degenerate orientation\0",
        PLEN_ERR_INVALID_SCENE => b"invalid scene\0",
        PLEN_ERR_CONFIG => b"configuration error\0",
        PLEN_ERR_PARSE => b"parse error\0",
        PLEN_ERR_IO => b"i/o error\0",
        PLEN_ERR_NULL => b"null pointer argument\0",
        PLEN_ERR_ARGUMENT => b"invalid argument\0",
        PLEN_ERR_PANIC => b"internal panic\0",
        _ => b"unknown status\0",
    };
    s.as_ptr() as *const c_char
}

// camera

/// Fills `out` with the default desk-scale intrinsics.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn plen_intrinsics_default(out: *mut PlenIntrinsics) -> PlenStatus {
    guard(|| {
        let i = Intrinsics::default();
        write_out(
            out,
            PlenIntrinsics {
                focal_length_m: i.focal_length_m,
                lens_to_pupilar_m: i.lens_to_pupilar_m,
                pupilar_to_retinal_m: i.pupilar_to_retinal_m,
                aperture_radius_m: i.aperture_radius_m,
                pixel_pitch_m: i.pixel_pitch_m,
                lenslet_pitch_m: i.lenslet_pitch_m,
                lenslet_rows: i.lenslet_rows as u32,
                lenslet_cols: i.lenslet_cols as u32,
                subimage_rows: i.subimage_rows as u32,
                subimage_cols: i.subimage_cols as u32,
            },
        )
    })
}

/// # Safety
/// `intrinsics` must be null or point to a valid struct; `out` must be null
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn plen_camera_new(intrinsics: *const PlenIntrinsics, out: *mut *mut PlenCamera) -> PlenStatus {
    guard(|| {
        let i = deref(intrinsics)?;
        if out.is_null() {
            return Err(PLEN_ERR_NULL);
        }
        let cam = core(PlenopticCamera::new(Intrinsics {
            focal_length_m: i.focal_length_m,
            lens_to_pupilar_m: i.lens_to_pupilar_m,
            pupilar_to_retinal_m: i.pupilar_to_retinal_m,
            aperture_radius_m: i.aperture_radius_m,
            pixel_pitch_m: i.pixel_pitch_m,
            lenslet_pitch_m: i.lenslet_pitch_m,
            lenslet_rows: i.lenslet_rows as usize,
            lenslet_cols: i.lenslet_cols as usize,
            subimage_rows: i.subimage_rows as usize,
            subimage_cols: i.subimage_cols as usize,
        }))?;
        write_out(out, Box::into_raw(Box::new(PlenCamera(cam))))
    })
}

/// # Safety
/// `camera` must be null or a handle from `plen_camera_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plen_camera_free(camera: *mut PlenCamera) {
    if !camera.is_null() {
        drop(Box::from_raw(camera));
    }
}

/// Minimum admissible scene depth.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plen_camera_min_depth(camera: *const PlenCamera, out: *mut f64) -> PlenStatus {
    guard(|| {
        let d = core(deref(camera)?.0.min_depth())?;
        write_out(out, d)
    })
}

// scene

/// Sphere with the coordinate RGB texture of spatial frequency `frequency`
/// (rad/m).
///
/// # Safety
/// `center` must be null or point to 3 doubles; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn plen_scene_sphere(center: *const f64, radius: f64, frequency: f64, out: *mut *mut PlenScene) -> PlenStatus {
    guard(|| {
        let c = read3(center)?;
        if out.is_null() {
            return Err(PLEN_ERR_NULL);
        }
        let s = core(SceneModel::sphere(c, radius, BrightnessMap::CoordinateRgb { frequency }))?;
        write_out(out, Box::into_raw(Box::new(PlenScene(s))))
    })
}

/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plen_scene_free(scene: *mut PlenScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Unsigned distance from `point` (3 doubles) to the scene surface.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plen_scene_point_distance(scene: *const PlenScene, point: *const f64, out: *mut f64) -> PlenStatus {
    guard(|| {
        let s = deref(scene)?;
        let p = read3(point)?;
        write_out(out, s.0.point_distance(&p))
    })
}

// trajectory

/// Lissajous path; each argument points to 3 doubles (amplitudes in metres,
/// angular frequencies in rad/frame, phases in rad, centre in metres).
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plen_path_new(
    amplitudes: *const f64,
    frequencies: *const f64,
    phases: *const f64,
    center: *const f64,
    out: *mut *mut PlenPath,
) -> PlenStatus {
    guard(|| {
        let (a, w, p, c) = (read3(amplitudes)?, read3(frequencies)?, read3(phases)?, read3(center)?);
        if out.is_null() {
            return Err(PLEN_ERR_NULL);
        }
        let path = core(LissajousPath::new(a, w, p, c))?;
        write_out(out, Box::into_raw(Box::new(PlenPath(path))))
    })
}

/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plen_path_free(path: *mut PlenPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Outward-facing camera pose at frame `t`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plen_path_pose_at(path: *const PlenPath, t: f64, out: *mut PlenPose) -> PlenStatus {
    guard(|| {
        let pose = core(deref(path)?.0.pose_at(t))?;
        write_out(out, from_pose(&pose))
    })
}

// light fields

/// Ray-traces one light-field frame.
///
/// # Safety
/// Pointers must be null or valid handles/structs.
#[no_mangle]
pub unsafe extern "C" fn plen_render(
    scene: *const PlenScene,
    camera: *const PlenCamera,
    pose: *const PlenPose,
    out: *mut *mut PlenLightField,
) -> PlenStatus {
    guard(|| {
        let (s, c) = (deref(scene)?, deref(camera)?);
        let pose = to_pose(deref(pose)?)?;
        if out.is_null() {
            return Err(PLEN_ERR_NULL);
        }
        let lf = core(render(&s.0, &c.0, &pose))?;
        write_out(out, Box::into_raw(Box::new(PlenLightField(lf))))
    })
}

/// # Safety
/// `lf` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plen_light_field_free(lf: *mut PlenLightField) {
    if !lf.is_null() {
        drop(Box::from_raw(lf));
    }
}

/// Image size in pixels.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plen_light_field_dims(lf: *const PlenLightField, rows: *mut usize, cols: *mut usize) -> PlenStatus {
    guard(|| {
        let (r, c) = deref(lf)?.0.dims();
        write_out(rows, r)?;
        write_out(cols, c)
    })
}

/// Copies the image as row-major interleaved RGB doubles into `buf`, which
/// must hold `3 * rows * cols` values.
///
/// # Safety
/// `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn plen_light_field_copy_rgb(lf: *const PlenLightField, buf: *mut f64, len: usize) -> PlenStatus {
    guard(|| {
        let data = deref(lf)?.0.data();
        if buf.is_null() {
            return Err(PLEN_ERR_NULL);
        }
        if len < 3 * data.len() {
            return Err(PLEN_ERR_ARGUMENT);
        }
        let dst = std::slice::from_raw_parts_mut(buf, 3 * data.len());
        for (k, c) in data.iter().enumerate() {
            dst[3 * k..3 * k + 3].copy_from_slice(c.as_slice());
        }
        Ok(())
    })
}

// point clouds

/// Cloud from `n` points given as `3n` doubles.
///
/// # Safety
/// `points` must be valid for `3n` reads (or null when `n == 0`).
#[no_mangle]
pub unsafe extern "C" fn plen_cloud_new(points: *const f64, n: usize, out: *mut *mut PlenCloud) -> PlenStatus {
    guard(|| {
        if out.is_null() || (points.is_null() && n > 0) {
            return Err(PLEN_ERR_NULL);
        }
        let pts = if n == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(points, 3 * n)
                .chunks_exact(3)
                .map(|c| Vec3::new(c[0], c[1], c[2]))
                .collect()
        };
        write_out(out, Box::into_raw(Box::new(PlenCloud(PointEstimateCloud::new(pts)))))
    })
}

/// # Safety
/// `cloud` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plen_cloud_free(cloud: *mut PlenCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn plen_cloud_len(cloud: *const PlenCloud, out: *mut usize) -> PlenStatus {
    guard(|| write_out(out, deref(cloud)?.0.len()))
}

/// Copies the `3n` point coordinates into `buf`.
///
/// # Safety
/// `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn plen_cloud_points(cloud: *const PlenCloud, buf: *mut f64, len: usize) -> PlenStatus {
    guard(|| {
        let pts = deref(cloud)?.0.points();
        if buf.is_null() {
            return Err(PLEN_ERR_NULL);
        }
        if len < 3 * pts.len() {
            return Err(PLEN_ERR_ARGUMENT);
        }
        let dst = std::slice::from_raw_parts_mut(buf, 3 * pts.len());
        for (k, p) in pts.iter().enumerate() {
            dst[3 * k..3 * k + 3].copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// Per-point status codes (`PLEN_POINT_*`) and cumulative update counts of
/// the last step; either buffer may be null to skip it.
///
/// # Safety
/// Non-null buffers must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn plen_cloud_status(cloud: *const PlenCloud, status: *mut i32, updates: *mut u32, len: usize) -> PlenStatus {
    guard(|| {
        let c = &deref(cloud)?.0;
        if len < c.len() {
            return Err(PLEN_ERR_ARGUMENT);
        }
        if !status.is_null() {
            let dst = std::slice::from_raw_parts_mut(status, c.len());
            for (d, s) in dst.iter_mut().zip(c.status()) {
                *d = point_status_code(s);
            }
        }
        if !updates.is_null() {
            std::slice::from_raw_parts_mut(updates, c.len()).copy_from_slice(c.update_counts());
        }
        Ok(())
    })
}

/// One observer step of the cloud in place with gain `gain`, using the
/// light field captured at `pose`.
///
/// # Safety
/// Pointers must be null or valid handles/structs.
#[no_mangle]
pub unsafe extern "C" fn plen_cloud_step(
    cloud: *mut PlenCloud,
    camera: *const PlenCamera,
    lf: *const PlenLightField,
    pose: *const PlenPose,
    gain: f64,
) -> PlenStatus {
    guard(|| {
        let cloud = cloud.as_mut().ok_or(PLEN_ERR_NULL)?;
        let (cam, lf) = (deref(camera)?, deref(lf)?);
        let pose = to_pose(deref(pose)?)?;
        let cfg = ObserverConfig::with_gain(gain);
        core(cfg.validate())?;
        cloud.0 = step(&cloud.0, &pose, &cam.0, &lf.0, &cfg);
        Ok(())
    })
}
