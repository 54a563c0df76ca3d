//! Tiled light-field images and the ray-traced renderer.
//!
//! Layout: the subimage of lenslet `(i, j)` occupies rows `[i·m, (i+1)·m)` and
//! columns `[j·n, (j+1)·n)`; subimage pixel `(u, v)` is row `i·m + u`, column
//! `j·n + v`, and sits at retinal position
//! `p_ℓ + s_p · ((u, v) − ((m−1)/2, (n−1)/2))`.

use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::camera::{LensletId, PlenopticCamera, Vec2};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::scene::SceneModel;
use crate::Rgb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Colour written where the refracted ray misses the scene.
    pub miss_colour: Rgb,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            miss_colour: Rgb::zeros(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightField {
    camera: PlenopticCamera,
    rows: usize,
    cols: usize,
    data: Vec<Rgb>,
    in_disc: Vec<bool>,
    missed: Vec<bool>,
}

impl LightField {
    /// Blank light field (everything black, mask from the camera geometry).
    pub fn blank(camera: &PlenopticCamera) -> Self {
        let (big_m, big_n) = camera.lenslet_counts();
        let (m, n) = camera.subimage_counts();
        let (rows, cols) = (big_m * m, big_n * n);
        let mut in_disc = vec![false; rows * cols];
        for l in camera.lenslets() {
            for u in 0..m {
                for v in 0..n {
                    in_disc[(l.i * m + u) * cols + l.j * n + v] = camera.in_subimage(&l, &camera.pixel_position(&l, u, v));
                }
            }
        }
        Self {
            camera: camera.clone(),
            rows,
            cols,
            data: vec![Rgb::zeros(); rows * cols],
            in_disc,
            missed: vec![false; rows * cols],
        }
    }

    pub fn camera(&self) -> &PlenopticCamera {
        &self.camera
    }

    /// `(rows, cols)` = `(M·m, N·n)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[Rgb] {
        &self.data
    }

    fn index(&self, l: &LensletId, u: usize, v: usize) -> usize {
        let (m, n) = self.camera.subimage_counts();
        (l.i * m + u) * self.cols + l.j * n + v
    }

    pub fn pixel(&self, l: &LensletId, u: usize, v: usize) -> Rgb {
        self.data[self.index(l, u, v)]
    }

    pub fn set_pixel(&mut self, l: &LensletId, u: usize, v: usize, c: Rgb) {
        let k = self.index(l, u, v);
        self.data[k] = c;
    }

    /// Pixel lies strictly inside its lenslet's subimage disc.
    pub fn in_mask(&self, l: &LensletId, u: usize, v: usize) -> bool {
        self.in_disc[self.index(l, u, v)]
    }

    pub fn missed(&self, l: &LensletId, u: usize, v: usize) -> bool {
        self.missed[self.index(l, u, v)]
    }

    pub fn miss_count(&self) -> usize {
        self.missed.iter().filter(|&&m| m).count()
    }

    fn usable(&self, l: &LensletId, u: usize, v: usize) -> bool {
        let k = self.index(l, u, v);
        self.in_disc[k] && !self.missed[k]
    }

    /// Colour at retinal position `q` (camera-frame x, y) within the
    /// subimage of `l`, interpolated from that subimage's usable pixels only.
    ///
    /// Bilinear over the enclosing 2×2 cell of pixel centres; cell corners
    /// outside the mask take values extrapolated from the usable pixels.
    pub fn sample(&self, l: &LensletId, q: &Vec2) -> Result<Rgb> {
        if !self.camera.in_subimage(l, q) {
            return Err(Error::OutOfSubimage { i: l.i, j: l.j });
        }
        let (m, n) = self.camera.subimage_counts();
        let c = self.camera.central_pixel(l);
        let s = self.camera.pixel_pitch();
        let x = (q.x - c.x) / s + 0.5 * (m as f64 - 1.0);
        let y = (q.y - c.y) / s + 0.5 * (n as f64 - 1.0);

        let cell = |t: f64, len: usize| -> (usize, usize, f64) {
            if len == 1 {
                return (0, 0, 0.0);
            }
            let base = (t.floor().max(0.0) as usize).min(len - 2);
            (base, base + 1, t - base as f64)
        };
        let (u0, u1, tx) = cell(x, m);
        let (v0, v1, ty) = cell(y, n);

        let corner = |u: usize, v: usize| -> Result<Rgb> {
            if self.usable(l, u, v) {
                Ok(self.pixel(l, u, v))
            } else {
                self.extrapolate(l, u, v).ok_or(Error::OutOfSubimage { i: l.i, j: l.j })
            }
        };
        let lerp = |a: Rgb, b: Rgb, t: f64| a + (b - a) * t;
        let colour = lerp(
            lerp(corner(u0, v0)?, corner(u1, v0)?, tx),
            lerp(corner(u0, v1)?, corner(u1, v1)?, tx),
            ty,
        );
        Ok(colour.map(|v| v.clamp(0.0, 1.0)))
    }

    /// Stand-in value for an unusable pixel: the least-squares plane through
    /// the usable pixels of its 5×5 neighbourhood, evaluated at the pixel. It
    /// depends only on the pixel, so sampling stays continuous across cells.
    fn extrapolate(&self, l: &LensletId, u: usize, v: usize) -> Option<Rgb> {
        let (m, n) = self.camera.subimage_counts();
        let mut ata = Matrix3::zeros();
        let mut atb = Matrix3::zeros();
        let mut base: Option<(i64, Rgb)> = None;
        for uu in u.saturating_sub(2)..(u + 3).min(m) {
            for vv in v.saturating_sub(2)..(v + 3).min(n) {
                if !self.usable(l, uu, vv) {
                    continue;
                }
                let (du, dv) = (uu as i64 - u as i64, vv as i64 - v as i64);
                let c = self.pixel(l, uu, vv);
                // offsets relative to the nearest usable pixel keep flat
                // patches exact
                let d2 = du * du + dv * dv;
                if base.is_none_or(|(bd, _)| d2 < bd) {
                    base = Some((d2, c));
                }
                let row = Vector3::new(1.0, du as f64, dv as f64);
                ata += row * row.transpose();
                atb += row * c.transpose();
            }
        }
        let (_, base) = base?;
        if ata.determinant().abs() < 1e-9 {
            return Some(base);
        }
        let sum_row = Vector3::new(ata[(0, 0)], ata[(0, 1)], ata[(0, 2)]);
        let atb = atb - sum_row * base.transpose();
        let coef = ata.try_inverse()? * atb;
        Some(base + coef.row(0).transpose())
    }

    /// Writes the tiled image as an 8-bit RGB PNG.
    pub fn write_png(&self, path: &Path) -> Result<()> {
        let img = image::RgbImage::from_fn(self.cols as u32, self.rows as u32, |x, y| {
            image::Rgb(crate::ply::colour_to_u8(&self.data[y as usize * self.cols + x as usize]))
        });
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    /// Plain-text `key = value` sidecar describing the frame.
    pub fn write_metadata<W: Write>(&self, out: &mut W, pose: &Pose, frame: usize) -> Result<()> {
        let i = self.camera.intrinsics();
        let t = pose.translation();
        let q = pose.rotation().quaternion();
        writeln!(out, "frame = {frame}")?;
        writeln!(out, "layout = lenslet_major")?;
        writeln!(out, "image_rows = {}", self.rows)?;
        writeln!(out, "image_cols = {}", self.cols)?;
        writeln!(out, "focal_length_m = {}", i.focal_length_m)?;
        writeln!(out, "lens_to_pupilar_m = {}", i.lens_to_pupilar_m)?;
        writeln!(out, "pupilar_to_retinal_m = {}", i.pupilar_to_retinal_m)?;
        writeln!(out, "aperture_radius_m = {}", i.aperture_radius_m)?;
        writeln!(out, "pixel_pitch_m = {}", i.pixel_pitch_m)?;
        writeln!(out, "lenslet_pitch_m = {}", i.lenslet_pitch_m)?;
        writeln!(out, "lenslet_rows = {}", i.lenslet_rows)?;
        writeln!(out, "lenslet_cols = {}", i.lenslet_cols)?;
        writeln!(out, "subimage_rows = {}", i.subimage_rows)?;
        writeln!(out, "subimage_cols = {}", i.subimage_cols)?;
        writeln!(out, "position_m = {} {} {}", t.x, t.y, t.z)?;
        writeln!(out, "quaternion_wxyz = {} {} {} {}", q.w, q.i, q.j, q.k)?;
        writeln!(out, "missed_pixels = {}", self.miss_count())?;
        Ok(())
    }
}

/// World-frame ray that a sensor pixel at retinal position `q` receives
/// through lenslet `l`: traced back through the lenslet to the main lens and
/// refracted with the inverse thin-lens map.
pub fn pixel_ray(camera: &PlenopticCamera, pose: &Pose, l: &LensletId, q: &Vec2) -> Result<(Vec3, Vec3)> {
    let big_d = camera.lens_to_pupilar();
    let d = camera.pupilar_to_retinal();
    let q3 = Vec3::new(q.x, q.y, -(big_d + d));
    let l3 = l.position3(big_d);
    let zeta = q3 + (l3 - q3) * ((big_d + d) / d);
    let conj = camera.thin_lens_preimage(&l3)?;
    let mut dir = (conj - zeta).normalize();
    if dir.z < 0.0 {
        dir = -dir;
    }
    Ok((pose.transform_point(&zeta), pose.transform_vector(&dir)))
}

/// Ray-traces one frame. Pixels outside their subimage disc are black;
/// pixels whose ray misses the scene get `opts.miss_colour` and are flagged.
pub fn render_with(scene: &SceneModel, camera: &PlenopticCamera, pose: &Pose, opts: &RenderOptions) -> Result<LightField> {
    let mut lf = LightField::blank(camera);
    let (m, n) = camera.subimage_counts();
    let cols = lf.cols;
    let in_disc = &lf.in_disc;
    let rows: Vec<(Vec<Rgb>, Vec<bool>)> = (0..lf.rows)
        .into_par_iter()
        .map(|row| -> Result<(Vec<Rgb>, Vec<bool>)> {
            let (i, u) = (row / m, row % m);
            let mut colours = vec![Rgb::zeros(); cols];
            let mut missed = vec![false; cols];
            for col in 0..cols {
                if !in_disc[row * cols + col] {
                    continue;
                }
                let (j, v) = (col / n, col % n);
                let l = camera.lenslet(i, j).expect("grid index");
                let q = camera.pixel_position(&l, u, v);
                let (origin, dir) = pixel_ray(camera, pose, &l, &q)?;
                match scene.intersect_ray(&origin, &dir) {
                    Some(hit) => colours[col] = scene.colour(&hit.point),
                    None => {
                        colours[col] = opts.miss_colour;
                        missed[col] = true;
                    }
                }
            }
            Ok((colours, missed))
        })
        .collect::<Result<_>>()?;
    for (row, (colours, missed)) in rows.into_iter().enumerate() {
        lf.data[row * cols..(row + 1) * cols].copy_from_slice(&colours);
        lf.missed[row * cols..(row + 1) * cols].copy_from_slice(&missed);
    }
    Ok(lf)
}

pub fn render(scene: &SceneModel, camera: &PlenopticCamera, pose: &Pose) -> Result<LightField> {
    render_with(scene, camera, pose, &RenderOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use crate::scene::BrightnessMap;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;

    fn setup() -> (SceneModel, PlenopticCamera, Pose) {
        let scene = SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::CoordinateRgb { frequency: 6.0 }).unwrap();
        let cam = PlenopticCamera::new(Intrinsics::default()).unwrap();
        let pose = Pose::new(
            UnitQuaternion::from_euler_angles(0.3, -0.2, 0.7),
            Vec3::new(0.1, -0.2, 0.15),
        );
        (scene, cam, pose)
    }

    #[test]
    fn inverse_thin_lens_is_an_inverse() {
        let (_, cam, _) = setup();
        for q in [Vec3::new(0.01, -0.02, -0.06), Vec3::new(-0.3, 0.1, -0.0375), Vec3::new(0.0, 0.0, 0.4)] {
            let p = cam.thin_lens_preimage(&q).unwrap();
            assert_relative_eq!(cam.thin_lens_image(&p).unwrap(), q, epsilon = 1e-12);
            let back = cam.thin_lens_preimage(&cam.thin_lens_image(&q).unwrap()).unwrap();
            assert_relative_eq!(back, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn central_pixels_see_the_distance_map() {
        let (scene, cam, pose) = setup();
        let lf = render(&scene, &cam, &pose).unwrap();
        let (m, n) = cam.subimage_counts();
        for l in cam.lenslets() {
            let depth = scene.distance_map(&pose, &cam, &l).unwrap();
            let p = pose.translation() + pose.transform_vector(&cam.direction(&l)) * depth;
            let got = lf.pixel(&l, m / 2, n / 2);
            assert_relative_eq!(got, scene.colour(&p), epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_scene_and_mask() {
        let (scene, cam, pose) = setup();
        let grey = scene.with_brightness(BrightnessMap::Constant { rgb: [0.5; 3] });
        let lf = render(&grey, &cam, &pose).unwrap();
        let (m, n) = cam.subimage_counts();
        let mut inside = 0;
        for l in cam.lenslets() {
            for u in 0..m {
                for v in 0..n {
                    let d = (cam.pixel_position(&l, u, v) - cam.central_pixel(&l).xy()).norm();
                    assert_eq!(lf.in_mask(&l, u, v), d < cam.subimage_radius());
                    if lf.in_mask(&l, u, v) {
                        assert_eq!(lf.pixel(&l, u, v), Rgb::repeat(0.5));
                        inside += 1;
                    } else {
                        assert_eq!(lf.pixel(&l, u, v), Rgb::zeros());
                    }
                }
            }
        }
        assert!(inside > 0);
        assert_eq!(lf.miss_count(), 0);
    }

    #[test]
    fn render_is_deterministic() {
        let (scene, cam, pose) = setup();
        let a = render(&scene, &cam, &pose).unwrap();
        let b = render(&scene, &cam, &pose).unwrap();
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.map(f64::to_bits) == y.map(f64::to_bits)));
    }

    #[test]
    fn missed_rays_use_sentinel() {
        let (_, cam, _) = setup();
        let tiny = SceneModel::sphere(Vec3::new(0.0, 0.0, -3.0), 0.01, BrightnessMap::Constant { rgb: [1.0; 3] }).unwrap();
        let opts = RenderOptions { miss_colour: Rgb::new(1.0, 0.0, 1.0) };
        let lf = render_with(&tiny, &cam, &Pose::from_translation(Vec3::new(0.5, 0.0, 0.0)), &opts).unwrap();
        let l = cam.central_lenslet();
        assert!(lf.missed(&l, 4, 4));
        assert_eq!(lf.pixel(&l, 4, 4), Rgb::new(1.0, 0.0, 1.0));
        assert_eq!(lf.miss_count(), lf.in_disc.iter().filter(|&&b| b).count());
    }

    #[test]
    fn sample_examples() {
        let (_, cam, _) = setup();
        let mut lf = LightField::blank(&cam);
        let l = cam.lenslet(4, 9).unwrap();
        let c1 = Rgb::new(0.1, 0.2, 0.3);
        let c2 = Rgb::new(0.5, 0.9, 0.0);
        lf.set_pixel(&l, 4, 4, c1);
        lf.set_pixel(&l, 4, 5, c2);
        let p1 = cam.pixel_position(&l, 4, 4);
        let p2 = cam.pixel_position(&l, 4, 5);
        assert_eq!(lf.sample(&l, &p1).unwrap(), c1);
        assert_relative_eq!(lf.sample(&l, &((p1 + p2) * 0.5)).unwrap(), (c1 + c2) * 0.5, epsilon = 1e-12);
        let outside = cam.central_pixel(&l).xy() + Vec2::new(cam.subimage_radius() * 1.01, 0.0);
        assert!(matches!(lf.sample(&l, &outside), Err(Error::OutOfSubimage { i: 4, j: 9 })));
    }

    #[test]
    fn sample_reproduces_affine_images_near_the_rim() {
        // an image that is affine in pixel coordinates must be reproduced
        // exactly anywhere in the disc, including cells clipped by the mask
        let (_, cam, _) = setup();
        let mut lf = LightField::blank(&cam);
        let l = cam.lenslet(7, 7).unwrap();
        let (m, n) = cam.subimage_counts();
        let f = |x: f64, y: f64| Rgb::new(0.5 + 0.03 * x - 0.02 * y, 0.4 + 0.01 * y, 0.5 - 0.02 * x);
        for u in 0..m {
            for v in 0..n {
                if lf.in_mask(&l, u, v) {
                    lf.set_pixel(&l, u, v, f(u as f64, v as f64));
                }
            }
        }
        let c = cam.central_pixel(&l).xy();
        let s = cam.pixel_pitch();
        for k in 0..360 {
            let ang = (k as f64).to_radians();
            for frac in [0.2, 0.6, 0.9, 0.999] {
                let q = c + Vec2::new(ang.cos(), ang.sin()) * (frac * cam.subimage_radius());
                let x = (q.x - c.x) / s + 0.5 * (m as f64 - 1.0);
                let y = (q.y - c.y) / s + 0.5 * (n as f64 - 1.0);
                assert_relative_eq!(lf.sample(&l, &q).unwrap(), f(x, y), epsilon = 1e-12);
            }
        }
    }
}
