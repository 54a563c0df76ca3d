//! Focused plenoptic camera model.
//!
//! Camera body frame: optical centre at the origin, principal axis `+z`,
//! lenslets on the pupilar plane `z = −D`, sensor on the retinal plane
//! `z = −(D + d)`. The lenslet grid is rectangular, uniformly pitched and
//! centred on the axis.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Plane, Vec3};

pub type Vec2 = Vector2<f64>;

/// Raw intrinsic parameters, as found in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    /// Main lens focal length `F`.
    pub focal_length_m: f64,
    /// Main lens to pupilar plane distance `D`.
    pub lens_to_pupilar_m: f64,
    /// Pupilar to retinal plane distance `d`.
    pub pupilar_to_retinal_m: f64,
    /// Main lens aperture radius `A`.
    pub aperture_radius_m: f64,
    /// Sensor pixel pitch `s_p` (metres per pixel).
    pub pixel_pitch_m: f64,
    pub lenslet_pitch_m: f64,
    /// Lenslet grid size `M × N`.
    pub lenslet_rows: usize,
    pub lenslet_cols: usize,
    /// Subimage size `m × n` in pixels.
    pub subimage_rows: usize,
    pub subimage_cols: usize,
}

impl Default for Intrinsics {
    /// Desk-scale camera: ~30° half field of view on the lenslet grid,
    /// non-overlapping 9×9 subimages, `D = F/2`.
    fn default() -> Self {
        let d = 0.0095;
        let big_d = 0.11;
        let a = 0.047;
        let v = d / big_d * a;
        Self {
            focal_length_m: 0.22,
            lens_to_pupilar_m: big_d,
            pupilar_to_retinal_m: d,
            aperture_radius_m: a,
            pixel_pitch_m: 2.0 * v / 9.0,
            lenslet_pitch_m: 0.009,
            lenslet_rows: 15,
            lenslet_cols: 15,
            subimage_rows: 9,
            subimage_cols: 9,
        }
    }
}

/// A lenslet of the grid: indices plus its centre on the pupilar plane
/// (camera-frame x, y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensletId {
    pub i: usize,
    pub j: usize,
    pub position: Vec2,
}

impl LensletId {
    /// Position embedded in the camera frame (on the pupilar plane).
    pub fn position3(&self, lens_to_pupilar: f64) -> Vec3 {
        Vec3::new(self.position.x, self.position.y, -lens_to_pupilar)
    }
}

/// One member of a visibility window: the lenslet and where the image point
/// lands on the retinal plane behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMember {
    pub lenslet: LensletId,
    pub projection: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityWindow {
    pub members: Vec<WindowMember>,
    /// Some lenslet position outside the populated grid would also have seen
    /// the image point.
    pub truncated: bool,
}

impl VisibilityWindow {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.members.iter().any(|m| m.lenslet.i == i && m.lenslet.j == j)
    }
}

/// Validated plenoptic camera intrinsics with derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PlenopticCamera {
    intr: Intrinsics,
    subimage_radius: f64,
    subimages_overlap: bool,
}

impl PlenopticCamera {
    pub fn new(intr: Intrinsics) -> Result<Self> {
        let positive = [
            ("focal_length_m", intr.focal_length_m),
            ("lens_to_pupilar_m", intr.lens_to_pupilar_m),
            ("pupilar_to_retinal_m", intr.pupilar_to_retinal_m),
            ("aperture_radius_m", intr.aperture_radius_m),
            ("pixel_pitch_m", intr.pixel_pitch_m),
            ("lenslet_pitch_m", intr.lenslet_pitch_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidIntrinsics(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("lenslet_rows", intr.lenslet_rows),
            ("lenslet_cols", intr.lenslet_cols),
            ("subimage_rows", intr.subimage_rows),
            ("subimage_cols", intr.subimage_cols),
        ] {
            if v == 0 {
                return Err(Error::InvalidIntrinsics(format!("{name} must be positive")));
            }
        }
        if intr.focal_length_m == intr.lens_to_pupilar_m {
            return Err(Error::InvalidIntrinsics(
                "focal length must differ from the lens-to-pupilar distance".into(),
            ));
        }
        let subimage_radius = intr.pupilar_to_retinal_m / intr.lens_to_pupilar_m * intr.aperture_radius_m;
        // neighbouring central pixels are one scaled pitch apart on the sensor
        let centre_spacing = intr.lenslet_pitch_m * (1.0 + intr.pupilar_to_retinal_m / intr.lens_to_pupilar_m);
        Ok(Self {
            intr,
            subimage_radius,
            subimages_overlap: centre_spacing < 2.0 * subimage_radius,
        })
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.intr
    }

    pub fn focal_length(&self) -> f64 {
        self.intr.focal_length_m
    }

    pub fn lens_to_pupilar(&self) -> f64 {
        self.intr.lens_to_pupilar_m
    }

    pub fn pupilar_to_retinal(&self) -> f64 {
        self.intr.pupilar_to_retinal_m
    }

    pub fn aperture(&self) -> f64 {
        self.intr.aperture_radius_m
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.intr.pixel_pitch_m
    }

    pub fn lenslet_pitch(&self) -> f64 {
        self.intr.lenslet_pitch_m
    }

    pub fn lenslet_counts(&self) -> (usize, usize) {
        (self.intr.lenslet_rows, self.intr.lenslet_cols)
    }

    pub fn subimage_counts(&self) -> (usize, usize) {
        (self.intr.subimage_rows, self.intr.subimage_cols)
    }

    /// `V = (d / D) A`.
    pub fn subimage_radius(&self) -> f64 {
        self.subimage_radius
    }

    /// Diagnostic: adjacent subimage discs intersect on the sensor.
    pub fn subimages_overlap(&self) -> bool {
        self.subimages_overlap
    }

    pub fn pupilar_plane(&self) -> Plane {
        Plane::z_const(-self.intr.lens_to_pupilar_m)
    }

    pub fn retinal_plane(&self) -> Plane {
        Plane::z_const(-(self.intr.lens_to_pupilar_m + self.intr.pupilar_to_retinal_m))
    }

    fn grid_origin(&self) -> Vec2 {
        let p = self.intr.lenslet_pitch_m;
        Vec2::new(
            -0.5 * (self.intr.lenslet_rows as f64 - 1.0) * p,
            -0.5 * (self.intr.lenslet_cols as f64 - 1.0) * p,
        )
    }

    fn grid_position(&self, i: i64, j: i64) -> Vec2 {
        self.grid_origin() + Vec2::new(i as f64, j as f64) * self.intr.lenslet_pitch_m
    }

    pub fn lenslet(&self, i: usize, j: usize) -> Option<LensletId> {
        (i < self.intr.lenslet_rows && j < self.intr.lenslet_cols).then(|| LensletId {
            i,
            j,
            position: self.grid_position(i as i64, j as i64),
        })
    }

    /// The lenslet nearest the optical axis (exactly on it for odd grid sizes).
    pub fn central_lenslet(&self) -> LensletId {
        self.lenslet(self.intr.lenslet_rows / 2, self.intr.lenslet_cols / 2)
            .expect("grid is non-empty")
    }

    pub fn lenslets(&self) -> impl Iterator<Item = LensletId> + '_ {
        (0..self.intr.lenslet_rows)
            .flat_map(move |i| (0..self.intr.lenslet_cols).map(move |j| self.lenslet(i, j).unwrap()))
    }

    pub fn lenslet_count(&self) -> usize {
        self.intr.lenslet_rows * self.intr.lenslet_cols
    }

    /// Nearest grid lenslet to a pupilar-plane position, or `None` when the
    /// position falls outside the grid footprint. Half-pitch ties round toward
    /// negative indices.
    pub fn nearest_lenslet(&self, pos: &Vec2) -> Option<LensletId> {
        let rel = (pos - self.grid_origin()) / self.intr.lenslet_pitch_m;
        let i = (rel.x - 0.5).ceil();
        let j = (rel.y - 0.5).ceil();
        if !(i >= 0.0 && j >= 0.0) {
            return None;
        }
        self.lenslet(i as usize, j as usize)
    }

    /// Unit direction from the lenslet through the optical centre, `η(ℓ)`.
    pub fn direction(&self, l: &LensletId) -> Vec3 {
        self.direction_at(&l.position)
    }

    fn direction_at(&self, pos: &Vec2) -> Vec3 {
        -Vec3::new(pos.x, pos.y, -self.intr.lens_to_pupilar_m).normalize()
    }

    /// Thin-lens conjugate `ι(P) = F / (F − P·ν) · P`.
    pub fn thin_lens_image(&self, p: &Vec3) -> Result<Vec3> {
        let f = self.intr.focal_length_m;
        let den = f - p.z;
        if den.abs() < 1e-12 * f {
            return Err(Error::AtFocalPlane);
        }
        Ok(p * (f / den))
    }

    /// Inverse thin-lens map `ι⁻¹(Q) = F Q / (F + Q·ν)`.
    pub fn thin_lens_preimage(&self, q: &Vec3) -> Result<Vec3> {
        let f = self.intr.focal_length_m;
        let den = f + q.z;
        if den.abs() < 1e-12 * f {
            return Err(Error::AtFocalPlane);
        }
        Ok(q * (f / den))
    }

    /// Signed distance `δ` along `η(ℓ)` from lenslet `ℓ` to the image of the
    /// scene point at distance `depth` along the same direction, so that
    /// `ℓ + δ η(ℓ) = ι(depth · η(ℓ))`.
    pub fn virtual_distance(&self, depth: f64, l: &LensletId) -> Result<f64> {
        self.virtual_distance_at(depth, &l.position)
    }

    fn virtual_distance_at(&self, depth: f64, pos: &Vec2) -> Result<f64> {
        let f = self.intr.focal_length_m;
        let eta = self.direction_at(pos);
        let den = f - depth * eta.z;
        if den.abs() < 1e-12 * f {
            return Err(Error::AtFocalPlane);
        }
        let l3 = Vec3::new(pos.x, pos.y, -self.intr.lens_to_pupilar_m);
        Ok(f * depth / den - l3.dot(&eta))
    }

    /// Projection of the image point `ℓ + δ η(ℓ)` through lenslet `ℓ'` onto
    /// the retinal plane.
    pub fn lenslet_project(&self, lp: &LensletId, delta: f64, l: &LensletId) -> Result<Vec3> {
        self.lenslet_project_at(&lp.position, delta, &l.position)
    }

    fn lenslet_project_at(&self, lp: &Vec2, delta: f64, l: &Vec2) -> Result<Vec3> {
        let big_d = self.intr.lens_to_pupilar_m;
        let eta = self.direction_at(l);
        let den = delta * eta.z;
        if den.abs() < 1e-12 {
            return Err(Error::DegenerateProjection);
        }
        let l3 = Vec3::new(l.x, l.y, -big_d);
        let lp3 = Vec3::new(lp.x, lp.y, -big_d);
        Ok((lp3 - l3 - eta * delta) * (self.intr.pupilar_to_retinal_m / den) + lp3)
    }

    /// Retinal image of the optical centre through `ℓ`.
    pub fn central_pixel(&self, l: &LensletId) -> Vec3 {
        self.central_pixel_at(&l.position)
    }

    fn central_pixel_at(&self, pos: &Vec2) -> Vec3 {
        let big_d = self.intr.lens_to_pupilar_m;
        let eta = self.direction_at(pos);
        Vec3::new(pos.x, pos.y, -big_d) - eta * (self.intr.pupilar_to_retinal_m / eta.z)
    }

    /// Retinal-plane (x, y) of pixel `(u, v)` in the subimage of `ℓ`.
    pub fn pixel_position(&self, l: &LensletId, u: usize, v: usize) -> Vec2 {
        let c = self.central_pixel(l);
        let (m, n) = self.subimage_counts();
        let s = self.intr.pixel_pitch_m;
        Vec2::new(
            c.x + s * (u as f64 - 0.5 * (m as f64 - 1.0)),
            c.y + s * (v as f64 - 0.5 * (n as f64 - 1.0)),
        )
    }

    /// Inside the circular subimage of `ℓ` (strictly closer than `V` to its
    /// central pixel).
    pub fn in_subimage(&self, l: &LensletId, q: &Vec2) -> bool {
        let c = self.central_pixel(l);
        (q - c.xy()).norm() < self.subimage_radius
    }

    /// Smallest `η·ν` over the populated grid, attained at the corner lenslets.
    pub fn min_axis_cosine(&self) -> f64 {
        let (m, n) = self.lenslet_counts();
        [(0, 0), (m - 1, 0), (0, n - 1), (m - 1, n - 1)]
            .iter()
            .map(|&(i, j)| self.direction(&self.lenslet(i, j).unwrap()).z)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Δ_min = max(F, DF/(F − D)) / inf η·ν`. Requires `F > D`.
    pub fn min_depth(&self) -> Result<f64> {
        let f = self.intr.focal_length_m;
        let big_d = self.intr.lens_to_pupilar_m;
        if f <= big_d {
            return Err(Error::InvalidIntrinsics(format!(
                "minimum depth needs F > D (F = {f}, D = {big_d})"
            )));
        }
        Ok(f.max(big_d * f / (f - big_d)) / self.min_axis_cosine())
    }

    /// Lenslets whose subimage contains the image of the point at distance
    /// `depth` along `η(ℓ)`, clamped to the populated grid.
    pub fn visibility_window(&self, depth: f64, l: &LensletId) -> Result<VisibilityWindow> {
        let min_depth = self.min_depth()?;
        if !(depth > min_depth) {
            return Err(Error::BelowMinDepth { depth, min_depth });
        }
        let delta = self.virtual_distance(depth, l)?;
        let q = self.thin_lens_image(&(self.direction(l) * depth))?;
        // the window is the aperture disc projected through the image point
        // onto the pupilar plane; bound the lattice search by its radius
        let radius = self.intr.aperture_radius_m * (1.0 + self.intr.lens_to_pupilar_m / q.z).abs();
        let reach = (radius / self.intr.lenslet_pitch_m).ceil() as i64 + 1;
        let (rows, cols) = (self.intr.lenslet_rows as i64, self.intr.lenslet_cols as i64);
        let v = self.subimage_radius;

        let mut members = Vec::new();
        let mut truncated = false;
        for i in (l.i as i64 - reach)..=(l.i as i64 + reach) {
            for j in (l.j as i64 - reach)..=(l.j as i64 + reach) {
                let pos = self.grid_position(i, j);
                let phi = self.lenslet_project_at(&pos, delta, &l.position)?;
                let offset = (phi.xy() - self.central_pixel_at(&pos).xy()).norm();
                if offset < v {
                    if i < 0 || j < 0 || i >= rows || j >= cols {
                        truncated = true;
                    } else {
                        members.push(WindowMember {
                            lenslet: LensletId { i: i as usize, j: j as usize, position: pos },
                            projection: phi.xy(),
                        });
                    }
                }
            }
        }
        Ok(VisibilityWindow { members, truncated })
    }
}
