//! Convex Lambertian scenes: the surface, its brightness map, ray casting and
//! point-to-surface distances.
//!
//! The camera sits inside the surface looking out, so the environment is the
//! interior of the sphere or mesh and the scene is its boundary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::camera::{LensletId, PlenopticCamera};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::Rgb;

const RAY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&k| k >= vertices.len())) {
            return Err(Error::InvalidScene(format!("face {f:?} references a missing vertex")));
        }
        Ok(Self { vertices, faces })
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / self.vertices.len().max(1) as f64
    }

    fn face_normal(&self, f: &[usize; 3]) -> Vec3 {
        let [a, b, c] = f.map(|k| self.vertices[k]);
        (b - a).cross(&(c - a))
    }

    /// Every undirected edge is shared by exactly two faces with opposite
    /// orientation.
    pub fn is_closed(&self) -> bool {
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        edges.iter().all(|(&(a, b), &n)| n == 1 && edges.get(&(b, a)) == Some(&1))
    }

    /// Closed, outward oriented, and every vertex lies on or inside every
    /// face's supporting half-space (tolerance `1e-9` relative to mesh size).
    pub fn is_convex(&self) -> bool {
        if self.faces.is_empty() || !self.is_closed() {
            return false;
        }
        let c = self.centroid();
        let scale = self.vertices.iter().map(|v| (v - c).norm()).fold(0.0, f64::max).max(1.0);
        let tol = 1e-9 * scale;
        self.faces.iter().all(|f| {
            let n = self.face_normal(f);
            let nn = n.norm();
            if nn == 0.0 {
                return false;
            }
            let n = n / nn;
            let a = self.vertices[f[0]];
            (a - c).dot(&n) > 0.0 && self.vertices.iter().all(|v| (v - a).dot(&n) <= tol)
        })
    }
}

/// Icosahedron with each face split into four `subdivisions` times, vertices
/// pushed onto the sphere.
pub fn make_icosphere(center: Vec3, radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.into_iter().map(|v| center + v * radius).collect();
    TriangleMesh { vertices, faces }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Sphere { center: Vec3, radius: f64 },
    Mesh(TriangleMesh),
}

/// Lambertian colouring of the surface: a function of position only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BrightnessMap {
    /// Smooth trigonometric colour field over world coordinates; `frequency`
    /// is the spatial angular frequency in rad/m.
    CoordinateRgb { frequency: f64 },
    /// Affine colour ramp centred on a fixed anchor point: colour
    /// `0.5 + (p − anchor)/scale`, so the colour distance to the anchor is
    /// exactly `‖p − anchor‖/scale` while no channel clips (every point within
    /// `scale/2` of the anchor in each coordinate).
    RadialMonotone { anchor: [f64; 3], scale: f64 },
    Constant { rgb: [f64; 3] },
}

const COORD_DIRS: [[f64; 3]; 3] = [[1.0, 0.6, 0.2], [0.2, 1.0, 0.6], [0.6, 0.2, 1.0]];
const COORD_PHASES: [f64; 3] = [0.0, 2.1, 4.2];

impl BrightnessMap {
    pub fn eval(&self, p: &Vec3) -> Rgb {
        let rgb = match *self {
            BrightnessMap::CoordinateRgb { frequency } => Rgb::from_fn(|k, _| {
                let dir = Vec3::from(COORD_DIRS[k]).normalize();
                0.5 + 0.5 * (frequency * dir.dot(p) + COORD_PHASES[k]).sin()
            }),
            BrightnessMap::RadialMonotone { anchor, scale } => {
                Rgb::repeat(0.5) + (p - Vec3::from(anchor)) / scale
            }
            BrightnessMap::Constant { rgb } => Rgb::from(rgb),
        };
        rgb.map(|c| c.clamp(0.0, 1.0))
    }

    /// A Lipschitz constant of the map in the Euclidean colour norm.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            BrightnessMap::CoordinateRgb { frequency } => 0.5 * frequency.abs() * 3f64.sqrt(),
            BrightnessMap::RadialMonotone { scale, .. } => 1.0 / scale.abs(),
            BrightnessMap::Constant { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub point: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneModel {
    surface: Surface,
    brightness: BrightnessMap,
}

impl SceneModel {
    pub fn sphere(center: Vec3, radius: f64, brightness: BrightnessMap) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidScene(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self {
            surface: Surface::Sphere { center, radius },
            brightness,
        })
    }

    /// Mesh scenes are not checked for convexity here; see
    /// [`SceneModel::is_convex`].
    pub fn mesh(mesh: TriangleMesh, brightness: BrightnessMap) -> Self {
        Self {
            surface: Surface::Mesh(mesh),
            brightness,
        }
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn brightness(&self) -> &BrightnessMap {
        &self.brightness
    }

    pub fn with_brightness(&self, brightness: BrightnessMap) -> Self {
        Self {
            surface: self.surface.clone(),
            brightness,
        }
    }

    pub fn colour(&self, p: &Vec3) -> Rgb {
        self.brightness.eval(p)
    }

    pub fn is_convex(&self) -> bool {
        match &self.surface {
            Surface::Sphere { .. } => true,
            Surface::Mesh(m) => m.is_convex(),
        }
    }

    /// First surface crossing along `origin + t dir` with `t > 1e-9`.
    pub fn intersect_ray(&self, origin: &Vec3, dir: &Vec3) -> Option<RayHit> {
        let t = match &self.surface {
            Surface::Sphere { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                [-b - s, -b + s].into_iter().find(|&t| t > RAY_EPS)?
            }
            Surface::Mesh(mesh) => mesh
                .faces
                .iter()
                .filter_map(|f| ray_triangle(origin, dir, f.map(|k| mesh.vertices[k])))
                .filter(|&t| t > RAY_EPS)
                .min_by(f64::total_cmp)?,
        };
        Some(RayHit {
            t,
            point: origin + dir * t,
        })
    }

    /// Distance from the optical centre to the scene along the world-frame
    /// direction of `η(ℓ)`.
    pub fn distance_map(&self, pose: &Pose, camera: &PlenopticCamera, l: &LensletId) -> Result<f64> {
        let dir = pose.transform_vector(&camera.direction(l));
        self.intersect_ray(&pose.translation(), &dir)
            .map(|h| h.t)
            .ok_or(Error::NoIntersection)
    }

    /// Unsigned distance from `p` to the surface.
    pub fn point_distance(&self, p: &Vec3) -> f64 {
        match &self.surface {
            Surface::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Surface::Mesh(mesh) => mesh
                .faces
                .iter()
                .map(|f| (p - closest_point_on_triangle(p, f.map(|k| mesh.vertices[k]))).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Strictly inside the environment (the open region bounded by the surface).
    pub fn contains(&self, p: &Vec3) -> bool {
        match &self.surface {
            Surface::Sphere { center, radius } => (p - center).norm() < *radius,
            Surface::Mesh(mesh) => {
                let c = mesh.centroid();
                mesh.faces.iter().all(|f| {
                    let n = mesh.face_normal(f).normalize();
                    let a = mesh.vertices[f[0]];
                    // outward normal by convexity
                    let n = if (a - c).dot(&n) >= 0.0 { n } else { -n };
                    (p - a).dot(&n) < 0.0
                })
            }
        }
    }

    /// The open ball `B_radius(center)` lies inside the environment.
    pub fn contains_ball(&self, center: &Vec3, radius: f64) -> bool {
        match &self.surface {
            Surface::Sphere { center: c, radius: r } => (center - c).norm() + radius <= *r,
            Surface::Mesh(mesh) => {
                let c = mesh.centroid();
                mesh.faces.iter().all(|f| {
                    let n = mesh.face_normal(f).normalize();
                    let a = mesh.vertices[f[0]];
                    let n = if (a - c).dot(&n) >= 0.0 { n } else { -n };
                    (a - center).dot(&n) >= radius
                })
            }
        }
    }
}

/// Möller–Trumbore; returns the ray parameter of the hit.
fn ray_triangle(origin: &Vec3, dir: &Vec3, [a, b, c]: [Vec3; 3]) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-15 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
fn closest_point_on_triangle(p: &Vec3, [a, b, c]: [Vec3; 3]) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Intrinsics;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn unit_sphere() -> SceneModel {
        SceneModel::sphere(Vec3::zeros(), 1.0, BrightnessMap::CoordinateRgb { frequency: 6.0 }).unwrap()
    }

    #[test]
    fn sphere_ray_examples() {
        let s = unit_sphere();
        let z = Vec3::z();
        let h = s.intersect_ray(&Vec3::zeros(), &z).unwrap();
        assert_relative_eq!(h.t, 1.0);
        assert_relative_eq!(h.point, z);
        let h = s.intersect_ray(&Vec3::new(0.0, 0.0, -2.0), &z).unwrap();
        assert_relative_eq!(h.t, 1.0);
        assert_relative_eq!(h.point, -z);
        assert!(s.intersect_ray(&Vec3::new(0.0, 0.0, 2.0), &z).is_none());
    }

    #[test]
    fn distance_map_examples() {
        let s = unit_sphere();
        let cam = PlenopticCamera::new(Intrinsics::default()).unwrap();
        let l = cam.central_lenslet();
        assert_relative_eq!(s.distance_map(&Pose::identity(), &cam, &l).unwrap(), 1.0);
        let pose = Pose::from_translation(Vec3::new(0.0, 0.0, 0.5));
        assert_relative_eq!(s.distance_map(&pose, &cam, &l).unwrap(), 0.5);

        // a single triangle off to the side is never hit
        let tri = TriangleMesh::new(
            vec![Vec3::new(5.0, 0.0, 1.0), Vec3::new(6.0, 0.0, 1.0), Vec3::new(5.0, 1.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let open = SceneModel::mesh(tri, BrightnessMap::Constant { rgb: [0.5; 3] });
        assert!(matches!(
            open.distance_map(&Pose::identity(), &cam, &l),
            Err(Error::NoIntersection)
        ));
    }

    #[test]
    fn icosphere_counts() {
        for (sub, v, f) in [(0, 12, 20), (1, 42, 80), (2, 162, 320), (3, 642, 1280)] {
            let m = make_icosphere(Vec3::zeros(), 1.0, sub);
            assert_eq!(m.vertices.len(), v);
            assert_eq!(m.faces.len(), f);
            // Euler characteristic of a closed sphere
            let edges = 3 * f / 2;
            assert_eq!(v as i64 - edges as i64 + f as i64, 2);
        }
    }

    #[test]
    fn icosphere_is_convex_and_on_sphere() {
        let c = Vec3::new(0.3, -1.0, 2.0);
        let m = make_icosphere(c, 2.5, 3);
        for v in &m.vertices {
            assert!(((v - c).norm() - 2.5).abs() < 1e-12 * 2.5);
        }
        assert!(m.is_closed());
        assert!(m.is_convex());
    }

    #[test]
    fn concave_mesh_fails_convexity() {
        let mut m = make_icosphere(Vec3::zeros(), 1.0, 1);
        m.vertices[0] *= 0.5;
        assert!(!m.is_convex());
        let mut flipped = make_icosphere(Vec3::zeros(), 1.0, 0);
        for f in &mut flipped.faces {
            f.swap(1, 2);
        }
        assert!(!flipped.is_convex());
    }

    #[test]
    fn point_distance_examples() {
        let s = unit_sphere();
        assert_relative_eq!(s.point_distance(&Vec3::zeros()), 1.0);
        assert_relative_eq!(s.point_distance(&Vec3::z()), 0.0);
        assert_relative_eq!(s.point_distance(&Vec3::new(0.0, 0.0, 3.0)), 2.0);
    }

    #[test]
    fn mesh_queries_agree_with_sphere() {
        let m = make_icosphere(Vec3::zeros(), 1.0, 4);
        let mesh = SceneModel::mesh(m, BrightnessMap::Constant { rgb: [0.2; 3] });
        let sphere = unit_sphere();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let dir = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let o = dir * rng.random_range(-0.5..0.5);
            let a = mesh.intersect_ray(&o, &dir).unwrap();
            let b = sphere.intersect_ray(&o, &dir).unwrap();
            // chord sag of a level-4 icosphere is well under 1%
            assert!((a.t - b.t).abs() < 5e-3);
            let p = dir * rng.random_range(0.0..3.0);
            assert!((mesh.point_distance(&p) - sphere.point_distance(&p)).abs() < 5e-3);
        }
        assert!(mesh.is_convex());
        assert!(mesh.contains(&Vec3::new(0.1, 0.2, 0.3)));
        assert!(!mesh.contains(&Vec3::new(0.0, 0.0, 1.5)));
        assert!(mesh.contains_ball(&Vec3::zeros(), 0.9));
        assert!(!mesh.contains_ball(&Vec3::zeros(), 1.0));
    }

    #[test]
    fn closest_point_matches_brute_force() {
        let tri = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.2, 0.9, 0.0)];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = Vec3::new(
                rng.random_range(-1.0..2.0),
                rng.random_range(-1.0..2.0),
                rng.random_range(-1.0..1.0),
            );
            let got = (p - closest_point_on_triangle(&p, tri)).norm();
            let mut best = f64::MAX;
            let n = 300;
            for a in 0..=n {
                for b in 0..=(n - a) {
                    let (u, v) = (a as f64 / n as f64, b as f64 / n as f64);
                    let q = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v;
                    best = best.min((p - q).norm());
                }
            }
            assert!(got <= best + 1e-12 && best - got < 5e-3);
        }
    }

    #[test]
    fn brightness_is_clamped_and_view_independent() {
        let b = BrightnessMap::CoordinateRgb { frequency: 40.0 };
        let p = Vec3::new(0.3, 0.2, 0.9);
        let c = b.eval(&p);
        assert!(c.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert_eq!(b.eval(&p), c);
        let k = BrightnessMap::Constant { rgb: [2.0, -1.0, 0.5] };
        assert_eq!(k.eval(&p), Rgb::new(1.0, 0.0, 0.5));
    }

    #[test]
    fn radial_monotone_satisfies_fixed_anchor_ordering() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
            Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize()
        };
        let anchor = sample(&mut rng);
        let b = BrightnessMap::RadialMonotone { anchor: anchor.into(), scale: 4.0 };
        let base = b.eval(&anchor);
        let mut checked = 0;
        while checked < 10_000 {
            let (x1, x2) = (sample(&mut rng), sample(&mut rng));
            let (d1, d2) = ((x1 - anchor).norm(), (x2 - anchor).norm());
            if (d1 - d2).abs() < 1e-9 {
                continue;
            }
            let (far, near) = if d1 > d2 { (x1, x2) } else { (x2, x1) };
            assert!((b.eval(&far) - base).norm() > (b.eval(&near) - base).norm() + 1e-12);
            checked += 1;
        }
    }
}
