//! Pyramidal frusta: construction from a camera pose, triangulation with
//! outward normals, divergence-theorem volume, and the unbounded-scene
//! contraction applied to vertices.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure_finite, Error, Result};
use crate::numeric::CompensatedSum;
use crate::{Mat3, Vec3};

/// Relative slab thickness below which `t_far - t_near` counts as zero.
pub const MIN_RELATIVE_SLAB: f64 = 1e-9;

const ORTHONORMAL_TOL: f64 = 1e-12;

/// Camera pose `[R | o]` plus the pixel footprint.
///
/// `rotation` maps camera-frame directions to world directions, `origin` is
/// the optical center and `omega` is the full pixel side length on the image
/// plane at unit focal distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    rotation: Mat3,
    origin: Vec3,
    omega: f64,
}

impl CameraPose {
    pub fn new(rotation: Mat3, origin: Vec3, omega: f64) -> Result<Self> {
        ensure_finite("rotation", rotation.as_slice())?;
        ensure_finite("origin", origin.as_slice())?;
        ensure_finite("omega", &[omega])?;
        if omega <= 0.0 {
            return Err(Error::Domain(format!("pixel width must be positive, got {omega}")));
        }
        let gram_err = (rotation * rotation.transpose() - Mat3::identity()).abs().max();
        if gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput(format!(
                "rotation is not orthonormal (|R R^T - I| = {gram_err:e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput(format!("rotation determinant is {det}, expected 1")));
        }
        Ok(Self { rotation, origin, omega })
    }

    pub fn identity(omega: f64) -> Result<Self> {
        Self::new(Mat3::identity(), Vec3::zeros(), omega)
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn origin(&self) -> &Vec3 {
        &self.origin
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// The pose moved by the rigid motion `x -> rotation * x + translation`.
    pub fn transformed(&self, rotation: &Mat3, translation: &Vec3) -> Result<Self> {
        Self::new(rotation * self.rotation, rotation * self.origin + translation, self.omega)
    }

    /// World-frame direction of a camera-frame ray.
    pub fn world_direction(&self, dir_cam: &Vec3) -> Vec3 {
        self.rotation * dir_cam
    }
}

/// Text record: the nine rotation entries row-major, the three origin
/// coordinates, then `omega`, whitespace separated. Lines starting with `#`
/// are comments.
impl FromStr for CameraPose {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let numbers = parse_numbers(s)?;
        if numbers.len() != 13 {
            return Err(Error::Parse(format!(
                "pose record needs 13 numbers (R row-major, o, omega), found {}",
                numbers.len()
            )));
        }
        let rotation = Mat3::from_row_slice(&numbers[..9]);
        let origin = Vec3::new(numbers[9], numbers[10], numbers[11]);
        Self::new(rotation, origin, numbers[12])
    }
}

/// Writes the record with shortest round-trip decimals.
impl fmt::Display for CameraPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut fields = Vec::with_capacity(13);
        for r in 0..3 {
            for c in 0..3 {
                fields.push(self.rotation[(r, c)]);
            }
        }
        fields.extend(self.origin.iter().copied());
        fields.push(self.omega);
        let text: Vec<String> = fields.iter().map(|v| format!("{v:?}")).collect();
        write!(f, "{}", text.join(" "))
    }
}

/// Parses whitespace- or comma-separated numbers, skipping `#` comment lines.
pub(crate) fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .flat_map(|line| line.split(|c: char| c.is_whitespace() || c == ','))
        .filter(|tok| !tok.is_empty())
        .map(|tok| tok.parse::<f64>().map_err(|e| Error::Parse(format!("`{tok}`: {e}"))))
        .collect()
}

/// In-plane corner offsets of a pixel, in vertex order.
///
/// The order makes the front face's triangles face the camera:
/// `(+,+)`, `(+,-)`, `(-,-)`, `(-,+)` in units of `omega / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelSpec {
    pub direction: Vec3,
    pub corner_offsets: [Vec3; 4],
}

impl PixelSpec {
    pub fn new(direction: Vec3, omega: f64) -> Self {
        let h = 0.5 * omega;
        Self {
            direction,
            corner_offsets: [
                Vec3::new(h, h, 0.0),
                Vec3::new(h, -h, 0.0),
                Vec3::new(-h, -h, 0.0),
                Vec3::new(-h, h, 0.0),
            ],
        }
    }
}

/// Eight vertices of a pyramidal frustum.
///
/// `vertices[0..4]` is the front face and `vertices[4..8]` the back face in
/// the same angular order, so `vertices[i]` and `vertices[i + 4]` lie on the
/// same corner ray. `t_near`/`t_far` record the distances that generated the
/// frustum, or 0 when it was built directly from vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frustum {
    pub vertices: [Vec3; 8],
    pub t_near: f64,
    pub t_far: f64,
}

impl Frustum {
    pub fn from_vertices(vertices: [Vec3; 8]) -> Result<Self> {
        for v in &vertices {
            ensure_finite("frustum vertex", v.as_slice())?;
        }
        Ok(Self { vertices, t_near: 0.0, t_far: 0.0 })
    }

    /// The box `[min, max]` laid out as a frustum looking along `+z`.
    pub fn axis_aligned_box(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|k| max[k] <= min[k]) {
            return Err(Error::Domain("box max must exceed min on every axis".into()));
        }
        let face = |z: f64| {
            [
                Vec3::new(max.x, max.y, z),
                Vec3::new(max.x, min.y, z),
                Vec3::new(min.x, min.y, z),
                Vec3::new(min.x, max.y, z),
            ]
        };
        let (front, back) = (face(min.z), face(max.z));
        Self::from_vertices([
            front[0], front[1], front[2], front[3], back[0], back[1], back[2], back[3],
        ])
    }

    pub fn vertex_centroid(&self) -> Vec3 {
        self.vertices.iter().sum::<Vec3>() / 8.0
    }

    /// Applies `x -> rotation * x + translation` to every vertex.
    pub fn transformed(&self, rotation: &Mat3, translation: &Vec3) -> Self {
        Self {
            vertices: self.vertices.map(|v| rotation * v + translation),
            ..*self
        }
    }

    pub fn max_abs_coordinate(&self) -> f64 {
        self.vertices.iter().map(|v| v.amax()).fold(0.0, f64::max)
    }
}

/// Frustum spanned by the pixel with camera-frame direction `dir_cam`
/// between distances `t_near` and `t_far`: vertices `o + t R (d + offset)`.
pub fn frustum_from_pixel(pose: &CameraPose, dir_cam: &Vec3, t_near: f64, t_far: f64) -> Result<Frustum> {
    ensure_finite("pixel direction", dir_cam.as_slice())?;
    ensure_finite("t range", &[t_near, t_far])?;
    if (dir_cam.z - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "pixel direction must have unit z component, got {}",
            dir_cam.z
        )));
    }
    check_slab(t_near, t_far)?;
    let pixel = PixelSpec::new(*dir_cam, pose.omega());
    let corners = pixel.corner_offsets.map(|off| pose.rotation() * (pixel.direction + off));
    let mut vertices = [Vec3::zeros(); 8];
    for (i, c) in corners.iter().enumerate() {
        vertices[i] = pose.origin() + t_near * c;
        vertices[i + 4] = pose.origin() + t_far * c;
    }
    Ok(Frustum { vertices, t_near, t_far })
}

pub(crate) fn check_slab(t_near: f64, t_far: f64) -> Result<()> {
    if t_near < 0.0 {
        return Err(Error::Domain(format!("t_near must be non-negative, got {t_near}")));
    }
    if t_far - t_near <= MIN_RELATIVE_SLAB * t_far.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "degenerate slab: t_far ({t_far}) must exceed t_near ({t_near})"
        )));
    }
    Ok(())
}

/// Triangle with its unnormalized normal `(p1 - p0) x (p2 - p0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleFace {
    pub p0: Vec3,
    pub p1: Vec3,
    pub p2: Vec3,
    pub normal: Vec3,
}

impl TriangleFace {
    pub fn new(p0: Vec3, p1: Vec3, p2: Vec3) -> Self {
        Self { p0, p1, p2, normal: (p1 - p0).cross(&(p2 - p0)) }
    }

    pub fn points(&self) -> [Vec3; 3] {
        [self.p0, self.p1, self.p2]
    }

    /// The `axis` coordinate of the three vertices.
    pub fn axis_coords(&self, axis: usize) -> [f64; 3] {
        [self.p0[axis], self.p1[axis], self.p2[axis]]
    }

    pub fn centroid(&self) -> Vec3 {
        (self.p0 + self.p1 + self.p2) / 3.0
    }

    pub fn area(&self) -> f64 {
        0.5 * self.normal.norm()
    }
}

/// Quadrilateral faces as vertex indices: front, back, then the four sides.
pub const QUAD_FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [4, 7, 6, 5],
    [0, 4, 5, 1],
    [1, 5, 6, 2],
    [2, 6, 7, 3],
    [3, 7, 4, 0],
];

/// Vertex indices of the twelve triangles, in [`triangulate`] order.
pub fn triangle_indices() -> [[usize; 3]; 12] {
    let mut out = [[0; 3]; 12];
    for (i, &[a, b, c, d]) in QUAD_FACES.iter().enumerate() {
        out[2 * i] = [a, b, c];
        out[2 * i + 1] = [a, c, d];
    }
    out
}

/// Splits each quad `(a, b, c, d)` into `(a, b, c)` and `(a, c, d)`.
pub fn triangulate(f: &Frustum) -> Vec<TriangleFace> {
    let v = &f.vertices;
    triangle_indices()
        .iter()
        .map(|&[a, b, c]| TriangleFace::new(v[a], v[b], v[c]))
        .collect()
}

/// Signed volume `(1/6) sum p0 . N` of a closed, outward-oriented surface.
pub fn volume(tris: &[TriangleFace]) -> Result<f64> {
    let v = signed_volume6(tris) / 6.0;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Orientation(v))
    }
}

/// Six times the signed volume, compensated.
pub(crate) fn signed_volume6(tris: &[TriangleFace]) -> f64 {
    tris.iter().map(|t| t.p0.dot(&t.normal)).collect::<CompensatedSum>().value()
}

/// Scene contraction: identity inside the unit ball, `(2 - 1/|x|) x/|x|` outside.
pub fn contract_point(x: &Vec3) -> Vec3 {
    let r = x.norm();
    if r <= 1.0 {
        *x
    } else {
        (2.0 - 1.0 / r) * (x / r)
    }
}

/// Contracts the eight vertices; the result is the flat-faced polyhedron on
/// the mapped vertices.
pub fn contract_frustum(f: &Frustum) -> Frustum {
    Frustum { vertices: f.vertices.map(|v| contract_point(&v)), ..*f }
}
