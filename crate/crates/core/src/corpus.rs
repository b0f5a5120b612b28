//! Seeded random regions: rotations, pixel frusta, cone frusta and
//! contracted frusta with injected near-coincident coordinates.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::geometry::{contract_frustum, frustum_from_pixel, signed_volume6, triangulate, CameraPose, Frustum};
use crate::{Mat3, Vec3};

/// Uniformly distributed rotation (normalized Gaussian quaternion).
pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let q = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
    nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Ranges for [`random_frustum`]. `delta` and `omega` are drawn
/// log-uniformly, everything else uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrustumRanges {
    pub mu_t: (f64, f64),
    pub delta: (f64, f64),
    pub omega: (f64, f64),
    /// Half-width of the pixel-direction offset in the image plane.
    pub pixel: f64,
    /// Half-width of the camera-origin cube.
    pub origin: f64,
}

impl Default for FrustumRanges {
    fn default() -> Self {
        Self { mu_t: (0.5, 8.0), delta: (1e-3, 2.0), omega: (5e-3, 5e-2), pixel: 0.5, origin: 1.0 }
    }
}

/// A frustum together with the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelFrustum {
    pub pose: CameraPose,
    pub direction: Vec3,
    pub t_near: f64,
    pub t_far: f64,
    pub frustum: Frustum,
}

/// Random pose, pixel and slab; `delta` is capped below `2 mu_t` so the
/// slab starts in front of the camera.
pub fn random_frustum(rng: &mut impl Rng, ranges: &FrustumRanges) -> Result<PixelFrustum> {
    let mu = rng.random_range(ranges.mu_t.0..=ranges.mu_t.1);
    let delta = log_uniform(rng, ranges.delta.0, ranges.delta.1.min(1.9 * mu));
    let omega = log_uniform(rng, ranges.omega.0, ranges.omega.1);
    let origin = Vec3::from_fn(|_, _| rng.random_range(-ranges.origin..=ranges.origin));
    let pose = CameraPose::new(random_rotation(rng), origin, omega)?;
    let direction = Vec3::new(
        rng.random_range(-ranges.pixel..=ranges.pixel),
        rng.random_range(-ranges.pixel..=ranges.pixel),
        1.0,
    );
    let (t_near, t_far) = (mu - 0.5 * delta, mu + 0.5 * delta);
    let frustum = frustum_from_pixel(&pose, &direction, t_near, t_far)?;
    Ok(PixelFrustum { pose, direction, t_near, t_far, frustum })
}

/// Parameters of a conical frustum `{o + t d + w : |w| <= r_dot t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    pub d: Vec3,
    pub o: Vec3,
    pub r_dot: f64,
    pub t0: f64,
    pub t1: f64,
}

/// Random cone frustum with a unit-ish direction and moderate aperture.
pub fn random_cone(rng: &mut impl Rng) -> ConeSpec {
    let d = random_rotation(rng) * Vec3::new(0.0, 0.0, rng.random_range(0.5..=1.5));
    let o = Vec3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
    let r_dot = log_uniform(rng, 5e-3, 0.3);
    let t0 = rng.random_range(0.2..=4.0);
    let t1 = t0 + log_uniform(rng, 1e-2, 3.0);
    ConeSpec { d, o, r_dot, t0, t1 }
}

/// Contracted far-field frustum whose front and back faces are flattened
/// along the dominant ray axis up to coordinate noise of about `noise`.
///
/// Far regions contract to thin shells near radius 2, and the flattened faces
/// give triangles with pairwise coordinate differences far below the
/// underflow threshold but not exactly zero.
pub fn near_degenerate_contracted(rng: &mut impl Rng, noise: f64) -> Result<Frustum> {
    loop {
        let ranges = FrustumRanges {
            mu_t: (20.0, 200.0),
            delta: (1.0, 20.0),
            omega: (1e-2, 5e-2),
            pixel: 0.3,
            origin: 0.5,
        };
        let pf = random_frustum(rng, &ranges)?;
        let mut f = contract_frustum(&pf.frustum);
        let ray = f.vertices[4] + f.vertices[6] - f.vertices[0] - f.vertices[2];
        let axis = ray.iamax();
        for face in [0..4, 4..8] {
            let level = f.vertices[face.clone()].iter().map(|v| v[axis]).sum::<f64>() / 4.0;
            for v in &mut f.vertices[face] {
                v[axis] = level + noise * rng.random_range(-1.0..=1.0);
            }
        }
        if signed_volume6(&triangulate(&f)) > 0.0 {
            return Ok(f);
        }
    }
}
