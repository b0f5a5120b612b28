//! Comparison encodings: the point encoding, the Gaussian approximation of
//! the IPE over cone frusta (optionally pushed through the contraction), and
//! the closed-form EIPE of a strictly square pyramid.

use crate::error::{ensure_finite, Error, Result};
use crate::exact::{check_octaves, eipe, frequency, Component, EncodingVector, UNDERFLOW_THRESHOLD};
use crate::geometry::{check_slab, frustum_from_pixel, triangulate, CameraPose};
use crate::{Mat3, Vec3};

const SYMMETRY_TOL: f64 = 1e-12;

/// Point encoding `[sin(2^l x_k), cos(2^l x_k)]`.
pub fn pe(x: &Vec3, octaves: usize) -> Result<EncodingVector> {
    ensure_finite("point", x.as_slice())?;
    let mut e = EncodingVector::zeros(octaves)?;
    for l in 0..octaves {
        let a = frequency(l);
        for k in 0..3 {
            let (s, c) = (a * x[k]).sin_cos();
            e.set(Component::Sin, l, k, s);
            e.set(Component::Cos, l, k, c);
        }
    }
    Ok(e)
}

/// The block-diagonal lift `P`: row `3l + k` of `P x` is `2^l x_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyLift {
    pub octaves: usize,
}

impl FrequencyLift {
    pub fn apply(&self, x: &Vec3) -> Vec<f64> {
        (0..self.octaves)
            .flat_map(|l| {
                let a = frequency(l);
                (0..3).map(move |k| a * x[k])
            })
            .collect()
    }

    /// `diag(P Σ Pᵀ)`, i.e. `4^l Σ_kk` in the same order.
    pub fn lifted_variances(&self, sigma: &Mat3) -> Vec<f64> {
        (0..self.octaves)
            .flat_map(|l| {
                let a2 = frequency(l).powi(2);
                (0..3).map(move |k| a2 * sigma[(k, k)])
            })
            .collect()
    }
}

/// Gaussian stand-in for a cone frustum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRegion {
    mean: Vec3,
    covariance: Mat3,
}

impl GaussianRegion {
    pub fn new(mean: Vec3, covariance: Mat3) -> Result<Self> {
        ensure_finite("gaussian mean", mean.as_slice())?;
        ensure_finite("gaussian covariance", covariance.as_slice())?;
        let asym = (covariance - covariance.transpose()).abs().max();
        let scale = covariance.abs().max().max(1.0);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidCovariance(format!("not symmetric (asymmetry {asym:e})")));
        }
        let min_eig = covariance.symmetric_eigenvalues().min();
        if min_eig < -SYMMETRY_TOL * scale {
            return Err(Error::InvalidCovariance(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { mean, covariance })
    }

    pub fn mean(&self) -> &Vec3 {
        &self.mean
    }

    pub fn covariance(&self) -> &Mat3 {
        &self.covariance
    }
}

/// Expected point encoding under `N(μ, Σ)`: each feature damped by
/// `exp(-4^l Σ_kk / 2)`.
pub fn gaussian_ipe(g: &GaussianRegion, octaves: usize) -> Result<EncodingVector> {
    check_octaves(octaves)?;
    let lift = FrequencyLift { octaves };
    let means = lift.apply(&g.mean);
    let vars = lift.lifted_variances(&g.covariance);
    let mut e = EncodingVector::zeros(octaves)?;
    for (i, (m, v)) in means.iter().zip(&vars).enumerate() {
        if *v < -SYMMETRY_TOL {
            return Err(Error::InvalidCovariance(format!("negative variance {v}")));
        }
        let damping = (-0.5 * v.max(0.0)).exp();
        let (s, c) = m.sin_cos();
        let (l, k) = (i / 3, i % 3);
        e.set(Component::Sin, l, k, s * damping);
        e.set(Component::Cos, l, k, c * damping);
    }
    Ok(e)
}

/// Moments of the uniform distribution over the conical frustum
/// `{o + t d + w : t0 <= t <= t1, w ⟂ d, |w| <= r_dot t}`.
///
/// Uses the numerically stable midpoint/half-width forms; `r_dot` is the
/// cone radius per unit `t`.
pub fn cone_moments(d: &Vec3, o: &Vec3, r_dot: f64, t0: f64, t1: f64) -> Result<GaussianRegion> {
    ensure_finite("cone direction", d.as_slice())?;
    ensure_finite("cone origin", o.as_slice())?;
    ensure_finite("cone parameters", &[r_dot, t0, t1])?;
    if !(t0 > 0.0) || !(r_dot > 0.0) {
        return Err(Error::Domain("cone frustum needs t0 > 0 and r_dot > 0".into()));
    }
    check_slab(t0, t1)?;
    let d2 = d.norm_squared();
    if !(d2 > 0.0) {
        return Err(Error::Domain("cone direction must be nonzero".into()));
    }
    let mid = 0.5 * (t0 + t1);
    let hw = 0.5 * (t1 - t0);
    let (mid2, hw2) = (mid * mid, hw * hw);
    let denom = 3.0 * mid2 + hw2;
    let t_mean = mid + 2.0 * mid * hw2 / denom;
    let t_var = hw2 / 3.0 - (4.0 / 15.0) * (hw2 * hw2 * (12.0 * mid2 - hw2)) / (denom * denom);
    let r_var = r_dot * r_dot * (mid2 / 4.0 + (5.0 / 12.0) * hw2 - (4.0 / 15.0) * hw2 * hw2 / denom);

    let ddt = d * d.transpose();
    let cov = t_var * ddt + r_var * (Mat3::identity() - ddt / d2);
    GaussianRegion::new(o + t_mean * d, 0.5 * (cov + cov.transpose()))
}

/// Jacobian of the scene contraction at `x`.
pub fn contraction_jacobian(x: &Vec3) -> Mat3 {
    let r = x.norm();
    if r <= 1.0 {
        return Mat3::identity();
    }
    let u = x / r;
    let uut = u * u.transpose();
    (2.0 - 1.0 / r) / r * (Mat3::identity() - uut) + uut / (r * r)
}

/// `(f(μ), J Σ Jᵀ)` for the scene contraction `f`.
pub fn contract_gaussian(g: &GaussianRegion) -> Result<GaussianRegion> {
    if g.mean.norm() <= 1.0 {
        return Ok(*g);
    }
    let j = contraction_jacobian(&g.mean);
    let cov = j * g.covariance * j.transpose();
    GaussianRegion::new(crate::geometry::contract_point(&g.mean), 0.5 * (cov + cov.transpose()))
}

/// Which axes of a [`square_pyramid_eipe_detailed`] result came from the
/// closed form (the rest fell back to the triangulated EIPE).
pub type AxisSources = [bool; 3];

/// EIPE of the square pyramid through the central pixel of `pose`.
pub fn square_pyramid_eipe(pose: &CameraPose, t0: f64, t1: f64, octaves: usize) -> Result<EncodingVector> {
    square_pyramid_eipe_detailed(pose, t0, t1, octaves).map(|(e, _)| e)
}

/// Per axis `k`, with rotation row `(r1, r2, r3)`, origin `o_k` and the four
/// corner slopes `ζ_j = η_j · (r1, r2, r3)`:
///
/// ```text
/// ∭ sin(a x_k) = 1/(a³ r1 r2) [C1/ζ1 - C2/ζ2 - C3/ζ3 + C4/ζ4],  C_j = Δ_t cos(a (t ζ_j + o_k))
/// ∭ cos(a x_k) = -1/(a³ r1 r2) [S1/ζ1 - S2/ζ2 - S3/ζ3 + S4/ζ4], S_j = Δ_t sin(a (t ζ_j + o_k))
/// ```
///
/// divided by `V = ω² (t1³ - t0³) / 3`. Axes where `r1`, `r2` or any `ζ_j` is
/// within 1e-6 of zero use the triangulated EIPE instead.
pub fn square_pyramid_eipe_detailed(
    pose: &CameraPose,
    t0: f64,
    t1: f64,
    octaves: usize,
) -> Result<(EncodingVector, AxisSources)> {
    check_octaves(octaves)?;
    ensure_finite("t range", &[t0, t1])?;
    if !(t0 > 0.0) {
        return Err(Error::Domain(format!("square pyramid needs t0 > 0, got {t0}")));
    }
    check_slab(t0, t1)?;
    let omega = pose.omega();
    let h = 0.5 * omega;
    let volume = omega * omega * (t1.powi(3) - t0.powi(3)) / 3.0;
    // η_1..η_4 and their signs in the bracket
    let corners = [(h, h, 1.0), (-h, h, -1.0), (h, -h, -1.0), (-h, -h, 1.0)];

    let mut e = EncodingVector::zeros(octaves)?;
    let mut sources = [true; 3];
    for (k, source) in sources.iter_mut().enumerate() {
        let row = pose.rotation().row(k);
        let (r1, r2, r3) = (row[0], row[1], row[2]);
        let ok = pose.origin()[k];
        let zetas = corners.map(|(ex, ey, _)| ex * r1 + ey * r2 + r3);
        if r1.abs() < UNDERFLOW_THRESHOLD
            || r2.abs() < UNDERFLOW_THRESHOLD
            || zetas.iter().any(|z| z.abs() < UNDERFLOW_THRESHOLD)
        {
            *source = false;
            continue;
        }
        for l in 0..octaves {
            let a = frequency(l);
            let mut sin_acc = 0.0;
            let mut cos_acc = 0.0;
            for (zeta, (_, _, sign)) in zetas.iter().zip(&corners) {
                let (s1, c1) = (a * (t1 * zeta + ok)).sin_cos();
                let (s0, c0) = (a * (t0 * zeta + ok)).sin_cos();
                sin_acc += sign * (c1 - c0) / zeta;
                cos_acc += sign * (s1 - s0) / zeta;
            }
            let pref = 1.0 / (a.powi(3) * r1 * r2 * volume);
            e.set(Component::Sin, l, k, pref * sin_acc);
            e.set(Component::Cos, l, k, -pref * cos_acc);
        }
    }
    if sources.iter().any(|s| !s) {
        let frustum = frustum_from_pixel(pose, &Vec3::z(), t0, t1)?;
        let general = eipe(&triangulate(&frustum), octaves)?;
        for (k, closed) in sources.iter().enumerate() {
            if !closed {
                e.copy_axis(&general, k);
            }
        }
    }
    Ok((e, sources))
}
