//! Stratified interval sampling along a ray and emission-absorption
//! compositing over caller-supplied colors and densities.

use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::oracle::stream_rng;
use crate::Vec3;

/// `N + 1` increasing distances bounding `N` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySamples {
    ts: Vec<f64>,
}

impl RaySamples {
    /// Validates that `ts` has at least two entries and is strictly increasing.
    pub fn from_ts(ts: Vec<f64>) -> Result<Self> {
        ensure_finite("ts", &ts)?;
        if ts.len() < 2 {
            return Err(Error::InvalidInput("need at least two sample distances".into()));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("sample distances must be strictly increasing".into()));
        }
        Ok(Self { ts })
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn interval_count(&self) -> usize {
        self.ts.len() - 1
    }

    pub fn deltas(&self) -> impl Iterator<Item = f64> + '_ {
        self.ts.windows(2).map(|w| w[1] - w[0])
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ts.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Color and density of one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalRadiance {
    pub color: Vec3,
    pub density: f64,
}

impl IntervalRadiance {
    pub fn new(color: Vec3, density: f64) -> Result<Self> {
        ensure_finite("color", color.as_slice())?;
        if density.is_nan() || density < 0.0 {
            return Err(Error::Domain(format!("density must be non-negative, got {density}")));
        }
        if color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Domain("color components must lie in [0, 1]".into()));
        }
        Ok(Self { color, density })
    }
}

/// One uniform point per stratum of `[t_near, t_far]` split into `n + 1` bins.
pub fn stratified_ts(t_near: f64, t_far: f64, n: usize, seed: u64) -> Result<RaySamples> {
    ensure_finite("range", &[t_near, t_far])?;
    if !(t_far > t_near) || n == 0 {
        return Err(Error::Domain(format!("invalid sampling range [{t_near}, {t_far}] with {n} intervals")));
    }
    let bins = n + 1;
    let width = (t_far - t_near) / bins as f64;
    let mut rng = stream_rng(seed, 0);
    let mut ts = Vec::with_capacity(bins);
    for j in 0..bins {
        let lo = t_near + j as f64 * width;
        let hi = if j + 1 == bins { t_far } else { t_near + (j + 1) as f64 * width };
        let mut t = lo + (hi - lo) * rng.random::<f64>();
        // keep strictly inside the previous point even when bins are tiny
        if let Some(&prev) = ts.last() {
            if t <= prev {
                t = prev + (hi - prev) * 0.5;
            }
        }
        ts.push(t);
    }
    RaySamples::from_ts(ts)
}

/// Per-interval weights and the transmittance left after the last interval.
pub fn composite_weights(densities: &[f64], rays: &RaySamples) -> Result<(Vec<f64>, f64)> {
    if densities.len() != rays.interval_count() {
        return Err(Error::InvalidInput(format!(
            "{} densities for {} intervals",
            densities.len(),
            rays.interval_count()
        )));
    }
    let mut optical_depth = 0.0f64;
    let mut weights = Vec::with_capacity(densities.len());
    for (&sigma, delta) in densities.iter().zip(rays.deltas()) {
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::Domain(format!("density must be non-negative, got {sigma}")));
        }
        let tau = sigma * delta;
        let transmittance = (-optical_depth).exp();
        // 1 - e^{-tau} without cancellation; infinity gives -expm1(-inf) = 1
        let alpha = -(-tau).exp_m1();
        weights.push(if transmittance == 0.0 { 0.0 } else { transmittance * alpha });
        optical_depth += tau;
    }
    Ok((weights, (-optical_depth).exp()))
}

/// Composited color over a black background.
pub fn composite(samples: &[IntervalRadiance], rays: &RaySamples) -> Result<Vec3> {
    let densities: Vec<f64> = samples.iter().map(|s| s.density).collect();
    let (weights, _) = composite_weights(&densities, rays)?;
    Ok(samples.iter().zip(&weights).map(|(s, w)| *w * s.color).sum())
}
