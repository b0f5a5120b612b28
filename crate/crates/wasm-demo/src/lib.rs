//! Browser bindings for the demo page in `www/`.
//!
//! All functions return flat `Float64Array`s so the page can plot them
//! without any glue beyond what `wasm-bindgen` generates.

use exact_ipe::analysis::{run_sweep, SweepConfig, SweepMode};
use exact_ipe::baseline::{cone_moments, contract_gaussian, gaussian_ipe};
use exact_ipe::geometry::{contract_frustum, frustum_from_pixel, triangulate, volume};
use exact_ipe::exact::eipe;
use exact_ipe::{CameraPose, Vec3};
use wasm_bindgen::prelude::*;

/// Values per point in [`sweep_curve`] output.
pub const SWEEP_STRIDE: usize = 6;

/// EIPE and Gaussian IPE along the default ray, for one octave and axis.
///
/// `mode` is `mu_sweep`, `delta_sweep` or `small_frustum`; `fixed` is the
/// held parameter. Output is `count` groups of
/// `[x, eipe_sin, eipe_cos, ipe_sin, ipe_cos, underflow_flag]`, where `x` is
/// the swept value.
#[wasm_bindgen]
pub fn sweep_curve(
    mode: &str,
    fixed: f64,
    min: f64,
    max: f64,
    count: usize,
    octave: usize,
    axis: usize,
    omega: f64,
) -> Result<Vec<f64>, String> {
    let mode: SweepMode = mode.parse().map_err(|e| format!("{e}"))?;
    if axis > 2 {
        return Err(format!("axis must be 0, 1 or 2, got {axis}"));
    }
    let mut cfg = SweepConfig::defaults(mode);
    cfg.fixed = fixed;
    cfg.grid.min = min;
    cfg.grid.max = max;
    cfg.grid.count = count;
    cfg.l_list = vec![octave];
    cfg.pose = CameraPose::identity(omega).map_err(|e| e.to_string())?;
    let rows = run_sweep(&cfg).map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .filter(|r| r.axis == axis)
        .flat_map(|r| {
            let x = if mode == SweepMode::DeltaSweep { r.delta_i } else { r.mu_t };
            [x, r.eipe_sin, r.eipe_cos, r.ipe_sin, r.ipe_cos, f64::from(u8::from(r.underflow_flag))]
        })
        .collect())
}

/// Encodings of one pixel frustum of the identity camera.
///
/// Output: `[volume, eipe..., ipe...]`, each encoding in the library layout
/// (sin block then cos block, `3 * octaves` values each). With `contract`
/// the frustum vertices and the Gaussian both go through the contraction,
/// and `volume` is that of the contracted polyhedron.
#[wasm_bindgen]
pub fn encode_pixel(
    pixel_x: f64,
    pixel_y: f64,
    t_near: f64,
    t_far: f64,
    omega: f64,
    octaves: usize,
    contract: bool,
) -> Result<Vec<f64>, String> {
    let pose = CameraPose::identity(omega).map_err(|e| e.to_string())?;
    let dir = Vec3::new(pixel_x, pixel_y, 1.0);
    let mut frustum = frustum_from_pixel(&pose, &dir, t_near, t_far).map_err(|e| e.to_string())?;
    let mut gaussian = cone_moments(&dir, pose.origin(), omega, t_near, t_far).map_err(|e| e.to_string())?;
    if contract {
        frustum = contract_frustum(&frustum);
        gaussian = contract_gaussian(&gaussian).map_err(|e| e.to_string())?;
    }
    let tris = triangulate(&frustum);
    let exact = eipe(&tris, octaves).map_err(|e| e.to_string())?;
    let approx = gaussian_ipe(&gaussian, octaves).map_err(|e| e.to_string())?;
    let mut out = vec![volume(&tris).map_err(|e| e.to_string())?];
    out.extend_from_slice(exact.values());
    out.extend_from_slice(approx.values());
    Ok(out)
}
