//! Closed-form EIPE of a triangulated polyhedron.
//!
//! For octave `l` (frequency `a = 2^l`) and axis `k`, the divergence theorem
//! with the field `[-cos(a x_k)/a, 0, 0]` turns `∭ sin(a x_k) dV` into
//! `(1/a) Σ_τ σ_{k,τ} N_{τ,k}`, and likewise `∭ cos(a x_k) dV` into
//! `(1/a) Σ_τ ξ_{k,τ} N_{τ,k}`. The per-triangle coefficient is a second
//! divided difference over the triangle's three coordinates:
//!
//! ```text
//! σ = [(x2 - x1) cos(a x0) + (x0 - x2) cos(a x1) + (x1 - x0) cos(a x2)]
//!     / (a² (x1 - x0)(x2 - x0)(x2 - x1))
//! ξ = -(same with sin)
//! ```
//!
//! When two or three coordinates coincide the quotient is replaced by its
//! l'Hôpital limit. Coordinates closer than [`UNDERFLOW_THRESHOLD`] are
//! snapped together first ([`Guard::On`]); without the guard only exact
//! ties are dispatched and near-ties blow up through cancellation.

use crate::error::{Error, Result};
use crate::geometry::{signed_volume6, TriangleFace};
use crate::numeric::CompensatedSum;
use crate::Vec3;

/// Coordinate differences below this are treated as zero.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-6;

/// Slack allowed past `[-1, 1]` before a guarded EIPE is declared inconsistent.
pub const CONSISTENCY_SLACK: f64 = 1e-9;

/// Sin/cos features for `octaves` frequency octaves.
///
/// Layout: the sin block `(x, y, z)` for `l = 0..L`, then the cos block in
/// the same order. Octave `l` has frequency `2^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingVector {
    octaves: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Sin,
    Cos,
}

impl Component {
    pub fn as_str(self) -> &'static str {
        match self {
            Component::Sin => "sin",
            Component::Cos => "cos",
        }
    }
}

impl EncodingVector {
    pub fn zeros(octaves: usize) -> Result<Self> {
        check_octaves(octaves)?;
        Ok(Self { octaves, values: vec![0.0; 6 * octaves] })
    }

    pub fn from_values(octaves: usize, values: Vec<f64>) -> Result<Self> {
        check_octaves(octaves)?;
        if values.len() != 6 * octaves {
            return Err(Error::InvalidInput(format!(
                "encoding of {octaves} octaves needs {} values, got {}",
                6 * octaves,
                values.len()
            )));
        }
        Ok(Self { octaves, values })
    }

    pub fn octaves(&self) -> usize {
        self.octaves
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, kind: Component, l: usize, axis: usize) -> usize {
        debug_assert!(l < self.octaves && axis < 3);
        match kind {
            Component::Sin => 3 * l + axis,
            Component::Cos => 3 * self.octaves + 3 * l + axis,
        }
    }

    pub fn get(&self, kind: Component, l: usize, axis: usize) -> f64 {
        self.values[self.index(kind, l, axis)]
    }

    pub fn set(&mut self, kind: Component, l: usize, axis: usize, value: f64) {
        let i = self.index(kind, l, axis);
        self.values[i] = value;
    }

    pub fn sin(&self, l: usize, axis: usize) -> f64 {
        self.get(Component::Sin, l, axis)
    }

    pub fn cos(&self, l: usize, axis: usize) -> f64 {
        self.get(Component::Cos, l, axis)
    }

    /// `(kind, l, axis)` of a flat index.
    pub fn label(&self, index: usize) -> (Component, usize, usize) {
        let block = 3 * self.octaves;
        let (kind, rest) = if index < block { (Component::Sin, index) } else { (Component::Cos, index - block) };
        (kind, rest / 3, rest % 3)
    }

    /// Narrowed to single precision for consumers that work in `f32`.
    pub fn to_f32(&self) -> Vec<f32> {
        self.values.iter().map(|&v| v as f32).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Copies the components of `axis` from `other`.
    pub(crate) fn copy_axis(&mut self, other: &Self, axis: usize) {
        for l in 0..self.octaves {
            for kind in [Component::Sin, Component::Cos] {
                self.set(kind, l, axis, other.get(kind, l, axis));
            }
        }
    }
}

pub(crate) fn check_octaves(octaves: usize) -> Result<()> {
    if octaves == 0 {
        Err(Error::InvalidInput("number of octaves must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Frequency `2^l` of octave `l`.
pub fn frequency(l: usize) -> f64 {
    2f64.powi(l as i32)
}

/// Whether coordinate differences below [`UNDERFLOW_THRESHOLD`] are snapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Guard {
    #[default]
    On,
    /// Only exact ties take the limit branches.
    Off,
}

impl Guard {
    pub fn threshold(self) -> f64 {
        match self {
            Guard::On => UNDERFLOW_THRESHOLD,
            Guard::Off => 0.0,
        }
    }
}

/// Which coordinates of a triangle coincide along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Degeneracy {
    Generic,
    Equal01,
    Equal02,
    Equal12,
    AllEqual,
}

/// Classifies with the given snapping threshold. Snapping is transitive: two
/// close pairs imply all three are equal.
pub fn classify(x: [f64; 3], threshold: f64) -> Degeneracy {
    let close = |a: f64, b: f64| {
        let d = (a - b).abs();
        d == 0.0 || d < threshold
    };
    let e01 = close(x[0], x[1]);
    let e02 = close(x[0], x[2]);
    let e12 = close(x[1], x[2]);
    match (e01, e02, e12) {
        (false, false, false) => Degeneracy::Generic,
        (true, false, false) => Degeneracy::Equal01,
        (false, true, false) => Degeneracy::Equal02,
        (false, false, true) => Degeneracy::Equal12,
        _ => Degeneracy::AllEqual,
    }
}

/// Classification with the 1e-6 guard.
pub fn underflow_guard(x0: f64, x1: f64, x2: f64) -> Degeneracy {
    classify([x0, x1, x2], UNDERFLOW_THRESHOLD)
}

/// True when the class snapped a difference that was not exactly zero.
fn snapped_nonzero(x: [f64; 3], class: Degeneracy) -> bool {
    match class {
        Degeneracy::Generic => false,
        Degeneracy::Equal01 => x[0] != x[1],
        Degeneracy::Equal02 => x[0] != x[2],
        Degeneracy::Equal12 => x[1] != x[2],
        Degeneracy::AllEqual => x[0] != x[1] || x[1] != x[2],
    }
}

fn sigma_value(x: [f64; 3], a: f64, class: Degeneracy) -> f64 {
    let [x0, x1, x2] = x;
    let a2 = a * a;
    match class {
        Degeneracy::Generic => {
            let num = (x2 - x1) * (a * x0).cos() + (x0 - x2) * (a * x1).cos() + (x1 - x0) * (a * x2).cos();
            num / (a2 * (x1 - x0) * (x2 - x0) * (x2 - x1))
        }
        Degeneracy::Equal01 => {
            let d = x2 - x1;
            (a * d * (a * x1).sin() - (a * x1).cos() + (a * x2).cos()) / (a2 * d * d)
        }
        Degeneracy::Equal02 => {
            let d = x2 - x1;
            (-a * d * (a * x2).sin() + (a * x1).cos() - (a * x2).cos()) / (a2 * d * d)
        }
        Degeneracy::Equal12 => {
            let d = x2 - x0;
            (-a * d * (a * x1).sin() + (a * x0).cos() - (a * x2).cos()) / (a2 * d * d)
        }
        Degeneracy::AllEqual => -0.5 * (a * x0).cos(),
    }
}

fn xi_value(x: [f64; 3], a: f64, class: Degeneracy) -> f64 {
    let [x0, x1, x2] = x;
    let a2 = a * a;
    match class {
        Degeneracy::Generic => {
            let num = (x2 - x1) * (a * x0).sin() + (x0 - x2) * (a * x1).sin() + (x1 - x0) * (a * x2).sin();
            -num / (a2 * (x1 - x0) * (x2 - x0) * (x2 - x1))
        }
        Degeneracy::Equal01 => {
            let d = x2 - x1;
            (a * d * (a * x1).cos() + (a * x1).sin() - (a * x2).sin()) / (a2 * d * d)
        }
        Degeneracy::Equal02 => {
            let d = x2 - x1;
            (-a * d * (a * x2).cos() - (a * x1).sin() + (a * x2).sin()) / (a2 * d * d)
        }
        Degeneracy::Equal12 => {
            let d = x2 - x0;
            (-a * d * (a * x2).cos() - (a * x0).sin() + (a * x2).sin()) / (a2 * d * d)
        }
        Degeneracy::AllEqual => 0.5 * (a * x0).sin(),
    }
}

fn check_coords(x: [f64; 3]) -> Result<()> {
    crate::error::ensure_finite("triangle coordinates", &x)
}

/// Cosine coefficient of one triangle along one axis, guarded.
///
/// Normalized so that `∫∫_τ -cos(2^l x) du dv / 2^l = σ / 2^l`, i.e. with the
/// `1/2^{2l}` factor included; the all-equal limit is `-cos(2^l x0) / 2`.
pub fn sigma_coeff(x0: f64, x1: f64, x2: f64, l: usize) -> Result<f64> {
    sigma_coeff_with(x0, x1, x2, l, Guard::On)
}

/// Sine coefficient, same normalization; all-equal limit `sin(2^l x0) / 2`.
pub fn xi_coeff(x0: f64, x1: f64, x2: f64, l: usize) -> Result<f64> {
    xi_coeff_with(x0, x1, x2, l, Guard::On)
}

pub fn sigma_coeff_with(x0: f64, x1: f64, x2: f64, l: usize, guard: Guard) -> Result<f64> {
    let x = [x0, x1, x2];
    check_coords(x)?;
    Ok(sigma_value(x, frequency(l), classify(x, guard.threshold())))
}

pub fn xi_coeff_with(x0: f64, x1: f64, x2: f64, l: usize, guard: Guard) -> Result<f64> {
    let x = [x0, x1, x2];
    check_coords(x)?;
    Ok(xi_value(x, frequency(l), classify(x, guard.threshold())))
}

/// Generic-branch coefficients with no dispatch, for probing the limits.
pub fn sigma_generic(x0: f64, x1: f64, x2: f64, l: usize) -> f64 {
    sigma_value([x0, x1, x2], frequency(l), Degeneracy::Generic)
}

pub fn xi_generic(x0: f64, x1: f64, x2: f64, l: usize) -> f64 {
    xi_value([x0, x1, x2], frequency(l), Degeneracy::Generic)
}

/// Per-axis coefficients of one triangle at one octave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffTriple {
    pub sigma: Vec3,
    pub xi: Vec3,
}

impl CoeffTriple {
    pub fn for_triangle(tri: &TriangleFace, l: usize, guard: Guard) -> Result<Self> {
        let a = frequency(l);
        let mut sigma = Vec3::zeros();
        let mut xi = Vec3::zeros();
        for k in 0..3 {
            let x = tri.axis_coords(k);
            check_coords(x)?;
            let class = classify(x, guard.threshold());
            sigma[k] = sigma_value(x, a, class);
            xi[k] = xi_value(x, a, class);
        }
        Ok(Self { sigma, xi })
    }
}

/// Unclamped EIPE with guard bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EipeReport {
    pub encoding: EncodingVector,
    /// Per axis, the number of triangles whose classification snapped a
    /// nonzero coordinate difference.
    pub guard_activations: [usize; 3],
}

impl EipeReport {
    pub fn out_of_bounds(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.encoding
            .values()
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, v)| !(v.abs() <= 1.0))
    }
}

/// EIPE before the consistency check and clamp.
pub fn eipe_with_guard(tris: &[TriangleFace], octaves: usize, guard: Guard) -> Result<EipeReport> {
    check_octaves(octaves)?;
    for t in tris {
        for p in t.points() {
            crate::error::ensure_finite("triangle vertex", p.as_slice())?;
        }
    }
    let volume6 = signed_volume6(tris);
    if !(volume6 > 0.0) {
        return Err(Error::Orientation(volume6 / 6.0));
    }

    let threshold = guard.threshold();
    let mut classes = Vec::with_capacity(tris.len());
    let mut guard_activations = [0usize; 3];
    for t in tris {
        let mut per_axis = [Degeneracy::Generic; 3];
        for (k, class) in per_axis.iter_mut().enumerate() {
            let x = t.axis_coords(k);
            *class = classify(x, threshold);
            if snapped_nonzero(x, *class) {
                guard_activations[k] += 1;
            }
        }
        classes.push(per_axis);
    }

    let mut encoding = EncodingVector::zeros(octaves)?;
    for l in 0..octaves {
        let a = frequency(l);
        let scale = 6.0 / (a * volume6);
        for k in 0..3 {
            let mut sin_sum = CompensatedSum::default();
            let mut cos_sum = CompensatedSum::default();
            for (t, class) in tris.iter().zip(&classes) {
                let x = t.axis_coords(k);
                let n = t.normal[k];
                if n == 0.0 {
                    continue;
                }
                sin_sum.add(sigma_value(x, a, class[k]) * n);
                cos_sum.add(xi_value(x, a, class[k]) * n);
            }
            encoding.set(Component::Sin, l, k, scale * sin_sum.value());
            encoding.set(Component::Cos, l, k, scale * cos_sum.value());
        }
    }
    Ok(EipeReport { encoding, guard_activations })
}

/// Exact IPE `(∭ γ dV) / V` of a closed, outward-oriented triangulated
/// surface, with the underflow guard applied.
///
/// Components beyond `[-1, 1]` by more than [`CONSISTENCY_SLACK`] are
/// reported as [`Error::Consistency`]; smaller excursions are clamped.
pub fn eipe(tris: &[TriangleFace], octaves: usize) -> Result<EncodingVector> {
    eipe_checked(tris, octaves).map(|r| r.encoding)
}

/// [`eipe`] keeping the guard bookkeeping.
pub fn eipe_checked(tris: &[TriangleFace], octaves: usize) -> Result<EipeReport> {
    let report = eipe_with_guard(tris, octaves, Guard::On)?;
    let mut values = report.encoding.values().to_vec();
    for (index, v) in values.iter_mut().enumerate() {
        if !(v.abs() <= 1.0 + CONSISTENCY_SLACK) {
            return Err(Error::Consistency { index, value: *v });
        }
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(EipeReport {
        encoding: EncodingVector::from_values(octaves, values)?,
        guard_activations: report.guard_activations,
    })
}
