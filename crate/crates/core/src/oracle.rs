//! Monte-Carlo ground truth for volumes, encodings and cone moments.
//!
//! Frusta are sampled exactly uniformly through a tetrahedral fan; cones by
//! rejection from their bounding cylinder slab. Sample `i` always comes from
//! chunk `i / CHUNK`, whose generator is keyed by `(seed, chunk)`, and chunk
//! statistics are merged in chunk order, so every estimate is reproducible
//! regardless of how many threads run the chunks.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::ordered_map;
use crate::exact::{check_octaves, EncodingVector};
use crate::geometry::{signed_volume6, triangle_indices, triangulate, Frustum, TriangleFace};
use crate::{Mat3, Vec3};

/// Samples per generator stream.
pub const CHUNK: usize = 1 << 14;

const CONVEXITY_TOL: f64 = 1e-9;
const LOW_ACCEPTANCE: f64 = 0.01;

/// Generator for one chunk of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn chunk_sizes(n: usize) -> Vec<(u64, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(n - c * CHUNK)))
        .collect()
}

fn map_chunks<T: Send>(n: usize, f: impl Fn(u64, usize) -> T + Sync + Send) -> Vec<T> {
    ordered_map(chunk_sizes(n), |(c, len)| f(c, len))
}

/// Per-component running mean and sum of squared deviations.
#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Self { count: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for ((m, s), v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *m;
            *m += delta / self.count;
            *s += delta * (v - *m);
        }
    }

    /// Chan et al. pairwise merge.
    fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        let total = self.count + other.count;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * other.count / total;
            self.m2[i] += other.m2[i] + delta * delta * self.count * other.count / total;
        }
        self.count = total;
    }

    fn std_errors(&self) -> Vec<f64> {
        let n = self.count;
        self.m2.iter().map(|s| (s / (n - 1.0).max(1.0) / n).sqrt()).collect()
    }
}

/// Tetrahedral fan of a convex frustum, with a cumulative volume table.
#[derive(Debug, Clone)]
pub struct TetDecomposition {
    pub tets: Vec<[Vec3; 4]>,
    pub cumulative: Vec<f64>,
}

impl TetDecomposition {
    pub fn total_volume(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn pick(&self, u: f64) -> &[Vec3; 4] {
        let target = u * self.total_volume();
        let i = self.cumulative.partition_point(|&c| c <= target);
        &self.tets[i.min(self.tets.len() - 1)]
    }

    /// Exact mean and covariance of the uniform distribution.
    pub fn moments(&self) -> (Vec3, Mat3) {
        let mut mass = 0.0;
        let mut first = Vec3::zeros();
        let mut second = Mat3::zeros();
        for (i, tet) in self.tets.iter().enumerate() {
            let vol = self.cumulative[i] - if i == 0 { 0.0 } else { self.cumulative[i - 1] };
            let s: Vec3 = tet.iter().sum();
            let outer: Mat3 = tet.iter().map(|v| v * v.transpose()).sum();
            mass += vol;
            first += vol * s / 4.0;
            second += vol * (outer + s * s.transpose()) / 20.0;
        }
        let mean = first / mass;
        let cov = second / mass - mean * mean.transpose();
        (mean, 0.5 * (cov + cov.transpose()))
    }
}

fn tet_volume(t: &[Vec3; 4]) -> f64 {
    (t[1] - t[0]).dot(&(t[2] - t[0]).cross(&(t[3] - t[0]))) / 6.0
}

/// Checks that every vertex lies on the inner side of every face plane.
pub fn check_convex(f: &Frustum) -> Result<()> {
    let tris = triangulate(f);
    let scale = f.max_abs_coordinate().max(1.0);
    for t in &tris {
        let n = t.normal.norm();
        if n == 0.0 {
            continue;
        }
        for v in &f.vertices {
            let dist = (v - t.p0).dot(&t.normal) / n;
            if dist > CONVEXITY_TOL * scale {
                return Err(Error::UnsupportedRegion(format!(
                    "frustum is not convex (vertex {dist:e} outside a face plane)"
                )));
            }
        }
    }
    Ok(())
}

/// Fans the surface triangles not incident to vertex 0 out from vertex 0.
pub fn decompose(f: &Frustum) -> Result<TetDecomposition> {
    check_convex(f)?;
    let tris = triangulate(f);
    let total = signed_volume6(&tris) / 6.0;
    if !(total > 0.0) {
        return Err(Error::Orientation(total));
    }
    let apex = f.vertices[0];
    let mut tets = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for (idx, tri) in triangle_indices().iter().zip(&tris) {
        if idx.contains(&0) {
            continue;
        }
        let mut tet = [apex, tri.p0, tri.p1, tri.p2];
        let mut vol = tet_volume(&tet);
        if vol.abs() <= 1e-14 * total {
            continue;
        }
        if vol < 0.0 {
            tet.swap(2, 3);
            vol = -vol;
        }
        acc += vol;
        tets.push(tet);
        cumulative.push(acc);
    }
    Ok(TetDecomposition { tets, cumulative })
}

/// Uniform point in a tetrahedron by folding the unit cube into the simplex.
fn point_in_tet(tet: &[Vec3; 4], rng: &mut impl Rng) -> Vec3 {
    let (mut s, mut t, mut u): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    if s + t > 1.0 {
        s = 1.0 - s;
        t = 1.0 - t;
    }
    if t + u > 1.0 {
        let tmp = u;
        u = 1.0 - s - t;
        t = 1.0 - tmp;
    } else if s + t + u > 1.0 {
        let tmp = u;
        u = s + t + u - 1.0;
        s = 1.0 - t - tmp;
    }
    tet[0] + s * (tet[1] - tet[0]) + t * (tet[2] - tet[0]) + u * (tet[3] - tet[0])
}

fn sample_chunk(td: &TetDecomposition, seed: u64, chunk: u64, len: usize) -> impl Iterator<Item = Vec3> + '_ {
    let mut rng = stream_rng(seed, chunk);
    (0..len).map(move |_| {
        let u: f64 = rng.random();
        let tet = td.pick(u);
        point_in_tet(tet, &mut rng)
    })
}

/// `n` i.i.d. uniform points, deterministic in `(seed, n)`.
pub fn sample_uniform(td: &TetDecomposition, n: usize, seed: u64) -> impl Iterator<Item = Vec3> + '_ {
    chunk_sizes(n)
        .into_iter()
        .flat_map(move |(c, len)| sample_chunk(td, seed, c, len))
}

/// True when `p` is on the inner side of every triangle plane, within `tol`
/// (distance, relative to the frustum's coordinate scale).
pub fn contains(tris: &[TriangleFace], p: &Vec3, tol: f64) -> bool {
    tris.iter().all(|t| {
        let n = t.normal.norm();
        n == 0.0 || (p - t.p0).dot(&t.normal) / n <= tol
    })
}

/// Monte-Carlo estimate with per-component standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl OracleEstimate {
    pub fn as_encoding(&self, octaves: usize) -> Result<EncodingVector> {
        EncodingVector::from_values(octaves, self.mean.clone())
    }
}

/// Point encoding written into `out` in the [`EncodingVector`] layout, with
/// the octaves generated by angle doubling from one `sin_cos` per axis.
fn encode_point(x: &Vec3, octaves: usize, out: &mut [f64]) {
    let cos_base = 3 * octaves;
    for k in 0..3 {
        let (mut s, mut c) = x[k].sin_cos();
        for l in 0..octaves {
            out[3 * l + k] = s;
            out[cos_base + 3 * l + k] = c;
            let s2 = 2.0 * s * c;
            c = (c - s) * (c + s);
            s = s2;
        }
    }
}

/// Sample mean of the point encoding over `n` uniform points in `f`.
pub fn mc_encoding(f: &Frustum, octaves: usize, n: usize, seed: u64) -> Result<OracleEstimate> {
    check_octaves(octaves)?;
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let td = decompose(f)?;
    let dim = 6 * octaves;
    let parts = map_chunks(n, |chunk, len| {
        let mut m = Moments::new(dim);
        let mut buf = vec![0.0; dim];
        for p in sample_chunk(&td, seed, chunk, len) {
            encode_point(&p, octaves, &mut buf);
            m.push(&buf);
        }
        m
    });
    let mut total = Moments::new(dim);
    for p in &parts {
        total.merge(p);
    }
    Ok(OracleEstimate { std_error: total.std_errors(), mean: total.mean, n_samples: n, seed })
}

/// Hit-or-miss volume estimate over the axis-aligned bounding box.
pub fn mc_volume(f: &Frustum, n: usize, seed: u64) -> Result<(f64, f64)> {
    check_convex(f)?;
    let tris = triangulate(f);
    let lo = f.vertices.iter().fold(Vec3::repeat(f64::INFINITY), |a, v| a.inf(v));
    let hi = f.vertices.iter().fold(Vec3::repeat(f64::NEG_INFINITY), |a, v| a.sup(v));
    let extent = hi - lo;
    let box_volume = extent.x * extent.y * extent.z;
    let hits: usize = map_chunks(n, |chunk, len| {
        let mut rng = stream_rng(seed, chunk);
        (0..len)
            .filter(|_| {
                let p = lo + extent.component_mul(&Vec3::new(rng.random(), rng.random(), rng.random()));
                contains(&tris, &p, 0.0)
            })
            .count()
    })
    .into_iter()
    .sum();
    let p = hits as f64 / n as f64;
    Ok((p * box_volume, box_volume * (p * (1.0 - p) / n as f64).sqrt()))
}

/// Sample moments of uniform points in a conical frustum.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub mean: Vec3,
    pub covariance: Mat3,
    pub mean_se: Vec3,
    pub covariance_se: Mat3,
    pub n_samples: usize,
    pub acceptance: f64,
}

struct Cone {
    d: Vec3,
    o: Vec3,
    r_dot: f64,
    t0: f64,
    t1: f64,
    e1: Vec3,
    e2: Vec3,
}

impl Cone {
    /// Accepted samples of one chunk, plus the number of proposals drawn.
    fn chunk(&self, seed: u64, chunk: u64, len: usize) -> (Vec<Vec3>, usize) {
        let mut rng = stream_rng(seed, chunk);
        let r_max = self.r_dot * self.t1;
        let mut out = Vec::with_capacity(len);
        let mut drawn = 0;
        while out.len() < len {
            drawn += 1;
            let t = self.t0 + (self.t1 - self.t0) * rng.random::<f64>();
            let radius = r_max * rng.random::<f64>().sqrt();
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            if radius <= self.r_dot * t {
                let (s, c) = angle.sin_cos();
                out.push(self.o + t * self.d + radius * (c * self.e1 + s * self.e2));
            }
        }
        (out, drawn)
    }
}

/// Two passes over the same streams: the first fixes the mean, the second
/// accumulates centered products and their spread.
pub fn mc_moments(d: &Vec3, o: &Vec3, r_dot: f64, t0: f64, t1: f64, n: usize, seed: u64) -> Result<MomentEstimate> {
    crate::error::ensure_finite("cone", &[d.x, d.y, d.z, o.x, o.y, o.z, r_dot, t0, t1])?;
    if !(t1 > t0 && t0 >= 0.0 && r_dot > 0.0 && d.norm() > 0.0) || n < 2 {
        return Err(Error::Domain("invalid cone frustum".into()));
    }
    let axis = d.normalize();
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let cone = Cone { d: *d, o: *o, r_dot, t0, t1, e1, e2 };

    let first = map_chunks(n, |chunk, len| {
        let (pts, drawn) = cone.chunk(seed, chunk, len);
        let mut m = Moments::new(3);
        for p in &pts {
            m.push(p.as_slice());
        }
        (m, drawn)
    });
    let mut mean_m = Moments::new(3);
    let mut drawn = 0;
    for (m, dr) in &first {
        mean_m.merge(m);
        drawn += dr;
    }
    let acceptance = n as f64 / drawn as f64;
    if acceptance < LOW_ACCEPTANCE {
        log::warn!("cone rejection sampling accepted only {:.3}% of proposals", 100.0 * acceptance);
    }
    let mean = Vec3::from_column_slice(&mean_m.mean);
    let mean_se = Vec3::from_column_slice(&mean_m.std_errors());

    const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let second = map_chunks(n, |chunk, len| {
        let (pts, _) = cone.chunk(seed, chunk, len);
        let mut m = Moments::new(6);
        for p in &pts {
            let c = p - mean;
            let prods = PAIRS.map(|(i, j)| c[i] * c[j]);
            m.push(&prods);
        }
        m
    });
    let mut cov_m = Moments::new(6);
    for m in &second {
        cov_m.merge(m);
    }
    let nf = n as f64;
    let se = cov_m.std_errors();
    let mut covariance = Matrix3::zeros();
    let mut covariance_se = Matrix3::zeros();
    for (idx, &(i, j)) in PAIRS.iter().enumerate() {
        // unbiased: the centered products use the sample mean
        let c = cov_m.mean[idx] * nf / (nf - 1.0);
        covariance[(i, j)] = c;
        covariance[(j, i)] = c;
        covariance_se[(i, j)] = se[idx];
        covariance_se[(j, i)] = se[idx];
    }
    Ok(MomentEstimate { mean, covariance, mean_se, covariance_se, n_samples: n, acceptance })
}
