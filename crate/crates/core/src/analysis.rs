//! EIPE-vs-IPE sweeps, underflow scans, single-region encodings and their
//! CSV forms.
//!
//! Every table numbers octaves from 1: the row with `l = n` holds the
//! feature at frequency `2^(n-1)`. Floats are written with the shortest
//! decimal that round-trips.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::baseline::{cone_moments, contract_gaussian, gaussian_ipe, pe, square_pyramid_eipe, GaussianRegion};
use crate::corpus::{near_degenerate_contracted, random_frustum, FrustumRanges};
use crate::error::{ensure_finite, Error, Result};
use crate::exact::{eipe, eipe_with_guard, Component, EncodingVector, Guard};
use crate::geometry::{contract_frustum, contract_point, frustum_from_pixel, parse_numbers, triangulate, CameraPose, Frustum};
use crate::numeric::ordered_map;
use crate::oracle::{decompose, mc_encoding, stream_rng, OracleEstimate};
use crate::Vec3;

/// Schema version stamped into every CSV header.
pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_HEADER: &str =
    "mu_t,delta_i,l,axis,eipe_sin,eipe_cos,ipe_sin,ipe_cos,abs_err_sin,abs_err_cos,underflow_flag";
pub const ENCODE_HEADER: &str = "region,l,axis,kind,value";
pub const ORACLE_HEADER: &str = "region,l,axis,kind,mean,std_error,eipe";
pub const UNDERFLOW_HEADER: &str = "region,l,axis,kind,value";

const AXES: [&str; 3] = ["x", "y", "z"];

/// Shortest round-trip decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn write_preamble(w: &mut impl Write, command: &str, echo: &[(&str, String)]) -> Result<()> {
    writeln!(w, "# exact-ipe {} {command} schema={SCHEMA_VERSION}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in echo {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

fn join_list<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_vec(v: &Vec3) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn check_octave_list(l_list: &[usize]) -> Result<usize> {
    if l_list.is_empty() || l_list.contains(&0) {
        return Err(Error::InvalidInput("octave list must be non-empty and 1-based".into()));
    }
    Ok(*l_list.iter().max().unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Vary `mu_t` at fixed `delta_i`.
    MuSweep,
    /// Vary `delta_i` at fixed `mu_t`.
    DeltaSweep,
    /// `mu_sweep` over tiny frusta.
    SmallFrustum,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::MuSweep => "mu_sweep",
            SweepMode::DeltaSweep => "delta_sweep",
            SweepMode::SmallFrustum => "small_frustum",
        }
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu_sweep" | "mu-sweep" => Ok(SweepMode::MuSweep),
            "delta_sweep" | "delta-sweep" => Ok(SweepMode::DeltaSweep),
            "small_frustum" | "small-frustum" => Ok(SweepMode::SmallFrustum),
            _ => Err(Error::Parse(format!("unknown sweep mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    pub fn as_str(self) -> &'static str {
        match self {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        }
    }
}

impl FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            _ => Err(Error::Parse(format!("unknown grid spacing `{s}`"))),
        }
    }
}

/// `count` points from `min` to `max`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("grid bounds", &[self.min, self.max])?;
        if self.count < 2 {
            return Err(Error::Domain("grid needs at least two points".into()));
        }
        if !(self.max > self.min) {
            return Err(Error::Domain("grid max must exceed grid min".into()));
        }
        if self.spacing == Spacing::Log && !(self.min > 0.0) {
            return Err(Error::Domain("log grid needs a positive minimum".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.max;
                }
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + s * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", fmt_f64(self.min), fmt_f64(self.max), self.count, self.spacing.as_str())
    }
}

/// The sweep pose when no pose file is given: identity rotation, origin at
/// zero, pixel width 0.01, looking along `+z`.
pub fn default_sweep_pose() -> CameraPose {
    CameraPose::identity(0.01).expect("constant pose is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mode: SweepMode,
    /// `delta_i` for the `mu_t` sweeps, `mu_t` for `delta_sweep`.
    pub fixed: f64,
    pub grid: Grid,
    pub l_list: Vec<usize>,
    pub pose: CameraPose,
    /// Camera-frame pixel direction, unit z component.
    pub direction: Vec3,
    pub contract: bool,
    /// Echoed in the header only; sweeps are not random.
    pub seed: u64,
}

impl SweepConfig {
    pub fn defaults(mode: SweepMode) -> Self {
        let (fixed, grid) = match mode {
            SweepMode::MuSweep => (0.02, Grid { min: 0.5, max: 6.0, count: 111, spacing: Spacing::Linear }),
            SweepMode::DeltaSweep => (3.0, Grid { min: 0.02, max: 2.0, count: 100, spacing: Spacing::Log }),
            SweepMode::SmallFrustum => (5e-4, Grid { min: 0.05, max: 1.0, count: 96, spacing: Spacing::Linear }),
        };
        Self {
            mode,
            fixed,
            grid,
            l_list: vec![1, 2, 3, 4, 5],
            pose: default_sweep_pose(),
            direction: Vec3::z(),
            contract: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        check_octave_list(&self.l_list)?;
        ensure_finite("sweep parameter", &[self.fixed])?;
        ensure_finite("pixel direction", self.direction.as_slice())?;
        if !(self.fixed > 0.0) {
            return Err(Error::Domain("fixed sweep parameter must be positive".into()));
        }
        let (mu_min, delta_max) = match self.mode {
            SweepMode::DeltaSweep => (self.fixed, self.grid.max),
            _ => (self.grid.min, self.fixed),
        };
        if self.mode == SweepMode::DeltaSweep && !(self.grid.min > 0.0) {
            return Err(Error::Domain("frustum lengths must be positive".into()));
        }
        if !(mu_min - 0.5 * delta_max > 0.0) {
            return Err(Error::Domain(format!(
                "frustum [mu_t - delta_i/2, mu_t + delta_i/2] must start in front of the camera (mu_t {mu_min}, delta_i {delta_max})"
            )));
        }
        Ok(())
    }

    fn point(&self, value: f64) -> (f64, f64) {
        match self.mode {
            SweepMode::DeltaSweep => (self.fixed, value),
            _ => (value, self.fixed),
        }
    }

    fn echo(&self) -> Vec<(&'static str, String)> {
        let fixed_name = if self.mode == SweepMode::DeltaSweep { "mu_t" } else { "delta_i" };
        let grid_name = if self.mode == SweepMode::DeltaSweep { "delta_i_grid" } else { "mu_t_grid" };
        vec![
            ("mode", self.mode.as_str().to_string()),
            (fixed_name, fmt_f64(self.fixed)),
            (grid_name, self.grid.to_string()),
            ("L", join_list(&self.l_list)),
            ("pose", self.pose.to_string()),
            ("direction", fmt_vec(&self.direction)),
            ("contract", on_off(self.contract).to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub mu_t: f64,
    pub delta_i: f64,
    /// 1-based octave number.
    pub l: usize,
    pub axis: usize,
    pub eipe_sin: f64,
    pub eipe_cos: f64,
    pub ipe_sin: f64,
    pub ipe_cos: f64,
    pub abs_err_sin: f64,
    pub abs_err_cos: f64,
    /// Set when the guard snapped a coordinate difference on this axis or
    /// an EIPE value of the row left `[-1, 1]`.
    pub underflow_flag: bool,
}

/// Pyramid EIPE and cone-Gaussian IPE at one grid point. The cone shares the
/// pose, ray and slab; its radius slope is the pixel width `omega`.
fn sweep_point(cfg: &SweepConfig, mu_t: f64, delta_i: f64, octaves: usize) -> Result<Vec<SweepRow>> {
    let (t0, t1) = (mu_t - 0.5 * delta_i, mu_t + 0.5 * delta_i);
    let mut frustum = frustum_from_pixel(&cfg.pose, &cfg.direction, t0, t1)?;
    let d = cfg.pose.world_direction(&cfg.direction);
    let mut gaussian = cone_moments(&d, cfg.pose.origin(), cfg.pose.omega(), t0, t1)?;
    if cfg.contract {
        frustum = contract_frustum(&frustum);
        gaussian = contract_gaussian(&gaussian)?;
    }
    // unclamped, so numerical trouble in tiny frusta stays visible
    let exact = eipe_with_guard(&triangulate(&frustum), octaves, Guard::On)?;
    let approx = gaussian_ipe(&gaussian, octaves)?;
    let mut rows = Vec::with_capacity(3 * cfg.l_list.len());
    for &l in &cfg.l_list {
        for axis in 0..3 {
            let (es, ec) = (exact.encoding.sin(l - 1, axis), exact.encoding.cos(l - 1, axis));
            let (is, ic) = (approx.sin(l - 1, axis), approx.cos(l - 1, axis));
            rows.push(SweepRow {
                mu_t,
                delta_i,
                l,
                axis,
                eipe_sin: es,
                eipe_cos: ec,
                ipe_sin: is,
                ipe_cos: ic,
                abs_err_sin: (es - is).abs(),
                abs_err_cos: (ec - ic).abs(),
                underflow_flag: exact.guard_activations[axis] > 0 || !(es.abs() <= 1.0 && ec.abs() <= 1.0),
            });
        }
    }
    Ok(rows)
}

/// Rows ordered by sweep value, then `l` (in list order), then axis.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let octaves = check_octave_list(&cfg.l_list)?;
    let results = ordered_map(cfg.grid.values(), |v| {
        let (mu, delta) = cfg.point(v);
        sweep_point(cfg, mu, delta, octaves)
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_sweep_csv(w: &mut impl Write, cfg: &SweepConfig, rows: &[SweepRow]) -> Result<()> {
    write_preamble(w, "sweep", &cfg.echo())?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.mu_t),
            fmt_f64(r.delta_i),
            r.l,
            AXES[r.axis],
            fmt_f64(r.eipe_sin),
            fmt_f64(r.eipe_cos),
            fmt_f64(r.ipe_sin),
            fmt_f64(r.ipe_cos),
            fmt_f64(r.abs_err_sin),
            fmt_f64(r.abs_err_cos),
            u8::from(r.underflow_flag)
        )?;
    }
    Ok(())
}

/// Mean of both error columns over the rows at one `(mu_t, delta_i)` point
/// and octave `l`.
pub fn mean_abs_error(rows: &[SweepRow], mu_t: f64, delta_i: f64, l: usize) -> Option<f64> {
    let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.mu_t == mu_t && r.delta_i == delta_i && r.l == l).collect();
    if sel.is_empty() {
        return None;
    }
    Some(sel.iter().map(|r| r.abs_err_sin + r.abs_err_cos).sum::<f64>() / (2 * sel.len()) as f64)
}

/// A region to encode: either a pixel frustum of a pose or eight explicit
/// vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Pixel { pose: CameraPose, direction: Vec3, t_near: f64, t_far: f64 },
    Vertices(Frustum),
}

impl Region {
    pub fn frustum(&self) -> Result<Frustum> {
        match self {
            Region::Pixel { pose, direction, t_near, t_far } => frustum_from_pixel(pose, direction, *t_near, *t_far),
            Region::Vertices(f) => Ok(*f),
        }
    }

    /// Gaussian stand-in: the cone moments for pixel regions, the exact
    /// uniform moments for vertex regions (which must be convex).
    pub fn gaussian(&self) -> Result<GaussianRegion> {
        match self {
            Region::Pixel { pose, direction, t_near, t_far } => {
                cone_moments(&pose.world_direction(direction), pose.origin(), pose.omega(), *t_near, *t_far)
            }
            Region::Vertices(f) => {
                let (mean, cov) = decompose(f)?.moments();
                GaussianRegion::new(mean, cov)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    /// Point encoding at the vertex centroid.
    Pe,
    /// Gaussian IPE.
    Ipe,
    Eipe,
    /// Closed form; pixel regions through the central pixel only.
    SquarePyramid,
}

impl Encoder {
    pub fn as_str(self) -> &'static str {
        match self {
            Encoder::Pe => "pe",
            Encoder::Ipe => "ipe",
            Encoder::Eipe => "eipe",
            Encoder::SquarePyramid => "square_pyramid",
        }
    }
}

impl FromStr for Encoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pe" => Ok(Encoder::Pe),
            "ipe" => Ok(Encoder::Ipe),
            "eipe" => Ok(Encoder::Eipe),
            "square_pyramid" | "square-pyramid" => Ok(Encoder::SquarePyramid),
            _ => Err(Error::Parse(format!("unknown encoder `{s}`"))),
        }
    }
}

pub fn encode_region(region: &Region, encoder: Encoder, octaves: usize, contract: bool) -> Result<EncodingVector> {
    match encoder {
        Encoder::Pe => {
            let c = region.frustum()?.vertex_centroid();
            pe(&if contract { contract_point(&c) } else { c }, octaves)
        }
        Encoder::Ipe => {
            let g = region.gaussian()?;
            gaussian_ipe(&if contract { contract_gaussian(&g)? } else { g }, octaves)
        }
        Encoder::Eipe => {
            let f = region.frustum()?;
            eipe(&triangulate(&if contract { contract_frustum(&f) } else { f }), octaves)
        }
        Encoder::SquarePyramid => match region {
            _ if contract => Err(Error::UnsupportedRegion(
                "the square-pyramid closed form does not apply to contracted frusta".into(),
            )),
            Region::Pixel { pose, direction, t_near, t_far } if *direction == Vec3::z() => {
                square_pyramid_eipe(pose, *t_near, *t_far, octaves)
            }
            _ => Err(Error::UnsupportedRegion(
                "the square-pyramid closed form needs a pose with the central pixel direction (0,0,1)".into(),
            )),
        },
    }
}

/// One line per region, 24 numbers: the eight vertices in frustum order.
pub fn parse_region_file(text: &str) -> Result<Vec<Frustum>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = parse_numbers(line)?;
        if nums.len() != 24 {
            return Err(Error::Parse(format!("line {}: region needs 24 numbers, found {}", i + 1, nums.len())));
        }
        let vertices = std::array::from_fn(|v| Vec3::new(nums[3 * v], nums[3 * v + 1], nums[3 * v + 2]));
        out.push(Frustum::from_vertices(vertices)?);
    }
    Ok(out)
}

/// Inverse of [`parse_region_file`].
pub fn write_region_file(w: &mut impl Write, regions: &[Frustum]) -> Result<()> {
    for f in regions {
        let fields: Vec<String> = f.vertices.iter().flat_map(|v| v.iter().map(|x| fmt_f64(*x))).collect();
        writeln!(w, "{}", fields.join(" "))?;
    }
    Ok(())
}

fn for_each_component(e: &EncodingVector, mut f: impl FnMut(usize, usize, Component, f64) -> Result<()>) -> Result<()> {
    for l in 0..e.octaves() {
        for axis in 0..3 {
            for kind in [Component::Sin, Component::Cos] {
                f(l + 1, axis, kind, e.get(kind, l, axis))?;
            }
        }
    }
    Ok(())
}

/// Rows ordered by region, `l`, axis, then sin before cos.
pub fn write_encode_csv(
    w: &mut impl Write,
    echo: &[(&str, String)],
    encodings: &[EncodingVector],
) -> Result<()> {
    write_preamble(w, "encode", echo)?;
    writeln!(w, "{ENCODE_HEADER}")?;
    for (region, e) in encodings.iter().enumerate() {
        for_each_component(e, |l, axis, kind, v| {
            writeln!(w, "{region},{l},{},{},{}", AXES[axis], kind.as_str(), fmt_f64(v))?;
            Ok(())
        })?;
    }
    Ok(())
}

/// Monte-Carlo estimate next to the EIPE of each region; region `i` uses
/// seed `seed + i`.
pub fn run_oracle(regions: &[Frustum], octaves: usize, n: usize, seed: u64) -> Result<Vec<(OracleEstimate, EncodingVector)>> {
    regions
        .iter()
        .enumerate()
        .map(|(i, f)| Ok((mc_encoding(f, octaves, n, seed.wrapping_add(i as u64))?, eipe(&triangulate(f), octaves)?)))
        .collect()
}

pub fn write_oracle_csv(
    w: &mut impl Write,
    echo: &[(&str, String)],
    results: &[(OracleEstimate, EncodingVector)],
) -> Result<()> {
    write_preamble(w, "oracle", echo)?;
    writeln!(w, "{ORACLE_HEADER}")?;
    for (region, (est, exact)) in results.iter().enumerate() {
        for_each_component(exact, |l, axis, kind, v| {
            let i = exact.index(kind, l - 1, axis);
            writeln!(
                w,
                "{region},{l},{},{},{},{},{}",
                AXES[axis],
                kind.as_str(),
                fmt_f64(est.mean[i]),
                fmt_f64(est.std_error[i]),
                fmt_f64(v)
            )?;
            Ok(())
        })?;
    }
    Ok(())
}

/// Generated region sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    /// Random pixel frusta over the default [`FrustumRanges`].
    Random,
    /// Contracted far-field frusta with coordinate differences near 1e-8.
    NearDegenerate,
}

impl CorpusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusKind::Random => "random",
            CorpusKind::NearDegenerate => "near_degenerate",
        }
    }
}

impl FromStr for CorpusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(CorpusKind::Random),
            "near_degenerate" | "near-degenerate" => Ok(CorpusKind::NearDegenerate),
            _ => Err(Error::Parse(format!("unknown corpus `{s}`"))),
        }
    }
}

/// Region `i` is drawn from stream `i` of `seed`.
pub fn generate_corpus(kind: CorpusKind, count: usize, seed: u64) -> Result<Vec<Frustum>> {
    ordered_map((0..count as u64).collect(), |i| {
        let mut rng = stream_rng(seed, i);
        match kind {
            CorpusKind::Random => random_frustum(&mut rng, &FrustumRanges::default()).map(|p| p.frustum),
            CorpusKind::NearDegenerate => near_degenerate_contracted(&mut rng, 1e-8),
        }
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub region: usize,
    /// 1-based octave number.
    pub l: usize,
    pub axis: usize,
    pub kind: Component,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnderflowReport {
    pub guard: Guard,
    pub regions: usize,
    pub violations: Vec<Violation>,
    /// Triangle/axis pairs where the guard snapped a nonzero difference.
    pub guard_activations: usize,
}

/// Unclamped EIPE of every region; a violation is any component with
/// magnitude above 1 (or NaN).
pub fn underflow_scan(regions: &[Frustum], octaves: usize, guard: Guard) -> Result<UnderflowReport> {
    let reports = ordered_map(regions.iter().collect(), |f| eipe_with_guard(&triangulate(f), octaves, guard));
    let mut violations = Vec::new();
    let mut guard_activations = 0;
    for (region, r) in reports.into_iter().enumerate() {
        let r = r?;
        guard_activations += r.guard_activations.iter().sum::<usize>();
        for (i, value) in r.out_of_bounds() {
            let (kind, l, axis) = r.encoding.label(i);
            violations.push(Violation { region, l: l + 1, axis, kind, value });
        }
    }
    Ok(UnderflowReport { guard, regions: regions.len(), violations, guard_activations })
}

pub fn write_underflow_csv(w: &mut impl Write, echo: &[(&str, String)], report: &UnderflowReport) -> Result<()> {
    let mut echo = echo.to_vec();
    echo.push(("regions", report.regions.to_string()));
    echo.push(("violations", report.violations.len().to_string()));
    echo.push(("guard_activations", report.guard_activations.to_string()));
    write_preamble(w, "underflow-scan", &echo)?;
    writeln!(w, "{UNDERFLOW_HEADER}")?;
    for v in &report.violations {
        writeln!(w, "{},{},{},{},{}", v.region, v.l, AXES[v.axis], v.kind.as_str(), fmt_f64(v.value))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: SweepMode) -> SweepConfig {
        let mut cfg = SweepConfig::defaults(mode);
        cfg.grid.count = 12;
        cfg
    }

    #[test]
    fn grids_hit_both_ends() {
        let g = Grid { min: 0.02, max: 2.0, count: 5, spacing: Spacing::Log };
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], 0.02);
        assert_eq!(v[4], 2.0);
        assert!((v[2] - 0.2).abs() < 1e-15);
        assert!(Grid { count: 1, ..g }.validate().is_err());
        assert!(Grid { min: 0.0, ..g }.validate().is_err());
    }

    #[test]
    fn sweep_schema() {
        for mode in [SweepMode::MuSweep, SweepMode::DeltaSweep, SweepMode::SmallFrustum] {
            let cfg = small(mode);
            let rows = run_sweep(&cfg).unwrap();
            assert_eq!(rows.len(), cfg.grid.count * cfg.l_list.len() * 3);
            for r in &rows {
                assert_eq!(r.abs_err_sin, (r.eipe_sin - r.ipe_sin).abs());
                assert_eq!(r.abs_err_cos, (r.eipe_cos - r.ipe_cos).abs());
            }
        }
    }

    #[test]
    fn sweep_csv_round_trips_values() {
        let cfg = small(SweepMode::MuSweep);
        let rows = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &cfg, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], SWEEP_HEADER);
        assert_eq!(data.len(), rows.len() + 1);
        let first: Vec<&str> = data[1].split(',').collect();
        assert_eq!(first[4].parse::<f64>().unwrap(), rows[0].eipe_sin);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn invalid_sweeps() {
        let mut cfg = small(SweepMode::DeltaSweep);
        cfg.grid.max = 7.0;
        assert!(matches!(run_sweep(&cfg), Err(Error::Domain(_))));
        let mut cfg = small(SweepMode::MuSweep);
        cfg.l_list = vec![0, 2];
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn encoders_on_the_centered_cube() {
        let region = Region::Vertices(Frustum::axis_aligned_box(Vec3::repeat(-1.0), Vec3::repeat(1.0)).unwrap());
        let e = encode_region(&region, Encoder::Eipe, 1, false).unwrap();
        let p = encode_region(&region, Encoder::Pe, 1, false).unwrap();
        for k in 0..3 {
            assert!((e.cos(0, k) - 1f64.sin()).abs() < 1e-14);
            assert!(e.sin(0, k).abs() < 1e-14);
            assert_eq!(p.cos(0, k), 1.0);
            assert_eq!(p.sin(0, k), 0.0);
        }
        // uniform cube variance 1/3 per axis
        let g = encode_region(&region, Encoder::Ipe, 1, false).unwrap();
        assert!((g.cos(0, 0) - (-1.0f64 / 6.0).exp()).abs() < 1e-12);
        assert!(encode_region(&region, Encoder::SquarePyramid, 1, false).is_err());
    }

    #[test]
    fn contraction_is_a_no_op_inside_the_unit_ball() {
        let region = Region::Vertices(Frustum::axis_aligned_box(Vec3::repeat(-0.5), Vec3::repeat(0.5)).unwrap());
        for enc in [Encoder::Pe, Encoder::Ipe, Encoder::Eipe] {
            assert_eq!(encode_region(&region, enc, 3, false).unwrap(), encode_region(&region, enc, 3, true).unwrap());
        }
    }

    #[test]
    fn square_pyramid_encoder_matches_general() {
        let pose = CameraPose::new(
            nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 0.9).into_inner(),
            Vec3::new(0.1, 0.2, -0.3),
            0.05,
        )
        .unwrap();
        let region = Region::Pixel { pose, direction: Vec3::z(), t_near: 1.0, t_far: 1.5 };
        let a = encode_region(&region, Encoder::SquarePyramid, 3, false).unwrap();
        let b = encode_region(&region, Encoder::Eipe, 3, false).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn region_file_round_trip() {
        let regions = generate_corpus(CorpusKind::Random, 5, 3).unwrap();
        let mut buf = Vec::new();
        write_region_file(&mut buf, &regions).unwrap();
        let parsed = parse_region_file(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(parsed.iter().map(|f| f.vertices).collect::<Vec<_>>(), regions.iter().map(|f| f.vertices).collect::<Vec<_>>());
        assert!(matches!(parse_region_file("1 2 3"), Err(Error::Parse(_))));
        assert!(parse_region_file("# nothing\n\n").unwrap().is_empty());
    }

    #[test]
    fn guard_controls_out_of_bound_values() {
        let regions = generate_corpus(CorpusKind::NearDegenerate, 20, 1).unwrap();
        let off = underflow_scan(&regions, 8, Guard::Off).unwrap();
        let on = underflow_scan(&regions, 8, Guard::On).unwrap();
        assert!(!off.violations.is_empty());
        // differences just above the threshold still lose a few digits in the
        // divided differences, so the guard shrinks violations without removing all
        assert!(on.violations.len() < off.violations.len());
        assert!(on.violations.iter().all(|v| v.value.abs() < 1.0 + 1e-3));
        assert!(on.guard_activations > 0);
        assert_eq!(off.guard_activations, 0);
        let empty = underflow_scan(&[], 4, Guard::Off).unwrap();
        assert_eq!((empty.regions, empty.violations.len()), (0, 0));
    }
}
