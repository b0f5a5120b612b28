use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exact_ipe::analysis::{
    encode_region, fmt_f64, generate_corpus, parse_region_file, run_oracle, run_sweep, underflow_scan,
    write_encode_csv, write_oracle_csv, write_sweep_csv, write_underflow_csv, CorpusKind, Encoder, Region, Spacing,
    SweepConfig, SweepMode,
};
use exact_ipe::{CameraPose, Error, Frustum, Guard, Vec3};

#[derive(Parser)]
#[command(name = "exact-ipe", version, about = "Exact and Gaussian integrated positional encodings of pixel frusta")]
struct Cli {
    /// Base seed for anything random.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 picks the number of cores. Never changes output.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Write the CSV here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode one or more regions.
    Encode(EncodeArgs),
    /// EIPE against the Gaussian IPE along a ray.
    Sweep(SweepArgs),
    /// Look for encoding components outside [-1, 1].
    UnderflowScan(ScanArgs),
    /// Monte-Carlo encoding next to the EIPE.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RegionArgs {
    /// Pose record: 9 rotation entries (row-major), origin, pixel width.
    #[arg(long)]
    pose_file: Option<PathBuf>,
    /// Camera-frame pixel offset `x,y`; the direction is `(x, y, 1)`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0])]
    pixel: Vec<f64>,
    #[arg(long)]
    t_near: Option<f64>,
    #[arg(long)]
    t_far: Option<f64>,
    /// File with one region per line, 24 numbers (eight vertices).
    #[arg(long, conflicts_with_all = ["pose_file", "box_"])]
    region_file: Option<PathBuf>,
    /// Axis-aligned box `xmin,ymin,zmin,xmax,ymax,zmax`.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "pose_file")]
    box_: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncoderArg {
    Pe,
    Ipe,
    Eipe,
    SquarePyramid,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(flatten)]
    region: RegionArgs,
    /// Number of octaves.
    #[arg(long = "L", default_value_t = 4)]
    octaves: usize,
    #[arg(long, value_enum, default_value_t = EncoderArg::Eipe)]
    encoder: EncoderArg,
    /// Contract the region into the radius-2 ball first.
    #[arg(long)]
    contract: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MuSweep,
    DeltaSweep,
    SmallFrustum,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::MuSweep)]
    mode: ModeArg,
    /// The held parameter: delta_i for the mu_t sweeps, mu_t for delta_sweep.
    #[arg(long)]
    fixed: Option<f64>,
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, value_enum)]
    spacing: Option<SpacingArg>,
    /// Octave numbers to report, starting at 1.
    #[arg(long = "L", value_delimiter = ',')]
    octaves: Option<Vec<usize>>,
    #[arg(long)]
    pose_file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0])]
    pixel: Vec<f64>,
    #[arg(long)]
    contract: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorpusArg {
    Random,
    NearDegenerate,
}

#[derive(Args)]
struct ScanArgs {
    /// Regions to scan; without it a corpus is generated.
    #[arg(long)]
    region_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CorpusArg::NearDegenerate)]
    corpus: CorpusArg,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long = "L", default_value_t = 8)]
    octaves: usize,
    #[arg(long, value_enum, default_value_t = OnOff::On, require_equals = true, num_args = 1)]
    guard: OnOff,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    region: RegionArgs,
    #[arg(long = "L", default_value_t = 4)]
    octaves: usize,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::InvalidInput(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn direction(pixel: &[f64]) -> Result<Vec3, Error> {
    match pixel {
        [x, y] => Ok(Vec3::new(*x, *y, 1.0)),
        _ => Err(Error::Parse(format!("--pixel takes 2 numbers, got {}", pixel.len()))),
    }
}

fn load_pose(path: Option<&Path>) -> Result<CameraPose, Error> {
    match path {
        Some(p) => read(p)?.parse(),
        None => Ok(exact_ipe::analysis::default_sweep_pose()),
    }
}

/// The regions plus a config echo describing where they came from.
fn load_regions(args: &RegionArgs) -> Result<(Vec<Region>, Vec<(&'static str, String)>), Error> {
    if let Some(path) = &args.region_file {
        let regions = parse_region_file(&read(path)?)?;
        let echo = vec![("region_file", path.display().to_string())];
        return Ok((regions.into_iter().map(Region::Vertices).collect(), echo));
    }
    if let Some(b) = &args.box_ {
        if b.len() != 6 {
            return Err(Error::Parse(format!("--box takes 6 numbers, got {}", b.len())));
        }
        let f = Frustum::axis_aligned_box(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]))?;
        let text: Vec<String> = b.iter().map(|v| fmt_f64(*v)).collect();
        return Ok((vec![Region::Vertices(f)], vec![("box", text.join(","))]));
    }
    let (Some(t_near), Some(t_far)) = (args.t_near, args.t_far) else {
        return Err(Error::InvalidInput(
            "give --region-file, --box, or --t-near and --t-far (with an optional --pose-file)".into(),
        ));
    };
    let pose = load_pose(args.pose_file.as_deref())?;
    let dir = direction(&args.pixel)?;
    let echo = vec![
        ("pose", pose.to_string()),
        ("pixel", format!("{},{}", fmt_f64(args.pixel[0]), fmt_f64(args.pixel[1]))),
        ("t_near", fmt_f64(t_near)),
        ("t_far", fmt_f64(t_far)),
    ];
    Ok((vec![Region::Pixel { pose, direction: dir, t_near, t_far }], echo))
}

fn encode(args: &EncodeArgs, w: &mut Vec<u8>) -> Result<(), Error> {
    let encoder = match args.encoder {
        EncoderArg::Pe => Encoder::Pe,
        EncoderArg::Ipe => Encoder::Ipe,
        EncoderArg::Eipe => Encoder::Eipe,
        EncoderArg::SquarePyramid => Encoder::SquarePyramid,
    };
    let (regions, mut echo) = load_regions(&args.region)?;
    let encodings = regions
        .iter()
        .map(|r| encode_region(r, encoder, args.octaves, args.contract))
        .collect::<Result<Vec<_>, _>>()?;
    echo.push(("encoder", encoder.as_str().into()));
    echo.push(("L", args.octaves.to_string()));
    echo.push(("contract", on_off(args.contract).into()));
    write_encode_csv(w, &echo, &encodings)
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

fn sweep(args: &SweepArgs, seed: u64, w: &mut Vec<u8>) -> Result<(), Error> {
    let mode = match args.mode {
        ModeArg::MuSweep => SweepMode::MuSweep,
        ModeArg::DeltaSweep => SweepMode::DeltaSweep,
        ModeArg::SmallFrustum => SweepMode::SmallFrustum,
    };
    let mut cfg = SweepConfig::defaults(mode);
    if let Some(v) = args.fixed {
        cfg.fixed = v;
    }
    if let Some(v) = args.min {
        cfg.grid.min = v;
    }
    if let Some(v) = args.max {
        cfg.grid.max = v;
    }
    if let Some(v) = args.count {
        cfg.grid.count = v;
    }
    if let Some(s) = args.spacing {
        cfg.grid.spacing = match s {
            SpacingArg::Linear => Spacing::Linear,
            SpacingArg::Log => Spacing::Log,
        };
    }
    if let Some(l) = &args.octaves {
        cfg.l_list = l.clone();
    }
    cfg.pose = load_pose(args.pose_file.as_deref())?;
    cfg.direction = direction(&args.pixel)?;
    cfg.contract = args.contract;
    cfg.seed = seed;
    let rows = run_sweep(&cfg)?;
    write_sweep_csv(w, &cfg, &rows)
}

/// Fails with a domain error when the guard was on and a value escaped,
/// after the report has been written.
fn scan(args: &ScanArgs, seed: u64, w: &mut Vec<u8>) -> Result<(), Error> {
    let mut echo = Vec::new();
    let regions = match &args.region_file {
        Some(path) => {
            echo.push(("region_file", path.display().to_string()));
            parse_region_file(&read(path)?)?
        }
        None => {
            let kind = match args.corpus {
                CorpusArg::Random => CorpusKind::Random,
                CorpusArg::NearDegenerate => CorpusKind::NearDegenerate,
            };
            echo.push(("corpus", kind.as_str().into()));
            echo.push(("count", args.count.to_string()));
            echo.push(("seed", seed.to_string()));
            generate_corpus(kind, args.count, seed)?
        }
    };
    let guard = if args.guard == OnOff::On { Guard::On } else { Guard::Off };
    echo.push(("L", args.octaves.to_string()));
    echo.push(("guard", on_off(guard == Guard::On).into()));
    let report = underflow_scan(&regions, args.octaves, guard)?;
    write_underflow_csv(w, &echo, &report)?;
    if guard == Guard::On && !report.violations.is_empty() {
        return Err(Error::Domain(format!(
            "{} components outside [-1, 1] with the guard on",
            report.violations.len()
        )));
    }
    Ok(())
}

fn oracle(args: &OracleArgs, seed: u64, w: &mut Vec<u8>) -> Result<(), Error> {
    let (regions, mut echo) = load_regions(&args.region)?;
    let frusta = regions.iter().map(Region::frustum).collect::<Result<Vec<_>, _>>()?;
    let results = run_oracle(&frusta, args.octaves, args.samples, seed)?;
    echo.push(("L", args.octaves.to_string()));
    echo.push(("samples", args.samples.to_string()));
    echo.push(("seed", seed.to_string()));
    write_oracle_csv(w, &echo, &results)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", p.display())))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = match &cli.command {
        Command::Encode(a) => encode(a, &mut buf),
        Command::Sweep(a) => sweep(a, cli.seed, &mut buf),
        Command::UnderflowScan(a) => scan(a, cli.seed, &mut buf),
        Command::Oracle(a) => oracle(a, cli.seed, &mut buf),
    };
    if !buf.is_empty() {
        emit(cli.output.as_deref(), &buf)?;
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exact-ipe: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
