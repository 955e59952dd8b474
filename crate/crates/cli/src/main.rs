use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use projwarp::bench::{self, BenchConfig, ReportFormat};
use projwarp::image::{load_image, save_image};
use projwarp::kernels::Interpolator;
use projwarp::{
    synth, warp, Error, Homography, ImageBuffer, Kernel, KernelLut, MipPyramid, RipMap,
    SamplerConfig, SamplingMethod, WarpRequest,
};

#[derive(Parser)]
#[command(
    name = "projwarp",
    version,
    about = "Projective image warping by inverse mapping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Warp one image through a homography.
    Warp(WarpArgs),
    /// Run the composed-triple benchmark over a corpus.
    Bench(BenchArgs),
    /// Dump the mip-map or rip-map levels of an image as PGM files.
    Pyramid(PyramidArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Parser)]
struct WarpArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Text file with 9 row-major entries (source -> output).
    #[arg(long)]
    matrix: PathBuf,
    /// point | super:<n> | mip | rip | fast:<n>[:seed]
    #[arg(long)]
    sampler: String,
    /// nearest | bilinear | bicubic[:alpha] | bspline | hermite
    #[arg(long)]
    kernel: String,
    #[arg(long)]
    out: PathBuf,
    /// Output extent, e.g. 640x480. Defaults to the input size.
    #[arg(long, value_parser = parse_size)]
    out_size: Option<(usize, usize)>,
    /// Use a kernel lookup table with this many bins per unit.
    #[arg(long)]
    lut_bins: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Parser)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Seed count `n` (seeds 0..n) or a comma-separated list.
    #[arg(long, default_value = "10")]
    seeds: String,
    /// `all` or a comma-separated list of `sampler/kernel` tokens.
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
    /// Crop each corpus image to its top-left NxN pixels.
    #[arg(long)]
    crop: Option<usize>,
    #[arg(long)]
    lut_bins: Option<usize>,
    /// Worker threads inside each warp.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Process corpus images concurrently (timings become noisy).
    #[arg(long)]
    parallel_images: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PyramidType {
    Mip,
    Rip,
}

#[derive(Parser)]
struct PyramidArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "type", value_enum)]
    kind: PyramidType,
    #[arg(long)]
    dump: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Document,
    Natural,
    Checkerboard,
    ZonePlate,
}

#[derive(Parser)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 5)]
    count: u64,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long)]
    dir: PathBuf,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w = w
        .trim()
        .parse()
        .map_err(|_| format!("bad width in `{s}`"))?;
    let h = h
        .trim()
        .parse()
        .map_err(|_| format!("bad height in `{s}`"))?;
    Ok((w, h))
}

fn run_warp<K: Interpolator<f64>>(
    args: &WarpArgs,
    src: &ImageBuffer,
    h: Homography<f64>,
    kernel: K,
) -> projwarp::Result<()> {
    let method: SamplingMethod = args.sampler.parse()?;
    let cfg = SamplerConfig::new(method, kernel)?;
    let size = args.out_size.unwrap_or((src.width(), src.height()));
    let req = WarpRequest::new(src, h, size, &cfg).with_workers(args.threads);
    let (out, stats) = warp(&req)?;
    info!(
        "{} px, {:.3} taps/px, {:.3} samples/px",
        stats.pixels_processed,
        stats.taps_per_pixel(),
        stats.samples_per_pixel()
    );
    save_image(&out, &args.out)
}

fn warp_cmd(args: WarpArgs) -> projwarp::Result<()> {
    let src = load_image(&args.input)?;
    let text = fs::read_to_string(&args.matrix).map_err(|e| Error::io(&args.matrix, e))?;
    let h = Homography::<f64>::parse_text(&text)?;
    let kernel: Kernel<f64> = args.kernel.parse()?;
    if args.threads == Some(0) {
        return Err(Error::InvalidConfig("--threads must be >= 1".into()));
    }
    match args.lut_bins {
        None => run_warp(&args, &src, h, kernel),
        Some(bins) => run_warp(&args, &src, h, KernelLut::new(kernel, bins)?),
    }
}

fn bench_cmd(args: BenchArgs) -> projwarp::Result<()> {
    let seeds = bench::parse_seeds(&args.seeds)?;
    let methods = bench::parse_methods(&args.methods)?;
    if args.threads == 0 {
        return Err(Error::InvalidConfig("--threads must be >= 1".into()));
    }
    let corpus = bench::load_corpus(&args.corpus, args.crop)?;
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    };
    let mut cfg = BenchConfig::new(corpus, seeds, methods);
    cfg.repetitions = args.reps;
    cfg.format = format;
    cfg.lut_bins = args.lut_bins;
    cfg.warp_workers = Some(args.threads);
    cfg.parallel_images = args.parallel_images;
    info!(
        "{} images x {} seeds x {} methods",
        cfg.corpus.len(),
        cfg.seeds.len(),
        cfg.methods.len()
    );
    let report = bench::run_benchmark(&cfg)?;
    let text = bench::emit_report(&report, format);
    fs::write(&args.out, text).map_err(|e| Error::io(&args.out, e))
}

fn create_dir(dir: &Path) -> projwarp::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn pyramid_cmd(args: PyramidArgs) -> projwarp::Result<()> {
    let src = load_image(&args.input)?;
    create_dir(&args.dump)?;
    match args.kind {
        PyramidType::Mip => {
            let mip = MipPyramid::build(&src);
            for (k, level) in mip.levels().iter().enumerate() {
                save_image(level, args.dump.join(format!("level_{k:02}.pgm")))?;
            }
            info!("extra memory ratio {:.6}", mip.extra_memory_ratio());
        }
        PyramidType::Rip => {
            let rip = RipMap::build(&src);
            for ky in 0..=rip.max_level_y() {
                for kx in 0..=rip.max_level_x() {
                    let path = args.dump.join(format!("rip_{kx:02}_{ky:02}.pgm"));
                    save_image(rip.entry(kx, ky), path)?;
                }
            }
            info!("extra memory ratio {:.6}", rip.extra_memory_ratio());
        }
    }
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> projwarp::Result<()> {
    if args.size == 0 {
        return Err(Error::InvalidConfig("--size must be >= 1".into()));
    }
    create_dir(&args.dir)?;
    let n = args.size;
    for i in 0..args.count {
        let (name, img) = match args.kind {
            SynthKind::Document => ("document", synth::document_like(i, n, n)),
            SynthKind::Natural => ("natural", synth::natural_like(i, n, n)),
            SynthKind::Checkerboard => ("checkerboard", synth::checkerboard(n, n, 1 + i as usize)),
            SynthKind::ZonePlate => ("zoneplate", synth::zone_plate(n)),
        };
        save_image(&img, args.dir.join(format!("{name}_{i:03}.pgm")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Warp(a) => warp_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Pyramid(a) => pyramid_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
