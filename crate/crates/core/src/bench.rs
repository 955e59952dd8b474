//! Quality and timing benchmark.
//!
//! Every corpus image is pushed through three random homographies whose
//! product is the identity, and the result is compared with the original by
//! PSNR. Warp time and pyramid build time are measured separately.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{warp_chain_timed, TapStats};
use crate::geometry::{random_composed_triple, Homography};
use crate::image::{load_image, ImageBuffer};
use crate::kernels::{Interpolator, Kernel, KernelLut};
use crate::samplers::{SamplerConfig, SamplingMethod};
use crate::{Error, Result};

/// Peak signal-to-noise ratio of `test` against `reference`, in dB.
///
/// The peak is the maximum of the reference image. Identical images give
/// `f64::INFINITY`.
pub fn psnr(reference: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    if (reference.width(), reference.height()) != (test.width(), test.height()) {
        return Err(Error::DimensionMismatch(
            reference.width(),
            reference.height(),
            test.width(),
            test.height(),
        ));
    }
    let peak = *reference.pixels().iter().max().unwrap_or(&0) as f64;
    if peak == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let sse: f64 = reference
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(&s, &j)| {
            let d = j as f64 - s as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (reference.len() as f64 * peak * peak / sse).log10())
}

/// A (sampler, kernel) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Method {
    pub sampler: SamplingMethod,
    pub kernel: Kernel<f64>,
}

impl Method {
    /// The 25 combinations, sampler-major.
    pub fn grid() -> Vec<Self> {
        SamplingMethod::all()
            .into_iter()
            .flat_map(|sampler| {
                Kernel::all()
                    .into_iter()
                    .map(move |kernel| Method { sampler, kernel })
            })
            .collect()
    }

    fn order_key(&self) -> (usize, usize) {
        let s = match self.sampler {
            SamplingMethod::PointSampling => 0,
            SamplingMethod::Supersampling { .. } => 1,
            SamplingMethod::MipMapPrefilter => 2,
            SamplingMethod::RipMapPrefilter => 3,
            SamplingMethod::Fast { .. } => 4,
        };
        let k = match self.kernel {
            Kernel::NearestPixel => 0,
            Kernel::Bilinear => 1,
            Kernel::Bicubic { .. } => 2,
            Kernel::CubicBSpline => 3,
            Kernel::HermiteSpline => 4,
        };
        (s, k)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.sampler, self.kernel)
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `<sampler>/<kernel>`, e.g. `fast:16/bilinear`.
    fn from_str(token: &str) -> Result<Self> {
        let (s, k) = token.split_once('/').ok_or_else(|| Error::InvalidToken {
            what: "method",
            token: token.to_string(),
        })?;
        Ok(Method {
            sampler: s.parse()?,
            kernel: k.parse()?,
        })
    }
}

/// Parses `all` or a comma-separated list of methods.
pub fn parse_methods(spec: &str) -> Result<Vec<Method>> {
    if spec.trim() == "all" {
        return Ok(Method::grid());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect()
}

/// Parses a seed count `n` (meaning `0..n`) or a comma-separated list.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidToken {
        what: "seeds",
        token: spec.to_string(),
    };
    if spec.contains(',') {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
            .collect()
    } else {
        let n = spec.trim().parse::<u64>().map_err(|_| bad())?;
        Ok((0..n).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidToken {
                what: "format",
                token: s.to_string(),
            }),
        }
    }
}

/// Named source image.
#[derive(Debug, Clone)]
pub struct CorpusImage {
    pub name: String,
    pub image: ImageBuffer,
}

/// Loads every `.pgm` / `.png` in `dir` (sorted by name), optionally
/// cropping to the top-left `crop x crop` pixels.
pub fn load_corpus(dir: impl AsRef<Path>, crop: Option<usize>) -> Result<Vec<CorpusImage>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let mut image = load_image(&p)?;
            if let Some(c) = crop {
                image = image.crop(c, c)?;
            }
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(CorpusImage { name, image })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub corpus: Vec<CorpusImage>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    pub format: ReportFormat,
    /// Interpolate through a kernel lookup table with this many bins per
    /// unit instead of evaluating the kernel.
    pub lut_bins: Option<usize>,
    /// Worker threads inside each warp (`None`: rayon default).
    pub warp_workers: Option<usize>,
    /// Run corpus images concurrently. Skews timing.
    pub parallel_images: bool,
}

impl BenchConfig {
    pub fn new(corpus: Vec<CorpusImage>, seeds: Vec<u64>, methods: Vec<Method>) -> Self {
        Self {
            corpus,
            seeds,
            methods,
            repetitions: 1,
            format: ReportFormat::Csv,
            lut_bins: None,
            warp_workers: Some(1),
            parallel_images: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.is_empty() {
            return Err(Error::InvalidConfig("corpus is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds given".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods given".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        if self.lut_bins == Some(0) {
            return Err(Error::InvalidConfig("lookup table needs >= 1 bin".into()));
        }
        for m in &self.methods {
            m.sampler.validate()?;
        }
        Ok(())
    }
}

/// Aggregated results for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub sampler: String,
    pub kernel: String,
    /// Mean over images and seeds of the median warp time over repetitions.
    pub time_s: f64,
    /// Same aggregation for pyramid construction.
    pub pyramid_s: f64,
    /// Mean PSNR; `None` when some run reproduced the source exactly.
    pub psnr_db: Option<f64>,
    pub taps_per_pixel: f64,
    pub samples_per_pixel: f64,
    #[serde(skip)]
    pub stats: TapStats,
    #[serde(skip)]
    pub method: Option<Method>,
    /// Every run's PSNR, image-major then seed.
    #[serde(skip)]
    pub psnr_runs: Vec<f64>,
}

impl BenchRow {
    pub fn psnr_or_inf(&self) -> f64 {
        self.psnr_db.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, method: &Method) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method.as_ref() == Some(method))
    }
}

struct RunResult {
    psnr: f64,
    warp: Duration,
    pyramids: Duration,
    stats: TapStats,
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

fn run_one<K: Interpolator<f64>>(
    image: &ImageBuffer,
    triple: &[Homography<f64>; 3],
    cfg: &SamplerConfig<K>,
    reps: usize,
    workers: Option<usize>,
) -> Result<RunResult> {
    let mut warps = Vec::with_capacity(reps);
    let mut pyrs = Vec::with_capacity(reps);
    let mut first: Option<(ImageBuffer, TapStats)> = None;
    for _ in 0..reps {
        let (out, stats, timing) = warp_chain_timed(image, triple, cfg, workers)?;
        warps.push(timing.warp);
        pyrs.push(timing.pyramids);
        first.get_or_insert((out, stats));
    }
    let (out, stats) = first.expect("reps >= 1");
    Ok(RunResult {
        // The original is always the reference.
        psnr: psnr(image, &out)?,
        warp: median(warps),
        pyramids: median(pyrs),
        stats,
    })
}

fn run_method<K: Interpolator<f64>>(
    cfg: &BenchConfig,
    triples: &[Vec<[Homography<f64>; 3]>],
    sampler: &SamplerConfig<K>,
) -> Result<Vec<RunResult>> {
    let per_image = |(img, trips): (&CorpusImage, &Vec<[Homography<f64>; 3]>)| {
        trips
            .iter()
            .map(|t| run_one(&img.image, t, sampler, cfg.repetitions, cfg.warp_workers))
            .collect::<Result<Vec<_>>>()
    };
    let nested: Vec<Result<Vec<RunResult>>> = if cfg.parallel_images {
        cfg.corpus
            .par_iter()
            .zip(triples.par_iter())
            .map(per_image)
            .collect()
    } else {
        cfg.corpus
            .iter()
            .zip(triples.iter())
            .map(per_image)
            .collect()
    };
    let mut out = Vec::new();
    for r in nested {
        out.extend(r?);
    }
    Ok(out)
}

/// Runs every method over corpus x seeds.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let triples = cfg
        .corpus
        .iter()
        .map(|img| {
            cfg.seeds
                .iter()
                .map(|&s| random_composed_triple(s, (img.image.width(), img.image.height())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let runs = match cfg.lut_bins {
            None => run_method(
                cfg,
                &triples,
                &SamplerConfig::new(method.sampler, method.kernel)?,
            )?,
            Some(bins) => {
                let lut = KernelLut::new(method.kernel, bins)?;
                run_method(cfg, &triples, &SamplerConfig::new(method.sampler, lut)?)?
            }
        };
        let n = runs.len() as f64;
        let mut stats = TapStats::default();
        for r in &runs {
            stats += r.stats;
        }
        let psnr_runs: Vec<f64> = runs.iter().map(|r| r.psnr).collect();
        let mean_psnr = psnr_runs.iter().sum::<f64>() / n;
        rows.push(BenchRow {
            sampler: method.sampler.to_string(),
            kernel: method.kernel.to_string(),
            time_s: runs.iter().map(|r| r.warp.as_secs_f64()).sum::<f64>() / n,
            pyramid_s: runs.iter().map(|r| r.pyramids.as_secs_f64()).sum::<f64>() / n,
            psnr_db: mean_psnr.is_finite().then_some(mean_psnr),
            taps_per_pixel: stats.taps_per_pixel(),
            samples_per_pixel: stats.samples_per_pixel(),
            stats,
            method: Some(*method),
            psnr_runs,
        });
    }
    rows.sort_by_key(|r| r.method.map(|m| m.order_key()));
    Ok(BenchReport { rows })
}

pub const CSV_HEADER: &str =
    "sampler,kernel,time_s,psnr_db,taps_per_pixel,samples_per_pixel,pyramid_s";

/// Renders the report as CSV or JSON.
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &report.rows {
                let psnr = match r.psnr_db {
                    Some(p) => format!("{p:.6}"),
                    None => "inf".to_string(),
                };
                out.push_str(&format!(
                    "{},{},{:.6},{},{:.4},{:.4},{:.6}\n",
                    r.sampler,
                    r.kernel,
                    r.time_s,
                    psnr,
                    r.taps_per_pixel,
                    r.samples_per_pixel,
                    r.pyramid_s
                ));
            }
            out
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}
