//! Inverse-mapping warp.
//!
//! For every output pixel the sampler picks sampling points, each point is
//! back-projected through the scanline tables, the source is interpolated
//! there, and the combined value is quantized once on write.
//!
//! Rows are rendered in parallel; each row carries its own counters and the
//! totals are summed in row order, so results do not depend on the worker
//! count.

use std::ops::AddAssign;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::geometry::{Homography, Rect, ScanlineDecomposition};
use crate::image::{quantize, ImageBuffer};
use crate::kernels::Interpolator;
use crate::pyramids::{MipPyramid, RipMap};
use crate::samplers::{sample_pixel, SampleCounters, SampleSource, SamplerConfig, SamplingMethod};
use crate::{Error, Result, Scalar};

/// Cost counters accumulated over a warp.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TapStats {
    pub pixels_processed: u64,
    pub interpolation_taps: u64,
    pub structure_samples: u64,
    pub multiplications: u64,
}

impl TapStats {
    pub fn taps_per_pixel(&self) -> f64 {
        self.interpolation_taps as f64 / self.pixels_processed.max(1) as f64
    }

    pub fn samples_per_pixel(&self) -> f64 {
        self.structure_samples as f64 / self.pixels_processed.max(1) as f64
    }

    /// Pixel reads per interpolated point.
    pub fn taps_per_sample(&self) -> f64 {
        self.interpolation_taps as f64 / self.structure_samples.max(1) as f64
    }
}

impl AddAssign for TapStats {
    fn add_assign(&mut self, o: Self) {
        self.pixels_processed += o.pixels_processed;
        self.interpolation_taps += o.interpolation_taps;
        self.structure_samples += o.structure_samples;
        self.multiplications += o.multiplications;
    }
}

impl AddAssign<SampleCounters> for TapStats {
    fn add_assign(&mut self, c: SampleCounters) {
        self.interpolation_taps += c.taps;
        self.structure_samples += c.samples;
        self.multiplications += c.multiplications;
    }
}

/// Pre-filtered structures a sampler may need.
#[derive(Debug, Clone, Default)]
pub struct Pyramids {
    pub mip: Option<MipPyramid>,
    pub rip: Option<RipMap>,
}

impl Pyramids {
    /// Builds only what `method` reads.
    pub fn for_method(img: &ImageBuffer, method: &SamplingMethod) -> Self {
        Self {
            mip: method.needs_mipmap().then(|| MipPyramid::build(img)),
            rip: method.needs_ripmap().then(|| RipMap::build(img)),
        }
    }
}

/// One warp: `homography` maps source coordinates to output coordinates.
#[derive(Debug, Clone)]
pub struct WarpRequest<'a, T, K> {
    pub source: &'a ImageBuffer,
    pub homography: Homography<T>,
    pub out_width: usize,
    pub out_height: usize,
    pub sampler: &'a SamplerConfig<K>,
    /// Worker threads; `None` uses the global rayon pool, `Some(1)` renders
    /// on the calling thread.
    pub workers: Option<usize>,
}

impl<'a, T: Scalar, K: Interpolator<T>> WarpRequest<'a, T, K> {
    pub fn new(
        source: &'a ImageBuffer,
        homography: Homography<T>,
        (out_width, out_height): (usize, usize),
        sampler: &'a SamplerConfig<K>,
    ) -> Self {
        Self {
            source,
            homography,
            out_width,
            out_height,
            sampler,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }
}

/// Warps `req.source`, building whatever pyramid the sampler needs.
pub fn warp<T: Scalar, K: Interpolator<T>>(
    req: &WarpRequest<'_, T, K>,
) -> Result<(ImageBuffer, TapStats)> {
    let pyramids = Pyramids::for_method(req.source, &req.sampler.method);
    warp_with(req, &pyramids)
}

/// Warps with pre-built pyramids.
pub fn warp_with<T: Scalar, K: Interpolator<T>>(
    req: &WarpRequest<'_, T, K>,
    pyramids: &Pyramids,
) -> Result<(ImageBuffer, TapStats)> {
    let (w, h) = (req.out_width, req.out_height);
    if w == 0 || h == 0 {
        return Err(Error::ZeroExtent {
            width: w,
            height: h,
        });
    }
    req.sampler.method.validate()?;
    let d = ScanlineDecomposition::decompose(&req.homography, w, h)?;
    let src = SampleSource {
        image: req.source,
        mip: pyramids.mip.as_ref(),
        rip: pyramids.rip.as_ref(),
    };
    let cfg = req.sampler;
    let render_row = |(y, row): (usize, &mut [u8])| -> Result<TapStats> {
        let mut stats = TapStats::default();
        let yt = T::from_index(y as isize);
        for (x, out) in row.iter_mut().enumerate() {
            let mut c = SampleCounters::default();
            let v = sample_pixel(&src, &d, T::from_index(x as isize), yt, cfg, &mut c)?;
            *out = quantize(v);
            stats += c;
        }
        stats.pixels_processed += row.len() as u64;
        Ok(stats)
    };

    let mut pixels = vec![0u8; w * h];
    let per_row: Vec<Result<TapStats>> = match req.workers {
        Some(1) => pixels.chunks_mut(w).enumerate().map(render_row).collect(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| {
                pixels
                    .par_chunks_mut(w)
                    .enumerate()
                    .map(render_row)
                    .collect()
            })
        }
        None => pixels
            .par_chunks_mut(w)
            .enumerate()
            .map(render_row)
            .collect(),
    };
    let mut total = TapStats::default();
    for row in per_row {
        total += row?;
    }
    Ok((ImageBuffer::from_pixels(w, h, pixels)?, total))
}

/// Dense-supersampling oracle: 32x32 bilinear samples per output pixel,
/// evaluated by direct projection with the inverse matrix.
pub fn reference_resample(
    src: &ImageBuffer,
    h: &Homography<f64>,
    (out_w, out_h): (usize, usize),
) -> Result<ImageBuffer> {
    const GRID: usize = 32;
    if out_w == 0 || out_h == 0 {
        return Err(Error::ZeroExtent {
            width: out_w,
            height: out_h,
        });
    }
    let inv = h.invert()?;
    // Same admissibility as the warp.
    ScanlineDecomposition::from_backward(&inv, out_w, out_h)?;
    let bilinear = |u: f64, v: f64| {
        let (x0, y0) = (u.floor(), v.floor());
        let (fx, fy) = (u - x0, v - y0);
        let at = |x: f64, y: f64| {
            let xi = (x as isize).clamp(0, src.width() as isize - 1) as usize;
            let yi = (y as isize).clamp(0, src.height() as isize - 1) as usize;
            src.get(xi, yi) as f64
        };
        let top = at(x0, y0) * (1.0 - fx) + at(x0 + 1.0, y0) * fx;
        let bottom = at(x0, y0 + 1.0) * (1.0 - fx) + at(x0 + 1.0, y0 + 1.0) * fx;
        top * (1.0 - fy) + bottom * fy
    };
    let offsets: Vec<f64> = (0..GRID)
        .map(|i| (i as f64 + 0.5) / GRID as f64 - 0.5)
        .collect();
    let mut out = ImageBuffer::new(out_w, out_h)?;
    for y in 0..out_h {
        for x in 0..out_w {
            let mut sum = 0.0;
            for &oy in &offsets {
                for &ox in &offsets {
                    let (u, v) = inv.project(x as f64 + ox, y as f64 + oy)?;
                    sum += bilinear(u, v);
                }
            }
            out.set(x, y, quantize(sum / (GRID * GRID) as f64));
        }
    }
    Ok(out)
}

/// Intermediate rasters get this many pixels of margin around the mapped
/// source quadrilateral.
const CHAIN_PAD: f64 = 2.0;
/// Intermediate rasters are at most this many times the source size per axis.
const CHAIN_MAX_GROWTH: usize = 4;

/// Wall time of a chained warp, split by phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChainTiming {
    pub warp: Duration,
    pub pyramids: Duration,
}

/// Applies `hs` in sequence, re-quantizing between stages. Intermediate
/// rasters cover the padded bounding box of the mapped previous raster; the
/// final raster has the source's extent in the source's coordinates.
pub fn warp_chain<T: Scalar, K: Interpolator<T>>(
    src: &ImageBuffer,
    hs: &[Homography<T>],
    cfg: &SamplerConfig<K>,
    workers: Option<usize>,
) -> Result<(ImageBuffer, TapStats)> {
    warp_chain_timed(src, hs, cfg, workers).map(|(img, stats, _)| (img, stats))
}

/// [`warp_chain`] that also reports how long the warps and the pyramid
/// builds took.
pub fn warp_chain_timed<T: Scalar, K: Interpolator<T>>(
    src: &ImageBuffer,
    hs: &[Homography<T>],
    cfg: &SamplerConfig<K>,
    workers: Option<usize>,
) -> Result<(ImageBuffer, TapStats, ChainTiming)> {
    let mut current = src.clone();
    let mut origin = (T::zero(), T::zero());
    let mut stats = TapStats::default();
    let mut timing = ChainTiming::default();
    for (stage, h) in hs.iter().enumerate() {
        let last = stage + 1 == hs.len();
        let (new_origin, size) = if last {
            ((T::zero(), T::zero()), (src.width(), src.height()))
        } else {
            let mut rect = Rect::raster(current.width(), current.height());
            rect.x0 = rect.x0 + origin.0;
            rect.x1 = rect.x1 + origin.0;
            rect.y0 = rect.y0 + origin.1;
            rect.y1 = rect.y1 + origin.1;
            let bounds = rect.mapped_bounds(h)?;
            let pad = T::lit(CHAIN_PAD);
            let ox = (bounds.x0 - pad).floor();
            let oy = (bounds.y0 - pad).floor();
            let extent = |lo: T, hi: T, cap: usize| {
                let n = (hi + pad).ceil() - lo + T::one();
                n.to_usize().unwrap_or(cap).clamp(1, cap)
            };
            let size = (
                extent(ox, bounds.x1, src.width() * CHAIN_MAX_GROWTH),
                extent(oy, bounds.y1, src.height() * CHAIN_MAX_GROWTH),
            );
            ((ox, oy), size)
        };
        // Raster-to-raster map: shift to plane coordinates, apply, shift back.
        let local = Homography::translation(origin.0, origin.1)
            .then(h)?
            .then(&Homography::translation(-new_origin.0, -new_origin.1))?;

        let t0 = Instant::now();
        let pyramids = Pyramids::for_method(&current, &cfg.method);
        timing.pyramids += t0.elapsed();

        let req = WarpRequest::new(&current, local, size, cfg).with_workers(workers);
        let t1 = Instant::now();
        let (out, s) = warp_with(&req, &pyramids)?;
        timing.warp += t1.elapsed();
        stats += s;
        current = out;
        origin = new_origin;
    }
    Ok((current, stats, timing))
}
