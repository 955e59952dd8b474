//! Per-pixel sampling strategies.
//!
//! Each sampler decides where in the output pixel to evaluate the
//! back-projected, interpolated source, and how to combine the values:
//!
//! | method         | samples per pixel | structure          |
//! |----------------|-------------------|--------------------|
//! | point          | 1                 | source             |
//! | supersampling  | n x n             | source             |
//! | mip-map        | 2 (levels)        | mip chain          |
//! | rip-map        | 4 (grid entries)  | rip grid           |
//! | FAST           | 1..=n             | mip chain          |

use std::fmt;
use std::str::FromStr;

use crate::geometry::{JacobianEstimate, ScanlineDecomposition};
use crate::image::ImageBuffer;
use crate::kernels::{interpolate2d_counted, Interpolator};
use crate::pyramids::{MipPyramid, RipMap};
use crate::{Error, Result, Scalar};

pub const DEFAULT_SUPERSAMPLING_GRID: usize = 7;
pub const DEFAULT_FAST_SAMPLES: usize = 16;

/// Anisotropy ratios within this distance below an integer do not round up
/// to the next sample count.
const RATIO_SLACK: f64 = 1e-9;

/// How output pixels are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingMethod {
    PointSampling,
    /// `grid x grid` box-filtered samples.
    Supersampling {
        grid: usize,
    },
    MipMapPrefilter,
    RipMapPrefilter,
    /// Jittered samples along the major axis over the minor-axis mip level,
    /// at most `max_samples` per pixel.
    Fast {
        max_samples: usize,
        jitter_seed: u64,
    },
}

impl SamplingMethod {
    /// The five methods with their default parameters, in reporting order.
    pub fn all() -> [Self; 5] {
        [
            SamplingMethod::PointSampling,
            SamplingMethod::Supersampling {
                grid: DEFAULT_SUPERSAMPLING_GRID,
            },
            SamplingMethod::MipMapPrefilter,
            SamplingMethod::RipMapPrefilter,
            SamplingMethod::Fast {
                max_samples: DEFAULT_FAST_SAMPLES,
                jitter_seed: 0,
            },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingMethod::Supersampling { grid: 0 } => Err(Error::InvalidConfig(
                "supersampling grid must be >= 1".into(),
            )),
            SamplingMethod::Fast { max_samples: 0, .. } => Err(Error::InvalidConfig(
                "FAST needs at least one sample".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn needs_mipmap(&self) -> bool {
        matches!(
            self,
            SamplingMethod::MipMapPrefilter | SamplingMethod::Fast { .. }
        )
    }

    pub fn needs_ripmap(&self) -> bool {
        matches!(self, SamplingMethod::RipMapPrefilter)
    }

    /// Samples per pixel; for FAST this is the cap.
    pub fn nominal_samples_per_pixel(&self) -> usize {
        match *self {
            SamplingMethod::PointSampling => 1,
            SamplingMethod::Supersampling { grid } => grid * grid,
            SamplingMethod::MipMapPrefilter => 2,
            SamplingMethod::RipMapPrefilter => 4,
            SamplingMethod::Fast { max_samples, .. } => max_samples,
        }
    }

    /// Multiplications per sample for the coordinate work (backward map,
    /// plus derivatives and level selection for the pre-filtered methods).
    pub fn nominal_multiplications_per_sample(&self) -> u64 {
        match self {
            SamplingMethod::PointSampling | SamplingMethod::Supersampling { .. } => 2,
            _ => 7,
        }
    }
}

impl fmt::Display for SamplingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SamplingMethod::PointSampling => f.write_str("point"),
            SamplingMethod::Supersampling { grid } => write!(f, "super:{grid}"),
            SamplingMethod::MipMapPrefilter => f.write_str("mip"),
            SamplingMethod::RipMapPrefilter => f.write_str("rip"),
            SamplingMethod::Fast {
                max_samples,
                jitter_seed: 0,
            } => write!(f, "fast:{max_samples}"),
            SamplingMethod::Fast {
                max_samples,
                jitter_seed,
            } => write!(f, "fast:{max_samples}:{jitter_seed}"),
        }
    }
}

impl FromStr for SamplingMethod {
    type Err = Error;

    /// `point | super:<n> | mip | rip | fast:<n>[:seed]`
    fn from_str(token: &str) -> Result<Self> {
        let bad = || Error::InvalidToken {
            what: "sampler",
            token: token.to_string(),
        };
        let parts: Vec<&str> = token.split(':').collect();
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
        let method = match parts.as_slice() {
            ["point"] => SamplingMethod::PointSampling,
            ["super"] => SamplingMethod::Supersampling {
                grid: DEFAULT_SUPERSAMPLING_GRID,
            },
            ["super", n] => SamplingMethod::Supersampling {
                grid: num(n)? as usize,
            },
            ["mip"] => SamplingMethod::MipMapPrefilter,
            ["rip"] => SamplingMethod::RipMapPrefilter,
            ["fast"] => SamplingMethod::Fast {
                max_samples: DEFAULT_FAST_SAMPLES,
                jitter_seed: 0,
            },
            ["fast", n] => SamplingMethod::Fast {
                max_samples: num(n)? as usize,
                jitter_seed: 0,
            },
            ["fast", n, seed] => SamplingMethod::Fast {
                max_samples: num(n)? as usize,
                jitter_seed: num(seed)?,
            },
            _ => return Err(bad()),
        };
        method.validate().map_err(|_| bad())?;
        Ok(method)
    }
}

/// Sampling method paired with the interpolation kernel (or its LUT).
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig<K> {
    pub method: SamplingMethod,
    pub kernel: K,
}

impl<K> SamplerConfig<K> {
    pub fn new(method: SamplingMethod, kernel: K) -> Result<Self> {
        method.validate()?;
        Ok(Self { method, kernel })
    }
}

/// Local footprint of an output pixel on the source plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintEstimate<T> {
    pub jac: JacobianEstimate<T>,
    /// Source-plane length of a unit step in output `x`.
    pub rho_x: T,
    /// Source-plane length of a unit step in output `y`.
    pub rho_y: T,
    pub scale: T,
    pub minor_scale: T,
    /// Output-space unit vector along the longer footprint side.
    pub major_axis: (T, T),
}

impl<T: Scalar> FootprintEstimate<T> {
    pub fn from_jacobian(jac: JacobianEstimate<T>) -> Self {
        let rho_x = jac.du_dx.hypot(jac.dv_dx);
        let rho_y = jac.du_dy.hypot(jac.dv_dy);
        let x_major = rho_x >= rho_y;
        Self {
            jac,
            rho_x,
            rho_y,
            scale: rho_x.max(rho_y),
            minor_scale: rho_x.min(rho_y),
            major_axis: if x_major {
                (T::one(), T::zero())
            } else {
                (T::zero(), T::one())
            },
        }
    }

    /// Mip level for isotropic pre-filtering: `max(0, log2(scale))`.
    pub fn mip_level(&self) -> T {
        positive_log2(self.scale)
    }

    /// Number of FAST samples: the anisotropy ratio rounded up, capped.
    /// A footprint no wider than a pixel gets a single sample.
    pub fn fast_sample_count(&self, max_samples: usize) -> usize {
        if self.scale <= T::one() {
            return 1;
        }
        let ratio = self.scale / self.minor_scale.max(T::lit(1e-9));
        let n = (ratio - T::lit(RATIO_SLACK))
            .ceil()
            .to_usize()
            .unwrap_or(max_samples);
        n.clamp(1, max_samples.max(1))
    }
}

#[inline]
fn positive_log2<T: Scalar>(v: T) -> T {
    let l = v.log2();
    if l > T::zero() {
        l
    } else {
        T::zero()
    }
}

/// Footprint at output point `(x, y)`.
pub fn footprint<T: Scalar>(
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
) -> Result<FootprintEstimate<T>> {
    Ok(FootprintEstimate::from_jacobian(d.jacobian(x, y)?))
}

/// Per-pixel instrumentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleCounters {
    /// Source pixels read by interpolation.
    pub taps: u64,
    /// Sampling points (point, supersampling, FAST) or structure reads
    /// (mip levels, rip entries).
    pub samples: u64,
    pub multiplications: u64,
}

/// Read-only inputs shared by every pixel of a warp.
#[derive(Debug, Clone, Copy)]
pub struct SampleSource<'a> {
    pub image: &'a ImageBuffer,
    pub mip: Option<&'a MipPyramid>,
    pub rip: Option<&'a RipMap>,
}

fn missing(what: &str) -> Error {
    Error::InvalidConfig(format!("sampler needs a {what} but none was built"))
}

/// One interpolated sample at the back-projection of the pixel center.
pub fn sample_point<T: Scalar, K: Interpolator<T>>(
    img: &ImageBuffer,
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
    kernel: &K,
    c: &mut SampleCounters,
) -> Result<T> {
    let (u, v) = d.map_point(x, y)?;
    c.samples += 1;
    c.multiplications += 2 + kernel.kernel().nominal_multiplications();
    Ok(interpolate2d_counted(img, kernel, u, v, &mut c.taps))
}

/// Box-filtered mean over an `n x n` grid at offsets `(i + 0.5) / n - 0.5`.
pub fn sample_supersample<T: Scalar, K: Interpolator<T>>(
    img: &ImageBuffer,
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
    grid: usize,
    kernel: &K,
    c: &mut SampleCounters,
) -> Result<T> {
    if grid == 0 {
        return Err(Error::InvalidConfig(
            "supersampling grid must be >= 1".into(),
        ));
    }
    let n = T::from_index(grid as isize);
    let half = T::lit(0.5);
    let offset = |i: usize| (T::from_index(i as isize) + half) / n - half;
    let mut sum = T::zero();
    for j in 0..grid {
        let sy = y + offset(j);
        for i in 0..grid {
            let (u, v) = d.map_point(x + offset(i), sy)?;
            sum = sum + interpolate2d_counted(img, kernel, u, v, &mut c.taps);
        }
    }
    let count = (grid * grid) as u64;
    c.samples += count;
    c.multiplications += count * (2 + kernel.kernel().nominal_multiplications());
    Ok(sum / (n * n))
}

/// Single blended mip sample at the level picked by the footprint scale.
pub fn sample_mipmap_prefiltered<T: Scalar, K: Interpolator<T>>(
    p: &MipPyramid,
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
    kernel: &K,
    c: &mut SampleCounters,
) -> Result<T> {
    let fp = footprint(d, x, y)?;
    let (u, v) = d.map_point(x, y)?;
    c.samples += 2;
    c.multiplications += 7 + 2 * kernel.kernel().nominal_multiplications();
    Ok(p.sample(u, v, fp.mip_level(), kernel, &mut c.taps))
}

/// Rip sample with independent levels per axis.
pub fn sample_ripmap_prefiltered<T: Scalar, K: Interpolator<T>>(
    r: &RipMap,
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
    kernel: &K,
    c: &mut SampleCounters,
) -> Result<T> {
    let fp = footprint(d, x, y)?;
    let (u, v) = d.map_point(x, y)?;
    let (lx, ly) = (positive_log2(fp.rho_x), positive_log2(fp.rho_y));
    c.samples += 4;
    c.multiplications += 7 + 4 * kernel.kernel().nominal_multiplications();
    Ok(r.sample(u, v, lx, ly, kernel, &mut c.taps))
}

/// FAST: mip samples at the minor-axis level, spread along the major axis.
///
/// With a single sample the pixel center is used; otherwise sample `i`
/// lands uniformly at random inside stratum `[i/N, (i+1)/N)` of the pixel's
/// extent along the major axis.
#[allow(clippy::too_many_arguments)]
pub fn sample_fast<T: Scalar, K: Interpolator<T>>(
    p: &MipPyramid,
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
    max_samples: usize,
    jitter_seed: u64,
    kernel: &K,
    c: &mut SampleCounters,
) -> Result<T> {
    let fp = footprint(d, x, y)?;
    let level = positive_log2(fp.minor_scale);
    let count = fp.fast_sample_count(max_samples);
    let per_sample = 7 + 2 * kernel.kernel().nominal_multiplications();
    c.samples += count as u64;
    c.multiplications += count as u64 * per_sample;
    if count == 1 {
        let (u, v) = d.map_point(x, y)?;
        return Ok(p.sample(u, v, level, kernel, &mut c.taps));
    }
    let (ax, ay) = fp.major_axis;
    let n = T::from_index(count as isize);
    let (xb, yb) = (x.to_f64_lossy().to_bits(), y.to_f64_lossy().to_bits());
    let mut sum = T::zero();
    for i in 0..count {
        let r = T::lit(jitter(jitter_seed, xb, yb, i as u64));
        let off = (T::from_index(i as isize) + r) / n - T::lit(0.5);
        let (u, v) = d.map_point(x + off * ax, y + off * ay)?;
        sum = sum + p.sample(u, v, level, kernel, &mut c.taps);
    }
    Ok(sum / n)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniform variate in `[0, 1)` keyed by seed, pixel and
/// stratum.
fn jitter(seed: u64, x_bits: u64, y_bits: u64, i: u64) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ x_bits) ^ y_bits) ^ i);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Samples output pixel `(x, y)` with the configured method.
pub fn sample_pixel<T: Scalar, K: Interpolator<T>>(
    src: &SampleSource<'_>,
    d: &ScanlineDecomposition<T>,
    x: T,
    y: T,
    cfg: &SamplerConfig<K>,
    c: &mut SampleCounters,
) -> Result<T> {
    let k = &cfg.kernel;
    match cfg.method {
        SamplingMethod::PointSampling => sample_point(src.image, d, x, y, k, c),
        SamplingMethod::Supersampling { grid } => {
            sample_supersample(src.image, d, x, y, grid, k, c)
        }
        SamplingMethod::MipMapPrefilter => {
            let p = src.mip.ok_or_else(|| missing("mip-map"))?;
            sample_mipmap_prefiltered(p, d, x, y, k, c)
        }
        SamplingMethod::RipMapPrefilter => {
            let r = src.rip.ok_or_else(|| missing("rip-map"))?;
            sample_ripmap_prefiltered(r, d, x, y, k, c)
        }
        SamplingMethod::Fast {
            max_samples,
            jitter_seed,
        } => {
            let p = src.mip.ok_or_else(|| missing("mip-map"))?;
            sample_fast(p, d, x, y, max_samples, jitter_seed, k, c)
        }
    }
}
