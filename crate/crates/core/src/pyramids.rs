//! Mip-map and rip-map pre-filtered image structures.
//!
//! Each reduction halves one or both axes with a 2-wide box mean; trailing
//! odd rows/columns are averaged over the pixels available. Levels are
//! reduced from the unrounded parent values and rounded once for storage,
//! so rounding error does not accumulate down the chain.
//!
//! Level `k` addresses a level-0 coordinate `c` as `(c + 0.5) / 2^k - 0.5`,
//! which keeps pixel centers aligned across levels.

use crate::image::{quantize, ImageBuffer};
use crate::kernels::{interpolate2d_counted, Interpolator};
use crate::Scalar;

/// Real-valued plane used only while building.
#[derive(Clone)]
struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    fn from_image(img: &ImageBuffer) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.pixels().iter().map(|&p| p as f64).collect(),
        }
    }

    fn to_image(&self) -> ImageBuffer {
        let pixels = self.data.iter().map(|&v| quantize(v)).collect();
        ImageBuffer::from_pixels(self.width, self.height, pixels).expect("nonempty plane")
    }

    fn reduce_x(&self) -> Self {
        let w = self.width.div_ceil(2);
        let mut data = Vec::with_capacity(w * self.height);
        for y in 0..self.height {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            data.extend(
                row.chunks(2)
                    .map(|c| c.iter().sum::<f64>() / c.len() as f64),
            );
        }
        Self {
            width: w,
            height: self.height,
            data,
        }
    }

    fn reduce_y(&self) -> Self {
        let h = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(self.width * h);
        for y in 0..h {
            let r0 = &self.data[2 * y * self.width..(2 * y + 1) * self.width];
            if 2 * y + 1 < self.height {
                let r1 = &self.data[(2 * y + 1) * self.width..(2 * y + 2) * self.width];
                data.extend(r0.iter().zip(r1).map(|(a, b)| (a + b) / 2.0));
            } else {
                data.extend_from_slice(r0);
            }
        }
        Self {
            width: self.width,
            height: h,
            data,
        }
    }

    fn reduce_xy(&self) -> Self {
        // Means of means equal the box mean for full 2x2 blocks and for the
        // partial blocks on trailing edges.
        self.reduce_x().reduce_y()
    }
}

/// Maps a level-0 coordinate onto level `k`.
#[inline]
pub fn level_coord<T: Scalar>(c: T, k: usize) -> T {
    if k == 0 {
        c
    } else {
        let half = T::lit(0.5);
        (c + half) / T::lit((1u64 << k.min(62)) as f64) - half
    }
}

fn levels_for(extent: usize) -> usize {
    // Number of halvings until the extent reaches 1.
    let mut n = 0;
    let mut e = extent;
    while e > 1 {
        e = e.div_ceil(2);
        n += 1;
    }
    n
}

/// Isotropic chain: level 0 is the source, each next level halves both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MipPyramid {
    levels: Vec<ImageBuffer>,
}

impl MipPyramid {
    pub fn build(img: &ImageBuffer) -> Self {
        let count = levels_for(img.width().max(img.height()));
        let mut levels = Vec::with_capacity(count + 1);
        levels.push(img.clone());
        let mut plane = Plane::from_image(img);
        for _ in 0..count {
            plane = plane.reduce_xy();
            levels.push(plane.to_image());
        }
        Self { levels }
    }

    pub fn levels(&self) -> &[ImageBuffer] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &ImageBuffer {
        &self.levels[k]
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Pixels stored beyond level 0, relative to level 0.
    pub fn extra_memory_ratio(&self) -> f64 {
        let base = self.levels[0].len() as f64;
        self.levels[1..].iter().map(|l| l.len() as f64).sum::<f64>() / base
    }

    /// Interpolates at level-0 coordinates `(u, v)` on the two levels around
    /// `level` and blends them linearly. Always reads two levels.
    pub fn sample<T: Scalar, K: Interpolator<T> + ?Sized>(
        &self,
        u: T,
        v: T,
        level: T,
        kernel: &K,
        taps: &mut u64,
    ) -> T {
        let level = clamp_level(level, self.max_level());
        let lo = level.floor();
        let t = level - lo;
        let k0 = lo.to_usize().unwrap_or(0);
        let k1 = level.ceil().to_usize().unwrap_or(0).min(self.max_level());
        let a = interpolate2d_counted(
            &self.levels[k0],
            kernel,
            level_coord(u, k0),
            level_coord(v, k0),
            taps,
        );
        let b = interpolate2d_counted(
            &self.levels[k1],
            kernel,
            level_coord(u, k1),
            level_coord(v, k1),
            taps,
        );
        lerp(a, b, t)
    }
}

#[inline]
fn clamp_level<T: Scalar>(level: T, max: usize) -> T {
    if !(level > T::zero()) {
        T::zero()
    } else {
        level.min(T::from_index(max as isize))
    }
}

/// `a + (b - a) t`; returns `a` exactly when `a == b`.
#[inline]
pub(crate) fn lerp<T: Scalar>(a: T, b: T, t: T) -> T {
    a + (b - a) * t
}

/// Builds the mip chain for `img`.
pub fn build_mipmap(img: &ImageBuffer) -> MipPyramid {
    MipPyramid::build(img)
}

/// Anisotropic grid: entry `(kx, ky)` is reduced `kx` times horizontally
/// and `ky` times vertically.
#[derive(Debug, Clone, PartialEq)]
pub struct RipMap {
    /// Row-major over `ky`, then `kx`.
    grid: Vec<ImageBuffer>,
    levels_x: usize,
    levels_y: usize,
}

impl RipMap {
    pub fn build(img: &ImageBuffer) -> Self {
        let nx = levels_for(img.width()) + 1;
        let ny = levels_for(img.height()) + 1;
        let mut columns = Vec::with_capacity(nx);
        let mut plane = Plane::from_image(img);
        for kx in 0..nx {
            if kx > 0 {
                plane = plane.reduce_x();
            }
            let mut chain = Vec::with_capacity(ny);
            let mut p = plane.clone();
            for ky in 0..ny {
                if ky > 0 {
                    p = p.reduce_y();
                }
                chain.push(if kx == 0 && ky == 0 {
                    img.clone()
                } else {
                    p.to_image()
                });
            }
            columns.push(chain);
        }
        let mut grid = Vec::with_capacity(nx * ny);
        for ky in 0..ny {
            for column in &columns {
                grid.push(column[ky].clone());
            }
        }
        Self {
            grid,
            levels_x: nx,
            levels_y: ny,
        }
    }

    pub fn entry(&self, kx: usize, ky: usize) -> &ImageBuffer {
        &self.grid[ky * self.levels_x + kx]
    }

    pub fn max_level_x(&self) -> usize {
        self.levels_x - 1
    }

    pub fn max_level_y(&self) -> usize {
        self.levels_y - 1
    }

    pub fn extra_memory_ratio(&self) -> f64 {
        let base = self.grid[0].len() as f64;
        self.grid[1..].iter().map(|l| l.len() as f64).sum::<f64>() / base
    }

    /// Blends the four entries around `(lx, ly)`; always reads four entries.
    pub fn sample<T: Scalar, K: Interpolator<T> + ?Sized>(
        &self,
        u: T,
        v: T,
        lx: T,
        ly: T,
        kernel: &K,
        taps: &mut u64,
    ) -> T {
        let lx = clamp_level(lx, self.max_level_x());
        let ly = clamp_level(ly, self.max_level_y());
        let (tx, ty) = (lx - lx.floor(), ly - ly.floor());
        let x0 = lx.floor().to_usize().unwrap_or(0);
        let x1 = lx.ceil().to_usize().unwrap_or(0).min(self.max_level_x());
        let y0 = ly.floor().to_usize().unwrap_or(0);
        let y1 = ly.ceil().to_usize().unwrap_or(0).min(self.max_level_y());
        let mut at = |kx: usize, ky: usize| {
            interpolate2d_counted(
                self.entry(kx, ky),
                kernel,
                level_coord(u, kx),
                level_coord(v, ky),
                taps,
            )
        };
        let top = lerp(at(x0, y0), at(x1, y0), tx);
        let bottom = lerp(at(x0, y1), at(x1, y1), tx);
        lerp(top, bottom, ty)
    }
}

/// Builds the rip-map grid for `img`.
pub fn build_ripmap(img: &ImageBuffer) -> RipMap {
    RipMap::build(img)
}

/// Mip sample at real `level`, see [`MipPyramid::sample`].
pub fn sample_mip<T: Scalar, K: Interpolator<T> + ?Sized>(
    p: &MipPyramid,
    u: T,
    v: T,
    level: T,
    kernel: &K,
) -> T {
    let mut taps = 0;
    p.sample(u, v, level, kernel, &mut taps)
}

/// Rip sample at real levels `(lx, ly)`, see [`RipMap::sample`].
pub fn sample_rip<T: Scalar, K: Interpolator<T> + ?Sized>(
    r: &RipMap,
    u: T,
    v: T,
    lx: T,
    ly: T,
    kernel: &K,
) -> T {
    let mut taps = 0;
    r.sample(u, v, lx, ly, kernel, &mut taps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{interpolate2d, Kernel};

    fn noise(w: usize, h: usize, seed: u64) -> ImageBuffer {
        let mut s = seed;
        ImageBuffer::from_fn(w, h, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 56) as u8
        })
        .unwrap()
    }

    #[test]
    fn single_pixel_has_one_level() {
        let img = ImageBuffer::filled(1, 1, 9).unwrap();
        assert_eq!(build_mipmap(&img).levels().len(), 1);
        let r = build_ripmap(&img);
        assert_eq!((r.max_level_x(), r.max_level_y()), (0, 0));
    }

    #[test]
    fn constant_chain() {
        let img = ImageBuffer::filled(4, 4, 100).unwrap();
        let p = build_mipmap(&img);
        let dims: Vec<_> = p.levels().iter().map(|l| (l.width(), l.height())).collect();
        assert_eq!(dims, vec![(4, 4), (2, 2), (1, 1)]);
        assert!(p
            .levels()
            .iter()
            .all(|l| l.pixels().iter().all(|&v| v == 100)));
    }

    #[test]
    fn box_mean_rounds_half_away() {
        let img = ImageBuffer::from_pixels(2, 2, vec![0, 255, 255, 0]).unwrap();
        assert_eq!(build_mipmap(&img).level(1).pixels(), &[128]);
    }

    #[test]
    fn odd_dimensions_use_partial_boxes() {
        let img = ImageBuffer::from_pixels(3, 1, vec![10, 20, 200]).unwrap();
        let p = build_mipmap(&img);
        assert_eq!(p.level(1).pixels(), &[15, 200]);
        // Mean of the real parents (15, 200), not of rounded values.
        assert_eq!(p.level(2).pixels(), &[108]);
        let dims: Vec<_> = build_mipmap(&noise(13, 5, 1))
            .levels()
            .iter()
            .map(|l| (l.width(), l.height()))
            .collect();
        assert_eq!(dims, vec![(13, 5), (7, 3), (4, 2), (2, 1), (1, 1)]);
    }

    #[test]
    fn ripmap_axis_entries() {
        let img = ImageBuffer::from_pixels(4, 2, vec![0, 10, 20, 31, 100, 200, 7, 8]).unwrap();
        let r = build_ripmap(&img);
        assert_eq!(r.entry(0, 0), &img);
        assert_eq!(r.entry(1, 0).pixels(), &[5, 26, 150, 8]);
        assert_eq!(r.entry(0, 1).pixels(), &[50, 105, 14, 20]);
        assert_eq!((r.max_level_x(), r.max_level_y()), (2, 1));
    }

    #[test]
    fn ripmap_axis_order_within_one_level() {
        let img = noise(37, 23, 3);
        let r = build_ripmap(&img);
        // Vertical-first oracle.
        let base = Plane::from_image(&img);
        for kx in 0..=r.max_level_x() {
            for ky in 0..=r.max_level_y() {
                let mut p = base.clone();
                for _ in 0..ky {
                    p = p.reduce_y();
                }
                for _ in 0..kx {
                    p = p.reduce_x();
                }
                let other = p.to_image();
                for (a, b) in r.entry(kx, ky).pixels().iter().zip(other.pixels()) {
                    assert!((*a as i32 - *b as i32).abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn memory_ratios_power_of_two() {
        let img = noise(512, 512, 5);
        let mip = build_mipmap(&img).extra_memory_ratio();
        assert!((0.3330..=0.3336).contains(&mip), "{mip}");
        let rip = build_ripmap(&img).extra_memory_ratio();
        assert!((2.99..=3.01).contains(&rip), "{rip}");
        // Grid total is (2 - 2^-9)^2 times the original.
        assert!((rip + 1.0 - (2.0 - 1.0 / 512.0f64).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn mean_is_preserved() {
        for img in [noise(64, 64, 11), noise(128, 32, 12)] {
            let p = build_mipmap(&img);
            let m0 = img.mean();
            for l in p.levels() {
                assert!((l.mean() - m0).abs() <= 0.5, "{} vs {m0}", l.mean());
            }
        }
        let ramp = ImageBuffer::from_fn(64, 64, |x, y| (x * 2 + y) as u8).unwrap();
        let m0 = ramp.mean();
        for l in build_mipmap(&ramp).levels() {
            assert!((l.mean() - m0).abs() <= 0.5);
        }
    }

    #[test]
    fn rip_diagonal_matches_mip() {
        let img = noise(64, 48, 7);
        let mip = build_mipmap(&img);
        let rip = build_ripmap(&img);
        for k in 0..=rip.max_level_x().min(rip.max_level_y()) {
            let (a, b) = (mip.level(k), rip.entry(k, k));
            assert_eq!((a.width(), a.height()), (b.width(), b.height()));
            for (x, y) in a.pixels().iter().zip(b.pixels()) {
                assert!((*x as i32 - *y as i32).abs() <= 1);
            }
        }
    }

    #[test]
    fn mip_sampling_basics() {
        let img = noise(32, 32, 9);
        let p = build_mipmap(&img);
        let k = Kernel::<f64>::Bilinear;
        for &(u, v) in &[(3.0, 4.0), (10.3, 0.7), (-0.4, 31.2)] {
            assert_eq!(sample_mip(&p, u, v, 0.0, &k), interpolate2d(&img, &k, u, v));
            // Negative levels clamp to zero.
            assert_eq!(
                sample_mip(&p, u, v, -2.0, &k),
                interpolate2d(&img, &k, u, v)
            );
        }
        let flat = build_mipmap(&ImageBuffer::filled(16, 16, 100).unwrap());
        for level in [0.0, 0.3, 1.0, 2.7, 9.0] {
            let v = sample_mip(&flat, 5.5, 3.2, level, &Kernel::<f64>::bicubic());
            assert!((v - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mip_blend_between_levels() {
        let p = MipPyramid {
            levels: vec![
                ImageBuffer::filled(4, 4, 100).unwrap(),
                ImageBuffer::filled(2, 2, 200).unwrap(),
                ImageBuffer::filled(1, 1, 200).unwrap(),
            ],
        };
        let mut taps = 0;
        let v = p.sample(1.0, 2.0, 0.5, &Kernel::<f64>::Bilinear, &mut taps);
        assert_eq!(v, 150.0);
        assert_eq!(taps, 8);
    }

    #[test]
    fn rip_sampling_basics() {
        let img = noise(32, 16, 21);
        let r = build_ripmap(&img);
        let k = Kernel::<f64>::Bilinear;
        assert_eq!(
            sample_rip(&r, 7.2, 3.9, 0.0, 0.0, &k),
            interpolate2d(&img, &k, 7.2, 3.9)
        );
        let direct = interpolate2d(r.entry(1, 0), &k, level_coord(7.2, 1), 3.9);
        assert_eq!(sample_rip(&r, 7.2, 3.9, 1.0, 0.0, &k), direct);
        let flat = build_ripmap(&ImageBuffer::filled(16, 8, 42).unwrap());
        for (lx, ly) in [(0.0, 0.0), (0.5, 2.5), (3.2, 0.1), (8.0, 8.0)] {
            let v = sample_rip(&flat, 3.3, 2.2, lx, ly, &Kernel::<f64>::HermiteSpline);
            assert!((v - 42.0).abs() < 1e-9);
        }
        let mut taps = 0;
        r.sample(1.0, 1.0, 0.5, 1.5, &k, &mut taps);
        assert_eq!(taps, 16);
    }

    /// Energy above half the Nyquist frequency, via a separable DFT.
    fn high_band_energy(img: &[f64], n: usize) -> f64 {
        use std::f64::consts::TAU;
        let dft_rows = |data: &[(f64, f64)], stride_out: bool| {
            let mut out = vec![(0.0, 0.0); n * n];
            for r in 0..n {
                for k in 0..n {
                    let (mut re, mut im) = (0.0, 0.0);
                    for t in 0..n {
                        let (a, b) = if stride_out {
                            data[t * n + r]
                        } else {
                            data[r * n + t]
                        };
                        let ang = -TAU * (k * t) as f64 / n as f64;
                        re += a * ang.cos() - b * ang.sin();
                        im += a * ang.sin() + b * ang.cos();
                    }
                    if stride_out {
                        out[k * n + r] = (re, im);
                    } else {
                        out[r * n + k] = (re, im);
                    }
                }
            }
            out
        };
        let input: Vec<_> = img.iter().map(|&v| (v, 0.0)).collect();
        let spec = dft_rows(&dft_rows(&input, false), true);
        let mut e = 0.0;
        for ky in 0..n {
            for kx in 0..n {
                let fx = kx.min(n - kx) as f64 / n as f64;
                let fy = ky.min(n - ky) as f64 / n as f64;
                if fx.max(fy) > 0.25 {
                    let (re, im) = spec[ky * n + kx];
                    e += re * re + im * im;
                }
            }
        }
        e
    }

    #[test]
    fn higher_levels_remove_high_frequencies() {
        let n = 64;
        let zone = ImageBuffer::from_fn(n, n, |x, y| {
            let (dx, dy) = (x as f64 - 32.0, y as f64 - 32.0);
            (127.5 + 127.5 * (std::f64::consts::PI * (dx * dx + dy * dy) / n as f64).cos()).round()
                as u8
        })
        .unwrap();
        let p = build_mipmap(&zone);
        let k = Kernel::<f64>::Bilinear;
        let energies: Vec<f64> = (0..4)
            .map(|level| {
                let plane: Vec<f64> = (0..n * n)
                    .map(|i| sample_mip(&p, (i % n) as f64, (i / n) as f64, level as f64, &k))
                    .collect();
                high_band_energy(&plane, n)
            })
            .collect();
        for w in energies.windows(2) {
            assert!(w[1] < w[0], "{energies:?}");
        }
    }
}
