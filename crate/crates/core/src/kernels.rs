//! One-dimensional interpolation kernels and separable 2-D interpolation.
//!
//! Every kernel `h(s)` reconstructs a continuous signal as
//! `I(x) = sum_k h(x - k) I_k`; in 2-D the kernel is applied separably.
//! Taps that fall outside the image are clamped to the nearest edge pixel.

use std::fmt;
use std::str::FromStr;

use crate::image::ImageBuffer;
use crate::{Error, Result, Scalar};

/// Widest per-axis footprint (Hermite spline).
pub const MAX_TAPS: usize = 6;

/// Default lookup-table resolution.
pub const DEFAULT_LUT_BINS: usize = 1024;

/// Interpolation kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel<T> {
    NearestPixel,
    Bilinear,
    /// Keys cubic convolution with free parameter `alpha`.
    Bicubic {
        alpha: T,
    },
    CubicBSpline,
    /// Cubic Hermite spline with the 4-point derivative estimate
    /// `f'(n) = (-f(n+2) + 8 f(n+1) - 8 f(n-1) + f(n-2)) / 12`, folded into
    /// an equivalent 6-tap kernel.
    HermiteSpline,
}

impl<T: Scalar> Kernel<T> {
    pub fn bicubic() -> Self {
        Kernel::Bicubic {
            alpha: T::lit(-0.5),
        }
    }

    /// The five kernels in reporting order.
    pub fn all() -> [Self; 5] {
        [
            Kernel::NearestPixel,
            Kernel::Bilinear,
            Kernel::bicubic(),
            Kernel::CubicBSpline,
            Kernel::HermiteSpline,
        ]
    }

    pub fn support_radius(&self) -> T {
        match self {
            Kernel::NearestPixel => T::lit(0.5),
            Kernel::Bilinear => T::one(),
            Kernel::Bicubic { .. } | Kernel::CubicBSpline => T::lit(2.0),
            Kernel::HermiteSpline => T::lit(3.0),
        }
    }

    /// Whether `h(0) = 1` and `h(k) = 0` for every other integer `k`.
    pub fn is_interpolating(&self) -> bool {
        !matches!(self, Kernel::CubicBSpline)
    }

    /// Exact kernel value.
    pub fn eval(&self, s: T) -> T {
        let a = s.abs();
        let lit = T::lit;
        match *self {
            // Ties at |s| = 0.5 go to the right-hand pixel.
            Kernel::NearestPixel => {
                if s >= lit(-0.5) && s < lit(0.5) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Kernel::Bilinear => {
                if a < T::one() {
                    T::one() - a
                } else {
                    T::zero()
                }
            }
            Kernel::Bicubic { alpha } => {
                if a < T::one() {
                    ((alpha + lit(2.0)) * a - (alpha + lit(3.0))) * a * a + T::one()
                } else if a < lit(2.0) {
                    alpha * (((a - lit(5.0)) * a + lit(8.0)) * a - lit(4.0))
                } else {
                    T::zero()
                }
            }
            Kernel::CubicBSpline => {
                if a < T::one() {
                    ((lit(3.0) * a - lit(6.0)) * a * a + lit(4.0)) / lit(6.0)
                } else if a < lit(2.0) {
                    let b = lit(2.0) - a;
                    b * b * b / lit(6.0)
                } else {
                    T::zero()
                }
            }
            Kernel::HermiteSpline => {
                let two_thirds = lit(2.0 / 3.0);
                let twelfth = lit(1.0 / 12.0);
                if a < T::one() {
                    hermite_h00(a) - two_thirds * hermite_h11(a)
                } else if a < lit(2.0) {
                    let t = a - T::one();
                    twelfth * hermite_h11(t) - two_thirds * hermite_h10(t)
                } else if a < lit(3.0) {
                    twelfth * hermite_h10(a - lit(2.0))
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Multiplications per interpolated 2-D point with a direct evaluation.
    /// Informative only; taps are the tested cost measure.
    pub fn nominal_multiplications(&self) -> u64 {
        match self {
            Kernel::NearestPixel => 0,
            Kernel::Bilinear => 8,
            Kernel::Bicubic { .. } | Kernel::CubicBSpline => 68,
            Kernel::HermiteSpline => 76,
        }
    }
}

fn hermite_h00<T: Scalar>(t: T) -> T {
    (T::lit(2.0) * t - T::lit(3.0)) * t * t + T::one()
}

fn hermite_h10<T: Scalar>(t: T) -> T {
    ((t - T::lit(2.0)) * t + T::one()) * t
}

fn hermite_h11<T: Scalar>(t: T) -> T {
    (t - T::one()) * t * t
}

impl<T: Scalar> fmt::Display for Kernel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::NearestPixel => f.write_str("nearest"),
            Kernel::Bilinear => f.write_str("bilinear"),
            Kernel::Bicubic { alpha } if *alpha == T::lit(-0.5) => f.write_str("bicubic"),
            Kernel::Bicubic { alpha } => write!(f, "bicubic:{alpha}"),
            Kernel::CubicBSpline => f.write_str("bspline"),
            Kernel::HermiteSpline => f.write_str("hermite"),
        }
    }
}

impl<T: Scalar> FromStr for Kernel<T> {
    type Err = Error;

    /// `nearest | bilinear | bicubic[:alpha] | bspline | hermite`
    fn from_str(token: &str) -> Result<Self> {
        let bad = || Error::InvalidToken {
            what: "kernel",
            token: token.to_string(),
        };
        let (name, arg) = match token.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (token, None),
        };
        let kernel = match (name, arg) {
            ("nearest", None) => Kernel::NearestPixel,
            ("bilinear", None) => Kernel::Bilinear,
            ("bicubic", None) => Kernel::bicubic(),
            ("bicubic", Some(a)) => {
                let alpha: f64 = a.parse().map_err(|_| bad())?;
                if !alpha.is_finite() {
                    return Err(bad());
                }
                Kernel::Bicubic {
                    alpha: T::lit(alpha),
                }
            }
            ("bspline", None) => Kernel::CubicBSpline,
            ("hermite", None) => Kernel::HermiteSpline,
            _ => return Err(bad()),
        };
        Ok(kernel)
    }
}

/// Piecewise-constant approximation of a kernel, sampled at bin centers
/// over `[-R, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLut<T> {
    kernel: Kernel<T>,
    bins_per_unit: usize,
    radius: T,
    scale: T,
    table: Vec<T>,
}

impl<T: Scalar> KernelLut<T> {
    pub fn new(kernel: Kernel<T>, bins_per_unit: usize) -> Result<Self> {
        if bins_per_unit == 0 {
            return Err(Error::InvalidConfig(
                "lookup table needs at least one bin per unit".into(),
            ));
        }
        let radius = kernel.support_radius();
        let len = (radius.to_f64_lossy() * 2.0 * bins_per_unit as f64).round() as usize;
        let scale = T::from_index(bins_per_unit as isize);
        let table = (0..len)
            .map(|b| {
                let center = -radius + (T::from_index(b as isize) + T::lit(0.5)) / scale;
                kernel.eval(center)
            })
            .collect();
        Ok(Self {
            kernel,
            bins_per_unit,
            radius,
            scale,
            table,
        })
    }

    pub fn kernel(&self) -> Kernel<T> {
        self.kernel
    }

    pub fn bins_per_unit(&self) -> usize {
        self.bins_per_unit
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    /// Nearest-bin lookup; zero outside the support.
    #[inline]
    pub fn lookup(&self, s: T) -> T {
        let pos = (s + self.radius) * self.scale;
        if !(pos >= T::zero()) {
            return T::zero();
        }
        match pos.to_usize() {
            Some(b) if b < self.table.len() => self.table[b],
            _ => T::zero(),
        }
    }
}

/// Builds a lookup table for `kernel`.
pub fn build_lut<T: Scalar>(kernel: Kernel<T>, bins_per_unit: usize) -> Result<KernelLut<T>> {
    KernelLut::new(kernel, bins_per_unit)
}

/// Anything that can weight interpolation taps: an exact kernel or a LUT.
pub trait Interpolator<T: Scalar>: Send + Sync {
    fn kernel(&self) -> Kernel<T>;

    fn weight(&self, s: T) -> T;

    /// Pixels read per axis for one interpolated point.
    fn taps_per_axis(&self) -> usize {
        match self.kernel() {
            Kernel::NearestPixel => 1,
            Kernel::Bilinear => 2,
            Kernel::Bicubic { .. } | Kernel::CubicBSpline => 4,
            Kernel::HermiteSpline => 6,
        }
    }

    /// First tap index and per-tap weights for coordinate `c`.
    #[inline]
    fn window(&self, c: T) -> (isize, [T; MAX_TAPS]) {
        let n = self.taps_per_axis();
        let first = if n == 1 {
            (c + T::lit(0.5)).floor()
        } else {
            c.floor() - T::from_index(n as isize / 2 - 1)
        };
        let mut w = [T::zero(); MAX_TAPS];
        for (i, wi) in w.iter_mut().enumerate().take(n) {
            *wi = self.weight(c - (first + T::from_index(i as isize)));
        }
        (first.to_isize().unwrap_or(0), w)
    }
}

impl<T: Scalar> Interpolator<T> for Kernel<T> {
    fn kernel(&self) -> Kernel<T> {
        *self
    }

    #[inline]
    fn weight(&self, s: T) -> T {
        self.eval(s)
    }
}

impl<T: Scalar> Interpolator<T> for KernelLut<T> {
    fn kernel(&self) -> Kernel<T> {
        self.kernel
    }

    #[inline]
    fn weight(&self, s: T) -> T {
        self.lookup(s)
    }
}

/// Coordinates further than this outside the image read only edge pixels
/// anyway; clamping keeps the tap index representable.
const COORD_GUARD: f64 = 1.0e6;

/// Separable interpolation at `(u, v)` with clamp-to-edge borders; adds
/// the number of pixel reads to `taps`. The result is not clamped to the
/// 8-bit range.
#[inline]
pub fn interpolate2d_counted<T: Scalar, K: Interpolator<T> + ?Sized>(
    img: &ImageBuffer,
    kernel: &K,
    u: T,
    v: T,
    taps: &mut u64,
) -> T {
    if !(u.is_finite() && v.is_finite()) {
        return T::nan();
    }
    let guard = T::lit(COORD_GUARD);
    let u = u.max(-guard).min(guard);
    let v = v.max(-guard).min(guard);
    let n = kernel.taps_per_axis();
    let (x0, wx) = kernel.window(u);
    let (y0, wy) = kernel.window(v);
    let (w, h) = (img.width() as isize, img.height() as isize);
    let px = img.pixels();

    let mut cols = [0usize; MAX_TAPS];
    for (i, c) in cols.iter_mut().enumerate().take(n) {
        *c = (x0 + i as isize).clamp(0, w - 1) as usize;
    }
    let mut acc = T::zero();
    for (j, &wyj) in wy.iter().enumerate().take(n) {
        let row = (y0 + j as isize).clamp(0, h - 1) as usize * img.width();
        let line = &px[row..row + img.width()];
        let mut r = T::zero();
        for (&c, &wxi) in cols.iter().zip(wx.iter()).take(n) {
            r = r + wxi * pixel_value::<T>(line[c]);
            *taps += 1;
        }
        acc = acc + wyj * r;
    }
    acc
}

/// [`interpolate2d_counted`] without instrumentation.
#[inline]
pub fn interpolate2d<T: Scalar, K: Interpolator<T> + ?Sized>(
    img: &ImageBuffer,
    kernel: &K,
    u: T,
    v: T,
) -> T {
    let mut taps = 0;
    interpolate2d_counted(img, kernel, u, v, &mut taps)
}

#[inline]
pub(crate) fn pixel_value<T: Scalar>(p: u8) -> T {
    T::from_u8(p).unwrap_or_else(T::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all64() -> [Kernel<f64>; 5] {
        Kernel::all()
    }

    #[test]
    fn support_radii() {
        let r: Vec<f64> = all64().iter().map(|k| k.support_radius()).collect();
        assert_eq!(r, vec![0.5, 1.0, 2.0, 2.0, 3.0]);
        let taps: Vec<usize> = all64().iter().map(|k| k.taps_per_axis()).collect();
        assert_eq!(taps, vec![1, 2, 4, 4, 6]);
    }

    #[test]
    fn hand_evaluated_values() {
        assert_eq!(Kernel::<f64>::Bilinear.eval(0.25), 0.75);
        let bc = Kernel::<f64>::bicubic();
        assert!((bc.eval(0.5) - 0.5625).abs() < 1e-12);
        assert!((bc.eval(1.5) + 0.0625).abs() < 1e-12);
        let bs = Kernel::<f64>::CubicBSpline;
        assert!((bs.eval(0.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((bs.eval(1.0) - 1.0 / 6.0).abs() < 1e-12);
        assert!((bs.eval(-1.0) - 1.0 / 6.0).abs() < 1e-12);
        let he = Kernel::<f64>::HermiteSpline;
        assert!((he.eval(0.5) - 7.0 / 12.0).abs() < 1e-12);
        assert!((he.eval(1.5) + 3.0 / 32.0).abs() < 1e-12);
        assert!((he.eval(2.5) - 1.0 / 96.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_matches_direct_spline_evaluation() {
        // Oracle: evaluate the Hermite spline with the 4-point derivative on
        // a unit impulse and read off the response.
        let impulse = |k: i32| if k == 0 { 1.0 } else { 0.0 };
        let deriv = |n: i32| {
            -impulse(n + 2) / 12.0 + 2.0 / 3.0 * impulse(n + 1) - 2.0 / 3.0 * impulse(n - 1)
                + impulse(n - 2) / 12.0
        };
        let spline = |x: f64| {
            let n = x.floor() as i32;
            let t = x - n as f64;
            let h00 = 2.0 * t.powi(3) - 3.0 * t.powi(2) + 1.0;
            let h01 = -2.0 * t.powi(3) + 3.0 * t.powi(2);
            let h10 = t.powi(3) - 2.0 * t.powi(2) + t;
            let h11 = t.powi(3) - t.powi(2);
            impulse(n) * h00 + impulse(n + 1) * h01 + deriv(n) * h10 + deriv(n + 1) * h11
        };
        let k = Kernel::<f64>::HermiteSpline;
        for i in -400..=400 {
            let s = i as f64 / 97.0;
            // The response at x to an impulse at 0 is h(x - 0).
            assert!((k.eval(s) - spline(s)).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn integer_points() {
        for k in all64() {
            for i in -4..=4 {
                let v = k.eval(i as f64);
                let expect = match (k.is_interpolating(), i) {
                    (true, 0) => 1.0,
                    (true, _) => 0.0,
                    (false, 0) => 2.0 / 3.0,
                    (false, -1 | 1) => 1.0 / 6.0,
                    (false, _) => 0.0,
                };
                assert!((v - expect).abs() < 1e-15, "{k} at {i}: {v}");
            }
        }
    }

    #[test]
    fn nearest_tie_rounds_up() {
        let k = Kernel::<f64>::NearestPixel;
        assert_eq!(k.eval(-0.5), 1.0);
        assert_eq!(k.eval(0.5), 0.0);
        let img = ImageBuffer::from_pixels(2, 1, vec![10, 20]).unwrap();
        assert_eq!(interpolate2d(&img, &k, 0.5, 0.0), 20.0);
        assert_eq!(interpolate2d(&img, &k, 0.4999, 0.0), 10.0);
    }

    #[test]
    fn kernel_tokens() {
        for k in all64() {
            assert_eq!(k.to_string().parse::<Kernel<f64>>().unwrap(), k);
        }
        let k: Kernel<f64> = "bicubic:-0.75".parse().unwrap();
        assert_eq!(k, Kernel::Bicubic { alpha: -0.75 });
        assert_eq!(k.to_string(), "bicubic:-0.75");
        for bad in ["", "lanczos", "bicubic:x", "bilinear:2", "bicubic:inf"] {
            assert!(bad.parse::<Kernel<f64>>().is_err(), "{bad}");
        }
    }

    #[test]
    fn lut_bins() {
        let lut = build_lut(Kernel::<f64>::Bilinear, 2).unwrap();
        assert_eq!(lut.table(), &[0.25, 0.75, 0.75, 0.25]);
        assert_eq!(lut.lookup(0.1), 0.75);
        assert_eq!(lut.lookup(-0.9), 0.25);
        assert_eq!(lut.lookup(1.0), 0.0);
        assert_eq!(lut.lookup(-1.01), 0.0);

        for bins in [1, 3, 16, 1024] {
            let lut = build_lut(Kernel::<f64>::NearestPixel, bins).unwrap();
            assert!(lut.table().iter().all(|&w| w == 1.0));
        }
        assert!(build_lut(Kernel::<f64>::Bilinear, 0).is_err());
    }

    #[test]
    fn lut_error_is_within_lipschitz_bound() {
        for k in all64().into_iter().skip(1) {
            let bins = 1024;
            let lut = build_lut(k, bins).unwrap();
            let r = k.support_radius();
            // Lipschitz estimate from a dense scan.
            let n = 200_000;
            let step = 2.0 * r / n as f64;
            let mut lip = 0.0f64;
            let mut max_err = 0.0f64;
            for i in 0..n {
                let s = -r + i as f64 * step;
                lip = lip.max(((k.eval(s + step) - k.eval(s)) / step).abs());
                max_err = max_err.max((lut.lookup(s) - k.eval(s)).abs());
            }
            assert!(
                max_err <= lip / bins as f64,
                "{k}: {max_err} > {lip}/{bins}"
            );
            if matches!(k, Kernel::Bicubic { .. }) {
                assert!(max_err <= 2e-3);
            }
        }
    }

    #[test]
    fn bilinear_midpoint() {
        let img = ImageBuffer::from_pixels(2, 1, vec![100, 200]).unwrap();
        assert_eq!(
            interpolate2d(&img, &Kernel::<f64>::Bilinear, 0.5, 0.0),
            150.0
        );
    }

    #[test]
    fn bicubic_overshoot_before_clamp() {
        // Row [0, 0, 255, 255, ...]; at u = 1.5 the taps 0..3 weigh
        // (-0.0625, 0.5625, 0.5625, -0.0625).
        let img = ImageBuffer::from_pixels(6, 1, vec![0, 0, 255, 255, 255, 255]).unwrap();
        let v = interpolate2d(&img, &Kernel::<f64>::bicubic(), 1.5, 0.0);
        let expect = -0.0625 * 0.0 + 0.5625 * 0.0 + 0.5625 * 255.0 - 0.0625 * 255.0;
        assert!((v - expect).abs() < 1e-12);
        // One pixel left of the edge the negative lobe undershoots.
        let under = interpolate2d(&img, &Kernel::<f64>::bicubic(), 0.5, 0.0);
        assert!((under - (-0.0625 * 255.0)).abs() < 1e-12);
    }

    #[test]
    fn tap_counts_per_point() {
        let img = ImageBuffer::from_pixels(3, 3, vec![7; 9]).unwrap();
        for (k, expect) in all64().into_iter().zip([1u64, 4, 16, 16, 36]) {
            let mut taps = 0;
            // Near a corner so clamped duplicates are included.
            interpolate2d_counted(&img, &k, 0.3, 0.2, &mut taps);
            assert_eq!(taps, expect, "{k}");
        }
    }

    #[test]
    fn non_finite_coordinates_yield_nan() {
        let img = ImageBuffer::from_pixels(2, 2, vec![1; 4]).unwrap();
        assert!(interpolate2d(&img, &Kernel::<f64>::Bilinear, f64::NAN, 0.0).is_nan());
        // Huge but finite coordinates clamp to the edge.
        let v = interpolate2d(&img, &Kernel::<f64>::Bilinear, 1e300, 0.0);
        assert_eq!(v, 1.0);
    }
}
