//! Homographies and the backward mapping used by the warp.
//!
//! A [`Homography`] maps source-plane coordinates `(u, v)` to output-plane
//! coordinates `(x, y)`:
//!
//! ```text
//! x = (t11 u + t12 v + t13) / (t31 u + t32 v + t33)
//! y = (t21 u + t22 v + t23) / (t31 u + t32 v + t33)
//! ```
//!
//! Warping walks the output raster, so what we actually evaluate per sample
//! is the inverse matrix `P`. [`ScanlineDecomposition`] splits each row of
//! `P` into a column term `f_i(x) = p_i1 x` and a row term
//! `g_i(y) = p_i2 y + p_i3`, tabulated over the raster, so that a grid point
//! costs two multiplications and one division.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, Scalar};

const HORIZON_EPS: f64 = 1e-12;
const SINGULAR_EPS: f64 = 1e-12;

/// Tolerance on the raster extent when looking up off-grid points.
const EXTENT_SLACK: f64 = 1e-9;

/// Projective map of the plane, stored canonicalized (`t33 = 1` whenever
/// `|t33| > 1e-12`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography<T> {
    m: [[T; 3]; 3],
}

fn det3<T: Scalar>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn max_abs<T: Scalar>(m: &[[T; 3]; 3]) -> T {
    m.iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc.max(v.abs()))
}

fn mat_mul<T: Scalar>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

impl<T: Scalar> Homography<T> {
    /// Builds a homography from a row-major matrix, rejecting singular input.
    pub fn new(m: [[T; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Singular { det: f64::NAN });
        }
        let det = det3(&m);
        let norm = max_abs(&m);
        if norm == T::zero() || det.abs() <= T::lit(SINGULAR_EPS) * norm * norm * norm {
            return Err(Error::Singular {
                det: det.to_f64_lossy(),
            });
        }
        Ok(Self { m: canonicalize(m) })
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn scaling(sx: T, sy: T) -> Result<Self> {
        let (o, z) = (T::one(), T::zero());
        Self::new([[sx, z, z], [z, sy, z], [z, z, o]])
    }

    pub fn translation(tx: T, ty: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, tx], [z, o, ty], [z, z, o]],
        }
    }

    /// The canonicalized row-major matrix.
    pub fn matrix(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    pub fn det(&self) -> T {
        det3(&self.m)
    }

    pub fn invert(&self) -> Result<Self> {
        let m = &self.m;
        let det = det3(m);
        if det == T::zero() || !det.is_finite() {
            return Err(Error::Singular {
                det: det.to_f64_lossy(),
            });
        }
        // Adjugate; the 1/det factor is irrelevant up to scale but keeps
        // magnitudes sane when t33 of the inverse is near zero.
        let inv_det = T::one() / det;
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        let scaled = adj.map(|row| row.map(|v| v * inv_det));
        Self::new(scaled)
    }

    /// Applies `self` first, then `next`. The matrix is `next · self`.
    pub fn then(&self, next: &Self) -> Result<Self> {
        Self::new(mat_mul(&next.m, &self.m))
    }

    /// Maps `(x, y)` through the homography.
    pub fn project(&self, x: T, y: T) -> Result<(T, T)> {
        let m = &self.m;
        let den = m[2][0] * x + m[2][1] * y + m[2][2];
        if !(den.abs() >= T::lit(HORIZON_EPS)) {
            return Err(Error::Horizon {
                x: x.to_f64_lossy(),
                y: y.to_f64_lossy(),
            });
        }
        let q = T::one() / den;
        Ok((
            (m[0][0] * x + m[0][1] * y + m[0][2]) * q,
            (m[1][0] * x + m[1][1] * y + m[1][2]) * q,
        ))
    }

    /// Analytic Jacobian of [`project`](Self::project) at `(x, y)`.
    pub fn jacobian_at(&self, x: T, y: T) -> Result<JacobianEstimate<T>> {
        let m = &self.m;
        let den = m[2][0] * x + m[2][1] * y + m[2][2];
        let n1 = m[0][0] * x + m[0][1] * y + m[0][2];
        let n2 = m[1][0] * x + m[1][1] * y + m[1][2];
        jacobian_from_forms(m, n1, n2, den, x, y)
    }

    /// Homography taking the four `src` points onto the four `dst` points.
    pub(crate) fn from_quad(src: [(T, T); 4], dst: [(T, T); 4]) -> Result<Self> {
        // Unknowns h11..h32 with h33 = 1.
        let mut a = [[T::zero(); 9]; 8];
        for (k, (&(u, v), &(x, y))) in src.iter().zip(dst.iter()).enumerate() {
            let (o, z) = (T::one(), T::zero());
            a[2 * k] = [u, v, o, z, z, z, -x * u, -x * v, x];
            a[2 * k + 1] = [z, z, z, u, v, o, -y * u, -y * v, y];
        }
        let h = solve8(a).ok_or(Error::Singular { det: 0.0 })?;
        Self::new([
            [h[0], h[1], h[2]],
            [h[3], h[4], h[5]],
            [h[6], h[7], T::one()],
        ])
    }

    /// Parses nine whitespace-separated reals in row-major order.
    pub fn parse_text(text: &str) -> Result<Self> {
        let values = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad matrix entry `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 9 {
            return Err(Error::Format(format!(
                "expected 9 matrix entries, found {}",
                values.len()
            )));
        }
        let mut m = [[T::zero(); 3]; 3];
        for (i, v) in values.into_iter().enumerate() {
            m[i / 3][i % 3] = T::lit(v);
        }
        Self::new(m)
    }

    /// Canonicalized text form, one matrix row per line.
    pub fn to_text(&self) -> String {
        self.m
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| format!("{}", v.to_f64_lossy()))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }

    /// Largest absolute entry-wise difference against another homography.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

fn canonicalize<T: Scalar>(m: [[T; 3]; 3]) -> [[T; 3]; 3] {
    let t33 = m[2][2];
    if t33.abs() > T::lit(HORIZON_EPS) {
        m.map(|row| row.map(|v| v / t33))
    } else {
        m
    }
}

/// Gaussian elimination with partial pivoting on an 8x9 augmented system.
fn solve8<T: Scalar>(mut a: [[T; 9]; 8]) -> Option<[T; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < T::lit(1e-300).max(T::min_positive_value()) {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..8 {
            let f = a[row][col] / a[col][col];
            for k in col..9 {
                let sub = f * a[col][k];
                a[row][k] = a[row][k] - sub;
            }
        }
    }
    let mut x = [T::zero(); 8];
    for row in (0..8).rev() {
        let mut acc = a[row][8];
        for k in row + 1..8 {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Inverse of `h`.
pub fn invert<T: Scalar>(h: &Homography<T>) -> Result<Homography<T>> {
    h.invert()
}

/// Applies `a` first, then `b`.
pub fn compose<T: Scalar>(a: &Homography<T>, b: &Homography<T>) -> Result<Homography<T>> {
    a.then(b)
}

/// Maps `(x, y)` through `h`.
pub fn project<T: Scalar>(h: &Homography<T>, x: T, y: T) -> Result<(T, T)> {
    h.project(x, y)
}

/// Partial derivatives of the input coordinates with respect to the output
/// coordinates at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianEstimate<T> {
    pub du_dx: T,
    pub du_dy: T,
    pub dv_dx: T,
    pub dv_dy: T,
}

fn jacobian_from_forms<T: Scalar>(
    p: &[[T; 3]; 3],
    n1: T,
    n2: T,
    den: T,
    x: T,
    y: T,
) -> Result<JacobianEstimate<T>> {
    if !(den.abs() >= T::lit(HORIZON_EPS)) {
        return Err(Error::Horizon {
            x: x.to_f64_lossy(),
            y: y.to_f64_lossy(),
        });
    }
    // Quotient rule: d(n/d)/dx = (n' - (n/d) d') / d.
    let q = T::one() / den;
    let u = n1 * q;
    let v = n2 * q;
    Ok(JacobianEstimate {
        du_dx: (p[0][0] - u * p[2][0]) * q,
        du_dy: (p[0][1] - u * p[2][1]) * q,
        dv_dx: (p[1][0] - v * p[2][0]) * q,
        dv_dy: (p[1][1] - v * p[2][1]) * q,
    })
}

/// Backward projection split into per-column and per-row linear forms.
///
/// Pixel `(i, j)` sits at continuous coordinates `(i, j)`; the raster covers
/// `[-0.5, w - 0.5] x [-0.5, h - 0.5]`. The denominator is checked to keep
/// one sign over that whole rectangle.
#[derive(Debug, Clone)]
pub struct ScanlineDecomposition<T> {
    p: [[T; 3]; 3],
    width: usize,
    height: usize,
    /// `f[x][i] = p_i1 * x`
    f: Vec<[T; 3]>,
    /// `g[y][i] = p_i2 * y + p_i3`
    g: Vec<[T; 3]>,
}

impl<T: Scalar> ScanlineDecomposition<T> {
    /// Tables for the inverse of the forward (source to output) map `h`.
    pub fn decompose(h: &Homography<T>, width: usize, height: usize) -> Result<Self> {
        Self::from_backward(&h.invert()?, width, height)
    }

    /// Tables for an already-inverted (output to source) map.
    pub fn from_backward(p: &Homography<T>, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroExtent { width, height });
        }
        let p = *p.matrix();
        let half = T::lit(0.5);
        let (x0, x1) = (-half, T::from_index(width as isize) - half);
        let (y0, y1) = (-half, T::from_index(height as isize) - half);
        // The denominator is affine, so its sign over the rectangle is
        // decided by the corners.
        let dens = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)]
            .map(|(x, y)| p[2][0] * x + p[2][1] * y + p[2][2]);
        let all_pos = dens.iter().all(|d| *d >= T::lit(HORIZON_EPS));
        let all_neg = dens.iter().all(|d| *d <= -T::lit(HORIZON_EPS));
        if !(all_pos || all_neg) {
            return Err(Error::HorizonCrossesRaster { width, height });
        }

        let f = (0..width)
            .map(|x| {
                let x = T::from_index(x as isize);
                [p[0][0] * x, p[1][0] * x, p[2][0] * x]
            })
            .collect();
        let g = (0..height)
            .map(|y| {
                let y = T::from_index(y as isize);
                [
                    p[0][1] * y + p[0][2],
                    p[1][1] * y + p[1][2],
                    p[2][1] * y + p[2][2],
                ]
            })
            .collect();
        Ok(Self {
            p,
            width,
            height,
            f,
            g,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// The backward matrix `P`.
    pub fn backward(&self) -> &[[T; 3]; 3] {
        &self.p
    }

    /// Column table entry `[f_1(x), f_2(x), f_3(x)]`.
    pub fn column_forms(&self, x: usize) -> [T; 3] {
        self.f[x]
    }

    /// Row table entry `[g_1(y), g_2(y), g_3(y)]`.
    pub fn row_forms(&self, y: usize) -> [T; 3] {
        self.g[y]
    }

    /// Back-projects an integer raster point: two multiplications, one
    /// division.
    ///
    /// # Panics
    ///
    /// If `x` or `y` is outside the table extent.
    #[inline]
    pub fn map_grid(&self, x: usize, y: usize) -> (T, T) {
        let (f, g) = (&self.f[x], &self.g[y]);
        let q = T::one() / (f[2] + g[2]);
        (q * (f[0] + g[0]), q * (f[1] + g[1]))
    }

    /// Evaluates the three linear forms at a real point; the nearest table
    /// entry is corrected by the sub-pixel offset.
    #[inline]
    fn forms(&self, x: T, y: T) -> Result<[T; 3]> {
        let (ix, dx) = self.split(x, self.width, x, y)?;
        let (iy, dy) = self.split(y, self.height, x, y)?;
        let (f, g, p) = (&self.f[ix], &self.g[iy], &self.p);
        if dx == T::zero() && dy == T::zero() {
            return Ok([f[0] + g[0], f[1] + g[1], f[2] + g[2]]);
        }
        Ok([
            f[0] + g[0] + p[0][0] * dx + p[0][1] * dy,
            f[1] + g[1] + p[1][0] * dx + p[1][1] * dy,
            f[2] + g[2] + p[2][0] * dx + p[2][1] * dy,
        ])
    }

    #[inline]
    fn split(&self, c: T, extent: usize, x: T, y: T) -> Result<(usize, T)> {
        let lo = T::lit(-0.5 - EXTENT_SLACK);
        let hi = T::from_index(extent as isize) + T::lit(-0.5 + EXTENT_SLACK);
        if !(c >= lo && c <= hi) {
            return Err(Error::OutOfExtent {
                x: x.to_f64_lossy(),
                y: y.to_f64_lossy(),
                width: self.width,
                height: self.height,
            });
        }
        let i = c
            .round()
            .max(T::zero())
            .min(T::from_index(extent as isize - 1));
        let idx = i.to_usize().unwrap_or(0);
        Ok((idx, c - i))
    }

    /// Back-projects a real point in the raster extent.
    #[inline]
    pub fn map_point(&self, x: T, y: T) -> Result<(T, T)> {
        let [n1, n2, d] = self.forms(x, y)?;
        let q = T::one() / d;
        Ok((q * n1, q * n2))
    }

    /// Analytic partial derivatives of the backward map at `(x, y)`.
    #[inline]
    pub fn jacobian(&self, x: T, y: T) -> Result<JacobianEstimate<T>> {
        let [n1, n2, d] = self.forms(x, y)?;
        jacobian_from_forms(&self.p, n1, n2, d, x, y)
    }
}

/// Builds the scanline tables for `h`, see [`ScanlineDecomposition::decompose`].
pub fn decompose<T: Scalar>(
    h: &Homography<T>,
    out_width: usize,
    out_height: usize,
) -> Result<ScanlineDecomposition<T>> {
    ScanlineDecomposition::decompose(h, out_width, out_height)
}

const TRIPLE_ATTEMPTS: usize = 256;
const CORNER_JITTER: f64 = 0.2;
const MIN_SCALE: f64 = 0.25;
const MAX_SCALE: f64 = 4.0;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Scalar> Rect<T> {
    /// Continuous extent of a `width x height` raster.
    pub fn raster(width: usize, height: usize) -> Self {
        let half = T::lit(0.5);
        Self {
            x0: -half,
            y0: -half,
            x1: T::from_index(width as isize) - half,
            y1: T::from_index(height as isize) - half,
        }
    }

    pub fn corners(&self) -> [(T, T); 4] {
        [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x1, self.y1),
            (self.x0, self.y1),
        ]
    }

    /// Bounding box of this rectangle mapped through `h`.
    pub fn mapped_bounds(&self, h: &Homography<T>) -> Result<Self> {
        let mut out = Self {
            x0: T::infinity(),
            y0: T::infinity(),
            x1: T::neg_infinity(),
            y1: T::neg_infinity(),
        };
        for (x, y) in self.corners() {
            let (u, v) = h.project(x, y)?;
            out.x0 = out.x0.min(u);
            out.y0 = out.y0.min(v);
            out.x1 = out.x1.max(u);
            out.y1 = out.y1.max(v);
        }
        Ok(out)
    }
}

/// Checks that `h` keeps `domain` away from its horizon and that the local
/// scale change stays inside `[1/4, 4]` on a 5x5 probe grid.
pub fn is_admissible<T: Scalar>(h: &Homography<T>, domain: &Rect<T>) -> bool {
    let m = h.matrix();
    let dens = domain
        .corners()
        .map(|(x, y)| m[2][0] * x + m[2][1] * y + m[2][2]);
    let margin = T::lit(1e-3);
    if !(dens.iter().all(|d| *d > margin) || dens.iter().all(|d| *d < -margin)) {
        return false;
    }
    let (lo, hi) = (T::lit(MIN_SCALE), T::lit(MAX_SCALE));
    let steps = 4;
    for i in 0..=steps {
        for j in 0..=steps {
            let tx = T::from_index(i) / T::from_index(steps);
            let ty = T::from_index(j) / T::from_index(steps);
            let x = domain.x0 + (domain.x1 - domain.x0) * tx;
            let y = domain.y0 + (domain.y1 - domain.y0) * ty;
            let Ok(jac) = h.jacobian_at(x, y) else {
                return false;
            };
            let cx = jac.du_dx.hypot(jac.dv_dx);
            let cy = jac.du_dy.hypot(jac.dv_dy);
            let area = (jac.du_dx * jac.dv_dy - jac.du_dy * jac.dv_dx).abs().sqrt();
            if [cx, cy, area].iter().any(|s| !(*s >= lo && *s <= hi)) {
                return false;
            }
        }
    }
    true
}

/// Three homographies whose composition is the identity.
///
/// The first two each move the corners of the `width x height` raster by up
/// to 20% of the extent; the third undoes their product. Deterministic in
/// `seed`.
pub fn random_composed_triple<T: Scalar>(
    seed: u64,
    (width, height): (usize, usize),
) -> Result<[Homography<T>; 3]> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroExtent { width, height });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let square = Rect::<T>::raster(width, height);
    let (w, h) = (width as f64, height as f64);
    let perturbed = |rng: &mut ChaCha8Rng| {
        square.corners().map(|(x, y)| {
            let dx = rng.gen_range(-CORNER_JITTER..=CORNER_JITTER) * w;
            let dy = rng.gen_range(-CORNER_JITTER..=CORNER_JITTER) * h;
            (x + T::lit(dx), y + T::lit(dy))
        })
    };
    for _ in 0..TRIPLE_ATTEMPTS {
        let q1 = perturbed(&mut rng);
        let q2 = perturbed(&mut rng);
        let Ok(triple) = triple_from_quads(&square, q1, q2) else {
            continue;
        };
        return Ok(triple);
    }
    Err(Error::NoAdmissibleTriple {
        seed,
        attempts: TRIPLE_ATTEMPTS,
    })
}

fn triple_from_quads<T: Scalar>(
    square: &Rect<T>,
    q1: [(T, T); 4],
    q2: [(T, T); 4],
) -> Result<[Homography<T>; 3]> {
    let corners = square.corners();
    let h1 = Homography::from_quad(corners, q1)?;
    let h2 = Homography::from_quad(corners, q2)?;
    let h3 = h1.then(&h2)?.invert()?;
    let d1 = *square;
    let d2 = d1.mapped_bounds(&h1)?;
    let d3 = d2.mapped_bounds(&h2)?;
    let admissible = is_admissible(&h1, &d1) && is_admissible(&h2, &d2) && is_admissible(&h3, &d3);
    if admissible {
        Ok([h1, h2, h3])
    } else {
        Err(Error::NoAdmissibleTriple {
            seed: 0,
            attempts: 1,
        })
    }
}
