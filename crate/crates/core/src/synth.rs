//! Deterministic synthetic test images.
//!
//! Used by the tests and the `synth` CLI command when no real corpus is at
//! hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::ImageBuffer;

/// Checkerboard with square cells of `cell` pixels.
pub fn checkerboard(width: usize, height: usize, cell: usize) -> ImageBuffer {
    let cell = cell.max(1);
    ImageBuffer::from_fn(width, height, |x, y| {
        if (x / cell + y / cell) % 2 == 0 {
            255
        } else {
            0
        }
    })
    .expect("nonempty")
}

/// Radial zone plate: local frequency grows linearly with the radius and
/// reaches Nyquist at the edge midpoints.
pub fn zone_plate(size: usize) -> ImageBuffer {
    let c = (size as f64 - 1.0) / 2.0;
    let k = std::f64::consts::PI / size as f64;
    ImageBuffer::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        (127.5 + 127.5 * (k * (dx * dx + dy * dy)).cos()).round() as u8
    })
    .expect("nonempty")
}

/// Smooth shading plus soft-edged blobs, standing in for photographs.
pub fn natural_like(seed: u64, width: usize, height: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e61_7475_7261_6c00);
    let waves: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.gen_range(0.01..0.12),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(8.0..25.0),
            )
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.gen_range(0.0..width as f64),
                rng.gen_range(0.0..height as f64),
                rng.gen_range(0.05..0.3) * width.min(height) as f64,
                rng.gen_range(-70.0..70.0),
            )
        })
        .collect();
    ImageBuffer::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let mut v = 128.0;
        for &(f, dir, phase, amp) in &waves {
            v += amp * (f * (xf * dir.cos() + yf * dir.sin()) + phase).sin();
        }
        for &(cx, cy, r, amp) in &blobs {
            let d = ((xf - cx).powi(2) + (yf - cy).powi(2)).sqrt();
            // Logistic edge about 1.5 px wide.
            v += amp / (1.0 + ((d - r) / 1.5).exp());
        }
        v.round().clamp(0.0, 255.0) as u8
    })
    .expect("nonempty")
}

/// Light page with lines of dark stroke glyphs, a heading and a ruled box.
pub fn document_like(seed: u64, width: usize, height: usize) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x646f_6375_6d65_6e74);
    let mut page = vec![0f64; width * height];
    let tilt = rng.gen_range(-12.0..12.0);
    for y in 0..height {
        for x in 0..width {
            let shade = tilt * (x as f64 / width as f64 - 0.5);
            page[y * width + x] = 232.0 + shade + rng.gen_range(-3.0..3.0);
        }
    }
    let ink = rng.gen_range(20.0..60.0);
    let stamp = |x: usize, y: usize, page: &mut Vec<f64>| {
        if x < width && y < height {
            page[y * width + x] = ink;
        }
    };

    let margin = (width / 16).max(2);
    let mut y = margin;
    let mut first = true;
    while y + 8 < height.saturating_sub(margin) {
        // Headings use doubled glyph cells.
        let scale = if first { 2 } else { 1 };
        first = false;
        let (cell_w, cell_h) = (4 * scale, 6 * scale);
        let mut x = margin;
        let line_end = width - margin - rng.gen_range(0..width / 4 + 1);
        while x + cell_w < line_end {
            if rng.gen_bool(0.15) {
                x += cell_w; // word gap
                continue;
            }
            // Random strokes on a 3x5 grid of stroke points.
            let strokes = rng.gen_range(2..5);
            for _ in 0..strokes {
                let (gx0, gy0) = (rng.gen_range(0..3), rng.gen_range(0..5));
                let horizontal = rng.gen_bool(0.5);
                let len = rng.gen_range(1..if horizontal { 3 } else { 5 });
                for t in 0..=len {
                    let (gx, gy) = if horizontal {
                        ((gx0 + t).min(2), gy0)
                    } else {
                        (gx0, (gy0 + t).min(4))
                    };
                    for sy in 0..scale {
                        for sx in 0..scale {
                            stamp(x + gx * scale + sx, y + gy * scale + sy, &mut page);
                        }
                    }
                }
            }
            x += cell_w;
        }
        y += cell_h + 2 + scale;
    }

    // Ruled box around part of the page.
    let (bx0, by0) = (margin / 2, height * 3 / 4);
    let (bx1, by1) = (width - margin / 2 - 1, height - margin / 2 - 1);
    if by0 < by1 {
        for x in bx0..=bx1 {
            stamp(x, by0, &mut page);
            stamp(x, by1, &mut page);
        }
        for y in by0..=by1 {
            stamp(bx0, y, &mut page);
            stamp(bx1, y, &mut page);
        }
    }

    let pixels = page
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    ImageBuffer::from_pixels(width, height, pixels).expect("nonempty")
}
