//! Synthetic images and masks of straight segments, used by tests and demos.

use crate::raster_io::Raster2D;

/// A straight segment from `a` to `b` (pixel coordinates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        Self { a, b }
    }

    /// Segment of the given length centred at `c` with direction `(cos θ, sin θ)`.
    pub fn centred(c: (f64, f64), theta: f64, length: f64) -> Self {
        let (dx, dy) = (0.5 * length * theta.cos(), 0.5 * length * theta.sin());
        Self {
            a: (c.0 - dx, c.1 - dy),
            b: (c.0 + dx, c.1 + dy),
        }
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (vx, vy) = (self.b.0 - self.a.0, self.b.1 - self.a.1);
        let len2 = vx * vx + vy * vy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((x - self.a.0) * vx + (y - self.a.1) * vy) / len2).clamp(0.0, 1.0)
        };
        let (px, py) = (self.a.0 + t * vx, self.a.1 + t * vy);
        ((x - px).powi(2) + (y - py).powi(2)).sqrt()
    }
}

/// Background `background` with each segment drawn at `level` using a
/// Gaussian cross-section of standard deviation `sigma`.
pub fn render_lines(
    width: usize,
    height: usize,
    segments: &[(Segment, f64)],
    background: f64,
    sigma: f64,
) -> Raster2D {
    Raster2D::from_fn(width, height, |x, y| {
        let mut v = background;
        for (s, level) in segments {
            let d = s.distance(x as f64, y as f64);
            let w = (-d * d / (2.0 * sigma * sigma)).exp();
            v = v * (1.0 - w) + level * w;
        }
        v
    })
}

/// Binary mask of pixels within `half_width` of any segment.
pub fn segment_mask(width: usize, height: usize, segments: &[Segment], half_width: f64) -> Raster2D {
    Raster2D::from_fn(width, height, |x, y| {
        let on = segments
            .iter()
            .any(|s| s.distance(x as f64, y as f64) <= half_width);
        if on {
            1.0
        } else {
            0.0
        }
    })
}

/// Hard-edged rendering: pixels within `half_width` of a segment take the
/// level of the first such segment, all others `background`.
pub fn paint_segments(
    width: usize,
    height: usize,
    segments: &[(Segment, f64)],
    background: f64,
    half_width: f64,
) -> Raster2D {
    Raster2D::from_fn(width, height, |x, y| {
        segments
            .iter()
            .find(|(s, _)| s.distance(x as f64, y as f64) <= half_width)
            .map_or(background, |&(_, level)| level)
    })
}

/// A rendered phantom with its 1-px segmentation and generating segments.
#[derive(Debug, Clone)]
pub struct Phantom {
    pub image: Raster2D,
    pub segmentation: Raster2D,
    pub segments: Vec<Segment>,
}

impl Phantom {
    fn paint(size: usize, parts: &[(Segment, f64)]) -> Self {
        let segments: Vec<Segment> = parts.iter().map(|p| p.0).collect();
        Self {
            image: paint_segments(size, size, parts, 1.0, 0.5),
            segmentation: segment_mask(size, size, &segments, 0.5),
            segments,
        }
    }

    /// Index of the generating segment closest to `(x, y)`.
    pub fn nearest_segment(&self, x: f64, y: f64) -> usize {
        (0..self.segments.len())
            .min_by(|&a, &b| {
                self.segments[a]
                    .distance(x, y)
                    .total_cmp(&self.segments[b].distance(x, y))
            })
            .expect("phantom has segments")
    }
}

/// Two dark bars of levels 0.3 and 0.7 on a white `size × size` patch,
/// crossing at the centre with the given angle between them.
pub fn crossing_bars(size: usize, angle: f64) -> Phantom {
    let c = (size as f64 - 1.0) / 2.0;
    let len = 0.9 * size as f64;
    let base = 10f64.to_radians();
    Phantom::paint(
        size,
        &[
            (Segment::centred((c, c), base, len), 0.3),
            (Segment::centred((c, c), base + angle, len), 0.7),
        ],
    )
}

/// One dark bar of level 0.3 with a gap of `gap` px in the middle.
pub fn interrupted_bar(size: usize, gap: f64) -> Phantom {
    let c = (size as f64 - 1.0) / 2.0;
    let theta = 20f64.to_radians();
    let (ux, uy) = (theta.cos(), theta.sin());
    let half = 0.42 * size as f64;
    let at = |t: f64| (c + t * ux, c + t * uy);
    Phantom::paint(
        size,
        &[
            (Segment::new(at(-half), at(-gap / 2.0 - 0.5)), 0.3),
            (Segment::new(at(gap / 2.0 + 0.5), at(half)), 0.3),
        ],
    )
}
