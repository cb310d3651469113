#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use linestat::cooccurrence::{InterestPoint, InterestPointSet};
use linestat::phantom::{render_lines, segment_mask, Segment};
use linestat::raster_io::Raster2D;
use linestat::{KernelVolume, RotationMode};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Brute-force ordered-pair enumeration, written independently of the library.
pub fn brute_force(pts: &[(i64, i64, usize, u32)], n: usize, d: i64, mode: RotationMode) -> BTreeMap<(usize, i64, i64), u64> {
    let mut out = BTreeMap::new();
    for (i, p) in pts.iter().enumerate() {
        for (j, q) in pts.iter().enumerate() {
            if i == j || p.3 != q.3 {
                continue;
            }
            let (dx, dy) = (p.0 - q.0, p.1 - q.1);
            if dx * dx + dy * dy > d * d {
                continue;
            }
            let mut diff = p.2 as i64 - q.2 as i64;
            while diff >= n as i64 / 2 {
                diff -= n as i64;
            }
            while diff < -(n as i64) / 2 {
                diff += n as i64;
            }
            let angle = match mode {
                RotationMode::Group => -PI / 2.0 + q.2 as f64 * PI / n as f64,
                RotationMode::Literal => diff as f64 * PI / n as f64,
            };
            let (c, s) = (angle.cos(), angle.sin());
            let rx = c * dx as f64 + s * dy as f64;
            let ry = -s * dx as f64 + c * dy as f64;
            let cell = ((diff + n as i64 / 2) as usize, rx.round() as i64, ry.round() as i64);
            *out.entry(cell).or_insert(0) += 1;
        }
    }
    out
}

pub fn random_points(rng: &mut ChaCha8Rng, count: usize, size: i64, n: usize, parts: u32) -> Vec<(i64, i64, usize, u32)> {
    let mut cells: Vec<(i64, i64)> = (0..size).flat_map(|y| (0..size).map(move |x| (x, y))).collect();
    cells.shuffle(rng);
    cells[..count]
        .iter()
        .map(|&(x, y)| (x, y, rng.gen_range(0..n), rng.gen_range(0..parts)))
        .collect()
}

pub fn to_set(pts: &[(i64, i64, usize, u32)], n: usize) -> InterestPointSet {
    InterestPointSet::new(
        pts.iter()
            .map(|&(x, y, b, p)| InterestPoint::new(x as f64, y as f64, b).with_part(p))
            .collect(),
        n,
    )
    .unwrap()
}

pub fn to_map(k: &KernelVolume) -> BTreeMap<(usize, i64, i64), u64> {
    let d = k.d() as i64;
    let mut m = BTreeMap::new();
    for s in 0..k.n_theta() {
        for y in -d..=d {
            for x in -d..=d {
                let v = k.get(s, x, y);
                if v != 0.0 {
                    m.insert((s, x, y), v as u64);
                }
            }
        }
    }
    m
}

/// Image and 3-px mask of random circular arcs, rendered as polylines.
pub fn arc_scene(rng: &mut ChaCha8Rng, size: usize, arcs: usize) -> (Raster2D, Raster2D) {
    let mut segs = Vec::new();
    for _ in 0..arcs {
        let r: f64 = rng.gen_range(25.0..200.0);
        let (cx, cy) = (rng.gen_range(0.0..size as f64), rng.gen_range(0.0..size as f64));
        let t0: f64 = rng.gen_range(0.0..2.0 * PI);
        let span = (120.0 / r).min(3.0);
        let at = |i: usize| {
            let a = t0 + span * i as f64 / 40.0;
            (cx + r * a.cos(), cy + r * a.sin())
        };
        segs.extend((0..40).map(|i| Segment::new(at(i), at(i + 1))));
    }
    let parts: Vec<(Segment, f64)> = segs.iter().map(|s| (*s, 0.3)).collect();
    (
        render_lines(size, size, &parts, 0.9, 1.2),
        segment_mask(size, size, &segs, 1.5),
    )
}
