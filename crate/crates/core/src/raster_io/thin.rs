//! Zhang–Suen two-subiteration thinning.
//!
//! Deletion is parallel within each subiteration, as in the classic
//! algorithm. The one exception: when the candidates cover a whole
//! 8-connected component (a 2×2 block, for instance), the first candidate of
//! that component in scan order is kept, so components never vanish.

use crate::error::{Error, Result};
use crate::raster_io::Raster2D;

// P2..P9: N, NE, E, SE, S, SW, W, NW
const RING: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

struct Grid {
    w: usize,
    h: usize,
    on: Vec<bool>,
}

impl Grid {
    #[inline]
    fn at(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.on[y as usize * self.w + x as usize]
    }

    fn ring(&self, x: usize, y: usize) -> [bool; 8] {
        let mut r = [false; 8];
        for (k, (dx, dy)) in RING.iter().enumerate() {
            r[k] = self.at(x as i64 + dx, y as i64 + dy);
        }
        r
    }

    fn deletable(&self, x: usize, y: usize, first: bool) -> bool {
        let p = self.ring(x, y);
        let b = p.iter().filter(|&&v| v).count();
        if !(2..=6).contains(&b) {
            return false;
        }
        let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
        if a != 1 {
            return false;
        }
        let [p2, _, p4, _, p6, _, p8, _] = p;
        if first {
            !(p2 && p4 && p6) && !(p4 && p6 && p8)
        } else {
            !(p2 && p4 && p8) && !(p2 && p6 && p8)
        }
    }

    fn subiteration(&mut self, first: bool) -> bool {
        let mut candidates = Vec::new();
        for y in 0..self.h {
            for x in 0..self.w {
                if self.on[y * self.w + x] && self.deletable(x, y, first) {
                    candidates.push(y * self.w + x);
                }
            }
        }
        if candidates.is_empty() {
            return false;
        }
        let before = self.labels();
        for &i in &candidates {
            self.on[i] = false;
        }
        // a component fully covered by candidates keeps its first pixel
        let mut alive = vec![false; before.1];
        for (i, &l) in before.0.iter().enumerate() {
            if self.on[i] {
                alive[l as usize] = true;
            }
        }
        for &i in &candidates {
            let l = before.0[i] as usize;
            if !alive[l] {
                self.on[i] = true;
                alive[l] = true;
            }
        }
        true
    }

    /// 8-connected component label per pixel (`u32::MAX` for background).
    fn labels(&self) -> (Vec<u32>, usize) {
        let mut lab = vec![u32::MAX; self.w * self.h];
        let mut n = 0u32;
        let mut stack = Vec::new();
        for s in 0..self.w * self.h {
            if !self.on[s] || lab[s] != u32::MAX {
                continue;
            }
            lab[s] = n;
            stack.push(s);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.w) as i64, (i / self.w) as i64);
                for (dx, dy) in RING {
                    if self.at(x + dx, y + dy) {
                        let j = (y + dy) as usize * self.w + (x + dx) as usize;
                        if lab[j] == u32::MAX {
                            lab[j] = n;
                            stack.push(j);
                        }
                    }
                }
            }
            n += 1;
        }
        (lab, n as usize)
    }
}

/// Thins a binary mask to a one-pixel-wide skeleton.
///
/// The result is a subset of the input foreground with the same number of
/// 8-connected components, and `thin(thin(m)) == thin(m)`. Bar ends may
/// erode by up to two pixels.
pub fn thin(mask: &Raster2D) -> Result<Raster2D> {
    if !mask.is_binary() {
        return Err(Error::domain("thinning requires a binary {0,1} mask"));
    }
    let mut g = Grid {
        w: mask.width(),
        h: mask.height(),
        on: mask.values().iter().map(|&v| v == 1.0).collect(),
    };
    loop {
        let a = g.subiteration(true);
        let b = g.subiteration(false);
        if !a && !b {
            break;
        }
    }
    Raster2D::new(
        g.w,
        g.h,
        g.on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
    )
}

/// Number of 8-connected foreground components.
pub fn count_components(mask: &Raster2D) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if seen[start] || mask.values()[start] == 0.0 {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for (dx, dy) in RING {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !seen[j] && mask.values()[j] != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}
