//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the optimized code paths it checks.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use refine_core::raster::BinaryMask;

/// SplitMix64, enough for reproducible test inputs.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }

    pub fn mask(&mut self, w: usize, h: usize, percent: u64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |_, _| self.chance(percent))
    }

    /// Union of a few random filled rectangles and disks; blob-like.
    pub fn blobby_mask(&mut self, w: usize, h: usize, shapes: usize) -> BinaryMask {
        let mut m = BinaryMask::new(w, h);
        for _ in 0..shapes {
            let cx = self.below(w as u64) as isize;
            let cy = self.below(h as u64) as isize;
            let r = 1 + self.below((w.min(h) / 3) as u64) as isize;
            let disk = self.chance(50);
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let (dx, dy) = (x - cx, y - cy);
                    let inside = if disk {
                        dx * dx + dy * dy <= r * r
                    } else {
                        dx.abs() <= r && dy.abs() <= r / 2 + 1
                    };
                    if inside {
                        m.set(x as usize, y as usize, true);
                    }
                }
            }
        }
        m
    }
}

fn sample(m: &BinaryMask, x: isize, y: isize) -> bool {
    x >= 0
        && y >= 0
        && (x as usize) < m.width()
        && (y as usize) < m.height()
        && m.get(x as usize, y as usize)
}

/// Offsets of the square / disk / cross of the given size, from the definitions.
pub fn se_offsets(shape: &str, size: isize) -> Vec<(isize, isize)> {
    let mut v = Vec::new();
    for dy in -size..=size {
        for dx in -size..=size {
            let ok = match shape {
                "square" => true,
                "disk" => dx * dx + dy * dy <= size * size,
                "cross" => dx.abs() + dy.abs() <= size,
                _ => unreachable!(),
            };
            if ok {
                v.push((dx, dy));
            }
        }
    }
    v
}

pub fn erode(m: &BinaryMask, offsets: &[(isize, isize)]) -> BinaryMask {
    let mut out = BinaryMask::new(m.width(), m.height());
    for y in 0..m.height() {
        for x in 0..m.width() {
            let mut all = true;
            for &(dx, dy) in offsets {
                if !sample(m, x as isize + dx, y as isize + dy) {
                    all = false;
                }
            }
            out.set(x, y, all);
        }
    }
    out
}

pub fn dilate(m: &BinaryMask, offsets: &[(isize, isize)]) -> BinaryMask {
    let mut out = BinaryMask::new(m.width(), m.height());
    for y in 0..m.height() {
        for x in 0..m.width() {
            let mut any = false;
            for &(dx, dy) in offsets {
                if sample(m, x as isize + dx, y as isize + dy) {
                    any = true;
                }
            }
            out.set(x, y, any);
        }
    }
    out
}

/// 8-connected components of `sel` via BFS, in raster order of first pixel.
/// Returns a label raster (0 = unselected).
pub fn bfs_components(w: usize, h: usize, sel: &[bool]) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; w * h];
    let mut next = 0;
    for start in 0..w * h {
        if !sel[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut q = VecDeque::from([start]);
        while let Some(i) = q.pop_front() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if sel[j] && labels[j] == 0 {
                        labels[j] = next;
                        q.push_back(j);
                    }
                }
            }
        }
    }
    (labels, next)
}

fn neighbors(i: usize, w: usize, h: usize) -> Vec<usize> {
    let (x, y) = ((i % w) as isize, (i / w) as isize);
    let mut v = Vec::new();
    for dy in -1..=1 {
        for dx in -1..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize {
                v.push(ny as usize * w + nx as usize);
            }
        }
    }
    v
}

/// Pixels no higher than any in-domain neighbor, grouped by BFS.
pub fn markers(w: usize, h: usize, grad: &[f32], domain: &[bool]) -> (Vec<u32>, u32) {
    let sel: Vec<bool> = (0..w * h)
        .map(|i| {
            domain[i]
                && neighbors(i, w, h)
                    .into_iter()
                    .filter(|&j| domain[j])
                    .all(|j| grad[j] >= grad[i])
        })
        .collect();
    bfs_components(w, h, &sel)
}

/// Textbook priority-flood: a pixel takes a label when it is popped, the
/// queue may hold duplicates, and the minimum is found by linear scan over
/// `(gradient, sequence)`.
pub fn naive_flood(w: usize, h: usize, grad: &[f32], domain: &[bool], seeds: &[u32]) -> Vec<u32> {
    struct Entry {
        g: f32,
        seq: u64,
        pixel: usize,
        label: u32,
    }
    let mut labels = vec![0u32; w * h];
    let mut open: Vec<Entry> = Vec::new();
    let mut seq = 0u64;
    for i in 0..w * h {
        if seeds[i] != 0 {
            open.push(Entry {
                g: grad[i],
                seq,
                pixel: i,
                label: seeds[i],
            });
            seq += 1;
        }
    }
    while !open.is_empty() {
        let mut best = 0;
        for k in 1..open.len() {
            let (a, b) = (&open[k], &open[best]);
            if a.g < b.g || (a.g == b.g && a.seq < b.seq) {
                best = k;
            }
        }
        let e = open.swap_remove(best);
        if labels[e.pixel] != 0 {
            continue;
        }
        labels[e.pixel] = e.label;
        for j in neighbors(e.pixel, w, h) {
            if domain[j] && labels[j] == 0 {
                open.push(Entry {
                    g: grad[j],
                    seq,
                    pixel: j,
                    label: e.label,
                });
                seq += 1;
            }
        }
    }
    labels
}

/// Literal evaluation of the acceptance rule: segment `i` is kept iff its
/// pixel set meets the true-foreground pixel set.
pub fn accepted_segments(labels: &[u32], w: usize, true_fg: &BinaryMask) -> BTreeSet<u32> {
    let t: HashSet<(usize, usize)> = true_fg.foreground().map(|p| (p.x, p.y)).collect();
    let ids: BTreeSet<u32> = labels.iter().copied().filter(|&l| l != 0).collect();
    ids.into_iter()
        .filter(|&id| {
            let seg: HashSet<(usize, usize)> = labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == id)
                .map(|(i, _)| (i % w, i / w))
                .collect();
            !seg.is_disjoint(&t)
        })
        .collect()
}
