//! Deterministic synthetic instances with known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::RgbImage;
use crate::mrf::{grid_edges, Edge, LabelSet, LabeledMrf, Pairwise};

/// A rectified stereo pair over layered fronto-parallel objects in front of
/// a slanted background.
#[derive(Clone, Debug)]
pub struct StereoScene {
    pub left: RgbImage,
    pub right: RgbImage,
    /// Left-view disparity per pixel, row-major.
    pub truth: Vec<usize>,
    pub num_labels: usize,
}

#[derive(Clone, Debug)]
pub struct SegmentationScene {
    pub image: RgbImage,
    /// Seed label per pixel, `None` where unseeded.
    pub seeds: Vec<Option<usize>>,
    pub truth: Vec<usize>,
    pub num_labels: usize,
}

fn hash3(a: u64, b: u64, c: u64) -> u64 {
    let mut h = a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F) ^ c.wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^= h >> 31;
    h = h.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    h ^ (h >> 29)
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    Disc { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => (x0..x1).contains(&x) && (y0..y1).contains(&y),
            Shape::Disc { cx, cy, r } => {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                dx * dx + dy * dy <= r * r
            }
        }
    }
}

/// Planar disparity `d0 + gx * x + gy * y`, rounded.
#[derive(Clone, Copy, Debug)]
struct Plane {
    d0: f64,
    gx: f64,
    gy: f64,
}

impl Plane {
    fn flat(d: f64) -> Self {
        Plane { d0: d, gx: 0.0, gy: 0.0 }
    }

    fn at(&self, x: usize, y: usize) -> usize {
        (self.d0 + self.gx * x as f64 + self.gy * y as f64).round().max(0.0) as usize
    }
}

#[derive(Clone, Copy, Debug)]
struct Layer {
    shape: Shape,
    plane: Plane,
    /// Texture key and block size.
    key: u64,
    block: usize,
    /// Colour spread around the layer's base colour.
    contrast: u8,
    base: [u8; 3],
}

impl Layer {
    fn texture(&self, u: usize, v: usize) -> [u8; 3] {
        let h = hash3(self.key, (u / self.block) as u64, (v / self.block) as u64);
        let mut out = [0u8; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let jitter = ((h >> (16 * c)) & 0xFF) as i32 * self.contrast as i32 / 255 - self.contrast as i32 / 2;
            *o = (self.base[c] as i32 + jitter).clamp(0, 255) as u8;
        }
        out
    }
}

fn add_noise(img: &mut RgbImage, sigma: f64, rng: &mut ChaCha8Rng) {
    let normal = Normal::new(0.0, sigma).expect("positive noise sigma");
    let (w, h) = (img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            let p = img.pixel(x, y);
            let q = p.map(|v| (v as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8);
            img.set_pixel(x, y, q);
        }
    }
}

/// Layered stereo scene covering most of the disparity range.
///
/// A back wall slants from about `|L|/16` to `|L|/4` left to right and a
/// floor over the bottom 30% rises from `|L|/4` to `|L|/2`. In front sit a
/// ramp from 55% to 75% of `|L|`, a weakly textured disc at 45%, a box at
/// 80% and a small slanted card from 85% to 95%.
pub fn stereo_scene(width: usize, height: usize, num_labels: usize, seed: u64) -> StereoScene {
    assert!(width >= 8 && height >= 8 && num_labels >= 8, "scene too small");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nl = num_labels as f64;
    let (wf, hf) = (width as f64, height as f64);
    let whole = Shape::Rect { x0: 0, y0: 0, x1: usize::MAX, y1: usize::MAX };
    let wall = Plane { d0: nl / 16.0, gx: (nl / 4.0 - nl / 16.0) / (wf - 1.0), gy: 0.0 };
    let floor_y0 = (0.7 * hf) as usize;
    let floor = Plane {
        d0: nl / 4.0 - (nl / 4.0) * floor_y0 as f64 / (hf - 1.0 - floor_y0 as f64),
        gx: 0.0,
        gy: (nl / 4.0) / (hf - 1.0 - floor_y0 as f64),
    };
    let mut layers = vec![
        Layer { shape: whole, plane: wall, key: rng.random(), block: 3, contrast: 200, base: [120, 110, 100] },
        Layer {
            shape: Shape::Rect { x0: 0, y0: floor_y0, x1: usize::MAX, y1: usize::MAX },
            plane: floor,
            key: rng.random(),
            block: 2,
            contrast: 160,
            base: [150, 130, 90],
        },
    ];

    let place = |rng: &mut ChaCha8Rng, w_frac: f64, h_frac: f64| {
        let s = wf.min(hf);
        let cx = wf * (0.25 + 0.5 * rng.random::<f64>());
        let cy = hf * (0.15 + 0.45 * rng.random::<f64>());
        (cx, cy, s * w_frac, s * h_frac)
    };
    let rect = |cx: f64, cy: f64, rx: f64, ry: f64, min_x: f64| Shape::Rect {
        x0: (cx - rx).max(min_x) as usize,
        y0: (cy - ry).max(0.0) as usize,
        x1: ((cx + rx) as usize).min(width),
        y1: ((cy + ry) as usize).min(height),
    };

    let (cx, cy, rx, ry) = place(&mut rng, 0.2, 0.12);
    let ramp = Plane { d0: 0.55 * nl - 0.2 * nl * (cx - rx) / (2.0 * rx), gx: 0.2 * nl / (2.0 * rx), gy: 0.0 };
    layers.push(Layer {
        shape: rect(cx, cy, rx, ry, 0.75 * nl + 1.0),
        plane: ramp,
        key: rng.random(),
        block: 2,
        contrast: 220,
        base: [200, 60, 60],
    });
    // Weak texture: smoothness has to fill the disc in.
    let (cx, cy, r, _) = place(&mut rng, 0.15, 0.0);
    layers.push(Layer {
        shape: Shape::Disc { cx, cy, r },
        plane: Plane::flat(0.45 * nl),
        key: rng.random(),
        block: 4,
        contrast: 40,
        base: [60, 170, 80],
    });
    let (cx, cy, rx, ry) = place(&mut rng, 0.14, 0.11);
    layers.push(Layer {
        shape: rect(cx, cy, rx, ry, 0.8 * nl + 1.0),
        plane: Plane::flat(0.8 * nl),
        key: rng.random(),
        block: 4,
        contrast: 220,
        base: [70, 90, 210],
    });
    let (cx, cy, rx, ry) = place(&mut rng, 0.08, 0.14);
    let card = Plane { d0: 0.85 * nl - 0.1 * nl * (cy - ry) / (2.0 * ry), gx: 0.0, gy: 0.1 * nl / (2.0 * ry) };
    layers.push(Layer {
        shape: rect(cx, cy, rx, ry, 0.95 * nl + 1.0),
        plane: card,
        key: rng.random(),
        block: 2,
        contrast: 200,
        base: [220, 200, 80],
    });

    let mut left = RgbImage::filled(width, height, [0, 0, 0]);
    let mut right = RgbImage::filled(width, height, [0, 0, 0]);
    let mut truth = vec![0usize; width * height];
    let back = layers[0];
    for y in 0..height {
        for x in 0..width {
            let d = back.plane.at(x, y);
            left.set_pixel(x, y, back.texture(x, y));
            truth[y * width + x] = d;
            right.set_pixel(x, y, back.texture(x + d, y));
        }
    }
    for layer in &layers[1..] {
        for y in 0..height {
            for x in 0..width {
                if !layer.shape.contains(x, y) {
                    continue;
                }
                let d = layer.plane.at(x, y).min(num_labels - 1);
                let c = layer.texture(x, y);
                left.set_pixel(x, y, c);
                truth[y * width + x] = d;
                if x >= d {
                    right.set_pixel(x - d, y, c);
                }
            }
        }
    }
    add_noise(&mut left, 2.0, &mut rng);
    add_noise(&mut right, 2.0, &mut rng);
    StereoScene { left, right, truth, num_labels }
}

/// The bundled stereo pairs: `64` (24 labels) and `96` (32 labels).
pub fn bundled_stereo(size: usize) -> Option<StereoScene> {
    match size {
        64 => Some(stereo_scene(64, 64, 24, 64)),
        96 => Some(stereo_scene(96, 96, 32, 96)),
        _ => None,
    }
}

/// A textured square shifted by `shift` pixels between the views over a
/// textured background at disparity zero.
pub fn shifted_square(size: usize, shift: usize, seed: u64) -> StereoScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tex = |key: u64, x: usize, y: usize| -> [u8; 3] {
        let h = hash3(key, x as u64, y as u64);
        [(h & 0xFF) as u8, ((h >> 8) & 0xFF) as u8, ((h >> 16) & 0xFF) as u8]
    };
    let (kb, kf): (u64, u64) = (rng.random(), rng.random());
    let (lo, hi) = (size / 4 + shift, 3 * size / 4 + shift.min(size / 4));
    let mut left = RgbImage::filled(size, size, [0, 0, 0]);
    let mut right = RgbImage::filled(size, size, [0, 0, 0]);
    let mut truth = vec![0; size * size];
    for y in 0..size {
        for x in 0..size {
            left.set_pixel(x, y, tex(kb, x, y));
            right.set_pixel(x, y, tex(kb, x, y));
        }
    }
    for y in size / 4..3 * size / 4 {
        for x in lo..hi.min(size) {
            let c = tex(kf, x, y);
            left.set_pixel(x, y, c);
            right.set_pixel(x - shift, y, c);
            truth[y * size + x] = shift;
        }
    }
    StereoScene { left, right, truth, num_labels: 2 * shift + 2 }
}

/// Three-segment scene: background (label 0), a square with a thin
/// horizontal spike of width `spike_width` (label 1), and a disc (label 2).
/// Seeds are small blobs well inside each segment, never on the spike.
pub fn spike_scene(size: usize, spike_width: usize, seed: u64) -> SegmentationScene {
    assert!(size >= 24, "spike scene needs at least 24x24 pixels");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let square = Shape::Rect {
        x0: size / 8,
        y0: size / 8 + size / 10,
        x1: size / 8 + size * 3 / 10,
        y1: size / 8 + size / 10 + size * 3 / 10,
    };
    let Shape::Rect { x1: sq_x1, y0: sq_y0, y1: sq_y1, x0: sq_x0 } = square else { unreachable!() };
    let mid = (sq_y0 + sq_y1) / 2;
    let spike = Shape::Rect {
        x0: sq_x1,
        y0: mid - spike_width / 2,
        x1: (sq_x1 + size * 9 / 20).min(size - 2),
        y1: mid - spike_width / 2 + spike_width.max(1),
    };
    let disc = Shape::Disc { cx: s * 0.7, cy: s * 0.72, r: s * 0.14 };

    let colors = [[70, 130, 70], [205, 190, 165], [60, 70, 175]];
    let mut image = RgbImage::filled(size, size, colors[0]);
    let mut truth = vec![0; size * size];
    for y in 0..size {
        for x in 0..size {
            let l = if square.contains(x, y) || spike.contains(x, y) {
                1
            } else if disc.contains(x, y) {
                2
            } else {
                0
            };
            truth[y * size + x] = l;
            image.set_pixel(x, y, colors[l]);
        }
    }
    add_noise(&mut image, 20.0, &mut rng);

    let mut seeds = vec![None; size * size];
    let mut blob = |cx: usize, cy: usize, r: usize, l: usize| {
        for y in cy.saturating_sub(r)..=(cy + r).min(size - 1) {
            for x in cx.saturating_sub(r)..=(cx + r).min(size - 1) {
                seeds[y * size + x] = Some(l);
            }
        }
    };
    let r = (size / 24).max(1);
    blob(size - 1 - 2 * r, 1 + r, r, 0);
    blob(1 + r, size - 2 - r, r, 0);
    blob((sq_x0 + sq_x1) / 2, mid, r, 1);
    blob((s * 0.7) as usize, (s * 0.72) as usize, r, 2);
    SegmentationScene { image, seeds, truth, num_labels: 3 }
}

/// Two-label probe: a square with a spike of width `spike_width` on a
/// plain background. Seeds sit in the square's centre and along the image
/// border.
pub fn spike_probe(size: usize, spike_width: usize, seed: u64) -> SegmentationScene {
    assert!(size >= 10, "probe needs at least 10x10 pixels");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sq = (size / 6, size / 4, size / 6 + size / 3, size / 4 + size / 3);
    let mid = (sq.1 + sq.3) / 2;
    let spike_y0 = mid.saturating_sub(spike_width / 2);
    let colors = [[90, 150, 90], [200, 180, 150]];
    let mut image = RgbImage::filled(size, size, colors[0]);
    let mut truth = vec![0; size * size];
    for y in 0..size {
        for x in 0..size {
            let in_square = (sq.0..sq.2).contains(&x) && (sq.1..sq.3).contains(&y);
            let in_spike = (sq.2..size - 1).contains(&x) && (spike_y0..spike_y0 + spike_width).contains(&y);
            if in_square || in_spike {
                truth[y * size + x] = 1;
                image.set_pixel(x, y, colors[1]);
            }
        }
    }
    add_noise(&mut image, 6.0, &mut rng);
    let mut seeds = vec![None; size * size];
    for y in 0..size {
        for x in 0..size {
            let border = x == 0 || y == 0 || y == size - 1;
            if border && truth[y * size + x] == 0 {
                seeds[y * size + x] = Some(0);
            }
        }
    }
    let (cx, cy) = ((sq.0 + sq.2) / 2, mid);
    for y in cy - 1..=cy + 1 {
        for x in cx - 1..=cx + 1 {
            seeds[y * size + x] = Some(1);
        }
    }
    SegmentationScene { image, seeds, truth, num_labels: 2 }
}

/// The bundled segmentation images.
pub fn bundled_segmentation(name: &str) -> Option<SegmentationScene> {
    match name {
        "spike" => Some(spike_scene(96, 2, 96)),
        "spike-thin" => Some(spike_scene(64, 1, 64)),
        _ => None,
    }
}

/// Edge potentials drawn by [`random_grid_mrf`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RandomPairwise {
    Potts,
    /// Truncation 2.
    TruncatedLinear,
    /// Arbitrary non-negative tables with a zero diagonal; not metric in
    /// general.
    Dense,
}

/// Random grid MRF. Unaries and weights are multiples of 0.5 so that
/// repeated values, and with them non-trivial color-passing partitions,
/// are common.
pub fn random_grid_mrf(width: usize, height: usize, num_labels: usize, kind: RandomPairwise, seed: u64) -> LabeledMrf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let unaries = (0..n * num_labels).map(|_| 0.5 * rng.random_range(0..8) as f64).collect();
    let edges = grid_edges(width, height)
        .into_iter()
        .map(|(a, b)| {
            let pw = match kind {
                RandomPairwise::Potts => Pairwise::potts(0.5 * rng.random_range(1..4) as f64),
                RandomPairwise::TruncatedLinear => Pairwise::truncated_linear(0.5 * rng.random_range(1..4) as f64, 2.0),
                RandomPairwise::Dense => Pairwise::dense(
                    (0..num_labels * num_labels)
                        .map(|k| if k / num_labels == k % num_labels { 0.0 } else { 0.5 * rng.random_range(0..5) as f64 })
                        .collect(),
                ),
            };
            Edge::new(a, b, pw)
        })
        .collect();
    LabeledMrf::new(LabelSet::new(num_labels).expect("at least one label"), n, unaries, edges)
        .and_then(|m| m.with_grid_dims(width, height))
        .expect("generated model is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stereo_scene_is_deterministic_and_in_range() {
        let a = stereo_scene(32, 24, 16, 5);
        let b = stereo_scene(32, 24, 16, 5);
        assert_eq!(a.left, b.left);
        assert_eq!(a.right, b.right);
        assert!(a.truth.iter().all(|&d| d < 16));
        assert_ne!(stereo_scene(32, 24, 16, 6).left, a.left);
    }

    #[test]
    fn shifted_square_truth() {
        let s = shifted_square(16, 3, 1);
        assert_eq!(s.truth.iter().filter(|&&d| d == 3).count(), 8 * 8);
        // Foreground pixels reappear `shift` columns to the left.
        let (x, y) = (8, 8);
        assert_eq!(s.left.pixel(x, y), s.right.pixel(x - 3, y));
    }

    #[test]
    fn spike_scene_seeds_match_truth() {
        for w in 1..4 {
            let s = spike_scene(48, w, 9);
            for (i, seed) in s.seeds.iter().enumerate() {
                if let Some(l) = seed {
                    assert_eq!(*l, s.truth[i]);
                }
            }
            for l in 0..3 {
                assert!(s.seeds.contains(&Some(l)));
            }
        }
        let p = spike_probe(12, 1, 3);
        assert!(p.seeds.contains(&Some(1)));
        assert!(p.seeds.contains(&Some(0)));
    }
}
