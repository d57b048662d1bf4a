//! Stereo matching as a truncated-linear grid MRF.
//!
//! One variable per left-image pixel, one label per disparity. Unaries are
//! window-averaged truncated colour differences against the right image;
//! 4-neighbour edges carry `w * min(|d - d'|, t)` with `w` picked from three
//! values by the colour difference of the two pixels.

use crate::error::{contract, Error, Result};
use crate::image::RgbImage;
use crate::mrf::{grid_edges, Edge, LabelSet, LabeledMrf, Pairwise};

#[derive(Clone, Debug, PartialEq)]
pub struct StereoParams {
    /// Number of disparity labels `|L|`; disparities are `0..max_disparity`.
    pub max_disparity: usize,
    pub window_radius: usize,
    /// Per-pixel matching costs are clipped at this value.
    pub cost_truncation: f64,
    /// Truncation `t` of the pairwise term, in label steps.
    pub smoothness_truncation: f64,
    /// `[w_high, w_mid, w_low]`, strictly decreasing.
    pub weights: [f64; 3],
    /// Colour-difference breakpoints (sum over channels) between the three
    /// weights: below the first is `w_high`, at or above the second `w_low`.
    pub breakpoints: [f64; 2],
}

impl Default for StereoParams {
    fn default() -> Self {
        StereoParams {
            max_disparity: 85,
            window_radius: 1,
            cost_truncation: 4.0,
            smoothness_truncation: 2.0,
            weights: [2.0, 1.0, 0.5],
            breakpoints: [8.0, 30.0],
        }
    }
}

impl StereoParams {
    pub fn validate(&self) -> Result<()> {
        let [hi, mid, lo] = self.weights;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.max_disparity == 0 {
            return bad("max disparity must be at least 1");
        }
        if !(lo > 0.0 && mid > lo && hi > mid && hi.is_finite()) {
            return bad("stereo weights must be positive, finite and strictly decreasing");
        }
        if !(self.breakpoints[0] <= self.breakpoints[1] && self.breakpoints[0] >= 0.0) {
            return bad("colour breakpoints must be non-negative and ordered");
        }
        if !(self.cost_truncation > 0.0 && self.cost_truncation.is_finite()) {
            return bad("cost truncation must be positive and finite");
        }
        if !(self.smoothness_truncation >= 0.0 && self.smoothness_truncation.is_finite()) {
            return bad("smoothness truncation must be finite and non-negative");
        }
        Ok(())
    }

    /// Unary value for disparities that look past the right image's edge.
    pub fn out_of_frame_penalty(&self) -> f64 {
        10.0 * self.cost_truncation
    }

    /// Pairwise weight for two pixel colours.
    pub fn weight_for(&self, a: [u8; 3], b: [u8; 3]) -> f64 {
        let diff = color_difference(a, b);
        if diff < self.breakpoints[0] {
            self.weights[0]
        } else if diff < self.breakpoints[1] {
            self.weights[1]
        } else {
            self.weights[2]
        }
    }
}

/// Sum over channels of absolute differences.
#[inline]
pub fn color_difference(a: [u8; 3], b: [u8; 3]) -> f64 {
    (0..3).map(|c| a[c].abs_diff(b[c]) as f64).sum()
}

#[derive(Clone, Debug)]
pub struct StereoProblem {
    pub left: RgbImage,
    pub right: RgbImage,
    pub params: StereoParams,
}

impl StereoProblem {
    pub fn new(left: RgbImage, right: RgbImage, params: StereoParams) -> Result<Self> {
        contract!(
            left.width() == right.width() && left.height() == right.height(),
            "left image is {}x{}, right image is {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height()
        );
        params.validate()?;
        Ok(StereoProblem { left, right, params })
    }

    pub fn width(&self) -> usize {
        self.left.width()
    }

    pub fn height(&self) -> usize {
        self.left.height()
    }
}

/// Per-pixel cost `min(mean_c |I_l - I_r|, truncation)` for every disparity,
/// `NaN` where the right pixel would lie outside the image.
fn pixel_costs(p: &StereoProblem) -> Vec<f64> {
    let (w, h, nl) = (p.width(), p.height(), p.params.max_disparity);
    let mut cost = vec![f64::NAN; w * h * nl];
    for y in 0..h {
        for x in 0..w {
            let l = p.left.pixel(x, y);
            for d in 0..nl.min(x + 1) {
                let r = p.right.pixel(x - d, y);
                cost[(y * w + x) * nl + d] = (color_difference(l, r) / 3.0).min(p.params.cost_truncation);
            }
        }
    }
    cost
}

/// Row-major unary table, `|L|` entries per pixel.
///
/// Window cells whose own match falls outside the right image are left out
/// of the average; a pixel whose own match falls outside gets the
/// out-of-frame penalty.
pub fn stereo_unaries(p: &StereoProblem) -> Vec<f64> {
    let (w, h, nl) = (p.width(), p.height(), p.params.max_disparity);
    let r = p.params.window_radius;
    let cost = pixel_costs(p);
    let penalty = p.params.out_of_frame_penalty();
    let mut unary = vec![0.0; w * h * nl];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
            for d in 0..nl {
                let out = &mut unary[(y * w + x) * nl + d];
                if d > x {
                    *out = penalty;
                    continue;
                }
                let (mut sum, mut count) = (0.0, 0usize);
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        let c = cost[(yy * w + xx) * nl + d];
                        if !c.is_nan() {
                            sum += c;
                            count += 1;
                        }
                    }
                }
                *out = sum / count as f64;
            }
        }
    }
    unary
}

pub fn build_stereo_mrf(p: &StereoProblem) -> Result<LabeledMrf> {
    let (w, h) = (p.width(), p.height());
    let labels = LabelSet::new(p.params.max_disparity)?;
    let t = p.params.smoothness_truncation;
    let edges = grid_edges(w, h)
        .into_iter()
        .map(|(a, b)| {
            let wt = p.params.weight_for(p.left.pixel(a % w, a / w), p.left.pixel(b % w, b / w));
            Edge::new(a, b, Pairwise::truncated_linear(wt, t))
        })
        .collect();
    LabeledMrf::new(labels, w * h, stereo_unaries(p), edges)?.with_grid_dims(w, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize) -> RgbImage {
        let mut img = RgbImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                let v = ((x * 37 + y * 91) % 255) as u8;
                img.set_pixel(x, y, [v, v.wrapping_mul(3), 255 - v]);
            }
        }
        img
    }

    #[test]
    fn identical_images_match_at_zero() {
        let img = textured(8, 6);
        let p = StereoProblem::new(img.clone(), img, StereoParams { max_disparity: 4, ..Default::default() }).unwrap();
        let m = build_stereo_mrf(&p).unwrap();
        for i in 0..m.num_vars() {
            assert_eq!(m.unary(i)[0], 0.0);
        }
    }

    #[test]
    fn uniform_images_use_high_weight() {
        let img = RgbImage::filled(5, 4, [40, 80, 120]);
        let params = StereoParams { max_disparity: 3, ..Default::default() };
        let m = build_stereo_mrf(&StereoProblem::new(img.clone(), img, params).unwrap()).unwrap();
        for e in m.edges() {
            assert_eq!(e.pairwise, Pairwise::truncated_linear(2.0, 2.0));
        }
    }

    #[test]
    fn out_of_frame_disparities_are_penalised() {
        let img = textured(6, 2);
        let params = StereoParams { max_disparity: 4, ..Default::default() };
        let m = build_stereo_mrf(&StereoProblem::new(img.clone(), img, params.clone()).unwrap()).unwrap();
        assert_eq!(m.unary(0)[1], params.out_of_frame_penalty());
        assert_eq!(m.unary(2)[3], params.out_of_frame_penalty());
        assert!(m.unary(3)[3] < params.out_of_frame_penalty());
    }

    #[test]
    fn weight_breakpoints() {
        let p = StereoParams::default();
        assert_eq!(p.weight_for([0, 0, 0], [7, 0, 0]), 2.0);
        assert_eq!(p.weight_for([0, 0, 0], [4, 4, 0]), 1.0);
        assert_eq!(p.weight_for([0, 0, 0], [10, 10, 10]), 0.5);
    }

    #[test]
    fn rejects_mismatched_images() {
        let err = StereoProblem::new(textured(4, 4), textured(5, 4), StereoParams::default()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        let bad = StereoParams { weights: [1.0, 2.0, 0.5], ..Default::default() };
        assert!(StereoProblem::new(textured(4, 4), textured(4, 4), bad).is_err());
    }
}
