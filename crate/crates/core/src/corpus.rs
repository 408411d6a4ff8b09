//! Procedurally generated stand-in corpus: oriented-streak rain scenes with
//! masks, plus brick-, straw-, and line-drawing-style clean textures.
//!
//! Real rain photographs are not redistributable, so the training and
//! evaluation harness runs on these seeded synthetic images instead.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::image::{Image, RainMask};

fn clamp_px(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Stamps an anti-aliased additive streak into `delta`.
fn draw_streak(
    delta: &mut [f64],
    w: usize,
    h: usize,
    start: (f64, f64),
    angle: f64,
    length: f64,
    intensity: f64,
    thickness: f64,
) {
    let (dy, dx) = (angle.cos(), angle.sin());
    let steps = (length * 2.0) as usize;
    for t in 0..=steps {
        let s = t as f64 / 2.0;
        let y = start.0 + s * dy;
        let x = start.1 + s * dx;
        let r0 = (y - 2.0).floor().max(0.0) as usize;
        let r1 = ((y + 2.0).ceil() as usize).min(h.saturating_sub(1));
        let c0 = (x - 2.0).floor().max(0.0) as usize;
        let c1 = ((x + 2.0).ceil() as usize).min(w.saturating_sub(1));
        for r in r0..=r1.min(h - 1) {
            for c in c0..=c1 {
                let d2 = (r as f64 - y).powi(2) + (c as f64 - x).powi(2);
                let g = intensity * (-d2 / (2.0 * thickness * thickness)).exp();
                let j = r * w + c;
                // streaks occlude rather than sum; keep the brightest hit
                if g > delta[j] {
                    delta[j] = g;
                }
            }
        }
    }
}

/// A rain scene: streaks over a flat mid-gray background, with the exact
/// streak support as its mask. `density` scales the streak count.
pub fn rain_scene(w: usize, h: usize, density: f64, seed: u64) -> (Image, RainMask) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta = vec![0.0; w * h];
    let count = ((w * h) as f64 / 180.0 * density).max(4.0) as usize;
    for _ in 0..count {
        let start = (
            rng.gen_range(-5.0..h as f64),
            rng.gen_range(-5.0..w as f64),
        );
        // steep streaks, up to ~30 degrees off vertical
        let angle = rng.gen_range(-0.5..0.5);
        let length = rng.gen_range(8.0..18.0);
        let intensity = rng.gen_range(0.18..0.42);
        let thickness = rng.gen_range(0.55..0.85);
        draw_streak(&mut delta, w, h, start, angle, length, intensity, thickness);
    }
    let bg = 0.38;
    let luma: Vec<f64> = delta.iter().map(|&d| clamp_px(bg + d)).collect();
    let flags: Vec<bool> = delta.iter().map(|&d| d > 0.03).collect();
    (Image::from_luma(w, h, luma), RainMask::new(w, h, flags))
}

/// Pure streak deltas over a zero background, used as a rain source for the
/// synthetic-pair composer.
pub fn rain_overlay_source(w: usize, h: usize, density: f64, seed: u64) -> (Image, RainMask) {
    rain_scene(w, h, density, seed)
}

/// Brick-like texture: staggered courses separated by dark mortar lines.
pub fn brick_texture(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let course = 10usize;
    let brick_w = 18usize;
    let mut luma = vec![0.0; w * h];
    for r in 0..h {
        let row_course = r / course;
        let offset = if row_course % 2 == 0 { 0 } else { brick_w / 2 };
        for c in 0..w {
            let in_mortar_row = r % course == 0;
            let in_mortar_col = (c + offset) % brick_w == 0;
            let base = if in_mortar_row || in_mortar_col {
                0.25
            } else {
                0.55 + 0.08 * ((row_course * 7 + (c + offset) / brick_w * 13) % 5) as f64 / 5.0
            };
            luma[r * w + c] = clamp_px(base + rng.gen_range(-0.02..0.02));
        }
    }
    Image::from_luma(w, h, luma)
}

/// Straw-like texture: many thin diagonal strands. The slant keeps strand
/// directions away from near-vertical rain streaks in either orientation.
pub fn straw_texture(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut luma = vec![0.35; w * h];
    let strands = (w * h) / 60;
    for _ in 0..strands {
        let r0 = rng.gen_range(0.0..h as f64);
        let c0 = rng.gen_range(-10.0..w as f64);
        let angle: f64 = rng.gen_range(0.6..0.95); // radians off horizontal
        let len = rng.gen_range(10.0..26.0);
        let bright = rng.gen_range(-0.18..0.3);
        let steps = (len * 2.0) as usize;
        for t in 0..=steps {
            let s = t as f64 / 2.0;
            let r = r0 + s * angle.sin();
            let c = c0 + s * angle.cos();
            if r >= 0.0 && (r as usize) < h && c >= 0.0 && (c as usize) < w {
                let j = r as usize * w + c as usize;
                luma[j] = clamp_px(luma[j] + bright * 0.5);
            }
        }
    }
    Image::from_luma(w, h, luma)
}

/// Line-drawing texture: dark strokes and a circle on a light ground.
pub fn line_drawing_texture(w: usize, h: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut luma = vec![0.92; w * h];
    let stroke = |luma: &mut Vec<f64>, r0: f64, c0: f64, dr: f64, dc: f64, len: f64| {
        let steps = (len * 2.0) as usize;
        for t in 0..=steps {
            let s = t as f64 / 2.0;
            let r = r0 + s * dr;
            let c = c0 + s * dc;
            if r >= 0.0 && (r as usize) < h && c >= 0.0 && (c as usize) < w {
                luma[r as usize * w + c as usize] = 0.08;
            }
        }
    };
    for _ in 0..6 {
        let r = rng.gen_range(2.0..h as f64 - 2.0);
        stroke(&mut luma, r, 0.0, 0.0, 1.0, w as f64);
    }
    for _ in 0..4 {
        let c = rng.gen_range(2.0..w as f64 - 2.0);
        stroke(&mut luma, 0.0, c, 1.0, 0.0, h as f64);
    }
    // circle
    let cr = h as f64 / 2.0;
    let cc = w as f64 / 2.0;
    let rad = (w.min(h) as f64) / 3.5;
    for t in 0..720 {
        let a = t as f64 * std::f64::consts::PI / 360.0;
        let r = cr + rad * a.sin();
        let c = cc + rad * a.cos();
        if r >= 0.0 && (r as usize) < h && c >= 0.0 && (c as usize) < w {
            luma[r as usize * w + c as usize] = 0.08;
        }
    }
    Image::from_luma(w, h, luma)
}

/// The three bundled clean textures.
pub fn clean_textures(w: usize, h: usize, seed: u64) -> Vec<(String, Image)> {
    vec![
        ("brick".to_string(), brick_texture(w, h, seed)),
        ("straw".to_string(), straw_texture(w, h, seed.wrapping_add(1))),
        (
            "lines".to_string(),
            line_drawing_texture(w, h, seed.wrapping_add(2)),
        ),
    ]
}

/// Rain training corpus: several masked streak scenes.
pub fn rain_corpus(
    images: usize,
    w: usize,
    h: usize,
    seed: u64,
) -> Vec<(Image, Option<RainMask>)> {
    (0..images)
        .map(|i| {
            let (img, mask) = rain_scene(w, h, 1.0, seed.wrapping_add(i as u64));
            (img, Some(mask))
        })
        .collect()
}

/// Non-rain training corpus: unmasked clean textures.
pub fn nonrain_corpus(w: usize, h: usize, seed: u64) -> Vec<(Image, Option<RainMask>)> {
    clean_textures(w, h, seed)
        .into_iter()
        .map(|(_, img)| (img, None))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rain_scene_has_masked_streaks() {
        let (img, mask) = rain_scene(64, 64, 1.0, 0);
        let rain_pixels = mask.flags().iter().filter(|&&f| f).count();
        assert!(rain_pixels > 100, "got {rain_pixels} streak pixels");
        assert!(rain_pixels < 64 * 64 / 2);
        // streak pixels are brighter than the background
        for (j, &f) in mask.flags().iter().enumerate() {
            if f {
                assert!(img.luma()[j] > 0.38);
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = brick_texture(32, 32, 5);
        let b = brick_texture(32, 32, 5);
        assert_eq!(a.luma(), b.luma());
        let (ra, ma) = rain_scene(32, 32, 1.0, 5);
        let (rb, mb) = rain_scene(32, 32, 1.0, 5);
        assert_eq!(ra.luma(), rb.luma());
        assert_eq!(ma.flags(), mb.flags());
    }

    #[test]
    fn textures_stay_in_range() {
        for (_, img) in clean_textures(48, 40, 3) {
            assert!(img.luma().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
