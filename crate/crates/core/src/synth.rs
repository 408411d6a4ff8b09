//! Synthetic rain composition: sampled streak deltas pasted onto clean images.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{Image, RainMask};

/// Additive luminance deltas at fixed positions, each m x m (row-major).
#[derive(Debug, Clone)]
pub struct RainOverlay {
    pub m: usize,
    pub patches: Vec<OverlayPatch>,
}

#[derive(Debug, Clone)]
pub struct OverlayPatch {
    pub row: usize,
    pub col: usize,
    pub delta: Vec<f64>,
}

/// Box-blurred copy of the luma plane, radius `r`, clamped borders.
fn box_blur(img: &Image, r: usize) -> Vec<f64> {
    let w = img.width();
    let h = img.height();
    let ri = r as isize;
    let mut out = vec![0.0; w * h];
    for row in 0..h as isize {
        for col in 0..w as isize {
            let mut sum = 0.0;
            let mut n = 0usize;
            for dr in -ri..=ri {
                for dc in -ri..=ri {
                    let rr = row + dr;
                    let cc = col + dc;
                    if rr >= 0 && rr < h as isize && cc >= 0 && cc < w as isize {
                        sum += img.get(rr as usize, cc as usize);
                        n += 1;
                    }
                }
            }
            out[row as usize * w + col as usize] = sum / n as f64;
        }
    }
    out
}

fn mask_coverage(mask: &RainMask, r0: usize, c0: usize, m: usize) -> f64 {
    let mut hits = 0usize;
    for r in r0..r0 + m {
        for c in c0..c0 + m {
            if mask.get(r, c) {
                hits += 1;
            }
        }
    }
    hits as f64 / (m * m) as f64
}

/// Samples `count` rain patches (masked coverage >= `rain_coverage`) and
/// isolates the streak luminance by subtracting the local low-pass
/// background (box blur, radius m/2).
pub fn extract_rain_overlay(
    rain_img: &Image,
    mask: &RainMask,
    m: usize,
    count: usize,
    rain_coverage: f64,
    seed: u64,
) -> Result<RainOverlay> {
    if rain_img.width() < m || rain_img.height() < m {
        return Err(Error::ImageTooSmall {
            w: rain_img.width(),
            h: rain_img.height(),
            m,
        });
    }
    let background = box_blur(rain_img, m / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut patches = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(200);
    let mut attempts = 0usize;
    while patches.len() < count {
        if attempts >= max_attempts {
            return Err(Error::InsufficientPatches {
                requested: count,
                found: patches.len(),
                attempts,
            });
        }
        attempts += 1;
        let r0 = rng.gen_range(0..=rain_img.height() - m);
        let c0 = rng.gen_range(0..=rain_img.width() - m);
        if mask_coverage(mask, r0, c0, m) < rain_coverage {
            continue;
        }
        let mut delta = Vec::with_capacity(m * m);
        for r in 0..m {
            for c in 0..m {
                let j = (r0 + r) * rain_img.width() + (c0 + c);
                delta.push(rain_img.luma()[j] - background[j]);
            }
        }
        patches.push(OverlayPatch {
            row: r0,
            col: c0,
            delta,
        });
    }
    Ok(RainOverlay { m, patches })
}

fn rotate90(delta: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            // clockwise: (r, c) -> (c, m-1-r)
            out[c * m + (m - 1 - r)] = delta[r * m + c];
        }
    }
    out
}

/// Adds the overlay deltas onto the clean luma (rotating each delta 90
/// degrees first when flagged) and clamps the result to [0,1].
pub fn synthesize_rain(clean: &Image, overlay: &RainOverlay, rotate: bool) -> Result<Image> {
    let m = overlay.m;
    let mut out = clean.clone();
    for patch in &overlay.patches {
        if patch.row + m > clean.height() || patch.col + m > clean.width() {
            return Err(Error::OverlayOutOfBounds {
                row: patch.row,
                col: patch.col,
                w: clean.width(),
                h: clean.height(),
            });
        }
        let delta = if rotate {
            rotate90(&patch.delta, m)
        } else {
            patch.delta.clone()
        };
        for r in 0..m {
            for c in 0..m {
                let v = out.get(patch.row + r, patch.col + c) + delta[r * m + c];
                out.set(patch.row + r, patch.col + c, v);
            }
        }
    }
    out.clamp_luma();
    Ok(out)
}
