//! Full-reference quality metrics on [0,1] luma.

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR cap reported for (near-)identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

fn check_dims(a: &Image, b: &Image) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::GridDimensionMismatch {
            detail: format!(
                "{}x{} vs {}x{}",
                a.width(),
                a.height(),
                b.width(),
                b.height()
            ),
        });
    }
    Ok(())
}

/// 10 log10(1 / MSE) with peak 1.0, capped at 99 dB.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.luma().len() as f64;
    let mse: f64 = a
        .luma()
        .iter()
        .zip(b.luma())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Normalized 11x11 Gaussian window, sigma 1.5.
pub fn ssim_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for r in -half..=half {
        for c in -half..=half {
            let d2 = (r * r + c * c) as f64;
            w.push((-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        }
    }
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

// separable filtering would also work, but the window is tiny; a plane-wise
// weighted moment pass keeps the valid-region bookkeeping simple
fn local_moments(a: &[f64], b: &[f64], w: usize, h: usize, win: &[f64]) -> Vec<[f64; 5]> {
    let half = SSIM_WINDOW / 2;
    let mut out = Vec::new();
    for r0 in half..h - half {
        for c0 in half..w - half {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            let mut wi = 0;
            for dr in 0..SSIM_WINDOW {
                let row = (r0 + dr - half) * w;
                for dc in 0..SSIM_WINDOW {
                    let g = win[wi];
                    wi += 1;
                    let x = a[row + c0 + dc - half];
                    let y = b[row + c0 + dc - half];
                    mu_a += g * x;
                    mu_b += g * y;
                    aa += g * x * x;
                    bb += g * y * y;
                    ab += g * x * y;
                }
            }
            out.push([mu_a, mu_b, aa, bb, ab]);
        }
    }
    out
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1.0, evaluated over fully interior windows.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    check_dims(a, b)?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(Error::TooSmallForSsim {
            w: a.width(),
            h: a.height(),
        });
    }
    let c1 = (SSIM_K1 * 1.0) * (SSIM_K1 * 1.0);
    let c2 = (SSIM_K2 * 1.0) * (SSIM_K2 * 1.0);
    let win = ssim_window();
    let moments = local_moments(a.luma(), b.luma(), a.width(), a.height(), &win);
    let mut total = 0.0;
    for [mu_a, mu_b, aa, bb, ab] in &moments {
        let var_a = aa - mu_a * mu_a;
        let var_b = bb - mu_b * mu_b;
        let cov = ab - mu_a * mu_b;
        let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
        let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
        total += num / den;
    }
    Ok(total / moments.len() as f64)
}
