//! PSNR/SSIM behaviour on controlled distortions of a clean texture.

use sparsederain::{corpus, extract_rain_overlay, psnr, ssim, synthesize_rain, Image};

fn box_blur3(img: &Image) -> Image {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut sum = 0.0;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let rr = (r as i64 + dr).clamp(0, h as i64 - 1) as usize;
                    let cc = (c as i64 + dc).clamp(0, w as i64 - 1) as usize;
                    sum += img.luma()[rr * w + cc];
                }
            }
            out[r * w + c] = sum / 9.0;
        }
    }
    Image::from_luma(w, h, out)
}

fn main() {
    let clean = corpus::brick_texture(64, 64, 300);

    let (rain_src, mask) = corpus::rain_scene(64, 64, 1.2, 700);
    let overlay = extract_rain_overlay(&rain_src, &mask, 8, 90, 0.5, 700).unwrap();
    let rainy = synthesize_rain(&clean, &overlay, false).unwrap();

    let blurred = box_blur3(&clean);
    let shifted = clean.with_luma(
        clean
            .luma()
            .iter()
            .map(|v| (v + 16.0 / 255.0).min(1.0))
            .collect(),
    );

    println!("distortion        PSNR (dB)   SSIM");
    for (name, img) in [
        ("identity", clean.clone()),
        ("rain streaks", rainy),
        ("3x3 box blur", blurred),
        ("+16/255 offset", shifted),
    ] {
        println!(
            "{name:16}  {:9.2}   {:.4}",
            psnr(&img, &clean).unwrap(),
            ssim(&img, &clean).unwrap()
        );
    }
    println!();
    println!("note how the uniform offset costs PSNR but barely touches SSIM,");
    println!("while blur does the opposite - the harness reports both for that reason");
}
