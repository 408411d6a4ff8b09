//! Builds the per-pixel shrinkage map of a rainy scene step by step:
//! rain-only coding error, 2-means clustering, distance-ratio mapping,
//! horizontal-line protection, dilation.

use sparsederain::dict::DictKind;
use sparsederain::image::quantize;
use sparsederain::{
    build_error_map, corpus, distance_ratio_map, finalize_map, horizontal_line_mask, kmeans2,
    ksvd_train, sample_training_patches,
};

fn main() {
    let out_dir = std::path::Path::new("target/example-output");
    std::fs::create_dir_all(out_dir).unwrap();

    let m = 8;
    let rain_images = corpus::rain_corpus(3, 64, 64, 100);
    let patches = sample_training_patches(&rain_images, m, 1200, 0.5, true, 7).unwrap();
    let (rain_dict, _) = ksvd_train(&patches, 64, 3, 8, 7, DictKind::Rain, m).unwrap();

    let (scene, _) = corpus::rain_scene(64, 64, 1.2, 900);

    let e = build_error_map(&scene, &rain_dict, 3, true).unwrap();
    let centers = kmeans2(&e).unwrap();
    println!(
        "error clusters: rain center {:.4e}, non-rain center {:.4e}",
        centers.rain(),
        centers.other()
    );

    let raw = distance_ratio_map(&e, &centers).unwrap();
    let hmask = horizontal_line_mask(&scene, 0.10, 2.0);
    let map = finalize_map(&raw, &hmask, 1).unwrap();

    let rainy_frac = map.s.iter().filter(|&&v| v <= 0.25).count() as f64 / map.s.len() as f64;
    println!(
        "map range [{:.3}, {:.3}], {:.1}% of pixels below the rain threshold",
        map.s.iter().cloned().fold(f64::INFINITY, f64::min),
        map.s.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        100.0 * rainy_frac
    );

    for (name, values) in [("scene", scene.luma()), ("map", &map.s[..])] {
        let mut png = image::GrayImage::new(64, 64);
        for (i, px) in png.pixels_mut().enumerate() {
            px.0 = [quantize(values[i])];
        }
        let path = out_dir.join(format!("{name}.png"));
        png.save(&path).unwrap();
        println!("wrote {}", path.display());
    }
}
