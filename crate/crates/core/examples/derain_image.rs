//! Synthesizes a rainy texture, removes the rain, and reports the quality
//! gain. Uses dictionaries from `train_dictionaries` when they exist,
//! otherwise trains a quick pair on the fly.

use std::path::Path;

use sparsederain::dict::DictKind;
use sparsederain::image::quantize;
use sparsederain::{
    corpus, derain, extract_rain_overlay, ksvd_train, load_dictionary, psnr,
    sample_training_patches, save_image, ssim, synthesize_rain, DerainConfig, DictionarySet,
};

fn dictionaries(out_dir: &Path) -> DictionarySet {
    let dn = out_dir.join("nonrain.dict");
    let dr = out_dir.join("rain.dict");
    if dn.exists() && dr.exists() {
        println!("loading dictionaries from {}", out_dir.display());
        return DictionarySet::new(
            load_dictionary(&dn).unwrap(),
            load_dictionary(&dr).unwrap(),
        )
        .unwrap();
    }
    println!("no saved dictionaries found, training a quick pair (run the train_dictionaries example for better ones)");
    let m = 8;
    let rain_images = corpus::rain_corpus(3, 64, 64, 100);
    let rain_patches = sample_training_patches(&rain_images, m, 1200, 0.5, true, 7).unwrap();
    let (rain, _) = ksvd_train(&rain_patches, 64, 3, 8, 7, DictKind::Rain, m).unwrap();
    let clean_images = corpus::nonrain_corpus(64, 64, 200);
    let clean_patches = sample_training_patches(&clean_images, m, 1200, 0.5, true, 8).unwrap();
    let (nonrain, _) = ksvd_train(&clean_patches, 64, 3, 8, 8, DictKind::NonRain, m).unwrap();
    DictionarySet::new(nonrain, rain).unwrap()
}

fn main() {
    let out_dir = Path::new("target/example-output");
    std::fs::create_dir_all(out_dir).unwrap();
    let dicts = dictionaries(out_dir);
    let m = dicts.nonrain.m;

    let clean = corpus::brick_texture(64, 64, 300);
    let (rain_src, mask) = corpus::rain_scene(64, 64, 1.2, 700);
    let overlay = extract_rain_overlay(&rain_src, &mask, m, 90, 0.5, 700).unwrap();
    let rainy = synthesize_rain(&clean, &overlay, false).unwrap();

    let cfg = DerainConfig {
        dilation_radius: 1, // production radius 2 over-dilates at this scale
        ..DerainConfig::default()
    };
    println!("deraining...");
    let (output, map) = derain(&rainy, &dicts, &cfg).unwrap();

    save_image(&clean, &out_dir.join("clean.png")).unwrap();
    save_image(&rainy, &out_dir.join("rainy.png")).unwrap();
    save_image(&output, &out_dir.join("derained.png")).unwrap();
    let mut map_png = image::GrayImage::new(map.width as u32, map.height as u32);
    for (i, px) in map_png.pixels_mut().enumerate() {
        px.0 = [quantize(map.s[i])];
    }
    map_png.save(out_dir.join("shrinkage_map.png")).unwrap();

    println!(
        "PSNR: {:.2} dB rainy -> {:.2} dB derained",
        psnr(&rainy, &clean).unwrap(),
        psnr(&output, &clean).unwrap()
    );
    println!(
        "SSIM: {:.4} rainy -> {:.4} derained",
        ssim(&rainy, &clean).unwrap(),
        ssim(&output, &clean).unwrap()
    );
    println!("images written to {}", out_dir.display());
}
