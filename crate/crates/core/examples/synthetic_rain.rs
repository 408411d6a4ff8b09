//! Builds synthetic rainy/clean evaluation pairs: rain patches are lifted
//! from a procedural rain scene and pasted onto clean textures, optionally
//! rotated 90 degrees.

use sparsederain::{corpus, extract_rain_overlay, save_image, synthesize_rain};

fn main() {
    let out_dir = std::path::Path::new("target/example-output");
    std::fs::create_dir_all(out_dir).unwrap();

    let (rain_src, mask) = corpus::rain_scene(64, 64, 1.2, 700);
    save_image(&rain_src, &out_dir.join("rain_source.png")).unwrap();
    let overlay = extract_rain_overlay(&rain_src, &mask, 8, 90, 0.5, 700).unwrap();
    println!("extracted {} rain patches from the source scene", overlay.patches.len());

    for (name, clean) in corpus::clean_textures(64, 64, 300) {
        save_image(&clean, &out_dir.join(format!("{name}_clean.png"))).unwrap();
        for rotate in [false, true] {
            let rainy = synthesize_rain(&clean, &overlay, rotate).unwrap();
            let suffix = if rotate { "_rain_rot90" } else { "_rain" };
            let path = out_dir.join(format!("{name}{suffix}.png"));
            save_image(&rainy, &path).unwrap();
            println!("wrote {}", path.display());
        }
    }
}
