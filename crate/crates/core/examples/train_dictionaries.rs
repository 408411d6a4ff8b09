//! Trains a rain and a non-rain dictionary on the built-in synthetic corpus
//! and saves both to target/example-output/.

use sparsederain::dict::DictKind;
use sparsederain::{corpus, ksvd_train, sample_training_patches, save_dictionary};

fn main() {
    let out_dir = std::path::Path::new("target/example-output");
    std::fs::create_dir_all(out_dir).unwrap();

    let m = 8;
    let k = 128;

    let rain_images = corpus::rain_corpus(6, 96, 96, 100);
    let rain_patches = sample_training_patches(&rain_images, m, 3000, 0.5, true, 7).unwrap();
    println!("training rain dictionary ({k} atoms, {} patches)...", rain_patches.data.ncols());
    let (rain, report) = ksvd_train(&rain_patches, k, 3, 20, 7, DictKind::Rain, m).unwrap();
    println!(
        "  mean sq error {:.4e} -> {:.4e} over {} sweeps",
        report.errors.first().unwrap(),
        report.errors.last().unwrap(),
        report.errors.len()
    );
    save_dictionary(&rain, &out_dir.join("rain.dict")).unwrap();

    let clean_images = corpus::nonrain_corpus(96, 96, 200);
    let clean_patches = sample_training_patches(&clean_images, m, 3000, 0.5, true, 8).unwrap();
    println!("training non-rain dictionary...");
    let (nonrain, report) = ksvd_train(&clean_patches, k, 3, 20, 8, DictKind::NonRain, m).unwrap();
    println!(
        "  mean sq error {:.4e} -> {:.4e} over {} sweeps",
        report.errors.first().unwrap(),
        report.errors.last().unwrap(),
        report.errors.len()
    );
    save_dictionary(&nonrain, &out_dir.join("nonrain.dict")).unwrap();

    println!("saved rain.dict and nonrain.dict to {}", out_dir.display());
}
