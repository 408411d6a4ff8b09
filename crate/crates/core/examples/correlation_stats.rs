//! Prints the cross-dictionary correlation profile: for every non-rain atom,
//! its strongest correlation with any rain atom, plus how many atoms clear
//! the joint-shrinkage threshold.

use sparsederain::dict::DictKind;
use sparsederain::{corpus, correlation_matrix, ksvd_train, sample_training_patches};

fn main() {
    let m = 8;
    let rain_images = corpus::rain_corpus(3, 64, 64, 100);
    let rain_patches = sample_training_patches(&rain_images, m, 1200, 0.5, true, 7).unwrap();
    let (rain, _) = ksvd_train(&rain_patches, 64, 3, 8, 7, DictKind::Rain, m).unwrap();

    let clean_images = corpus::nonrain_corpus(64, 64, 200);
    let clean_patches = sample_training_patches(&clean_images, m, 1200, 0.5, true, 8).unwrap();
    let (nonrain, _) = ksvd_train(&clean_patches, 64, 3, 8, 8, DictKind::NonRain, m).unwrap();

    let corr = correlation_matrix(&nonrain, &rain).unwrap();

    let mut hist = [0usize; 10];
    for k in 0..corr.c.nrows() {
        let best = (0..corr.c.ncols())
            .map(|l| corr.get(k, l))
            .fold(f64::NEG_INFINITY, f64::max);
        hist[((best.clamp(0.0, 1.0) * 10.0) as usize).min(9)] += 1;
    }

    println!("max rain correlation per non-rain atom:");
    let peak = *hist.iter().max().unwrap();
    for (i, &count) in hist.iter().enumerate() {
        let bar = "#".repeat(count * 40 / peak.max(1));
        println!("  [{:.1},{:.1}) {count:3} {bar}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
    }
    println!(
        "{} of {} non-rain atoms correlate >= 0.8 with some rain atom and are \
         candidates for joint shrinkage",
        corr.atoms_above(0.8),
        corr.c.nrows()
    );
}
