//! Cross-module checks: independently coded metric references and
//! whole-pipeline decompositions into the public building blocks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparsederain::corpus;
use sparsederain::derain::EpsilonMode;
use sparsederain::dict::DictKind;
use sparsederain::patch::remove_mean;
use sparsederain::{
    accumulate, build_error_map, build_shrinkage_map, correlation_matrix, derain, derain_with_map,
    extract_patch, ksvd_train, omp, patch_average, patch_shrinkage_value, reconstruct,
    sample_training_patches, shrink_codes, ssim, Accumulator, DerainConfig, Dictionary,
    DictionarySet, Image, OmpStop, PatchGrid,
};

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_luma(w, h, (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect())
}

/// Straight-from-the-definition mean SSIM: per-window loops with centered
/// moments, sharing no code with the library implementation.
fn reference_ssim(a: &Image, b: &Image) -> f64 {
    let (w, h) = (a.width(), a.height());
    let (win, sigma, k1, k2) = (11usize, 1.5f64, 0.01f64, 0.03f64);
    let half = win / 2;
    let mut weights = vec![0.0; win * win];
    let mut wsum = 0.0;
    for r in 0..win {
        for c in 0..win {
            let dr = r as f64 - half as f64;
            let dc = c as f64 - half as f64;
            let g = (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp();
            weights[r * win + c] = g;
            wsum += g;
        }
    }
    for g in &mut weights {
        *g /= wsum;
    }
    let (c1, c2) = (k1 * k1, k2 * k2);
    let mut total = 0.0;
    let mut count = 0usize;
    for r0 in half..h - half {
        for c0 in half..w - half {
            let px = |img: &Image, dr: usize, dc: usize| {
                img.luma()[(r0 + dr - half) * w + (c0 + dc - half)]
            };
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for r in 0..win {
                for c in 0..win {
                    mu_a += weights[r * win + c] * px(a, r, c);
                    mu_b += weights[r * win + c] * px(b, r, c);
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for r in 0..win {
                for c in 0..win {
                    let g = weights[r * win + c];
                    let da = px(a, r, c) - mu_a;
                    let db = px(b, r, c) - mu_b;
                    var_a += g * da * da;
                    var_b += g * db * db;
                    cov += g * da * db;
                }
            }
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn ssim_matches_independent_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..200 {
        let w = rng.gen_range(11..=20);
        let h = rng.gen_range(11..=20);
        let a = random_image(&mut rng, w, h);
        let b = random_image(&mut rng, w, h);
        let got = ssim(&a, &b).unwrap();
        let want = reference_ssim(&a, &b);
        assert!(
            (got - want).abs() <= 1e-9,
            "case {case}: {got} vs {want}"
        );
    }
}

fn small_dicts(m: usize, k: usize) -> DictionarySet {
    let rain_images = corpus::rain_corpus(2, 64, 64, 40);
    let rain_patches = sample_training_patches(&rain_images, m, 600, 0.5, true, 41).unwrap();
    let (rain, _) = ksvd_train(&rain_patches, k, 3, 5, 41, DictKind::Rain, m).unwrap();
    let clean_images = corpus::nonrain_corpus(64, 64, 42);
    let clean_patches = sample_training_patches(&clean_images, m, 600, 0.5, true, 43).unwrap();
    let (nonrain, _) = ksvd_train(&clean_patches, k, 3, 5, 43, DictKind::NonRain, m).unwrap();
    DictionarySet::new(nonrain, rain).unwrap()
}

/// Manual rain-only coding chain on an image small enough (<= 256 patches)
/// that the library's chunked accumulation reduces to one sequential pass.
fn manual_error_map(img: &Image, dict: &Dictionary, l: usize) -> Vec<f64> {
    let grid = PatchGrid::for_image(img, dict.m, 1).unwrap();
    assert!(grid.len() <= 256, "fixture must fit one accumulation chunk");
    let mut acc = Accumulator::new(img.width(), img.height());
    for i in 0..grid.len() {
        let mut y = extract_patch(img, &grid, i).unwrap();
        let mean = remove_mean(&mut y);
        let code = omp(&y, &dict.atoms, OmpStop::Sparsity { max_atoms: l }).unwrap();
        let mut rec = reconstruct(&dict.atoms, &code).unwrap();
        rec.add_scalar_mut(mean);
        accumulate(&mut acc, &grid, i, &rec).unwrap();
    }
    let avg = patch_average(&acc).unwrap();
    img.luma()
        .iter()
        .zip(avg.luma())
        .map(|(x, r)| (r - x) * (r - x))
        .collect()
}

#[test]
fn error_map_equals_manual_chain() {
    let dicts = small_dicts(8, 32);
    let (img, _) = corpus::rain_scene(20, 20, 1.2, 44);
    let e = build_error_map(&img, &dicts.rain, 3, true).unwrap();
    let manual = manual_error_map(&img, &dicts.rain, 3);
    assert_eq!(e.e.len(), manual.len());
    for (a, b) in e.e.iter().zip(&manual) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn derain_equals_manual_patch_chain() {
    let dicts = small_dicts(8, 32);
    let (img, _) = corpus::rain_scene(20, 20, 1.2, 45);
    let cfg = DerainConfig {
        epsilon: EpsilonMode::Fixed(6.0),
        dilation_radius: 1,
        ..DerainConfig::default()
    };
    let (out, map) = derain(&img, &dicts, &cfg).unwrap();

    // map stage decomposes
    let map2 = build_shrinkage_map(&img, &dicts.rain, cfg.l, true, 1).unwrap();
    assert_eq!(map.s, map2.s);
    let again = derain_with_map(&img, &dicts, &map2, &cfg).unwrap();
    for (a, b) in out.luma().iter().zip(again.luma()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    // coding stage decomposes into the public per-patch operations
    let grid = PatchGrid::for_image(&img, 8, 1).unwrap();
    assert!(grid.len() <= 256, "fixture must fit one accumulation chunk");
    let corr = correlation_matrix(&dicts.nonrain, &dicts.rain).unwrap();
    let d = dicts.concat();
    let stop = OmpStop::ErrorBounded {
        eps: 6.0 / 255.0,
        max_atoms: cfg.max_atoms_for(8),
    };
    let mut acc = Accumulator::new(img.width(), img.height());
    for i in 0..grid.len() {
        let mut y = extract_patch(&img, &grid, i).unwrap();
        let mean = remove_mean(&mut y);
        let code = omp(&y, &d, stop).unwrap();
        let s_i = patch_shrinkage_value(&map, &grid, i).unwrap();
        let shrunk = shrink_codes(&code, s_i, &corr, &cfg);
        let mut rec = reconstruct(&d, &shrunk).unwrap();
        rec.add_scalar_mut(mean);
        accumulate(&mut acc, &grid, i, &rec).unwrap();
    }
    let mut manual = img.with_luma(patch_average(&acc).unwrap().luma().to_vec());
    manual.clamp_luma();
    for (a, b) in out.luma().iter().zip(manual.luma()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
