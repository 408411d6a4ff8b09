//! Rain streak removal by shrinking sparse codes over jointly learned
//! rain/non-rain patch dictionaries.
//!
//! The pipeline: K-SVD learns one dictionary from masked rain patches and
//! one from clean patches. At inference time a per-pixel shrinkage map is
//! built from the rain-dictionary reconstruction error, every overlapping
//! patch is coded against the concatenated dictionary with error-bounded
//! OMP, rain coefficients (and non-rain coefficients whose atoms correlate
//! strongly with active rain atoms) are attenuated by the local map value,
//! and the shrunk reconstructions are patch-averaged back into the image.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --release --example train_dictionaries
//! cargo run --release --example derain_image
//! cargo run --release --example shrinkage_map
//! cargo run --release --example correlation_stats
//! cargo run --release --example synthetic_rain
//! cargo run --release --example quality_metrics
//! ```
//!
//! A thin `sparsederain` binary wraps the same functions for batch use.

pub mod config;
pub mod corpus;
pub mod derain;
pub mod dict;
pub mod error;
pub mod image;
pub mod metrics;
pub mod omp;
pub mod patch;
pub mod shrinkage;
pub mod synth;

pub use config::RunConfig;
pub use derain::{
    correlation_matrix, derain, derain_with_map, plain_reconstruction, shrink_codes,
    CorrelationMatrix, DerainConfig, EpsilonMode,
};
pub use dict::{
    ksvd_train, load_dictionary, normalize_atoms, save_dictionary, DictKind, Dictionary,
    DictionarySet,
};
pub use error::{Error, Result};
pub use image::{load_image, load_mask, save_image, Image, RainMask};
pub use metrics::{psnr, ssim};
pub use omp::{omp, reconstruct, split_code, OmpStop, SparseCode};
pub use patch::{
    accumulate, extract_patch, patch_average, sample_training_patches, Accumulator, PatchGrid,
    PatchMatrix,
};
pub use shrinkage::{
    adaptive_epsilon, build_error_map, build_shrinkage_map, distance_ratio_map,
    epsilon_from_mean_gradient, finalize_map, horizontal_line_mask, kmeans2,
    patch_shrinkage_value, ClusterCenters, ErrorMap, ShrinkageMap,
};
pub use synth::{extract_rain_overlay, synthesize_rain, RainOverlay};
