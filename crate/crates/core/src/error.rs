use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("failed to write image {path}: {source}")]
    ImageWrite {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("unsupported image format for {path}: {detail}")]
    UnsupportedImage { path: PathBuf, detail: String },
    #[error("mask dimensions {mask_w}x{mask_h} do not match image {img_w}x{img_h}")]
    MaskDimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        img_w: usize,
        img_h: usize,
    },
    #[error("image dimensions {w}x{h} are smaller than patch side {m}")]
    ImageTooSmall { w: usize, h: usize, m: usize },
    #[error("patch index {index} out of range (N = {n})")]
    PatchIndexOutOfRange { index: usize, n: usize },
    #[error("found only {found} qualifying patch locations after {attempts} attempts, needed {requested}")]
    InsufficientPatches {
        requested: usize,
        found: usize,
        attempts: usize,
    },
    #[error("pixel ({row},{col}) has zero patch coverage; traversal incomplete")]
    ZeroCoverage { row: usize, col: usize },
    #[error("dictionary atom {index} is not unit norm (norm = {norm})")]
    NonUnitAtom { index: usize, norm: f64 },
    #[error("dictionary atom {index} is zero")]
    ZeroAtom { index: usize },
    #[error("sparse code index {index} exceeds dictionary width {width}")]
    CodeIndexOutOfRange { index: usize, width: usize },
    #[error("code width {width} is not twice the per-dictionary atom count {k}")]
    BadSplitWidth { width: usize, k: usize },
    #[error("cannot learn {k} atoms from {n} training patches")]
    NotEnoughTrainingData { k: usize, n: usize },
    #[error("training set is degenerate (all patches are zero)")]
    DegenerateTrainingData,
    #[error("dictionary file {path}: {detail}")]
    DictionaryFormat { path: PathBuf, detail: String },
    #[error("dictionaries are incompatible: {detail}")]
    DictionaryMismatch { detail: String },
    #[error("error map is constant; two-cluster split is undefined")]
    ConstantErrorMap,
    #[error("cluster centers coincide")]
    DegenerateCenters,
    #[error("grid dimensions differ: {detail}")]
    GridDimensionMismatch { detail: String },
    #[error("rain overlay patch at ({row},{col}) does not fit a {w}x{h} image")]
    OverlayOutOfBounds {
        row: usize,
        col: usize,
        w: usize,
        h: usize,
    },
    #[error("images are too small for an 11x11 window: {w}x{h}")]
    TooSmallForSsim { w: usize, h: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad config {path}: {source}")]
    Config {
        path: PathBuf,
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
