//! Shrinkage-based rain removal: cross-dictionary correlation matrix, rain
//! and correlated non-rain code shrinkage, and the full per-patch pipeline.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dict::{Dictionary, DictionarySet};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::omp::{omp, reconstruct, OmpStop, SparseCode};
use crate::patch::{accumulate, extract_patch, patch_average, remove_mean, Accumulator, PatchGrid};
use crate::shrinkage::{
    adaptive_epsilon, build_shrinkage_map, code_and_average, patch_shrinkage_value, ShrinkageMap,
    PATCH_CHUNK,
};

/// Normalized inner products between non-rain atoms (rows) and rain atoms
/// (columns).
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub c: DMatrix<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, nonrain_atom: usize, rain_atom: usize) -> f64 {
        self.c[(nonrain_atom, rain_atom)]
    }

    /// Number of non-rain atoms with at least one correlation >= `th`.
    pub fn atoms_above(&self, th: f64) -> usize {
        (0..self.c.nrows())
            .filter(|&k| (0..self.c.ncols()).any(|l| self.c[(k, l)] >= th))
            .count()
    }
}

/// C(k,l) = <d_n_k, d_r_l> / (|d_n_k| |d_r_l|).
pub fn correlation_matrix(dn: &Dictionary, dr: &Dictionary) -> Result<CorrelationMatrix> {
    for (j, col) in dn.atoms.column_iter().enumerate() {
        if col.norm() == 0.0 {
            return Err(Error::ZeroAtom { index: j });
        }
    }
    for (j, col) in dr.atoms.column_iter().enumerate() {
        if col.norm() == 0.0 {
            return Err(Error::ZeroAtom { index: j });
        }
    }
    let mut c = dn.atoms.tr_mul(&dr.atoms);
    for k in 0..c.nrows() {
        let nk = dn.atoms.column(k).norm();
        for l in 0..c.ncols() {
            c[(k, l)] /= nk * dr.atoms.column(l).norm();
        }
    }
    Ok(CorrelationMatrix { c })
}

/// How the bounded representation error of the joint coding step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonMode {
    /// Derived per image from the mean rain-region gradient.
    Adaptive,
    /// Fixed value in 8-bit units (scaled by 1/255 internally).
    Fixed(f64),
}

/// Tunables of the rain-removal pipeline. Defaults follow the published
/// parameter set: L = 3, TH_s = 0.25, TH_c = 0.8, adaptive epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct DerainConfig {
    /// Rain-only coding sparsity used while building the shrinkage map.
    pub l: usize,
    pub epsilon: EpsilonMode,
    /// Shrinkage values at or below this mark a patch as rain.
    pub th_s: f64,
    /// Cross-dictionary correlation threshold for joint shrinkage.
    pub th_c: f64,
    /// Hard atom cap for error-bounded coding; `None` means m^2 / 4.
    pub max_atoms: Option<usize>,
    pub mean_removal: bool,
    pub dilation_radius: usize,
    pub stride: usize,
    /// Worker threads for the patch loops; `None` uses the ambient pool.
    pub threads: Option<usize>,
}

impl Default for DerainConfig {
    fn default() -> Self {
        Self {
            l: 3,
            epsilon: EpsilonMode::Adaptive,
            th_s: 0.25,
            th_c: 0.8,
            max_atoms: None,
            mean_removal: true,
            dilation_radius: 2,
            stride: 1,
            threads: None,
        }
    }
}

impl DerainConfig {
    pub fn max_atoms_for(&self, m: usize) -> usize {
        self.max_atoms.unwrap_or((m * m / 4).max(1))
    }
}

/// Applies the shrinkage rules to a code over `[D^n D^r]`:
/// every rain coefficient is scaled by `s_i`; when `s_i <= TH_s`, non-rain
/// coefficients whose atom correlates at `>= TH_c` with any rain atom that
/// was active before the rain shrinkage are scaled by `s_i` as well.
pub fn shrink_codes(
    code: &SparseCode,
    s_i: f64,
    corr: &CorrelationMatrix,
    cfg: &DerainConfig,
) -> SparseCode {
    let k = corr.c.nrows();
    debug_assert_eq!(code.dict_width, 2 * k);
    let active_rain: Vec<usize> = code
        .support
        .iter()
        .zip(&code.coeffs)
        .filter(|(&j, &c)| j >= k && c != 0.0)
        .map(|(&j, _)| j - k)
        .collect();
    let mut out = code.clone();
    for (idx, &j) in out.support.iter().enumerate() {
        if j >= k {
            out.coeffs[idx] *= s_i;
        } else if s_i <= cfg.th_s
            && active_rain.iter().any(|&l| corr.get(j, l) >= cfg.th_c)
        {
            out.coeffs[idx] *= s_i;
        }
    }
    out
}

fn run_in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(job),
        _ => job(),
    }
}

/// Algorithm body given an already-built shrinkage map: error-bounded joint
/// coding of every patch, shrinkage, reconstruction, patch averaging.
pub fn derain_with_map(
    img: &Image,
    dicts: &DictionarySet,
    map: &ShrinkageMap,
    cfg: &DerainConfig,
) -> Result<Image> {
    let m = dicts.nonrain.m;
    let grid = PatchGrid::for_image(img, m, cfg.stride)?;
    let corr = correlation_matrix(&dicts.nonrain, &dicts.rain)?;
    let eps = match cfg.epsilon {
        EpsilonMode::Adaptive => adaptive_epsilon(img, map, cfg.th_s),
        EpsilonMode::Fixed(eps8) => eps8 / 255.0,
    };
    let stop = OmpStop::ErrorBounded {
        eps,
        max_atoms: cfg.max_atoms_for(m),
    };
    let d = dicts.concat();

    let n = grid.len();
    let chunks: Vec<usize> = (0..n.div_ceil(PATCH_CHUNK)).collect();
    let partials: Vec<Result<Accumulator>> = run_in_pool(cfg.threads, || {
        chunks
            .par_iter()
            .map(|&chunk| {
                let mut acc = Accumulator::new(img.width(), img.height());
                let lo = chunk * PATCH_CHUNK;
                let hi = (lo + PATCH_CHUNK).min(n);
                for i in lo..hi {
                    let mut y = extract_patch(img, &grid, i)?;
                    let mean = if cfg.mean_removal {
                        remove_mean(&mut y)
                    } else {
                        0.0
                    };
                    let code = omp(&y, &d, stop)?;
                    let s_i = patch_shrinkage_value(map, &grid, i)?;
                    let shrunk = shrink_codes(&code, s_i, &corr, cfg);
                    let mut rec = reconstruct(&d, &shrunk)?;
                    if cfg.mean_removal {
                        rec.add_scalar_mut(mean);
                    }
                    accumulate(&mut acc, &grid, i, &rec)?;
                }
                Ok(acc)
            })
            .collect()
    });

    let mut total = Accumulator::new(img.width(), img.height());
    for partial in partials {
        total.merge(&partial?);
    }
    let averaged = patch_average(&total)?;
    let mut out = img.with_luma(averaged.luma().to_vec());
    out.clamp_luma();
    Ok(out)
}

/// Error-bounded sparse-coding reconstruction with no shrinkage at all —
/// the limit of the pipeline under an all-ones map. With adaptive epsilon
/// the fallback floor applies, since an all-ones map has no rain region.
pub fn plain_reconstruction(
    img: &Image,
    dicts: &DictionarySet,
    cfg: &DerainConfig,
) -> Result<Image> {
    let m = dicts.nonrain.m;
    let grid = PatchGrid::for_image(img, m, cfg.stride)?;
    let eps = match cfg.epsilon {
        EpsilonMode::Adaptive => {
            let ones = ShrinkageMap::constant(img.width(), img.height(), 1.0);
            adaptive_epsilon(img, &ones, cfg.th_s)
        }
        EpsilonMode::Fixed(eps8) => eps8 / 255.0,
    };
    let stop = OmpStop::ErrorBounded {
        eps,
        max_atoms: cfg.max_atoms_for(m),
    };
    let d = dicts.concat();
    let averaged = run_in_pool(cfg.threads, || {
        code_and_average(img, &d, &grid, stop, cfg.mean_removal)
    })?;
    let mut out = img.with_luma(averaged.luma().to_vec());
    out.clamp_luma();
    Ok(out)
}

/// Full pipeline: build the shrinkage map from the rain dictionary, then run
/// the shrinkage coding pass. Returns the derained image and the map.
pub fn derain(
    img: &Image,
    dicts: &DictionarySet,
    cfg: &DerainConfig,
) -> Result<(Image, ShrinkageMap)> {
    let map = run_in_pool(cfg.threads, || {
        build_shrinkage_map(
            img,
            &dicts.rain,
            cfg.l,
            cfg.mean_removal,
            cfg.dilation_radius,
        )
    })?;
    let out = derain_with_map(img, dicts, &map, cfg)?;
    Ok((out, map))
}
