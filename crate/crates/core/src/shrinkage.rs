//! Per-pixel shrinkage map: rain-dictionary error map, 2-means split,
//! distance-ratio mapping, horizontal-line protection, and gray dilation.

use rayon::prelude::*;

use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::omp::{omp, reconstruct, OmpStop};
use crate::patch::{accumulate, extract_patch, patch_average, remove_mean, Accumulator, PatchGrid};

/// Per-pixel squared reconstruction difference.
#[derive(Debug, Clone)]
pub struct ErrorMap {
    pub width: usize,
    pub height: usize,
    pub e: Vec<f64>,
}

/// The two scalar cluster centers of the error map; the smaller one marks
/// rain regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCenters {
    pub c1: f64,
    pub c2: f64,
}

impl ClusterCenters {
    pub fn rain(&self) -> f64 {
        self.c1.min(self.c2)
    }

    pub fn other(&self) -> f64 {
        self.c1.max(self.c2)
    }
}

/// Per-pixel shrinkage weights in [0,1]; small means rain.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageMap {
    pub width: usize,
    pub height: usize,
    pub s: Vec<f64>,
}

impl ShrinkageMap {
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            s: vec![value; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.s[row * self.width + col]
    }

    /// 8-bit visualization of the map (x255).
    pub fn to_image(&self) -> Image {
        Image::from_luma(self.width, self.height, self.s.clone())
    }
}

/// Prewitt gradient pair; `gx` responds to vertical edges, `gy` to
/// horizontal ones.
#[derive(Debug, Clone)]
pub struct EdgeResponse {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

// patches processed per parallel work item; fixed so accumulation order is
// independent of the worker count
pub(crate) const PATCH_CHUNK: usize = 256;

/// Codes every stride-1 patch against the rain dictionary alone at sparsity
/// `l`, patch-averages the reconstructions, and squares the difference.
pub fn build_error_map(
    img: &Image,
    rain_dict: &Dictionary,
    l: usize,
    mean_removal: bool,
) -> Result<ErrorMap> {
    let grid = PatchGrid::for_image(img, rain_dict.m, 1)?;
    let recon = code_and_average(img, &rain_dict.atoms, &grid, OmpStop::Sparsity { max_atoms: l }, mean_removal)?;
    let e = img
        .luma()
        .iter()
        .zip(recon.luma())
        .map(|(x, r)| (r - x) * (r - x))
        .collect();
    Ok(ErrorMap {
        width: img.width(),
        height: img.height(),
        e,
    })
}

/// Shared patch-coding loop: code every patch of `img` against `dict`,
/// reconstruct, and patch-average. Chunked so parallel runs accumulate in a
/// schedule-independent order.
pub(crate) fn code_and_average(
    img: &Image,
    dict: &nalgebra::DMatrix<f64>,
    grid: &PatchGrid,
    stop: OmpStop,
    mean_removal: bool,
) -> Result<Image> {
    let n = grid.len();
    let chunk_ids: Vec<usize> = (0..n.div_ceil(PATCH_CHUNK)).collect();
    let partials: Vec<Result<Accumulator>> = chunk_ids
        .par_iter()
        .map(|&chunk| {
            let mut acc = Accumulator::new(img.width(), img.height());
            let lo = chunk * PATCH_CHUNK;
            let hi = (lo + PATCH_CHUNK).min(n);
            for i in lo..hi {
                let mut y = extract_patch(img, grid, i)?;
                let mean = if mean_removal { remove_mean(&mut y) } else { 0.0 };
                let code = omp(&y, dict, stop)?;
                let mut rec = reconstruct(dict, &code)?;
                if mean_removal {
                    rec.add_scalar_mut(mean);
                }
                accumulate(&mut acc, grid, i, &rec)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::new(img.width(), img.height());
    for partial in partials {
        total.merge(&partial?);
    }
    patch_average(&total)
}

/// 1-D Lloyd clustering with deterministic min/max initialization.
pub fn kmeans2(e: &ErrorMap) -> Result<ClusterCenters> {
    let min = e.e.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = e.e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::ConstantErrorMap);
    }
    let mut c1 = min;
    let mut c2 = max;
    let mut assign: Vec<bool> = vec![false; e.e.len()];
    for _ in 0..1000 {
        let mut changed = false;
        let (mut s1, mut n1, mut s2, mut n2) = (0.0, 0usize, 0.0, 0usize);
        for (j, &v) in e.e.iter().enumerate() {
            let to_second = (v - c2).abs() < (v - c1).abs();
            if to_second != assign[j] {
                assign[j] = to_second;
                changed = true;
            }
            if to_second {
                s2 += v;
                n2 += 1;
            } else {
                s1 += v;
                n1 += 1;
            }
        }
        if n1 > 0 {
            c1 = s1 / n1 as f64;
        }
        if n2 > 0 {
            c2 = s2 / n2 as f64;
        }
        if !changed {
            break;
        }
    }
    Ok(ClusterCenters { c1, c2 })
}

/// Eq-style distance-ratio mapping: s = d(e, c_rain) / (d(e, c1) + d(e, c2)).
pub fn distance_ratio_map(e: &ErrorMap, centers: &ClusterCenters) -> Result<ShrinkageMap> {
    if centers.c1 == centers.c2 {
        return Err(Error::DegenerateCenters);
    }
    let rain = centers.rain();
    let s = e
        .e
        .iter()
        .map(|&v| {
            let d1 = (v - centers.c1).abs();
            let d2 = (v - centers.c2).abs();
            (v - rain).abs() / (d1 + d2)
        })
        .collect();
    Ok(ShrinkageMap {
        width: e.width,
        height: e.height,
        s,
    })
}

/// Default threshold on |gy| for calling a pixel part of a horizontal line.
pub const HLINE_TAU: f64 = 0.10;
/// Required dominance of |gy| over |gx|.
pub const HLINE_RHO: f64 = 2.0;

/// Prewitt gradients with replicated borders, normalized so a unit step
/// produces a unit response.
pub fn prewitt(img: &Image) -> EdgeResponse {
    let w = img.width();
    let h = img.height();
    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        img.get(r, c)
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for t in -1..=1 {
                sx += at(r + t, c + 1) - at(r + t, c - 1);
                sy += at(r + 1, c + t) - at(r - 1, c + t);
            }
            gx[r as usize * w + c as usize] = sx / 3.0;
            gy[r as usize * w + c as usize] = sy / 3.0;
        }
    }
    EdgeResponse {
        width: w,
        height: h,
        gx,
        gy,
    }
}

/// Flags pixels whose vertical gradient both exceeds `tau` and dominates the
/// horizontal gradient by factor `rho` — i.e. horizontal line structure.
pub fn horizontal_line_mask(img: &Image, tau: f64, rho: f64) -> Vec<bool> {
    let edges = prewitt(img);
    edges
        .gy
        .iter()
        .zip(&edges.gx)
        .map(|(gy, gx)| gy.abs() >= tau && gy.abs() >= rho * gx.abs())
        .collect()
}

/// Sets protected pixels to 1, then applies grayscale dilation (max filter)
/// with a square structuring element of side `2*radius + 1`.
pub fn finalize_map(s: &ShrinkageMap, hmask: &[bool], radius: usize) -> Result<ShrinkageMap> {
    if hmask.len() != s.s.len() {
        return Err(Error::GridDimensionMismatch {
            detail: format!("map has {} pixels, mask {}", s.s.len(), hmask.len()),
        });
    }
    let w = s.width;
    let h = s.height;
    let mut raised: Vec<f64> = s
        .s
        .iter()
        .zip(hmask)
        .map(|(&v, &flag)| if flag { 1.0 } else { v })
        .collect();
    if radius > 0 {
        let src = raised.clone();
        let r = radius as isize;
        for row in 0..h as isize {
            for col in 0..w as isize {
                let mut best = f64::NEG_INFINITY;
                for dr in -r..=r {
                    for dc in -r..=r {
                        let rr = row + dr;
                        let cc = col + dc;
                        if rr >= 0 && rr < h as isize && cc >= 0 && cc < w as isize {
                            best = best.max(src[rr as usize * w + cc as usize]);
                        }
                    }
                }
                raised[row as usize * w + col as usize] = best;
            }
        }
    }
    Ok(ShrinkageMap {
        width: w,
        height: h,
        s: raised,
    })
}

/// Slope, intercept offset, and floor of the gradient-to-epsilon fit, in
/// 8-bit units.
const EPS_SLOPE: f64 = 90.7441;
const EPS_PIVOT: f64 = 0.1107;
const EPS_FLOOR: f64 = 3.0;

/// Linear fit from mean absolute rain-region gradient to the bounded
/// representation error, in 8-bit units, clamped below at 3.
pub fn epsilon_from_mean_gradient(g: f64) -> f64 {
    (EPS_SLOPE * (g - EPS_PIVOT) + EPS_FLOOR).max(EPS_FLOOR)
}

/// Mean |gx|+|gy| over rain pixels (s <= th_s), mapped through the linear
/// fit. Returns epsilon scaled to the [0,1] luma range. Falls back to the
/// floor when no pixel qualifies as rain.
pub fn adaptive_epsilon(img: &Image, s: &ShrinkageMap, th_s: f64) -> f64 {
    let edges = prewitt(img);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (j, &sv) in s.s.iter().enumerate() {
        if sv <= th_s {
            sum += edges.gx[j].abs() + edges.gy[j].abs();
            n += 1;
        }
    }
    let eps8 = if n == 0 {
        EPS_FLOOR
    } else {
        epsilon_from_mean_gradient(sum / n as f64)
    };
    eps8 / 255.0
}

/// Full map pipeline: error map, 2-means, distance-ratio mapping, horizontal
/// line protection, dilation. A constant error map means no evidence of rain
/// anywhere, so the map degenerates to all ones.
pub fn build_shrinkage_map(
    img: &Image,
    rain_dict: &Dictionary,
    l: usize,
    mean_removal: bool,
    dilation_radius: usize,
) -> Result<ShrinkageMap> {
    let e = build_error_map(img, rain_dict, l, mean_removal)?;
    let centers = match kmeans2(&e) {
        Ok(c) => c,
        Err(Error::ConstantErrorMap) => {
            return Ok(ShrinkageMap::constant(img.width(), img.height(), 1.0));
        }
        Err(other) => return Err(other),
    };
    let s = distance_ratio_map(&e, &centers)?;
    let hmask = horizontal_line_mask(img, HLINE_TAU, HLINE_RHO);
    finalize_map(&s, &hmask, dilation_radius)
}

/// Arithmetic mean of the m x m shrinkage window at patch position `i`.
pub fn patch_shrinkage_value(s: &ShrinkageMap, grid: &PatchGrid, i: usize) -> Result<f64> {
    let (r0, c0) = grid.origin(i)?;
    let m = grid.m;
    let mut sum = 0.0;
    for r in r0..r0 + m {
        for c in c0..c0 + m {
            sum += s.get(r, c);
        }
    }
    Ok(sum / (m * m) as f64)
}
