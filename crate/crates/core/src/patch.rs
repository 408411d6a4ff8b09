//! Overlapping patch extraction, training-patch sampling, and the
//! accumulate/average machinery that rebuilds an image from patch estimates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{Image, RainMask};

/// Layout of the overlapping patch windows over one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub m: usize,
    pub stride: usize,
    pub width: usize,
    pub height: usize,
}

impl PatchGrid {
    pub fn new(m: usize, stride: usize, width: usize, height: usize) -> Result<Self> {
        assert!(m > 0 && stride > 0);
        if width < m || height < m {
            return Err(Error::ImageTooSmall { w: width, h: height, m });
        }
        Ok(Self {
            m,
            stride,
            width,
            height,
        })
    }

    pub fn for_image(img: &Image, m: usize, stride: usize) -> Result<Self> {
        Self::new(m, stride, img.width(), img.height())
    }

    pub fn rows(&self) -> usize {
        (self.height - self.m) / self.stride + 1
    }

    pub fn cols(&self) -> usize {
        (self.width - self.m) / self.stride + 1
    }

    /// Total overlapping patch count N.
    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Top-left pixel of patch `i` (row-major over grid positions).
    pub fn origin(&self, i: usize) -> Result<(usize, usize)> {
        if i >= self.len() {
            return Err(Error::PatchIndexOutOfRange {
                index: i,
                n: self.len(),
            });
        }
        let gr = i / self.cols();
        let gc = i % self.cols();
        Ok((gr * self.stride, gc * self.stride))
    }
}

/// Columns of vectorized patches (column-major within each patch), with
/// per-column means when mean removal was applied at sampling time.
#[derive(Debug, Clone)]
pub struct PatchMatrix {
    pub data: DMatrix<f64>,
    pub means: Option<Vec<f64>>,
}

/// Running sums for patch-averaged reconstruction: `p` holds value sums,
/// `q` the per-pixel coverage counts.
#[derive(Debug, Clone)]
pub struct Accumulator {
    width: usize,
    height: usize,
    p: Vec<f64>,
    q: Vec<u32>,
}

impl Accumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            p: vec![0.0; width * height],
            q: vec![0; width * height],
        }
    }

    pub fn coverage(&self) -> &[u32] {
        &self.q
    }

    pub fn sums(&self) -> &[f64] {
        &self.p
    }

    /// Adds another accumulator over the same grid. Merge order must be fixed
    /// by the caller so floating-point sums stay schedule-independent.
    pub fn merge(&mut self, other: &Accumulator) {
        assert_eq!(self.width, other.width);
        assert_eq!(self.height, other.height);
        for (a, b) in self.p.iter_mut().zip(&other.p) {
            *a += b;
        }
        for (a, b) in self.q.iter_mut().zip(&other.q) {
            *a += b;
        }
    }
}

/// Copies the m x m window of patch `i` into a vector, column-major.
pub fn extract_patch(img: &Image, grid: &PatchGrid, i: usize) -> Result<DVector<f64>> {
    let (r0, c0) = grid.origin(i)?;
    let m = grid.m;
    let mut out = DVector::zeros(m * m);
    for c in 0..m {
        for r in 0..m {
            out[c * m + r] = img.get(r0 + r, c0 + c);
        }
    }
    Ok(out)
}

/// Subtracts the mean in place and returns it.
pub fn remove_mean(patch: &mut DVector<f64>) -> f64 {
    let mean = patch.mean();
    patch.add_scalar_mut(-mean);
    mean
}

/// Scatters a reconstructed patch back into the accumulator.
pub fn accumulate(
    acc: &mut Accumulator,
    grid: &PatchGrid,
    i: usize,
    patch: &DVector<f64>,
) -> Result<()> {
    assert_eq!(patch.len(), grid.m * grid.m, "patch length must be m^2");
    let (r0, c0) = grid.origin(i)?;
    let m = grid.m;
    for c in 0..m {
        for r in 0..m {
            let j = (r0 + r) * acc.width + (c0 + c);
            acc.p[j] += patch[c * m + r];
            acc.q[j] += 1;
        }
    }
    Ok(())
}

/// Per-pixel division p / q. Fails if any pixel was never covered.
pub fn patch_average(acc: &Accumulator) -> Result<Image> {
    let mut luma = Vec::with_capacity(acc.p.len());
    for (j, (&sum, &count)) in acc.p.iter().zip(&acc.q).enumerate() {
        if count == 0 {
            return Err(Error::ZeroCoverage {
                row: j / acc.width,
                col: j % acc.width,
            });
        }
        luma.push(sum / count as f64);
    }
    Ok(Image::from_luma(acc.width, acc.height, luma))
}

fn mask_coverage(mask: &RainMask, r0: usize, c0: usize, m: usize) -> f64 {
    let mut hits = 0usize;
    for r in r0..r0 + m {
        for c in c0..c0 + m {
            if mask.get(r, c) {
                hits += 1;
            }
        }
    }
    hits as f64 / (m * m) as f64
}

/// Draws `count` random patches from the corpus. With a mask present a
/// location qualifies only when its masked fraction is at least
/// `rain_coverage`. Seeded, so the same inputs reproduce the same matrix.
pub fn sample_training_patches(
    images: &[(Image, Option<RainMask>)],
    m: usize,
    count: usize,
    rain_coverage: f64,
    mean_removal: bool,
    seed: u64,
) -> Result<PatchMatrix> {
    assert!(count > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = DMatrix::zeros(m * m, count);
    let mut means = mean_removal.then(|| Vec::with_capacity(count));

    let usable: Vec<usize> = images
        .iter()
        .enumerate()
        .filter(|(_, (img, _))| img.width() >= m && img.height() >= m)
        .map(|(i, _)| i)
        .collect();
    if usable.is_empty() {
        return Err(Error::InsufficientPatches {
            requested: count,
            found: 0,
            attempts: 0,
        });
    }

    let max_attempts = count.saturating_mul(200);
    let mut attempts = 0usize;
    let mut col = 0usize;
    while col < count {
        if attempts >= max_attempts {
            return Err(Error::InsufficientPatches {
                requested: count,
                found: col,
                attempts,
            });
        }
        attempts += 1;
        let idx = usable[rng.gen_range(0..usable.len())];
        let (img, mask) = &images[idx];
        let r0 = rng.gen_range(0..=img.height() - m);
        let c0 = rng.gen_range(0..=img.width() - m);
        if let Some(mask) = mask {
            if mask_coverage(mask, r0, c0, m) < rain_coverage {
                continue;
            }
        }
        let mut sum = 0.0;
        for c in 0..m {
            for r in 0..m {
                let v = img.get(r0 + r, c0 + c);
                data[(c * m + r, col)] = v;
                sum += v;
            }
        }
        if let Some(means) = means.as_mut() {
            let mean = sum / (m * m) as f64;
            for p in 0..m * m {
                data[(p, col)] -= mean;
            }
            means.push(mean);
        }
        col += 1;
    }
    Ok(PatchMatrix { data, means })
}
