//! K-SVD dictionary training, atom normalization, and the `.sdic` file format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::omp::{omp, reconstruct, OmpStop, SparseCode};
use crate::patch::PatchMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictKind {
    NonRain,
    Rain,
}

/// An m^2 x K dictionary of unit-norm signal-atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    pub atoms: DMatrix<f64>,
    pub kind: DictKind,
    pub m: usize,
}

impl Dictionary {
    pub fn k(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn patch_dim(&self) -> usize {
        self.atoms.nrows()
    }
}

/// The paired non-rain/rain dictionaries and their concatenation `[D^n D^r]`.
#[derive(Debug, Clone)]
pub struct DictionarySet {
    pub nonrain: Dictionary,
    pub rain: Dictionary,
}

impl DictionarySet {
    pub fn new(nonrain: Dictionary, rain: Dictionary) -> Result<Self> {
        if nonrain.m != rain.m || nonrain.k() != rain.k() {
            return Err(Error::DictionaryMismatch {
                detail: format!(
                    "nonrain m={} K={}, rain m={} K={}",
                    nonrain.m,
                    nonrain.k(),
                    rain.m,
                    rain.k()
                ),
            });
        }
        Ok(Self { nonrain, rain })
    }

    /// Concatenated dictionary with non-rain atoms first.
    pub fn concat(&self) -> DMatrix<f64> {
        let dim = self.nonrain.patch_dim();
        let k = self.nonrain.k();
        let mut d = DMatrix::zeros(dim, 2 * k);
        d.columns_mut(0, k).copy_from(&self.nonrain.atoms);
        d.columns_mut(k, k).copy_from(&self.rain.atoms);
        d
    }
}

/// Unit-normalizes every column and fixes the sign so the first nonzero
/// entry of each atom is non-negative.
pub fn normalize_atoms(mut atoms: DMatrix<f64>) -> Result<DMatrix<f64>> {
    for (j, mut col) in atoms.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::ZeroAtom { index: j });
        }
        col /= norm;
        if let Some(first) = col.iter().find(|v| **v != 0.0) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
    }
    Ok(atoms)
}

/// Per-iteration training diagnostics.
#[derive(Debug, Clone)]
pub struct KsvdReport {
    /// Mean squared representation error after the coding stage of each sweep.
    pub errors: Vec<f64>,
}

fn residual_norm_sq(x: &DVector<f64>, dict: &DMatrix<f64>, code: &SparseCode) -> f64 {
    let mut r = x.clone();
    for (&j, &c) in code.support.iter().zip(&code.coeffs) {
        r.axpy(-c, &dict.column(j), 1.0);
    }
    r.norm_squared()
}

/// K-SVD: alternate OMP sparse coding of every training patch with per-atom
/// rank-1 SVD updates of the restricted residual. Unused atoms are replaced
/// by the currently worst-represented training patch.
pub fn ksvd_train(
    patches: &PatchMatrix,
    k: usize,
    sparsity: usize,
    iters: usize,
    seed: u64,
    kind: DictKind,
    m: usize,
) -> Result<(Dictionary, KsvdReport)> {
    let x = &patches.data;
    let dim = x.nrows();
    let n = x.ncols();
    if k > n {
        return Err(Error::NotEnoughTrainingData { k, n });
    }
    let col_norms: Vec<f64> = (0..n).map(|j| x.column(j).norm()).collect();
    if col_norms.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateTrainingData);
    }

    // init: K distinct random nonzero training patches, normalized
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).filter(|&j| col_norms[j] > 0.0).collect();
    if order.len() < k {
        return Err(Error::NotEnoughTrainingData { k, n: order.len() });
    }
    order.shuffle(&mut rng);
    let mut dict = DMatrix::zeros(dim, k);
    for (a, &j) in order[..k].iter().enumerate() {
        dict.set_column(a, &(x.column(j) / col_norms[j]));
    }
    dict = normalize_atoms(dict)?;

    let stop = OmpStop::Sparsity { max_atoms: sparsity };
    let mut codes: Vec<SparseCode> = vec![SparseCode::empty(k); n];
    let mut errors = Vec::with_capacity(iters);

    for _sweep in 0..iters {
        // coding stage; keep the previous code when OMP happens to do worse,
        // so the training objective never regresses
        let new_codes: Vec<SparseCode> = (0..n)
            .into_par_iter()
            .map(|j| {
                let y = x.column(j).clone_owned();
                let fresh = omp(&y, &dict, stop).expect("dictionary stays unit-norm");
                let old = &codes[j];
                if old.is_empty()
                    || residual_norm_sq(&y, &dict, &fresh)
                        <= residual_norm_sq(&y, &dict, old) + 1e-15
                {
                    fresh
                } else {
                    old.clone()
                }
            })
            .collect();
        codes = new_codes;

        let mut res_sq: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| residual_norm_sq(&x.column(j).clone_owned(), &dict, &codes[j]))
            .collect();
        errors.push(res_sq.iter().sum::<f64>() / n as f64);

        // atom update stage
        let mut usage: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (j, code) in codes.iter().enumerate() {
            for &a in &code.support {
                usage[a].push(j);
            }
        }
        let mut replaced = vec![false; n];
        for atom in 0..k {
            let users = &usage[atom];
            if users.is_empty() {
                // replace with the worst-represented patch not yet reused
                let worst = (0..n)
                    .filter(|&j| !replaced[j] && col_norms[j] > 0.0)
                    .max_by(|&a, &b| res_sq[a].partial_cmp(&res_sq[b]).unwrap());
                if let Some(j) = worst {
                    replaced[j] = true;
                    let mut col = x.column(j).clone_owned();
                    col /= col.norm();
                    if let Some(first) = col.iter().find(|v| **v != 0.0) {
                        if *first < 0.0 {
                            col.neg_mut();
                        }
                    }
                    dict.set_column(atom, &col);
                }
                continue;
            }
            // restricted residual E = X_O - D a_O + d_atom a_atom,O
            let mut e = DMatrix::zeros(dim, users.len());
            for (c, &j) in users.iter().enumerate() {
                let mut col = x.column(j).clone_owned();
                for (&a, &w) in codes[j].support.iter().zip(&codes[j].coeffs) {
                    if a != atom {
                        col.axpy(-w, &dict.column(a), 1.0);
                    }
                }
                e.set_column(c, &col);
            }
            let svd = e.clone().svd(true, true);
            let (u, vt, s) = (svd.u.unwrap(), svd.v_t.unwrap(), svd.singular_values);
            let lead = (0..s.len())
                .max_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap())
                .unwrap();
            if s[lead] <= 1e-14 {
                continue;
            }
            let mut new_atom = u.column(lead).clone_owned();
            let mut row = vt.row(lead).transpose() * s[lead];
            if let Some(first) = new_atom.iter().find(|v| **v != 0.0) {
                if *first < 0.0 {
                    new_atom.neg_mut();
                    row.neg_mut();
                }
            }
            dict.set_column(atom, &new_atom);
            for (c, &j) in users.iter().enumerate() {
                let pos = codes[j].support.iter().position(|&a| a == atom).unwrap();
                codes[j].coeffs[pos] = row[c];
                res_sq[j] = residual_norm_sq(&x.column(j).clone_owned(), &dict, &codes[j]);
            }
        }
    }

    Ok((
        Dictionary {
            atoms: dict,
            kind,
            m,
        },
        KsvdReport { errors },
    ))
}

const MAGIC: &[u8; 4] = b"SDIC";
const VERSION: u32 = 1;

pub fn save_dictionary(dict: &Dictionary, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_u32::<LittleEndian>(VERSION).map_err(io_err)?;
    w.write_u8(match dict.kind {
        DictKind::NonRain => 0,
        DictKind::Rain => 1,
    })
    .map_err(io_err)?;
    w.write_u32::<LittleEndian>(dict.m as u32).map_err(io_err)?;
    w.write_u32::<LittleEndian>(dict.k() as u32).map_err(io_err)?;
    for v in dict.atoms.iter() {
        // nalgebra stores column-major, matching the file layout
        w.write_f64::<LittleEndian>(*v).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let fmt_err = |detail: &str| Error::DictionaryFormat {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    let mut r = BufReader::new(File::open(path).map_err(io_err)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| fmt_err("truncated header"))?;
    if &magic != MAGIC {
        return Err(fmt_err("bad magic"));
    }
    let version = r
        .read_u32::<LittleEndian>()
        .map_err(|_| fmt_err("truncated header"))?;
    if version != VERSION {
        return Err(fmt_err("unsupported version"));
    }
    let kind = match r.read_u8().map_err(|_| fmt_err("truncated header"))? {
        0 => DictKind::NonRain,
        1 => DictKind::Rain,
        _ => return Err(fmt_err("unknown dictionary kind")),
    };
    let m = r
        .read_u32::<LittleEndian>()
        .map_err(|_| fmt_err("truncated header"))? as usize;
    let k = r
        .read_u32::<LittleEndian>()
        .map_err(|_| fmt_err("truncated header"))? as usize;
    let dim = m
        .checked_mul(m)
        .ok_or_else(|| fmt_err("dimension overflow"))?;
    let total = dim
        .checked_mul(k)
        .ok_or_else(|| fmt_err("dimension overflow"))?;
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        values.push(
            r.read_f64::<LittleEndian>()
                .map_err(|_| fmt_err("truncated atom data"))?,
        );
    }
    Ok(Dictionary {
        atoms: DMatrix::from_vec(dim, k, values),
        kind,
        m,
    })
}

/// Mean squared representation error of `patches` under `dict` at `sparsity`.
pub fn representation_error(dict: &Dictionary, patches: &PatchMatrix, sparsity: usize) -> f64 {
    let x = &patches.data;
    let n = x.ncols();
    let total: f64 = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = x.column(j).clone_owned();
            let code = omp(&y, &dict.atoms, OmpStop::Sparsity { max_atoms: sparsity })
                .expect("unit-norm dictionary");
            let rec = reconstruct(&dict.atoms, &code).unwrap();
            (y - rec).norm_squared()
        })
        .sum();
    total / n as f64
}
