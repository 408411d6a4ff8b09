//! Orthogonal matching pursuit in sparsity-capped and error-bounded forms.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sparse coefficient vector over a dictionary of `dict_width` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub dict_width: usize,
}

impl SparseCode {
    pub fn empty(dict_width: usize) -> Self {
        Self {
            support: Vec::new(),
            coeffs: Vec::new(),
            dict_width,
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Stopping rule for the pursuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmpStop {
    /// Stop once `max_atoms` atoms are selected.
    Sparsity { max_atoms: usize },
    /// Stop once the squared residual norm drops to dim * eps^2, with a hard
    /// atom cap as a termination guarantee.
    ErrorBounded { eps: f64, max_atoms: usize },
}

const UNIT_NORM_TOL: f64 = 1e-8;
// residual this small relative to the input is treated as exact
const EXACT_FIT_TOL: f64 = 1e-12;

fn check_unit_norms(dict: &DMatrix<f64>) -> Result<()> {
    for (j, col) in dict.column_iter().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::ZeroAtom { index: j });
        }
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::NonUnitAtom { index: j, norm });
        }
    }
    Ok(())
}

/// Greedy pursuit: pick the atom most correlated with the residual, refit all
/// selected coefficients by least squares, repeat until the stop rule fires.
///
/// The refit keeps a growing Cholesky factor of the Gram matrix of selected
/// atoms, so each iteration adds one row instead of refactoring. Ties on the
/// correlation argmax go to the lowest atom index.
pub fn omp(y: &DVector<f64>, dict: &DMatrix<f64>, stop: OmpStop) -> Result<SparseCode> {
    check_unit_norms(dict)?;
    let dim = dict.nrows();
    assert_eq!(y.len(), dim, "signal length must match atom length");
    let n_atoms = dict.ncols();

    let (cap, err_target_sq) = match stop {
        OmpStop::Sparsity { max_atoms } => {
            assert!(max_atoms >= 1);
            (max_atoms.min(n_atoms).min(dim), None)
        }
        OmpStop::ErrorBounded { eps, max_atoms } => {
            assert!(eps >= 0.0);
            let cap = max_atoms.min(n_atoms).min(dim);
            (cap, Some(dim as f64 * eps * eps))
        }
    };

    let y_norm_sq = y.norm_squared();
    let exact_floor = EXACT_FIT_TOL * EXACT_FIT_TOL * y_norm_sq.max(1.0);

    let mut support: Vec<usize> = Vec::with_capacity(cap);
    let mut selected = vec![false; n_atoms];
    // columns of the selected sub-dictionary, Cholesky factor of its Gram
    // matrix (row-major lower triangle), and D_S^T y
    let mut atoms: Vec<DVector<f64>> = Vec::with_capacity(cap);
    let mut chol: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut dty: Vec<f64> = Vec::with_capacity(cap);
    let mut coeffs: Vec<f64> = Vec::new();
    let mut residual = y.clone();

    loop {
        let res_sq = residual.norm_squared();
        if let Some(target) = err_target_sq {
            if res_sq <= target {
                break;
            }
        }
        if res_sq <= exact_floor || support.len() >= cap {
            break;
        }

        // argmax |<residual, atom>| over unselected atoms
        let corr = dict.tr_mul(&residual);
        let mut best = usize::MAX;
        let mut best_val = 0.0;
        for j in 0..n_atoms {
            if selected[j] {
                continue;
            }
            let v = corr[j].abs();
            if v > best_val {
                best_val = v;
                best = j;
            }
        }
        if best == usize::MAX || best_val <= 1e-14 {
            break;
        }

        let atom = dict.column(best).clone_owned();
        // extend the Cholesky factor with the new atom's Gram row
        let k = atoms.len();
        let mut row = vec![0.0; k + 1];
        for (i, a) in atoms.iter().enumerate() {
            row[i] = atom.dot(a);
        }
        // forward-substitute against existing rows
        for i in 0..k {
            let mut s = row[i];
            for t in 0..i {
                s -= chol[i][t] * row[t];
            }
            row[i] = s / chol[i][i];
        }
        let diag_sq = atom.norm_squared() - row[..k].iter().map(|v| v * v).sum::<f64>();
        if diag_sq <= 1e-12 {
            // new atom is numerically dependent on the current span
            selected[best] = true;
            continue;
        }
        row[k] = diag_sq.sqrt();
        chol.push(row);
        atoms.push(atom);
        dty.push(dict.column(best).dot(y));
        selected[best] = true;
        support.push(best);

        // solve (L L^T) c = D_S^T y
        let n = support.len();
        let mut fwd = vec![0.0; n];
        for i in 0..n {
            let mut s = dty[i];
            for t in 0..i {
                s -= chol[i][t] * fwd[t];
            }
            fwd[i] = s / chol[i][i];
        }
        coeffs = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = fwd[i];
            for t in i + 1..n {
                s -= chol[t][i] * coeffs[t];
            }
            coeffs[i] = s / chol[i][i];
        }

        residual.copy_from(y);
        for (c, a) in coeffs.iter().zip(&atoms) {
            residual.axpy(-*c, a, 1.0);
        }
    }

    Ok(SparseCode {
        support,
        coeffs,
        dict_width: n_atoms,
    })
}

/// Sum over the support of coefficient times atom.
pub fn reconstruct(dict: &DMatrix<f64>, code: &SparseCode) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(dict.nrows());
    for (&j, &c) in code.support.iter().zip(&code.coeffs) {
        if j >= dict.ncols() {
            return Err(Error::CodeIndexOutOfRange {
                index: j,
                width: dict.ncols(),
            });
        }
        out.axpy(c, &dict.column(j), 1.0);
    }
    Ok(out)
}

/// Partitions a code over the concatenated layout `[D^n D^r]` into its
/// non-rain and rain halves; rain indices are re-based to 0..K-1.
pub fn split_code(code: &SparseCode, k: usize) -> Result<(SparseCode, SparseCode)> {
    if code.dict_width != 2 * k {
        return Err(Error::BadSplitWidth {
            width: code.dict_width,
            k,
        });
    }
    let mut nonrain = SparseCode::empty(k);
    let mut rain = SparseCode::empty(k);
    for (&j, &c) in code.support.iter().zip(&code.coeffs) {
        if j < k {
            nonrain.support.push(j);
            nonrain.coeffs.push(c);
        } else {
            rain.support.push(j - k);
            rain.coeffs.push(c);
        }
    }
    Ok((nonrain, rain))
}
