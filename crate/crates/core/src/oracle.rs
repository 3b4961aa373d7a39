//! Reference eigensolver used to check the series: cyclic Jacobi for real
//! symmetric matrices, overlap-based eigenvector matching, and forward
//! difference estimates of eigenvalue path slopes.
//!
//! Nothing here is used by the series computation itself.

use crate::error::{Error, Result};
use crate::eval::canonicalize_sign;
use crate::operator::{dot, homotopy_matrix, norm2, DenseMatrix, EigenBasis, HomotopyProblem, Tolerances};

pub const DEFAULT_JACOBI_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_SWEEPS: usize = 50;

/// Eigenpairs sorted by ascending eigenvalue, each vector sign-canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl OracleEigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn into_basis(self, a: &DenseMatrix, tol: &Tolerances) -> Result<EigenBasis> {
        EigenBasis::with_values(a, self.vectors, self.values, tol)
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[p * n + q] * a[p * n + q];
            }
        }
    }
    s.sqrt()
}

/// Cyclic-by-row Jacobi. Sweeps until the off-diagonal Frobenius norm is at
/// most `tol · ‖A‖_F`.
pub fn jacobi_eigen(a: &DenseMatrix, tol: f64, max_sweeps: usize, sym_tol: f64) -> Result<OracleEigenDecomposition> {
    a.require_symmetric(sym_tol)?;
    let n = a.dim();
    let mut m = a.as_slice().to_vec();
    // Row-major; column j holds the j-th eigenvector.
    let mut v = DenseMatrix::identity(n).as_slice().to_vec();
    let target = tol * a.frobenius_norm();

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&m, n);
    while off > target {
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&m, n);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].total_cmp(&m[y * n + y]));
    let values = order.iter().map(|&j| m[j * n + j]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + j]).collect();
            canonicalize_sign(&mut col);
            col
        })
        .collect();
    Ok(OracleEigenDecomposition { values, vectors })
}

/// [`jacobi_eigen`] with default tolerance, sweep limit and symmetry check.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<OracleEigenDecomposition> {
    jacobi_eigen(a, DEFAULT_JACOBI_TOL, DEFAULT_MAX_SWEEPS, Tolerances::default().sym)
}

/// Decomposition of `θL + (1 − θ)K`.
pub fn combo_eigen(k: &DenseMatrix, l: &DenseMatrix, theta: f64) -> Result<OracleEigenDecomposition> {
    k.require_symmetric(Tolerances::default().sym)?;
    l.require_symmetric(Tolerances::default().sym)?;
    symmetric_eigen(&homotopy_matrix(k, l, theta)?)
}

/// Starting problem for symmetric `K`, with `K`'s eigenbasis from Jacobi.
pub fn problem_from_symmetric(k: DenseMatrix, l: DenseMatrix, tol: Tolerances) -> Result<HomotopyProblem> {
    let dec = jacobi_eigen(&k, DEFAULT_JACOBI_TOL, DEFAULT_MAX_SWEEPS, tol.sym)?;
    let basis = EigenBasis::from_operator(&k, dec.vectors, &tol)?;
    HomotopyProblem::new(k, l, basis, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `permutation[i]` is the candidate column matched to reference `i`.
    pub permutation: Vec<usize>,
    pub overlaps: Vec<f64>,
    pub min_overlap: f64,
    /// Some matched overlap is at or below `1/√2`.
    pub ambiguous: bool,
}

/// Greedy assignment by descending normalized overlap `|<ref_i, cand_j>|`,
/// never reusing a candidate.
pub fn match_pairs(reference: &[Vec<f64>], candidate: &OracleEigenDecomposition) -> Result<Matching> {
    let n = candidate.dim();
    if reference.len() != n {
        return Err(Error::DimensionMismatch {
            context: "reference vector count".into(),
            expected: n,
            found: reference.len(),
        });
    }
    let mut pairs = Vec::with_capacity(n * n);
    for (i, r) in reference.iter().enumerate() {
        if r.len() != n {
            return Err(Error::VectorLength {
                index: i,
                expected: n,
                found: r.len(),
            });
        }
        let rn = norm2(r);
        if rn == 0.0 || !rn.is_finite() {
            return Err(Error::ZeroVector { index: i });
        }
        for (j, c) in candidate.vectors.iter().enumerate() {
            pairs.push(((dot(r, c) / (rn * norm2(c))).abs(), i, j));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut permutation = vec![usize::MAX; n];
    let mut overlaps = vec![0.0; n];
    let mut used = vec![false; n];
    for (overlap, i, j) in pairs {
        if permutation[i] == usize::MAX && !used[j] {
            permutation[i] = j;
            overlaps[i] = overlap;
            used[j] = true;
        }
    }
    let min_overlap = overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Matching {
        permutation,
        overlaps,
        ambiguous: min_overlap <= std::f64::consts::FRAC_1_SQRT_2 + 1e-12,
        min_overlap,
    })
}

/// Forward difference `(λ_i(h) − λ_i(0)) / h`, where `λ_i(h)` is the oracle
/// eigenvalue of `M(h)` whose vector best matches `e_i` from Jacobi on `K`.
pub fn finite_difference_slope(k: &DenseMatrix, l: &DenseMatrix, i: usize, h: f64) -> Result<f64> {
    if !(h > 0.0 && h <= 0.1) {
        return Err(Error::InvalidArgument(format!("step h must lie in (0, 0.1], got {h}")));
    }
    let base = combo_eigen(k, l, 0.0)?;
    if i >= base.dim() {
        return Err(Error::InvalidArgument(format!("index {i} out of range")));
    }
    crate::series::check_gap(&base.values, Tolerances::default().gap)?;
    let moved = combo_eigen(k, l, h)?;
    let m = match_pairs(&base.vectors, &moved)?;
    if m.ambiguous {
        return Err(Error::AmbiguousMatch {
            min_overlap: m.min_overlap,
        });
    }
    Ok((moved.values[m.permutation[i]] - base.values[i]) / h)
}
