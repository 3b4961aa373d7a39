//! Dense real operators, the homotopy family `θL + (1 − θ)K`, orthonormal
//! eigenbases of `K` and the interaction matrix `X[m][n] = <L e_m, e_n>`.
//!
//! Inner products are the standard real dot product. For a non-symmetric `L`
//! the interaction matrix in the standard basis is the transpose of `L` as
//! stored; such an `L` may also have complex eigenvalues that no real series
//! can reach.

use std::ops::Index;

use crate::error::{Error, Result};

/// Numerical tolerances shared by validation and the series engine.
///
/// All tolerances are scale-relative, see the individual checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub ortho: f64,
    pub eig: f64,
    pub gap: f64,
    pub sym: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ortho: 1e-10,
            eig: 1e-10,
            gap: 1e-10,
            sym: 1e-10,
        }
    }
}

/// Real `n × n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "row-major entry count".into(),
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n,
                col: pos % n,
            });
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "row length".into(),
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = vec![0.0; n * n];
        for (i, &v) in values.iter().enumerate() {
            data[i * n + i] = v;
        }
        Self::from_row_major(n, data)
    }

    /// Builds `Σ_i values[i] · v_i v_iᵀ`, symmetrized so the result is
    /// exactly symmetric.
    pub fn from_spectral(vectors: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        let n = vectors.len();
        check_vectors(vectors, n)?;
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                context: "eigenvalue count".into(),
                expected: n,
                found: values.len(),
            });
        }
        let mut data = vec![0.0; n * n];
        for p in 0..n {
            for q in p..n {
                let s: f64 = vectors.iter().zip(values).map(|(v, &mu)| mu * v[p] * v[q]).sum();
                data[p * n + q] = s;
                data[q * n + p] = s;
            }
        }
        Self::from_row_major(n, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|r| self.data[r * self.n + c]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c];
            }
        }
        DenseMatrix { n, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |M[p][q] − M[q][p]|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                worst = worst.max((self.data[p * n + q] - self.data[q * n + p]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, sym_tol: f64) -> bool {
        self.asymmetry() <= sym_tol * self.max_abs().max(1.0)
    }

    pub fn require_symmetric(&self, sym_tol: f64) -> Result<()> {
        if self.is_symmetric(sym_tol) {
            Ok(())
        } else {
            Err(Error::NotSymmetric {
                asymmetry: self.asymmetry(),
            })
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len(), "vector length")?;
        Ok((0..self.n).map(|r| dot(self.row(r), x)).collect())
    }

    /// Entrywise `alpha·self + beta·other`.
    pub fn lincomb(&self, alpha: f64, other: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
        self.check_len(other.n, "matrix dimension")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        DenseMatrix::from_row_major(self.n, data)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_len(other.n, "matrix dimension")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        DenseMatrix::from_row_major(self.n, data)
    }

    fn check_len(&self, found: usize, context: &str) -> Result<()> {
        if found != self.n {
            return Err(Error::DimensionMismatch {
                context: context.into(),
                expected: self.n,
                found,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.n + c]
    }
}

#[inline]
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm2(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

fn check_vectors(vectors: &[Vec<f64>], n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != n {
            return Err(Error::VectorLength {
                index,
                expected: n,
                found: v.len(),
            });
        }
        if let Some(col) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: index, col });
        }
    }
    Ok(())
}

/// Worst entry of the Gram matrix deviation from the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalityDefect {
    pub m: usize,
    pub n: usize,
    /// The inner product `<e_m, e_n>`.
    pub value: f64,
    pub deviation: f64,
}

/// Locates the worst `|<e_m, e_n> − δ_mn|` over all pairs `m ≤ n`.
pub fn orthonormality_defect(vectors: &[Vec<f64>]) -> Result<OrthonormalityDefect> {
    let n = vectors.len();
    check_vectors(vectors, n)?;
    let mut worst = OrthonormalityDefect {
        m: 0,
        n: 0,
        value: dot(&vectors[0], &vectors[0]),
        deviation: (dot(&vectors[0], &vectors[0]) - 1.0).abs(),
    };
    for m in 0..n {
        for k in m..n {
            let value = dot(&vectors[m], &vectors[k]);
            let target = if m == k { 1.0 } else { 0.0 };
            let deviation = (value - target).abs();
            if deviation > worst.deviation {
                worst = OrthonormalityDefect {
                    m,
                    n: k,
                    value,
                    deviation,
                };
            }
        }
    }
    Ok(worst)
}

/// Checks `|<e_m, e_n> − δ_mn| ≤ ortho_tol` for every pair. The vectors must
/// be `n` vectors of length `n`.
pub fn validate_orthonormal_basis(vectors: &[Vec<f64>], ortho_tol: f64) -> Result<()> {
    let worst = orthonormality_defect(vectors)?;
    if worst.deviation > ortho_tol {
        return Err(Error::NotOrthonormal {
            m: worst.m,
            n: worst.n,
            value: worst.value,
            deviation: worst.deviation,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseEigenvalues {
    pub values: Vec<f64>,
    pub max_residual: f64,
}

fn eigen_residual(k: &DenseMatrix, v: &[f64], lambda: f64) -> Result<f64> {
    let kv = k.mul_vec(v)?;
    Ok(kv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt())
}

fn check_eigen_residuals(k: &DenseMatrix, vectors: &[Vec<f64>], values: &[f64], eig_tol: f64) -> Result<f64> {
    let bound = eig_tol * k.max_abs().max(1.0);
    let mut worst = (0, 0.0f64);
    for (i, (v, &lambda)) in vectors.iter().zip(values).enumerate() {
        let res = eigen_residual(k, v, lambda)?;
        if res > worst.1 || i == 0 {
            worst = (i, res);
        }
    }
    if worst.1 > bound {
        return Err(Error::NotAnEigenbasis {
            index: worst.0,
            residual: worst.1,
        });
    }
    Ok(worst.1)
}

/// Rayleigh quotients `λ_i(0) = <K e_i, e_i>`, with the eigen-residual
/// `‖K e_i − λ_i e_i‖₂ ≤ eig_tol · max(1, maxabs(K))` enforced.
pub fn base_eigenvalues(k: &DenseMatrix, vectors: &[Vec<f64>], eig_tol: f64) -> Result<BaseEigenvalues> {
    check_vectors(vectors, k.dim())?;
    if vectors.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            context: "basis size".into(),
            expected: k.dim(),
            found: vectors.len(),
        });
    }
    let values = vectors
        .iter()
        .map(|v| Ok(dot(&k.mul_vec(v)?, v)))
        .collect::<Result<Vec<_>>>()?;
    let max_residual = check_eigen_residuals(k, vectors, &values, eig_tol)?;
    Ok(BaseEigenvalues { values, max_residual })
}

/// Orthonormal eigenvectors `e_i` of `K` (stored as columns) and their base
/// eigenvalues `λ_i(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    vectors: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl EigenBasis {
    /// Validates orthonormality and computes the base eigenvalues from `k`.
    pub fn from_operator(k: &DenseMatrix, vectors: Vec<Vec<f64>>, tol: &Tolerances) -> Result<Self> {
        check_vectors(&vectors, k.dim())?;
        validate_orthonormal_basis(&vectors, tol.ortho)?;
        let base = base_eigenvalues(k, &vectors, tol.eig)?;
        Ok(EigenBasis {
            vectors,
            values: base.values,
        })
    }

    /// Accepts caller-supplied eigenvalues, checked against `k` by residual.
    pub fn with_values(k: &DenseMatrix, vectors: Vec<Vec<f64>>, values: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        check_vectors(&vectors, k.dim())?;
        if vectors.len() != k.dim() || values.len() != k.dim() {
            return Err(Error::DimensionMismatch {
                context: "basis size".into(),
                expected: k.dim(),
                found: vectors.len().min(values.len()),
            });
        }
        validate_orthonormal_basis(&vectors, tol.ortho)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        check_eigen_residuals(k, &vectors, &values, tol.eig)?;
        Ok(EigenBasis { vectors, values })
    }

    /// The standard basis, for diagonal `K`.
    pub fn standard(k: &DenseMatrix, tol: &Tolerances) -> Result<Self> {
        let n = k.dim();
        let vectors = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        Self::from_operator(k, vectors, tol)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when every `e_i` is exactly the i-th unit vector.
    pub fn is_standard(&self) -> bool {
        self.vectors.iter().enumerate().all(|(i, v)| {
            v.iter()
                .enumerate()
                .all(|(p, &x)| if p == i { x == 1.0 } else { x == 0.0 })
        })
    }

    /// Row-major matrix whose columns are the basis vectors.
    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.dim();
        let mut data = vec![0.0; n * n];
        for (c, v) in self.vectors.iter().enumerate() {
            for (r, &x) in v.iter().enumerate() {
                data[r * n + c] = x;
            }
        }
        DenseMatrix { n, data }
    }
}

/// Matrix of `<A e_m, e_n>` for an arbitrary operator `A`.
fn project(a: &DenseMatrix, basis: &EigenBasis) -> Result<DenseMatrix> {
    let n = a.dim();
    if basis.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "basis dimension".into(),
            expected: n,
            found: basis.dim(),
        });
    }
    if basis.is_standard() {
        return Ok(a.transpose());
    }
    let images = basis
        .vectors()
        .iter()
        .map(|e| a.mul_vec(e))
        .collect::<Result<Vec<_>>>()?;
    let mut data = vec![0.0; n * n];
    for (m, img) in images.iter().enumerate() {
        for (k, e) in basis.vectors().iter().enumerate() {
            data[m * n + k] = dot(img, e);
        }
    }
    DenseMatrix::from_row_major(n, data)
}

/// `X[m][n] = <L e_m, e_n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    x: DenseMatrix,
}

impl InteractionMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.x
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.x[(m, n)]
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }
}

/// Builds the interaction matrix of `l` against `basis`. With the standard
/// basis this copies `L` transposed, with no arithmetic.
pub fn interaction_matrix(l: &DenseMatrix, basis: &EigenBasis) -> Result<InteractionMatrix> {
    Ok(InteractionMatrix { x: project(l, basis)? })
}

/// `θ·(L x) + (1 − θ)·(K x)`.
pub fn homotopy_apply(k: &DenseMatrix, l: &DenseMatrix, theta: f64, x: &[f64]) -> Result<Vec<f64>> {
    if k.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            context: "K and L dimensions".into(),
            expected: k.dim(),
            found: l.dim(),
        });
    }
    let kx = k.mul_vec(x)?;
    let lx = l.mul_vec(x)?;
    Ok(lx.iter().zip(&kx).map(|(a, b)| theta * a + (1.0 - theta) * b).collect())
}

/// The operator `M(θ) = θL + (1 − θ)K`, entrywise.
pub fn homotopy_matrix(k: &DenseMatrix, l: &DenseMatrix, theta: f64) -> Result<DenseMatrix> {
    l.lincomb(theta, k, 1.0 - theta)
}

/// A validated starting point for the series: `K`, `L`, an orthonormal
/// eigenbasis of `K`, and the projections of `L` and `L − K` onto it.
#[derive(Debug, Clone)]
pub struct HomotopyProblem {
    k: DenseMatrix,
    l: DenseMatrix,
    basis: EigenBasis,
    x: InteractionMatrix,
    perturbation: DenseMatrix,
    tol: Tolerances,
}

impl HomotopyProblem {
    pub fn new(k: DenseMatrix, l: DenseMatrix, basis: EigenBasis, tol: Tolerances) -> Result<Self> {
        if k.dim() != l.dim() {
            return Err(Error::DimensionMismatch {
                context: "K and L dimensions".into(),
                expected: k.dim(),
                found: l.dim(),
            });
        }
        if basis.dim() != k.dim() {
            return Err(Error::DimensionMismatch {
                context: "basis dimension".into(),
                expected: k.dim(),
                found: basis.dim(),
            });
        }
        validate_orthonormal_basis(basis.vectors(), tol.ortho)?;
        check_eigen_residuals(&k, basis.vectors(), basis.values(), tol.eig)?;
        let x = interaction_matrix(&l, &basis)?;
        let perturbation = project(&l.sub(&k)?, &basis)?;
        Ok(HomotopyProblem {
            k,
            l,
            basis,
            x,
            perturbation,
            tol,
        })
    }

    /// Convenience for diagonal `K` with the standard basis.
    pub fn with_standard_basis(k: DenseMatrix, l: DenseMatrix, tol: Tolerances) -> Result<Self> {
        let basis = EigenBasis::standard(&k, &tol)?;
        Self::new(k, l, basis, tol)
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn k(&self) -> &DenseMatrix {
        &self.k
    }

    pub fn l(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn interaction(&self) -> &InteractionMatrix {
        &self.x
    }

    /// `P[m][n] = <(L − K) e_m, e_n>`. Equal to `X − diag(λ(0))` whenever the
    /// basis diagonalizes `K` exactly, and exactly zero when `L = K`.
    pub fn perturbation(&self) -> &DenseMatrix {
        &self.perturbation
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            DenseMatrix::from_row_major(0, vec![]),
            Err(Error::EmptyMatrix)
        ));
        assert!(matches!(
            DenseMatrix::from_row_major(2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(DenseMatrix::from_row_major(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn symmetry_predicate_is_scale_relative() {
        let a = m(&[&[1e6, 1.0], &[1.0 + 1e-5, 2.0]]);
        assert!(a.is_symmetric(1e-10));
        let b = m(&[&[1.0, 1.0], &[1.0 + 1e-5, 2.0]]);
        assert!(!b.is_symmetric(1e-10));
    }

    #[test]
    fn orthonormal_standard_basis() {
        let e = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        validate_orthonormal_basis(&e, 1e-12).unwrap();
    }

    #[test]
    fn orthonormal_duplicate_vector_reports_first_pair() {
        let e = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        match validate_orthonormal_basis(&e, 1e-12) {
            Err(Error::NotOrthonormal { m, n, value, .. }) => {
                assert_eq!((m, n), (0, 1));
                assert_eq!(value, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orthonormal_rotated_basis() {
        let e = vec![vec![H, H], vec![H, -H]];
        validate_orthonormal_basis(&e, 1e-12).unwrap();
    }

    #[test]
    fn orthonormal_dimension_mismatch_names_vector() {
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!(matches!(
            validate_orthonormal_basis(&e, 1e-12),
            Err(Error::VectorLength { index: 1, .. })
        ));
    }

    #[test]
    fn base_eigenvalues_examples() {
        let k = DenseMatrix::diag(&[1.0, 3.0]).unwrap();
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(base_eigenvalues(&k, &e, 1e-10).unwrap().values, vec![1.0, 3.0]);

        let k = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = vec![vec![H, H], vec![H, -H]];
        let vals = base_eigenvalues(&k, &e, 1e-10).unwrap().values;
        assert!((vals[0] - 3.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);

        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        match base_eigenvalues(&k, &e, 1e-10) {
            Err(Error::NotAnEigenbasis { residual, .. }) => assert_eq!(residual, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interaction_matrix_examples() {
        let tol = Tolerances::default();
        let k = DenseMatrix::diag(&[1.0, 2.0]).unwrap();
        let basis = EigenBasis::standard(&k, &tol).unwrap();

        let l = DenseMatrix::diag(&[5.0, 7.0]).unwrap();
        assert_eq!(interaction_matrix(&l, &basis).unwrap().matrix(), &l);

        let l = m(&[&[1.0, 0.1], &[0.1, 3.0]]);
        assert_eq!(interaction_matrix(&l, &basis).unwrap().matrix(), &l);

        let l = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let x = interaction_matrix(&l, &basis).unwrap();
        assert_eq!(x.get(0, 1), 0.0);
        assert_eq!(x.get(1, 0), 1.0);
    }

    #[test]
    fn interaction_matrix_general_basis_convention() {
        // Same index convention through the dot-product path.
        let tol = Tolerances::default();
        let k = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let basis = EigenBasis::from_operator(&k, vec![vec![H, H], vec![H, -H]], &tol).unwrap();
        let l = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let x = interaction_matrix(&l, &basis).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let le = l.mul_vec(basis.vector(a)).unwrap();
                assert_eq!(x.get(a, b), dot(&le, basis.vector(b)));
            }
        }
        assert!((x.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((x.get(1, 0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn homotopy_apply_examples() {
        let k = DenseMatrix::diag(&[1.0, 3.0]).unwrap();
        let l = m(&[&[1.0, 0.1], &[0.1, 3.0]]);
        let x = [0.3, -0.7];
        assert_eq!(homotopy_apply(&k, &l, 0.0, &x).unwrap(), k.mul_vec(&x).unwrap());
        assert_eq!(homotopy_apply(&k, &l, 1.0, &x).unwrap(), l.mul_vec(&x).unwrap());
        let y = homotopy_apply(&k, &l, 0.5, &[1.0, 0.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 0.05).abs() < 1e-15);
        assert!(homotopy_apply(&k, &l, 0.5, &[1.0]).is_err());
    }

    #[test]
    fn problem_projects_perturbation() {
        let k = DenseMatrix::diag(&[1.0, 3.0]).unwrap();
        let l = m(&[&[1.0, 0.1], &[0.1, 3.0]]);
        let p = HomotopyProblem::with_standard_basis(k.clone(), k, Tolerances::default()).unwrap();
        assert!(p.perturbation().as_slice().iter().all(|&v| v == 0.0));
        let p = HomotopyProblem::with_standard_basis(DenseMatrix::diag(&[1.0, 3.0]).unwrap(), l, Tolerances::default())
            .unwrap();
        assert_eq!(p.perturbation().as_slice(), &[0.0, 0.1, 0.1, 0.0]);
    }

    fn sym_matrix(n: usize) -> impl Strategy<Value = DenseMatrix> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
            let mut d = v.clone();
            for p in 0..n {
                for q in 0..p {
                    d[p * n + q] = v[q * n + p];
                }
            }
            DenseMatrix::from_row_major(n, d).unwrap()
        })
    }

    fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    proptest! {
        #[test]
        fn homotopy_apply_is_linear(
            k in sym_matrix(4),
            l in proptest::collection::vec(-2.0f64..2.0, 16),
            theta in -0.5f64..1.5,
            x in proptest::collection::vec(-1.0f64..1.0, 4),
            y in proptest::collection::vec(-1.0f64..1.0, 4),
            c in -3.0f64..3.0,
        ) {
            let l = DenseMatrix::from_row_major(4, l).unwrap();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let lhs = homotopy_apply(&k, &l, theta, &sum).unwrap();
            let fx = homotopy_apply(&k, &l, theta, &x).unwrap();
            let fy = homotopy_apply(&k, &l, theta, &y).unwrap();
            let rhs: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a + b).collect();
            prop_assert!(rel_close(&lhs, &rhs, 1e-12));

            let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
            let lhs = homotopy_apply(&k, &l, theta, &cx).unwrap();
            let rhs: Vec<f64> = fx.iter().map(|v| c * v).collect();
            prop_assert!(rel_close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn standard_basis_interaction_is_transpose_copy(
            l in proptest::collection::vec(-5.0f64..5.0, 9),
            diag in proptest::collection::vec(-5.0f64..5.0, 3),
        ) {
            let l = DenseMatrix::from_row_major(3, l).unwrap();
            let k = DenseMatrix::diag(&diag).unwrap();
            let basis = EigenBasis::standard(&k, &Tolerances::default()).unwrap();
            prop_assert_eq!(basis.values(), &diag[..]);
            let x = interaction_matrix(&l, &basis).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    prop_assert_eq!(x.get(a, b).to_bits(), l[(b, a)].to_bits());
                }
            }
        }

        #[test]
        fn symmetric_l_gives_symmetric_x(l in sym_matrix(5), angle in 0.0f64..6.0) {
            // Rotated basis in the (0, 1) plane of a diagonal K with equal entries there
            // would be degenerate; the basis check only needs K to commute with it.
            let (s, c) = angle.sin_cos();
            let mut e = vec![vec![0.0; 5]; 5];
            e[0][..2].copy_from_slice(&[c, s]);
            e[1][..2].copy_from_slice(&[-s, c]);
            for (i, row) in e.iter_mut().enumerate().skip(2) {
                row[i] = 1.0;
            }
            let k = DenseMatrix::diag(&[1.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
            let tol = Tolerances::default();
            let basis = EigenBasis::from_operator(&k, e, &tol).unwrap();
            let x = interaction_matrix(&l, &basis).unwrap();
            prop_assert!(x.matrix().asymmetry() <= 5.0 * tol.ortho * l.max_abs());
        }
    }
}
