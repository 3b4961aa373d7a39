//! Maclaurin coefficients of the eigenvalue paths `λ_i(θ) = Σ a[i][r] θ^r` and
//! of the eigenvector coordinates `φ_{i,k}(θ) = <x_i(θ), e_k> = Σ b[i][k][r] θ^r`.
//!
//! Orders are generated forward: `a[i][r]` and `b[i][·][r]` depend only on
//! orders below `r`, so truncating at a higher order never changes lower ones.
//! The normalization `b[i][i][r] = 0` for `r ≥ 1` fixes `<x_i(θ), e_i> = 1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::HomotopyProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    n: usize,
    order: usize,
    // a[i * (order + 1) + r]
    a: Vec<f64>,
    // b[(i * (order + 1) + r) * n + k]
    b: Vec<f64>,
    base_values: Vec<f64>,
}

impl SeriesCoefficients {
    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Truncation order `R`; coefficients exist for `r = 0..=R`.
    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn a(&self, i: usize, r: usize) -> f64 {
        self.a[i * (self.order + 1) + r]
    }

    #[inline]
    pub fn b(&self, i: usize, k: usize, r: usize) -> f64 {
        self.b[(i * (self.order + 1) + r) * self.n + k]
    }

    /// `a[i][0..=R]`.
    pub fn lambda_coefficients(&self, i: usize) -> &[f64] {
        let w = self.order + 1;
        &self.a[i * w..(i + 1) * w]
    }

    /// `b[i][·][r]` as a length-`n` slice.
    pub fn b_slice(&self, i: usize, r: usize) -> &[f64] {
        let start = (i * (self.order + 1) + r) * self.n;
        &self.b[start..start + self.n]
    }

    /// `b[i][k][0..=R]`.
    pub fn phi_coefficients(&self, i: usize, k: usize) -> Vec<f64> {
        (0..=self.order).map(|r| self.b(i, k, r)).collect()
    }

    pub fn base_values(&self) -> &[f64] {
        &self.base_values
    }

    /// `c_r = max(|a[i][r]|, max_k |b[i][k][r]|)`.
    pub fn magnitude(&self, i: usize, r: usize) -> f64 {
        self.b_slice(i, r)
            .iter()
            .fold(self.a(i, r).abs(), |m, v| m.max(v.abs()))
    }
}

/// Rejects base spectra with `|λ_i − λ_k| ≤ gap_tol · max(1, maxabs(λ))`.
pub fn check_gap(values: &[f64], gap_tol: f64) -> Result<()> {
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let bound = gap_tol * scale;
    for i in 0..values.len() {
        for k in i + 1..values.len() {
            let gap = (values[i] - values[k]).abs();
            if gap <= bound {
                return Err(Error::DegenerateBaseSpectrum { i, k, gap });
            }
        }
    }
    Ok(())
}

/// Runs the coefficient recursion to order `order` for every eigen-index.
///
/// With `P[j][k] = <(L − K) e_j, e_k>` (which equals `X[j][k] − λ_k δ_jk` on
/// an exact eigenbasis), for each `i` and `r = 1..=order`:
///
/// ```text
/// a[i][r]    = Σ_j P[j][i] b[i][j][r−1]
/// b[i][k][r] = (Σ_j P[j][k] b[i][j][r−1] − Σ_{m=1}^{r−1} a[i][r−m] b[i][k][m]) / (λ_i − λ_k),  k ≠ i
/// b[i][i][r] = 0
/// ```
///
/// Work is split across `i` with rayon; each slice is computed independently
/// so the result does not depend on the thread count.
pub fn compute_coefficients(problem: &HomotopyProblem, order: usize) -> Result<SeriesCoefficients> {
    let n = problem.dim();
    let values = problem.basis().values().to_vec();
    check_gap(&values, problem.tolerances().gap)?;

    // Column k of P as a contiguous row for the inner products.
    let pt = problem.perturbation().transpose();
    let w = order + 1;
    let mut a = vec![0.0; n * w];
    let mut b = vec![0.0; n * w * n];

    a.par_chunks_mut(w)
        .zip(b.par_chunks_mut(w * n))
        .enumerate()
        .try_for_each(|(i, (ai, bi))| fill_index(i, &values, &pt, ai, bi))?;

    Ok(SeriesCoefficients {
        n,
        order,
        a,
        b,
        base_values: values,
    })
}

fn fill_index(i: usize, values: &[f64], pt: &crate::DenseMatrix, ai: &mut [f64], bi: &mut [f64]) -> Result<()> {
    let n = values.len();
    let order = ai.len() - 1;
    let lambda_i = values[i];
    ai[0] = lambda_i;
    bi[i] = 1.0;
    let mut projected = vec![0.0; n];

    for r in 1..=order {
        let (done, rest) = bi.split_at_mut(r * n);
        let prev = &done[(r - 1) * n..];
        let cur = &mut rest[..n];

        for (k, out) in projected.iter_mut().enumerate() {
            *out = crate::operator::dot(pt.row(k), prev);
        }

        ai[r] = projected[i];
        if !ai[r].is_finite() {
            return Err(Error::NonFiniteCoefficient { i, k: i, r });
        }

        for k in 0..n {
            if k == i {
                cur[k] = 0.0;
                continue;
            }
            let mut conv = 0.0;
            for m in 1..r {
                conv += ai[r - m] * done[m * n + k];
            }
            let value = (projected[k] - conv) / (lambda_i - values[k]);
            if !value.is_finite() {
                return Err(Error::NonFiniteCoefficient { i, k, r });
            }
            cur[k] = value;
        }
    }
    Ok(())
}

/// First-order coefficients straight from the interaction matrix:
/// `a1[i] = X[i][i] − λ_i` and `b1[i][k] = X[i][k] / (λ_i − λ_k)` for `k ≠ i`.
/// `b1` is returned row-major, `b1[i * n + k]`.
pub fn closed_form_order1(problem: &HomotopyProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = problem.dim();
    let lam = problem.basis().values();
    check_gap(lam, problem.tolerances().gap)?;
    let x = problem.interaction();

    let a1 = (0..n).map(|i| x.get(i, i) - lam[i]).collect();
    let mut b1 = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            if k != i {
                b1[i * n + k] = x.get(i, k) / (lam[i] - lam[k]);
            }
        }
    }
    Ok((a1, b1))
}

/// Second-order coefficients in closed form:
///
/// ```text
/// a2[i]    = Σ_{j≠i} X[i][j] X[j][i] / (λ_i − λ_j)
/// b2[i][k] = ( Σ_{j≠i} X[j][k] X[i][j] / (λ_i − λ_j) + X[i][k] (1 − X[i][i] / (λ_i − λ_k)) ) / (λ_i − λ_k)
/// ```
///
/// and `b2[i][i] = 0`. Agrees with the recursion at `r = 2`.
pub fn closed_form_order2(problem: &HomotopyProblem) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = problem.dim();
    let lam = problem.basis().values();
    check_gap(lam, problem.tolerances().gap)?;
    let x = problem.interaction();

    let mut a2 = vec![0.0; n];
    let mut b2 = vec![0.0; n * n];
    for i in 0..n {
        a2[i] = (0..n)
            .filter(|&j| j != i)
            .map(|j| x.get(i, j) * x.get(j, i) / (lam[i] - lam[j]))
            .sum();
        for k in 0..n {
            if k == i {
                continue;
            }
            let dk = lam[i] - lam[k];
            let through: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| x.get(j, k) * x.get(i, j) / (lam[i] - lam[j]))
                .sum();
            b2[i * n + k] = (through + x.get(i, k) * (1.0 - x.get(i, i) / dk)) / dk;
        }
    }
    Ok((a2, b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DenseMatrix, Tolerances};

    fn canonical() -> HomotopyProblem {
        HomotopyProblem::with_standard_basis(
            DenseMatrix::diag(&[1.0, 3.0]).unwrap(),
            DenseMatrix::from_rows(&[vec![1.0, 0.1], vec![0.1, 3.0]]).unwrap(),
            Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn constant_family_has_no_higher_orders() {
        let k = DenseMatrix::diag(&[1.0, 3.0]).unwrap();
        let p = HomotopyProblem::with_standard_basis(k.clone(), k, Tolerances::default()).unwrap();
        let c = compute_coefficients(&p, 5).unwrap();
        for i in 0..2 {
            for r in 1..=5 {
                assert_eq!(c.a(i, r), 0.0);
                for k in 0..2 {
                    assert_eq!(c.b(i, k, r), 0.0);
                }
            }
        }
    }

    #[test]
    fn scalar_family_is_linear() {
        let p = HomotopyProblem::with_standard_basis(
            DenseMatrix::diag(&[2.0]).unwrap(),
            DenseMatrix::diag(&[5.0]).unwrap(),
            Tolerances::default(),
        )
        .unwrap();
        let c = compute_coefficients(&p, 4).unwrap();
        assert_eq!(c.lambda_coefficients(0), &[2.0, 3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn canonical_low_orders() {
        let c = compute_coefficients(&canonical(), 2).unwrap();
        assert_eq!(c.a(0, 0), 1.0);
        assert_eq!(c.a(0, 1), 0.0);
        assert!((c.a(0, 2) + 0.005).abs() < 1e-17);
        assert!((c.b(0, 1, 1) + 0.05).abs() < 1e-17);
    }

    #[test]
    fn closed_forms_on_canonical() {
        let (a1, b1) = closed_form_order1(&canonical()).unwrap();
        assert_eq!(a1, vec![0.0, 0.0]);
        assert!((b1[1] + 0.05).abs() < 1e-17 && (b1[2] - 0.05).abs() < 1e-17);
        assert_eq!((b1[0], b1[3]), (0.0, 0.0));

        let (a2, _) = closed_form_order2(&canonical()).unwrap();
        assert!((a2[0] + 0.005).abs() < 1e-17 && (a2[1] - 0.005).abs() < 1e-17);
    }

    #[test]
    fn closed_form_order1_identity_target() {
        let p = HomotopyProblem::with_standard_basis(
            DenseMatrix::diag(&[0.0, 2.0]).unwrap(),
            DenseMatrix::identity(2),
            Tolerances::default(),
        )
        .unwrap();
        let (a1, b1) = closed_form_order1(&p).unwrap();
        assert_eq!(a1, vec![1.0, -1.0]);
        assert!(b1.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn closed_forms_vanish_without_perturbation() {
        let k = DenseMatrix::diag(&[-1.0, 0.5, 4.0]).unwrap();
        let p = HomotopyProblem::with_standard_basis(k.clone(), k, Tolerances::default()).unwrap();
        let (a1, b1) = closed_form_order1(&p).unwrap();
        let (a2, b2) = closed_form_order2(&p).unwrap();
        assert!(a1.iter().chain(&b1).chain(&a2).chain(&b2).all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let k = DenseMatrix::diag(&[1.0, 1.0, 2.0]).unwrap();
        let l = DenseMatrix::identity(3);
        let p = HomotopyProblem::with_standard_basis(k, l, Tolerances::default()).unwrap();
        for res in [
            compute_coefficients(&p, 3).map(|_| ()),
            closed_form_order1(&p).map(|_| ()),
            closed_form_order2(&p).map(|_| ()),
        ] {
            match res {
                Err(Error::DegenerateBaseSpectrum { i: 0, k: 1, gap }) => assert_eq!(gap, 0.0),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn overflow_reports_non_finite() {
        let p = HomotopyProblem::with_standard_basis(
            DenseMatrix::diag(&[0.0, 1e-200]).unwrap(),
            DenseMatrix::from_rows(&[vec![0.0, 1e200], vec![1e200, 0.0]]).unwrap(),
            Tolerances {
                gap: 1e-300,
                ..Tolerances::default()
            },
        )
        .unwrap();
        assert!(matches!(
            compute_coefficients(&p, 6),
            Err(Error::NonFiniteCoefficient { .. })
        ));
    }

    #[test]
    fn truncation_is_forward_only() {
        let c20 = compute_coefficients(&canonical(), 20).unwrap();
        let c7 = compute_coefficients(&canonical(), 7).unwrap();
        for i in 0..2 {
            for r in 0..=7 {
                assert_eq!(c20.a(i, r).to_bits(), c7.a(i, r).to_bits());
                assert_eq!(c20.b_slice(i, r), c7.b_slice(i, r));
            }
        }
    }

    #[test]
    fn parallel_matches_single_thread() {
        let p = canonical();
        let par = compute_coefficients(&p, 15).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let seq = pool.install(|| compute_coefficients(&p, 15)).unwrap();
        assert_eq!(par, seq);
    }
}
