#![allow(dead_code)]

use homotopy_eigen::oracle::symmetric_eigen;
use homotopy_eigen::series::SeriesCoefficients;
use homotopy_eigen::DenseMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with upper-triangle entries drawn from U(-1, 1).
pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> DenseMatrix {
    let mut data = vec![0.0; n * n];
    for p in 0..n {
        for q in p..n {
            let v = rng.gen_range(-1.0..1.0);
            data[p * n + q] = v;
            data[q * n + p] = v;
        }
    }
    DenseMatrix::from_row_major(n, data).unwrap()
}

pub fn min_gap(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Random symmetric `K` whose spectrum is separated by at least `gap`.
pub fn random_gapped(rng: &mut impl Rng, n: usize, gap: f64) -> DenseMatrix {
    loop {
        let k = random_symmetric(rng, n);
        if n == 1 || min_gap(&symmetric_eigen(&k).unwrap().values) >= gap {
            return k;
        }
    }
}

/// `(K, L)` with `L = K + P`, `P` random symmetric and
/// `‖P‖_F ≤ 0.1 · min(1, mingap(K))`.
pub fn small_perturbation_pair(rng: &mut impl Rng, n: usize) -> (DenseMatrix, DenseMatrix) {
    let k = random_symmetric(rng, n);
    let gap = min_gap(&symmetric_eigen(&k).unwrap().values).min(1.0);
    let p = random_symmetric(rng, n);
    let scale = rng.gen_range(0.5..0.95) * 0.1 * gap / p.frobenius_norm();
    let l = k.lincomb(1.0, &p, scale).unwrap();
    assert!(l.sub(&k).unwrap().frobenius_norm() <= 0.1 * gap);
    (k, l)
}

/// Initialization and gauge: `a[i][0] = λ_i`, `b[i][k][0] = δ_ik`,
/// `b[i][i][r] = 0` for `r ≥ 1`, all exact.
pub fn structure_violations(c: &SeriesCoefficients) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..c.dim() {
        if c.a(i, 0).to_bits() != c.base_values()[i].to_bits() {
            out.push(format!("a[{i}][0] = {} != {}", c.a(i, 0), c.base_values()[i]));
        }
        for k in 0..c.dim() {
            let want = if i == k { 1.0 } else { 0.0 };
            if c.b(i, k, 0) != want {
                out.push(format!("b[{i}][{k}][0] = {}", c.b(i, k, 0)));
            }
        }
        for r in 1..=c.order() {
            if c.b(i, i, r) != 0.0 {
                out.push(format!("b[{i}][{i}][{r}] = {}", c.b(i, i, r)));
            }
        }
    }
    out
}

/// `‖x − y‖_∞ ≤ tol · max(1, ‖y‖_∞)`.
pub fn close_rel(x: &[f64], y: &[f64], tol: f64) -> bool {
    let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| (a - b).abs() <= tol * scale)
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}
