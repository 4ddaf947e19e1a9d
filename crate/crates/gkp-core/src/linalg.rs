//! Small dense linear-algebra helpers shared by the Fock oracle and the
//! recovery solver.

use nalgebra::{DMatrix, DVector};

use crate::algebra::C64;

/// Deterministic pairwise summation; order-independent reductions use this so
/// concurrent grid evaluation stays bit-stable.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Returns `(eigenvalues, eigenvectors)`; column `k` of the matrix is the
/// eigenvector of `eigenvalues[k]`.
pub fn eigh(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = h.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
    });
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<C64>::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        vecs.set_column(new_col, &eig.eigenvectors.column(old_col));
    }
    (vals, vecs)
}

/// Loewdin (symmetric) orthonormalization of a set of vectors.
///
/// Vectors with Gram eigenvalue below `rank_tol` times the largest are
/// dropped. Returns the orthonormal set; order follows ascending Gram
/// eigenvalues of the retained subspace.
pub fn loewdin(raw: &[DVector<C64>], rank_tol: f64) -> Vec<DVector<C64>> {
    if raw.is_empty() {
        return Vec::new();
    }
    let k = raw.len();
    let mut gram = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram[(i, j)] = raw[i].dotc(&raw[j]);
        }
    }
    let (vals, vecs) = eigh(&gram);
    let vmax = vals.iter().cloned().fold(0.0_f64, f64::max);
    let mut out = Vec::new();
    for (idx, &val) in vals.iter().enumerate() {
        if val > rank_tol * vmax && val > 0.0 {
            let scale = C64::new(1.0 / val.sqrt(), 0.0);
            let mut v = DVector::<C64>::zeros(raw[0].len());
            for j in 0..k {
                v += raw[j].scale(1.0) * (vecs[(j, idx)] * scale);
            }
            out.push(v);
        }
    }
    out
}

/// Dense matrix exponential by scaling and squaring with a Taylor core.
///
/// Intended for the moderate norms of truncated-generator tests; accuracy is
/// driven to machine precision by the 1-norm-based scaling.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.map(|x| x / C64::new(2f64.powi(s), 0.0));
    // Taylor to machine precision at ||A|| <= 0.5
    let mut result = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=24 {
        term = (&term * &scaled).map(|x| x / C64::new(k as f64, 0.0));
        result += &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Action of `exp(A)` on a vector through repeated scaled Taylor segments,
/// using only matrix-vector products.
///
/// Segments are sized so each carries generator norm about four; the series
/// is accumulated with compensated summation to keep the roundoff floor low
/// enough for high-moment oracle comparisons.
pub fn expm_multiply<F>(matvec: F, v: &DVector<C64>, one_norm_est: f64) -> DVector<C64>
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let segments = (one_norm_est / 4.0).ceil().max(1.0) as usize;
    let inv = 1.0 / segments as f64;
    let n = v.len();
    let mut state = v.clone();
    for _ in 0..segments {
        let mut term = state.clone();
        let mut acc = state.clone();
        let mut comp = DVector::<C64>::zeros(n);
        for k in 1..=120 {
            term = matvec(&term).scale(inv / k as f64);
            // Kahan step: acc += term with carried compensation
            for i in 0..n {
                let y = term[i] - comp[i];
                let t = acc[i] + y;
                comp[i] = (t - acc[i]) - y;
                acc[i] = t;
            }
            if term.norm() < 1e-20 * acc.norm().max(1e-300) {
                break;
            }
        }
        state = acc;
    }
    state
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn one_norm(a: &DMatrix<C64>) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..a.ncols() {
        let mut s = 0.0;
        for i in 0..a.nrows() {
            s += a[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let v: Vec<f64> = (0..103).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert_relative_eq!(pairwise_sum(&v), naive, epsilon = 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let n = 8;
        let mut seed = 5u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::<C64>::from_fn(n, n, |_, _| c(next(), next()));
        let h = (&a + a.adjoint()).map(|x| x * 0.5);
        let (vals, vecs) = eigh(&h);
        let mut d = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = c(vals[i], 0.0);
        }
        let rec = &vecs * d * vecs.adjoint();
        assert!((rec - &h).norm() < 1e-12);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn loewdin_orthonormalizes_and_spans() {
        let v1 = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let v2 = DVector::from_vec(vec![c(0.9, 0.0), c(0.1, 0.2), c(0.0, 0.0)]);
        let out = loewdin(&[v1.clone(), v2.clone()], 1e-12);
        assert_eq!(out.len(), 2);
        for i in 0..2 {
            for j in 0..2 {
                let dot = out[i].dotc(&out[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(dot.re, want, epsilon = 1e-12);
                assert_relative_eq!(dot.im, 0.0, epsilon = 1e-12);
            }
        }
        // degenerate input collapses rank
        let out2 = loewdin(&[v1.clone(), v1.scale(2.0)], 1e-10);
        assert_eq!(out2.len(), 1);
    }

    #[test]
    fn expm_matches_scalar_and_nilpotent() {
        let a = DMatrix::<C64>::from_row_slice(1, 1, &[c(0.7, -0.3)]);
        let e = expm(&a);
        assert_relative_eq!((e[(0, 0)] - c(0.7, -0.3).exp()).norm(), 0.0, epsilon = 1e-14);
        // nilpotent 2x2
        let n = DMatrix::<C64>::from_row_slice(2, 2, &[c(0.0, 0.0), c(3.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let en = expm(&n);
        assert_relative_eq!((en[(0, 1)] - c(3.0, 1.0)).norm(), 0.0, epsilon = 1e-13);
        assert_relative_eq!((en[(0, 0)] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn expm_multiply_matches_dense() {
        let n = 12;
        let mut seed = 11u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = DMatrix::<C64>::from_fn(n, n, |_, _| c(next(), next()));
        let v = DVector::<C64>::from_fn(n, |_, _| c(next(), next()));
        let dense = expm(&a) * &v;
        let fast = expm_multiply(|x| &a * x, &v, one_norm(&a));
        assert!((dense - fast).norm() < 1e-10);
    }
}
