//! Independent oracles for the acceptance suite.
//!
//! These deliberately avoid the library's linear-algebra paths: matrices are
//! raw nested arrays and the eigenvalues come from the closed-form solution
//! of the 2x2 Hermitian problem, so agreement with the library is a real
//! cross-check rather than a tautology.

use num_complex::Complex64;
use pmopi::mimo::ComplexMatrix;

/// `F^H H^H H F` computed entry by entry on raw arrays.
pub fn quadratic_form(h: &ComplexMatrix, f: &ComplexMatrix) -> [[Complex64; 2]; 2] {
    let (m, n, r) = (h.rows(), h.cols(), f.cols());
    assert_eq!(r, 2);
    // a = H F (m x r)
    let mut a = vec![[Complex64::new(0.0, 0.0); 2]; m];
    for i in 0..m {
        for j in 0..r {
            for k in 0..n {
                a[i][j] += h.get(i, k) * f.get(k, j);
            }
        }
    }
    // g = a^H a (r x r)
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..r {
        for j in 0..r {
            for k in 0..m {
                g[i][j] += a[k][i].conj() * a[k][j];
            }
        }
    }
    g
}

/// Eigenvalues of a 2x2 Hermitian matrix, closed form, ascending.
pub fn hermitian_eigenvalues_2x2(g: &[[Complex64; 2]; 2]) -> [f64; 2] {
    let a = g[0][0].re;
    let d = g[1][1].re;
    let b = g[0][1];
    let trace = a + d;
    let gap = ((a - d) * (a - d) + 4.0 * b.norm_sqr()).sqrt();
    [(trace - gap) / 2.0, (trace + gap) / 2.0]
}

/// Capacity via the eigenvalue sum `sum_i log2(1 + rho * lambda_i)`.
pub fn capacity_eigenvalue_oracle(h: &ComplexMatrix, f: &ComplexMatrix, rho: f64) -> f64 {
    hermitian_eigenvalues_2x2(&quadratic_form(h, f))
        .iter()
        .map(|&lambda| (1.0 + rho * lambda.max(0.0)).log2())
        .sum()
}
