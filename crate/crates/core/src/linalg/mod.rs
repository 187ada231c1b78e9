//! Sparse and dense linear algebra for the Dirichlet systems `(I - P) u = b`.
//!
//! The system matrices are nonsingular M-matrices (unit-ish diagonal,
//! nonpositive off-diagonal, weakly diagonally dominant with at least one
//! strictly dominant row per connected component), so Gaussian elimination
//! without pivoting is stable on them.

mod band;
mod dense;
mod krylov;
mod sparse;

pub use band::BandLu;
pub use dense::DenseLu;
pub use krylov::{bicgstab, Ilu0, IterativeOutcome};
pub use sparse::CsrMatrix;

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    /// Diagonally dominant matrix with a 2-D grid pattern, nonsymmetric.
    fn grid_matrix(side: usize, skew: f64) -> CsrMatrix {
        let n = side * side;
        let mut rows = Vec::with_capacity(n);
        for i in 0..side {
            for j in 0..side {
                let k = i * side + j;
                let mut row = vec![(k, 1.0)];
                if i > 0 {
                    row.push((k - side, -0.25 - skew));
                }
                if i + 1 < side {
                    row.push((k + side, -0.25 + skew));
                }
                if j > 0 {
                    row.push((k - 1, -0.2));
                }
                if j + 1 < side {
                    row.push((k + 1, -0.3));
                }
                rows.push(row);
            }
        }
        CsrMatrix::from_rows(n, rows)
    }

    #[test]
    fn dense_lu_solves_a_pivoting_system() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = DenseLu::factor(3, a.clone()).unwrap().solve(&[5.0, 3.0, 6.0]);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((row - [5.0, 3.0, 6.0][i]).abs() < 1e-14);
        }
        assert!(matches!(DenseLu::factor(2, vec![1.0, 2.0, 2.0, 4.0]), Err(crate::Error::SingularSystem(_))));
    }

    #[test]
    fn csr_basics() {
        let m = CsrMatrix::from_rows(3, vec![vec![(2, 1.0), (0, 2.0), (2, 0.5)], vec![], vec![(1, -1.0)]]);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.mul_vec(&[1.0, 2.0, 3.0]), vec![6.5, 0.0, -2.0]);
        let t = m.transpose();
        assert_eq!(t.get(2, 0), 1.5);
        assert_eq!(t.get(1, 2), -1.0);
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p.get(1, 0), 1.5);
        assert_eq!(p.get(0, 2), -1.0);
    }

    #[test]
    fn band_lu_matches_dense_oracle() {
        let a = grid_matrix(9, 0.05);
        let b: Vec<f64> = (0..81).map(|i| (i as f64 * 0.37).sin()).collect();
        let band = BandLu::factor(&a).unwrap();
        assert_eq!(band.bandwidths(), (9, 9));
        let mut x = b.clone();
        band.solve_in_place(&mut x);
        let oracle = DenseLu::factor(81, a.to_dense()).unwrap().solve(&b);
        let diff = x.iter().zip(&oracle).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn preconditioned_bicgstab_reaches_tolerance() {
        let a = grid_matrix(20, 0.1);
        let b: Vec<f64> = (0..400).map(|i| if i % 7 == 0 { 1.0 } else { 0.0 }).collect();
        let ilu = Ilu0::new(&a).unwrap();
        let out = bicgstab(&a, &b, None, Some(&ilu), 1e-12, 1000).unwrap();
        assert!(out.residual <= 1e-12);
        let plain = bicgstab(&a, &b, None, None, 1e-12, 5000).unwrap();
        assert!(out.iterations <= plain.iterations);
        let oracle = DenseLu::factor(400, a.to_dense()).unwrap().solve(&b);
        let diff = out.x.iter().zip(&oracle).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn bicgstab_reports_failure() {
        let a = grid_matrix(12, 0.0);
        let b = vec![1.0; 144];
        let err = bicgstab(&a, &b, None, None, 1e-14, 2).unwrap_err();
        assert!(matches!(err, crate::Error::ConvergenceFailure { iterations: 2, .. }));
    }

    proptest! {
        #[test]
        fn transpose_is_an_involution(entries in prop::collection::vec((0usize..6, 0usize..5, -2.0f64..2.0), 0..20)) {
            let mut rows = vec![Vec::new(); 6];
            for (i, j, v) in entries {
                rows[i].push((j, v));
            }
            let m = CsrMatrix::from_rows(5, rows);
            prop_assert_eq!(m.transpose().transpose(), m.clone());
            let x: Vec<f64> = (0..5).map(|i| i as f64 - 1.5).collect();
            let y: Vec<f64> = (0..6).map(|i| 0.5 * i as f64).collect();
            let lhs: f64 = m.mul_vec(&x).iter().zip(&y).map(|(p, q)| p * q).sum();
            let rhs: f64 = m.transpose().mul_vec(&y).iter().zip(&x).map(|(p, q)| p * q).sum();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
