//! Dense linear algebra used by every other layer: pivoted LU with an
//! explicit singularity check, and general (nonsymmetric) eigendecomposition.
//!
//! Storage is `nalgebra::DMatrix<f64>`; eigenproblems go through `faer`.
//! All routines here are pure and the factorizations are immutable once
//! built, so they can be shared freely across threads.

use nalgebra::linalg::LU;
use nalgebra::{Complex, DMatrix, DVector, Dyn};

use crate::error::{HpsError, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type C64 = Complex<f64>;

/// Pivots smaller than this fraction of the largest pivot flag a singular matrix.
pub const SINGULAR_TOL: f64 = 1e-13;

/// A retained partial-pivoted LU factorization.
#[derive(Clone, Debug)]
pub struct LuFactor {
    lu: LU<f64, Dyn, Dyn>,
    dim: usize,
}

impl LuFactor {
    /// Factorizes `a`; `context` names the caller (a leaf, a merge node, ...)
    /// and is carried into the singularity error.
    pub fn new(a: DenseMatrix, context: &str) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(HpsError::Dimension(format!(
                "{context}: cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let dim = a.nrows();
        if a.iter().any(|v| !v.is_finite()) {
            return Err(HpsError::Singular {
                context: format!("{context} (non-finite entries)"),
                ratio: f64::NAN,
                tol: SINGULAR_TOL,
            });
        }
        let lu = LU::new(a);
        if dim > 0 {
            let u = lu.u();
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..dim {
                let v = u[(i, i)].abs();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
            if !(ratio >= SINGULAR_TOL) {
                return Err(HpsError::Singular {
                    context: context.to_string(),
                    ratio,
                    tol: SINGULAR_TOL,
                });
            }
        }
        Ok(Self { lu, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.nrows(), self.dim, "right-hand side row count");
        let mut x = b.clone();
        self.lu.solve_mut(&mut x);
        x
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim, "right-hand side length");
        let mut x = DVector::from_column_slice(b);
        self.lu.solve_mut(&mut x);
        x.as_slice().to_vec()
    }

    /// Reconstructs the factored matrix, used when serializing operator sets.
    pub fn matrix(&self) -> DenseMatrix {
        let (p, l, u) = self.lu.clone().unpack();
        let mut a = l * u;
        p.inv_permute_rows(&mut a);
        a
    }
}

/// Solves `A X = B` with partial pivoting.
pub fn factor_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.nrows() != b.nrows() {
        return Err(HpsError::Dimension(format!(
            "factor_solve: A is {}x{}, B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    Ok(LuFactor::new(a.clone(), "factor_solve")?.solve(b))
}

/// Dense inverse through the LU factorization.
pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.nrows();
    factor_solve(a, &DenseMatrix::identity(n, n))
}

fn to_faer(a: &DenseMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn check_square(a: &DenseMatrix, what: &str) -> Result<usize> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(HpsError::Dimension(format!("{what} of {}x{} matrix", n, a.ncols())));
    }
    Ok(n)
}

/// Eigenvalues of a general real matrix.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<C64>> {
    if check_square(a, "eigenvalues")? == 0 {
        return Ok(Vec::new());
    }
    let ev = to_faer(a).eigenvalues().map_err(|_| HpsError::EigenNoConvergence(a.nrows()))?;
    Ok(ev.iter().map(|z| C64::new(z.re, z.im)).collect())
}

/// Eigenpairs of a general real matrix. Column `k` of the returned matrix is a
/// unit-norm eigenvector for `values[k]`.
pub fn eig_general(a: &DenseMatrix) -> Result<(Vec<C64>, DMatrix<C64>)> {
    let n = check_square(a, "eig_general")?;
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let evd = to_faer(a).eigen().map_err(|_| HpsError::EigenNoConvergence(n))?;
    let (s, u) = (evd.S(), evd.U());
    let values = (0..n).map(|k| C64::new(s[k].re, s[k].im)).collect();
    let mut v = DMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)].re, u[(i, j)].im));
    for k in 0..n {
        let norm = v.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.column_mut(k).iter_mut().for_each(|z| *z /= norm);
        }
    }
    Ok((values, v))
}

/// Max-abs entry.
pub fn max_abs(a: &DenseMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Copies the sub-block `a[rows, cols]`.
pub fn select(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = DenseMatrix::from_row_slice(3, 2, &[1.0, -2.0, 3.5, 0.25, 7.0, 1e-3]);
        let x = factor_solve(&DenseMatrix::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let b = DenseMatrix::from_column_slice(2, 1, &[2.0, 4.0]);
        let x = factor_solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_residual_small() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 20, 20) + DenseMatrix::identity(20, 20) * 4.0;
        let b = random_matrix(&mut rng, 20, 3);
        let x = factor_solve(&a, &b).unwrap();
        let r = &a * &x - &b;
        assert!(r.norm() / b.norm() < 1e-12);
        // reuse of one factorization for several right-hand sides
        let lu = LuFactor::new(a.clone(), "reuse").unwrap();
        for k in 0..3 {
            let col: Vec<f64> = b.column(k).iter().copied().collect();
            let xk = lu.solve_vec(&col);
            for i in 0..20 {
                assert!((xk[i] - x[(i, k)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn singular_matrix_reports_context() {
        let a = DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        match LuFactor::new(a, "leaf 3") {
            Err(HpsError::Singular { context, .. }) => assert_eq!(context, "leaf 3"),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn factor_roundtrip_matrix() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 6);
        let lu = LuFactor::new(a.clone(), "t").unwrap();
        assert!((lu.matrix() - a).amax() < 1e-14);
    }

    #[test]
    fn eig_diagonal_and_swap() {
        let a = DenseMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let mut vals: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (v, e) in vals.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-13);
        }
        let swap = DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (vals, _) = eig_general(&swap).unwrap();
        let mut re: Vec<f64> = vals.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((re[0] + 1.0).abs() < 1e-13 && (re[1] - 1.0).abs() < 1e-13);
        assert!(vals.iter().all(|z| z.im.abs() < 1e-13));
    }

    #[test]
    fn eig_residuals_on_nonsymmetric_matrix() {
        let mut rng = StdRng::seed_from_u64(11);
        for n in [5usize, 40, 120] {
            let a = random_matrix(&mut rng, n, n);
            let (vals, vecs) = eig_general(&a).unwrap();
            let ac = a.map(|v| C64::new(v, 0.0));
            let norm_a = a.clone().svd(false, false).singular_values[0];
            for k in 0..n {
                let v = vecs.column(k).into_owned();
                let r = &ac * &v - v.map(|z| z * vals[k]);
                let res = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!(res <= 1e-9 * norm_a, "n={n} k={k} residual {res}");
            }
        }
    }

    #[test]
    fn eig_reports_complex_pairs() {
        // rotation by 90 degrees: eigenvalues +-i
        let a = DenseMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let vals = eigenvalues(&a).unwrap();
        assert!(vals.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14 && z.re.abs() < 1e-14));
    }
}
