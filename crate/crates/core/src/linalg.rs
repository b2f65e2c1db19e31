//! Sparse helpers, a Cholesky wrapper and conjugate gradients in a
//! user-supplied inner product.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// `y = A x` for a CSR matrix.
pub fn spmv(a: &CsrMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    debug_assert_eq!(a.ncols(), x.len());
    let (offsets, cols, vals) = a.csr_data();
    DVector::from_fn(a.nrows(), |i, _| {
        let (lo, hi) = (offsets[i], offsets[i + 1]);
        cols[lo..hi].iter().zip(&vals[lo..hi]).map(|(&j, &v)| v * x[j]).sum()
    })
}

/// Sum of `w_i a_i b_i`.
pub fn weighted_dot(w: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    w.iter().zip(a.iter().zip(b.iter())).map(|(w, (a, b))| w * a * b).sum()
}

/// Builds a CSR matrix from triplets; duplicates are summed.
pub fn csr_from_triplets(
    nrows: usize,
    ncols: usize,
    triplets: impl IntoIterator<Item = (usize, usize, f64)>,
) -> CsrMatrix<f64> {
    let mut coo = CooMatrix::new(nrows, ncols);
    for (i, j, v) in triplets {
        coo.push(i, j, v);
    }
    CsrMatrix::from(&coo)
}

/// Row-sum infinity norm.
pub fn norm_inf(a: &CsrMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|row| row.values().iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn to_dense(a: &CsrMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        out[(i, j)] += *v;
    }
    out
}

/// Sparse Cholesky factor of a symmetric positive definite matrix.
pub struct SpdFactor {
    matrix: CsrMatrix<f64>,
    factor: CscCholesky<f64>,
}

impl SpdFactor {
    pub fn new(matrix: CsrMatrix<f64>, what: &'static str) -> Result<Self> {
        let csc = CscMatrix::from(&matrix);
        let factor = CscCholesky::factor(&csc).map_err(|_| Error::Factorization { what })?;
        Ok(Self { matrix, factor })
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut b = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
        self.factor.solve_mut(&mut b);
        DVector::from_column_slice(b.as_slice())
    }

    /// Solves and returns the relative residual `|A x - b|_inf / |b|_inf`.
    pub fn solve_checked(&self, rhs: &DVector<f64>) -> (DVector<f64>, f64) {
        let x = self.solve(rhs);
        let scale = rhs.amax();
        if scale == 0.0 {
            return (x, 0.0);
        }
        let r = spmv(&self.matrix, &x) - rhs;
        (x, r.amax() / scale)
    }
}

/// Settings for [`conjugate_gradient`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CgSettings {
    /// Relative residual target `|r| / |b|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Relative residual of the returned iterate.
    pub residual: f64,
    pub converged: bool,
    /// `p^T A p <= 0` was met before convergence.
    pub breakdown: bool,
    /// Quadratic energy `1/2 <Ax, x> - <b, x>` after each update.
    pub energies: Vec<f64>,
}

/// Conjugate gradients for `A x = b` where `A` is self-adjoint and positive
/// definite in the inner product `inner`.
///
/// On stagnation the iterate with the smallest residual is returned with
/// `converged == false`.
pub fn conjugate_gradient<A, I>(
    mut apply: A,
    b: &DVector<f64>,
    inner: I,
    x0: Option<DVector<f64>>,
    settings: CgSettings,
) -> CgOutcome
where
    A: FnMut(&DVector<f64>) -> DVector<f64>,
    I: Fn(&DVector<f64>, &DVector<f64>) -> f64,
{
    let b_norm = inner(b, b).sqrt();
    if b_norm == 0.0 {
        return CgOutcome {
            x: DVector::zeros(b.len()),
            iterations: 0,
            residual: 0.0,
            converged: true,
            breakdown: false,
            energies: Vec::new(),
        };
    }
    let mut x = x0.unwrap_or_else(|| DVector::zeros(b.len()));
    let mut r = if x.iter().all(|v| *v == 0.0) {
        b.clone()
    } else {
        b - apply(&x)
    };
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    let mut best = (rr.sqrt() / b_norm, x.clone());
    let mut energies = Vec::new();
    let mut iterations = 0;
    let mut breakdown = false;

    while best.0 > settings.tol && iterations < settings.max_iter {
        let ap = apply(&p);
        let pap = inner(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            breakdown = true;
            break;
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        iterations += 1;
        let rr_new = inner(&r, &r);
        energies.push(-0.5 * inner(&x, &(b + &r)));
        let rel = rr_new.sqrt() / b_norm;
        if rel < best.0 {
            best = (rel, x.clone());
        }
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }

    let converged = best.0 <= settings.tol;
    CgOutcome {
        x: best.1,
        iterations,
        residual: best.0,
        converged,
        breakdown,
        energies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> CsrMatrix<f64> {
        csr_from_triplets(
            n,
            n,
            (0..n).flat_map(|i| {
                let mut t = vec![(i, i, 2.5)];
                if i > 0 {
                    t.push((i, i - 1, -1.0));
                }
                if i + 1 < n {
                    t.push((i, i + 1, -1.0));
                }
                t
            }),
        )
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = tridiag(12);
        let f = SpdFactor::new(a.clone(), "test").unwrap();
        let b = DVector::from_fn(12, |i, _| (i as f64).sin());
        let (x, res) = f.solve_checked(&b);
        assert!(res < 1e-14);
        assert!((spmv(&a, &x) - b).amax() < 1e-13);
    }

    #[test]
    fn cg_matches_direct_solve_and_energy_decreases() {
        let a = tridiag(20);
        let b = DVector::from_fn(20, |i, _| 1.0 + i as f64);
        let out = conjugate_gradient(
            |v| spmv(&a, v),
            &b,
            |u, v| u.dot(v),
            None,
            CgSettings {
                tol: 1e-12,
                max_iter: 100,
            },
        );
        assert!(out.converged);
        let direct = SpdFactor::new(a, "test").unwrap().solve(&b);
        assert!((out.x - direct).amax() < 1e-9);
        for w in out.energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }

    #[test]
    fn cg_zero_rhs_takes_no_iterations() {
        let a = tridiag(5);
        let out = conjugate_gradient(
            |v| spmv(&a, v),
            &DVector::zeros(5),
            |u, v| u.dot(v),
            None,
            CgSettings::default(),
        );
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }

    #[test]
    fn non_spd_factor_is_rejected() {
        let a = csr_from_triplets(2, 2, [(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(SpdFactor::new(a, "indefinite").is_err());
    }
}
