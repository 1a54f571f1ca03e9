//! Complex dense linear algebra used by the precoders.
//!
//! The matrices here are tiny (N <= a few dozen), so everything is written
//! for clarity and numerical robustness rather than speed: Cholesky
//! factorization for Hermitian positive-definite solves, cyclic Jacobi
//! rotations for full Hermitian eigendecompositions, and power iteration for
//! the dominant eigenpair of a general operator.

use crate::error::PrecoderError;
use crate::C64;
use ndarray::{Array1, Array2};

/// Conjugate transpose.
pub fn hermitian_transpose(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|e| e.conj())
}

/// Lower-triangular Cholesky factor `L` with `A = L L^H`.
///
/// `A` must be Hermitian positive definite; a non-positive or non-finite
/// pivot reports `SingularSystem`. Only the lower triangle of `A` is read.
pub fn cholesky(a: &Array2<C64>) -> Result<Array2<C64>, PrecoderError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut l: Array2<C64> = Array2::zeros((n, n));
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !pivot.is_finite() || pivot <= 0.0 {
            return Err(PrecoderError::SingularSystem(format!(
                "non-positive Cholesky pivot {pivot:.3e} at index {j}"
            )));
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solve `A x = b` given the Cholesky factor `L` of `A` (forward then back
/// substitution).
pub fn cholesky_solve_vec(l: &Array2<C64>, b: &Array1<C64>) -> Array1<C64> {
    let n = l.nrows();
    assert_eq!(b.len(), n);
    // L y = b.
    let mut y: Array1<C64> = Array1::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    // L^H x = y.
    let mut x: Array1<C64> = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve `A X = B` column by column given the Cholesky factor of `A`.
pub fn cholesky_solve_mat(l: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let mut x = Array2::zeros(b.dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        x.column_mut(j).assign(&cholesky_solve_vec(l, &col.to_owned()));
    }
    x
}

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues real and sorted
/// descending; eigenvector `i` is column `i`. The input is symmetrized as
/// `(A + A^H)/2` first, so tiny Hermivity violations from rounding are
/// tolerated.
pub fn hermitian_eig(a: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = (a + &hermitian_transpose(a)) * C64::new(0.5, 0.0);
    let mut v: Array2<C64> = Array2::eye(n);

    let scale: f64 = m.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * m[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                // Phase-align the pivot, then apply the real Jacobi rotation
                // that annihilates it: J has J_pp = c, J_pq = s,
                // J_qp = -s e^{-j theta}, J_qq = c e^{-j theta}.
                let phase = apq / r;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -s * phase.conj();
                let jqq = c * phase.conj();
                // Columns: M <- M J, V <- V J.
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * jpp + miq * jqp;
                    m[(i, q)] = mip * jpq + miq * jqq;
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * jpp + viq * jqp;
                    v[(i, q)] = vip * jpq + viq * jqq;
                }
                // Rows: M <- J^H M.
                for i in 0..n {
                    let mpi = m[(p, i)];
                    let mqi = m[(q, i)];
                    m[(p, i)] = jpp.conj() * mpi + jqp.conj() * mqi;
                    m[(q, i)] = jpq.conj() * mpi + jqq.conj() * mqi;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| diag[i]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).assign(&v.column(src));
    }
    (eigenvalues, eigenvectors)
}

/// Dominant eigenpair of the operator `x -> apply(x)` by power iteration.
///
/// The error angle to the limit shrinks by `rho` per step (`rho` =
/// subdominant-to-dominant eigenvalue ratio), so the per-step direction
/// change `delta = 1 - |<x_new, x_old>|` decays geometrically with ratio
/// `rho^2` and the remaining distance to the limit, in the same `1 - cos`
/// units, is about `delta / (1 - rho)^2`. The stopping rule therefore
/// accepts once `delta <= tol * (1 - rho)^2`, taking `rho^2` as the *worst*
/// of the last few consecutive-delta ratios: a single ratio is easily
/// flattered by measurement noise once delta sits near machine precision,
/// while a window of them only looks contractive during genuine geometric
/// decay. Instances whose gap is too small to certify inside the iteration
/// budget report `EigenFailure` — the dominant eigenvalue magnitude may be
/// non-unique — and the caller picks a dense route instead. Returns the
/// Rayleigh-quotient eigenvalue and the unit eigenvector.
pub fn power_iteration<F>(
    apply: F,
    start: &Array1<C64>,
    tol: f64,
    max_iters: usize,
) -> Result<(C64, Array1<C64>), PrecoderError>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    let norm = |x: &Array1<C64>| x.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
    let start_norm = norm(start);
    if start_norm == 0.0 {
        return Err(PrecoderError::EigenFailure("zero start vector".into()));
    }
    let mut x = start / C64::new(start_norm, 0.0);
    let mut prev_delta = f64::INFINITY;
    // Ring of recent consecutive-delta ratios; the certificate uses their
    // maximum, so it only fires after a full window of geometric decay.
    let mut ratios = [f64::INFINITY; 8];
    for iter in 0..max_iters {
        let mut y = apply(&x);
        let y_norm = norm(&y);
        if !y_norm.is_finite() || y_norm == 0.0 {
            return Err(PrecoderError::EigenFailure(format!(
                "operator produced a vector with norm {y_norm}"
            )));
        }
        y /= C64::new(y_norm, 0.0);
        let overlap: C64 = x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
        let delta = 1.0 - overlap.norm();
        ratios[iter % ratios.len()] = if prev_delta.is_finite() && prev_delta > 0.0 {
            delta / prev_delta
        } else {
            f64::INFINITY
        };
        prev_delta = delta;
        x = y;
        let rho_sq = ratios.iter().fold(0.0f64, |a, r| a.max(*r)).clamp(0.0, 0.999_999);
        let contraction = 1.0 - rho_sq.sqrt();
        if delta <= tol * contraction * contraction {
            let ax = apply(&x);
            let lambda: C64 = x.iter().zip(ax.iter()).map(|(a, b)| a.conj() * b).sum();
            return Ok((lambda, x));
        }
    }
    Err(PrecoderError::EigenFailure(format!(
        "no direction convergence within {max_iters} iterations"
    )))
}
