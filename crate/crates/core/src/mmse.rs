//! MMSE precoder from the estimated channel: the non-robust benchmark.
//!
//! `W' = [He^H He + sigma^2 (K/P) I]^{-1} He^H`, rescaled so the full power
//! budget is used: `W = sqrt(P / ||W'||_F^2) W'`. The N x N system is solved
//! through a Hermitian positive-definite Cholesky factorization rather than
//! an explicit inverse.

use crate::error::PrecoderError;
use crate::linalg::{cholesky, cholesky_solve_mat, hermitian_transpose};
use crate::metrics::PrecodingMatrix;
use crate::C64;
use ndarray::Array2;

/// Compute the MMSE precoder from an estimated channel matrix (K x N).
///
/// `power` is the total budget P in watts, `noise_power` the receiver noise
/// sigma^2 in watts. The output satisfies `||W||_F^2 = P` to within rounding.
pub fn mmse_precoder(
    h_est: &Array2<C64>,
    power: f64,
    noise_power: f64,
) -> Result<PrecodingMatrix, PrecoderError> {
    assert!(power > 0.0 && noise_power > 0.0, "P and sigma^2 must be positive");
    let (k_users, _n_ant) = h_est.dim();
    assert!(k_users >= 1, "need at least one user");

    let h_h = hermitian_transpose(h_est);
    let reg = noise_power * k_users as f64 / power;
    let mut gram = h_h.dot(h_est);
    for i in 0..gram.nrows() {
        gram[(i, i)] += C64::new(reg, 0.0);
    }
    let l = cholesky(&gram)?;
    let unnormalized = cholesky_solve_mat(&l, &h_h);

    let trace: f64 = unnormalized.iter().map(|e| e.norm_sqr()).sum();
    if trace == 0.0 || !trace.is_finite() {
        return Err(PrecoderError::NormalizationOfZero);
    }
    let matrix = unnormalized * C64::new((power / trace).sqrt(), 0.0);
    Ok(PrecodingMatrix {
        matrix,
        power_budget: power,
    })
}
