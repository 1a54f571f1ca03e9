//! Robust precoder maximizing the mean SLNR under bounded space-angle error.
//!
//! Instead of the point estimate of each user's steering vector, this
//! precoder works from its second-order statistics: the autocorrelation
//! matrix of the steering vector when the space angle carries a uniform
//! error in `[-B, +B]`. Each user's precoding vector is the dominant
//! eigenvector of
//!
//! `M_k = (sum_{l != k} sigma_l^2 R_l + sigma^2 (K/P) I)^{-1} sigma_k^2 R_k`
//!
//! scaled to power `P/K`, where `sigma_k^2 = 1/L_k` is the inverse path
//! loss. As `B` grows the autocorrelation spreads over more directions and
//! the beams widen, trading peak gain for robustness.

use crate::channel::steering_vector;
use crate::config::ScenarioConfig;
use crate::error::PrecoderError;
use crate::linalg::{cholesky, cholesky_solve_vec, hermitian_eig,
    hermitian_transpose, power_iteration};
use crate::metrics::PrecodingMatrix;
use crate::C64;
use ndarray::{Array1, Array2};
use std::f64::consts::TAU;

/// Convergence tolerance on eigenvector direction for power iteration.
/// The certificate's contraction estimate can lag during multi-mode
/// transients, so this carries a few orders of margin beyond the accuracy
/// the precoder actually needs.
const EIG_DIRECTION_TOL: f64 = 1e-12;
/// Iteration budget before falling back to the dense eigensolver. Kept
/// modest: a dense solve at these sizes costs well under a millisecond, so
/// burning long on a gap too small to certify is never worth it.
const EIG_MAX_ITERS: usize = 2_000;

/// What the precoder believes about one user: the erroneous space-angle
/// estimate and the (error-free) path loss.
#[derive(Debug, Clone, Copy)]
pub struct UserEstimate {
    /// Estimated space angle `cos(eps) + delta`.
    pub space_angle_est: f64,
    /// Linear path loss `L_k`.
    pub path_loss_linear: f64,
}

/// Steering-vector autocorrelation of one user: `R = E{v^H v}` over the
/// angle error, plus the inverse path loss that scales it in the SLNR.
#[derive(Debug, Clone)]
pub struct SteeringAutocorrelation {
    /// N x N Hermitian PSD matrix with unit diagonal.
    pub matrix: Array2<C64>,
    /// `sigma_v^2 = 1/L`, dimensionless.
    pub inverse_path_loss: f64,
}

/// Characteristic function of `U(-B, +B)` evaluated at `t`:
/// `sin(tB)/(tB)` with the value 1 at `tB = 0`.
pub fn characteristic_uniform(t: f64, error_bound: f64) -> f64 {
    assert!(error_bound >= 0.0, "error bound must be nonnegative");
    let x = t * error_bound;
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Build the steering autocorrelation for an estimated space angle.
///
/// Entry `(n, n')` is `e^{-j (2 pi / lambda) d_a (n - n') phi} * chi(t)`
/// where `chi` is the characteristic function of the angle error at
/// `t = (2 pi / lambda) d_a (n - n')`. At `B = 0` this collapses to the
/// rank-1 outer product of the steering vector with itself.
pub fn steering_autocorrelation(
    space_angle_est: f64,
    error_bound: f64,
    cfg: &ScenarioConfig,
) -> Array2<C64> {
    let n = cfg.num_antennas;
    let coeff = TAU * cfg.antenna_spacing_m / cfg.wavelength_m;
    Array2::from_shape_fn((n, n), |(i, j)| {
        let t = coeff * (i as f64 - j as f64);
        C64::from_polar(1.0, -t * space_angle_est) * characteristic_uniform(t, error_bound)
    })
}

/// `R` and `sigma_v^2` together for one user estimate.
pub fn user_autocorrelation(
    est: &UserEstimate,
    error_bound: f64,
    cfg: &ScenarioConfig,
) -> SteeringAutocorrelation {
    SteeringAutocorrelation {
        matrix: steering_autocorrelation(est.space_angle_est, error_bound, cfg),
        inverse_path_loss: 1.0 / est.path_loss_linear,
    }
}

/// Dominant eigenvector of `D^{-1} B` via power iteration, multiplying
/// through the Cholesky factor of `D` each step.
///
/// `l_denom` is the Cholesky factor of the Hermitian positive-definite
/// denominator `D`; `numerator` is Hermitian PSD. Returns the eigenvalue and
/// the unit-norm eigenvector.
pub fn dominant_eigvec_power(
    l_denom: &Array2<C64>,
    numerator: &Array2<C64>,
    start: &Array1<C64>,
) -> Result<(C64, Array1<C64>), PrecoderError> {
    power_iteration(
        |x| cholesky_solve_vec(l_denom, &numerator.dot(x)),
        start,
        EIG_DIRECTION_TOL,
        EIG_MAX_ITERS,
    )
}

/// Dense route to the same eigenpair: `D^{-1} B` is similar to the Hermitian
/// matrix `S = L^{-1} B L^{-H}`, whose top eigenvector `y` maps back through
/// `x = L^{-H} y`.
pub fn dominant_eigvec_dense(
    l_denom: &Array2<C64>,
    numerator: &Array2<C64>,
) -> (f64, Array1<C64>) {
    let n = numerator.nrows();
    // L Z = B  =>  Z = L^{-1} B; then S = Z L^{-H} solved as L S^H = Z^H.
    let z = forward_substitute_mat(l_denom, numerator);
    let s = hermitian_transpose(&forward_substitute_mat(l_denom, &hermitian_transpose(&z)));
    let (vals, vecs) = hermitian_eig(&s);
    let y = vecs.column(0).to_owned();
    // x solves L^H x = y (back substitution).
    let mut x: Array1<C64> = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in (i + 1)..n {
            acc -= l_denom[(k, i)].conj() * x[k];
        }
        x[i] = acc / l_denom[(i, i)];
    }
    let norm: f64 = x.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
    (vals[0], x / C64::new(norm, 0.0))
}

/// Solve `L X = B` for lower-triangular `L` (forward substitution per column).
fn forward_substitute_mat(l: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (n, cols) = b.dim();
    let mut x: Array2<C64> = Array2::zeros((n, cols));
    for c in 0..cols {
        for i in 0..n {
            let mut acc = b[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
    }
    x
}

/// Rotate a unit eigenvector so its largest-magnitude component is real
/// positive; makes the precoder deterministic.
fn fix_global_phase(x: &mut Array1<C64>) {
    let idx = (0..x.len())
        .max_by(|&a, &b| x[a].norm().partial_cmp(&x[b].norm()).unwrap())
        .expect("nonempty vector");
    let pivot = x[idx];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for e in x.iter_mut() {
            *e *= rot;
        }
    }
}

/// Compute the robust mean-SLNR precoder from per-user estimates.
///
/// Each column gets power exactly `P/K`. Power iteration is tried first,
/// seeded with the conjugate steering direction of the user's estimate; if
/// it does not converge (near-degenerate dominant eigenvalues), the dense
/// Hermitian eigensolver takes over. The dominant eigenvalue of `M_k` is
/// mathematically real nonnegative; an imaginary residue above 1e-8
/// (relative) trips an assertion.
pub fn rslnr_precoder(
    estimates: &[UserEstimate],
    error_bound: f64,
    cfg: &ScenarioConfig,
) -> Result<PrecodingMatrix, PrecoderError> {
    let k_total = estimates.len();
    assert!(k_total >= 1, "need at least one user");
    assert!(
        estimates.iter().all(|e| e.path_loss_linear > 0.0),
        "path losses must be positive"
    );
    let n = cfg.num_antennas;
    let p = cfg.transmit_power_w;
    let reg = cfg.noise_power_w * k_total as f64 / p;

    let autocorrs: Vec<SteeringAutocorrelation> = estimates
        .iter()
        .map(|e| user_autocorrelation(e, error_bound, cfg))
        .collect();

    let mut w: Array2<C64> = Array2::zeros((n, k_total));
    for k in 0..k_total {
        // Denominator: leakage covariances of the other users plus the
        // noise-derived ridge.
        let mut denom: Array2<C64> = Array2::eye(n) * C64::new(reg, 0.0);
        for (l, ac) in autocorrs.iter().enumerate() {
            if l != k {
                denom = denom + &ac.matrix * C64::new(ac.inverse_path_loss, 0.0);
            }
        }
        let numer = &autocorrs[k].matrix * C64::new(autocorrs[k].inverse_path_loss, 0.0);
        let l_denom = cholesky(&denom)?;

        let start: Array1<C64> =
            steering_vector(estimates[k].space_angle_est, cfg).mapv(|e| e.conj());
        let mut eigvec = match dominant_eigvec_power(&l_denom, &numer, &start) {
            Ok((lambda, x)) => {
                assert!(
                    lambda.im.abs() <= 1e-8 * lambda.norm().max(1e-300),
                    "dominant eigenvalue has imaginary residue {:.3e}",
                    lambda.im
                );
                x
            }
            Err(PrecoderError::EigenFailure(_)) => dominant_eigvec_dense(&l_denom, &numer).1,
            Err(other) => return Err(other),
        };
        fix_global_phase(&mut eigvec);
        let scale = C64::new((p / k_total as f64).sqrt(), 0.0);
        w.column_mut(k).assign(&(&eigvec * scale));
    }
    Ok(PrecodingMatrix {
        matrix: w,
        power_budget: p,
    })
}

/// Convenience: build the estimates from a channel realization (erroneous
/// space angles, true realized path losses) and run the precoder.
pub fn rslnr_from_realization(
    realization: &crate::channel::ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<PrecodingMatrix, PrecoderError> {
    let estimates: Vec<UserEstimate> = realization
        .users
        .iter()
        .zip(&realization.angle_errors)
        .map(|(u, d)| UserEstimate {
            space_angle_est: u.space_angle + d,
            path_loss_linear: u.path_loss_linear,
        })
        .collect();
    rslnr_precoder(&estimates, cfg.error_bound, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{beam_gain_at, sum_rate};
    use crate::seeding::seeded_rng;
    use rand::Rng;
    use std::f64::consts::PI;

    fn small_cfg(n: usize) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.num_antennas = n;
        cfg
    }

    #[test]
    fn characteristic_function_basics() {
        assert_eq!(characteristic_uniform(0.0, 0.3), 1.0);
        for t in [-5.0, 0.0, 1.7, 400.0] {
            assert_eq!(characteristic_uniform(t, 0.0), 1.0);
        }
        // First zero at tB = pi.
        assert!(characteristic_uniform(PI / 0.05, 0.05).abs() < 1e-15);
        // Even in t.
        assert_eq!(
            characteristic_uniform(3.7, 0.08),
            characteristic_uniform(-3.7, 0.08)
        );
    }

    #[test]
    fn characteristic_function_monte_carlo() {
        // mean of e^{j t delta} over uniform draws; the imaginary part
        // averages to zero, the real part to sin(tB)/(tB).
        let mut rng = seeded_rng(83);
        let b = 0.07;
        let draws = 200_000usize;
        for t in [3.0, 25.0, 84.823] {
            let mut re = 0.0;
            let mut im = 0.0;
            for _ in 0..draws {
                let d: f64 = rng.random_range(-b..b);
                re += (t * d).cos();
                im += (t * d).sin();
            }
            re /= draws as f64;
            im /= draws as f64;
            assert!((re - characteristic_uniform(t, b)).abs() < 1e-2);
            assert!(im.abs() < 1e-2);
        }
    }

    #[test]
    fn autocorrelation_zero_bound_is_steering_outer_product() {
        let cfg = small_cfg(8);
        let phi = 0.23;
        let r = steering_autocorrelation(phi, 0.0, &cfg);
        let v = steering_vector(phi, &cfg);
        for i in 0..8 {
            for j in 0..8 {
                let expected = v[i].conj() * v[j];
                assert!((r[(i, j)] - expected).norm() < 1e-12);
                assert!((r[(i, j)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn autocorrelation_frozen_corner_entry() {
        // N=10, d_a = 3 lambda/2, phi = 0, B = 0.05, corner (first row, last
        // column): t = 3 pi (1 - 10) = -27 pi = -84.823; the characteristic
        // function is even, so the entry is sin(4.24115)/4.24115 = -0.21009,
        // purely real.
        let cfg = small_cfg(10);
        let r = steering_autocorrelation(0.0, 0.05, &cfg);
        let t = 27.0 * PI;
        let oracle = (t * 0.05).sin() / (t * 0.05);
        assert!((r[(0, 9)].re - oracle).abs() < 1e-14);
        assert!(r[(0, 9)].im.abs() < 1e-14);
        assert!((oracle - (-0.21009)).abs() < 1e-5);
        assert!((r[(0, 9)] - r[(9, 0)].conj()).norm() < 1e-14);
    }

    #[test]
    fn autocorrelation_invariants_random_angles() {
        let cfg = small_cfg(10);
        let mut rng = seeded_rng(89);
        for _ in 0..10 {
            let phi: f64 = rng.random_range(-0.9..0.9);
            let b: f64 = rng.random_range(0.0..0.12);
            let r = steering_autocorrelation(phi, b, &cfg);
            // Hermitian with unit diagonal.
            for i in 0..10 {
                assert!((r[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-12);
                for j in 0..10 {
                    assert!((r[(i, j)] - r[(j, i)].conj()).norm() < 1e-12);
                }
            }
            // PSD within tolerance.
            let (vals, _) = hermitian_eig(&r);
            assert!(vals[vals.len() - 1] > -1e-10, "negative eigenvalue {}", vals[vals.len() - 1]);
        }
    }

    #[test]
    fn autocorrelation_matches_monte_carlo_outer_products() {
        // Direct estimate of E{v(phi+delta)^H v(phi+delta)} by averaging
        // outer products over uniform error draws.
        let cfg = small_cfg(6);
        let phi = 0.31;
        let b = 0.08;
        let r = steering_autocorrelation(phi, b, &cfg);
        let mut rng = seeded_rng(97);
        let draws = 200_000usize;
        let mut acc: Array2<C64> = Array2::zeros((6, 6));
        for _ in 0..draws {
            let delta: f64 = rng.random_range(-b..b);
            let v = steering_vector(phi + delta, &cfg);
            for i in 0..6 {
                for j in 0..6 {
                    acc[(i, j)] += v[i].conj() * v[j];
                }
            }
        }
        acc /= C64::new(draws as f64, 0.0);
        for (x, y) in acc.iter().zip(r.iter()) {
            assert!((x - y).norm() < 1e-2, "MC {x} vs formula {y}");
        }
    }

    #[test]
    fn single_user_zero_bound_is_matched_beam() {
        // K=1, B=0: M is proportional to the rank-1 autocorrelation, whose
        // dominant eigenvector is the conjugate steering direction; the beam
        // gain at the estimate reaches sqrt(N P).
        let mut cfg = small_cfg(12);
        cfg.transmit_power_w = 8.0;
        let est = UserEstimate {
            space_angle_est: 0.17,
            path_loss_linear: 1e13,
        };
        let w = rslnr_precoder(&[est], 0.0, &cfg).unwrap();
        let col = w.matrix.column(0).to_owned();
        let gain = beam_gain_at(&col, est.space_angle_est, &cfg);
        let expected = (12.0 * cfg.transmit_power_w).sqrt();
        assert!((gain / expected - 1.0).abs() < 1e-9, "gain {gain} vs {expected}");
    }

    #[test]
    fn column_powers_are_exactly_budget_over_k() {
        let cfg = small_cfg(10);
        let mut rng = seeded_rng(101);
        for _ in 0..5 {
            let estimates: Vec<UserEstimate> = (0..3)
                .map(|_| UserEstimate {
                    space_angle_est: rng.random_range(-0.5..0.5),
                    path_loss_linear: 10f64.powf(rng.random_range(12.0..14.0)),
                })
                .collect();
            let w = rslnr_precoder(&estimates, 0.05, &cfg).unwrap();
            let share = cfg.transmit_power_w / 3.0;
            for k in 0..3 {
                let power: f64 = w.matrix.column(k).iter().map(|e| e.norm_sqr()).sum();
                assert!((power / share - 1.0).abs() < 1e-9);
            }
            assert!((w.power_used() / cfg.transmit_power_w - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn power_and_dense_eigensolvers_agree() {
        let cfg = small_cfg(10);
        let mut rng = seeded_rng(103);
        for _ in 0..20 {
            // Jittered well-spread angles: pairwise separations stay clear of
            // the grating-lobe period lambda/d_a = 2/3, where two users would
            // alias and the dominant eigenpair degenerates.
            let estimates: Vec<UserEstimate> = [-0.22, 0.0, 0.22]
                .iter()
                .map(|&base| UserEstimate {
                    space_angle_est: base + rng.random_range(-0.03..0.03),
                    path_loss_linear: 10f64.powf(rng.random_range(12.5..13.5)),
                })
                .collect();
            let b = rng.random_range(0.0..0.1);
            let autocorrs: Vec<SteeringAutocorrelation> = estimates
                .iter()
                .map(|e| user_autocorrelation(e, b, &cfg))
                .collect();
            let reg = cfg.noise_power_w * 3.0 / cfg.transmit_power_w;
            let mut denom: Array2<C64> = Array2::<C64>::eye(10) * C64::new(reg, 0.0);
            for ac in autocorrs.iter().skip(1) {
                denom = denom + &ac.matrix * C64::new(ac.inverse_path_loss, 0.0);
            }
            let numer = &autocorrs[0].matrix * C64::new(autocorrs[0].inverse_path_loss, 0.0);
            let l = cholesky(&denom).unwrap();
            let start = steering_vector(estimates[0].space_angle_est, &cfg).mapv(|e| e.conj());
            let (lambda_p, x_p) = dominant_eigvec_power(&l, &numer, &start).unwrap();
            let (lambda_d, x_d) = dominant_eigvec_dense(&l, &numer);
            assert!((lambda_p.re - lambda_d).abs() / lambda_d.abs().max(1e-300) < 1e-6);
            let overlap: C64 = x_p.iter().zip(x_d.iter()).map(|(a, b)| a.conj() * b).sum();
            assert!(overlap.norm() > 1.0 - 1e-8, "overlap {}", overlap.norm());
        }
    }

    #[test]
    fn scale_invariance_under_fixed_ridge_ratio() {
        // Scaling every sigma_v^2 and sigma^2 by c (P, K fixed) multiplies
        // both numerator and denominator of M_k by c: same eigenvectors,
        // same precoder, same rates.
        let mut cfg = small_cfg(8);
        cfg.noise_power_w = 6e-13;
        let mut rng = seeded_rng(107);
        let estimates: Vec<UserEstimate> = (0..3)
            .map(|_| UserEstimate {
                space_angle_est: rng.random_range(-0.4..0.4),
                path_loss_linear: 2e13,
            })
            .collect();
        let w_ref = rslnr_precoder(&estimates, 0.03, &cfg).unwrap();

        let c = 37.0;
        let mut cfg_scaled = cfg.clone();
        cfg_scaled.noise_power_w *= c;
        let scaled: Vec<UserEstimate> = estimates
            .iter()
            .map(|e| UserEstimate {
                space_angle_est: e.space_angle_est,
                path_loss_linear: e.path_loss_linear / c,
            })
            .collect();
        let w_scaled = rslnr_precoder(&scaled, 0.03, &cfg_scaled).unwrap();
        // Compare achieved sum rate on a common true channel.
        let h = Array2::from_shape_fn((3, 8), |(k, n)| {
            steering_vector(estimates[k].space_angle_est, &cfg)[n] / C64::new(1e6, 0.0)
        });
        let r_ref = sum_rate(&h, &w_ref, cfg.noise_power_w).sum_rate;
        let r_scaled = sum_rate(&h, &w_scaled, cfg.noise_power_w).sum_rate;
        assert!((r_ref - r_scaled).abs() / r_ref < 1e-9);
    }

    #[test]
    fn beams_peak_at_estimates_for_zero_bound() {
        // Well-separated users, B = 0: each beam's grid argmax lands within
        // one cell of the user's estimated angle. Separations are kept away
        // from the grating-lobe period 2/3, where interferer coupling would
        // tilt the whitened beam visibly.
        let cfg = small_cfg(16);
        let targets = [-0.25, 0.0, 0.3];
        let estimates: Vec<UserEstimate> = targets
            .iter()
            .map(|&phi| UserEstimate {
                space_angle_est: phi,
                path_loss_linear: 2.5e13,
            })
            .collect();
        let w = rslnr_precoder(&estimates, 0.0, &cfg).unwrap();
        let step = 0.002;
        let grid: Vec<f64> = (-400..=400).map(|i| i as f64 * step).collect();
        for (k, &phi) in targets.iter().enumerate() {
            let col = w.matrix.column(k).to_owned();
            let gains: Vec<f64> = grid.iter().map(|&g| beam_gain_at(&col, g, &cfg)).collect();
            let argmax = gains
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert!(
                (grid[argmax] - phi).abs() <= step + 1e-12,
                "beam {k} peaks at {} instead of {phi}",
                grid[argmax]
            );
        }
    }

    #[test]
    fn single_user_beamwidth_widens_with_bound() {
        // Half-power beamwidth in space angle around the estimate must be
        // non-decreasing in the error bound.
        let cfg = small_cfg(16);
        let est = UserEstimate {
            space_angle_est: 0.1,
            path_loss_linear: 2.5e13,
        };
        let step = 0.0005;
        let grid: Vec<f64> = (-600..=600).map(|i| 0.1 + i as f64 * step).collect();
        let mut previous = 0.0;
        for b in [0.0, 0.025, 0.05, 0.1] {
            let w = rslnr_precoder(&[est], b, &cfg).unwrap();
            let col = w.matrix.column(0).to_owned();
            let gains: Vec<f64> = grid.iter().map(|&g| beam_gain_at(&col, g, &cfg)).collect();
            let peak = gains.iter().cloned().fold(0.0, f64::max);
            let half = peak / 2f64.sqrt();
            let count = gains.iter().filter(|&&g| g >= half).count();
            let width = count as f64 * step;
            assert!(
                width >= previous - 1e-12,
                "width {width} shrank below {previous} at B={b}"
            );
            previous = width;
        }
    }

    #[test]
    fn comparable_to_mmse_for_perfect_knowledge() {
        // K=2, N=4, B=0, well-separated users: the robust precoder should be
        // within 10% of the MMSE sum rate on the same realization.
        let mut cfg = small_cfg(4);
        cfg.num_users = 2;
        cfg.mean_user_distance_m = 150e3;
        cfg.fading_std_db = 0.0;
        cfg.position_jitter = false;
        let mut rng = seeded_rng(109);
        let realization = crate::channel::sample_realization(&cfg, &mut rng);
        let w_mmse = crate::mmse::mmse_precoder(
            &realization.estimated_channel,
            cfg.transmit_power_w,
            cfg.noise_power_w,
        )
        .unwrap();
        let w_rslnr = rslnr_from_realization(&realization, &cfg).unwrap();
        let r_mmse = sum_rate(&realization.true_channel, &w_mmse, cfg.noise_power_w).sum_rate;
        let r_rslnr = sum_rate(&realization.true_channel, &w_rslnr, cfg.noise_power_w).sum_rate;
        assert!(
            (r_rslnr - r_mmse).abs() / r_mmse < 0.10,
            "rslnr {r_rslnr} vs mmse {r_mmse}"
        );
    }
}
