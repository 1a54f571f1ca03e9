//! Link-quality metrics: SINR, SLNR, sum rate, and beam-gain patterns.
//!
//! Everything here is a pure function of a true channel matrix `H` (K x N,
//! row per user) and a precoding matrix `W` (N x K, column per user). The
//! K x K product `G = H W` carries all coupling: SINR reads interference
//! along row k, SLNR reads leakage down column k.

use crate::config::ScenarioConfig;
use crate::{channel, C64};
use ndarray::{Array1, Array2};

/// Precoding matrix with its power budget.
///
/// Column `k` is user `k`'s precoding vector. Producers normalize so that
/// the squared Frobenius norm equals the budget; consumers only rely on the
/// budget as an upper bound (1e-9 relative slack for rounding).
#[derive(Debug, Clone)]
pub struct PrecodingMatrix {
    /// N x K complex precoder.
    pub matrix: Array2<C64>,
    /// Transmit power budget, watts.
    pub power_budget: f64,
}

impl PrecodingMatrix {
    /// Wrap a precoder, asserting the power budget is respected.
    pub fn new(matrix: Array2<C64>, power_budget: f64) -> Self {
        let got = frobenius_norm_sq(&matrix);
        assert!(
            got <= power_budget * (1.0 + 1e-9),
            "precoder power {got} exceeds budget {power_budget}"
        );
        Self {
            matrix,
            power_budget,
        }
    }

    /// Number of transmit antennas (rows).
    pub fn num_antennas(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of users (columns).
    pub fn num_users(&self) -> usize {
        self.matrix.ncols()
    }

    /// Squared Frobenius norm, i.e. total transmit power actually used.
    pub fn power_used(&self) -> f64 {
        frobenius_norm_sq(&self.matrix)
    }
}

/// Per-user SINRs, rates, and their sum for one realization.
#[derive(Debug, Clone)]
pub struct RateReport {
    /// Linear SINR per user.
    pub per_user_sinr: Vec<f64>,
    /// Achievable rate per user, bit/s/Hz.
    pub per_user_rate: Vec<f64>,
    /// Sum rate, bit/s/Hz.
    pub sum_rate: f64,
}

fn frobenius_norm_sq(m: &Array2<C64>) -> f64 {
    m.iter().map(|e| e.norm_sqr()).sum()
}

/// `G = H W`: entry (k, l) is the complex gain from user l's stream into
/// user k's receiver.
fn coupling_matrix(h: &Array2<C64>, w: &PrecodingMatrix) -> Array2<C64> {
    assert_eq!(
        h.ncols(),
        w.num_antennas(),
        "channel has {} antennas, precoder {}",
        h.ncols(),
        w.num_antennas()
    );
    assert_eq!(
        h.nrows(),
        w.num_users(),
        "channel has {} users, precoder {}",
        h.nrows(),
        w.num_users()
    );
    h.dot(&w.matrix)
}

/// Per-user SINR: signal over noise plus interference received by user k
/// from the other users' streams.
pub fn sinr(h: &Array2<C64>, w: &PrecodingMatrix, noise_power: f64) -> Vec<f64> {
    assert!(noise_power > 0.0, "noise power must be positive");
    let g = coupling_matrix(h, w);
    let k_total = h.nrows();
    (0..k_total)
        .map(|k| {
            let signal = g[(k, k)].norm_sqr();
            let interference: f64 = (0..k_total)
                .filter(|&l| l != k)
                .map(|l| g[(k, l)].norm_sqr())
                .sum();
            signal / (noise_power + interference)
        })
        .collect()
}

/// Per-user SLNR: signal over noise plus the power user k's stream leaks
/// into the other users' receivers.
pub fn slnr(h: &Array2<C64>, w: &PrecodingMatrix, noise_power: f64) -> Vec<f64> {
    assert!(noise_power > 0.0, "noise power must be positive");
    let g = coupling_matrix(h, w);
    let k_total = h.nrows();
    (0..k_total)
        .map(|k| {
            let signal = g[(k, k)].norm_sqr();
            let leakage: f64 = (0..k_total)
                .filter(|&l| l != k)
                .map(|l| g[(l, k)].norm_sqr())
                .sum();
            signal / (noise_power + leakage)
        })
        .collect()
}

/// Sum rate `R = sum_k log2(1 + SINR_k)` with the per-user breakdown.
pub fn sum_rate(h: &Array2<C64>, w: &PrecodingMatrix, noise_power: f64) -> RateReport {
    let per_user_sinr = sinr(h, w, noise_power);
    let per_user_rate: Vec<f64> = per_user_sinr.iter().map(|g| (1.0 + g).log2()).collect();
    let sum_rate = per_user_rate.iter().sum();
    RateReport {
        per_user_sinr,
        per_user_rate,
        sum_rate,
    }
}

/// Beam-gain pattern `g_k(eps) = |v(cos eps) . w_k|` on a grid of departure
/// angles (radians), one row per user, linear scale.
///
/// Uses the unit-gain steering row only — no path loss or antenna gains — so
/// the pattern depends on the precoder and array geometry alone.
pub fn beam_pattern(
    w: &PrecodingMatrix,
    cfg: &ScenarioConfig,
    aod_grid_rad: &[f64],
) -> Array2<f64> {
    assert!(!aod_grid_rad.is_empty(), "angle grid must be nonempty");
    assert_eq!(w.num_antennas(), cfg.num_antennas);
    let mut gains = Array2::zeros((aod_grid_rad.len(), w.num_users()));
    for (j, &eps) in aod_grid_rad.iter().enumerate() {
        let v = channel::steering_vector(eps.cos(), cfg);
        for k in 0..w.num_users() {
            let dot: C64 = v
                .iter()
                .zip(w.matrix.column(k).iter())
                .map(|(a, b)| a * b)
                .sum();
            gains[(j, k)] = dot.norm();
        }
    }
    gains.reversed_axes()
}

/// Beam gain of a single precoding column at one space angle.
pub fn beam_gain_at(w_col: &Array1<C64>, space_angle: f64, cfg: &ScenarioConfig) -> f64 {
    let v = channel::steering_vector(space_angle, cfg);
    let dot: C64 = v.iter().zip(w_col.iter()).map(|(a, b)| a * b).sum();
    dot.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::seeded_rng;
    use ndarray::array;
    use rand::Rng;

    fn random_channel<R: Rng>(k: usize, n: usize, rng: &mut R) -> Array2<C64> {
        Array2::from_shape_fn((k, n), |_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn scaled_identity(k: usize, scale: f64, budget: f64) -> PrecodingMatrix {
        let mut m = Array2::zeros((k, k));
        for i in 0..k {
            m[(i, i)] = C64::new(scale, 0.0);
        }
        PrecodingMatrix::new(m, budget)
    }

    #[test]
    fn single_user_sinr_is_signal_over_noise() {
        let h = array![[C64::new(2.0, 0.0), C64::new(0.0, 1.0)]];
        let w = PrecodingMatrix::new(array![[C64::new(1.0, 0.0)], [C64::new(0.0, 0.0)]], 1.0);
        let g = sinr(&h, &w, 0.5);
        assert_eq!(g.len(), 1);
        // |h w|^2 / sigma^2 = 4 / 0.5.
        assert!((g[0] - 8.0).abs() < 1e-12);
        let l = slnr(&h, &w, 0.5);
        assert!((l[0] - g[0]).abs() < 1e-15);
    }

    #[test]
    fn zero_precoder_gives_zero_metrics() {
        let mut rng = seeded_rng(2);
        let h = random_channel(3, 8, &mut rng);
        let w = PrecodingMatrix::new(Array2::zeros((8, 3)), 1.0);
        assert!(sinr(&h, &w, 1e-3).iter().all(|&g| g == 0.0));
        assert!(slnr(&h, &w, 1e-3).iter().all(|&g| g == 0.0));
        assert_eq!(sum_rate(&h, &w, 1e-3).sum_rate, 0.0);
    }

    #[test]
    fn orthogonal_channels_identity_precoder() {
        // h_1 = (1,0), h_2 = (0,1), W = I sqrt(P/2), P = 2, sigma^2 = 1:
        // no coupling, so SINR = SLNR = (1, 1) and R = 2.
        let h = array![
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
        ];
        let w = scaled_identity(2, 1.0, 2.0);
        assert!((w.power_used() - 2.0).abs() < 1e-12);
        let g = sinr(&h, &w, 1.0);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        let l = slnr(&h, &w, 1.0);
        assert!((l[0] - 1.0).abs() < 1e-12 && (l[1] - 1.0).abs() < 1e-12);
        let report = sum_rate(&h, &w, 1.0);
        assert!((report.sum_rate - 2.0).abs() < 1e-12);
        assert_eq!(report.per_user_rate.len(), 2);
    }

    #[test]
    fn interference_and_leakage_totals_agree() {
        // Both metrics partition the same off-diagonal couplings, so the
        // totals match on any instance: sum_k (signal/SINR - noise) equals
        // sum_k (signal/SLNR - noise).
        let mut rng = seeded_rng(17);
        for _ in 0..20 {
            let h = random_channel(3, 6, &mut rng);
            let w = PrecodingMatrix::new(random_channel(3, 6, &mut rng).reversed_axes(), 1e9);
            let noise = 0.01;
            let g = sinr(&h, &w, noise);
            let l = slnr(&h, &w, noise);
            let coupling = h.dot(&w.matrix);
            let interference: f64 = (0..3)
                .map(|k| coupling[(k, k)].norm_sqr() / g[k] - noise)
                .sum();
            let leakage: f64 = (0..3)
                .map(|k| coupling[(k, k)].norm_sqr() / l[k] - noise)
                .sum();
            assert!((interference - leakage).abs() / interference.abs().max(1e-30) < 1e-9);
        }
    }

    #[test]
    fn sum_rate_increases_with_power_scale() {
        let mut rng = seeded_rng(23);
        for _ in 0..10 {
            let h = random_channel(3, 6, &mut rng);
            let base = random_channel(3, 6, &mut rng).reversed_axes();
            let mut previous = 0.0;
            for c in [0.5, 1.0, 2.0, 4.0] {
                let w = PrecodingMatrix::new(&base * C64::new(c, 0.0), 1e12);
                let r = sum_rate(&h, &w, 1.0).sum_rate;
                assert!(r > previous, "rate must grow with power: {r} vs {previous}");
                previous = r;
            }
        }
    }

    #[test]
    fn sum_rate_invariant_under_column_phase_rotation() {
        let mut rng = seeded_rng(29);
        let h = random_channel(3, 6, &mut rng);
        let base = random_channel(3, 6, &mut rng).reversed_axes();
        let reference = sum_rate(&h, &PrecodingMatrix::new(base.clone(), 1e9), 1.0).sum_rate;
        for phase in [0.3, 1.2, 2.9] {
            let mut rotated = base.clone();
            let c = C64::from_polar(1.0, phase);
            for e in rotated.column_mut(1).iter_mut() {
                *e *= c;
            }
            let r = sum_rate(&h, &PrecodingMatrix::new(rotated, 1e9), 1.0).sum_rate;
            assert!((r - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn matched_beam_peak_gain() {
        // w = conj(v(cos eps0)) / sqrt(N) * sqrt(P/K) makes every term add
        // coherently at eps0: gain sqrt(N) sqrt(P/K).
        let cfg = ScenarioConfig::default();
        let eps0: f64 = 1.4;
        let p = cfg.transmit_power_w;
        let k = 3.0;
        let scale = (p / k).sqrt() / (cfg.num_antennas as f64).sqrt();
        let v = channel::steering_vector(eps0.cos(), &cfg);
        let w_col: Array1<C64> = v.mapv(|e| e.conj() * scale);
        let gain = beam_gain_at(&w_col, eps0.cos(), &cfg);
        let expected = (cfg.num_antennas as f64).sqrt() * (p / k).sqrt();
        assert!((gain / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matched_beam_pattern_symmetric_in_space_angle() {
        // Gain depends on cos eps - cos eps0 only, so probing at mirrored
        // space angles gives equal gains.
        let cfg = ScenarioConfig::default();
        let phi0: f64 = 0.2;
        let v = channel::steering_vector(phi0, &cfg);
        let w_col: Array1<C64> = v.mapv(|e| e.conj() / (cfg.num_antennas as f64).sqrt());
        for offset in [0.01, 0.05, 0.13] {
            let plus = beam_gain_at(&w_col, phi0 + offset, &cfg);
            let minus = beam_gain_at(&w_col, phi0 - offset, &cfg);
            assert!((plus - minus).abs() < 1e-10);
        }
    }

    #[test]
    fn beam_pattern_grid_shape_and_consistency() {
        let cfg = ScenarioConfig::default();
        let mut rng = seeded_rng(31);
        let w = PrecodingMatrix::new(
            random_channel(cfg.num_users, cfg.num_antennas, &mut rng).reversed_axes(),
            1e9,
        );
        let grid: Vec<f64> = (0..50).map(|i| 0.5 + 0.04 * i as f64).collect();
        let pattern = beam_pattern(&w, &cfg, &grid);
        assert_eq!(pattern.shape(), &[cfg.num_users, grid.len()]);
        for (j, &eps) in grid.iter().enumerate() {
            for k in 0..cfg.num_users {
                let col: Array1<C64> = w.matrix.column(k).to_owned();
                let single = beam_gain_at(&col, eps.cos(), &cfg);
                assert!((pattern[(k, j)] - single).abs() < 1e-12);
            }
        }
        let zero = PrecodingMatrix::new(Array2::zeros((cfg.num_antennas, cfg.num_users)), 1.0);
        assert!(beam_pattern(&zero, &cfg, &grid).iter().all(|&g| g == 0.0));
    }

    #[test]
    #[should_panic(expected = "exceeds budget")]
    fn power_budget_violation_panics() {
        let _ = PrecodingMatrix::new(array![[C64::new(2.0, 0.0)]], 1.0);
    }
}
