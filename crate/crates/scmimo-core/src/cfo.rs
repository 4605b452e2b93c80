//! Carrier-frequency-offset estimation: the closed-form error variance of
//! the block-correlation estimator, the waveform-level estimator itself, and
//! the analytic residual-CFO draw used to bypass waveform estimation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::frame::RxFrame;

/// Closed-form (large-sample) variance of the block-correlation CFO
/// estimate for one user:
///
/// `sigma2 = (1/gamma) * (g/(b-1) + 1/(2*k*gamma))
///           / (m * (n - k*l) * (k*l)^2 * g^2)`
///
/// where `b = ceil(n/(k*l))` is the number of correlation blocks, `gamma` the
/// user's receive SNR and `g` its realized array gain (1 in expectation).
/// The first term is signal-by-noise mixing at the two block edges that
/// survive the telescoping correlation sum; the second is noise-by-noise
/// mixing.
pub fn mse_cfo(
    gamma: f64,
    m: usize,
    n: usize,
    k_users: usize,
    l_taps: usize,
    g: f64,
) -> Result<f64> {
    if m == 0 || k_users == 0 || l_taps == 0 {
        return Err(Error::Domain(
            "antenna, user and tap counts must be positive".into(),
        ));
    }
    let kl = k_users * l_taps;
    if n <= kl {
        return Err(Error::Domain(format!(
            "CFO slot of {n} samples holds fewer than two blocks of {kl}"
        )));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Domain(format!(
            "receive SNR must be positive, got {gamma}"
        )));
    }
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Domain(format!(
            "array gain must be positive, got {g}"
        )));
    }
    let b = n.div_ceil(kl) as f64;
    let kl = kl as f64;
    let numerator = (g / (b - 1.0) + 1.0 / (2.0 * k_users as f64 * gamma)) / gamma;
    let denominator = m as f64 * (n as f64 - kl) * kl * kl * g * g;
    Ok(numerator / denominator)
}

/// Residual-CFO variance used by the analytic pipeline: the closed form at
/// the user's configured receive SNR with unit array gain.
pub fn analytic_residual_variance(cfg: &SystemConfig, user: usize) -> Result<f64> {
    mse_cfo(cfg.gamma(user), cfg.m, cfg.n, cfg.k, cfg.l, 1.0)
}

/// Estimate every user's CFO from a received CFO-estimation slot.
///
/// For user `u`, the single impulse per block puts its `l`-tap channel
/// response at `[block*k*l + u*l, block*k*l + u*l + l)`. Corresponding
/// samples one block apart differ by the rotation `exp(j*omega_u*k*l)`, so
/// the estimate is the argument of the correlation sum over all antennas,
/// taps and adjacent full-block pairs, divided by the block length:
///
/// `omega_hat_u = arg( sum_{a,tap,block} r_a[t + k*l] * conj(r_a[t]) ) / (k*l)`.
///
/// Unambiguous while `|omega| * k * l <= pi`; the configuration bound keeps
/// it well inside that. An exactly zero correlation sum is reported as
/// [`Error::Degenerate`].
pub fn estimate_cfo_full(rx: &RxFrame, cfg: &SystemConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if rx.len() != cfg.n || rx.m() != cfg.m {
        return Err(Error::Dimension(format!(
            "received slot is {}x{}, config expects {}x{}",
            rx.m(),
            rx.len(),
            cfg.m,
            cfg.n
        )));
    }
    let kl = cfg.k * cfg.l;
    let full_blocks = cfg.n / kl;
    let mut estimates = Vec::with_capacity(cfg.k);
    for user in 0..cfg.k {
        let mut corr = Complex64::default();
        for antenna in 0..cfg.m {
            let row = rx.row(antenna);
            for block in 0..full_blocks - 1 {
                let base = block * kl + user * cfg.l;
                for tap in 0..cfg.l {
                    corr += row[base + kl + tap] * row[base + tap].conj();
                }
            }
        }
        if corr == Complex64::default() {
            return Err(Error::Degenerate(format!(
                "zero correlation sum for user {user}; no signal in the CFO slot"
            )));
        }
        estimates.push(corr.arg() / kl as f64);
    }
    Ok(estimates)
}

/// Analytic-mode replacement for waveform estimation: perturb each true CFO
/// with an independent Gaussian error of the given variance.
pub fn draw_residual_cfo<R: Rng>(
    omegas: &[f64],
    sigma2_omega: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if omegas.len() != sigma2_omega.len() {
        return Err(Error::Dimension(format!(
            "{} CFOs with {} error variances",
            omegas.len(),
            sigma2_omega.len()
        )));
    }
    omegas
        .iter()
        .zip(sigma2_omega)
        .map(|(&w, &v)| {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "residual variance must be non-negative, got {v}"
                )));
            }
            let e: f64 = StandardNormal.sample(rng);
            Ok(w + e * v.sqrt())
        })
        .collect()
}
