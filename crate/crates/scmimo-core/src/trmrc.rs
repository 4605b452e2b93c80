//! Time-reversal maximum-ratio combining detection and its exact
//! decomposition into effective-signal, self-interference-fluctuation,
//! intersymbol-interference, multi-user-interference and noise parts.
//!
//! The detector output for user `k` at symbol time `t` is
//!
//! `x_hat_k[t] = sum_{a,tap} conj(h_hat_{a,k}[tap]) * r_a[t + tap] *
//!               exp(-j*omega_hat_k*(t + tap))`.
//!
//! Substituting the received-signal model and the channel-estimate model
//! splits this exactly as `x_hat = A*s + isi + mui + en`, where with
//! `delta_k = omega_hat_k - omega_k` and `tau = t - k*l` (age since user k's
//! training pilot):
//!
//! * `A_k[t] = sqrt(p_u) * exp(-j*delta_k*tau) * sum_{a,tap} |h_{a,k}[tap]|^2`
//!   is the coherent array gain; its mean over the channel and residual-CFO
//!   ensembles is `sqrt(p_u) * m * theta_k * exp(-sigma2_omega * tau^2 / 2)`;
//! * `es = mean(A) * s_k[t]` and `sif = (A - mean(A)) * s_k[t]` split the
//!   useful term into a deterministic part and its fluctuation;
//! * `isi` collects same-user cross-tap products (`tap != tap'`), all rotated
//!   by the common factor `exp(-j*delta_k*tau)`;
//! * `mui` collects other users' symbols seen through user k's matched
//!   filter, rotated by `exp(j*(omega_q - omega_hat_k)*(t + tap))`;
//! * `en` is the remainder: receiver noise and channel-estimation noise mixed
//!   with everything.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::frame::{RxFrame, TxFrame};

/// Everything the decomposition needs to attribute each part of the detector
/// output to its source.
#[derive(Debug, Clone, Copy)]
pub struct DetectionContext<'a> {
    /// Transmitted uplink slot (normalized symbols).
    pub tx: &'a TxFrame,
    /// Received uplink slot.
    pub rx: &'a RxFrame,
    /// True channel taps.
    pub channel: &'a ChannelRealization,
    /// Estimated channel taps (as used by the detector).
    pub estimate: &'a ChannelRealization,
    /// True per-user CFOs.
    pub omegas: &'a [f64],
    /// Estimated per-user CFOs (as used by the detector).
    pub omega_hat: &'a [f64],
    /// Residual-CFO variances defining the deterministic effective-signal
    /// gain `mean(A)`.
    pub sigma2_omega: &'a [f64],
    pub cfg: &'a SystemConfig,
}

/// One detected symbol split into its exact components;
/// `es + sif + isi + mui + en == x_hat` by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    /// Deterministic effective signal `mean(A) * s`.
    pub es: Complex64,
    /// Self-interference fluctuation `(A - mean(A)) * s`.
    pub sif: Complex64,
    /// Same-user intersymbol interference.
    pub isi: Complex64,
    /// Multi-user interference.
    pub mui: Complex64,
    /// Receiver and channel-estimation noise contributions.
    pub en: Complex64,
    /// Full detector output.
    pub x_hat: Complex64,
}

impl Decomposition {
    /// Sum of the five components (equals `x_hat` up to rounding).
    pub fn reassembled(&self) -> Complex64 {
        self.es + self.sif + self.isi + self.mui + self.en
    }
}

/// Run the detector for every user at symbol time `t`.
pub fn detect(
    rx: &RxFrame,
    estimate: &ChannelRealization,
    omega_hat: &[f64],
    cfg: &SystemConfig,
    t: usize,
) -> Result<Vec<Complex64>> {
    check_shapes(rx, estimate, omega_hat, cfg, t)?;
    Ok((0..cfg.k)
        .map(|user| detect_one(rx, estimate, omega_hat[user], cfg, user, t))
        .collect())
}

fn detect_one(
    rx: &RxFrame,
    estimate: &ChannelRealization,
    omega_hat: f64,
    cfg: &SystemConfig,
    user: usize,
    t: usize,
) -> Complex64 {
    let mut acc = Complex64::default();
    for antenna in 0..cfg.m {
        let taps = estimate.taps(antenna, user);
        let row = rx.row(antenna);
        for (tap, &h_hat) in taps.iter().enumerate() {
            let derotate = Complex64::from_polar(1.0, -omega_hat * (t + tap) as f64);
            acc += h_hat.conj() * row[t + tap] * derotate;
        }
    }
    acc
}

/// Decompose the detector output of `user` at symbol time `t`.
pub fn decompose(ctx: &DetectionContext<'_>, user: usize, t: usize) -> Result<Decomposition> {
    let cfg = ctx.cfg;
    check_shapes(ctx.rx, ctx.estimate, ctx.omega_hat, cfg, t)?;
    if ctx.tx.k_users() != cfg.k || ctx.tx.len() != ctx.rx.len() {
        return Err(Error::Dimension(format!(
            "transmit slot is {}x{}, received slot is {}x{}",
            ctx.tx.k_users(),
            ctx.tx.len(),
            ctx.rx.m(),
            ctx.rx.len()
        )));
    }
    if ctx.channel.m() != cfg.m
        || ctx.channel.k_users() != cfg.k
        || ctx.channel.l_taps() != cfg.l
        || ctx.omegas.len() != cfg.k
        || ctx.sigma2_omega.len() != cfg.k
    {
        return Err(Error::Dimension(
            "true channel/CFO arrays do not match the configuration".into(),
        ));
    }
    if user >= cfg.k {
        return Err(Error::Dimension(format!(
            "user index {user} out of range for {} users",
            cfg.k
        )));
    }

    let sqrt_pu = cfg.p_u.sqrt();
    let delta = ctx.omega_hat[user] - ctx.omegas[user];
    let tau = cfg.tau(user, t);
    let s_t = ctx.tx.s(user, t);

    // Coherent array gain A and its ensemble mean.
    let realized_power: f64 = (0..cfg.m)
        .map(|a| {
            ctx.channel
                .taps(a, user)
                .iter()
                .map(|h| h.norm_sqr())
                .sum::<f64>()
        })
        .sum();
    let a_gain = sqrt_pu * realized_power * Complex64::from_polar(1.0, -delta * tau);
    let mean_gain = sqrt_pu
        * cfg.m as f64
        * cfg.theta(user)
        * (-ctx.sigma2_omega[user] * tau * tau / 2.0).exp();

    let es = mean_gain * s_t;
    let sif = a_gain * s_t - es;

    // Same-user cross-tap leakage, common rotation exp(-j*delta*tau).
    let mut isi = Complex64::default();
    for antenna in 0..cfg.m {
        let taps = ctx.channel.taps(antenna, user);
        for (tap, &h1) in taps.iter().enumerate() {
            for (tap2, &h2) in taps.iter().enumerate() {
                if tap != tap2 {
                    isi += h1.conj() * h2 * ctx.tx.s_at(user, t as i64 + tap as i64 - tap2 as i64);
                }
            }
        }
    }
    isi *= sqrt_pu * Complex64::from_polar(1.0, -delta * tau);

    // Other users through user k's matched filter. The channel-estimate
    // conjugate contributes exp(j*delta_k*(k*l + tap)); the carrier mismatch
    // contributes exp(j*(omega_q - omega_hat_k)*(t + tap)).
    let mut mui = Complex64::default();
    for q in 0..cfg.k {
        if q == user {
            continue;
        }
        let carrier = ctx.omegas[q] - ctx.omega_hat[user];
        for antenna in 0..cfg.m {
            let own = ctx.channel.taps(antenna, user);
            let other = ctx.channel.taps(antenna, q);
            for (tap, &hk) in own.iter().enumerate() {
                let phase = Complex64::from_polar(
                    1.0,
                    delta * (user * cfg.l + tap) as f64 + carrier * (t + tap) as f64,
                );
                for (tap2, &hq) in other.iter().enumerate() {
                    mui += hk.conj()
                        * hq
                        * phase
                        * ctx.tx.s_at(q, t as i64 + tap as i64 - tap2 as i64);
                }
            }
        }
    }
    mui *= sqrt_pu;

    let x_hat = detect_one(ctx.rx, ctx.estimate, ctx.omega_hat[user], cfg, user, t);
    let en = x_hat - a_gain * s_t - isi - mui;

    Ok(Decomposition {
        es,
        sif,
        isi,
        mui,
        en,
        x_hat,
    })
}

fn check_shapes(
    rx: &RxFrame,
    estimate: &ChannelRealization,
    omega_hat: &[f64],
    cfg: &SystemConfig,
    t: usize,
) -> Result<()> {
    if estimate.m() != cfg.m || estimate.k_users() != cfg.k || estimate.l_taps() != cfg.l {
        return Err(Error::Dimension(format!(
            "channel estimate is {}x{}x{}, config expects {}x{}x{}",
            estimate.m(),
            estimate.k_users(),
            estimate.l_taps(),
            cfg.m,
            cfg.k,
            cfg.l
        )));
    }
    if rx.m() != cfg.m {
        return Err(Error::Dimension(format!(
            "received slot has {} antennas, config expects {}",
            rx.m(),
            cfg.m
        )));
    }
    if omega_hat.len() != cfg.k {
        return Err(Error::Dimension(format!(
            "{} CFO estimates for {} users",
            omega_hat.len(),
            cfg.k
        )));
    }
    if t + cfg.l > rx.len() {
        return Err(Error::Timeline(format!(
            "detection at t={t} needs samples through t+{}, slot holds {}",
            cfg.l - 1,
            rx.len()
        )));
    }
    Ok(())
}
