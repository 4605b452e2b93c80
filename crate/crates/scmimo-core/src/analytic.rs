//! Closed-form performance model: per-component detector-output variances,
//! the per-symbol SINR, the per-user information rate, required-SNR solvers,
//! and the large-array SNR-gap asymptotics.
//!
//! All quantities are evaluated at a *receive SNR* `gamma` (the per-user
//! value `p_u * theta / sigma2`), which is the single knob the solvers vary.

use crate::cfo::mse_cfo;
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Search bracket (dB) and termination tolerance for all SNR solvers.
const GAMMA_DB_MIN: f64 = -60.0;
const GAMMA_DB_MAX: f64 = 60.0;
const GAMMA_DB_TOL: f64 = 1e-3;
/// Points in the monotonicity pre-scan run before each bisection.
const PRESCAN_POINTS: usize = 20;

/// How the residual CFO entering the SINR model is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Residual-CFO variance from the closed-form estimator error at the
    /// evaluated SNR (unit array gain).
    Residual,
    /// Perfect synchronization: zero residual CFO.
    ZeroCfo,
}

/// Variances of the five detector-output components for one user and symbol
/// time, per symbol of unit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentVariances {
    /// Deterministic effective signal: `m^2 p_u theta^2 exp(-s2w tau^2)`.
    pub es: f64,
    /// Gain fluctuation:
    /// `m^2 p_u theta^2 (1 - exp(-s2w tau^2)) + m p_u sum_l sigma^4`.
    pub sif: f64,
    /// Intersymbol interference: `m p_u (theta^2 - sum_l sigma^4)`.
    pub isi: f64,
    /// Multi-user interference: `m p_u theta_k sum_{q != k} theta_q`.
    pub mui: f64,
    /// Receiver + channel-estimation noise:
    /// `m sigma2 sum_q theta_q / k + m sigma2^2 / (k p_u) + m sigma2 theta_k`.
    pub en: f64,
}

impl ComponentVariances {
    /// SINR implied by the table: `es / (sif + isi + mui + en)`.
    pub fn sinr(&self) -> f64 {
        self.es / (self.sif + self.isi + self.mui + self.en)
    }
}

/// Evaluate the component-variance table for `user` at symbol time `t` with
/// the given residual-CFO variance.
pub fn component_variances(
    cfg: &SystemConfig,
    user: usize,
    t: usize,
    sigma2_omega: f64,
) -> ComponentVariances {
    let m = cfg.m as f64;
    let k = cfg.k as f64;
    let theta = cfg.theta(user);
    let sum_sq = cfg.pdp.sum_sq(user);
    let theta_total: f64 = (0..cfg.k).map(|q| cfg.theta(q)).sum();
    let tau = cfg.tau(user, t);
    let fade = (-sigma2_omega * tau * tau).exp();

    ComponentVariances {
        es: m * m * cfg.p_u * theta * theta * fade,
        sif: m * m * cfg.p_u * theta * theta * (1.0 - fade) + m * cfg.p_u * sum_sq,
        isi: m * cfg.p_u * (theta * theta - sum_sq),
        mui: m * cfg.p_u * theta * (theta_total - theta),
        en: m * cfg.sigma2 * theta_total / k
            + m * cfg.sigma2 * cfg.sigma2 / (k * cfg.p_u)
            + m * cfg.sigma2 * theta,
    }
}

/// Per-symbol SINR in closed form:
///
/// `sinr = exp(-s2w tau^2) / ( (1 - exp(-s2w tau^2)) + 1/(m k gamma^2)
///         + c1/(m gamma) + c2/m )`.
///
/// Identical to [`ComponentVariances::sinr`] with
/// `c1 = 1 + sum_q theta_q / (k theta)` and
/// `c2 = 1 + sum_{q != k} theta_q / theta`.
pub fn sinr_model(
    gamma: f64,
    sigma2_omega: f64,
    tau: f64,
    m: usize,
    k_users: usize,
    c1: f64,
    c2: f64,
) -> f64 {
    let m = m as f64;
    let k = k_users as f64;
    let fade = (-sigma2_omega * tau * tau).exp();
    fade / ((1.0 - fade) + 1.0 / (m * k * gamma * gamma) + c1 / (m * gamma) + c2 / m)
}

/// Residual-CFO variance used by the SINR model at receive SNR `gamma`.
pub fn residual_variance_for(cfg: &SystemConfig, gamma: f64, mode: RateMode) -> Result<f64> {
    match mode {
        RateMode::Residual => mse_cfo(gamma, cfg.m, cfg.n, cfg.k, cfg.l, 1.0),
        RateMode::ZeroCfo => Ok(0.0),
    }
}

/// Per-symbol SINR of `user` at time `t`, evaluated at receive SNR `gamma`.
pub fn sinr_at(
    cfg: &SystemConfig,
    user: usize,
    t: usize,
    gamma: f64,
    mode: RateMode,
) -> Result<f64> {
    let s2w = residual_variance_for(cfg, gamma, mode)?;
    Ok(sinr_model(
        gamma,
        s2w,
        cfg.tau(user, t),
        cfg.m,
        cfg.k,
        cfg.c1(user),
        cfg.c2(user),
    ))
}

/// Information rate of `user` at receive SNR `gamma`:
/// `(1/n_u) * sum_{t=data_start}^{data_end} log2(1 + sinr(t))`.
pub fn rate_for_gamma(cfg: &SystemConfig, user: usize, gamma: f64, mode: RateMode) -> Result<f64> {
    let frame = cfg.validate()?;
    let s2w = residual_variance_for(cfg, gamma, mode)?;
    let (c1, c2) = (cfg.c1(user), cfg.c2(user));
    let mut bits = 0.0;
    for t in frame.data_start..=frame.data_end {
        let s = sinr_model(gamma, s2w, cfg.tau(user, t), cfg.m, cfg.k, c1, c2);
        bits += (1.0 + s).log2();
    }
    Ok(bits / cfg.n_u as f64)
}

/// Per-symbol SINR profile and rate of `user` at the configured power.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrProfile {
    pub user: usize,
    pub mode: RateMode,
    /// Receive SNR the profile was evaluated at (linear).
    pub gamma: f64,
    /// Residual-CFO variance entering the model.
    pub sigma2_omega: f64,
    pub data_start: usize,
    pub data_end: usize,
    /// SINR at each `t` in `[data_start, data_end]`.
    pub sinr: Vec<f64>,
    /// `(1/n_u) * sum_t log2(1 + sinr[t])`.
    pub rate_bpcu: f64,
}

/// Evaluate the SINR profile of `user` at the configured transmit power.
pub fn rate_profile(cfg: &SystemConfig, user: usize, mode: RateMode) -> Result<SinrProfile> {
    let frame = cfg.validate()?;
    let gamma = cfg.gamma(user);
    let s2w = residual_variance_for(cfg, gamma, mode)?;
    let (c1, c2) = (cfg.c1(user), cfg.c2(user));
    let mut sinr = Vec::with_capacity(frame.n_d);
    let mut bits = 0.0;
    for t in frame.data_start..=frame.data_end {
        let s = sinr_model(gamma, s2w, cfg.tau(user, t), cfg.m, cfg.k, c1, c2);
        sinr.push(s);
        bits += (1.0 + s).log2();
    }
    Ok(SinrProfile {
        user,
        mode,
        gamma,
        sigma2_omega: s2w,
        data_start: frame.data_start,
        data_end: frame.data_end,
        sinr,
        rate_bpcu: bits / cfg.n_u as f64,
    })
}

/// Information rate of `user` at the configured transmit power.
pub fn rate(cfg: &SystemConfig, user: usize, mode: RateMode) -> Result<f64> {
    rate_for_gamma(cfg, user, cfg.gamma(user), mode)
}

/// Smallest receive SNR (dB) at which `user` reaches `target_bpcu`.
///
/// Bisection over `[-60, 60]` dB to 0.001 dB after a 20-point monotonicity
/// pre-scan. A target already met at the bracket floor reports the floor; a
/// target not met at the ceiling is [`Error::Unachievable`].
pub fn min_snr_for_rate(
    cfg: &SystemConfig,
    user: usize,
    target_bpcu: f64,
    mode: RateMode,
) -> Result<f64> {
    bisect_gamma_db(
        |gamma| rate_for_gamma(cfg, user, gamma, mode),
        target_bpcu,
        "rate target (bpcu)",
    )
}

/// Smallest receive SNR (dB) at which `user`'s SINR at symbol time `t`
/// reaches `target_sinr` (linear). Same bracket and tolerance as
/// [`min_snr_for_rate`].
pub fn min_snr_for_sinr_at(
    cfg: &SystemConfig,
    user: usize,
    t: usize,
    target_sinr: f64,
    mode: RateMode,
) -> Result<f64> {
    bisect_gamma_db(
        |gamma| sinr_at(cfg, user, t, gamma, mode),
        target_sinr,
        "SINR target",
    )
}

fn bisect_gamma_db(eval: impl Fn(f64) -> Result<f64>, target: f64, what: &str) -> Result<f64> {
    let at_db = |db: f64| eval(10f64.powf(db / 10.0));

    // Monotonicity pre-scan: the bisection is only meaningful on an
    // objective that does not decrease with SNR.
    let mut prev = f64::NEG_INFINITY;
    for i in 0..PRESCAN_POINTS {
        let db =
            GAMMA_DB_MIN + (GAMMA_DB_MAX - GAMMA_DB_MIN) * i as f64 / (PRESCAN_POINTS - 1) as f64;
        let value = at_db(db)?;
        if value < prev - 1e-12 {
            return Err(Error::Domain(format!(
                "objective is not monotone in SNR near {db:.1} dB; cannot bisect"
            )));
        }
        prev = value;
    }

    if at_db(GAMMA_DB_MIN)? >= target {
        // Already met at the bracket floor; report the floor.
        return Ok(GAMMA_DB_MIN);
    }
    if at_db(GAMMA_DB_MAX)? < target {
        return Err(Error::Unachievable(format!(
            "{what} {target} not reached at {GAMMA_DB_MAX} dB"
        )));
    }
    let (mut lo, mut hi) = (GAMMA_DB_MIN, GAMMA_DB_MAX);
    while hi - lo > GAMMA_DB_TOL {
        let mid = 0.5 * (lo + hi);
        if at_db(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Quadratic phase-error coefficient of `user` at symbol time `t`:
/// `alpha = tau^2 / (2 (n - k*l) (k*l)^2)` with `tau = t - user*l`. In the
/// large-array limit the required-SNR penalty of residual CFO at fixed `t`
/// is `5*log10(1 + alpha)` dB.
pub fn alpha(cfg: &SystemConfig, user: usize, t: usize) -> f64 {
    let tau = cfg.tau(user, t);
    let kl = (cfg.k * cfg.l) as f64;
    tau * tau / (2.0 * (cfg.n as f64 - kl) * kl * kl)
}

/// Large-array SINR-denominator floor `1 / (m k gamma^2)`.
pub fn theta_limit(m: usize, k_users: usize, gamma: f64) -> f64 {
    1.0 / (m as f64 * k_users as f64 * gamma * gamma)
}

/// Large-array, large-rate SNR gap (dB) between residual-CFO and perfectly
/// synchronized operation at fixed symbol time: `5 * log10(1 + alpha)`.
pub fn asymptotic_gap_db(alpha: f64) -> f64 {
    5.0 * (1.0 + alpha).log10()
}

/// Large-array denominator floor `theta` reached under residual CFO at a
/// per-use rate target `r` (bits per channel use): the unique root of
///
/// `(1 + theta) * (1 - 2^-r) = exp(-alpha * theta)`
///
/// in `(0, theta0]`, where `theta0 = 1/(2^r - 1)` is the floor without CFO.
pub fn asymptotic_theta(r_bits_per_use: f64, alpha: f64) -> Result<f64> {
    if !(r_bits_per_use > 0.0 && r_bits_per_use.is_finite()) {
        return Err(Error::Domain(format!(
            "per-use rate must be positive, got {r_bits_per_use}"
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!(
            "phase-error coefficient must be non-negative, got {alpha}"
        )));
    }
    let loss = 1.0 - (-r_bits_per_use * std::f64::consts::LN_2).exp(); // 1 - 2^-r
    let theta0 = 1.0 / (2f64.powf(r_bits_per_use) - 1.0);
    // g(theta) = (1+theta)*loss - exp(-alpha*theta): g(0) < 0 <= g(theta0),
    // strictly increasing.
    let g = |theta: f64| (1.0 + theta) * loss - (-alpha * theta).exp();
    let (mut lo, mut hi) = (0.0, theta0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON * theta0 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact large-array SNR gap (dB) at per-use rate target `r`:
/// `5 * log10(theta0 / theta)` with `theta` from [`asymptotic_theta`].
/// Approaches [`asymptotic_gap_db`] as `r` grows.
pub fn exact_asymptotic_gap_db(r_bits_per_use: f64, alpha: f64) -> Result<f64> {
    let theta0 = 1.0 / (2f64.powf(r_bits_per_use) - 1.0);
    let theta = asymptotic_theta(r_bits_per_use, alpha)?;
    Ok(5.0 * (theta0 / theta).log10())
}

/// Required-SNR comparison between residual-CFO and perfectly synchronized
/// operation for one user and rate target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// Receive SNR (dB) required under residual CFO.
    pub gamma_required_db: f64,
    /// Receive SNR (dB) required with perfect synchronization.
    pub gamma0_required_db: f64,
    /// `gamma_required_db - gamma0_required_db`.
    pub gap_db: f64,
    /// Phase-error coefficient at the user's final (worst-case) data symbol.
    pub alpha_kt: f64,
    /// Denominator floor `1/(m k gamma^2)` at the residual-CFO requirement.
    pub theta_limit: f64,
}

/// Solve both required SNRs for `user` at `target_bpcu` and report the gap.
pub fn snr_gap_db(cfg: &SystemConfig, user: usize, target_bpcu: f64) -> Result<GapReport> {
    let frame = cfg.validate()?;
    let gamma_required_db = min_snr_for_rate(cfg, user, target_bpcu, RateMode::Residual)?;
    let gamma0_required_db = min_snr_for_rate(cfg, user, target_bpcu, RateMode::ZeroCfo)?;
    let gamma_required = 10f64.powf(gamma_required_db / 10.0);
    Ok(GapReport {
        gamma_required_db,
        gamma0_required_db,
        gap_db: gamma_required_db - gamma0_required_db,
        alpha_kt: alpha(cfg, user, frame.data_end),
        theta_limit: theta_limit(cfg.m, cfg.k, gamma_required),
    })
}
