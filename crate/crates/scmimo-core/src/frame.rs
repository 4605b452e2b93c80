//! Transmit-slot synthesis and waveform-level propagation.
//!
//! Two slot types exist:
//!
//! * **CFO-estimation slot** (`n` samples, blocks of `k*l`): user `u`
//!   transmits a single impulse per block at `t = b*k*l + u*l` with
//!   normalized amplitude `sqrt(k*l)` (unit average power over a block) and
//!   is silent otherwise. The `l`-tap channel response to that impulse
//!   occupies `[b*k*l + u*l, b*k*l + u*l + l)`, which never overlaps another
//!   user's response.
//! * **Uplink slot** (`n_u` samples): user `u` sends one channel-training
//!   impulse of amplitude `sqrt(k*l)` at `t = u*l` (silent through the rest
//!   of the `[0, k*l)` training window), then all users send a random
//!   preamble in `[k*l, k*l + l - 1)`, information symbols in
//!   `[data_start, data_end]`, and a random postamble over the final `l - 1`
//!   samples. Preamble, data and postamble are all unit-power
//!   circularly-symmetric complex Gaussian.
//!
//! Symbols are stored in normalized form `s`; the transmitted amplitude is
//! `sqrt(p_u) * s`, which [`propagate`] applies.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Which slot a [`TxFrame`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    CfoPilot,
    Uplink,
}

/// Normalized transmit symbols of every user over one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct TxFrame {
    kind: SlotKind,
    k_users: usize,
    len: usize,
    /// Row-major `k_users x len` normalized symbols.
    s: Vec<Complex64>,
}

impl TxFrame {
    pub fn new(kind: SlotKind, k_users: usize, len: usize, s: Vec<Complex64>) -> Result<Self> {
        if s.len() != k_users * len {
            return Err(Error::Dimension(format!(
                "symbol array holds {} entries, expected {k_users}x{len}",
                s.len()
            )));
        }
        Ok(Self {
            kind,
            k_users,
            len,
            s,
        })
    }

    pub fn kind(&self) -> SlotKind {
        self.kind
    }

    pub fn k_users(&self) -> usize {
        self.k_users
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Normalized symbol `s_user[t]`.
    #[inline]
    pub fn s(&self, user: usize, t: usize) -> Complex64 {
        self.s[user * self.len + t]
    }

    /// One user's whole normalized symbol stream.
    pub fn row(&self, user: usize) -> &[Complex64] {
        &self.s[user * self.len..(user + 1) * self.len]
    }

    /// Normalized symbol with signed index, zero outside the slot (indices
    /// outside `[0, len)` arise from convolution algebra).
    #[inline]
    pub fn s_at(&self, user: usize, t: i64) -> Complex64 {
        if t < 0 || t >= self.len as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.s(user, t as usize)
        }
    }

    /// Transmitted symbol `x_user[t] = sqrt(p_u) * s_user[t]`, zero outside
    /// the slot.
    #[inline]
    pub fn x(&self, p_u: f64, user: usize, t: i64) -> Complex64 {
        p_u.sqrt() * self.s_at(user, t)
    }
}

/// Build the CFO-estimation slot. Impulses are placed in every *full* block;
/// when `k*l` does not divide `n`, the trailing partial block stays silent
/// (every supported configuration has `k*l | n`, so this is a boundary rule,
/// not an operating mode).
pub fn build_cfo_pilot_frame(cfg: &SystemConfig) -> Result<TxFrame> {
    cfg.validate()?;
    let kl = cfg.k * cfg.l;
    let full_blocks = cfg.n / kl;
    let amp = Complex64::new((kl as f64).sqrt(), 0.0);
    let mut s = vec![Complex64::default(); cfg.k * cfg.n];
    for user in 0..cfg.k {
        for block in 0..full_blocks {
            s[user * cfg.n + block * kl + user * cfg.l] = amp;
        }
    }
    TxFrame::new(SlotKind::CfoPilot, cfg.k, cfg.n, s)
}

/// Draw the unit-power information symbols for one uplink slot:
/// `k x n_d` row-major complex Gaussians.
pub fn draw_data_symbols<R: Rng>(cfg: &SystemConfig, n_d: usize, rng: &mut R) -> Vec<Complex64> {
    draw_cn_unit(cfg.k * n_d, rng)
}

/// Build an uplink slot around the given information symbols
/// (`k x n_d` row-major, unit power). Preamble and postamble symbols are
/// drawn from `rng` with the same distribution as data.
pub fn build_ul_frame<R: Rng>(
    cfg: &SystemConfig,
    data: &[Complex64],
    rng: &mut R,
) -> Result<TxFrame> {
    let frame = cfg.validate()?;
    if data.len() != cfg.k * frame.n_d {
        return Err(Error::Dimension(format!(
            "data array holds {} symbols, expected {}x{}",
            data.len(),
            cfg.k,
            frame.n_d
        )));
    }
    let kl = cfg.k * cfg.l;
    let amp = Complex64::new((kl as f64).sqrt(), 0.0);
    let mut s = vec![Complex64::default(); cfg.k * cfg.n_u];
    for user in 0..cfg.k {
        let row = &mut s[user * cfg.n_u..(user + 1) * cfg.n_u];
        row[user * cfg.l] = amp;
        for slot in &mut row[kl..frame.data_start] {
            *slot = draw_cn_unit_one(rng);
        }
        row[frame.data_start..=frame.data_end]
            .copy_from_slice(&data[user * frame.n_d..(user + 1) * frame.n_d]);
        for slot in &mut row[frame.data_end + 1..cfg.n_u] {
            *slot = draw_cn_unit_one(rng);
        }
    }
    TxFrame::new(SlotKind::Uplink, cfg.k, cfg.n_u, s)
}

/// Received samples at every antenna over one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFrame {
    m: usize,
    len: usize,
    /// Row-major `m x len` samples.
    r: Vec<Complex64>,
}

impl RxFrame {
    /// Wrap raw received samples (row-major `m x len`), e.g. recorded data.
    pub fn new(m: usize, len: usize, r: Vec<Complex64>) -> Result<Self> {
        if r.len() != m * len {
            return Err(Error::Dimension(format!(
                "sample array holds {} entries, expected {m}x{len}",
                r.len()
            )));
        }
        Ok(Self { m, len, r })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Received sample `r_antenna[t]`.
    #[inline]
    pub fn get(&self, antenna: usize, t: usize) -> Complex64 {
        self.r[antenna * self.len + t]
    }

    /// One antenna's whole sample stream.
    pub fn row(&self, antenna: usize) -> &[Complex64] {
        &self.r[antenna * self.len..(antenna + 1) * self.len]
    }
}

/// Propagate one slot through the channel:
///
/// `r_a[t] = sqrt(p_u) * sum_u sum_tap h_{a,u}[tap] * s_u[t - tap] *
/// exp(j * omega_u * t) + w_a[t]`,
///
/// with `w ~ CN(0, sigma2)` (omitted exactly when `sigma2 == 0`) and
/// `s_u[t] = 0` before the slot starts. The carrier phase reference is the
/// slot start; a constant phase offset from earlier slots is immaterial
/// because channel estimation absorbs it and the CFO correlation estimator
/// is invariant to it.
pub fn propagate<R: Rng>(
    tx: &TxFrame,
    ch: &ChannelRealization,
    omegas: &[f64],
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<RxFrame> {
    if ch.k_users() != tx.k_users() || ch.m() != cfg.m || ch.l_taps() != cfg.l {
        return Err(Error::Dimension(format!(
            "channel is {}x{}x{}, frame/config expect {}x{}x{}",
            ch.m(),
            ch.k_users(),
            ch.l_taps(),
            cfg.m,
            tx.k_users(),
            cfg.l
        )));
    }
    if omegas.len() != tx.k_users() {
        return Err(Error::Dimension(format!(
            "{} CFO entries for {} users",
            omegas.len(),
            tx.k_users()
        )));
    }
    let len = tx.len();
    let sqrt_pu = cfg.p_u.sqrt();

    // Per-user carrier phasors exp(j * omega_u * t), computed once per slot.
    let phasors: Vec<Vec<Complex64>> = omegas
        .iter()
        .map(|&w| {
            (0..len)
                .map(|t| Complex64::from_polar(1.0, w * t as f64))
                .collect()
        })
        .collect();

    let mut r = vec![Complex64::default(); cfg.m * len];
    for antenna in 0..cfg.m {
        let out = &mut r[antenna * len..(antenna + 1) * len];
        for (user, phase) in phasors.iter().enumerate() {
            let taps = ch.taps(antenna, user);
            let symbols = tx.row(user);
            for (tap, &h) in taps.iter().enumerate() {
                let gain = sqrt_pu * h;
                // s_u[t - tap] contributes to r[t] for t in [tap, len).
                for t in tap..len {
                    out[t] += gain * symbols[t - tap] * phase[t];
                }
            }
        }
        if cfg.sigma2 > 0.0 {
            let std = (cfg.sigma2 / 2.0).sqrt();
            for sample in out.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *sample += Complex64::new(re * std, im * std);
            }
        }
    }
    Ok(RxFrame { m: cfg.m, len, r })
}

fn draw_cn_unit_one<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn draw_cn_unit<R: Rng>(count: usize, rng: &mut R) -> Vec<Complex64> {
    (0..count).map(|_| draw_cn_unit_one(rng)).collect()
}
