//! System configuration: dimensions, powers, CFO bound, power-delay profile,
//! derived frame layout, validation, and the flat `key = value` config format.
//!
//! Conventions used across the crate (all indices 0-based):
//! * `m` antennas at the base station, `k` single-antenna users, `l` channel taps;
//! * the CFO-estimation slot is `n` samples long and is split into blocks of
//!   `k*l` samples;
//! * the uplink slot is `n_u` samples long: per-user channel-training pilots in
//!   `[u*l, (u+1)*l)`, a random preamble in `[k*l, k*l + l - 1)`, information
//!   symbols in `[data_start, data_end]`, and a random postamble filling the
//!   remaining `l - 1` samples;
//! * powers are linear unless a config value carries an explicit `dB` suffix.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Per-user, per-tap channel power `sigma^2_{u,l} = E |h_{m,u}[l]|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    k_users: usize,
    l_taps: usize,
    /// Row-major `k_users x l_taps` tap powers.
    p: Vec<f64>,
    /// True when built by [`PowerDelayProfile::uniform`]; affects display only.
    uniform: bool,
}

impl PowerDelayProfile {
    /// Uniform profile: every tap power is `1 / l_taps`, so each user's total
    /// channel power is exactly 1.
    pub fn uniform(k_users: usize, l_taps: usize) -> Self {
        Self {
            k_users,
            l_taps,
            p: vec![1.0 / l_taps as f64; k_users * l_taps],
            uniform: true,
        }
    }

    /// Arbitrary profile from per-user rows; every row must hold `l_taps`
    /// strictly positive powers.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k_users = rows.len();
        if k_users == 0 {
            return Err(Error::Dimension("PDP has no rows".into()));
        }
        let l_taps = rows[0].len();
        for (u, row) in rows.iter().enumerate() {
            if row.len() != l_taps {
                return Err(Error::Dimension(format!(
                    "PDP row {u} has {} entries, expected {l_taps}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                return Err(Error::Dimension(format!(
                    "PDP row {u} contains non-positive tap power {bad}"
                )));
            }
        }
        Ok(Self {
            k_users,
            l_taps,
            p: rows.into_iter().flatten().collect(),
            uniform: false,
        })
    }

    pub fn k_users(&self) -> usize {
        self.k_users
    }

    pub fn l_taps(&self) -> usize {
        self.l_taps
    }

    /// Tap power `sigma^2_{user,tap}`.
    #[inline]
    pub fn get(&self, user: usize, tap: usize) -> f64 {
        self.p[user * self.l_taps + tap]
    }

    /// One user's row of tap powers.
    pub fn row(&self, user: usize) -> &[f64] {
        &self.p[user * self.l_taps..(user + 1) * self.l_taps]
    }

    /// Total channel power of one user: `theta_user = sum_l sigma^2_{user,l}`.
    pub fn theta(&self, user: usize) -> f64 {
        self.row(user).iter().sum()
    }

    /// Sum of squared tap powers `sum_l sigma^4_{user,l}` (fourth-moment term
    /// in the self-interference and intersymbol-interference variances).
    pub fn sum_sq(&self, user: usize) -> f64 {
        self.row(user).iter().map(|v| v * v).sum()
    }

    /// True when built by [`PowerDelayProfile::uniform`].
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

/// Frame layout derived from a validated [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivedFrame {
    /// Number of correlation blocks in the CFO-estimation slot: `ceil(n / (k*l))`.
    pub b: usize,
    /// First information-symbol index in the uplink slot: `k*l + l - 1`.
    pub data_start: usize,
    /// Last information-symbol index: `n_u - l`.
    pub data_end: usize,
    /// Number of information symbols: `data_end - data_start + 1`.
    pub n_d: usize,
}

/// Complete system description.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Base-station antennas (M).
    pub m: usize,
    /// Single-antenna users (K).
    pub k: usize,
    /// Channel taps per user (L).
    pub l: usize,
    /// CFO-estimation slot length in samples (N).
    pub n: usize,
    /// Uplink slot length in samples (N_u).
    pub n_u: usize,
    /// Per-user average transmit power (linear).
    pub p_u: f64,
    /// Receiver noise variance per sample (linear).
    pub sigma2: f64,
    /// Oscillator accuracy in parts per million; bounds the CFO magnitude.
    pub kappa_ppm: f64,
    /// Carrier frequency in Hz.
    pub f_c_hz: f64,
    /// Signal bandwidth in Hz (also the sample rate).
    pub bw_hz: f64,
    /// Per-user per-tap channel powers.
    pub pdp: PowerDelayProfile,
    /// Accept configurations whose worst-case CFO rotation per block exceeds
    /// the small-angle bound `omega_max * k * l <= pi / 10`.
    pub allow_wide_cfo: bool,
}

impl Default for SystemConfig {
    /// Baseline operating point used by the reference experiments:
    /// 160 antennas, 10 users, 10 taps, 2000-sample slots, unit powers,
    /// 0.1 ppm oscillators at 2 GHz carrier over 1 MHz bandwidth.
    fn default() -> Self {
        Self {
            m: 160,
            k: 10,
            l: 10,
            n: 2000,
            n_u: 2000,
            p_u: 1.0,
            sigma2: 1.0,
            kappa_ppm: 0.1,
            f_c_hz: 2.0e9,
            bw_hz: 1.0e6,
            pdp: PowerDelayProfile::uniform(10, 10),
            allow_wide_cfo: false,
        }
    }
}

impl SystemConfig {
    /// Largest CFO magnitude in radians per sample:
    /// `2*pi * kappa_ppm*1e-6 * f_c / bw`.
    pub fn omega_max(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.kappa_ppm * 1e-6 * self.f_c_hz / self.bw_hz
    }

    /// Total channel power of `user`.
    pub fn theta(&self, user: usize) -> f64 {
        self.pdp.theta(user)
    }

    /// Per-user receive SNR `gamma_user = p_u * theta_user / sigma2`.
    pub fn gamma(&self, user: usize) -> f64 {
        if self.sigma2 == 0.0 {
            f64::INFINITY
        } else {
            self.p_u * self.theta(user) / self.sigma2
        }
    }

    /// Interference-model coefficient multiplying `1/(M*gamma)` in the SINR
    /// denominator: `1 + sum_q theta_q / (K * theta_user)`. Equals 2 for a
    /// uniform profile.
    pub fn c1(&self, user: usize) -> f64 {
        let total: f64 = (0..self.k).map(|q| self.theta(q)).sum();
        1.0 + total / (self.k as f64 * self.theta(user))
    }

    /// Interference-model coefficient multiplying `1/M` in the SINR
    /// denominator: `1 + sum_{q != user} theta_q / theta_user`. Equals K for a
    /// uniform profile.
    pub fn c2(&self, user: usize) -> f64 {
        let others: f64 = (0..self.k)
            .filter(|&q| q != user)
            .map(|q| self.theta(q))
            .sum();
        1.0 + others / self.theta(user)
    }

    /// Instants since `user`'s channel-training pilot: `t - user*l`, the phase
    /// age entering the coherent-gain loss `exp(-sigma2_omega * tau^2)`.
    pub fn tau(&self, user: usize, t: usize) -> f64 {
        t as f64 - (user * self.l) as f64
    }

    /// Check all structural invariants and return the derived frame layout.
    pub fn validate(&self) -> Result<DerivedFrame> {
        if self.m == 0 || self.k == 0 || self.l == 0 {
            return Err(Error::Dimension(
                "antenna, user and tap counts must all be positive".into(),
            ));
        }
        if self.pdp.k_users() != self.k || self.pdp.l_taps() != self.l {
            return Err(Error::Dimension(format!(
                "PDP is {}x{}, expected {}x{}",
                self.pdp.k_users(),
                self.pdp.l_taps(),
                self.k,
                self.l
            )));
        }
        if let Some(bad) = self.pdp.p.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::Dimension(format!(
                "PDP contains non-positive tap power {bad}"
            )));
        }
        if !(self.p_u.is_finite() && self.p_u > 0.0) {
            return Err(Error::Dimension(format!(
                "transmit power must be positive, got {}",
                self.p_u
            )));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::Dimension(format!(
                "noise variance must be non-negative, got {}",
                self.sigma2
            )));
        }
        if !(self.f_c_hz > 0.0 && self.bw_hz > 0.0 && self.kappa_ppm >= 0.0) {
            return Err(Error::Dimension(
                "carrier frequency and bandwidth must be positive, oscillator \
                 accuracy non-negative"
                    .into(),
            ));
        }
        let kl = self.k * self.l;
        if self.n < 2 * kl {
            return Err(Error::Timeline(format!(
                "CFO slot holds {} samples but needs at least two full blocks \
                 of {} samples to correlate",
                self.n, kl
            )));
        }
        // Training pilots + preamble + at least one data symbol + postamble.
        let min_nu = kl + 2 * (self.l - 1) + 1;
        if self.n_u < min_nu {
            return Err(Error::Timeline(format!(
                "uplink slot holds {} samples but needs at least {} for \
                 pilots, guards and one data symbol",
                self.n_u, min_nu
            )));
        }
        let worst_rotation = self.omega_max() * kl as f64;
        if worst_rotation > std::f64::consts::PI / 10.0 && !self.allow_wide_cfo {
            return Err(Error::CfoBound(format!(
                "worst-case CFO rotation per block is {worst_rotation:.4} rad, \
                 above pi/10; the correlation estimator is no longer \
                 unambiguous (set allow_wide_cfo to override)"
            )));
        }
        let data_start = kl + self.l - 1;
        let data_end = self.n_u - self.l;
        Ok(DerivedFrame {
            b: self.n.div_ceil(kl),
            data_start,
            data_end,
            n_d: data_end - data_start + 1,
        })
    }

    /// Resolved configuration as ordered key/value pairs (the format written
    /// into output headers and accepted back by the parser).
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("m".into(), self.m.to_string()),
            ("k".into(), self.k.to_string()),
            ("l".into(), self.l.to_string()),
            ("n".into(), self.n.to_string()),
            ("n_u".into(), self.n_u.to_string()),
            ("p_u".into(), format!("{:e}", self.p_u)),
            ("sigma2".into(), format!("{:e}", self.sigma2)),
            ("kappa_ppm".into(), format!("{:e}", self.kappa_ppm)),
            ("f_c_hz".into(), format!("{:e}", self.f_c_hz)),
            ("bw_hz".into(), format!("{:e}", self.bw_hz)),
        ];
        if self.pdp.is_uniform() {
            kv.push(("pdp".into(), "uniform".into()));
        } else {
            for u in 0..self.k {
                let row = self
                    .pdp
                    .row(u)
                    .iter()
                    .map(|v| format!("{v:e}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                kv.push((format!("pdp.{u}"), row));
            }
        }
        if self.allow_wide_cfo {
            kv.push(("allow_wide_cfo".into(), "true".into()));
        }
        kv
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, value) in self.describe() {
            writeln!(f, "{key} = {value}")?;
        }
        Ok(())
    }
}

/// Uniform power-delay profile with `k_users x l_taps` equal tap powers
/// summing to 1 per user.
pub fn uniform_pdp(k_users: usize, l_taps: usize) -> PowerDelayProfile {
    PowerDelayProfile::uniform(k_users, l_taps)
}

/// Parse a power value: bare number (linear), `<x> linear`, or `<x> dB`.
pub fn parse_power(text: &str) -> Result<f64> {
    let lower = text.trim().to_ascii_lowercase();
    let (body, db) = if let Some(rest) = lower.strip_suffix("db") {
        (rest.trim_end(), true)
    } else if let Some(rest) = lower.strip_suffix("linear") {
        (rest.trim_end(), false)
    } else {
        (lower.as_str(), false)
    };
    let value: f64 = body
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid power value {text:?}")))?;
    Ok(if db { 10f64.powf(value / 10.0) } else { value })
}

/// Accumulates `key = value` assignments from files, literal text and CLI
/// overrides (later assignments win), then resolves them into a
/// [`SystemConfig`] on top of the defaults.
#[derive(Debug, Default, Clone)]
pub struct ConfigBuilder {
    entries: Vec<(String, String)>,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse a whole config file.
    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<&mut Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        self.parse_str(&text)
    }

    /// Parse config text: one `key = value` per line, `#` starts a comment,
    /// blank lines ignored.
    pub fn parse_str(&mut self, text: &str) -> Result<&mut Self> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    idx + 1
                ))
            })?;
            self.entries
                .push((key.trim().to_ascii_lowercase(), value.trim().to_string()));
        }
        Ok(self)
    }

    /// Add one `key=value` override (the CLI `--set` grammar).
    pub fn set_pair(&mut self, pair: &str) -> Result<&mut Self> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("override {pair:?} is not `key=value`")))?;
        self.entries
            .push((key.trim().to_ascii_lowercase(), value.trim().to_string()));
        Ok(self)
    }

    /// Resolve everything into a configuration (defaults, then assignments in
    /// order). Structural validity is checked separately via
    /// [`SystemConfig::validate`].
    pub fn build(&self) -> Result<SystemConfig> {
        let mut cfg = SystemConfig::default();
        // `pdp = uniform` and `pdp.<user> = <row>` are resolved after the
        // dimensions so row shape checks see the final K and L.
        let mut pdp_uniform = true;
        let mut pdp_rows: Vec<(usize, Vec<f64>)> = Vec::new();

        for (key, value) in &self.entries {
            match key.as_str() {
                "m" => cfg.m = parse_count(key, value)?,
                "k" => cfg.k = parse_count(key, value)?,
                "l" => cfg.l = parse_count(key, value)?,
                "n" => cfg.n = parse_count(key, value)?,
                "n_u" => cfg.n_u = parse_count(key, value)?,
                "p_u" => cfg.p_u = parse_power(value)?,
                "sigma2" => cfg.sigma2 = parse_power(value)?,
                "kappa_ppm" => cfg.kappa_ppm = parse_float(key, value)?,
                "f_c_hz" => cfg.f_c_hz = parse_float(key, value)?,
                "bw_hz" => cfg.bw_hz = parse_float(key, value)?,
                "allow_wide_cfo" => {
                    cfg.allow_wide_cfo = value.parse().map_err(|_| {
                        Error::Parse(format!("allow_wide_cfo expects true/false, got {value:?}"))
                    })?
                }
                "pdp" => {
                    if value.eq_ignore_ascii_case("uniform") {
                        pdp_uniform = true;
                        pdp_rows.clear();
                    } else {
                        return Err(Error::Parse(format!(
                            "pdp expects `uniform` (or per-user `pdp.<user>` rows), got {value:?}"
                        )));
                    }
                }
                _ => {
                    if let Some(user) = key.strip_prefix("pdp.") {
                        let user: usize = user.parse().map_err(|_| {
                            Error::Parse(format!("invalid PDP row index in {key:?}"))
                        })?;
                        let row = value
                            .split_whitespace()
                            .map(parse_power)
                            .collect::<Result<Vec<f64>>>()?;
                        pdp_uniform = false;
                        pdp_rows.retain(|(u, _)| *u != user);
                        pdp_rows.push((user, row));
                    } else {
                        return Err(Error::Parse(format!("unknown config key {key:?}")));
                    }
                }
            }
        }

        cfg.pdp = if pdp_uniform {
            PowerDelayProfile::uniform(cfg.k, cfg.l)
        } else {
            let mut rows = vec![None; cfg.k];
            for (user, row) in pdp_rows {
                if user >= cfg.k {
                    return Err(Error::Dimension(format!(
                        "PDP row index {user} out of range for {} users",
                        cfg.k
                    )));
                }
                rows[user] = Some(row);
            }
            let rows = rows
                .into_iter()
                .enumerate()
                .map(|(u, row)| row.ok_or_else(|| Error::Dimension(format!("PDP row {u} missing"))))
                .collect::<Result<Vec<_>>>()?;
            PowerDelayProfile::from_rows(rows)?
        };
        Ok(cfg)
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("{key} expects a positive integer, got {value:?}")))
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("{key} expects a number, got {value:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn baseline_frame_layout() {
        let cfg = SystemConfig::default();
        let frame = cfg.validate().unwrap();
        assert_eq!(frame.b, 20);
        assert_eq!(frame.data_start, 109);
        assert_eq!(frame.data_end, 1990);
        assert_eq!(frame.n_d, 1882);
    }

    #[test]
    fn minimal_frame_layout() {
        let cfg = SystemConfig {
            k: 1,
            l: 1,
            n: 2,
            n_u: 4,
            pdp: PowerDelayProfile::uniform(1, 1),
            ..SystemConfig::default()
        };
        let frame = cfg.validate().unwrap();
        assert_eq!(frame.b, 2);
        assert_eq!(frame.data_start, 1);
        assert_eq!(frame.data_end, 3);
        assert_eq!(frame.n_d, 3);
    }

    #[test]
    fn cfo_bound_is_pi_over_2500_at_baseline() {
        let cfg = SystemConfig::default();
        assert_relative_eq!(
            cfg.omega_max(),
            std::f64::consts::PI / 2500.0,
            max_relative = 1e-15
        );
        // Worst-case rotation per 100-sample block is pi/25, inside pi/10.
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn uniform_profile_moments_and_coefficients() {
        let cfg = SystemConfig::default();
        for u in 0..cfg.k {
            assert_relative_eq!(cfg.theta(u), 1.0, max_relative = 1e-12);
            assert_relative_eq!(cfg.pdp.sum_sq(u), 0.1, max_relative = 1e-12);
            assert_relative_eq!(cfg.c1(u), 2.0, max_relative = 1e-12);
            assert_relative_eq!(cfg.c2(u), cfg.k as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn non_uniform_profile_coefficients() {
        let pdp =
            PowerDelayProfile::from_rows(vec![vec![0.5, 0.3, 0.2], vec![1.0, 0.5, 0.5]]).unwrap();
        let cfg = SystemConfig {
            k: 2,
            l: 3,
            n: 60,
            n_u: 60,
            pdp,
            ..SystemConfig::default()
        };
        assert_relative_eq!(cfg.theta(0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.theta(1), 2.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.pdp.sum_sq(0), 0.25 + 0.09 + 0.04, max_relative = 1e-12);
        // c1 = 1 + (theta_0 + theta_1) / (K * theta_user)
        assert_relative_eq!(cfg.c1(0), 1.0 + 3.0 / 2.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.c1(1), 1.0 + 3.0 / 4.0, max_relative = 1e-12);
        // c2 = 1 + sum_{q != user} theta_q / theta_user
        assert_relative_eq!(cfg.c2(0), 3.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.c2(1), 1.5, max_relative = 1e-12);
    }

    #[test]
    fn tau_measures_age_since_training_pilot() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.tau(0, 109), 109.0);
        assert_eq!(cfg.tau(9, 109), 109.0 - 90.0);
        assert_eq!(cfg.tau(3, 30), 0.0);
    }

    #[test]
    fn validation_rejects_short_cfo_slot() {
        let cfg = SystemConfig {
            n: 199, // needs >= 2*K*L = 200
            ..SystemConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Timeline(_))));
    }

    #[test]
    fn validation_rejects_short_uplink_slot() {
        let cfg = SystemConfig {
            n_u: 118, // needs >= K*L + 2(L-1) + 1 = 119
            ..SystemConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Timeline(_))));
        let ok = SystemConfig {
            n_u: 119,
            ..SystemConfig::default()
        };
        let frame = ok.validate().unwrap();
        assert_eq!(frame.n_d, 1);
    }

    #[test]
    fn validation_rejects_wide_cfo_unless_overridden() {
        let cfg = SystemConfig {
            kappa_ppm: 1.0, // rotation per block = 2*pi*1e-6*2000*100 > pi/10
            ..SystemConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::CfoBound(_))));
        let cfg = SystemConfig {
            allow_wide_cfo: true,
            ..cfg
        };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_rejects_bad_pdp() {
        let cfg = SystemConfig {
            pdp: PowerDelayProfile::uniform(10, 9),
            ..SystemConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Dimension(_))));
        assert!(PowerDelayProfile::from_rows(vec![vec![0.5, -0.1]]).is_err());
        assert!(PowerDelayProfile::from_rows(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
    }

    #[test]
    fn power_parsing_accepts_db_and_linear() {
        assert_relative_eq!(parse_power("0.5").unwrap(), 0.5);
        assert_relative_eq!(parse_power("0.5 linear").unwrap(), 0.5);
        assert_relative_eq!(parse_power("0 dB").unwrap(), 1.0);
        assert_relative_eq!(parse_power("-10 dB").unwrap(), 0.1, max_relative = 1e-12);
        assert_relative_eq!(parse_power("3 DB").unwrap(), 10f64.powf(0.3));
        assert_relative_eq!(parse_power("2e9").unwrap(), 2e9);
        assert!(parse_power("loud").is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let text = "\
            # example system\n\
            m = 64\n\
            k = 2\n\
            l = 3   # taps\n\
            n = 60\n\
            n_u = 64\n\
            p_u = -14.5 dB\n\
            sigma2 = 1 linear\n\
            pdp.0 = 0.5 0.3 0.2\n\
            pdp.1 = 0.2 0.2 0.6\n";
        let cfg = ConfigBuilder::new()
            .parse_str(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!((cfg.m, cfg.k, cfg.l, cfg.n, cfg.n_u), (64, 2, 3, 60, 64));
        assert_relative_eq!(cfg.p_u, 10f64.powf(-1.45), max_relative = 1e-12);
        assert_relative_eq!(cfg.pdp.get(1, 2), 0.6);
        assert!(!cfg.pdp.is_uniform());
        cfg.validate().unwrap();

        // The printed form parses back to the same configuration.
        let mut rendered = String::new();
        for (k, v) in cfg.describe() {
            rendered.push_str(&format!("{k} = {v}\n"));
        }
        let back = ConfigBuilder::new()
            .parse_str(&rendered)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(back.m, cfg.m);
        assert_relative_eq!(back.p_u, cfg.p_u, max_relative = 1e-12);
        assert_relative_eq!(back.pdp.get(0, 1), cfg.pdp.get(0, 1), max_relative = 1e-12);
    }

    #[test]
    fn later_assignments_win() {
        let cfg = ConfigBuilder::new()
            .parse_str("m = 64\nm = 128\n")
            .unwrap()
            .set_pair("m=256")
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(cfg.m, 256);
    }

    #[test]
    fn unknown_keys_and_bad_overrides_are_rejected() {
        assert!(ConfigBuilder::new()
            .parse_str("antennas = 4\n")
            .unwrap()
            .build()
            .is_err());
        assert!(ConfigBuilder::new().set_pair("m").is_err());
        assert!(ConfigBuilder::new().parse_str("just words\n").is_err());
    }

    #[test]
    fn pdp_override_resets_rows() {
        let cfg = ConfigBuilder::new()
            .parse_str("k = 2\nl = 2\nn = 8\nn_u = 8\npdp.0 = 1 1\npdp.1 = 1 1\npdp = uniform\n")
            .unwrap()
            .build()
            .unwrap();
        assert!(cfg.pdp.is_uniform());
        assert_relative_eq!(cfg.theta(0), 1.0);
    }

    proptest! {
        #[test]
        fn frame_identities_hold_for_valid_dims(
            m in 1usize..64,
            k in 1usize..8,
            l in 1usize..8,
            extra_n in 0usize..64,
            extra_nu in 0usize..64,
        ) {
            let cfg = SystemConfig {
                m, k, l,
                n: 2 * k * l + extra_n,
                n_u: k * l + 2 * (l - 1) + 1 + extra_nu,
                pdp: PowerDelayProfile::uniform(k, l),
                ..SystemConfig::default()
            };
            let frame = cfg.validate().unwrap();
            prop_assert_eq!(frame.n_d, frame.data_end - frame.data_start + 1);
            prop_assert_eq!(frame.n_d, cfg.n_u - k * l - 2 * (l - 1));
            prop_assert!(frame.b >= 2);
            prop_assert!(frame.b * k * l >= cfg.n);
            prop_assert!((frame.b - 1) * k * l < cfg.n);
            // Training pilots and guards never overlap the data span.
            prop_assert!(frame.data_start >= k * l + l - 1);
            prop_assert!(frame.data_end + l - 1 < cfg.n_u + l);
        }

        #[test]
        fn db_and_linear_power_forms_agree(db in -60.0f64..60.0) {
            let from_db = parse_power(&format!("{db} dB")).unwrap();
            let linear = 10f64.powf(db / 10.0);
            let from_linear = parse_power(&format!("{linear} linear")).unwrap();
            prop_assert!((from_db - from_linear).abs() <= 1e-12 * from_db.abs());
        }
    }
}
