//! Frequency-selective channel model: i.i.d. circularly-symmetric complex
//! Gaussian taps with per-user/per-tap powers from the configured
//! power-delay profile, user carrier frequency offsets, and a versioned
//! binary dump format for realizations.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Magic bytes and version for the channel dump format.
const DUMP_MAGIC: &[u8; 4] = b"SCMH";
const DUMP_VERSION: u16 = 1;

/// One realization of all `m x k x l` channel taps.
///
/// Taps are stored row-major as `h[(antenna * k_users + user) * l_taps + tap]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    m: usize,
    k_users: usize,
    l_taps: usize,
    h: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn new(m: usize, k_users: usize, l_taps: usize, h: Vec<Complex64>) -> Result<Self> {
        if h.len() != m * k_users * l_taps {
            return Err(Error::Dimension(format!(
                "channel tap array holds {} entries, expected {}x{}x{}",
                h.len(),
                m,
                k_users,
                l_taps
            )));
        }
        Ok(Self {
            m,
            k_users,
            l_taps,
            h,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_users(&self) -> usize {
        self.k_users
    }

    pub fn l_taps(&self) -> usize {
        self.l_taps
    }

    /// Tap `h_{antenna,user}[tap]`.
    #[inline]
    pub fn get(&self, antenna: usize, user: usize, tap: usize) -> Complex64 {
        self.h[(antenna * self.k_users + user) * self.l_taps + tap]
    }

    /// All taps of one antenna/user pair, ordered by delay.
    #[inline]
    pub fn taps(&self, antenna: usize, user: usize) -> &[Complex64] {
        let base = (antenna * self.k_users + user) * self.l_taps;
        &self.h[base..base + self.l_taps]
    }

    /// Realized array gain of one user, normalized so its expectation is 1:
    /// `sum_{antenna,tap} |h|^2 / (m * theta_user)`.
    pub fn g_factor(&self, user: usize, theta_user: f64) -> f64 {
        let power: f64 = (0..self.m)
            .map(|a| self.taps(a, user).iter().map(|h| h.norm_sqr()).sum::<f64>())
            .sum();
        power / (self.m as f64 * theta_user)
    }

    /// Serialize: magic, version, dimensions, then little-endian `f64`
    /// real/imaginary pairs in storage order.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(DUMP_MAGIC)?;
        out.write_all(&DUMP_VERSION.to_le_bytes())?;
        out.write_all(&[0u8; 2])?; // reserved
        for dim in [self.m, self.k_users, self.l_taps] {
            out.write_all(&(dim as u64).to_le_bytes())?;
        }
        for tap in &self.h {
            out.write_all(&tap.re.to_le_bytes())?;
            out.write_all(&tap.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Deserialize a dump written by [`ChannelRealization::write_dump`].
    pub fn read_dump<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Format("bad magic bytes in channel dump".into()));
        }
        let mut header = [0u8; 4];
        input.read_exact(&mut header)?;
        let version = u16::from_le_bytes([header[0], header[1]]);
        if version != DUMP_VERSION {
            return Err(Error::Format(format!(
                "unsupported channel dump version {version}"
            )));
        }
        let mut dims = [0usize; 3];
        for dim in &mut dims {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf)?;
            let v = u64::from_le_bytes(buf);
            *dim = usize::try_from(v)
                .map_err(|_| Error::Format(format!("dimension {v} too large")))?;
        }
        let [m, k_users, l_taps] = dims;
        let count = m
            .checked_mul(k_users)
            .and_then(|v| v.checked_mul(l_taps))
            .ok_or_else(|| Error::Format("dimension overflow in channel dump".into()))?;
        let mut h = Vec::with_capacity(count);
        let mut buf = [0u8; 16];
        for _ in 0..count {
            input.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            h.push(Complex64::new(re, im));
        }
        Self::new(m, k_users, l_taps, h)
    }
}

/// Draw one channel realization: tap `(antenna, user, l)` is circularly
/// symmetric complex Gaussian with variance `pdp[user][l]` (half per
/// quadrature). Draw order is fixed (antenna-major), so a given RNG state
/// always produces the same realization.
pub fn draw_channel<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> ChannelRealization {
    let mut h = Vec::with_capacity(cfg.m * cfg.k * cfg.l);
    for _antenna in 0..cfg.m {
        for user in 0..cfg.k {
            for tap in 0..cfg.l {
                let std = (cfg.pdp.get(user, tap) / 2.0).sqrt();
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                h.push(Complex64::new(re * std, im * std));
            }
        }
    }
    ChannelRealization::new(cfg.m, cfg.k, cfg.l, h).expect("constructed with matching dims")
}

/// Draw each user's carrier frequency offset uniformly from
/// `[-omega_max, omega_max]` radians per sample.
pub fn draw_cfos<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> Vec<f64> {
    let bound = cfg.omega_max();
    let dist = Uniform::new_inclusive(-bound, bound);
    (0..cfg.k).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PowerDelayProfile;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SystemConfig {
        SystemConfig {
            m: 4,
            k: 2,
            l: 3,
            n: 12,
            n_u: 16,
            pdp: PowerDelayProfile::from_rows(vec![vec![0.5, 0.3, 0.2], vec![0.6, 0.2, 0.2]])
                .unwrap(),
            ..SystemConfig::default()
        }
    }

    #[test]
    fn draws_are_deterministic_per_seed() {
        let cfg = small_cfg();
        let a = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let c = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
        assert_ne!(a, c);

        let wa = draw_cfos(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let wb = draw_cfos(&cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(wa, wb);
    }

    #[test]
    fn tap_moments_match_profile() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = 4000;
        let mut mean = vec![Complex64::default(); cfg.k * cfg.l];
        let mut power = vec![0.0f64; cfg.k * cfg.l];
        let mut fourth = vec![0.0f64; cfg.k * cfg.l];
        for _ in 0..trials {
            let ch = draw_channel(&cfg, &mut rng);
            for antenna in 0..cfg.m {
                for user in 0..cfg.k {
                    for tap in 0..cfg.l {
                        let h = ch.get(antenna, user, tap);
                        mean[user * cfg.l + tap] += h;
                        power[user * cfg.l + tap] += h.norm_sqr();
                        fourth[user * cfg.l + tap] += h.norm_sqr() * h.norm_sqr();
                    }
                }
            }
        }
        let n = (trials * cfg.m) as f64;
        for user in 0..cfg.k {
            for tap in 0..cfg.l {
                let idx = user * cfg.l + tap;
                let var = cfg.pdp.get(user, tap);
                // Mean has std var/sqrt(2n) per quadrature; 5 sigma slack.
                assert!(mean[idx].norm() / n < 5.0 * (var / n).sqrt());
                assert_relative_eq!(power[idx] / n, var, max_relative = 0.05);
                // Complex Gaussian: E|h|^4 = 2 (E|h|^2)^2.
                assert_relative_eq!(fourth[idx] / n, 2.0 * var * var, max_relative = 0.15);
            }
        }
    }

    #[test]
    fn cfos_stay_in_bound() {
        let cfg = SystemConfig::default();
        let bound = cfg.omega_max();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            for w in draw_cfos(&cfg, &mut rng) {
                assert!(w.abs() <= bound);
            }
        }
        // kappa = 0 pins every offset to zero.
        let still = SystemConfig {
            kappa_ppm: 0.0,
            ..SystemConfig::default()
        };
        assert!(draw_cfos(&still, &mut rng).iter().all(|w| *w == 0.0));
    }

    #[test]
    fn g_factor_is_normalized_realized_power() {
        let cfg = small_cfg();
        let ch = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let theta = cfg.theta(0);
        let manual: f64 = (0..cfg.m)
            .flat_map(|a| (0..cfg.l).map(move |l| (a, l)))
            .map(|(a, l)| ch.get(a, 0, l).norm_sqr())
            .sum();
        assert_relative_eq!(
            ch.g_factor(0, theta),
            manual / (cfg.m as f64 * theta),
            max_relative = 1e-12
        );

        // Large antenna count: realized gain concentrates around 1.
        let big = SystemConfig {
            m: 4000,
            ..small_cfg()
        };
        let ch = draw_channel(&big, &mut ChaCha8Rng::seed_from_u64(12));
        assert_relative_eq!(ch.g_factor(1, big.theta(1)), 1.0, max_relative = 0.05);
    }

    #[test]
    fn dump_round_trips_exactly() {
        let cfg = small_cfg();
        let ch = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let mut buf = Vec::new();
        ch.write_dump(&mut buf).unwrap();
        let back = ChannelRealization::read_dump(buf.as_slice()).unwrap();
        assert_eq!(ch, back);
    }

    #[test]
    fn dump_rejects_corruption() {
        let cfg = small_cfg();
        let ch = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let mut buf = Vec::new();
        ch.write_dump(&mut buf).unwrap();

        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            ChannelRealization::read_dump(bad_magic.as_slice()),
            Err(Error::Format(_))
        ));

        let mut bad_version = buf.clone();
        bad_version[4] = 99;
        assert!(matches!(
            ChannelRealization::read_dump(bad_version.as_slice()),
            Err(Error::Format(_))
        ));

        let truncated = &buf[..buf.len() - 7];
        assert!(ChannelRealization::read_dump(truncated).is_err());
    }
}
