//! Training-based channel estimation from the uplink slot.
//!
//! User `u`'s training impulse (amplitude `sqrt(k*l*p_u)`) sits at
//! `t = u*l`; its `l`-tap response occupies `[u*l, u*l + l)` and overlaps no
//! other user's response, so each tap is read off one received sample. The
//! receiver derotates with its *estimated* CFO, leaving the residual offset
//! in the estimate:
//!
//! `h_hat_{a,u}[tap] = r_a[u*l + tap] * exp(-j*omega_hat_u*(u*l + tap))
//!                     / sqrt(k*l*p_u)
//!                   = h_{a,u}[tap] * exp(-j*delta_u*(u*l + tap))
//!                     + noise / sqrt(k*l*p_u)`,
//!
//! with `delta_u = omega_hat_u - omega_u`. The estimation-noise variance per
//! tap is `sigma2 / (k*l*p_u)`.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::frame::RxFrame;

/// Estimate all channel taps from a received uplink slot.
pub fn estimate_channel(
    rx: &RxFrame,
    omega_hat: &[f64],
    cfg: &SystemConfig,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    if rx.len() != cfg.n_u || rx.m() != cfg.m {
        return Err(Error::Dimension(format!(
            "received slot is {}x{}, config expects {}x{}",
            rx.m(),
            rx.len(),
            cfg.m,
            cfg.n_u
        )));
    }
    if omega_hat.len() != cfg.k {
        return Err(Error::Dimension(format!(
            "{} CFO estimates for {} users",
            omega_hat.len(),
            cfg.k
        )));
    }
    let scale = 1.0 / ((cfg.k * cfg.l) as f64 * cfg.p_u).sqrt();
    let mut taps = Vec::with_capacity(cfg.m * cfg.k * cfg.l);
    for antenna in 0..cfg.m {
        let row = rx.row(antenna);
        for (user, &omega) in omega_hat.iter().enumerate() {
            for tap in 0..cfg.l {
                let t = user * cfg.l + tap;
                let derotate = Complex64::from_polar(1.0, -omega * t as f64);
                taps.push(row[t] * derotate * scale);
            }
        }
    }
    ChannelRealization::new(cfg.m, cfg.k, cfg.l, taps)
}
