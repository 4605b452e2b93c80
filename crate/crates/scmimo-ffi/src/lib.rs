//! C ABI over the closed-form engine: opaque configuration handles, status
//! codes, and scalar evaluators for rate, minimum SNR, SNR gap, residual-CFO
//! variance, and the phase-error coefficient.
//!
//! Conventions:
//! * Every fallible call returns [`ScmimoStatus`]; results go to `out`
//!   pointers that are written only on [`ScmimoStatus::Ok`].
//! * On failure, a thread-local message is set; fetch it with
//!   [`scmimo_last_error_message`]. The pointer stays valid until the next
//!   failing call on the same thread.
//! * Configuration handles come from [`scmimo_config_new`], are mutated with
//!   [`scmimo_config_set`] (the config-file `key`/`value` vocabulary), and
//!   must be released with [`scmimo_config_free`]. Setting a key only parses
//!   and resolves it; structural invariants (slot lengths, profile shape,
//!   CFO bound) are checked by [`scmimo_config_validate`] and by every
//!   evaluator, so keys can be set in any order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use scmimo_core::analytic::{min_snr_for_rate, rate, snr_gap_db, RateMode};
use scmimo_core::cfo::analytic_residual_variance;
use scmimo_core::config::ConfigBuilder;
use scmimo_core::{Error, SystemConfig};

/// Result of every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScmimoStatus {
    /// Success; `out` parameters hold the results.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration is invalid: unknown key, unparseable value, or a
    /// system that fails structural validation.
    InvalidConfig = 3,
    /// An argument is outside the model's domain (user index, symbol time,
    /// degenerate expression input).
    Domain = 4,
    /// The requested target cannot be reached at any admissible SNR.
    Unachievable = 5,
    /// Internal failure; the error message has details.
    Internal = 6,
}

/// CFO handling assumed by the evaluators.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScmimoCfoMode {
    /// Residual CFO with the closed-form post-estimation variance.
    Residual = 0,
    /// Ideal synchronization (no CFO).
    ZeroCfo = 1,
}

impl From<ScmimoCfoMode> for RateMode {
    fn from(mode: ScmimoCfoMode) -> Self {
        match mode {
            ScmimoCfoMode::Residual => RateMode::Residual,
            ScmimoCfoMode::ZeroCfo => RateMode::ZeroCfo,
        }
    }
}

/// Solved SNR requirements for a rate target.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ScmimoGapReport {
    /// Required receive SNR (dB) under residual CFO.
    pub gamma_required_db: f64,
    /// Required receive SNR (dB) with perfect synchronization.
    pub gamma0_required_db: f64,
    /// `gamma_required_db - gamma0_required_db`.
    pub gap_db: f64,
    /// Phase-error coefficient at the user's final data symbol.
    pub alpha_kt: f64,
    /// Denominator floor `1/(m k gamma^2)` at the residual-CFO requirement.
    pub theta_limit: f64,
}

/// Opaque system description; create with [`scmimo_config_new`].
pub struct ScmimoConfig {
    builder: ConfigBuilder,
    built: SystemConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn status_of(err: &Error) -> ScmimoStatus {
    match err {
        Error::Parse(_) | Error::Dimension(_) | Error::Timeline(_) | Error::CfoBound(_) => {
            ScmimoStatus::InvalidConfig
        }
        Error::Domain(_) | Error::Degenerate(_) | Error::EmptyStats => ScmimoStatus::Domain,
        Error::Unachievable(_) => ScmimoStatus::Unachievable,
        Error::Format(_) | Error::Io(_) => ScmimoStatus::Internal,
    }
}

fn fail(err: &Error) -> ScmimoStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run `body`, write its value to `out` on success, and map its error (or a
/// panic) to a status with the message recorded.
fn guarded<T>(out: *mut T, body: impl FnOnce() -> Result<T, Error>) -> ScmimoStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return ScmimoStatus::NullArgument;
    }
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => {
            // SAFETY: `out` is non-null and the caller promises it points to
            // a writable T (see each function's Safety section).
            unsafe { out.write(value) };
            ScmimoStatus::Ok
        }
        Ok(Err(err)) => fail(&err),
        Err(_) => {
            set_error("internal panic");
            ScmimoStatus::Internal
        }
    }
}

unsafe fn config_ref<'a>(cfg: *const ScmimoConfig) -> Result<&'a ScmimoConfig, ScmimoStatus> {
    cfg.as_ref().ok_or_else(|| {
        set_error("configuration handle is null");
        ScmimoStatus::NullArgument
    })
}

unsafe fn utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, ScmimoStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} is null"));
        return Err(ScmimoStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        ScmimoStatus::InvalidUtf8
    })
}

fn check_user(cfg: &SystemConfig, user: u32) -> Result<usize, Error> {
    let user = user as usize;
    if user >= cfg.k {
        return Err(Error::Domain(format!(
            "user index {user} out of range for {} users",
            cfg.k
        )));
    }
    Ok(user)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scmimo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread (empty if none).
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn scmimo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create a configuration handle holding the default system (160 antennas,
/// 10 users, 10 taps, 2000-sample slots, uniform power-delay profile).
/// Release it with [`scmimo_config_free`]. Never returns null.
#[no_mangle]
pub extern "C" fn scmimo_config_new() -> *mut ScmimoConfig {
    Box::into_raw(Box::new(ScmimoConfig {
        builder: ConfigBuilder::new(),
        built: SystemConfig::default(),
    }))
}

/// Set one configuration key using the config-file vocabulary: `m`, `k`,
/// `l`, `n`, `n_u`, `p_u`, `sigma2`, `kappa_ppm`, `f_c_hz`, `bw_hz`, `pdp`,
/// `pdp.<user>`, `allow_wide_cfo`. Power values accept `dB`/`linear`
/// suffixes. On error the handle keeps its previous state.
///
/// # Safety
/// `cfg` must be a live handle from [`scmimo_config_new`]; `key` and `value`
/// must be NUL-terminated strings. No other thread may use `cfg`
/// concurrently.
#[no_mangle]
pub unsafe extern "C" fn scmimo_config_set(
    cfg: *mut ScmimoConfig,
    key: *const c_char,
    value: *const c_char,
) -> ScmimoStatus {
    let Some(handle) = cfg.as_mut() else {
        set_error("configuration handle is null");
        return ScmimoStatus::NullArgument;
    };
    let key = match utf8(key, "key") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let value = match utf8(value, "value") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let mut candidate = handle.builder.clone();
    let resolved = candidate
        .set_pair(&format!("{key}={value}"))
        .and_then(|pending| pending.build());
    match resolved {
        Ok(built) => {
            handle.builder = candidate;
            handle.built = built;
            ScmimoStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// Check the handle's system as a whole: positive dimensions, profile shape,
/// slot lengths, and the small-angle CFO bound.
///
/// # Safety
/// `cfg` must be a live handle from [`scmimo_config_new`].
#[no_mangle]
pub unsafe extern "C" fn scmimo_config_validate(cfg: *const ScmimoConfig) -> ScmimoStatus {
    let handle = match config_ref(cfg) {
        Ok(handle) => handle,
        Err(status) => return status,
    };
    match handle.built.validate() {
        Ok(_) => ScmimoStatus::Ok,
        Err(err) => fail(&err),
    }
}

/// Release a configuration handle. Passing null is a no-op.
///
/// # Safety
/// `cfg` must be null or a handle from [`scmimo_config_new`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn scmimo_config_free(cfg: *mut ScmimoConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Whole-frame achievable rate (bits per channel use) for `user` at the
/// configured transmit power.
///
/// # Safety
/// `cfg` must be a live handle; `out_bpcu` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn scmimo_rate(
    cfg: *const ScmimoConfig,
    user: u32,
    mode: ScmimoCfoMode,
    out_bpcu: *mut f64,
) -> ScmimoStatus {
    let handle = match config_ref(cfg) {
        Ok(handle) => handle,
        Err(status) => return status,
    };
    guarded(out_bpcu, || {
        let user = check_user(&handle.built, user)?;
        rate(&handle.built, user, mode.into())
    })
}

/// Smallest receive SNR (dB) at which `user` achieves `target_bpcu`.
///
/// # Safety
/// `cfg` must be a live handle; `out_db` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn scmimo_min_snr_db(
    cfg: *const ScmimoConfig,
    user: u32,
    target_bpcu: f64,
    mode: ScmimoCfoMode,
    out_db: *mut f64,
) -> ScmimoStatus {
    let handle = match config_ref(cfg) {
        Ok(handle) => handle,
        Err(status) => return status,
    };
    guarded(out_db, || {
        let user = check_user(&handle.built, user)?;
        min_snr_for_rate(&handle.built, user, target_bpcu, mode.into())
    })
}

/// Required SNRs with and without residual CFO at `target_bpcu`, and their
/// gap.
///
/// # Safety
/// `cfg` must be a live handle; `out` must point to a writable
/// [`ScmimoGapReport`].
#[no_mangle]
pub unsafe extern "C" fn scmimo_snr_gap_db(
    cfg: *const ScmimoConfig,
    user: u32,
    target_bpcu: f64,
    out: *mut ScmimoGapReport,
) -> ScmimoStatus {
    let handle = match config_ref(cfg) {
        Ok(handle) => handle,
        Err(status) => return status,
    };
    guarded(out, || {
        let user = check_user(&handle.built, user)?;
        let report = snr_gap_db(&handle.built, user, target_bpcu)?;
        Ok(ScmimoGapReport {
            gamma_required_db: report.gamma_required_db,
            gamma0_required_db: report.gamma0_required_db,
            gap_db: report.gap_db,
            alpha_kt: report.alpha_kt,
            theta_limit: report.theta_limit,
        })
    })
}

/// Closed-form residual-CFO variance (rad²/sample²) for `user` after
/// estimation at the configured power.
///
/// # Safety
/// `cfg` must be a live handle; `out_var` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn scmimo_cfo_residual_variance(
    cfg: *const ScmimoConfig,
    user: u32,
    out_var: *mut f64,
) -> ScmimoStatus {
    let handle = match config_ref(cfg) {
        Ok(handle) => handle,
        Err(status) => return status,
    };
    guarded(out_var, || {
        let user = check_user(&handle.built, user)?;
        handle.built.validate()?;
        analytic_residual_variance(&handle.built, user)
    })
}

/// Phase-error coefficient α for `user` at symbol time `t` (the quantity in
/// the asymptotic gap `5·log10(1+α)`).
///
/// # Safety
/// `cfg` must be a live handle; `out_alpha` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn scmimo_alpha(
    cfg: *const ScmimoConfig,
    user: u32,
    t: u64,
    out_alpha: *mut f64,
) -> ScmimoStatus {
    let handle = match config_ref(cfg) {
        Ok(handle) => handle,
        Err(status) => return status,
    };
    guarded(out_alpha, || {
        let user = check_user(&handle.built, user)?;
        let frame = handle.built.validate()?;
        let t = t as usize;
        if t > frame.data_end {
            return Err(Error::Domain(format!(
                "symbol time {t} beyond last data symbol {}",
                frame.data_end
            )));
        }
        Ok(scmimo_core::analytic::alpha(&handle.built, user, t))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn c(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    unsafe fn set(cfg: *mut ScmimoConfig, key: &str, value: &str) -> ScmimoStatus {
        scmimo_config_set(cfg, c(key).as_ptr(), c(value).as_ptr())
    }

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(scmimo_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    #[test]
    fn round_trip_solves_reference_point() {
        unsafe {
            let cfg = scmimo_config_new();
            assert_eq!(set(cfg, "m", "40"), ScmimoStatus::Ok);
            assert_eq!(scmimo_config_validate(cfg), ScmimoStatus::Ok);

            let mut snr_db = f64::NAN;
            let status = scmimo_min_snr_db(cfg, 0, 1.0, ScmimoCfoMode::Residual, &mut snr_db);
            assert_eq!(status, ScmimoStatus::Ok);
            assert!((snr_db - -9.5430).abs() < 2e-3, "got {snr_db}");

            // At that exact power the rate evaluator returns the target.
            assert_eq!(set(cfg, "p_u", &format!("{snr_db} dB")), ScmimoStatus::Ok);
            let mut bpcu = f64::NAN;
            let status = scmimo_rate(cfg, 0, ScmimoCfoMode::Residual, &mut bpcu);
            assert_eq!(status, ScmimoStatus::Ok);
            assert!((bpcu - 1.0).abs() < 1e-3, "got {bpcu}");

            scmimo_config_free(cfg);
        }
    }

    #[test]
    fn gap_report_matches_direct_evaluation() {
        unsafe {
            let cfg = scmimo_config_new();
            let mut report = ScmimoGapReport {
                gamma_required_db: f64::NAN,
                gamma0_required_db: f64::NAN,
                gap_db: f64::NAN,
                alpha_kt: f64::NAN,
                theta_limit: f64::NAN,
            };
            assert_eq!(
                scmimo_snr_gap_db(cfg, 0, 3.0, &mut report),
                ScmimoStatus::Ok
            );
            let direct = snr_gap_db(&SystemConfig::default(), 0, 3.0).unwrap();
            assert_eq!(report.gamma_required_db, direct.gamma_required_db);
            assert_eq!(report.gamma0_required_db, direct.gamma0_required_db);
            assert_eq!(report.gap_db, direct.gap_db);
            assert_eq!(report.alpha_kt, direct.alpha_kt);
            assert_eq!(report.theta_limit, direct.theta_limit);
            assert_eq!(
                report.gap_db,
                report.gamma_required_db - report.gamma0_required_db
            );
            scmimo_config_free(cfg);
        }
    }

    #[test]
    fn scalar_evaluators_agree_with_core() {
        unsafe {
            let cfg = scmimo_config_new();
            let mut var = f64::NAN;
            assert_eq!(
                scmimo_cfo_residual_variance(cfg, 0, &mut var),
                ScmimoStatus::Ok
            );
            let core = analytic_residual_variance(&SystemConfig::default(), 0).unwrap();
            assert_eq!(var, core);

            let mut a = f64::NAN;
            assert_eq!(scmimo_alpha(cfg, 0, 1990, &mut a), ScmimoStatus::Ok);
            assert_eq!(
                a,
                scmimo_core::analytic::alpha(&SystemConfig::default(), 0, 1990)
            );
            scmimo_config_free(cfg);
        }
    }

    #[test]
    fn errors_set_status_and_message() {
        unsafe {
            let cfg = scmimo_config_new();

            assert_eq!(set(cfg, "bogus", "1"), ScmimoStatus::InvalidConfig);
            assert!(last_error().contains("bogus"), "message: {}", last_error());
            // Failed sets leave the handle usable with its previous state.
            assert_eq!(scmimo_config_validate(cfg), ScmimoStatus::Ok);
            assert_eq!(set(cfg, "p_u", "not a number"), ScmimoStatus::InvalidConfig);
            assert_eq!(scmimo_config_validate(cfg), ScmimoStatus::Ok);

            // A key can resolve yet leave the system structurally invalid;
            // validation and the evaluators both surface that.
            assert_eq!(set(cfg, "n", "10"), ScmimoStatus::Ok);
            assert_eq!(scmimo_config_validate(cfg), ScmimoStatus::InvalidConfig);
            let mut out = f64::NAN;
            assert_eq!(
                scmimo_rate(cfg, 0, ScmimoCfoMode::Residual, &mut out),
                ScmimoStatus::InvalidConfig
            );
            assert!(out.is_nan(), "out must not be written on failure");
            assert_eq!(set(cfg, "n", "2000"), ScmimoStatus::Ok);
            assert_eq!(scmimo_config_validate(cfg), ScmimoStatus::Ok);

            assert_eq!(
                scmimo_rate(cfg, 99, ScmimoCfoMode::Residual, &mut out),
                ScmimoStatus::Domain
            );
            assert!(last_error().contains("user index 99"));
            assert_eq!(
                scmimo_min_snr_db(cfg, 0, 1.0e9, ScmimoCfoMode::Residual, &mut out),
                ScmimoStatus::Unachievable
            );
            assert!(out.is_nan(), "out must not be written on failure");

            assert_eq!(
                scmimo_min_snr_db(cfg, 0, 1.0, ScmimoCfoMode::Residual, ptr::null_mut()),
                ScmimoStatus::NullArgument
            );
            assert_eq!(
                scmimo_rate(ptr::null(), 0, ScmimoCfoMode::Residual, &mut out),
                ScmimoStatus::NullArgument
            );
            assert_eq!(scmimo_alpha(cfg, 0, 5000, &mut out), ScmimoStatus::Domain);

            scmimo_config_free(cfg);
            scmimo_config_free(ptr::null_mut());
        }
    }

    #[test]
    fn version_and_header_exist() {
        unsafe {
            let version = CStr::from_ptr(scmimo_version()).to_str().unwrap();
            assert_eq!(version, env!("CARGO_PKG_VERSION"));
        }
        // The committed header must carry the full surface (drift guard; the
        // build script regenerates it from this file).
        let header =
            std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/scmimo.h"))
                .expect("committed header present");
        for symbol in [
            "scmimo_config_new",
            "scmimo_config_set",
            "scmimo_config_validate",
            "scmimo_config_free",
            "scmimo_rate",
            "scmimo_min_snr_db",
            "scmimo_snr_gap_db",
            "scmimo_cfo_residual_variance",
            "scmimo_alpha",
            "scmimo_last_error_message",
            "scmimo_version",
            "ScmimoStatus",
            "ScmimoGapReport",
            "ScmimoCfoMode",
        ] {
            assert!(header.contains(symbol), "header missing {symbol}");
        }
    }
}
