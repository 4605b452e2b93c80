//! Waveform-level Monte-Carlo validation of the closed-form component
//! variances, and empirical CFO-estimator error measurement.
//!
//! Every trial simulates a fresh channel, CFOs, frames and noise, runs the
//! receiver, decomposes the detector output at a set of probe symbol times,
//! and accumulates per-component second and fourth moments. Results are
//! bit-reproducible for a given seed regardless of thread count: trial `i`
//! draws from ChaCha stream `i` of the seed, trials are accumulated in fixed
//! batches, and batches are merged in index order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic::{component_variances, ComponentVariances};
use crate::cfo::{analytic_residual_variance, draw_residual_cfo, estimate_cfo_full};
use crate::channel::{draw_cfos, draw_channel};
use crate::chest::estimate_channel;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::frame::{build_cfo_pilot_frame, build_ul_frame, draw_data_symbols, TxFrame};
use crate::trmrc::{decompose, DetectionContext};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trials per sequential batch; batches are the unit of parallelism.
const BATCH: u64 = 64;

/// How each trial obtains its CFO estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McMode {
    /// True CFOs drawn; the estimate is the truth plus a Gaussian error with
    /// the closed-form variance (waveform estimation bypassed).
    Analytic,
    /// True CFOs drawn; the estimate comes from the waveform-level
    /// correlation estimator run on a simulated CFO-estimation slot.
    Full,
    /// No CFO at all: truth and estimate are both zero.
    ZeroCfo,
}

/// Component names in accumulator order.
pub const COMPONENT_NAMES: [&str; 5] = ["es", "sif", "isi", "mui", "en"];

/// Streaming estimate of the variance of a zero-mean complex quantity:
/// holds `sum |x|^2` and `sum |x|^4`, so both the variance and its standard
/// error are available without storing samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VarAccumulator {
    n: u64,
    sum_sq: f64,
    sum_quad: f64,
}

impl VarAccumulator {
    fn push(&mut self, value: Complex64) {
        let sq = value.norm_sqr();
        self.n += 1;
        self.sum_sq += sq;
        self.sum_quad += sq * sq;
    }

    fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum_sq += other.sum_sq;
        self.sum_quad += other.sum_quad;
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `mean |x|^2` (the component mean is zero by construction).
    pub fn variance(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::EmptyStats);
        }
        Ok(self.sum_sq / self.n as f64)
    }

    /// Standard error of [`VarAccumulator::variance`]: `std(|x|^2) / sqrt(n)`.
    pub fn variance_se(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::EmptyStats);
        }
        let n = self.n as f64;
        let mean_sq = self.sum_sq / n;
        let spread = (self.sum_quad / n - mean_sq * mean_sq).max(0.0);
        Ok((spread / n).sqrt())
    }
}

/// Streaming estimate of a complex cross-moment (here `es * conj(en)`),
/// tracked separately per quadrature so each gets a z-score against zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CrossAccumulator {
    n: u64,
    sum_re: f64,
    sum_im: f64,
    sum_re_sq: f64,
    sum_im_sq: f64,
}

impl CrossAccumulator {
    fn push(&mut self, product: Complex64) {
        self.n += 1;
        self.sum_re += product.re;
        self.sum_im += product.im;
        self.sum_re_sq += product.re * product.re;
        self.sum_im_sq += product.im * product.im;
    }

    fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum_re += other.sum_re;
        self.sum_im += other.sum_im;
        self.sum_re_sq += other.sum_re_sq;
        self.sum_im_sq += other.sum_im_sq;
    }

    /// z-scores of the real and imaginary sample means against zero.
    pub fn z_scores(&self) -> Result<(f64, f64)> {
        if self.n == 0 {
            return Err(Error::EmptyStats);
        }
        let n = self.n as f64;
        let z = |sum: f64, sum_sq: f64| {
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            let se = (var / n).sqrt();
            if se == 0.0 {
                if mean.abs() <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                mean / se
            }
        };
        Ok((
            z(self.sum_re, self.sum_re_sq),
            z(self.sum_im, self.sum_im_sq),
        ))
    }
}

/// Accumulators for one (user, probe) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellStats {
    /// Variance accumulators in [`COMPONENT_NAMES`] order.
    pub components: [VarAccumulator; 5],
    /// Cross-moment of the effective signal with the noise component.
    pub es_en: CrossAccumulator,
}

/// Aggregated Monte-Carlo results.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    pub mode: McMode,
    pub probes: Vec<usize>,
    pub trials: u64,
    /// Cells ordered user-major: `cells[user * probes.len() + probe_idx]`.
    cells: Vec<CellStats>,
    /// Per-user accumulated squared and fourth-power CFO-estimate errors
    /// (populated in [`McMode::Full`] only).
    cfo_sq_err: Vec<f64>,
    cfo_quad_err: Vec<f64>,
    /// Signal/noise cross-products summed over all cells within each trial,
    /// one sample per trial. Cells within a trial share the channel and the
    /// estimation noise, so only trial-level aggregates are independent;
    /// this accumulator gives the pooled correlation a valid standard error.
    trial_cross: CrossAccumulator,
}

impl TrialStats {
    fn empty(mode: McMode, probes: &[usize], k_users: usize) -> Self {
        Self {
            mode,
            probes: probes.to_vec(),
            trials: 0,
            cells: vec![CellStats::default(); k_users * probes.len()],
            cfo_sq_err: vec![0.0; k_users],
            cfo_quad_err: vec![0.0; k_users],
            trial_cross: CrossAccumulator::default(),
        }
    }

    fn merge(&mut self, other: &Self) {
        self.trials += other.trials;
        for (mine, theirs) in self.cells.iter_mut().zip(&other.cells) {
            for (a, b) in mine.components.iter_mut().zip(&theirs.components) {
                a.merge(b);
            }
            mine.es_en.merge(&theirs.es_en);
        }
        for (a, b) in self.cfo_sq_err.iter_mut().zip(&other.cfo_sq_err) {
            *a += b;
        }
        for (a, b) in self.cfo_quad_err.iter_mut().zip(&other.cfo_quad_err) {
            *a += b;
        }
        self.trial_cross.merge(&other.trial_cross);
    }

    pub fn cell(&self, user: usize, probe_idx: usize) -> &CellStats {
        &self.cells[user * self.probes.len() + probe_idx]
    }

    /// Empirical CFO-estimator MSE pooled over users
    /// ([`McMode::Full`] runs only).
    pub fn cfo_mse_pooled(&self) -> Result<f64> {
        if self.trials == 0 {
            return Err(Error::EmptyStats);
        }
        let n = (self.trials * self.cfo_sq_err.len() as u64) as f64;
        Ok(self.cfo_sq_err.iter().sum::<f64>() / n)
    }

    /// Standard error of [`TrialStats::cfo_mse_pooled`].
    pub fn cfo_mse_pooled_se(&self) -> Result<f64> {
        let mse = self.cfo_mse_pooled()?;
        let n = (self.trials * self.cfo_sq_err.len() as u64) as f64;
        let quad = self.cfo_quad_err.iter().sum::<f64>() / n;
        Ok(((quad - mse * mse).max(0.0) / n).sqrt())
    }
}

/// Default probe set: 8 symbol times evenly spaced over the data span
/// (fewer if the span holds fewer than 8 symbols).
pub fn default_probes(cfg: &SystemConfig) -> Result<Vec<usize>> {
    let frame = cfg.validate()?;
    let span = frame.data_end - frame.data_start;
    let mut probes: Vec<usize> = (0..8)
        .map(|i| frame.data_start + (span * i + 3) / 7)
        .collect();
    probes.dedup();
    Ok(probes)
}

/// Run `n_trials` simulation trials and accumulate component statistics at
/// the given probe symbol times.
pub fn run_trials(
    cfg: &SystemConfig,
    n_trials: u64,
    mode: McMode,
    probes: &[usize],
    seed: u64,
) -> Result<TrialStats> {
    let frame = cfg.validate()?;
    if probes.is_empty() {
        return Err(Error::Dimension("probe set is empty".into()));
    }
    for &t in probes {
        if t < frame.data_start || t > frame.data_end {
            return Err(Error::Timeline(format!(
                "probe t={t} outside the data span [{}, {}]",
                frame.data_start, frame.data_end
            )));
        }
    }

    // Residual-CFO variances defining the deterministic effective-signal
    // gain (and, in analytic mode, the residual draw).
    let s2w_model: Vec<f64> = match mode {
        McMode::ZeroCfo => vec![0.0; cfg.k],
        _ => (0..cfg.k)
            .map(|u| analytic_residual_variance(cfg, u))
            .collect::<Result<_>>()?,
    };
    let pilot = match mode {
        McMode::Full => Some(build_cfo_pilot_frame(cfg)?),
        _ => None,
    };

    let n_batches = n_trials.div_ceil(BATCH);
    let batches: Vec<TrialStats> = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let mut acc = TrialStats::empty(mode, probes, cfg.k);
            let hi = ((batch + 1) * BATCH).min(n_trials);
            for trial in batch * BATCH..hi {
                run_one_trial(
                    cfg,
                    frame.n_d,
                    mode,
                    probes,
                    seed,
                    trial,
                    &s2w_model,
                    pilot.as_ref(),
                    &mut acc,
                )?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = TrialStats::empty(mode, probes, cfg.k);
    for batch in &batches {
        total.merge(batch);
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn run_one_trial(
    cfg: &SystemConfig,
    n_d: usize,
    mode: McMode,
    probes: &[usize],
    seed: u64,
    trial: u64,
    s2w_model: &[f64],
    pilot: Option<&TxFrame>,
    acc: &mut TrialStats,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);

    let channel = draw_channel(cfg, &mut rng);
    let (omegas, omega_hat) = match mode {
        McMode::ZeroCfo => (vec![0.0; cfg.k], vec![0.0; cfg.k]),
        McMode::Analytic => {
            let omegas = draw_cfos(cfg, &mut rng);
            let omega_hat = draw_residual_cfo(&omegas, s2w_model, &mut rng)?;
            (omegas, omega_hat)
        }
        McMode::Full => {
            let omegas = draw_cfos(cfg, &mut rng);
            let rx = crate::frame::propagate(
                pilot.expect("pilot frame built for full mode"),
                &channel,
                &omegas,
                cfg,
                &mut rng,
            )?;
            let omega_hat = estimate_cfo_full(&rx, cfg)?;
            (omegas, omega_hat)
        }
    };

    let data = draw_data_symbols(cfg, n_d, &mut rng);
    let tx = build_ul_frame(cfg, &data, &mut rng)?;
    let rx = crate::frame::propagate(&tx, &channel, &omegas, cfg, &mut rng)?;
    let estimate = estimate_channel(&rx, &omega_hat, cfg)?;

    let ctx = DetectionContext {
        tx: &tx,
        rx: &rx,
        channel: &channel,
        estimate: &estimate,
        omegas: &omegas,
        omega_hat: &omega_hat,
        sigma2_omega: s2w_model,
        cfg,
    };
    let mut cross_sum = Complex64::new(0.0, 0.0);
    for (probe_idx, &t) in probes.iter().enumerate() {
        for user in 0..cfg.k {
            let d = decompose(&ctx, user, t)?;
            let cell = &mut acc.cells[user * probes.len() + probe_idx];
            for (slot, value) in [d.es, d.sif, d.isi, d.mui, d.en].into_iter().enumerate() {
                cell.components[slot].push(value);
            }
            let product = d.es * d.en.conj();
            cell.es_en.push(product);
            cross_sum += product;
        }
    }
    acc.trial_cross.push(cross_sum);
    if mode == McMode::Full {
        for user in 0..cfg.k {
            let err = omega_hat[user] - omegas[user];
            acc.cfo_sq_err[user] += err * err;
            acc.cfo_quad_err[user] += err * err * err * err;
        }
    }
    acc.trials += 1;
    Ok(())
}

/// Statistics of the CFO estimator alone (no uplink slot): per-user squared
/// errors pooled into an MSE with standard error. Same determinism contract
/// as [`run_trials`].
#[derive(Debug, Clone, PartialEq)]
pub struct CfoMseStats {
    pub trials: u64,
    sum_sq: Vec<f64>,
    sum_quad: Vec<f64>,
}

impl CfoMseStats {
    pub fn mse_pooled(&self) -> Result<f64> {
        if self.trials == 0 {
            return Err(Error::EmptyStats);
        }
        let n = (self.trials * self.sum_sq.len() as u64) as f64;
        Ok(self.sum_sq.iter().sum::<f64>() / n)
    }

    pub fn mse_pooled_se(&self) -> Result<f64> {
        let mse = self.mse_pooled()?;
        let n = (self.trials * self.sum_sq.len() as u64) as f64;
        let quad = self.sum_quad.iter().sum::<f64>() / n;
        Ok(((quad - mse * mse).max(0.0) / n).sqrt())
    }
}

/// Measure the waveform-level CFO estimator's error over `n_trials`
/// simulated CFO-estimation slots.
pub fn estimator_mse_trials(cfg: &SystemConfig, n_trials: u64, seed: u64) -> Result<CfoMseStats> {
    cfg.validate()?;
    let pilot = build_cfo_pilot_frame(cfg)?;
    let n_batches = n_trials.div_ceil(BATCH);
    let batches: Vec<CfoMseStats> = (0..n_batches)
        .into_par_iter()
        .map(|batch| {
            let mut acc = CfoMseStats {
                trials: 0,
                sum_sq: vec![0.0; cfg.k],
                sum_quad: vec![0.0; cfg.k],
            };
            let hi = ((batch + 1) * BATCH).min(n_trials);
            for trial in batch * BATCH..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial);
                let channel = draw_channel(cfg, &mut rng);
                let omegas = draw_cfos(cfg, &mut rng);
                let rx = crate::frame::propagate(&pilot, &channel, &omegas, cfg, &mut rng)?;
                let omega_hat = estimate_cfo_full(&rx, cfg)?;
                for user in 0..cfg.k {
                    let err = omega_hat[user] - omegas[user];
                    acc.sum_sq[user] += err * err;
                    acc.sum_quad[user] += err * err * err * err;
                }
                acc.trials += 1;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = CfoMseStats {
        trials: 0,
        sum_sq: vec![0.0; cfg.k],
        sum_quad: vec![0.0; cfg.k],
    };
    for batch in &batches {
        total.trials += batch.trials;
        for (a, b) in total.sum_sq.iter_mut().zip(&batch.sum_sq) {
            *a += b;
        }
        for (a, b) in total.sum_quad.iter_mut().zip(&batch.sum_quad) {
            *a += b;
        }
    }
    Ok(total)
}

/// One variance cell compared against its closed-form expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct CellComparison {
    pub user: usize,
    pub t: usize,
    pub component: &'static str,
    pub expected: f64,
    pub observed: f64,
    pub std_err: f64,
    pub z: f64,
}

/// One effective-signal/noise correlation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCell {
    pub user: usize,
    pub t: usize,
    pub z_re: f64,
    pub z_im: f64,
}

/// Full comparison of Monte-Carlo statistics against the closed-form model.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub cells: Vec<CellComparison>,
    pub correlations: Vec<CorrelationCell>,
    /// Effective-signal/noise correlation z-scores (re, im) pooled over all
    /// cells, with trials as the independent unit.
    pub pooled_correlation_z: (f64, f64),
    /// Fraction of variance cells with `|z| <= 3`.
    pub pass_fraction: f64,
    /// Fraction of correlation cells with both `|z| <= 3`.
    pub correlation_pass_fraction: f64,
}

impl ComparisonReport {
    /// Statistical agreement: at least 95% of variance cells within 3
    /// standard errors, at least 95% of per-cell correlations within 3
    /// standard errors of zero, and the pooled correlation within 3 as well.
    pub fn passes(&self) -> bool {
        self.pass_fraction >= 0.95
            && self.correlation_pass_fraction >= 0.95
            && self.pooled_correlation_z.0.abs() <= 3.0
            && self.pooled_correlation_z.1.abs() <= 3.0
    }
}

/// Compare accumulated statistics against the closed-form component
/// variances for the run's own mode.
pub fn compare(stats: &TrialStats, cfg: &SystemConfig) -> Result<ComparisonReport> {
    let expected = expected_variances(stats, cfg)?;
    compare_with_expectations(stats, cfg, &expected)
}

/// Closed-form expectations matching a run's mode, cell by cell.
pub fn expected_variances(
    stats: &TrialStats,
    cfg: &SystemConfig,
) -> Result<Vec<ComponentVariances>> {
    let mut expected = Vec::with_capacity(cfg.k * stats.probes.len());
    for user in 0..cfg.k {
        let s2w = match stats.mode {
            McMode::ZeroCfo => 0.0,
            _ => analytic_residual_variance(cfg, user)?,
        };
        for &t in &stats.probes {
            expected.push(component_variances(cfg, user, t, s2w));
        }
    }
    Ok(expected)
}

/// Compare against explicit expectations (cells ordered user-major, probes
/// inner). Exposed so a deliberately corrupted expectation can serve as a
/// negative control for the test's statistical power.
pub fn compare_with_expectations(
    stats: &TrialStats,
    cfg: &SystemConfig,
    expected: &[ComponentVariances],
) -> Result<ComparisonReport> {
    if stats.trials == 0 {
        return Err(Error::EmptyStats);
    }
    let n_probes = stats.probes.len();
    if expected.len() != cfg.k * n_probes {
        return Err(Error::Dimension(format!(
            "{} expectation cells for {} users x {} probes",
            expected.len(),
            cfg.k,
            n_probes
        )));
    }
    let mut cells = Vec::with_capacity(cfg.k * n_probes * 5);
    let mut correlations = Vec::with_capacity(cfg.k * n_probes);
    let mut pass = 0usize;
    let mut corr_pass = 0usize;
    for user in 0..cfg.k {
        for (probe_idx, &t) in stats.probes.iter().enumerate() {
            let cell = stats.cell(user, probe_idx);
            let exp = &expected[user * n_probes + probe_idx];
            let values = [exp.es, exp.sif, exp.isi, exp.mui, exp.en];
            for (slot, &expected_var) in values.iter().enumerate() {
                let acc = &cell.components[slot];
                let observed = acc.variance()?;
                let std_err = acc.variance_se()?;
                let z = if std_err == 0.0 {
                    if (observed - expected_var).abs() <= 1e-12 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (observed - expected_var) / std_err
                };
                if z.abs() <= 3.0 {
                    pass += 1;
                }
                cells.push(CellComparison {
                    user,
                    t,
                    component: COMPONENT_NAMES[slot],
                    expected: expected_var,
                    observed,
                    std_err,
                    z,
                });
            }
            let (z_re, z_im) = cell.es_en.z_scores()?;
            if z_re.abs() <= 3.0 && z_im.abs() <= 3.0 {
                corr_pass += 1;
            }
            correlations.push(CorrelationCell {
                user,
                t,
                z_re,
                z_im,
            });
        }
    }
    let pooled_correlation_z = stats.trial_cross.z_scores()?;
    Ok(ComparisonReport {
        pass_fraction: pass as f64 / cells.len() as f64,
        correlation_pass_fraction: corr_pass as f64 / correlations.len() as f64,
        cells,
        correlations,
        pooled_correlation_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PowerDelayProfile;

    fn mc_cfg() -> SystemConfig {
        SystemConfig {
            m: 8,
            k: 2,
            l: 2,
            n: 80,
            n_u: 60,
            p_u: 10f64.powf(0.5),
            sigma2: 1.0,
            pdp: PowerDelayProfile::uniform(2, 2),
            ..SystemConfig::default()
        }
    }

    #[test]
    fn default_probe_layout() {
        let cfg = SystemConfig::default();
        let probes = default_probes(&cfg).unwrap();
        assert_eq!(probes.len(), 8);
        assert_eq!(*probes.first().unwrap(), 109);
        assert_eq!(*probes.last().unwrap(), 1990);
        for pair in probes.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let cfg = mc_cfg();
        let probes = default_probes(&cfg).unwrap();
        let a = run_trials(&cfg, 130, McMode::Analytic, &probes, 42).unwrap();
        let b = run_trials(&cfg, 130, McMode::Analytic, &probes, 42).unwrap();
        assert_eq!(a, b);

        // Identical results on a single-threaded pool: merge order is fixed.
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = pool.install(|| run_trials(&cfg, 130, McMode::Analytic, &probes, 42).unwrap());
        assert_eq!(a, c);

        let d = run_trials(&cfg, 130, McMode::Analytic, &probes, 43).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn empty_runs_release_no_statistics() {
        let cfg = mc_cfg();
        let probes = default_probes(&cfg).unwrap();
        let stats = run_trials(&cfg, 0, McMode::Analytic, &probes, 1).unwrap();
        assert!(matches!(compare(&stats, &cfg), Err(Error::EmptyStats)));
        assert!(matches!(
            stats.cell(0, 0).components[0].variance(),
            Err(Error::EmptyStats)
        ));
    }

    #[test]
    fn probes_must_lie_in_the_data_span() {
        let cfg = mc_cfg();
        let frame = cfg.validate().unwrap();
        for bad in [frame.data_start - 1, frame.data_end + 1] {
            assert!(matches!(
                run_trials(&cfg, 1, McMode::Analytic, &[bad], 1),
                Err(Error::Timeline(_))
            ));
        }
        assert!(run_trials(&cfg, 1, McMode::Analytic, &[], 1).is_err());
    }

    #[test]
    fn variances_agree_with_model_at_moderate_scale() {
        let cfg = mc_cfg();
        let probes = default_probes(&cfg).unwrap();
        let stats = run_trials(&cfg, 6000, McMode::Analytic, &probes, 7).unwrap();
        let report = compare(&stats, &cfg).unwrap();
        assert!(
            report.passes(),
            "pass fraction {}, correlation fraction {}, pooled z {:?}",
            report.pass_fraction,
            report.correlation_pass_fraction,
            report.pooled_correlation_z
        );
    }

    #[test]
    fn zero_cfo_mode_has_flat_signal_statistics() {
        let cfg = mc_cfg();
        let probes = default_probes(&cfg).unwrap();
        let stats = run_trials(&cfg, 3000, McMode::ZeroCfo, &probes, 11).unwrap();
        let report = compare(&stats, &cfg).unwrap();
        let worst: Vec<String> = report
            .cells
            .iter()
            .filter(|c| c.z.abs() > 3.0)
            .map(|c| {
                format!(
                    "user {} t {} {}: expected {:.4e} observed {:.4e} z {:+.2}",
                    c.user, c.t, c.component, c.expected, c.observed, c.z
                )
            })
            .collect();
        assert!(
            report.passes(),
            "pass fraction {}, correlation fraction {}, pooled z {:?}\n{}",
            report.pass_fraction,
            report.correlation_pass_fraction,
            report.pooled_correlation_z,
            worst.join("\n")
        );
        // The effective-signal expectation is identical at every probe.
        let expected = expected_variances(&stats, &cfg).unwrap();
        let first = expected[0].es;
        for exp in &expected[..probes.len()] {
            assert_eq!(exp.es, first);
        }
    }

    #[test]
    fn corrupted_expectation_is_detected() {
        let cfg = mc_cfg();
        let probes = default_probes(&cfg).unwrap();
        let stats = run_trials(&cfg, 6000, McMode::Analytic, &probes, 7).unwrap();
        let mut expected = expected_variances(&stats, &cfg).unwrap();
        for exp in &mut expected {
            exp.mui *= 1.5;
        }
        let report = compare_with_expectations(&stats, &cfg, &expected).unwrap();
        // Every corrupted cell must be flagged.
        let mui_cells: Vec<_> = report
            .cells
            .iter()
            .filter(|c| c.component == "mui")
            .collect();
        assert!(mui_cells.iter().all(|c| c.z < -3.0));
        assert!(!report.passes());
    }

    #[test]
    fn estimator_error_statistics_are_reproducible_and_sane() {
        let cfg = SystemConfig {
            m: 16,
            n_u: 60,
            ..mc_cfg()
        };
        let a = estimator_mse_trials(&cfg, 600, 99).unwrap();
        let b = estimator_mse_trials(&cfg, 600, 99).unwrap();
        assert_eq!(a, b);
        let mse = a.mse_pooled().unwrap();
        let se = a.mse_pooled_se().unwrap();
        let predicted = analytic_residual_variance(&cfg, 0).unwrap();
        // Loose smoke bound; the tight check is in the acceptance suite.
        assert!(
            (mse - predicted).abs() <= 6.0 * se.max(predicted * 0.2),
            "mse {mse} vs predicted {predicted} (se {se})"
        );
        let empty = estimator_mse_trials(&cfg, 0, 1).unwrap();
        assert!(matches!(empty.mse_pooled(), Err(Error::EmptyStats)));
    }

    #[test]
    fn full_mode_records_estimator_errors() {
        let cfg = mc_cfg();
        let probes = default_probes(&cfg).unwrap();
        let stats = run_trials(&cfg, 400, McMode::Full, &probes, 5).unwrap();
        let mse = stats.cfo_mse_pooled().unwrap();
        assert!(mse > 0.0);
        let predicted = analytic_residual_variance(&cfg, 0).unwrap();
        assert!(mse / predicted > 0.2 && mse / predicted < 5.0);
        let report = compare(&stats, &cfg).unwrap();
        // 400 trials is enough for the coarse shape; just ensure it computes.
        assert!(report.pass_fraction > 0.5);
    }
}
