//! Command-line front end: named, reproducible experiments over the
//! closed-form engine and the Monte-Carlo harness, emitting CSV with a
//! `#`-comment header (resolved configuration, seed, version, columns).
//!
//! dB convention: every dB value is 10·log10 of a linear power ratio.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 a tolerance check
//! failed (the run itself succeeded; the numbers are in the output).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scmimo_core::analytic::{
    alpha, asymptotic_gap_db, min_snr_for_rate, min_snr_for_sinr_at, snr_gap_db, RateMode,
};
use scmimo_core::cfo::mse_cfo;
use scmimo_core::config::ConfigBuilder;
use scmimo_core::montecarlo::{compare, default_probes, estimator_mse_trials, run_trials, McMode};
use scmimo_core::{Error, SystemConfig};

/// Reference minimum-SNR points (antennas, dB) at 1 bpcu for the ten-user,
/// ten-tap, 2000-sample system; used for the comparison columns of `table2`.
const REFERENCE_MIN_SNR_1BPCU: [(usize, f64); 5] = [
    (40, -9.5266),
    (80, -12.2927),
    (160, -14.5049),
    (320, -16.4462),
    (640, -18.2341),
];

/// Reference SNR-gap spot points (delay spread, dB, tolerance) at 3 bpcu,
/// M = 160, for the comparison column of `fig2`.
const REFERENCE_GAP_3BPCU: [(usize, f64, f64); 2] = [(1, 4.22, 0.05), (20, 0.07, 0.02)];

#[derive(Parser)]
#[command(
    name = "scmimo",
    version,
    about = "Closed-form analysis and waveform simulation of a multi-user \
             massive-array uplink with residual carrier-frequency offsets",
    long_about = None,
    after_help = "All dB values are 10*log10 of linear power ratios.\n\
                  Exit codes: 0 success, 1 usage/config error, 2 tolerance-check failure."
)]
struct Cli {
    /// Configuration file (`key = value` lines, `#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration key (repeatable), e.g. --set m=320.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Random seed for the Monte-Carlo commands (recorded in every header).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Write the CSV here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Trial count for the Monte-Carlo commands (0 = the command's default).
    #[arg(long, global = true, default_value_t = 0)]
    trials: u64,

    /// CFO handling in `variance-check` trials.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Analytic)]
    mode: ModeArg,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Draw the residual CFO from its closed-form distribution.
    Analytic,
    /// Run the waveform-level CFO estimator each trial.
    Full,
    /// No CFO at all (ideal synchronization).
    #[value(name = "zero_cfo")]
    ZeroCfo,
}

impl From<ModeArg> for McMode {
    fn from(value: ModeArg) -> Self {
        match value {
            ModeArg::Analytic => McMode::Analytic,
            ModeArg::Full => McMode::Full,
            ModeArg::ZeroCfo => McMode::ZeroCfo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Minimum required SNR (dB) for a target rate across an antenna sweep,
    /// with reference columns when run at the reference operating point.
    Table2 {
        /// Target whole-frame rate in bits per channel use.
        #[arg(long, default_value_t = 1.0)]
        target: f64,
        /// Antenna counts to solve for.
        #[arg(long, value_delimiter = ',', default_values_t = vec![40, 80, 160, 320, 640])]
        antennas: Vec<usize>,
    },
    /// SNR gap (dB) between residual-CFO and zero-CFO operation over a
    /// (delay spread × rate) grid.
    Fig2 {
        /// Delay spreads (channel taps per user) to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 3, 5, 10, 20])]
        spreads: Vec<usize>,
        /// Target rates (bpcu) to sweep.
        #[arg(
            long,
            value_delimiter = ',',
            default_values_t = vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]
        )]
        rates: Vec<f64>,
    },
    /// Monte-Carlo check of the five component variances and the
    /// signal/noise uncorrelatedness against the closed forms
    /// (default system: 16 antennas, 2 users, 2 taps).
    VarianceCheck,
    /// Measured CFO-estimator MSE vs the closed-form prediction across an
    /// antenna sweep (default system: 2 users, 2 taps, 160-sample slot).
    MseCheck {
        /// Antenna counts to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![16, 64, 256])]
        antennas: Vec<usize>,
    },
    /// Finite-M per-symbol SNR gap vs the asymptotic law 5·log10(1+α).
    GapAsymptotic {
        /// Per-symbol rate target (bpcu) for every row (default: per-row
        /// values chosen inside the law's validity regime).
        #[arg(long)]
        target_rate: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap handles --help/--version as "errors" with successful exit.
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Table2 { target, antennas } => table2(cli, *target, antennas),
        Command::Fig2 { spreads, rates } => fig2(cli, spreads, rates),
        Command::VarianceCheck => variance_check(cli),
        Command::MseCheck { antennas } => mse_check(cli, antennas),
        Command::GapAsymptotic { target_rate } => gap_asymptotic(cli, *target_rate),
    }
}

/// Resolve the configuration: defaults, then the command's own base
/// assignments, then `--config`, then `--set` overrides (later wins).
fn resolve_config(cli: &Cli, base: &[&str]) -> Result<SystemConfig, Error> {
    let mut builder = ConfigBuilder::new();
    for pair in base {
        builder.set_pair(pair)?;
    }
    if let Some(path) = &cli.config {
        builder.load_file(path)?;
    }
    for pair in &cli.set {
        builder.set_pair(pair)?;
    }
    builder.build()
}

/// CSV header: version, command, seed, resolved config, extra notes, and the
/// column list — every line `#`-prefixed.
fn header(cmd: &str, cfg: &SystemConfig, seed: u64, extra: &[String], columns: &str) -> String {
    let mut s = format!(
        "# scmimo {}\n# command: {cmd}\n# seed: {seed}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (key, value) in cfg.describe() {
        s.push_str(&format!("# {key} = {value}\n"));
    }
    for line in extra {
        s.push_str(&format!("# {line}\n"));
    }
    s.push_str(&format!("# columns: {columns}\n"));
    s
}

fn emit(cli: &Cli, text: &str) -> Result<(), Error> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// True when the resolved config matches the reference operating point
/// (every field of the default system except the antenna count, which the
/// sweeps override per row).
fn at_reference_point(cfg: &SystemConfig) -> bool {
    let reference = SystemConfig::default();
    cfg.k == reference.k
        && cfg.l == reference.l
        && cfg.n == reference.n
        && cfg.n_u == reference.n_u
        && cfg.sigma2 == reference.sigma2
        && cfg.kappa_ppm == reference.kappa_ppm
        && cfg.f_c_hz == reference.f_c_hz
        && cfg.bw_hz == reference.bw_hz
        && cfg.pdp.is_uniform()
}

fn table2(cli: &Cli, target: f64, antennas: &[usize]) -> Result<ExitCode, Error> {
    let base = resolve_config(cli, &[])?;
    let with_reference = at_reference_point(&base) && target == 1.0;
    let mut extra = vec![format!("target_bpcu: {target}")];
    if !with_reference {
        extra.push("reference columns omitted: not at the reference operating point".into());
    }
    let mut body = String::new();
    let mut violations = Vec::new();
    for &m in antennas {
        let cfg = SystemConfig { m, ..base.clone() };
        let gamma_db = min_snr_for_rate(&cfg, 0, target, RateMode::Residual)?;
        let reference = with_reference
            .then(|| {
                REFERENCE_MIN_SNR_1BPCU
                    .iter()
                    .find(|(rm, _)| *rm == m)
                    .map(|(_, db)| *db)
            })
            .flatten();
        match reference {
            Some(ref_db) => {
                let delta = gamma_db - ref_db;
                if delta.abs() > 0.01 {
                    violations.push(format!(
                        "m={m}: computed {gamma_db:.4} dB differs from reference {ref_db:.4} dB by {delta:+.4} dB (tolerance 0.01)"
                    ));
                }
                body.push_str(&format!("{m},{gamma_db:.4},{ref_db:.4},{delta:+.4}\n"));
            }
            None => body.push_str(&format!("{m},{gamma_db:.4},,\n")),
        }
    }
    let text = header(
        "table2",
        &base,
        cli.seed,
        &extra,
        "m,gamma_db,ref_gamma_db,delta_db",
    ) + &body;
    emit(cli, &text)?;
    finish(&violations)
}

fn fig2(cli: &Cli, spreads: &[usize], rates: &[f64]) -> Result<ExitCode, Error> {
    let base = resolve_config(cli, &[])?;
    let with_reference = at_reference_point(&base) && base.m == 160;
    let mut body = String::new();
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for &l in spreads {
        let cfg = SystemConfig {
            l,
            pdp: scmimo_core::config::uniform_pdp(base.k, l),
            ..base.clone()
        };
        for &rate in rates {
            match snr_gap_db(&cfg, 0, rate) {
                Ok(gap) => {
                    body.push_str(&format!(
                        "{l},{rate},{:.4},{:.4},{:.4}\n",
                        gap.gamma_required_db, gap.gamma0_required_db, gap.gap_db
                    ));
                    if with_reference {
                        if let Some((_, ref_db, tol)) = REFERENCE_GAP_3BPCU
                            .iter()
                            .find(|(rl, _, _)| *rl == l && rate == 3.0)
                        {
                            let delta = gap.gap_db - ref_db;
                            if delta.abs() > *tol {
                                violations.push(format!(
                                    "l={l} rate=3: computed gap {:.4} dB differs from reference {ref_db} dB by {delta:+.4} dB (tolerance {tol})",
                                    gap.gap_db
                                ));
                            }
                        }
                    }
                }
                Err(Error::Unachievable(_)) => {
                    body.push_str(&format!("{l},{rate},,,\n"));
                    notes.push(format!(
                        "l={l} rate={rate}: above the training-overhead rate ceiling, row left empty"
                    ));
                }
                Err(other) => return Err(other),
            }
        }
    }
    let text = header(
        "fig2",
        &base,
        cli.seed,
        &notes,
        "l,rate_bpcu,gamma_db,gamma0_db,gap_db",
    ) + &body;
    emit(cli, &text)?;
    finish(&violations)
}

/// Default system for the Monte-Carlo commands: small enough for 10^5-trial
/// waveform runs, moderate SNR so no component is numerically negligible.
const SMALL_SYSTEM: &[&str] = &[
    "m=16", "k=2", "l=2", "n=160", "n_u=200", "p_u=5 dB", "sigma2=1",
];

fn variance_check(cli: &Cli) -> Result<ExitCode, Error> {
    let cfg = resolve_config(cli, SMALL_SYSTEM)?;
    let trials = if cli.trials == 0 { 100_000 } else { cli.trials };
    let mode: McMode = cli.mode.into();
    let probes = default_probes(&cfg)?;
    let stats = run_trials(&cfg, trials, mode, &probes, cli.seed)?;
    let report = compare(&stats, &cfg)?;

    let mut body = String::new();
    for cell in &report.cells {
        body.push_str(&format!(
            "variance,{},{},{},{:.6e},{:.6e},{:.6e},{:+.3},,{}\n",
            cell.user,
            cell.t,
            cell.component,
            cell.expected,
            cell.observed,
            cell.std_err,
            cell.z,
            if cell.z.abs() <= 3.0 { "pass" } else { "FAIL" }
        ));
    }
    for corr in &report.correlations {
        body.push_str(&format!(
            "correlation,{},{},es_en,,,,{:+.3},{:+.3},{}\n",
            corr.user,
            corr.t,
            corr.z_re,
            corr.z_im,
            if corr.z_re.abs() <= 3.0 && corr.z_im.abs() <= 3.0 {
                "pass"
            } else {
                "FAIL"
            }
        ));
    }
    let verdict = if report.passes() { "PASS" } else { "FAIL" };
    let extra = vec![
        format!("trials: {trials}"),
        format!("mode: {}", mode_name(mode)),
        format!("variance_pass_fraction: {:.4}", report.pass_fraction),
        format!(
            "correlation_pass_fraction: {:.4}",
            report.correlation_pass_fraction
        ),
        format!(
            "pooled_correlation_z: {:+.3},{:+.3}",
            report.pooled_correlation_z.0, report.pooled_correlation_z.1
        ),
        format!("verdict: {verdict}"),
    ];
    let text = header(
        "variance-check",
        &cfg,
        cli.seed,
        &extra,
        "kind,user,t,component,expected,observed,std_err,z_or_z_re,z_im,status",
    ) + &body;
    emit(cli, &text)?;
    eprintln!(
        "variance-check {verdict}: {:.1}% of {} variance cells within 3 SE, correlations {:.1}% ({} trials)",
        100.0 * report.pass_fraction,
        report.cells.len(),
        100.0 * report.correlation_pass_fraction,
        trials
    );
    if report.passes() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn mode_name(mode: McMode) -> &'static str {
    match mode {
        McMode::Analytic => "analytic",
        McMode::Full => "full",
        McMode::ZeroCfo => "zero_cfo",
    }
}

fn mse_check(cli: &Cli, antennas: &[usize]) -> Result<ExitCode, Error> {
    let base = resolve_config(cli, SMALL_SYSTEM)?;
    let trials = if cli.trials == 0 { 10_000 } else { cli.trials };
    let mut body = String::new();
    let mut last_ratio = None;
    for &m in antennas {
        let cfg = SystemConfig { m, ..base.clone() };
        let stats = estimator_mse_trials(&cfg, trials, cli.seed)?;
        let measured = stats.mse_pooled()?;
        let se = stats.mse_pooled_se()?;
        let predicted = mse_cfo(cfg.gamma(0), m, cfg.n, cfg.k, cfg.l, 1.0)?;
        let ratio = measured / predicted;
        last_ratio = Some(ratio);
        body.push_str(&format!(
            "{m},{trials},{measured:.6e},{predicted:.6e},{ratio:.4},{:.4}\n",
            se / predicted
        ));
    }
    let mut violations = Vec::new();
    if let Some(ratio) = last_ratio {
        if !(0.8..=1.25).contains(&ratio) {
            violations.push(format!(
                "final measured/predicted ratio {ratio:.4} outside [0.8, 1.25]"
            ));
        }
    }
    let text = header(
        "mse-check",
        &base,
        cli.seed,
        &[format!("trials_per_point: {trials}")],
        "m,trials,measured_mse,predicted_mse,ratio,ratio_se",
    ) + &body;
    emit(cli, &text)?;
    finish(&violations)
}

fn gap_asymptotic(cli: &Cli, target_rate: Option<f64>) -> Result<ExitCode, Error> {
    let base = resolve_config(cli, &["m=10000"])?;
    // Default rows: delay-spread / symbol-position / rate combinations
    // inside the asymptotic law's validity regime (rate well above
    // log2(1+α), finite-M correction below the tolerance), plus the
    // degenerate α = 0 row at the user's own reference position t = 0.
    enum At {
        Zero,
        Early,
        Mid,
        End,
    }
    let rows = [
        (10usize, At::Zero, 5.0f64),
        (1, At::Early, 5.0),
        (5, At::Mid, 5.0),
        (5, At::End, 4.0),
        (10, At::Mid, 5.0),
        (10, At::End, 5.0),
        (20, At::Mid, 5.0),
        (20, At::End, 5.0),
    ];
    let mut body = String::new();
    let mut violations = Vec::new();
    for (l, at, default_rate) in rows {
        let cfg = SystemConfig {
            l,
            pdp: scmimo_core::config::uniform_pdp(base.k, l),
            ..base.clone()
        };
        let frame = cfg.validate()?;
        let t = match at {
            At::Zero => 0,
            // Early in the data span, where the phase-error coefficient α is
            // small even for single-tap channels.
            At::Early => frame.data_start + 40,
            At::Mid => (frame.data_start + frame.data_end) / 2,
            At::End => frame.data_end,
        };
        let rate = target_rate.unwrap_or(default_rate);
        let a = alpha(&cfg, 0, t);
        let law = asymptotic_gap_db(a);
        let target_sinr = 2f64.powf(rate) - 1.0;
        let res = min_snr_for_sinr_at(&cfg, 0, t, target_sinr, RateMode::Residual)?;
        let zero = min_snr_for_sinr_at(&cfg, 0, t, target_sinr, RateMode::ZeroCfo)?;
        let gap = res - zero;
        let diff = gap - law;
        if diff.abs() > 0.1 {
            violations.push(format!(
                "l={l} t={t} rate={rate}: solver gap {gap:.4} dB vs law {law:.4} dB, diff {diff:+.4} dB (tolerance 0.1)"
            ));
        }
        body.push_str(&format!(
            "{l},{t},{rate},{a:.6e},{law:.4},{gap:.4},{diff:+.4}\n"
        ));
    }
    let text = header(
        "gap-asymptotic",
        &base,
        cli.seed,
        &[],
        "l,t,rate_bpcu,alpha,law_db,solver_db,diff_db",
    ) + &body;
    emit(cli, &text)?;
    finish(&violations)
}

/// Exit 0 when no tolerance violations, else print them and exit 2.
fn finish(violations: &[String]) -> Result<ExitCode, Error> {
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in violations {
            eprintln!("tolerance: {v}");
        }
        Ok(ExitCode::from(2))
    }
}
