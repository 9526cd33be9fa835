//! `dsense`: command-line front end for the Distilled Sensing harness.
//!
//! Every subcommand writes one CSV to `--out` and a metadata sidecar
//! `<out>.meta.toml` holding the effective configuration. Passing the sidecar
//! back through `--config` reproduces the run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distilled_sensing::harness::config::{Sparsity, DEFAULT_TARGET_FDR};
use distilled_sensing::harness::output;
use distilled_sensing::harness::phase::DEFAULT_SUCCESS_LEVEL;
use distilled_sensing::harness::{
    boundary_grid, simulate_trials, snr_sweep, sweep_thresholds, validate_lemmas, validate_phase_transition,
    BudgetAudit, ConfigFile, ExperimentConfig, LemmaSuiteConfig, Method, PilotSet,
};
use distilled_sensing::Error;

const BOUNDARY_POINTS: usize = 100;
const DEFAULT_SNR_LIST: [f64; 5] = [2.0, 4.0, 8.0, 12.0, 20.0];
const DEFAULT_R_LIST: [f64; 2] = [0.8, 0.25];

#[derive(Debug, Parser)]
#[command(name = "dsense", version, about = "Distilled Sensing simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-trial metrics at each method's default threshold.
    Simulate(Opts),
    /// FDP/NDP over a threshold grid for every trial.
    Sweep(Opts),
    /// Threshold reaching the target FDR on pilot trials.
    Calibrate(Opts),
    /// Calibrated FDR and NDR across a list of SNRs.
    SnrSweep(Opts),
    /// Non-adaptive recovery on both sides of r = beta.
    PhaseTransition(Opts),
    /// The non-adaptive detection boundary rho(beta).
    Boundary(Opts),
    /// Monte Carlo and numeric checks of the tail bounds.
    ValidateLemmas(Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Calibrate(_) => "calibrate",
            Command::SnrSweep(_) => "snr-sweep",
            Command::PhaseTransition(_) => "phase-transition",
            Command::Boundary(_) => "boundary",
            Command::ValidateLemmas(_) => "validate-lemmas",
        }
    }

    fn opts(&self) -> &Opts {
        match self {
            Command::Simulate(o)
            | Command::Sweep(o)
            | Command::Calibrate(o)
            | Command::SnrSweep(o)
            | Command::PhaseTransition(o)
            | Command::Boundary(o)
            | Command::ValidateLemmas(o) => o,
        }
    }
}

/// Flags mirror the config-file keys and override them.
#[derive(Debug, Args)]
struct Opts {
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, alias = "num_nonzero")]
    num_nonzero: Option<usize>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long, visible_alias = "seed", alias = "master_seed")]
    master_seed: Option<u64>,
    /// ds, nonadaptive or both.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, alias = "target_fdr")]
    target_fdr: Option<f64>,
    /// Comma-separated thresholds.
    #[arg(long, alias = "threshold_grid", value_delimiter = ',')]
    threshold_grid: Option<Vec<f64>>,
    #[arg(long, alias = "pilot_trials")]
    pilot_trials: Option<usize>,
    #[arg(long, alias = "common_noise")]
    common_noise: Option<bool>,
    /// Comma-separated SNRs for snr-sweep.
    #[arg(long, alias = "snr_list", value_delimiter = ',')]
    snr_list: Option<Vec<f64>>,
    /// Comma-separated amplitude exponents for phase-transition.
    #[arg(long, alias = "r_list", value_delimiter = ',')]
    r_list: Option<Vec<f64>>,
    /// Cap on worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

impl Opts {
    fn flags(&self) -> ConfigFile {
        ConfigFile {
            p: self.p,
            beta: self.beta,
            num_nonzero: self.num_nonzero,
            snr: self.snr,
            trials: self.trials,
            decay: self.decay,
            master_seed: self.master_seed,
            method: self.method,
            target_fdr: self.target_fdr,
            threshold_grid: self.threshold_grid.clone(),
            pilot_trials: self.pilot_trials,
            common_noise: self.common_noise,
            snr_list: self.snr_list.clone(),
            r_list: self.r_list.clone(),
            workers: self.workers,
            ..Default::default()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_parameter() { 2 } else { 1 })
        }
    }
}

/// Returns `Ok(false)` when the command ran but reported a failed check.
fn run(command: &Command) -> Result<bool, Error> {
    let opts = command.opts();
    let mut file = match &opts.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    file.overlay(&opts.flags());
    file.subcommand = Some(command.name().to_owned());
    file.tool_version = Some(env!("CARGO_PKG_VERSION").to_owned());

    let pool = match file.workers {
        Some(0) => return Err(parameter("workers must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| Error::Io(std::io::Error::other(e)))?;

    pool.install(|| dispatch(command, &mut file, &opts.out))
}

fn dispatch(command: &Command, file: &mut ConfigFile, out: &Path) -> Result<bool, Error> {
    let mut audit = BudgetAudit::default();
    let mut passed = true;
    match command {
        Command::Simulate(_) => {
            let cfg = experiment(file)?;
            let res = simulate_trials(&cfg)?;
            audit.merge(&res.audit);
            write_csv(out, |w| output::write_simulation(w, &res.rows))?;
        }
        Command::Sweep(_) => {
            let cfg = experiment(file)?;
            let res = sweep_thresholds(&cfg)?;
            audit.merge(&res.audit);
            write_csv(out, |w| output::write_sweep(w, &res.rows))?;
        }
        Command::Calibrate(_) => {
            let cfg = experiment(file)?;
            let target = cfg.target_fdr.unwrap_or(DEFAULT_TARGET_FDR);
            file.target_fdr = Some(target);
            let mut rows = Vec::new();
            for &m in cfg.method.expand() {
                let (pilot, a) = PilotSet::draw(&cfg, m)?;
                audit.merge(&a);
                let cal = pilot.calibrate(target);
                log::info!("{m}: tau={:.6} fdr={:.4} reachable={}", cal.tau, cal.achieved_fdr, cal.reachable);
                rows.push((m, cfg.p, cfg.snr, target, cal));
            }
            write_csv(out, |w| output::write_calibration(w, &rows))?;
        }
        Command::SnrSweep(_) => {
            let cfg = experiment(file)?;
            let snrs = file.snr_list.get_or_insert_with(|| DEFAULT_SNR_LIST.to_vec()).clone();
            let target = cfg.target_fdr.unwrap_or(DEFAULT_TARGET_FDR);
            file.target_fdr = Some(target);
            let (rows, a) = snr_sweep(&cfg, &snrs, Some(target))?;
            audit.merge(&a);
            for r in rows.iter().filter(|r| !r.reachable) {
                log::warn!("{} snr={}: target FDR {target} not reachable on pilot trials", r.method, r.snr);
            }
            write_csv(out, |w| output::write_snr_sweep(w, &rows))?;
        }
        Command::PhaseTransition(_) => {
            let cfg = experiment(file)?;
            let beta = cfg.beta().ok_or_else(|| parameter("phase-transition needs a nonempty support"))?;
            let r_list = file.r_list.get_or_insert_with(|| DEFAULT_R_LIST.to_vec()).clone();
            let rows =
                validate_phase_transition(cfg.p, beta, &r_list, cfg.trials, cfg.master_seed, DEFAULT_SUCCESS_LEVEL)?;
            write_csv(out, |w| output::write_phase(w, &rows))?;
        }
        Command::Boundary(_) => {
            let rows = boundary_grid(BOUNDARY_POINTS)?;
            write_csv(out, |w| output::write_boundary(w, &rows))?;
        }
        Command::ValidateLemmas(_) => {
            let seed = *file.master_seed.get_or_insert(0);
            let checks = validate_lemmas(&LemmaSuiteConfig { seed, ..Default::default() })?;
            for c in checks.iter().filter(|c| !c.pass) {
                log::error!("{} failed: bound={} empirical={}", c.lemma, c.bound, c.empirical);
            }
            passed = checks.iter().all(|c| c.pass);
            write_csv(out, |w| output::write_lemma_report(w, &checks))?;
        }
    }
    if audit.trials_checked > 0 {
        log::info!("budget audit: {} trials, max spent/p = {}", audit.trials_checked, audit.max_ratio);
        if !audit.within_budget() {
            return Err(Error::BudgetExceeded { spent: audit.max_ratio, total: 1.0 });
        }
    }
    write_sidecar(out, file)?;
    Ok(passed)
}

/// Resolves defaults and writes them back so the sidecar is complete.
fn experiment(file: &mut ConfigFile) -> Result<ExperimentConfig, Error> {
    let cfg = file.experiment()?;
    file.p = Some(cfg.p);
    match cfg.sparsity {
        Sparsity::Beta(b) => file.beta = Some(b),
        Sparsity::Count(s) => {
            file.num_nonzero = Some(s);
            file.beta = None;
        }
    }
    file.snr = Some(cfg.snr);
    file.trials = Some(cfg.trials);
    file.decay = Some(cfg.decay);
    file.master_seed = Some(cfg.master_seed);
    file.method = Some(cfg.method);
    file.pilot_trials = Some(cfg.pilot_trials);
    file.common_noise = Some(cfg.common_noise);
    Ok(cfg)
}

fn parameter(msg: &str) -> Error {
    Error::Parameter(msg.to_owned())
}

fn write_csv<F>(path: &Path, body: F) -> Result<(), Error>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), Error>,
{
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

fn write_sidecar(out: &Path, file: &ConfigFile) -> Result<(), Error> {
    let path = sidecar_path(out);
    std::fs::write(&path, file.to_toml())?;
    Ok(())
}
