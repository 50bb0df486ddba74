#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nv_polarimetry::config::{EmitterConfig, CONFIG_ENV};
use nv_polarimetry::csvio::{self, QWP_HEADER, SPECTRUM_HEADER, SWEEP_HEADER};
use nv_polarimetry::dynamics::{self, Averaging, EmissionModel, Weighting};
use nv_polarimetry::inference::{self, BatchFlag};
use nv_polarimetry::model::{rates_from_detailed_balance, Branch, RateSet};
use nv_polarimetry::montecarlo::{self, McConfig};
use nv_polarimetry::optics::{self, StokesVector};
use nv_polarimetry::spectra::{self, SweepPlan};
use nv_polarimetry::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "nv-polarimetry", version, about = "Polarization-resolved emission of a two-branch emitter")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Emitter config file (key = value).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set delta_ghz=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    #[arg(long, global = true)]
    tau_ns: Option<f64>,

    /// Symmetric relaxation rate, 1/ns.
    #[arg(long, global = true, conflicts_with = "gamma_inv_ns")]
    gamma_per_ns: Option<f64>,

    /// Relaxation time 1/gamma, ns.
    #[arg(long, global = true)]
    gamma_inv_ns: Option<f64>,

    #[arg(long, global = true)]
    delta_ghz: Option<f64>,

    #[arg(long, global = true)]
    temperature_k: Option<f64>,

    #[arg(long, global = true)]
    dipole_x_deg: Option<f64>,

    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Output file; stdout when omitted.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
struct ModelArgs {
    /// Population averaging before emission.
    #[arg(long, value_enum, default_value_t = AveragingArg::AtLifetime)]
    averaging: AveragingArg,

    /// Weighting of the polarization components by branch population.
    #[arg(long, value_enum, default_value_t = WeightingArg::Squared)]
    weighting: WeightingArg,
}

impl ModelArgs {
    fn model(&self) -> EmissionModel {
        EmissionModel {
            averaging: match self.averaging {
                AveragingArg::AtLifetime => Averaging::AtLifetime,
                AveragingArg::Exponential => Averaging::Exponential,
            },
            weighting: match self.weighting {
                WeightingArg::Squared => Weighting::Squared,
                WeightingArg::Linear => Weighting::Linear,
            },
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum AveragingArg {
    AtLifetime,
    Exponential,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WeightingArg {
    Squared,
    Linear,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BranchArg {
    X,
    Y,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::X => Branch::X,
            BranchArg::Y => Branch::Y,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SweepMode {
    Excitation,
    Emission,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Hypothesis {
    Mixture,
    Elliptical,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Contrast and alpha versus 1/gamma at fixed lifetime.
    Fig4 {
        /// Explicit 1/gamma grid in ns (comma list); overrides the log grid.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        min_ns: f64,
        #[arg(long, default_value_t = 1000.0)]
        max_ns: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Polarizer sweep of the emission, or laser-polarization accumulation.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepMode,
        /// Angles as `start:stop:step` or a comma list, degrees.
        #[arg(long, default_value = "0:175:5")]
        angles: String,
        /// Pumped branch (emission) or line of interest (excitation).
        #[arg(long, value_enum, default_value_t = BranchArg::X)]
        branch: BranchArg,
        /// Quarter-wave plate fast axis in front of the polarizer, degrees.
        #[arg(long)]
        qwp: Option<f64>,
        /// Monte Carlo photons instead of the analytic model.
        #[arg(long)]
        mc: bool,
        /// With --mc: photon-counting detection (Poisson arrivals per angle).
        #[arg(long, requires = "mc")]
        counts: bool,
        /// Number of Monte Carlo photons.
        #[arg(long, default_value_t = 100_000)]
        photons: usize,
        /// Excitation window half-width around the line, GHz.
        #[arg(long, default_value_t = 0.3)]
        window_ghz: f64,
        #[arg(long, default_value_t = 601)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        drift_mhz: f64,
        /// Poisson counts per unit signal; 0 is noiseless.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fitted contrast versus quarter-wave plate angle.
    Qwp {
        #[arg(long, default_value = "0:179:1")]
        qwp_angles: String,
        #[arg(long, value_enum, default_value_t = Hypothesis::Mixture)]
        hypothesis: Hypothesis,
        #[arg(long, value_enum, default_value_t = BranchArg::X)]
        branch: BranchArg,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Excitation spectrum over a laser frequency range.
    Spectrum {
        #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
        f_start: f64,
        #[arg(long, default_value_t = 6.0, allow_negative_numbers = true)]
        f_stop: f64,
        #[arg(long, default_value_t = 12001)]
        points: usize,
        /// Laser polarization angle, degrees.
        #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
        laser_deg: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Monte Carlo trajectories, or occupation estimates with --occupation.
    Mc {
        #[arg(long, default_value_t = 100_000)]
        photons: usize,
        #[arg(long, value_enum, default_value_t = BranchArg::X)]
        branch: BranchArg,
        /// Time grid in ns (`start:stop:step` or comma list).
        #[arg(long)]
        occupation: Option<String>,
        /// Rates from detailed balance at the configured splitting and
        /// temperature, with gamma as the downward rate.
        #[arg(long)]
        detailed_balance: bool,
    },
    /// Fit sweep CSVs and invert their contrast.
    Fit {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// `start:stop:step` or a comma list.
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(usage("empty grid"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| usage(format!("bad grid value '{s}': {e}")));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("grid '{spec}' must be start:stop:step")));
        }
        return optics::degree_grid(num(parts[0])?, num(parts[1])?, num(parts[2])?)
            .map_err(|e| usage(e.to_string()));
    }
    spec.split(',').map(num).collect()
}

struct Context {
    emitter: EmitterConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl Context {
    fn from_args(g: &GlobalArgs) -> CliResult<Self> {
        let mut emitter = match &g.config {
            Some(path) => EmitterConfig::load(path)?,
            None => EmitterConfig::default(),
        };
        for kv in &g.overrides {
            let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            emitter.set(k.trim(), v).map_err(|e| usage(format!("--set {kv}: {e}")))?;
        }
        let flags = [
            ("tau_ns", g.tau_ns),
            ("gamma_per_ns", g.gamma_per_ns),
            ("delta_ghz", g.delta_ghz),
            ("temperature_k", g.temperature_k),
            ("dipole_x_deg", g.dipole_x_deg),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                emitter.set(key, &v.to_string()).map_err(usage)?;
            }
        }
        if let Some(inv) = g.gamma_inv_ns {
            if !(inv > 0.0) {
                return Err(CliError::Lib(Error::Domain(format!("1/gamma must be > 0 ns, got {inv}"))));
            }
            emitter.gamma_per_ns = 1.0 / inv;
        }
        emitter.validate()?;
        Ok(Self {
            emitter,
            seed: g.seed,
            out: g.out.clone(),
        })
    }

    fn emit(&self, contents: &str) -> CliResult<()> {
        match &self.out {
            Some(path) => csvio::write_file(path, contents)?,
            None => {
                let mut stdout = std::io::stdout().lock();
                match stdout.write_all(contents.as_bytes()).and_then(|_| stdout.flush()) {
                    // Reader closed early, e.g. `| head`.
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    r => r.map_err(|source| Error::Io { path: "<stdout>".into(), source })?,
                }
            }
        }
        Ok(())
    }

    fn tau(&self) -> f64 {
        self.emitter.tau_ns
    }

    fn gamma(&self) -> f64 {
        self.emitter.gamma_per_ns
    }

    fn emission_stokes(&self, branch: Branch, model: EmissionModel) -> CliResult<StokesVector> {
        let level = self.emitter.level_model()?;
        let avg = dynamics::averages(self.gamma(), self.tau(), branch, model.averaging)?;
        let mix = optics::emission_mixture(&avg, &level, model.weighting)?;
        Ok(optics::mixture_to_stokes(&mix))
    }
}

fn cmd_fig4(ctx: &Context, grid: Option<&str>, min_ns: f64, max_ns: f64, points: usize, model: EmissionModel) -> CliResult<()> {
    let grid = match grid {
        Some(spec) => parse_grid(spec)?,
        None => {
            if points == 0 {
                return Err(usage("empty grid: --points must be >= 1"));
            }
            dynamics::log_grid(min_ns, max_ns, points).map_err(|e| usage(e.to_string()))?
        }
    };
    let rows = dynamics::figure4_table_with(ctx.tau(), &grid, model)?;
    ctx.emit(&csvio::figure4_csv(&rows))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    ctx: &Context,
    mode: SweepMode,
    angles: &[f64],
    branch: Branch,
    qwp: Option<f64>,
    mc: bool,
    counts: bool,
    photons: usize,
    window_ghz: f64,
    points: usize,
    drift_mhz: f64,
    noise: f64,
    model: EmissionModel,
) -> CliResult<()> {
    let level = ctx.emitter.level_model()?;
    match mode {
        SweepMode::Excitation => {
            let lines = spectra::build_lines(&level);
            let line = *spectra::star_line(&lines, branch).expect("every branch has an S_z line");
            let template = SweepPlan::new(-window_ghz, window_ghz, points, 0.0)?
                .with_drift(drift_mhz)
                .with_noise(noise)?;
            let acc = spectra::polarization_accumulation(&template, angles, &line, &lines, &level, ctx.seed)?;
            if let Ok(fit) = inference::fit_cosine(&acc.modulation()) {
                eprintln!(
                    "{} line at {:.4} GHz: modulation contrast {:.6}, phase {:.3} deg",
                    branch.label(),
                    line.center,
                    fit.contrast,
                    fit.phase
                );
            }
            ctx.emit(&csvio::accumulation_csv(&acc))
        }
        SweepMode::Emission => {
            let sweep = if mc {
                if qwp.is_some() {
                    return Err(usage("--qwp is only supported for analytic emission sweeps"));
                }
                let cfg = McConfig::new(photons.max(1), ctx.seed, RateSet::symmetric(ctx.gamma())?, ctx.tau(), branch)?;
                if counts {
                    montecarlo::photon_counting_sweep(&cfg, level.dipole_x_angle(), angles, photons as f64)?
                } else {
                    let samples = montecarlo::simulate(&cfg);
                    let fx = montecarlo::branch_fraction(&samples, Branch::X);
                    eprintln!("emission fraction from X: {fx:.6} (linear-weight contrast {:.6})", (2.0 * fx - 1.0).abs());
                    montecarlo::empirical_polarizer_sweep(&samples, level.dipole_x_angle(), angles, ctx.seed)?
                }
            } else {
                let stokes = ctx.emission_stokes(branch, model)?;
                optics::polarizer_sweep(&stokes, qwp, angles)?
            };
            if let Ok(fit) = inference::fit_cosine(&sweep) {
                eprintln!("fitted contrast {:.6} +/- {:.2e}, phase {:.3} deg", fit.contrast, fit.contrast_sigma(), fit.phase);
            }
            ctx.emit(&csvio::pairs_csv(SWEEP_HEADER, &sweep))
        }
    }
}

fn cmd_qwp(ctx: &Context, qwp_angles: &[f64], hypothesis: Hypothesis, branch: Branch, model: EmissionModel) -> CliResult<()> {
    let mixture = ctx.emission_stokes(branch, model)?;
    let stokes = match hypothesis {
        Hypothesis::Mixture => mixture,
        Hypothesis::Elliptical => optics::elliptical_counterpart(&mixture)?,
    };
    let scan = optics::qwp_contrast_scan(&stokes, qwp_angles)?;
    let best = scan.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    eprintln!("degree of polarization {:.6}; best contrast over scan {best:.6}", stokes.degree_of_polarization());
    ctx.emit(&csvio::pairs_csv(QWP_HEADER, &scan))
}

fn cmd_spectrum(ctx: &Context, f_start: f64, f_stop: f64, points: usize, laser_deg: f64, noise: f64) -> CliResult<()> {
    let level = ctx.emitter.level_model()?;
    let lines = spectra::build_lines(&level);
    let plan = SweepPlan::new(f_start, f_stop, points, laser_deg)?.with_noise(noise)?;
    let spec = spectra::spectrum(&plan, &lines, &level, 0, ctx.seed);
    ctx.emit(&csvio::pairs_csv(SPECTRUM_HEADER, &spec))
}

fn cmd_mc(ctx: &Context, photons: usize, branch: Branch, occupation: Option<&str>, detailed_balance: bool) -> CliResult<()> {
    let rates = if detailed_balance {
        rates_from_detailed_balance(ctx.gamma(), ctx.emitter.delta_ghz, &ctx.emitter.bath()?)?
    } else {
        RateSet::symmetric(ctx.gamma())?
    };
    let cfg = McConfig::new(photons, ctx.seed, rates, ctx.tau(), branch)?;
    match occupation {
        Some(spec) => {
            let grid = parse_grid(spec)?;
            let curve = montecarlo::occupation_curve(&cfg, &grid)?;
            ctx.emit(&csvio::occupation_csv(&curve))
        }
        None => ctx.emit(&csvio::samples_csv(&montecarlo::simulate(&cfg))),
    }
}

fn cmd_fit(ctx: &Context, inputs: &[PathBuf], model: EmissionModel) -> CliResult<bool> {
    let datasets = inputs
        .iter()
        .map(|p| csvio::read_sweep_dataset(p))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = inference::batch_report(&datasets, ctx.tau(), model);
    for r in &rows {
        match &r.flag {
            BatchFlag::Failed(msg) => eprintln!("{}: {msg}", r.id),
            flag => eprintln!(
                "{}: contrast {:.6} +/- {:.2e} -> 1/gamma = {:.4} ns [{:.4}, {:.4}] ({flag})",
                r.id, r.contrast, r.contrast_sigma, r.gamma_inv, r.ci_low, r.ci_high
            ),
        }
    }
    ctx.emit(&csvio::report_csv(&rows))?;
    Ok(rows.iter().all(|r| !matches!(r.flag, BatchFlag::Failed(_))))
}

fn run(cli: Cli) -> CliResult<bool> {
    let ctx = Context::from_args(&cli.global)?;
    match cli.command {
        Command::Fig4 { grid, min_ns, max_ns, points, model } => {
            cmd_fig4(&ctx, grid.as_deref(), min_ns, max_ns, points, model.model())?
        }
        Command::Sweep {
            mode,
            angles,
            branch,
            qwp,
            mc,
            counts,
            photons,
            window_ghz,
            points,
            drift_mhz,
            noise,
            model,
        } => cmd_sweep(
            &ctx,
            mode,
            &parse_grid(&angles)?,
            branch.into(),
            qwp,
            mc,
            counts,
            photons,
            window_ghz,
            points,
            drift_mhz,
            noise,
            model.model(),
        )?,
        Command::Qwp { qwp_angles, hypothesis, branch, model } => {
            cmd_qwp(&ctx, &parse_grid(&qwp_angles)?, hypothesis, branch.into(), model.model())?
        }
        Command::Spectrum { f_start, f_stop, points, laser_deg, noise } => {
            cmd_spectrum(&ctx, f_start, f_stop, points, laser_deg, noise)?
        }
        Command::Mc { photons, branch, occupation, detailed_balance } => {
            cmd_mc(&ctx, photons, branch.into(), occupation.as_deref(), detailed_balance)?
        }
        Command::Fit { inputs, model } => return cmd_fit(&ctx, &inputs, model.model()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_DATA),
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => EXIT_IO,
                _ => EXIT_DATA,
            })
        }
    }
}
