//! The `nlwave` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{base_dir_of, RunConfig, Setup};
use crate::error::{Error, Result};
use crate::experiments::{
    dissipativity_sweep, pair_contraction_experiment, persist_run, RunManifest, CODE_VERSION,
};
use crate::integrator::{integrate_with, resolvent_solve};
use crate::strategies::Strategies;
use crate::verify::{run_all, VerifyContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nlwave", version, about = "Spectral simulator for damped nonlinear wave equations")]
pub struct Cli {
    /// TOML run configuration; the bundled reference config when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory for this run.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Caps the number of worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,

    /// Dotted-path override such as `physics.p=3`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VAL")]
    pub overrides: Vec<String>,

    /// Root for run directories when `--out` is not given.
    #[arg(long, env = "NLWAVE_OUT", hide = true, default_value = "nlwave-runs")]
    pub out_root: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and write records, snapshots and a manifest.
    Simulate,
    /// Run the property checks and print a pass/fail table.
    Verify,
    /// Estimate the absorbing radius from trajectories of growing size.
    Sweep,
    /// Tabulate pairwise trajectory distances at the configured times.
    Pair,
    /// Solve the stationary resolvent problem.
    Resolvent,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Pair => "pair",
            Command::Resolvent => "resolvent",
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_CONFIG
                }
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path, &cli.overrides)?,
        None if cli.overrides.is_empty() => RunConfig::default_config(),
        None => RunConfig::parse(crate::config::DEFAULT_CONFIG, &cli.overrides)?,
    }
    .with_seed(cli.seed);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::config("--workers must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let strategies = Strategies::builtin();
    let setup = config.build(&strategies, &base_dir_of(cli.config.as_deref()))?;
    let run_dir = match &cli.out {
        Some(dir) => dir.clone(),
        None => cli
            .out_root
            .join(format!("{}-{}", cli.command.name(), &config.digest()?[..12])),
    };
    let ctx = Invocation {
        config: &config,
        setup: &setup,
        strategies: &strategies,
        run_dir: &run_dir,
    };
    let mut buf = Vec::new();
    let code = pool.install(|| match cli.command {
        Command::Simulate => simulate(&ctx, &mut buf),
        Command::Verify => verify(&ctx, &mut buf),
        Command::Sweep => sweep(&ctx, &mut buf),
        Command::Pair => pair(&ctx, &mut buf),
        Command::Resolvent => resolvent(&ctx, &mut buf),
    });
    let _ = out.write_all(&buf);
    code
}

struct Invocation<'a> {
    config: &'a RunConfig,
    setup: &'a Setup,
    strategies: &'a Strategies,
    run_dir: &'a Path,
}

impl Invocation<'_> {
    fn manifest(&self, started: Instant, failure: Option<String>) -> Result<RunManifest> {
        Ok(RunManifest {
            config_digest: self.config.digest()?,
            basis: self.config.basis.clone(),
            step: self.config.step.clone(),
            seed: self.config.seed,
            code_version: CODE_VERSION.into(),
            outputs: Vec::new(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            failure,
        })
    }

    fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        fs::create_dir_all(self.run_dir).map_err(|e| Error::io(self.run_dir, e))?;
        let path = self.run_dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn simulate(ctx: &Invocation<'_>, out: &mut Vec<u8>) -> Result<i32> {
    let started = Instant::now();
    let Setup { basis, physics, initial } = ctx.setup;
    let traj = integrate_with(
        &ctx.strategies.schemes,
        basis,
        physics,
        initial,
        ctx.config.run.t_final,
        &ctx.config.step,
        &ctx.config.observers(),
    )?;
    let manifest = ctx.manifest(started, traj.failure.clone())?;
    persist_run(&manifest, &traj.records, &traj.snapshots, ctx.run_dir)?;
    let _ = writeln!(
        out,
        "simulated {} steps to t = {}; {} records written to {}",
        traj.steps,
        traj.final_state.time,
        traj.records.len(),
        ctx.run_dir.display()
    );
    if let Some(last) = traj.records.last() {
        let _ = writeln!(out, "final energy {:e}, phase norm {:e}", last.energy.total, last.phase_norm());
    }
    Ok(match traj.failure {
        Some(f) => {
            let _ = writeln!(out, "numerical failure: {f}");
            EXIT_NUMERICAL
        }
        None => EXIT_OK,
    })
}

fn verify(ctx: &Invocation<'_>, out: &mut Vec<u8>) -> Result<i32> {
    let vctx = VerifyContext {
        basis: &ctx.setup.basis,
        physics: &ctx.setup.physics,
        step: &ctx.config.step,
        seed: ctx.config.seed,
    };
    let outcomes = run_all(&ctx.strategies.checks, &vctx);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        let _ = writeln!(
            out,
            "{:width$}  {}  {}",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(out, "{} checks, {failed} failed", outcomes.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn sweep(ctx: &Invocation<'_>, out: &mut Vec<u8>) -> Result<i32> {
    let started = Instant::now();
    let spec = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("config has no [sweep] section"))?;
    let Setup { basis, physics, initial } = ctx.setup;
    let report = dissipativity_sweep(basis, physics, initial, spec, &ctx.config.step)?;
    persist_run(&ctx.manifest(started, None)?, &[], &[], ctx.run_dir)?;
    ctx.write_json("absorbing.json", &report)?;
    for o in &report.outcomes {
        let _ = writeln!(
            out,
            "scale {:>8}  initial {:.6e}  tail sup {:.6e}  {}",
            o.scale,
            o.initial_norm,
            o.tail_sup,
            match (&o.failure, o.settled) {
                (Some(f), _) => format!("failed: {f}"),
                (None, true) => "settled".into(),
                (None, false) => "not settled".into(),
            }
        );
    }
    match report.radius {
        Some(r) => {
            let _ = writeln!(out, "absorbing radius {r:.6e}, spread {:.4}", report.spread.unwrap_or(f64::NAN));
        }
        None => {
            let _ = writeln!(out, "inconclusive: not every trajectory settled by T = {}", report.t_final);
        }
    }
    let failed = report.outcomes.iter().any(|o| o.failure.is_some());
    Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK })
}

fn pair(ctx: &Invocation<'_>, out: &mut Vec<u8>) -> Result<i32> {
    let started = Instant::now();
    let pair = ctx
        .config
        .pair
        .as_ref()
        .ok_or_else(|| Error::config("config has no [pair] section"))?;
    let basis = &ctx.setup.basis;
    let states = ctx.config.pair_states(basis)?;
    let report = pair_contraction_experiment(basis, &ctx.setup.physics, &states, &pair.times, &ctx.config.step)?;
    persist_run(&ctx.manifest(started, None)?, &[], &[], ctx.run_dir)?;
    ctx.write_json("pair.json", &report)?;
    for (i, m) in report.matrices.iter().enumerate() {
        let path = ctx.run_dir.join(format!("pair_{i:03}.csv"));
        let text: String = m
            .iter()
            .map(|row| row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n")
            .collect();
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    for (t, min) in report.times.iter().zip(&report.min_per_time) {
        let _ = writeln!(out, "T = {t:>10}  min pair energy {min:.6e}");
    }
    let failed = report.failures.iter().any(Option::is_some);
    Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK })
}

fn resolvent(ctx: &Invocation<'_>, out: &mut Vec<u8>) -> Result<i32> {
    let basis = &ctx.setup.basis;
    let (problem, tol) = ctx.config.resolvent_problem(basis, ctx.strategies)?;
    let solution = resolvent_solve(basis, &ctx.setup.physics, &problem, tol)?;
    ctx.write_json("resolvent.json", &solution)?;
    let _ = writeln!(
        out,
        "sigma = {:e}, residual = {:e} (position {:e}, velocity {:e}), {} iterations",
        solution.sigma,
        solution.residual(),
        solution.residual_position,
        solution.residual_velocity,
        solution.iterations
    );
    Ok(if solution.within_tolerance() {
        EXIT_OK
    } else {
        let _ = writeln!(out, "residual above tolerance {tol:e}");
        EXIT_NUMERICAL
    })
}
