use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netisac::detection::Scenario;
use netisac::harness::{
    emit_results, parse_config_file, resolve_config, run_detection_validation, run_sweep, ConfigError, ConfigFile,
    ExperimentConfig, OutputFormat, Preset, Scheme, SweepAxis, SweepOptions,
};
use netisac::model::{build_target_grid, sample_comm_channels};
use netisac::optimizer::{solve_proposed, DetectionProblem, ProposedOutcome, SolveOptions};
use netisac::rng::derive_seed;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "netisac", version, about = "Coordinated ISAC beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the per-BS power budget.
    SweepPower,
    /// Sweep the SINR target.
    SweepSinr,
    /// Compare Monte Carlo detector rates with the closed forms.
    ValidateDetection,
    /// Solve one instance and print its report as JSON.
    SolveOnce,
    /// Detection probability versus P_max preset.
    Fig2,
    /// Detection probability versus SINR target preset.
    Fig3,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; the bundled default is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: OutputFormat,
    /// Comma-separated subset of PROPOSED_I,PROPOSED_II,BENCHMARK_I,BENCHMARK_II.
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Restrict to one scenario: I (synchronized) or II (unsynchronized).
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the antenna count N_a.
    #[arg(long, global = true)]
    antennas: Option<i64>,
    /// Override the number of channel draws per point.
    #[arg(long, global = true)]
    draws: Option<i64>,
    /// Record per-point wall time (makes outputs run-dependent).
    #[arg(long, global = true)]
    timing: bool,
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn parse_scenario(s: &str) -> Result<Scenario, ConfigError> {
    match s.trim().to_ascii_uppercase().as_str() {
        "I" | "1" => Ok(Scenario::Synchronized),
        "II" | "2" => Ok(Scenario::Unsynchronized),
        other => Err(invalid("--scenario", format!("expected I or II, got `{other}`"))),
    }
}

fn build_config(cli: &Cli) -> Result<(ExperimentConfig, Option<Scenario>), ConfigError> {
    let c = &cli.common;
    let mut file = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config_file(&text)?
        }
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Fig2 => file.apply_preset(Preset::Fig2),
        Command::Fig3 => file.apply_preset(Preset::Fig3),
        Command::SweepPower if file.sweep.axis != SweepAxis::PMaxDbm => {
            return Err(invalid("sweep.axis", "sweep-power needs axis p_max_dbm"));
        }
        Command::SweepSinr if file.sweep.axis != SweepAxis::GammaDb => {
            return Err(invalid("sweep.axis", "sweep-sinr needs axis gamma_db"));
        }
        _ => {}
    }
    if let Some(seed) = c.seed {
        file.seed = seed;
    }
    if let Some(n) = c.antennas {
        file.layout.n_antennas = n;
    }
    if let Some(d) = c.draws {
        file.channel_draws = d;
    }
    if let Some(list) = &c.scheme {
        file.schemes = list
            .split(',')
            .map(|s| Scheme::parse(s).ok_or_else(|| invalid("--scheme", format!("unknown scheme `{}`", s.trim()))))
            .collect::<Result<_, _>>()?;
    }
    let scenario = c.scenario.as_deref().map(parse_scenario).transpose()?;
    if let Some(sc) = scenario {
        file.schemes.retain(|s| s.scenario() == sc);
        if file.schemes.is_empty() {
            return Err(invalid("--scenario", "no selected scheme belongs to this scenario"));
        }
    }
    Ok((resolve_config(file)?, scenario))
}

fn run_sweep_command(cfg: &ExperimentConfig, common: &Common) -> ExitCode {
    let opts = SweepOptions {
        jobs: common.jobs,
        timing: common.timing,
    };
    let outcome = match run_sweep(cfg, &opts) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let failures: usize = outcome.points.iter().map(|p| p.failures.len()).sum();
    if failures > 0 {
        eprintln!("warning: {failures} draw(s) hit solver failures and were resampled");
        for p in &outcome.points {
            for f in &p.failures {
                eprintln!("  {} at {}: {f}", p.scheme.name(), p.sweep_value);
            }
        }
    }
    if let Err(e) = emit_results(&outcome.records, common.out.as_deref(), common.format) {
        eprintln!("error: cannot write results: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    ExitCode::SUCCESS
}

fn run_validation(cfg: &ExperimentConfig, common: &Common) -> ExitCode {
    let records = match run_detection_validation(cfg, common.jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Err(e) = emit_results(&records, common.out.as_deref(), common.format) {
        eprintln!("error: cannot write results: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let failed: Vec<&str> = records.iter().filter(|r| !r.pass).map(|r| r.case.as_str()).collect();
    eprintln!("{}/{} cases within 3-sigma", records.len() - failed.len(), records.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed: {}", failed.join(", "));
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn run_solve_once(cfg: &ExperimentConfig, scenario: Option<Scenario>, common: &Common) -> ExitCode {
    let scenario = scenario.unwrap_or(Scenario::Synchronized);
    let result = (|| -> Result<ProposedOutcome, String> {
        let grid = build_target_grid(&cfg.layout, &cfg.sensing, cfg.area_center, cfg.side, cfg.grid_dim).map_err(|e| e.to_string())?;
        let channels = sample_comm_channels(&cfg.layout, &cfg.comm, derive_seed(cfg.seed, &[0, 0])).map_err(|e| e.to_string())?;
        let gamma = vec![cfg.gamma_linear; cfg.layout.k()];
        let problem = DetectionProblem {
            scenario,
            channels: &channels,
            grid: &grid,
            array: &cfg.layout.array,
            params: &cfg.sensing,
            gamma: &gamma,
            p_max: cfg.p_max_w,
        };
        let opts = SolveOptions {
            tol: cfg.solver_tol,
            n_g: cfg.n_g,
            epsilon: cfg.rank_one_eps,
            seed: derive_seed(cfg.seed, &[1]),
        };
        solve_proposed(&problem, &opts).map_err(|e| e.to_string())
    })();
    let report = match result {
        Ok(ProposedOutcome::Solved(r)) => r,
        Ok(ProposedOutcome::Infeasible) => {
            eprintln!("error: the relaxation is infeasible for this channel draw");
            return ExitCode::from(EXIT_SOLVER);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    let written = match &common.out {
        Some(p) => std::fs::write(p, text + "\n"),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r,
        },
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, scenario) = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match cli.command {
        Command::SweepPower | Command::SweepSinr | Command::Fig2 | Command::Fig3 => run_sweep_command(&cfg, &cli.common),
        Command::ValidateDetection => run_validation(&cfg, &cli.common),
        Command::SolveOnce => run_solve_once(&cfg, scenario, &cli.common),
    }
}
