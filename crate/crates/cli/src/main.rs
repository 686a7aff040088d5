//! `grslab` — command-line surface of the soliton-ansatz ODE laboratory.

mod commands;
mod config;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{cmd_blowup, cmd_integrate, cmd_shoot, cmd_transform, cmd_verify, Ctx};
use config::{ConfigError, RunConfig};
use grslab_core::integrator::IntegratorConfig;

const CONFIG_HELP: &str = "\
Runs are driven by a single JSON config document with these sections \
(defaults in brackets):

  formulation   \"t\" | \"s\" | \"special\"
  params        { lambda [0], m, q [0], k [0], dim_total [2m+2] }
  initial       per-formulation state fields:
                  t:       { t0 [0], H, dH, F, dF, f [0], df }
                  s:       { s0 [0], alpha, dalpha, beta, dbeta, phi [0], dphi }
                  special: { s0 [0], x2, y1, y2 }
  shooting      t-formulation singular-orbit data
                  { eps [1e-3], h1 [1], F0 [1], f2 [0], f0 [0] }
                (used instead of `initial` when present)
  horizon       end of the integration span (required for runs)
  integrator    { rtol [1e-10], atol [1e-12], h0 [1e-4], hmin [1e-14],
                  hmax [unlimited], max_steps [10000000] }
  events        [ { name, component, trigger, action } ]
                trigger: \"sign_change\" | {\"exceeds\": c} | {\"falls_below\": c}
                action:  \"stop\" | \"record\"
  output        { dir [\"out\"], prefix [\"run\"] }
  sweep         { command: \"integrate\"|\"shoot\"|\"blowup\"|\"transform\",
                  grid: { \"<dotted.path>\": [values...], ... } }

Trajectories are written as CSV (17 significant digits; t-formulation \
columns t,H,dH,F,dF,f,df,trL,S,C,C1; s-formulation s,alpha,dalpha,beta,\
dbeta,phi,dphi; special s,x2,y1,y2,ratio) next to a JSON summary/report.

Exit codes: 0 success / all checks pass; 1 a check or run failed; \
2 malformed or invalid config.";

#[derive(Parser)]
#[command(name = "grslab", version, about = "Numerical laboratory for the soliton-ansatz ODE systems", after_long_help = CONFIG_HELP)]
struct Cli {
    /// Output directory (overrides the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative tolerance override.
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute tolerance override.
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Reserved: the pipeline is deterministic and uses no randomness.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the built-in verification suite (oracle residuals, blow-up
    /// experiments, first integrals, transforms, step-off convergence).
    Verify {
        /// Optional config supplying integrator settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override every check tolerance (for exercising the failure
        /// reporting).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Integrate one configured run and write trajectory + summary.
    Integrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Blow-up desk experiment with bound check and closed-form errors.
    Blowup {
        #[arg(long)]
        config: PathBuf,
    },
    /// Singular-orbit shooting run with the qualitative report.
    Shoot {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate in geometric coordinates and emit the arclength
    /// trajectory plus roundtrip error.
    Transform {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a grid of configured runs concurrently and write an index.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify { config, tolerance } => {
            let mut int_cfg = IntegratorConfig::default();
            if let Some(path) = config {
                let cfg = RunConfig::load(&path)?;
                int_cfg = cfg.integrator.build()?;
            }
            if let Some(r) = cli.rtol {
                int_cfg.rtol = r;
            }
            if let Some(a) = cli.atol {
                int_cfg.atol = a;
            }
            Ok(cmd_verify(&int_cfg, tolerance))
        }
        Command::Integrate { config } => {
            let cfg = RunConfig::load(&config)?;
            let ctx = Ctx::new(cfg, cli.out.as_deref(), cli.rtol, cli.atol)?;
            cmd_integrate(&ctx)
        }
        Command::Blowup { config } => {
            let cfg = RunConfig::load(&config)?;
            let ctx = Ctx::new(cfg, cli.out.as_deref(), cli.rtol, cli.atol)?;
            cmd_blowup(&ctx)
        }
        Command::Shoot { config } => {
            let cfg = RunConfig::load(&config)?;
            let ctx = Ctx::new(cfg, cli.out.as_deref(), cli.rtol, cli.atol)?;
            cmd_shoot(&ctx)
        }
        Command::Transform { config } => {
            let cfg = RunConfig::load(&config)?;
            let ctx = Ctx::new(cfg, cli.out.as_deref(), cli.rtol, cli.atol)?;
            cmd_transform(&ctx)
        }
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", config.display())))?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| ConfigError(e.to_string()))?;
            let cfg = RunConfig::from_json(&text)?;
            let out_dir = cli
                .out
                .clone()
                .or_else(|| cfg.output.as_ref().and_then(|o| o.dir.as_ref().map(PathBuf::from)))
                .unwrap_or_else(|| PathBuf::from("out"));
            sweep::cmd_sweep(&doc, &cfg, &out_dir, cli.rtol, cli.atol)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
