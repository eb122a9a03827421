use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use whkae_cli::commands::{self, parse_s};
use whkae_cli::{OutFormat, RunConfig};
use whkae_core::trace::KernelKind;
use whkae_core::{Error, ErrorClass, Result};

#[derive(Parser)]
#[command(name = "whkae", version, about = "Heat-trace expansions, spectral zeta functions and double suspensions of spectral triples")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in models and the model/observable syntax.
    Models {
        #[arg(long, value_enum)]
        out: Option<OutFormat>,
    },
    /// Certified heat-trace samples on the grid t0·rho^j.
    Trace(Common),
    /// Trace samples as CSV (t,value,abs_error,kernel) for plotting.
    PlotData(Common),
    /// Small-t expansion of t^p·Tr(b e^{-t|D|}), closed form or fitted.
    Expand(Common),
    /// Values of the spectral zeta function ζ_b(s).
    Zeta {
        #[command(flatten)]
        common: Common,
        /// Points s, comma-separated, e.g. `--s=3,0.5+2i,-1`.
        #[arg(long = "s", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        s: Vec<String>,
    },
    /// Dimension spectrum and residues over one or more observables.
    Dimspec(Common),
    /// Suspend a model repeatedly and report the result.
    Suspend {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        times: u32,
    },
    /// Run the acceptance checks (all, or those given by --criterion).
    Verify {
        #[arg(long, value_delimiter = ',')]
        criterion: Vec<u8>,
        #[arg(long, value_enum)]
        out: Option<OutFormat>,
    },
    /// Print the effective run configuration as TOML.
    Config(Common),
}

#[derive(Args, Default)]
struct Common {
    #[arg(long)]
    model: Option<String>,
    /// Observable; repeat for `dimspec`.
    #[arg(long)]
    obs: Vec<String>,
    #[arg(long)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long, value_enum)]
    out: Option<OutFormat>,
    #[arg(long)]
    budget_levels: Option<u64>,
}

impl Common {
    fn resolve(self, base: RunConfig) -> Result<RunConfig> {
        let cfg = RunConfig {
            model: self.model.unwrap_or(base.model),
            obs: if self.obs.is_empty() { base.obs } else { self.obs },
            kernel: self.kernel.unwrap_or(base.kernel),
            t0: self.t0.unwrap_or(base.t0),
            rho: self.rho.unwrap_or(base.rho),
            count: self.count.unwrap_or(base.count),
            eps: self.eps.unwrap_or(base.eps),
            order: self.order.or(base.order),
            out: self.out.unwrap_or(base.out),
            budget_levels: self.budget_levels.unwrap_or(base.budget_levels),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_toml(&text)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("WHKAE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter(format!("WHKAE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Rendered output and whether the command succeeded.
fn run(cli: Cli) -> Result<(String, bool)> {
    init_threads()?;
    let base = load_config(cli.config.as_ref())?;
    let default_out = base.out;
    let ok = |r: commands::Report, out: OutFormat| Ok((r.render(out), true));
    match cli.command {
        Command::Models { out } => ok(commands::cmd_models(), out.unwrap_or(default_out)),
        Command::Trace(c) => {
            let cfg = c.resolve(base)?;
            ok(commands::cmd_trace(&cfg)?, cfg.out)
        }
        Command::PlotData(c) => {
            let cfg = c.resolve(base)?;
            ok(commands::cmd_trace(&cfg)?, OutFormat::Csv)
        }
        Command::Expand(c) => {
            let cfg = c.resolve(base)?;
            ok(commands::cmd_expand(&cfg)?, cfg.out)
        }
        Command::Zeta { common, s } => {
            let cfg = common.resolve(base)?;
            let s = s.iter().map(|x| parse_s(x)).collect::<Result<Vec<_>>>()?;
            ok(commands::cmd_zeta(&cfg, &s)?, cfg.out)
        }
        Command::Dimspec(c) => {
            let cfg = c.resolve(base)?;
            ok(commands::cmd_dimspec(&cfg)?, cfg.out)
        }
        Command::Suspend { common, times } => {
            let cfg = common.resolve(base)?;
            ok(commands::cmd_suspend(&cfg, times)?, cfg.out)
        }
        Command::Verify { criterion, out } => {
            let (r, passed) = commands::cmd_verify(&criterion)?;
            Ok((r.render(out.unwrap_or(default_out)), passed))
        }
        Command::Config(c) => Ok((c.resolve(base)?.to_toml(), true)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Domain => 2,
                ErrorClass::Resource => 3,
            })
        }
    }
}
