use std::path::PathBuf;

use clap::{Parser, Subcommand};
use spiral_anchor::config::Config;
use spiral_anchor_cli::verify::{self, VerifyOptions};
use spiral_anchor_cli::{cmd_bundle, cmd_rdas, cmd_scan, exit, CliError, CliResult, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "spiral-anchor", version, about = "Anchoring of spiral waves: bundle equations, scans and the excitable-media experiment")]
struct Cli {
    /// TOML configuration; every section falls back to its defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "SPIRAL_ANCHOR_THREADS")]
    threads: Option<usize>,
    /// Run even when the explicit scheme's stability bound is violated.
    #[arg(long, global = true)]
    override_cfl: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory of the bundle equations.
    Bundle,
    /// Locate perturbed rotating waves over a parameter grid.
    Scan,
    /// Run the reaction-diffusion-advection experiment.
    Rdas {
        /// Continue from a field snapshot.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Comma-separated criterion ids; all nine by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
        /// Length of each excitable-media run in criterion 8.
        #[arg(long, default_value_t = VerifyOptions::default().rdas_t_end)]
        rdas_t_end: f64,
    },
}

fn load(path: &Option<PathBuf>) -> CliResult<Config> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads {n}: {e}")))?;
    }
    let config = load(&cli.config)?;
    let mut opts = RunOptions::new(config, cli.out);
    opts.override_cfl = cli.override_cfl;
    let manifest = match cli.command {
        Command::Bundle => cmd_bundle(&opts)?,
        Command::Scan => cmd_scan(&opts)?,
        Command::Rdas { resume } => {
            opts.resume = resume;
            cmd_rdas(&opts)?
        }
        Command::Verify { only, rdas_t_end } => {
            let ids = if only.is_empty() { (1..=9).collect() } else { only };
            let reports = verify::run(&ids, &VerifyOptions { rdas_t_end });
            for r in &reports {
                println!("{}", r.line());
            }
            std::fs::create_dir_all(&opts.out).map_err(CliError::io("creating the output directory"))?;
            let text = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Failed(e.to_string()))?;
            std::fs::write(opts.out.join("verify.json"), text + "\n").map_err(CliError::io("writing verify.json"))?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            return Ok(if failed == 0 { exit::OK } else { exit::NUMERICAL });
        }
    };
    println!("{}", serde_json::to_string_pretty(&manifest.summary).unwrap_or_default());
    Ok(exit::OK)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
