use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use spinchain_cli::commands::{self, CommandError, Outcome};
use spinchain_cli::config::{read_pairs, RunConfig};
use spinchain_cli::output::Manifest;

#[derive(Parser)]
#[command(name = "spinchain", version, about = "Stroboscopic dynamics of a periodically driven XY chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-ring revival times against the Lieb-Robinson prediction.
    Revival(Flags),
    /// Relaxation of C, D and the trace distance to the steady state.
    Relax(Flags),
    /// Steady-state C and D across drive periods, with band crossings.
    Sweep(Flags),
    /// Ergodicity scores against the Gibbs curve.
    Ergodicity(Flags),
    /// Oracle comparison and invariant checks.
    Validate(Flags),
}

impl Command {
    fn split(&self) -> (&'static str, &Flags) {
        match self {
            Command::Revival(f) => ("revival", f),
            Command::Relax(f) => ("relax", f),
            Command::Sweep(f) => ("sweep", f),
            Command::Ergodicity(f) => ("ergodicity", f),
            Command::Validate(f) => ("validate", f),
        }
    }
}

/// Every flag is passed through as text, so the config file and the command
/// line share one parser.  Grids accept `x`, `x,y,z` or `start:stop:step`.
#[derive(Args)]
struct Flags {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    /// Initial quadrature node count.
    #[arg(long)]
    nodes: Option<String>,
    /// Ring lengths.
    #[arg(long = "N")]
    sizes: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; falls back to SPINCHAIN_THREADS.
    #[arg(long)]
    threads: Option<String>,
    /// concurrence, discord or both (comma separated).
    #[arg(long)]
    measure: Option<String>,
    /// Cycles per log-averaged block in the relaxation fit.
    #[arg(long)]
    fit_block: Option<String>,
    /// Fraction of n_max where the fitted tail starts.
    #[arg(long)]
    fit_tail: Option<String>,
    /// Trace-distance normalisation: `full` (default) or `half`.
    #[arg(long)]
    trace_norm: Option<String>,
    /// Break the momentum route on purpose (validate only).
    #[arg(long)]
    flip_pairing: bool,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let opts = [
            ("a", &self.a),
            ("b", &self.b),
            ("tau", &self.tau),
            ("beta", &self.beta),
            ("n-max", &self.n_max),
            ("nodes", &self.nodes),
            ("N", &self.sizes),
            ("out", &self.out),
            ("threads", &self.threads),
            ("measure", &self.measure),
            ("fit-block", &self.fit_block),
            ("fit-tail", &self.fit_tail),
            ("trace-norm", &self.trace_norm),
        ];
        let mut pairs: Vec<_> = opts
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect();
        if self.flip_pairing {
            pairs.push(("flip-pairing", "true"));
        }
        pairs
    }
}

fn load(command: &str, flags: &Flags) -> Result<RunConfig, CommandError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        cfg.apply(&read_pairs(path)?)?;
    }
    for (k, v) in flags.pairs() {
        cfg.set(k, v)?;
    }
    if cfg.threads.is_none() {
        if let Ok(v) = std::env::var("SPINCHAIN_THREADS") {
            cfg.set("threads", &v)?;
        }
    }
    cfg.resolve(command);
    Ok(cfg)
}

fn run(command: &str, flags: &Flags) -> Result<bool, CommandError> {
    let cfg = load(command, flags)?;
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CommandError::Invalid(e.to_string()))?;
    std::fs::create_dir_all(&cfg.out)?;
    let start = Instant::now();
    let outcome: Outcome = pool.install(|| match command {
        "revival" => commands::revival(&cfg, &cfg.out),
        "relax" => commands::relax(&cfg, &cfg.out),
        "sweep" => commands::sweep(&cfg, &cfg.out),
        "ergodicity" => commands::ergodicity(&cfg, &cfg.out),
        _ => commands::validate(&cfg, &cfg.out),
    })?;
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        threads: pool.current_num_threads(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        outputs: outcome
            .outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        results: &outcome.results,
    };
    manifest.write(&cfg.out)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    // clap's own failure code is 2, which here means a tolerance failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, flags) = cli.command.split();
    match run(command, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("spinchain {command}: tolerance check failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("spinchain {command}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
