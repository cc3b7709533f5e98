use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use hallzeta::cli::{config_from_report, run, Command, ExperimentConfig};

/// Numerical experiments on the spherical Hall algebra of compactified Spec(Z).
/// Prints a JSON report; exit status 0 = all criteria pass, 1 = numeric
/// failure, 2 = configuration error.
#[derive(Parser, Debug)]
#[command(name = "hallzeta", version)]
struct Cli {
    /// Tolerance override: NAME=VALUE for one criterion, or a bare VALUE for every upper-bound criterion.
    #[arg(long, global = true)]
    tol: Vec<String>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Zero-ordinate cache file (read if present, written after computing).
    #[arg(long, global = true)]
    zero_cache: Option<PathBuf>,
    /// Pretty-print the report.
    #[arg(long, global = true)]
    human: bool,
    /// Re-run the configuration echoed in a previous report.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Zeros of zeta* on the critical line.
    Zeros {
        #[arg(long, num_args = 2, value_names = ["T_MIN", "T_MAX"], default_values_t = [0.0, 30.0])]
        range: Vec<f64>,
    },
    /// Functional equation and special values.
    SpecfunCheck,
    /// Eisenstein-Maass series by two methods.
    Eisenstein {
        #[arg(long, default_value = "0,1", value_parser = parse_pair)]
        tau: [f64; 2],
        /// s as RE or RE,IM.
        #[arg(long, default_value = "2", value_parser = parse_complex)]
        s: [f64; 2],
    },
    /// Lattice-side Hall products against their closed forms.
    HallOracle {
        #[arg(long, value_parser = parse_pair, default_values = ["0,1", "0.3,1.1"])]
        tau: Vec<[f64; 2]>,
        /// Also run the constant-term/Mellin homomorphism check.
        #[arg(long)]
        ch: bool,
    },
    /// Shuffle algebra identities on random entire inputs.
    ShuffleCheck {
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Forward and inverse Mellin transforms.
    MellinCheck {
        #[arg(long, default_value_t = 1e-12)]
        mellin_tol: f64,
        #[arg(long = "contour-T", default_value_t = 40.0)]
        contour_t: f64,
        #[arg(long, default_value_t = 1600)]
        contour_nodes: usize,
    },
    /// Perturbed permutohedron cohomology at a zeta zero.
    WheelScan {
        #[arg(long, default_value_t = 0)]
        zero_index: usize,
        /// Translation samples c as "re,im;re,im;...".
        #[arg(long, default_value = "0,0;1,1", value_parser = parse_grid)]
        grid: Grid,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.1, -0.07])]
        offsets: Vec<f64>,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([f(a)?, f(b)?])
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    if s.contains(',') {
        parse_pair(s)
    } else {
        Ok([s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?, 0.0])
    }
}

#[derive(Debug, Clone)]
struct Grid(Vec<[f64; 2]>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_pair).collect::<Result<_, _>>().map(Grid)
}

/// Clap already exits with 2 on its own errors.
fn config_error(msg: &str) -> ExitCode {
    let mut cmd = Cli::command();
    eprintln!("error: {msg}\n\n{}", cmd.render_usage());
    ExitCode::from(2)
}

fn build(cli: &Cli) -> Result<ExperimentConfig, String> {
    if cli.replay.is_some() && cli.command.is_some() {
        return Err("--replay takes no subcommand".into());
    }
    let mut cfg = if let Some(path) = &cli.replay {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        config_from_report(&text).map_err(|e| e.to_string())?
    } else {
        let command = match cli.command.as_ref().ok_or("a subcommand or --replay is required")? {
            Cmd::Zeros { range } => Command::Zeros { range: [range[0], range[1]] },
            Cmd::SpecfunCheck => Command::SpecfunCheck,
            Cmd::Eisenstein { tau, s } => Command::Eisenstein { tau: *tau, s: *s },
            Cmd::HallOracle { tau, ch } => Command::HallOracle { tau: tau.clone(), ch: *ch },
            Cmd::ShuffleCheck { trials } => Command::ShuffleCheck { trials: *trials },
            Cmd::MellinCheck { mellin_tol, contour_t, contour_nodes } => Command::MellinCheck {
                mellin_tol: *mellin_tol,
                contour_t: *contour_t,
                contour_nodes: *contour_nodes,
            },
            Cmd::WheelScan { zero_index, grid, offsets } => {
                Command::WheelScan { zero_index: *zero_index, grid: grid.0.clone(), offsets: offsets.clone() }
            }
        };
        let mut cfg = ExperimentConfig::new(command);
        cfg.seed = cli.seed;
        cfg
    };
    let mut tolerances = BTreeMap::new();
    for t in &cli.tol {
        let (k, v) = t.split_once('=').unwrap_or(("*", t.as_str()));
        let v = v.trim().parse::<f64>().map_err(|e| format!("--tol {t:?}: {e}"))?;
        tolerances.insert(k.trim().to_string(), v);
    }
    cfg.tolerances.extend(tolerances);
    if cli.out.is_some() {
        cfg.output_path = cli.out.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cli.zero_cache.is_some() {
        cfg.zero_cache = cli.zero_cache.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build(&cli) {
        Ok(cfg) => cfg,
        Err(msg) => return config_error(&msg),
    };
    if let Some(j) = cfg.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            return config_error(&e.to_string());
        }
    }
    let report = run(&cfg);
    let text = report.to_json(cli.human);
    match &cfg.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text + "\n") {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => {
            let _ = writeln!(std::io::stdout(), "{text}");
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
