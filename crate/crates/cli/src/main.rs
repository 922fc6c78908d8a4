//! Batch runner for the amenable experiments.
//!
//! Every command builds a parameter map and hands it to the scenario
//! registry or a castle command, which returns a [`report::Report`].
//! Exit status: 0 when every asserted invariant holds, 1 when one fails,
//! 2 for usage errors.

mod castle_cmd;
mod error;
mod params;
mod report;
mod scenarios;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;
use params::{parse_config, parse_flag_pairs, Params};
use report::Report;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "AMENABLE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "amenable", version, about = "Finite experiments on amenable group actions")]
struct Cli {
    /// Group: z1, z2, ..., heisenberg3 or a JSON spec.
    #[arg(long, global = true)]
    group: Option<String>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report files; defaults to $AMENABLE_OUT_DIR, else stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariance of standard boxes.
    Foelner {
        #[command(subcommand)]
        action: FoelnerCmd,
    },
    /// Quasi-tile F by right translates of tile shapes.
    Tile(TileArgs),
    /// Spread and quasi-spread certificates.
    Spread {
        #[command(subcommand)]
        action: SpreadCmd,
    },
    /// Window entropy of a symbolic system.
    Entropy(EntropyArgs),
    /// Entropy rate of {0, g, 2g, ...} against the gap g.
    MixingScan(MixingArgs),
    /// Flatness of a distribution read from CSV.
    Flatness(FlatnessArgs),
    /// Castles on a finite torus.
    Castle {
        #[command(subcommand)]
        action: CastleCmd,
    },
    /// Run a named scenario; trailing `--key value` pairs override the config file.
    Run(RunArgs),
    /// List the registered scenarios.
    Scenarios,
}

#[derive(Subcommand, Debug)]
enum FoelnerCmd {
    Scan {
        #[arg(long = "K")]
        k: String,
        #[arg(long = "n-range")]
        n_range: String,
    },
}

#[derive(Args, Debug)]
struct TileArgs {
    #[arg(long = "F")]
    f: String,
    #[arg(long)]
    tiles: String,
    #[arg(long)]
    eps: String,
}

#[derive(Subcommand, Debug)]
enum SpreadCmd {
    Verify {
        #[arg(long)]
        set: String,
        #[arg(long = "K")]
        k: String,
    },
    Quasi {
        #[arg(long)]
        svf: String,
        #[arg(long = "N")]
        n: String,
        #[arg(long)]
        listing: Option<String>,
    },
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// System JSON, inline or as a file path.
    #[arg(long)]
    system: String,
    #[arg(long)]
    partition: Option<String>,
    /// exact or float.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    window: String,
    /// Estimate from this many seeded samples instead of enumerating.
    #[arg(long)]
    samples: Option<String>,
    /// Write the name distribution to this CSV file.
    #[arg(long)]
    dump: Option<String>,
    /// Scales for the normalized box entropies.
    #[arg(long)]
    scales: Option<String>,
}

#[derive(Args, Debug)]
struct MixingArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    gaps: String,
    #[arg(long = "set-size")]
    set_size: Option<String>,
}

#[derive(Args, Debug)]
struct FlatnessArgs {
    #[arg(long)]
    dist: String,
    /// Entropy level in bits.
    #[arg(long = "h")]
    h: String,
    #[arg(long)]
    delta: String,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    labels: Option<String>,
}

#[derive(Subcommand, Debug)]
enum CastleCmd {
    Build {
        #[arg(long)]
        torus: Option<String>,
        #[arg(long)]
        dim: Option<String>,
        /// Side of a single box tower.
        #[arg(long = "box")]
        side: Option<String>,
        /// Cube sides for the greedy tiler, e.g. 8,4.
        #[arg(long)]
        tiles: Option<String>,
        #[arg(long)]
        eps: Option<String>,
    },
    Invariance {
        #[arg(long)]
        castle: String,
        #[arg(long = "N")]
        n: Option<String>,
        #[arg(long = "n-range")]
        n_range: Option<String>,
    },
    Average {
        #[arg(long)]
        castle: String,
        /// JSON integer array, one value per point.
        #[arg(long)]
        observable: Option<String>,
    },
    Transfer {
        #[arg(long)]
        set: String,
        #[arg(long)]
        torus: Option<String>,
        #[arg(long)]
        dim: Option<String>,
        #[arg(long = "max-level")]
        max_level: Option<String>,
        #[arg(long)]
        steps: Option<String>,
    },
    Image {
        #[arg(long)]
        castle: String,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    scenario: Option<String>,
    /// Plain `key = value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    rest: Vec<String>,
}

impl SystemArgs {
    fn fill(&self, p: &mut Params) {
        p.set("system", self.system.clone());
        p.set_opt("partition", self.partition.clone());
        p.set_opt("mode", self.mode.clone());
        p.set_opt("budget", self.budget.clone());
    }
}

/// Where reports go: the flag, then the environment.
fn out_dir(flag: Option<PathBuf>) -> Option<PathBuf> {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}

fn with_group(cli_group: &Option<String>) -> Params {
    let mut p = Params::new();
    p.set_opt("group", cli_group.clone());
    p
}

fn dispatch(cli: Cli) -> Result<(Report, Option<PathBuf>), CliError> {
    let seed = cli.seed.unwrap_or(0);
    let mut p = with_group(&cli.group);
    let report = match cli.command {
        Command::Foelner {
            action: FoelnerCmd::Scan { k, n_range },
        } => {
            p.set("K", k);
            p.set("n-range", n_range);
            scenarios::execute("foelner-scan", &p, seed)?
        }
        Command::Tile(a) => {
            p.set("F", a.f);
            p.set("tiles", a.tiles);
            p.set("eps", a.eps);
            scenarios::execute("tile", &p, seed)?
        }
        Command::Spread { action } => {
            match action {
                SpreadCmd::Verify { set, k } => {
                    p.set("set", set);
                    p.set("K", k);
                }
                SpreadCmd::Quasi { svf, n, listing } => {
                    p.set("svf", svf);
                    p.set("N", n);
                    p.set_opt("listing", listing);
                }
            }
            scenarios::execute("spread-verify", &p, seed)?
        }
        Command::Entropy(a) => {
            a.system.fill(&mut p);
            p.set("window", a.window);
            p.set_opt("samples", a.samples);
            p.set_opt("dump", a.dump);
            p.set_opt("scales", a.scales);
            scenarios::execute("entropy", &p, seed)?
        }
        Command::MixingScan(a) => {
            a.system.fill(&mut p);
            p.set("gaps", a.gaps);
            p.set_opt("set-size", a.set_size);
            scenarios::execute("mixing-scan", &p, seed)?
        }
        Command::Flatness(a) => {
            p.set("dist", a.dist);
            p.set("h", a.h);
            p.set("delta", a.delta);
            p.set_opt("mode", a.mode);
            p.set_opt("labels", a.labels);
            scenarios::execute("flatness", &p, seed)?
        }
        Command::Castle { action } => match action {
            CastleCmd::Build {
                torus,
                dim,
                side,
                tiles,
                eps,
            } => {
                p.set_opt("torus", torus);
                p.set_opt("dim", dim);
                p.set_opt("box", side);
                p.set_opt("tiles", tiles);
                p.set_opt("eps", eps);
                castle_cmd::build(&p, seed)?
            }
            CastleCmd::Invariance { castle, n, n_range } => {
                p.set("castle", castle);
                p.set_opt("N", n);
                p.set_opt("n-range", n_range);
                castle_cmd::invariance(&p, seed)?
            }
            CastleCmd::Average { castle, observable } => {
                p.set("castle", castle);
                p.set_opt("observable", observable);
                castle_cmd::average(&p, seed)?
            }
            CastleCmd::Transfer {
                set,
                torus,
                dim,
                max_level,
                steps,
            } => {
                p.set("set", set);
                p.set_opt("torus", torus);
                p.set_opt("dim", dim);
                p.set_opt("max-level", max_level);
                p.set_opt("steps", steps);
                castle_cmd::transfer(&p, seed)?
            }
            CastleCmd::Image { castle } => {
                p.set("castle", castle);
                castle_cmd::image(&p, seed)?
            }
        },
        Command::Run(a) => return run_scenario(a, cli.group, cli.seed, cli.out),
        Command::Scenarios => {
            for s in scenarios::registry() {
                println!("{:<16} {}", s.name(), s.about());
            }
            std::process::exit(0);
        }
    };
    Ok((report, out_dir(cli.out)))
}

/// Config file first, then flags; `scenario`, `seed` and `out` are run-level keys.
fn run_scenario(
    a: RunArgs,
    group: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(Report, Option<PathBuf>), CliError> {
    let mut p = match &a.config {
        Some(path) => parse_config(
            &fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?,
        )?,
        None => Params::new(),
    };
    p.merge(parse_flag_pairs(&a.rest)?);
    p.set_opt("group", group);
    let file_scenario = p.remove("scenario");
    let file_seed = p.remove("seed");
    let file_out = p.remove("out");
    let name = a
        .scenario
        .or(file_scenario)
        .ok_or_else(|| CliError::usage("run needs --scenario or a scenario key in the config"))?;
    let seed = match (seed, file_seed) {
        (Some(s), _) => s,
        (None, Some(text)) => text
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad seed {text:?}")))?,
        (None, None) => 0,
    };
    let report = scenarios::execute(&name, &p, seed)?;
    Ok((report, out_dir(out.or(file_out.map(PathBuf::from)))))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli).and_then(|(report, out)| report.emit(out.as_deref()).map(|()| report.pass())) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            if let CliError::Invariant(msg) = &e {
                eprintln!("{}", serde_json::json!({"status": "failed", "failures": [msg]}));
            }
            ExitCode::from(e.exit_code())
        }
    }
}
