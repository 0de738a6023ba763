use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fncalc::report::{Format, Report};
use fncalc::runner::{self, RunOptions};
use fncalc::scenario::{parse_scenario, Scenario};
use fncalc::demo;

#[derive(Parser)]
#[command(name = "fncalc", version, about = "Run symbolic verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Machine,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Sampling seed; overrides FNCALC_SEED and the file's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap for finite-type searches.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check in a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run a single named check.
    Check {
        file: PathBuf,
        name: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Show e_Φ, its Maurer–Cartan residual and the type of an endomorphism.
    Mc {
        file: PathBuf,
        endo: String,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Show the Levi data of a hypersurface.
    Levi {
        file: PathBuf,
        hypersurface: String,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Numerical demonstrations.
    Demo {
        #[arg(value_enum)]
        which: DemoKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoKind {
    Maxprinciple,
}

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("FNCALC_SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("FNCALC_SEED is not an unsigned integer: {v:?}")),
        Err(_) => Ok(None),
    }
}

fn load(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_scenario(&text, stem).map_err(|e| format!("{}:{e}", path.display()))
}

fn emit(report: &Report, format: OutputFormat) -> ExitCode {
    let format = match format {
        OutputFormat::Text => Format::Text,
        OutputFormat::Machine => Format::Machine,
    };
    print!("{}", report.render(format));
    if format == Format::Machine {
        println!();
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn options(scn: &Scenario, args: &RunArgs) -> Result<RunOptions, String> {
    Ok(RunOptions::resolve(scn, args.seed, env_seed()?, args.cap))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { file, args } => {
            let scn = load(&file)?;
            let report = runner::run(&scn, options(&scn, &args)?);
            Ok(emit(&report, args.format))
        }
        Command::Check { file, name, args } => {
            let scn = load(&file)?;
            let check = scn.checks.iter().find(|c| c.name == name).ok_or_else(|| {
                let known: Vec<&str> = scn.checks.iter().map(|c| c.name.as_str()).collect();
                format!("no check named {name:?} (known: {})", known.join(", "))
            })?;
            let opts = options(&scn, &args)?;
            let report = Report::new(scn.name.clone(), opts.seed, opts.cap, vec![runner::run_check(check, opts)]);
            Ok(emit(&report, args.format))
        }
        Command::Mc { file, endo, cap } => {
            let scn = load(&file)?;
            let phi = scn.vvforms.get(&endo).ok_or_else(|| format!("no vvform named {endo:?}"))?;
            let opts = RunOptions::resolve(&scn, None, None, cap);
            match runner::describe_mc(phi, opts.cap) {
                Ok((text, ok)) => {
                    print!("{text}");
                    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(ExitCode::from(EXIT_FAIL))
                }
            }
        }
        Command::Levi { file, hypersurface, samples, seed } => {
            let scn = load(&file)?;
            let h = scn.hypersurfaces.get(&hypersurface).ok_or_else(|| format!("no hypersurface named {hypersurface:?}"))?;
            let opts = RunOptions::resolve(&scn, seed, env_seed()?, None);
            match runner::describe_levi(h, samples, opts.seed) {
                Ok(text) => {
                    print!("{text}");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(ExitCode::from(EXIT_FAIL))
                }
            }
        }
        Command::Demo { which: DemoKind::Maxprinciple } => {
            let report = demo::max_principle(&[1, 2, 3, 4, 5]).map_err(|e| e.to_string())?;
            print!("{}", report.to_text());
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
        }
    }
}
