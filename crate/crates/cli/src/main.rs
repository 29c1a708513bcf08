use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spa_core::generic::solve_text;
use spa_core::report::{attack_count, render_checker, render_table, run_check, run_policy_report, GoalSelection};
use spa_core::{parse_scenario, RuleProfile, Scenario};

const NO_ATTACK: u8 = 0;
const ATTACK: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "spa", version, about = "Soft-constraint security protocol analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GoalArg {
    Confidentiality,
    Authentication,
    All,
}

impl From<GoalArg> for GoalSelection {
    fn from(g: GoalArg) -> Self {
        match g {
            GoalArg::Confidentiality => GoalSelection::Confidentiality,
            GoalArg::Authentication => GoalSelection::Authentication,
            GoalArg::All => GoalSelection::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Checker,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Closed security levels in the policy SCSP.
    Policy {
        file: PathBuf,
        #[arg(long)]
        principal: Vec<String>,
        #[arg(long, value_enum, default_value = "confidentiality")]
        goal: GoalArg,
        /// Also list messages at level unknown.
        #[arg(long)]
        full: bool,
    },
    /// Attacks in the trace, relative to the policy.
    Check {
        file: PathBuf,
        #[arg(long)]
        principal: Vec<String>,
        #[arg(long, value_enum, default_value = "confidentiality")]
        goal: GoalArg,
        #[arg(long, value_enum, default_value = "checker")]
        format: Format,
    },
    /// Solve a stand-alone soft constraint problem.
    Solve { file: PathBuf },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("spa: {msg}");
    ExitCode::from(USAGE)
}

fn read(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Scenario, ExitCode> {
    let text = read(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let mut s = parse_scenario(&text, name).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    if let Ok(p) = std::env::var("SPA_PROFILE") {
        s.profile = p.parse::<RuleProfile>().map_err(|e| fail(format!("SPA_PROFILE: {e}")))?;
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.command {
        Command::Policy {
            file,
            principal,
            goal,
            full,
        } => {
            let s = load(&file)?;
            let out = run_policy_report(&s, &principal, goal.into(), full).map_err(fail)?;
            print!("{out}");
            Ok(ExitCode::from(NO_ATTACK))
        }
        Command::Check {
            file,
            principal,
            goal,
            format,
        } => {
            let s = load(&file)?;
            let findings = run_check(&s, &principal, goal.into()).map_err(fail)?;
            let out = match format {
                Format::Checker => render_checker(&s, &findings),
                Format::Table => render_table(&s, &findings),
            };
            print!("{out}");
            let code = if attack_count(&findings) > 0 { ATTACK } else { NO_ATTACK };
            Ok(ExitCode::from(code))
        }
        Command::Solve { file } => {
            let text = read(&file)?;
            let solved = solve_text(&text).map_err(|e| fail(format!("{}: {e}", file.display())))?;
            print!("{}", solved.render());
            Ok(ExitCode::from(NO_ATTACK))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    run(cli).unwrap_or_else(|code| code)
}
