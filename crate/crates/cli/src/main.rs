use std::fs;
use std::io::{self, BufRead, Write};
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mdsw_core::session::SessionService;
use mdsw_core::{
    compile_to_decision_table, evaluate, parse_rulebook, validate_rulebook, AssessmentCase,
    DerivedRegistry, EvalError, Report, Rulebook, Severity,
};

mod wizard;

#[derive(Parser)]
#[command(
    name = "mdsw",
    version,
    about = "Qualify and classify software as a medical device"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a rulepack. Exit 0 if it has no errors.
    Validate {
        rulepack: PathBuf,
        /// Exit 1 when there are warnings.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate a case file against a rulepack and print the verdict report.
    Eval {
        #[arg(long)]
        rulepack: PathBuf,
        #[arg(long)]
        case: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print the rulepack's decision table as CSV.
    Table {
        #[arg(long)]
        rulepack: PathBuf,
    },
    /// Answer a rulepack's questions interactively on stdin.
    Wizard {
        #[arg(long)]
        rulepack: PathBuf,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long)]
        data_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Md,
}

/// Exit 2 for usage and input errors.
const INPUT_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Validate { rulepack, strict } => validate(&rulepack, strict),
        Command::Eval {
            rulepack,
            case,
            format,
        } => eval(&rulepack, &case, format),
        Command::Table { rulepack } => table(&rulepack),
        Command::Wizard { rulepack } => {
            let rb = load_valid(&rulepack)?;
            let stdin = io::stdin();
            let mut stdout = io::stdout().lock();
            wizard::run(&rb, &mut stdin.lock(), &mut stdout)?;
            Ok(0)
        }
        Command::Serve { port, data_dir } => serve(port, &data_dir),
    }
}

fn load(path: &Path) -> Result<Rulebook> {
    let src = fs::read_to_string(path)
        .with_context(|| format!("cannot read rulepack {}", path.display()))?;
    parse_rulebook(&src).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))
}

// Parse, print any issues, and refuse rulebooks with errors.
fn load_valid(path: &Path) -> Result<Rulebook> {
    let rb = load(path)?;
    let issues = validate_rulebook(&rb);
    for i in &issues {
        eprintln!("{}: {i}", path.display());
    }
    if issues.iter().any(|i| i.is_error()) {
        bail!("rulepack {} is invalid", path.display());
    }
    Ok(rb)
}

fn validate(path: &Path, strict: bool) -> Result<u8> {
    let rb = load(path)?;
    let issues = validate_rulebook(&rb);
    for i in &issues {
        println!("{}: {i}", path.display());
    }
    let errors = issues
        .iter()
        .filter(|i| i.severity == Severity::Error)
        .count();
    Ok(if errors > 0 {
        INPUT_ERROR
    } else if strict && !issues.is_empty() {
        1
    } else {
        0
    })
}

fn eval(rulepack: &Path, case_path: &Path, format: Format) -> Result<u8> {
    let rb = load_valid(rulepack)?;
    let case = AssessmentCase::load(case_path)
        .with_context(|| format!("cannot load case {}", case_path.display()))?;
    let verdict = match evaluate(&case, &rb, &DerivedRegistry::builtin()) {
        Ok(v) => v,
        Err(EvalError::MissingAnswer { node }) => {
            bail!("case {} has no answer for `{node}`", case_path.display())
        }
        Err(e) => return Err(e).context(format!("cannot evaluate {}", case_path.display())),
    };
    let report = Report::new(&case, &verdict);
    let text = match format {
        Format::Json => report.to_json(),
        Format::Md => report.to_markdown(),
    };
    io::stdout().write_all(text.as_bytes())?;
    Ok(0)
}

fn table(rulepack: &Path) -> Result<u8> {
    let rb = load_valid(rulepack)?;
    let table = compile_to_decision_table(&rb)?;
    io::stdout().write_all(table.to_csv().as_bytes())?;
    Ok(0)
}

fn serve(port: u16, data_dir: &Path) -> Result<u8> {
    let svc = SessionService::open(data_dir)
        .with_context(|| format!("data directory {} is not writable", data_dir.display()))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("cannot listen on {addr}"))?;
        let local = listener.local_addr()?;
        eprintln!("mdsw: listening on http://{local}");
        mdsw_server::serve(listener, Arc::new(svc)).await?;
        Ok(0)
    })
}

/// Read one trimmed line; `None` at end of input.
fn read_line(input: &mut dyn BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_owned()))
}
