use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use refract_core::callgraph::CallGraph;
use refract_core::hierarchy::Hierarchy;
use refract_core::ir::parse_program;
use refract_core::reflect::{run_stratified, Mode, Options};
use refract_core::report::{analyze, diff_modes, ReportError, Request};
use refract_core::taint::{ResolvedConfig, TaintConfig};

#[derive(Parser)]
#[command(name = "refract", version, about = "Reflection-aware points-to analysis for a Java-like IR")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one IR file and print a report.
    Analyze(AnalyzeArgs),
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// IR source file.
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Ripple)]
    mode: ModeArg,
    /// Entry method, `Class.method`; must be static with no parameters.
    #[arg(long)]
    entry: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Source/sink file: `source C.m` and `sink C.m <param>` lines.
    #[arg(long)]
    taint_config: Option<PathBuf>,
    /// Compare two modes, e.g. `strinf:ripple`, instead of a single report.
    #[arg(long, value_parser = parse_diff)]
    diff: Option<(Mode, Mode)>,
    /// Enumerate every class for unbounded newInstance on unknown classes.
    #[arg(long)]
    exhaustive: bool,
    /// Include per-variable points-to sets.
    #[arg(long)]
    dump_pts: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strinf,
    Typeinf,
    Ripple,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Strinf => Mode::Strinf,
            ModeArg::Typeinf => Mode::Typeinf,
            ModeArg::Ripple => Mode::Ripple,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
}

fn parse_diff(s: &str) -> Result<(Mode, Mode), String> {
    let (a, b) = s.split_once(':').ok_or("expected <modeA>:<modeB>")?;
    Ok((a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?))
}

/// Exit status plus the message for stderr.
enum Failure {
    /// Bad input: unreadable file, syntax or config error (exit 2).
    Input(String),
    /// A checked invariant did not hold (exit 1).
    Invariant(String),
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Pta(e) => Failure::Input(e.to_string()),
            e @ (ReportError::CallGraph(_) | ReportError::Subsumption { .. }) => Failure::Invariant(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run(args: &AnalyzeArgs) -> Result<String, Failure> {
    let source = read(&args.file)?;
    let p = parse_program(&source).map_err(|e| Failure::Input(format!("{}:{e}", args.file.display())))?;
    let h = Hierarchy::new(&p);
    let taint: Option<ResolvedConfig> = match &args.taint_config {
        Some(path) => {
            let text = read(path)?;
            let cfg = TaintConfig::parse(&text)
                .and_then(|c| c.resolve(&p))
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            Some(cfg)
        }
        None => None,
    };
    let options = Options { exhaustive: args.exhaustive, ..Options::new(args.mode.into()) };
    let req = Request { source: &source, entry: &args.entry, options, taint: taint.as_ref(), dump_pts: args.dump_pts };

    if let Some((a, b)) = args.diff {
        let d = diff_modes(&p, &h, &req, a, b)?;
        return match args.format {
            Format::Json => Ok(d.to_json()),
            Format::Text => Ok(d.to_text()),
            Format::Dot => Err(Failure::Input("--format dot cannot be combined with --diff".into())),
        };
    }
    match args.format {
        Format::Json => Ok(analyze(&p, &h, &req)?.to_json()),
        Format::Text => Ok(analyze(&p, &h, &req)?.to_text()),
        Format::Dot => {
            let a = run_stratified(&p, &h, req.entry, &options).map_err(ReportError::from)?;
            let cg = CallGraph::build(&a).map_err(ReportError::from)?;
            Ok(cg.to_dot(&p))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let mut cmd = Cli::command();
            cmd.build();
            let usage = match cmd.find_subcommand_mut("analyze") {
                Some(sub) => sub.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("\n{usage}");
            return ExitCode::from(2);
        }
    };
    let Command::Analyze(args) = cli.command;
    match run(&args) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
