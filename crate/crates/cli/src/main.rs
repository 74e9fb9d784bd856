use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use ictmc_core::ergodicity::check_ergodic;
use ictmc_core::harness::{
    load_model, parse_queries, reports_to_csv, reproduce_table, run_batch, table_to_csv, RunConfig,
};

const EXIT_PARSE: u8 = 2;
const EXIT_COMPUTATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "ictmc", version, about = "Guaranteed-error lower expectations for imprecise continuous-time Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one query or a JSON array of queries against a model.
    Run {
        #[arg(long)]
        model: PathBuf,
        /// Path to a query file, or the query itself as inline JSON.
        #[arg(long)]
        query: String,
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
    },
    /// Report the norm and the ergodicity of a model.
    Check {
        #[arg(long)]
        model: PathBuf,
    },
    /// Reproduce the comparison of approximation methods as CSV.
    Table1 {
        #[arg(long, default_value_t = 50)]
        repeats: u32,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self {
            code: code as u8,
            message: message.to_string(),
        }
    }
}

fn run_config() -> Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    if let Ok(raw) = std::env::var("ICTMC_MAX_ITERS") {
        config.max_iterations = raw
            .trim()
            .parse()
            .map_err(|_| Failure::new(EXIT_PARSE.into(), format!("ICTMC_MAX_ITERS must be a non-negative integer, got {raw:?}")))?;
    }
    Ok(config)
}

fn query_text(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if !arg.trim_start().starts_with(['{', '[']) && path.exists() {
        return std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE.into(), format!("cannot read {arg}: {e}")));
    }
    Ok(arg.to_string())
}

fn run(model: &Path, query: &str, csv: bool) -> Result<(), Failure> {
    let q = load_model(model).map_err(|e| Failure::new(e.exit_code(), e))?;
    let text = query_text(query)?;
    let specs = parse_queries(&text).map_err(|e| Failure::new(EXIT_PARSE.into(), format!("invalid query JSON: {e}")))?;
    let single = !text.trim_start().starts_with('[');
    let results = run_batch(&q, &specs, &run_config()?);

    let mut worst = 0u8;
    let mut reports = Vec::new();
    let mut entries = Vec::new();
    for (i, result) in results.into_iter().enumerate() {
        match result {
            Ok(report) => {
                entries.push(serde_json::to_value(&report).expect("reports serialize"));
                reports.push(report);
            }
            Err(e) => {
                let code = e.exit_code() as u8;
                worst = worst.max(code);
                eprintln!("query {i}: {e}");
                entries.push(json!({ "index": i, "error": e.to_string(), "exit_code": code }));
            }
        }
    }

    if csv {
        print!("{}", reports_to_csv(&q, &reports));
    } else {
        let out = if single { entries.pop().unwrap_or(Value::Null) } else { Value::Array(entries) };
        println!("{}", serde_json::to_string_pretty(&out).expect("values serialize"));
    }
    match worst {
        0 => Ok(()),
        code => Err(Failure {
            code,
            message: String::new(),
        }),
    }
}

fn check(model: &Path) -> Result<(), Failure> {
    let q = load_model(model).map_err(|e| Failure::new(e.exit_code(), e))?;
    let report = check_ergodic(&q);
    let label = |x: &usize| q.space().label(*x);
    let out = json!({
        "states": (0..q.size()).map(|x| q.space().label(x)).collect::<Vec<_>>(),
        "norm": q.norm(),
        "top_class": report.top_class.iter().map(label).collect::<Vec<_>>(),
        "regular": report.regular,
        "absorbing": report.absorbing,
        "ergodic": report.ergodic,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("values serialize"));
    Ok(())
}

fn table1(repeats: u32) -> Result<(), Failure> {
    let rows = reproduce_table(repeats).map_err(|e| Failure::new(EXIT_COMPUTATION.into(), e))?;
    print!("{}", table_to_csv(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { model, query, csv, .. } => run(model, query, *csv),
        Command::Check { model } => check(model),
        Command::Table1 { repeats } => table1(*repeats),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if !failure.message.is_empty() {
                eprintln!("error: {}", failure.message);
            }
            ExitCode::from(failure.code)
        }
    }
}
