use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use cf_workbench::workbench::{
    load_config, run, run_diamond, write_report, CheckDoc, Command, DiamondBlock, FactorDoc, GenDoc, Overrides, Report,
    WorkbenchError, EXIT_ASSERTION, EXIT_PASS, SCHEMA_VERSION,
};

/// (C,F)-construction workbench.
#[derive(Parser)]
#[command(name = "cfw", version)]
struct Cli {
    /// JSON config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report directory
    #[arg(long, global = true, default_value = "cfw-out")]
    out: PathBuf,
    /// Override every seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the tower depth
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Override trial counts
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Write JSON reports (default: both formats)
    #[arg(long, global = true)]
    json: bool,
    /// Write CSV tables (default: both formats)
    #[arg(long, global = true)]
    csv: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check CF2/CF3/CF4, the measure type and construction certificates
    Validate,
    /// Rigidity and mixing diagnostics
    Rigidity,
    /// Multiplicity checks on configured representations
    Spectral,
    /// Poisson suspension statistics
    Poisson,
    /// Randomized multiplicity-calculus lab
    Replab,
    /// ⋄-semigroup arithmetic; without an operation, runs the config block
    Diamond {
        #[command(subcommand)]
        op: Option<DiamondOp>,
    },
    /// Every block present in the config
    All,
}

#[derive(Subcommand)]
enum DiamondOp {
    /// {p_1} ⋄ ⋯ ⋄ {p_k}, truncated at the cap
    Gen {
        #[arg(long, value_delimiter = ',', required = true)]
        ps: Vec<u64>,
        #[arg(long)]
        cap: u64,
    },
    /// All singleton factorizations of a finite set
    Factor {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
    },
    /// Closure of a set under products up to a bound
    Check {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long)]
        bound: Option<u64>,
    },
}

fn reports(cli: &Cli) -> Result<Vec<Report>, WorkbenchError> {
    if let Cmd::Diamond { op: Some(op) } = &cli.command {
        let block = match op {
            DiamondOp::Gen { ps, cap } => DiamondBlock { gen: vec![GenDoc { ps: ps.clone(), cap: *cap, expect: None }], ..Default::default() },
            DiamondOp::Factor { set } => {
                DiamondBlock { factor: vec![FactorDoc { set: set.iter().copied().collect(), expect: None }], ..Default::default() }
            }
            DiamondOp::Check { set, bound } => {
                DiamondBlock { check: vec![CheckDoc { set: set.iter().copied().collect(), bound: *bound }], ..Default::default() }
            }
        };
        let config = json!({ "schema_version": SCHEMA_VERSION, "diamond": block });
        return Ok(vec![run_diamond(&block, &config)?]);
    }
    let command = match cli.command {
        Cmd::Validate => Command::Validate,
        Cmd::Rigidity => Command::Rigidity,
        Cmd::Spectral => Command::Spectral,
        Cmd::Poisson => Command::Poisson,
        Cmd::Replab => Command::Replab,
        Cmd::Diamond { .. } => Command::Diamond,
        Cmd::All => Command::All,
    };
    let path = cli.config.as_ref().ok_or_else(|| {
        WorkbenchError::Config(cf_workbench::workbench::ConfigErrors(vec![cf_workbench::workbench::SchemaError {
            pointer: String::new(),
            message: format!("`{}` needs --config", command.name()),
        }]))
    })?;
    let overrides = Overrides { seed: cli.seed, depth: cli.depth, trials: cli.trials };
    let cfg = load_config(path, &overrides)?;
    run(&cfg, command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (json, csv) = if cli.json || cli.csv { (cli.json, cli.csv) } else { (true, true) };
    let outcome = reports(&cli).and_then(|rs| {
        for r in &rs {
            write_report(r, &cli.out, json, csv)?;
        }
        Ok(rs)
    });
    match outcome {
        Ok(rs) => {
            for r in &rs {
                print!("{}", r.summary());
                if r.command == "diamond" {
                    for row in r.tables.iter().flat_map(|t| &t.rows) {
                        println!("{}", row.last().map(String::as_str).unwrap_or_default());
                    }
                }
            }
            let code = if rs.iter().all(|r| r.passed) { EXIT_PASS } else { EXIT_ASSERTION };
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
