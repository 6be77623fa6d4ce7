use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hvedb_bench::{
    run_complexity_suite, run_scaling_suite, write_complexity_csv, Grid, ScalingConfig, Series,
};
use hvedb_cli::OutputFormat;
use hvedb_core::{CurveId, Error, ErrorClass};

#[derive(Parser)]
#[command(
    name = "hvedb",
    version,
    about = "Conjunctive select-project queries over HVE-encrypted tables"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate master keys for a table with N columns.
    Setup {
        #[arg(long)]
        columns: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "bls12-381")]
        curve: CurveId,
    },
    /// Encrypt a CSV table (with header row) into a store.
    Encrypt {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Issue a query token (owner).
    Token {
        #[arg(long)]
        query: String,
        #[arg(long)]
        msk: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// CSV file or store supplying the column names.
        #[arg(long)]
        schema: PathBuf,
    },
    /// Issue a parametric token whose predicate values are bound later (owner).
    Ptoken {
        #[arg(long)]
        predicate_cols: String,
        /// Comma-separated column names, or `*`.
        #[arg(long)]
        project: String,
        #[arg(long)]
        msk: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Bind values to a parametric token (user).
    Bind {
        #[arg(long)]
        ptoken: PathBuf,
        /// One value per predicate column, in table order.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a token against a store (proxy).
    Query {
        #[arg(long)]
        token: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
    },
    /// Print a summary of a public record file.
    Inspect { file: PathBuf },
    /// Measurement suites.
    Bench {
        #[command(subcommand)]
        suite: BenchCmd,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Operation counts and sizes against the published formulas.
    Complexity {
        /// e.g. `ell=1,2;t=0..3;c=1..2;n=1..4`
        #[arg(long, default_value = "")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "bls12-381")]
        curve: CurveId,
    },
    /// Wall-clock scaling in the number of columns and predicates.
    Scaling {
        #[arg(long, default_value = "2,4,8,16")]
        ell: String,
        #[arg(long, default_value_t = 16)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "bls12-381")]
        curve: CurveId,
    },
}

fn run(cmd: Cmd) -> Result<(), Error> {
    let stdout = io::stdout();
    match cmd {
        Cmd::Setup {
            columns,
            out,
            curve,
        } => {
            let (mpk, msk) = hvedb_cli::setup(columns, &out, curve)?;
            println!(
                "public key: {}\nsecret key: {}",
                mpk.display(),
                msk.display()
            );
        }
        Cmd::Encrypt { table, mpk, out } => {
            let n = hvedb_cli::encrypt(&table, &mpk, &out)?;
            println!("{} now holds {n} rows", out.display());
        }
        Cmd::Token {
            query,
            msk,
            out,
            schema,
        } => {
            hvedb_cli::token(&query, &msk, &schema, &out)?;
            println!("{}", hvedb_cli::describe_token(&out)?);
        }
        Cmd::Ptoken {
            predicate_cols,
            project,
            msk,
            out,
            schema,
        } => {
            let preds = hvedb_cli::split_list(&predicate_cols)?;
            let proj = hvedb_cli::split_list(&project)?;
            hvedb_cli::ptoken(&preds, &proj, &msk, &schema, &out)?;
            println!("{}", hvedb_cli::describe_token(&out)?);
        }
        Cmd::Bind {
            ptoken,
            values,
            out,
        } => {
            hvedb_cli::bind(&ptoken, &hvedb_cli::split_list(&values)?, &out)?;
            println!("{}", hvedb_cli::describe_token(&out)?);
        }
        Cmd::Query {
            token,
            store,
            format,
        } => {
            let mut out = stdout.lock();
            hvedb_cli::query(&token, &store, format, &mut out, &mut io::stderr())?;
            out.flush()?;
        }
        Cmd::Inspect { file } => println!("{}", hvedb_cli::describe_token(&file)?),
        Cmd::Bench { suite } => run_bench(suite)?,
    }
    Ok(())
}

fn run_bench(suite: BenchCmd) -> Result<(), Error> {
    match suite {
        BenchCmd::Complexity { grid, out, curve } => {
            let grid: Grid = grid
                .parse()
                .map_err(|e: hvedb_bench::grid::GridError| Error::InvalidArgument(e.to_string()))?;
            let rows = run_complexity_suite(&grid, curve)?;
            write_complexity_csv(&rows, std::fs::File::create(&out)?)?;
            println!("{} measurements written to {}", rows.len(), out.display());
        }
        BenchCmd::Scaling {
            ell,
            rows,
            reps,
            out,
            curve,
        } => {
            let ells = hvedb_cli::split_list(&ell)?
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidArgument(format!("bad column count `{s}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let report = run_scaling_suite(&ScalingConfig {
                ells,
                rows,
                reps,
                curve,
                ..ScalingConfig::default()
            })?;
            report.write_csv(std::fs::File::create(&out)?)?;
            for s in [Series::Encrypt, Series::Query, Series::Space] {
                if let Some(f) = report.fit(s) {
                    println!(
                        "{:<8} slope {:.6e}  intercept {:.6e}  R^2 {:.4}",
                        s.name(),
                        f.slope,
                        f.intercept,
                        f.r2
                    );
                }
            }
            println!(
                "predicate series nondecreasing: {}",
                report.predicates_monotone()
            );
            if let Some(x) = report.service_expansion() {
                println!(
                    "expansion factor {x:.1} (reference {})",
                    hvedb_bench::scaling::REFERENCE_EXPANSION
                );
            }
            println!("written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => 2,
                ErrorClass::Crypto => 3,
                ErrorClass::Io => 4,
            })
        }
    }
}
