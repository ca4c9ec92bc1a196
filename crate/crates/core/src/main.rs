use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cayley_iso::cli::{self, CayleyTableRows, EXIT_ASSERTION, EXIT_IO, EXIT_OK, EXIT_SCHEMA};

#[derive(Parser)]
#[command(name = "cayley-iso", version, about = "Isoperimetric, spectral and Littlewood invariants of Cayley graphs")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job config and write report.json plus CSVs.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full check battery over the built-in instances.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        /// CSV multiplication table used in place of the built-in S3.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Also write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List group descriptors accepted in configs.
    ListGroups,
}

fn pool(threads: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    cli::init_cache_from_env();
    match args.command {
        Command::Run { config, out, threads, seed } => {
            match pool(threads).install(|| cli::run_job(&config, out.as_deref(), seed)) {
                Ok(o) => {
                    for a in o.report.assertions.iter().filter(|a| !a.passed) {
                        eprintln!("FAIL {}: {}", a.id, a.detail);
                    }
                    println!("wrote {}", o.out_dir.join("report.json").display());
                    code(o.exit_code)
                }
                Err(e) => {
                    eprintln!("error: {}", e.message);
                    code(e.code)
                }
            }
        }
        Command::Selfcheck { seed, threads, table, json } => {
            let rows: Option<CayleyTableRows> = match table {
                Some(path) => match std::fs::read_to_string(&path).map_err(|e| e.to_string()).and_then(|t| cli::parse_table_rows(&t)) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        eprintln!("error: {}: {e}", path.display());
                        return code(if e.starts_with("table") { EXIT_SCHEMA } else { EXIT_IO });
                    }
                },
                None => None,
            };
            let report = pool(threads).install(|| cli::selfcheck(seed, rows));
            print!("{}", report.matrix());
            if let Some(path) = json {
                if let Err(e) = std::fs::write(&path, serde_json::to_string_pretty(&report).expect("serializes")) {
                    eprintln!("error: {}: {e}", path.display());
                    return code(EXIT_IO);
                }
            }
            code(if report.passed { EXIT_OK } else { EXIT_ASSERTION })
        }
        Command::ListGroups => {
            print!("{}", cli::list_groups());
            code(EXIT_OK)
        }
    }
}
