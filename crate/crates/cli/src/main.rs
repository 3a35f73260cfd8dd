use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qreduce_cli::{emit_distribution_table, run_path, scenario_files, CliError, Report};

#[derive(Parser)]
#[command(name = "qreduce", version, about = "Run measurement-process scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and emit its report.
    Run {
        scenario: PathBuf,
        /// Write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Print the outcome distribution as a tab-separated table.
        #[arg(long)]
        table: bool,
    },
    /// Run every `*.json` scenario in a directory.
    VerifyAll {
        dir: PathBuf,
        /// Write `<stem>.report.json` for each scenario here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

const CHECK_FAILURE: u8 = 1;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            table,
        } => run(&scenario, out.as_deref(), seed, table),
        Command::VerifyAll { dir, out_dir } => verify_all(&dir, out_dir.as_deref()),
    };
    ExitCode::from(code)
}

fn fail(e: &CliError) -> u8 {
    eprintln!("{}", e.line());
    e.exit_code() as u8
}

fn write_report(path: &std::path::Path, report: &Report) -> Result<(), CliError> {
    std::fs::write(path, report.to_json())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn verdict_code(report: &Report) -> u8 {
    if report.body.passed() {
        return 0;
    }
    let failed: Vec<&str> = report
        .body
        .failed_checks()
        .map(|c| c.name.as_str())
        .collect();
    eprintln!(
        "fail: scenario={} checks={}",
        serde_json::to_string(&report.body.name).unwrap_or_default(),
        serde_json::to_string(&failed.join(",")).unwrap_or_default()
    );
    CHECK_FAILURE
}

fn run(
    path: &std::path::Path,
    out: Option<&std::path::Path>,
    seed: Option<u64>,
    table: bool,
) -> u8 {
    let report = match run_path(path, seed) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    if let Some(out) = out {
        if let Err(e) = write_report(out, &report) {
            return fail(&e);
        }
    }
    if table {
        print!("{}", emit_distribution_table(&report));
    } else if out.is_none() {
        print!("{}", report.to_json());
    }
    verdict_code(&report)
}

fn verify_all(dir: &std::path::Path, out_dir: Option<&std::path::Path>) -> u8 {
    let files = match scenario_files(dir) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let mut worst = 0u8;
    for path in files {
        let name = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let code = match run_path(&path, None) {
            Ok(report) => {
                let mut code = verdict_code(&report);
                if let Some(dir) = out_dir {
                    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                    if let Err(e) = write_report(&dir.join(format!("{stem}.report.json")), &report)
                    {
                        code = code.max(fail(&e));
                    }
                }
                code
            }
            Err(e) => fail(&e),
        };
        println!("{}\t{name}", if code == 0 { "PASS" } else { "FAIL" });
        worst = worst.max(code);
    }
    worst
}
