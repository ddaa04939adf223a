use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hamcert::certifier::Profile;
use hamcert::constants::{constants_ledger, ledger_table};
use hamcert::harness::{exit_code, resolve_out_dir, run, RunConfig};

/// Run a seeded certification or learning experiment from a TOML config.
#[derive(Parser, Debug)]
#[command(name = "hamcert", version)]
struct Cli {
    /// Run config (TOML, schema_version = 1).
    #[arg(long, required_unless_present = "constants")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output directory for report.json and trials.csv. Falls back to the
    /// config's `out`, then `HAMCERT_OUT_DIR`, then `hamcert-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
    /// Print the constants ledger and exit.
    #[arg(long)]
    constants: bool,
    /// With --constants, print JSON instead of a table.
    #[arg(long, requires = "constants")]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.constants {
        if cli.json {
            println!("{}", serde_json::to_string_pretty(&constants_ledger()).expect("ledger serializes"));
        } else {
            print!("{}", ledger_table());
        }
        return ExitCode::SUCCESS;
    }
    let path = cli.config.expect("clap enforces --config");
    let mut config = match RunConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hamcert: {}: {e}", path.display());
            return ExitCode::from(exit_code(&Err(e)) as u8);
        }
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(t) = cli.trials {
        config.trials = t;
    }
    if let Some(p) = cli.parallelism {
        config.parallelism = p;
    }
    if cli.profile.is_some() {
        config.profile = cli.profile;
    }
    let out = resolve_out_dir(cli.out.as_deref(), &config);
    config.out = Some(out.clone());
    let result = run(&config);
    match &result {
        Ok(report) => {
            if let Err(e) = report.write(&out) {
                eprintln!("hamcert: writing {}: {e}", out.display());
                return ExitCode::from(1);
            }
            println!("{} -> {}", report.task, out.display());
            println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
            if report.findings.promise_violations > 0 {
                eprintln!("hamcert: {} trial(s) violate the promise", report.findings.promise_violations);
            }
            if report.findings.verification_violations > 0 {
                eprintln!("hamcert: {} verification violation(s)", report.findings.verification_violations);
            }
        }
        Err(e) => eprintln!("hamcert: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
