use std::process::ExitCode;

use clap::Parser;
use orbitlet_cli::cli::Cli;
use orbitlet_cli::commands::run;
use orbitlet_cli::io;
use orbitlet_cli::report::Status;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("orbitlet: thread pool: {e}");
    }
    let exec = run(&cli);
    let report = &exec.report;
    for s in report.steps.iter().filter(|s| s.status == Status::Error) {
        eprintln!("orbitlet: {}: {}", s.name, s.message.as_deref().unwrap_or("error"));
    }
    if let Some(v) = exec.artifact() {
        println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
    }
    let text = serde_json::to_string_pretty(report).unwrap_or_default();
    let mut paths = exec.report_paths.clone();
    if let Some(dir) = &cli.out_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("orbitlet: {}: {e}", dir.display());
        }
        paths.push(dir.join("report.json"));
    }
    for p in paths {
        if let Err(e) = io::write(&p, text.as_bytes()) {
            eprintln!("orbitlet: {e}");
        }
    }
    ExitCode::from(report.exit_code as u8)
}
