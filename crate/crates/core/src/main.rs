use std::io::{ErrorKind, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use charfn::cli::{self, parse_args, parse_config_str, RunConfig, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

fn read_config(arg: &str) -> Result<RunConfig, String> {
    let text = if arg == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("reading standard input: {e}"))?;
        s
    } else {
        std::fs::read_to_string(arg).map_err(|e| format!("reading {arg}: {e}"))?
    };
    parse_config_str(&text).map_err(|e| format!("{arg}: {e}"))
}

fn run() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let inv = match parse_args(&args) {
        Ok(inv) => inv,
        Err(msg) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            eprintln!("{}", cli::USAGE);
            return EXIT_USAGE;
        }
    };
    let mut configs = Vec::new();
    for c in &inv.configs {
        match read_config(c) {
            Ok(cfg) => configs.push(cfg),
            Err(msg) => {
                eprintln!("error: {msg}");
                return EXIT_USAGE;
            }
        }
    }
    let report = match cli::execute(inv.command, &configs[0], configs.get(1)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match serde_json::to_string_pretty(&report) {
        Ok(text) => {
            if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
                if e.kind() != ErrorKind::BrokenPipe {
                    eprintln!("error: writing report: {e}");
                    return EXIT_FAIL;
                }
            }
        }
        Err(e) => {
            eprintln!("error: serializing report: {e}");
            return EXIT_FAIL;
        }
    }
    if let (Some(path), Some(name)) = (&inv.csv, inv.command.csv_table()) {
        let table = report.tables.get(name).cloned().unwrap_or_else(|| default_table(name));
        if let Err(e) = cli::emit_csv(&table, Path::new(path)) {
            eprintln!("error: writing {path}: {e}");
            return EXIT_FAIL;
        }
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn default_table(name: &str) -> charfn::report::Table {
    let columns: &[&str] = match name {
        "boundary_modulus" => &["x", "sigma_max"],
        "julia_quotient" => &["r", "quotient"],
        "ladder" => &["epsilon", "integral"],
        "omega_trace" => &["x", "re_trace_omega"],
        _ => &["x", "y", "sigma_max"],
    };
    charfn::report::Table::new(columns)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CHARFN_LOG"))
        .format_timestamp(None)
        .init();
    ExitCode::from(run() as u8)
}
