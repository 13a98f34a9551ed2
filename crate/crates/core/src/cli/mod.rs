//! Batch front end: `charfn <command> <config.json|-> [second config] [--csv path]`.

pub mod commands;
pub mod config;
pub mod csv;

pub use commands::{execute, Command, COMMANDS};
pub use config::{parse_config_str, parse_config_value, RunConfig, SchemaError};
pub use csv::{emit_csv, table_to_csv};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const USAGE: &str = "usage: charfn <command> <config.json|-> [second-config.json] [--csv path]
commands: eval-kernel, charfn, verify, equiv, clark, boundary, extreme, angular
`-` reads the configuration from standard input; equiv takes a second configuration.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub command: Command,
    pub configs: Vec<String>,
    pub csv: Option<String>,
}

pub fn parse_args(args: &[String]) -> Result<Invocation, String> {
    let mut positional = Vec::new();
    let mut csv = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--csv" => csv = Some(it.next().ok_or("--csv needs a path")?.clone()),
            "-h" | "--help" => return Err(String::new()),
            s if s.starts_with("--") => return Err(format!("unknown option `{s}`")),
            _ => positional.push(a.clone()),
        }
    }
    if positional.is_empty() {
        return Err("missing command".into());
    }
    let command: Command = positional.remove(0).parse()?;
    let wanted = if command.needs_second_config() { 2 } else { 1 };
    if positional.len() != wanted {
        return Err(format!("{command} takes {wanted} configuration argument(s), got {}", positional.len()));
    }
    if positional.iter().filter(|p| *p == "-").count() > 1 {
        return Err("standard input can supply only one configuration".into());
    }
    if csv.is_some() && command.csv_table().is_none() {
        return Err(format!("{command} produces no table for --csv"));
    }
    Ok(Invocation {
        command,
        configs: positional,
        csv,
    })
}
