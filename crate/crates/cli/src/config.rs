//! `--config` files: one `key = value` per line, `#` starts a comment.
//!
//! Keys are the long flag names of the chosen subcommand (underscores may
//! stand for hyphens). Boolean flags take `true` or `false`. Values from the
//! file are placed before the command-line arguments, so flags given on the
//! command line win.

use std::collections::HashMap;
use std::path::Path;

use clap::{ArgAction, CommandFactory, FromArgMatches};

use crate::error::CliError;
use crate::Cli;

const GLOBAL_WITH_VALUE: [&str; 3] = ["--config", "--format", "--output"];

fn command() -> clap::Command {
    Cli::command().mut_subcommands(|s| s.args_override_self(true))
}

fn parse(args: &[String]) -> Result<Cli, CliError> {
    let matches = command().try_get_matches_from(args)?;
    Ok(Cli::from_arg_matches(&matches)?)
}

pub fn parse_with_config(args: Vec<String>) -> Result<Cli, CliError> {
    let cli = parse(&args)?;
    let Some(path) = cli.config.as_deref() else {
        return Ok(cli);
    };
    let entries = read_entries(path)?;
    let pos = subcommand_position(&args)
        .ok_or_else(|| CliError::Usage("cannot locate the subcommand among the arguments".into()))?;
    let injected = to_flags(&args[pos], &entries)?;
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    parse(&merged)
}

fn read_entries(path: &Path) -> Result<Vec<(usize, String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        out.push((i + 1, k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Index of the subcommand token, skipping values of global options.
fn subcommand_position(args: &[String]) -> Option<usize> {
    let names: Vec<String> = command().get_subcommands().map(|s| s.get_name().to_string()).collect();
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_WITH_VALUE.contains(&a.as_str()) {
            i += 2;
            continue;
        }
        if names.contains(a) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn to_flags(sub: &str, entries: &[(usize, String, String)]) -> Result<Vec<String>, CliError> {
    let root = command();
    let sub = root.find_subcommand(sub).expect("subcommand was parsed");
    let mut known: HashMap<String, (String, bool)> = HashMap::new();
    for arg in sub.get_arguments().chain(root.get_arguments()) {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || long == "help" || long == "version" {
            continue;
        }
        let is_flag = matches!(arg.get_action(), ArgAction::SetTrue);
        for name in std::iter::once(long).chain(arg.get_all_aliases().into_iter().flatten()) {
            known.insert(name.to_string(), (long.to_string(), is_flag));
        }
    }
    let mut flags = Vec::new();
    for (line, key, value) in entries {
        let (long, is_flag) = known
            .get(key)
            .ok_or_else(|| CliError::Usage(format!("config line {line}: unknown key {key:?} for `{}`", sub.get_name())))?;
        if *is_flag {
            match value.as_str() {
                "true" => flags.push(format!("--{long}")),
                "false" => {}
                _ => return Err(CliError::Usage(format!("config line {line}: {key} takes true or false, got {value:?}"))),
            }
        } else {
            flags.push(format!("--{long}={value}"));
        }
    }
    Ok(flags)
}
