//! Flat `key = value` experiment files merged into the argument list.

use std::path::Path;

/// Parses `key = value` lines; `#` starts a comment. Keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", i + 1));
        };
        let key = k.trim().replace('_', "-").to_ascii_lowercase();
        let value = v.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(format!("line {}: empty key or value", i + 1));
        }
        if out.iter().any(|(k, _)| *k == key) {
            return Err(format!("line {}: duplicate key {key}", i + 1));
        }
        out.push((key, value));
    }
    Ok(out)
}

/// Subcommand names, kept in step with the parser.
pub const COMMANDS: &[&str] = &[
    "sample",
    "crossing-prob",
    "noise-corr",
    "cond-var",
    "threshold",
    "one-arm",
    "large-cell",
    "revealment",
    "srs",
    "exact-suite",
    "validate",
    "plot",
];

fn has_flag(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&prefix))
}

/// Removes `--config FILE` from `args` and appends every key of the file
/// not already present. A `command` key supplies the subcommand when the
/// command line has none.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a file".into());
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("config {path}: {e}"))?;
    let entries = parse(&text).map_err(|e| format!("config {path}: {e}"))?;
    let has_command = args.iter().skip(1).any(|a| COMMANDS.contains(&a.as_str()));
    for (key, value) in entries {
        if key == "command" {
            if !has_command {
                args.insert(1, value);
            }
            continue;
        }
        if key == "config" {
            return Err(format!("config {path}: nested config files are not supported"));
        }
        if !has_flag(&args, &key) {
            args.push(format!("--{key}"));
            args.push(value);
        }
    }
    Ok(args)
}
