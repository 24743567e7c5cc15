//! TOML config files. Each key is a long flag of the chosen subcommand
//! (`_` and `-` are interchangeable); `command` names the subcommand when
//! the command line omits it. Config values are spliced in front of the
//! explicit flags, so the command line wins.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::error::{CliError, Result};

const SUBCOMMANDS: [&str; 6] = ["list", "solve", "study", "stability", "check-tableau", "repro"];

/// The config path and `argv` with the `--config` tokens removed.
fn split_config(argv: Vec<OsString>) -> (Option<PathBuf>, Vec<OsString>) {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    rest.extend(it.next());
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--" {
            rest.push(a);
            rest.extend(it);
            break;
        }
        if s == "--config" {
            path = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    (path, rest)
}

fn one_line(s: &str) -> String {
    s.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}

fn scalar(path: &Path, key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(CliError::Config { path: path.into(), message: format!("unsupported value for `{key}`") }),
    }
}

/// Flag tokens and the optional `command` key of a parsed config table.
fn tokens(path: &Path, table: &toml::Table) -> Result<(Option<String>, Vec<OsString>)> {
    let mut command = None;
    let mut out = Vec::new();
    for (key, v) in table {
        let flag = key.replace('_', "-");
        if flag == "command" {
            command = Some(scalar(path, key, v)?);
            continue;
        }
        if flag == "config" {
            return Err(CliError::Config { path: path.into(), message: "nested `config` is not supported".into() });
        }
        match v {
            Value::Boolean(false) => {}
            Value::Boolean(true) => out.push(format!("--{flag}").into()),
            Value::Array(items) => {
                let parts = items.iter().map(|x| scalar(path, key, x)).collect::<Result<Vec<_>>>()?;
                out.push(format!("--{flag}={}", parts.join(",")).into());
            }
            v => out.push(format!("--{flag}={}", scalar(path, key, v)?).into()),
        }
    }
    Ok((command, out))
}

/// `argv` with the referenced config file (if any) merged in.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let (path, argv) = split_config(argv);
    let Some(path) = path else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config { path: path.clone(), message: one_line(&e.to_string()) })?;
    let table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Config { path: path.clone(), message: one_line(e.message()) })?;
    let (command, flags) = tokens(&path, &table)?;

    let sub = argv.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let mut out: Vec<OsString>;
    match sub {
        Some(k) => {
            if let Some(c) = &command {
                if *c != argv[k].to_string_lossy() {
                    // the command line picks the subcommand; config keys still apply
                    eprintln!("warning: config command `{c}` overridden by `{}`", argv[k].to_string_lossy());
                }
            }
            out = argv[..=k].to_vec();
            out.extend(flags);
            out.extend_from_slice(&argv[k + 1..]);
        }
        None => {
            let c = command.ok_or_else(|| CliError::Config {
                path: path.clone(),
                message: "no subcommand on the command line and no `command` key".into(),
            })?;
            out = argv[..1].to_vec();
            out.push(c.into());
            out.extend(flags);
            out.extend_from_slice(&argv[1..]);
        }
    }
    Ok(out)
}
