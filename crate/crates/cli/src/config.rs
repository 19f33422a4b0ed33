//! Option resolution: defaults, then a `key=value` config file, then flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit status 2.
    Usage(String),
    /// Failure while running: exit status 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

pub fn runtime<E: fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// One option of a subcommand. `switch` options take no value on the command
/// line and read `true`/`false` in a config file.
#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
    pub switch: bool,
}

pub const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, help, switch: false }
}

pub const fn switch(name: &'static str, help: &'static str) -> Key {
    Key { name, default: Some("false"), help, switch: true }
}

pub fn build_command(name: &'static str, about: &'static str, keys: &[Key]) -> Command {
    let mut cmd = Command::new(name).about(about).arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("key=value file; flags given on the command line take precedence"),
    );
    for k in keys {
        let mut arg = Arg::new(k.name).long(k.name).help(k.help);
        if k.switch {
            arg = arg.action(ArgAction::SetTrue);
        } else {
            arg = arg.value_name("VALUE").allow_hyphen_values(true);
            if let Some(d) = k.default {
                arg = arg.help(format!("{} [default: {d}]", k.help));
            }
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Fully resolved options of one invocation.
#[derive(Clone, Debug, Default)]
pub struct Resolved {
    order: Vec<&'static str>,
    values: BTreeMap<&'static str, String>,
}

impl Resolved {
    pub fn resolve(keys: &[Key], matches: &ArgMatches) -> Result<Self, CliError> {
        let mut r = Resolved { order: keys.iter().map(|k| k.name).collect(), values: BTreeMap::new() };
        for k in keys {
            if let Some(d) = k.default {
                r.values.insert(k.name, d.to_string());
            }
        }
        if let Some(path) = matches.get_one::<String>("config") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
            for (name, value) in parse_config_text(&text)? {
                let k = keys
                    .iter()
                    .find(|k| k.name == name)
                    .ok_or_else(|| CliError::Usage(format!("unknown config key `{name}`")))?;
                r.values.insert(k.name, value);
            }
        }
        for k in keys {
            if matches.value_source(k.name) != Some(ValueSource::CommandLine) {
                continue;
            }
            let value = if k.switch {
                "true".to_string()
            } else {
                matches.get_one::<String>(k.name).cloned().unwrap_or_default()
            };
            r.values.insert(k.name, value);
        }
        Ok(r)
    }

    pub fn raw(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn parse<T: FromStr>(&self, name: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.raw(name)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("--{name} {v}: {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, name: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.parse(name)?.ok_or_else(|| CliError::Usage(format!("missing --{name}")))
    }

    pub fn flag(&self, name: &str) -> Result<bool, CliError> {
        Ok(self.parse::<bool>(name)?.unwrap_or(false))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, name: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.raw(name)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<T>().map_err(|e| CliError::Usage(format!("--{name} {v}: {e}"))))
                    .collect()
            })
            .transpose()
    }

    /// `key=value` lines in declaration order, unset keys left empty.
    pub fn to_text(&self, command: &str) -> String {
        let mut s = format!("command={command}\n");
        for name in &self.order {
            s.push_str(&format!("{name}={}\n", self.values.get(name).map(String::as_str).unwrap_or("")));
        }
        s
    }

    /// Writes the resolved options to `<out>/config.txt`.
    pub fn log(&self, command: &str, out: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(out).map_err(runtime)?;
        std::fs::write(out.join("config.txt"), self.to_text(command)).map_err(runtime)
    }
}
