//! `key = value` config files and the resolved-config echo.
//!
//! Keys are long flag names without the leading dashes. File entries are
//! spliced in front of the command-line flags, so a flag given on the
//! command line overrides the file.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Blank lines and lines starting with `#` are ignored.
pub fn parse_config(text: &str, origin: &str) -> Result<Vec<ConfigEntry>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| CliError::Input {
            origin: origin.to_string(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(bad(format!("invalid key `{key}`")));
        }
        let key = key.replace('_', "-");
        if key == "config" {
            return Err(bad("config files cannot include other config files".to_string()));
        }
        entries.push(ConfigEntry {
            key,
            value: value.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> Result<Vec<ConfigEntry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Pulls `--config <path>` / `--config=<path>` out of `args`.
pub fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>, CliError> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            let value = args
                .get(i + 1)
                .cloned()
                .ok_or_else(|| CliError::Usage("--config needs a path".to_string()))?;
            args.drain(i..i + 2);
            found = Some(value);
        } else if let Some(value) = args[i].strip_prefix("--config=") {
            found = Some(value.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Inserts the file entries as flags right after the subcommand name
/// (`args[1]`), ahead of anything the user typed.
pub fn splice_entries(args: &mut Vec<String>, entries: &[ConfigEntry]) {
    let at = args.len().min(2);
    let flags: Vec<String> = entries
        .iter()
        .flat_map(|e| [format!("--{}", e.key), e.value.clone()])
        .collect();
    args.splice(at..at, flags);
}

/// Fully resolved settings of one invocation, in a fixed order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Resolved {
    pub command: String,
    pub entries: Vec<(String, String)>,
}

impl Resolved {
    pub fn new(command: &str) -> Self {
        Resolved {
            command: command.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    /// `# key = value` lines; also a valid config file once uncommented.
    pub fn comment_block(&self) -> String {
        let mut out = format!("# command = {}\n", self.command);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("command".to_string(), self.command.clone().into());
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.clone().into());
        }
        serde_json::Value::Object(map)
    }
}
