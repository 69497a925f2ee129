//! `key = value` config files, expanded into command-line flags.
//!
//! Keys are long flag names (`ef-construction` or `ef_construction`). Blank
//! lines and lines starting with `#` are ignored. A value of `true` turns into
//! a bare switch and `false` drops the key. Flags given on the command line
//! win over the file because they come later.

use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`", i + 1);
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    parse(&text).with_context(|| format!("in config file {}", path.display()))
}

/// Removes `--config PATH` / `--config=PATH` from `args`, returning the path.
pub fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a path");
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            found = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Flags for `pairs`, keeping only keys in `accepted`. Keys no subcommand
/// knows (`known` is false) are an error so typos do not pass silently.
pub fn to_flags(
    pairs: &[(String, String)],
    accepted: impl Fn(&str) -> bool,
    known: impl Fn(&str) -> bool,
) -> Result<Vec<String>> {
    let mut flags = Vec::new();
    for (key, value) in pairs {
        if !known(key) {
            bail!("unknown config key `{key}`");
        }
        if !accepted(key) {
            continue;
        }
        match value.as_str() {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            v => {
                flags.push(format!("--{key}"));
                flags.push(v.to_string());
            }
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_expands() {
        let pairs = parse("# comment\n\nbase = /data/b.fvecs\nef_construction=100\nverbose = true\nquiet=false\n").unwrap();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[1], ("ef-construction".into(), "100".into()));
        let flags = to_flags(&pairs, |k| k != "base", |_| true).unwrap();
        assert_eq!(flags, vec!["--ef-construction", "100", "--verbose"]);
        assert!(to_flags(&pairs, |_| true, |k| k != "quiet").is_err());
        assert!(parse("novalue\n").is_err());
    }

    #[test]
    fn strips_config_flag() {
        let mut args: Vec<String> = ["ann-bench", "--config", "x.conf", "bench", "--k", "1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(take_config_flag(&mut args).unwrap().as_deref(), Some("x.conf"));
        assert_eq!(args, vec!["ann-bench", "bench", "--k", "1"]);
        let mut args = vec!["a".to_string(), "--config=y".to_string()];
        assert_eq!(take_config_flag(&mut args).unwrap().as_deref(), Some("y"));
        assert_eq!(args, vec!["a"]);
    }
}
