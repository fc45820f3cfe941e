//! Flat `key = value` config files whose keys are long flag names.
//!
//! File entries are spliced into the argument list right after the
//! subcommand names, ahead of the user's own flags; since every flag keeps
//! its last occurrence, command-line values override file values.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored. `key = true` becomes a bare switch, `key = false` is dropped.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected 'key = value'", origin.display(), n + 1);
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key.contains(char::is_whitespace) {
            bail!("{}:{}: invalid key '{key}'", origin.display(), n + 1);
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Number of leading subcommand tokens for the known command tree.
fn subcommand_depth(args: &[OsString]) -> usize {
    let words: Vec<Option<&str>> = args.iter().skip(1).map(|a| a.to_str()).collect();
    let mut i = 0;
    // skip global options preceding the subcommand
    while let Some(Some(w)) = words.get(i) {
        if *w == "--config" {
            i += 2;
        } else if w.starts_with("--config=") || *w == "-v" || *w == "--verbose" {
            i += 1;
        } else {
            break;
        }
    }
    match words.get(i).copied().flatten() {
        Some("generate") | Some("eval") => i + 2,
        Some("explain") => i + 1,
        _ => i,
    }
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_str()?;
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Returns `args` with the config file's entries inserted after the
/// subcommand names.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let extra = parse_config(&text, path)?;
    let at = (subcommand_depth(&args) + 1).min(args.len());
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_and_switches() {
        let got = parse_config("# c\nseed = 4\n\nstandardize = true\nquiet=false\n", Path::new("x")).unwrap();
        assert_eq!(got, os(&["--seed", "4", "--standardize"]));
        assert!(parse_config("nonsense\n", Path::new("x")).is_err());
    }

    #[test]
    fn inserts_after_subcommands() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "runs = 3\n").unwrap();
        let c = cfg.to_str().unwrap();
        let merged = merge_config(os(&["driftex", "--config", c, "eval", "checkerboard", "--runs", "5"])).unwrap();
        assert_eq!(
            merged,
            os(&["driftex", "--config", c, "eval", "checkerboard", "--runs", "3", "--runs", "5"])
        );
        let merged = merge_config(os(&["driftex", "--config", c, "explain"])).unwrap();
        assert_eq!(merged, os(&["driftex", "--config", c, "explain", "--runs", "3"]));
    }
}
