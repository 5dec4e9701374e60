use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses a flat `key = value` file. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key=value, got {line:?}", i + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", i + 1);
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text)
}

fn flag_present(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&prefix))
}

/// Appends config entries as long flags unless the command line already sets
/// them, so explicit flags win. `true`/`false` values toggle switches.
pub fn merge_into_args(args: &[String], entries: &[(String, String)]) -> Vec<String> {
    let mut out = args.to_vec();
    for (key, value) in entries {
        if key == "config" || flag_present(args, key) {
            continue;
        }
        match value.as_str() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => out.push(format!("--{key}={value}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse_config("# c\n\nk = 3\npool_size=8\n").unwrap();
        assert_eq!(e, vec![("k".into(), "3".into()), ("pool-size".into(), "8".into())]);
        assert!(parse_config("oops").is_err());
    }

    #[test]
    fn flags_override_config() {
        let args: Vec<String> = ["lowrank", "fit", "--k=5"].iter().map(|s| s.to_string()).collect();
        let merged = merge_into_args(
            &args,
            &[("k".into(), "3".into()), ("seed".into(), "9".into()), ("quiet".into(), "false".into())],
        );
        assert_eq!(merged, vec!["lowrank", "fit", "--k=5", "--seed=9"]);
    }
}
