//! `--config FILE`: a JSON object whose keys are long flag names.
//!
//! Keys may be spelled with `-` or `_`. A key whose value is an object and
//! whose name is a subcommand applies only to that subcommand, so one file
//! can configure several. Values become extra command-line arguments
//! appended after those given, skipped when the flag is already present:
//! strings and numbers as `--key value`, arrays as one `--key value` per
//! element, `true` as a bare `--key`, `false` and `null` as nothing.

use std::ffi::OsString;

use serde_json::Value;

use super::Failure;

const SUBCOMMANDS: [&str; 5] = ["diff", "heatmap", "sample", "format", "eval"];

fn find_config_path(args: &[OsString]) -> Result<Option<OsString>, Failure> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let Some(s) = a.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            return match it.next() {
                Some(p) => Ok(Some(p.clone())),
                None => Err(Failure::Usage("--config needs a file path".into())),
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(p.into()));
        }
    }
    Ok(None)
}

fn subcommand(args: &[OsString]) -> Option<&'static str> {
    args.iter().skip(1).find_map(|a| SUBCOMMANDS.iter().copied().find(|s| a.to_str() == Some(s)))
}

fn flag_present(args: &[OsString], flag: &str) -> bool {
    let eq = format!("{flag}=");
    args.iter().filter_map(|a| a.to_str()).any(|a| a == flag || a.starts_with(&eq))
}

fn scalar(key: &str, v: &Value) -> Result<String, Failure> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Failure::Usage(format!("config key `{key}` must be a string, number, boolean or array"))),
    }
}

/// Returns `args` extended with the flags the config file supplies.
pub(super) fn apply_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(path) = find_config_path(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let root: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("config {} is not valid JSON: {e}", path.to_string_lossy())))?;
    let Value::Object(root) = root else {
        return Err(Failure::Usage("config must be a JSON object".into()));
    };

    let sub = subcommand(&args);
    let mut entries: Vec<(String, Value)> = Vec::new();
    for (k, v) in root {
        match (&v, SUBCOMMANDS.contains(&k.as_str())) {
            (Value::Object(inner), true) => {
                if sub == Some(k.as_str()) {
                    entries.extend(inner.iter().map(|(k, v)| (k.clone(), v.clone())));
                }
            }
            _ => entries.push((k, v)),
        }
    }

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(Failure::Usage("config files cannot name another config".into()));
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if flag_present(&args, &flag) {
            continue;
        }
        match &value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => extra.push(flag.into()),
            Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone().into());
                    extra.push(scalar(&key, item)?.into());
                }
            }
            v => {
                extra.push(flag.into());
                extra.push(scalar(&key, v)?.into());
            }
        }
    }
    args.extend(extra);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    fn strs(v: &[OsString]) -> Vec<String> {
        v.iter().map(|s| s.to_string_lossy().into_owned()).collect()
    }

    #[test]
    fn flags_win_and_values_expand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(
            &cfg,
            r#"{"seed": 9, "n": 3, "validation": true, "holdout": ["xWant", "oWant"], "out_dir": "s", "eval": {"metrics": "bleu1"}}"#,
        )
        .unwrap();
        let args = os(&["ckpt-drift", "--config", cfg.to_str().unwrap(), "sample", "--seed", "7"]);
        let out = strs(&apply_config(args).unwrap());
        assert_eq!(out[4..6], ["--seed", "7"]);
        assert_eq!(
            out[6..],
            ["--holdout", "xWant", "--holdout", "oWant", "--n", "3", "--out-dir", "s", "--validation"]
        );
        assert!(!out.contains(&"--metrics".to_owned()));
    }

    #[test]
    fn no_config_is_identity() {
        let args = os(&["ckpt-drift", "diff", "--out", "x"]);
        assert_eq!(apply_config(args.clone()).unwrap(), args);
    }

    #[test]
    fn bad_configs_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, "[1,2]").unwrap();
        let args = os(&["ckpt-drift", "--config", cfg.to_str().unwrap(), "diff"]);
        assert!(matches!(apply_config(args), Err(Failure::Usage(_))));
        let missing = os(&["ckpt-drift", "--config", "/nonexistent/c.json", "diff"]);
        assert!(matches!(apply_config(missing), Err(Failure::Usage(_))));
        assert!(matches!(apply_config(os(&["ckpt-drift", "--config"])), Err(Failure::Usage(_))));
    }
}
