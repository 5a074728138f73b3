//! Flat key/value configuration files with sections.
//!
//! Format: `[section]` headers, `key = value` lines, `#` comments.
//! Values are scalars or comma-separated lists. Keys are read from the
//! section named after the experiment being run and from a shared
//! `[common]` section; other sections are ignored, so one file can
//! configure all experiments. Command-line flags override file values.

use std::path::Path;

use watchcode_core::harness::AttackerMode;
use watchcode_core::ExperimentConfig;

pub fn apply_file(cfg: &mut ExperimentConfig, path: &Path) -> Result<(), String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    apply_text(cfg, &text, path.display().to_string().as_str())
}

pub fn apply_text(cfg: &mut ExperimentConfig, text: &str, origin: &str) -> Result<(), String> {
    let mut section = String::new();
    let wanted = cfg.id.name();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("{origin}:{}: expected 'key = value'", lineno + 1));
        };
        if section != wanted && section != "common" {
            continue;
        }
        apply_key(cfg, key.trim(), value.trim())
            .map_err(|e| format!("{origin}:{}: {e}", lineno + 1))?;
    }
    Ok(())
}

fn apply_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    match key {
        "n_list" => cfg.n_list = parse_list(value, key)?,
        "beta_list" => cfg.beta_list = parse_list(value, key)?,
        "p_obs_list" => cfg.p_obs_list = parse_list(value, key)?,
        "alpha_list" => cfg.alpha_list = parse_list(value, key)?,
        "m_list" => cfg.m_list = parse_list(value, key)?,
        "m_check_list" => cfg.m_check_list = parse_list(value, key)?,
        "l_sym" => cfg.l_sym = parse_scalar(value, key)?,
        "matrices_per_m" => cfg.matrices_per_m = parse_scalar(value, key)?,
        "lanes" => cfg.lanes = parse_scalar(value, key)?,
        "trials" => cfg.trials = parse_scalar(value, key)?,
        "delivered_target" => cfg.delivered_target = parse_scalar(value, key)?,
        "seed" => cfg.base_seed = parse_scalar(value, key)?,
        "fixed_k" => cfg.fixed_k = Some(parse_scalar(value, key)?),
        "attacker" => {
            cfg.attacker = match value {
                "min-weight" => AttackerMode::MinWeightForgery,
                other => match other.strip_prefix("raw:") {
                    Some(c) => AttackerMode::RawCorruption(parse_scalar(c, key)?),
                    None => {
                        return Err(format!(
                            "attacker must be 'min-weight' or 'raw:<positions>', got '{other}'"
                        ))
                    }
                },
            }
        }
        other => return Err(format!("unknown key '{other}'")),
    }
    Ok(())
}

fn parse_scalar<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse '{value}' for {key}"))
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|item| parse_scalar(item.trim(), key))
        .collect()
}

/// Echo of the fully resolved configuration for the run manifest.
pub fn resolved_entries(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let list = |values: &[f64]| {
        values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    };
    let mut out = vec![
        ("experiment".into(), cfg.id.name().to_string()),
        ("seed".into(), cfg.base_seed.to_string()),
        ("lanes".into(), cfg.lanes.to_string()),
        ("attacker".into(), match cfg.attacker {
            AttackerMode::MinWeightForgery => "min-weight".to_string(),
            AttackerMode::RawCorruption(c) => format!("raw:{c}"),
        }),
    ];
    match cfg.id {
        watchcode_core::ExperimentId::SingleFlow => {
            out.push(("n_list".into(), join(&cfg.n_list)));
            out.push(("beta_list".into(), list(&cfg.beta_list)));
            out.push(("p_obs_list".into(), list(&cfg.p_obs_list)));
            out.push(("trials".into(), cfg.trials.to_string()));
            if let Some(k) = cfg.fixed_k {
                out.push(("fixed_k".into(), k.to_string()));
            }
        }
        watchcode_core::ExperimentId::TwoFlows => {
            out.push(("n_list".into(), join(&cfg.n_list)));
            out.push(("beta_list".into(), list(&cfg.beta_list)));
            out.push(("alpha_list".into(), list(&cfg.alpha_list)));
            out.push(("delivered_target".into(), cfg.delivered_target.to_string()));
        }
        watchcode_core::ExperimentId::Hamming => {
            out.push(("m_list".into(), join(&cfg.m_list)));
            out.push(("alpha_list".into(), list(&cfg.alpha_list)));
            out.push(("trials".into(), cfg.trials.to_string()));
        }
        watchcode_core::ExperimentId::LinearLimitation => {
            out.push(("l_sym".into(), cfg.l_sym.to_string()));
            out.push(("m_check_list".into(), join(&cfg.m_check_list)));
            out.push(("matrices_per_m".into(), cfg.matrices_per_m.to_string()));
        }
    }
    out
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use watchcode_core::ExperimentId;

    #[test]
    fn parses_sections_and_lists() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::SingleFlow);
        let text = "
# comment
[common]
seed = 7
[single-flow]
n_list = 15, 63
beta_list = 1.5
trials = 123
[two-flows]
delivered_target = 5
";
        apply_text(&mut cfg, text, "test").unwrap();
        assert_eq!(cfg.base_seed, 7);
        assert_eq!(cfg.n_list, vec![15, 63]);
        assert_eq!(cfg.beta_list, vec![1.5]);
        assert_eq!(cfg.trials, 123);
        // Key from a different experiment's section is ignored.
        assert_eq!(cfg.delivered_target, 100_000);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::SingleFlow);
        assert!(apply_text(&mut cfg, "[single-flow]\nbogus = 1\n", "t").is_err());
        assert!(apply_text(&mut cfg, "[single-flow]\ntrials = abc\n", "t").is_err());
        assert!(apply_text(&mut cfg, "[single-flow]\nnot a kv line\n", "t").is_err());
    }

    #[test]
    fn attacker_modes_parse() {
        let mut cfg = ExperimentConfig::default_for(ExperimentId::SingleFlow);
        apply_text(&mut cfg, "[single-flow]\nattacker = raw:2\n", "t").unwrap();
        assert_eq!(cfg.attacker, AttackerMode::RawCorruption(2));
        apply_text(&mut cfg, "[single-flow]\nattacker = min-weight\n", "t").unwrap();
        assert_eq!(cfg.attacker, AttackerMode::MinWeightForgery);
        assert!(apply_text(&mut cfg, "[single-flow]\nattacker = nope\n", "t").is_err());
    }
}
