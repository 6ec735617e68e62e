//! `.tlr` rule files.
//!
//! ```text
//! tlr-rules 1
//! registry 5f2c...
//! provenance train seed=3 ckpt=model.json
//! connective and
//! theta Comfortable 1.23 1.13 0.98 0.98
//! formula ((!G SafeTTC | G Comfortable) & G InDrivable)
//! pair G SafeTTC -> G Comfortable
//! pair T -> G InDrivable
//! ```
//!
//! The `formula` line is redundant with the pairs and is checked on load.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use tlr_core::extract::{Connective, Pair, RuleSet};
use tlr_core::formula::{format_formula, parse_formula};
use tlr_core::predicates::{register_builtin_predicates, PredicateRegistry};
use tlr_core::sim::{comfort_teacher, full_rules, three_rule_teacher};

use crate::error::{CliError, CliResult};

pub const RULES_MAGIC: &str = "tlr-rules";
pub const RULES_VERSION: u32 = 1;

/// SHA-256 over the registry's ids, kinds and parameter specs.
pub fn registry_hash(reg: &PredicateRegistry) -> String {
    let mut h = Sha256::new();
    for p in reg.iter() {
        h.update(format!("{} {}", p.id, p.kind.as_str()).as_bytes());
        for s in &p.params {
            h.update(format!(" {}:{}:{}:{}:{}", s.name, s.unit, s.lower, s.upper, s.default).as_bytes());
        }
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn render_rules_file(rs: &RuleSet, reg: &PredicateRegistry) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{RULES_MAGIC} {RULES_VERSION}");
    let _ = writeln!(s, "registry {}", registry_hash(reg));
    let _ = writeln!(s, "provenance {}", rs.provenance.replace('\n', " "));
    let _ = writeln!(s, "connective {}", connective_name(rs.connective));
    for (id, theta) in &rs.theta {
        let _ = write!(s, "theta {id}");
        for v in theta {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "formula {}", format_formula(&rs.formula()));
    for p in &rs.pairs {
        let _ = writeln!(s, "pair {p}");
    }
    s
}

fn connective_name(c: Connective) -> &'static str {
    match c {
        Connective::And => "and",
        Connective::Or => "or",
    }
}

/// Parses a rule file against `reg`, rejecting files written for a different
/// registry.
pub fn parse_rules_file(text: &str, reg: &PredicateRegistry) -> CliResult<RuleSet> {
    let err = |n: usize, m: String| CliError::input(format!("line {n}: {m}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == format!("{RULES_MAGIC} {RULES_VERSION}") => {}
        Some((n, l)) => return Err(err(n, format!("expected header `{RULES_MAGIC} {RULES_VERSION}`, found `{l}`"))),
        None => return Err(CliError::input("empty rule file")),
    }
    let known = |id: &str| reg.contains(id);
    let mut rs = RuleSet::default();
    let mut formula = None;
    let mut registry = None;
    for (n, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let rest = rest.trim();
        match key {
            "registry" => registry = Some((n, rest.to_string())),
            "provenance" => rs.provenance = rest.to_string(),
            "connective" => {
                rs.connective = match rest {
                    "and" => Connective::And,
                    "or" => Connective::Or,
                    other => return Err(err(n, format!("unknown connective `{other}`"))),
                }
            }
            "theta" => {
                let mut parts = rest.split_whitespace();
                let id = parts.next().ok_or_else(|| err(n, "theta line without predicate id".into()))?;
                let desc = reg.get(id).ok_or_else(|| err(n, format!("unknown predicate `{id}`")))?;
                let values = parts
                    .map(|v| v.parse::<f64>().map_err(|e| err(n, format!("theta value `{v}`: {e}"))))
                    .collect::<CliResult<Vec<_>>>()?;
                desc.check_theta(&values).map_err(|e| err(n, e.to_string()))?;
                rs.theta.push((id.to_string(), values));
            }
            "formula" => formula = Some((n, parse_formula(rest, reg).map_err(|e| err(n, e.to_string()))?)),
            "pair" => rs.pairs.push(Pair::parse(rest, &known).map_err(|e| err(n, e.to_string()))?),
            other => return Err(err(n, format!("unknown key `{other}`"))),
        }
    }
    match registry {
        Some((n, h)) if h != registry_hash(reg) => {
            return Err(err(n, "rule file was written for a different predicate registry".into()))
        }
        Some(_) => {}
        None => return Err(CliError::input("rule file has no registry line")),
    }
    if let Some((n, f)) = formula {
        if f != rs.formula() {
            return Err(err(n, "formula line disagrees with the pairs".into()));
        }
    }
    Ok(rs)
}

pub fn write_rules_file(path: &Path, rs: &RuleSet, reg: &PredicateRegistry) -> CliResult<()> {
    std::fs::write(path, render_rules_file(rs, reg)).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

/// Loads a rule file, or a builtin rule set named `builtin:comfort`,
/// `builtin:three` or `builtin:full`.
pub fn load_rules(spec: &str) -> CliResult<RuleSet> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return match name {
            "comfort" => Ok(comfort_teacher()),
            "three" => Ok(three_rule_teacher()),
            "full" => Ok(full_rules()),
            _ => Err(CliError::input(format!("unknown builtin rule set `{name}`"))),
        };
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::input(format!("{spec}: {e}")))?;
    parse_rules_file(&text, &register_builtin_predicates()).map_err(|e| e.context(spec))
}

/// The builtin registry with the rule set's parameters applied.
pub fn rules_registry(rs: &RuleSet) -> CliResult<PredicateRegistry> {
    let mut reg = register_builtin_predicates();
    rs.apply_theta(&mut reg)?;
    Ok(reg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teacher_round_trips() {
        let reg = register_builtin_predicates();
        for rs in [comfort_teacher(), three_rule_teacher(), full_rules()] {
            let text = render_rules_file(&rs, &reg);
            let back = parse_rules_file(&text, &reg).unwrap();
            assert_eq!(back, rs);
            assert_eq!(render_rules_file(&back, &reg), text);
        }
    }

    #[test]
    fn header_layout() {
        let reg = register_builtin_predicates();
        let text = render_rules_file(&three_rule_teacher(), &reg);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tlr-rules 1");
        assert!(lines[1].starts_with("registry ") && lines[1].len() == "registry ".len() + 64);
        assert!(text.contains("theta Comfortable 1.23 1.13 0.98 0.98\n"));
        assert!(text.contains("pair !SpeedLimitCompliant -> F OvertakingContext\n"));
    }

    #[test]
    fn registry_mismatch_is_rejected() {
        let reg = register_builtin_predicates();
        let text = render_rules_file(&comfort_teacher(), &reg).replace("registry ", "registry 00");
        let e = parse_rules_file(&text, &reg).unwrap_err();
        assert!(e.to_string().contains("different predicate registry"), "{e}");
    }

    #[test]
    fn bad_pair_reports_line() {
        let reg = register_builtin_predicates();
        let text = format!("{}pair T -> G Nope\n", render_rules_file(&RuleSet::default(), &reg));
        let e = parse_rules_file(&text, &reg).unwrap_err();
        assert_eq!(e.code, 2);
        assert!(e.to_string().starts_with("line 6:"), "{e}");
    }

    #[test]
    fn out_of_bounds_theta_is_rejected() {
        let reg = register_builtin_predicates();
        let text = render_rules_file(&comfort_teacher(), &reg).replace("theta Comfortable 1.23", "theta Comfortable -7");
        assert!(parse_rules_file(&text, &reg).is_err());
    }

    #[test]
    fn tampered_formula_is_rejected() {
        let reg = register_builtin_predicates();
        let text = render_rules_file(&comfort_teacher(), &reg).replace("formula G Comfortable", "formula F Comfortable");
        assert!(parse_rules_file(&text, &reg).is_err());
    }
}
