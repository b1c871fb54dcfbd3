//! Rule repositories and first-match rule selection.
//!
//! Repositories connect and disconnect at any time; a connected repository's
//! rules are parsed, checked, and projected once, at connect time. Matching
//! walks repositories in connection order and rules in file order, applying
//! the first rule whose applicability condition holds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::{RoleSet, RuleDef};
use crate::checker::check_rule;
use crate::diag::{has_errors, Diagnostic, Span};
use crate::endpoint::RoleCodeMap;
use crate::expr::{eval_in, EvalScope, Expr};
use crate::parser::parse_rules;
use crate::project::project_rule_with_id;
use crate::value::Value;

/// Identifies a rule as (repository id, position in its file).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RuleId {
    pub repository: String,
    pub index: usize,
}

impl std::fmt::Display for RuleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.repository, self.index)
    }
}

/// A rule with its code precompiled at connect time.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub def: RuleDef,
    pub code: RoleCodeMap,
}

#[derive(Debug, Clone)]
pub struct Repository {
    pub id: String,
    pub rules: Vec<CompiledRule>,
    /// Monotonic connection sequence number; reconnecting yields a new one.
    pub connected_at: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RuleRegistry {
    repositories: Vec<Repository>,
    next_seq: u64,
    /// Bumped on every connect/disconnect, for state fingerprints.
    pub version: u64,
}

impl RuleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn repositories(&self) -> &[Repository] {
        &self.repositories
    }

    pub fn is_connected(&self, id: &str) -> bool {
        self.repositories.iter().any(|r| r.id == id)
    }
}

/// Parse, check, project, and append a repository. Any failure rejects the
/// whole repository: a match never observes it half-connected.
pub fn connect_repository(
    registry: &mut RuleRegistry,
    rules_text: &str,
    id: &str,
) -> Result<(), Vec<Diagnostic>> {
    if registry.is_connected(id) {
        return Err(vec![Diagnostic::error(
            format!("repository `{id}` is already connected"),
            Span::whole_input(),
        )]);
    }
    let defs = parse_rules(rules_text)?;
    if defs.is_empty() {
        return Err(vec![Diagnostic::error(
            "repository contains no rules",
            Span::whole_input(),
        )]);
    }
    let mut diags = Vec::new();
    let mut rules = Vec::new();
    for def in defs {
        diags.extend(check_rule(&def, None));
        let rule_ref = format!("{id}#{}", def.source_order);
        let code = project_rule_with_id(&def, &rule_ref);
        rules.push(CompiledRule { def, code });
    }
    if has_errors(&diags) {
        return Err(diags);
    }
    let connected_at = registry.next_seq;
    registry.next_seq += 1;
    registry.version += 1;
    registry.repositories.push(Repository {
        id: id.to_string(),
        rules,
        connected_at,
    });
    Ok(())
}

/// Remove a repository if present; unknown ids are a no-op.
pub fn disconnect_repository(registry: &mut RuleRegistry, id: &str) {
    let before = registry.repositories.len();
    registry.repositories.retain(|r| r.id != id);
    if registry.repositories.len() != before {
        registry.version += 1;
    }
}

/// Evaluate a rule condition. `N.x` reads scope properties, `E.x` reads the
/// environment snapshot, bare names read the coordinator's locals. Any
/// evaluation error — an undefined key, a type mismatch, a non-boolean
/// result — makes the condition count as false rather than aborting.
pub fn eval_condition(
    cond: &Expr,
    props: &BTreeMap<String, Value>,
    env: &BTreeMap<String, Value>,
    locals: &BTreeMap<String, Value>,
) -> bool {
    let mut scope = EvalScope {
        locals,
        props: Some(props),
        env: Some(env),
        effects: None,
    };
    matches!(eval_in(cond, &mut scope), Ok(Value::Bool(true)))
}

/// The outcome of a successful match.
#[derive(Debug, Clone)]
pub struct MatchResult {
    pub rule_id: RuleId,
    pub role_code: RoleCodeMap,
    pub new_roles: RoleSet,
    /// Function name to service location, from the rule's includes.
    pub services: BTreeMap<String, String>,
    /// The rule's global body, for interpreters that inline rather than
    /// distribute projected code.
    pub body: crate::ast::ChorStmt,
}

/// First-match selection over point-in-time snapshots.
pub fn match_rule(
    registry: &RuleRegistry,
    props: &BTreeMap<String, Value>,
    locals: &BTreeMap<String, Value>,
    env: &BTreeMap<String, Value>,
) -> Option<MatchResult> {
    match_rule_scoped(registry, props, locals, None, &mut |_| env.clone())
}

/// First-match selection for a concrete scope. When `involved` is given, a
/// rule whose body uses roles outside `involved ∪ newRoles` is passed over
/// as inapplicable. `env_at_check` supplies the environment for each
/// individual condition check (checks happen in sequence and the environment
/// may move between them); the check counter is global and 1-based.
pub fn match_rule_scoped(
    registry: &RuleRegistry,
    props: &BTreeMap<String, Value>,
    locals: &BTreeMap<String, Value>,
    involved: Option<&RoleSet>,
    env_at_check: &mut dyn FnMut(usize) -> BTreeMap<String, Value>,
) -> Option<MatchResult> {
    let mut repos: Vec<&Repository> = registry.repositories.iter().collect();
    repos.sort_by_key(|r| r.connected_at);
    let mut check_no = 0;
    for repo in repos {
        for (index, rule) in repo.rules.iter().enumerate() {
            check_no += 1;
            let env = env_at_check(check_no);
            if !eval_condition(&rule.def.condition, props, &env, locals) {
                continue;
            }
            if let Some(involved) = involved {
                let mut body_roles = rule.def.body.roles();
                body_roles.extend(rule.def.new_roles.iter().cloned());
                let closes = body_roles
                    .iter()
                    .all(|r| involved.contains(r) || rule.def.new_roles.contains(r));
                if !closes {
                    continue;
                }
            }
            let services = rule
                .def
                .includes
                .iter()
                .flat_map(|inc| {
                    inc.functions
                        .iter()
                        .map(|f| (f.clone(), inc.location.clone()))
                })
                .collect();
            return Some(MatchResult {
                rule_id: RuleId {
                    repository: repo.id.clone(),
                    index,
                },
                role_code: rule.code.clone(),
                new_roles: rule.def.new_roles.clone(),
                services,
                body: rule.def.body.clone(),
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr_text;

    const LOW_POWER_RULE: &str = r#"
rule {
  include getTopItems from "socket://localhost:8001" with "soap"
  include processRecommendations from "socket://localhost:8003" with "soap"

  newRoles: R
  on { N.tag == "recommender" and E.recommender == "low-power" }
  do {
    getPopularProducts: R() -> P();
    items@P = getTopItems( 10, "popularity" );
    popularProducts: P( items ) -> R( items );
    recommendations@R = processRecommendations( items );
    recommendedProducts: R( recommendations ) -> W( recommendations );
    recommender@W = true
  }
}
"#;

    fn map(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn connect_parses_checks_and_projects() {
        let mut reg = RuleRegistry::new();
        connect_repository(&mut reg, LOW_POWER_RULE, "rec-low").unwrap();
        assert_eq!(reg.repositories().len(), 1);
        let repo = &reg.repositories()[0];
        assert_eq!(repo.rules.len(), 1);
        assert!(repo.rules[0].code.get("R").is_some());
    }

    #[test]
    fn connect_empty_file_is_rejected() {
        let mut reg = RuleRegistry::new();
        let err = connect_repository(&mut reg, "  // nothing here\n", "empty").unwrap_err();
        assert!(err[0].message.contains("repository contains no rules"));
    }

    #[test]
    fn reconnect_gets_a_fresh_sequence_number() {
        let mut reg = RuleRegistry::new();
        connect_repository(&mut reg, LOW_POWER_RULE, "rec-low").unwrap();
        let first = reg.repositories()[0].connected_at;
        assert!(connect_repository(&mut reg, LOW_POWER_RULE, "rec-low").is_err());
        disconnect_repository(&mut reg, "rec-low");
        assert!(reg.repositories().is_empty());
        connect_repository(&mut reg, LOW_POWER_RULE, "rec-low").unwrap();
        assert!(reg.repositories()[0].connected_at > first);
    }

    #[test]
    fn disconnect_unknown_id_is_a_noop() {
        let mut reg = RuleRegistry::new();
        disconnect_repository(&mut reg, "nope");
        assert!(reg.repositories().is_empty());
    }

    #[test]
    fn listing_condition_truth_table() {
        let cond =
            parse_expr_text(r#"N.tag == "recommender" and E.recommender == "low-power""#).unwrap();
        let props = map(&[("tag", Value::str("recommender"))]);
        let env = map(&[("recommender", Value::str("low-power"))]);
        assert!(eval_condition(&cond, &props, &env, &map(&[])));
        // Undefined environment key counts as false, not an error.
        assert!(!eval_condition(&cond, &props, &map(&[]), &map(&[])));
    }

    #[test]
    fn locals_participate_in_conditions() {
        let cond = parse_expr_text(r#"N.tag == "page-compiler" and recommender == true"#).unwrap();
        let props = map(&[("tag", Value::str("page-compiler"))]);
        let locals = map(&[("recommender", Value::Bool(true))]);
        assert!(eval_condition(&cond, &props, &map(&[]), &locals));
        assert!(!eval_condition(&cond, &props, &map(&[]), &map(&[])));
    }

    #[test]
    fn first_match_respects_connection_order() {
        let rule_a = r#"rule { on { E.mode == "x" } do { hit@W = 1 } }"#;
        let rule_b = r#"rule { on { E.mode == "x" } do { hit@W = 2 } }"#;
        let env = map(&[("mode", Value::str("x"))]);

        let mut reg = RuleRegistry::new();
        connect_repository(&mut reg, rule_a, "a").unwrap();
        connect_repository(&mut reg, rule_b, "b").unwrap();
        let m = match_rule(&reg, &map(&[]), &map(&[]), &env).unwrap();
        assert_eq!(m.rule_id.to_string(), "a#0");

        let mut reg = RuleRegistry::new();
        connect_repository(&mut reg, rule_b, "b").unwrap();
        connect_repository(&mut reg, rule_a, "a").unwrap();
        let m = match_rule(&reg, &map(&[]), &map(&[]), &env).unwrap();
        assert_eq!(m.rule_id.to_string(), "b#0");
    }

    #[test]
    fn empty_registry_matches_nothing() {
        let reg = RuleRegistry::new();
        assert!(match_rule(&reg, &map(&[]), &map(&[]), &map(&[])).is_none());
    }

    #[test]
    fn match_is_deterministic_for_fixed_inputs() {
        let mut reg = RuleRegistry::new();
        connect_repository(&mut reg, LOW_POWER_RULE, "rec-low").unwrap();
        let props = map(&[("tag", Value::str("recommender"))]);
        let env = map(&[("recommender", Value::str("low-power"))]);
        let first = match_rule(&reg, &props, &map(&[]), &env).map(|m| m.rule_id);
        for _ in 0..10 {
            assert_eq!(match_rule(&reg, &props, &map(&[]), &env).map(|m| m.rule_id), first);
        }
    }

    #[test]
    fn role_closure_filters_inapplicable_rules() {
        let mut reg = RuleRegistry::new();
        connect_repository(
            &mut reg,
            r#"rule { on { true } do { m: Z( 1 ) -> W( x ) } }"#,
            "closed-over",
        )
        .unwrap();
        let involved: RoleSet = ["W".to_string(), "U".to_string()].into();
        let m = match_rule_scoped(&reg, &map(&[]), &map(&[]), Some(&involved), &mut |_| {
            map(&[])
        });
        assert!(m.is_none(), "rule using role Z must not apply to a W/U scope");
    }

    #[test]
    fn env_flip_between_checks_can_starve_all_rules() {
        // Three rules cover every state of E.db, yet flipping the environment
        // between the first and second check leaves nothing applicable.
        let rules = r#"
rule { on { E.db == "replica" } do { mode@W = "replica" } }
rule { on { E.db == "primary" } do { mode@W = "primary" } }
rule { on { E.db == "offline" } do { mode@W = "offline" } }
"#;
        let mut reg = RuleRegistry::new();
        connect_repository(&mut reg, rules, "db").unwrap();
        let m = match_rule_scoped(&reg, &map(&[]), &map(&[]), None, &mut |check_no| {
            if check_no == 1 {
                map(&[("db", Value::str("primary"))])
            } else {
                map(&[("db", Value::str("replica"))])
            }
        });
        assert!(m.is_none());
    }
}
