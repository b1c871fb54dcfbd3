//! Well-formedness checks that make projection safe: sequence connectedness,
//! controller ownership of conditions, declared functions, and role closure
//! of adaptation rules.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{ChorStmt, Program, Role, RoleSet, RuleDef};
use crate::diag::{Diagnostic, Span};
use crate::endpoint::ScopeSignature;
use crate::expr::Expr;

/// The role-sets of the first and last actions a statement can perform.
/// Two statements composed in sequence must share a participant between
/// every last action of the left and every first action of the right.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BoundaryActions {
    pub first: BTreeSet<RoleSet>,
    pub last: BTreeSet<RoleSet>,
}

pub fn boundary_actions(stmt: &ChorStmt) -> BoundaryActions {
    match stmt {
        ChorStmt::Skip => BoundaryActions::default(),
        ChorStmt::Interaction {
            sender, receiver, ..
        } => {
            let set: RoleSet = [sender.clone(), receiver.clone()].into();
            BoundaryActions {
                first: [set.clone()].into(),
                last: [set].into(),
            }
        }
        ChorStmt::Assign { owner, .. } => {
            let set: RoleSet = [owner.clone()].into();
            BoundaryActions {
                first: [set.clone()].into(),
                last: [set].into(),
            }
        }
        ChorStmt::Seq(items) => {
            // First of the head, last of the tail: skip-like children with no
            // actions fall through to the next child with some.
            let mut first = BTreeSet::new();
            for item in items {
                first = boundary_actions(item).first;
                if !first.is_empty() {
                    break;
                }
            }
            let mut last = BTreeSet::new();
            for item in items.iter().rev() {
                last = boundary_actions(item).last;
                if !last.is_empty() {
                    break;
                }
            }
            BoundaryActions { first, last }
        }
        ChorStmt::Par(items) => {
            let mut out = BoundaryActions::default();
            for item in items {
                let b = boundary_actions(item);
                out.first.extend(b.first);
                out.last.extend(b.last);
            }
            out
        }
        ChorStmt::If {
            controller,
            then_branch,
            else_branch,
            ..
        } => {
            // The condition is evaluated at the controller before anything
            // else happens, so it is the single first action. Last actions
            // are the branch lasts, with the controller joined in since every
            // branch participant acts under the controller's decision.
            let mut last: BTreeSet<RoleSet> = BTreeSet::new();
            let mut add_branch = |branch: Option<&ChorStmt>| {
                let branch_last = branch
                    .map(|b| boundary_actions(b).last)
                    .unwrap_or_default();
                if branch_last.is_empty() {
                    last.insert([controller.clone()].into());
                } else {
                    for mut set in branch_last {
                        set.insert(controller.clone());
                        last.insert(set);
                    }
                }
            };
            add_branch(Some(then_branch));
            add_branch(else_branch.as_deref());
            BoundaryActions {
                first: [[controller.clone()].into()].into(),
                last,
            }
        }
        ChorStmt::While {
            controller, body, ..
        } => {
            let mut last: BTreeSet<RoleSet> = [[controller.clone()].into()].into();
            for mut set in boundary_actions(body).last {
                set.insert(controller.clone());
                last.insert(set);
            }
            BoundaryActions {
                first: [[controller.clone()].into()].into(),
                last,
            }
        }
        ChorStmt::Scope {
            controller,
            body,
            extra_roles,
            ..
        } => {
            // A scope acts as one unit involving everyone who may take part.
            let mut set = body.roles();
            set.insert(controller.clone());
            set.extend(extra_roles.iter().cloned());
            BoundaryActions {
                first: [set.clone()].into(),
                last: [set].into(),
            }
        }
    }
}

/// Full program check. An empty result means the program is well-formed;
/// warnings do not block projection.
pub fn check_program(program: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let declared: BTreeSet<&str> = program.declared_functions();

    check_stmt_structure(&program.body, &declared, &mut diags);

    // (f) the starter must take part in the choreography it starts.
    let body_roles = program.body.roles();
    if !body_roles.is_empty() && !body_roles.contains(&program.starter) {
        diags.push(Diagnostic::error(
            format!("starter `{}` is not a participant", program.starter),
            Span::whole_input(),
        ));
    }

    // (b) every variable in an if/while condition must be assigned or
    // received at the controller somewhere before, in program order.
    let mut assigned: BTreeMap<Role, BTreeSet<String>> = BTreeMap::new();
    check_condition_ownership(&program.body, &mut assigned, &mut diags);

    diags
}

/// Checks shared between program bodies and rule bodies: connectedness,
/// self-interactions, declared calls, stray env/prop references, and
/// parallel write races.
fn check_stmt_structure(stmt: &ChorStmt, declared: &BTreeSet<&str>, diags: &mut Vec<Diagnostic>) {
    for (_, node) in stmt.walk() {
        match node {
            ChorStmt::Seq(items) => {
                for pair in items.windows(2) {
                    let left = boundary_actions(&pair[0]);
                    let right = boundary_actions(&pair[1]);
                    for last in &left.last {
                        for first in &right.first {
                            if last.is_disjoint(first) {
                                diags.push(Diagnostic::error(
                                    format!(
                                        "statements in sequence share no participant: \
                                         {{{}}} then {{{}}}",
                                        join(last),
                                        join(first)
                                    ),
                                    Span::whole_input(),
                                ));
                            }
                        }
                    }
                }
            }
            ChorStmt::Interaction {
                label,
                sender,
                receiver,
                ..
            } => {
                if sender == receiver {
                    diags.push(Diagnostic::error(
                        format!("interaction `{label}` has the same sender and receiver `{sender}`"),
                        Span::whole_input(),
                    ));
                }
            }
            _ => {}
        }

        for expr in node_exprs(node) {
            for call in expr.calls() {
                if call != crate::expr::INPUT_BUILTIN && !declared.contains(call) {
                    diags.push(Diagnostic::error(
                        format!("call to function `{call}` not declared by any include"),
                        Span::whole_input(),
                    ));
                }
            }
            if expr.has_env_or_prop_refs() {
                diags.push(Diagnostic::error(
                    "E.* and N.* references are only allowed in rule conditions",
                    Span::whole_input(),
                ));
            }
        }

        // (g) racy writes across parallel branches are allowed but flagged.
        if let ChorStmt::Par(items) = node {
            let writes: Vec<BTreeSet<(Role, String)>> =
                items.iter().map(write_set).collect();
            for i in 0..writes.len() {
                for j in i + 1..writes.len() {
                    for (role, var) in writes[i].intersection(&writes[j]) {
                        diags.push(Diagnostic::warning(
                            format!(
                                "parallel branches both write `{var}` at role `{role}`; \
                                 the result depends on scheduling"
                            ),
                            Span::whole_input(),
                        ));
                    }
                }
            }
        }
    }
}

fn join(set: &RoleSet) -> String {
    set.iter().cloned().collect::<Vec<_>>().join(", ")
}

fn node_exprs(stmt: &ChorStmt) -> Vec<&Expr> {
    match stmt {
        ChorStmt::Interaction { expr, .. } => expr.iter().collect(),
        ChorStmt::Assign { expr, .. } => vec![expr],
        ChorStmt::If { cond, .. } | ChorStmt::While { cond, .. } => vec![cond],
        _ => Vec::new(),
    }
}

/// Variables written by a statement, as (role, var) pairs.
fn write_set(stmt: &ChorStmt) -> BTreeSet<(Role, String)> {
    let mut out = BTreeSet::new();
    for (_, node) in stmt.walk() {
        match node {
            ChorStmt::Assign { var, owner, .. } => {
                out.insert((owner.clone(), var.clone()));
            }
            ChorStmt::Interaction {
                receiver,
                target: Some(target),
                ..
            } => {
                out.insert((receiver.clone(), target.clone()));
            }
            _ => {}
        }
    }
    out
}

fn check_condition_ownership(
    stmt: &ChorStmt,
    assigned: &mut BTreeMap<Role, BTreeSet<String>>,
    diags: &mut Vec<Diagnostic>,
) {
    match stmt {
        ChorStmt::Assign { var, owner, .. } => {
            assigned.entry(owner.clone()).or_default().insert(var.clone());
        }
        ChorStmt::Interaction {
            receiver,
            target: Some(target),
            ..
        } => {
            assigned
                .entry(receiver.clone())
                .or_default()
                .insert(target.clone());
        }
        ChorStmt::Interaction { .. } => {}
        ChorStmt::Seq(items) | ChorStmt::Par(items) => {
            for item in items {
                check_condition_ownership(item, assigned, diags);
            }
        }
        ChorStmt::If {
            cond,
            controller,
            then_branch,
            else_branch,
        } => {
            require_owned(cond, controller, assigned, diags);
            check_condition_ownership(then_branch, assigned, diags);
            if let Some(e) = else_branch {
                check_condition_ownership(e, assigned, diags);
            }
        }
        ChorStmt::While {
            cond,
            controller,
            body,
        } => {
            require_owned(cond, controller, assigned, diags);
            check_condition_ownership(body, assigned, diags);
        }
        ChorStmt::Scope { body, .. } => check_condition_ownership(body, assigned, diags),
        ChorStmt::Skip => {}
    }
}

fn require_owned(
    cond: &Expr,
    controller: &str,
    assigned: &BTreeMap<Role, BTreeSet<String>>,
    diags: &mut Vec<Diagnostic>,
) {
    let known = assigned.get(controller);
    for var in cond.variables() {
        if !known.is_some_and(|vars| vars.contains(var)) {
            diags.push(Diagnostic::error(
                format!(
                    "condition reads `{var}`, which is not visibly assigned at \
                     controller `{controller}` before this point"
                ),
                Span::whole_input(),
            ));
        }
    }
}

/// Rule checks. Without a scope signature only intra-rule checks run; with
/// one, the rule's roles must close over the scope's participants and its
/// own new roles.
pub fn check_rule(rule: &RuleDef, scope: Option<&ScopeSignature>) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let declared = rule.declared_functions();
    check_stmt_structure(&rule.body, &declared, &mut diags);

    if let Some(sig) = scope {
        let allowed: RoleSet = sig
            .involved
            .iter()
            .cloned()
            .chain(rule.new_roles.iter().cloned())
            .collect();
        for role in rule.body.roles() {
            if !allowed.contains(&role) {
                diags.push(Diagnostic::error(
                    format!(
                        "rule body uses role `{role}`, which is neither involved in the \
                         scope nor listed in newRoles"
                    ),
                    Span::whole_input(),
                ));
            }
        }
        let mut prop_refs = Vec::new();
        rule_condition_props(&rule.condition, &mut prop_refs);
        for name in prop_refs {
            if !sig.props.contains_key(name) {
                diags.push(Diagnostic::warning(
                    format!("condition reads N.{name}, which this scope does not declare"),
                    Span::whole_input(),
                ));
            }
        }
    }

    diags
}

fn rule_condition_props<'e>(cond: &'e Expr, out: &mut Vec<&'e str>) {
    match cond {
        Expr::PropRef { name } => out.push(name),
        Expr::Call { args, .. } => args.iter().for_each(|a| rule_condition_props(a, out)),
        Expr::Not { inner } => rule_condition_props(inner, out),
        Expr::Bin { left, right, .. } => {
            rule_condition_props(left, out);
            rule_condition_props(right, out);
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::has_errors;
    use crate::parser::{parse_program, parse_rules};

    fn program(body: &str) -> Program {
        let includes = r#"
include getPageInfo, getTopItems from "socket://localhost:8001" with "soap"
include getPageImg from "socket://localhost:8002" with "soap"
include compilePage from "socket://localhost:8000" with "soap"
include login from "socket://localhost:8004" with "soap"
"#;
        parse_program(&format!("{includes}\npreamble {{ starter: W }}\naioc {body}"))
            .expect("test program parses")
    }

    #[test]
    fn barebone_parallel_boundaries() {
        let p = program(
            r#"{
  {
    getPageInfo: W( address ) -> P( address );
    info@P = getPageInfo( address );
    getInfo: P( info ) -> W( info )
  }
  |
  {
    getPageImg: W( address ) -> I( address );
    img@I = getPageImg( address );
    getImg: I( img ) -> W( img )
  }
}"#,
        );
        let b = boundary_actions(&p.body);
        let wp: RoleSet = ["W".into(), "P".into()].into();
        let wi: RoleSet = ["W".into(), "I".into()].into();
        assert_eq!(b.first, [wp.clone(), wi.clone()].into());
        assert_eq!(b.last, [wp, wi].into());
    }

    #[test]
    fn skip_has_empty_boundaries() {
        let b = boundary_actions(&ChorStmt::Skip);
        assert!(b.first.is_empty() && b.last.is_empty());
    }

    #[test]
    fn scope_reports_single_boundary_action() {
        let p = program(r#"{ scope @W { skip } roles { P, U } }"#);
        let b = boundary_actions(&p.body);
        let expected: RoleSet = ["W".into(), "P".into(), "U".into()].into();
        assert_eq!(b.first, [expected.clone()].into());
        assert_eq!(b.last, [expected].into());
    }

    #[test]
    fn disconnected_sequence_is_rejected() {
        let p = program("{ a@A = 1; b@B = 2 }");
        let diags = check_program(&p);
        assert!(has_errors(&diags), "expected connectedness error");
        assert!(diags[0].message.contains("share no participant"));
    }

    #[test]
    fn self_interaction_is_rejected() {
        let p = program("{ m: A( 1 ) -> A( x ) }");
        assert!(has_errors(&check_program(&p)));
    }

    #[test]
    fn condition_must_be_owned_by_controller() {
        let ok = program("{ x@W = 1; if ( x > 0 )@W { skip } }");
        assert!(!has_errors(&check_program(&ok)));

        let bad = program("{ x@U = 1; getX: U( x ) -> P( y ); if ( x > 0 )@W { skip } }");
        let diags = check_program(&bad);
        assert!(has_errors(&diags));
        assert!(diags.iter().any(|d| d.message.contains("`x`")));
    }

    #[test]
    fn undeclared_call_is_rejected() {
        let p = program("{ x@W = mystery( 1 ) }");
        let diags = check_program(&p);
        assert!(diags.iter().any(|d| d.message.contains("mystery")));
    }

    #[test]
    fn env_refs_outside_rules_are_rejected() {
        let p = program("{ x@W = 1; if ( E.mode == \"a\" )@W { skip } }");
        assert!(has_errors(&check_program(&p)));
    }

    #[test]
    fn parallel_write_race_is_a_warning() {
        let p = program("{ { x@W = 1 } | { x@W = 2 } }");
        let diags = check_program(&p);
        assert!(!has_errors(&diags));
        assert!(diags
            .iter()
            .any(|d| d.severity == crate::diag::Severity::Warning));
    }

    #[test]
    fn rule_role_closure() {
        let src = r#"
rule {
  on { N.tag == "recommender" }
  do { m: Z( 1 ) -> W( x ) }
}
"#;
        let rules = parse_rules(src).unwrap();
        let sig = ScopeSignature {
            controller: "W".into(),
            involved: ["W".into(), "P".into(), "U".into()].into(),
            props: [("tag".into(), crate::value::Value::str("recommender"))].into(),
        };
        let diags = check_rule(&rules[0], Some(&sig));
        assert!(has_errors(&diags));
        assert!(diags.iter().any(|d| d.message.contains("`Z`")));
    }

    #[test]
    fn rule_with_new_roles_closes() {
        let src = r#"
rule {
  include getTopItems from "socket://localhost:8001" with "soap"
  newRoles: R
  on { N.tag == "recommender" and E.recommender == "low-power" }
  do {
    getPopularProducts: R() -> P();
    items@P = getTopItems( 10, "popularity" );
    popularProducts: P( items ) -> R( items )
  }
}
"#;
        let rules = parse_rules(src).unwrap();
        let sig = ScopeSignature {
            controller: "W".into(),
            involved: ["W".into(), "P".into(), "U".into()].into(),
            props: [("tag".into(), crate::value::Value::str("recommender"))].into(),
        };
        assert!(!has_errors(&check_rule(&rules[0], Some(&sig))));
    }
}
