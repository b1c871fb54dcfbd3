//! Endpoint projection: compile a global choreography (or a rule body) into
//! one local program per role.
//!
//! Choices and loops are driven by their controller, which broadcasts a
//! branch tag over an auxiliary label to every other role occurring in the
//! affected branches. Scopes project to a coordination action at the
//! controller and a wait action at every other involved role.

use std::collections::BTreeMap;

use crate::ast::{path_string, ChorStmt, Path, Program, RoleSet, RuleDef};
use crate::endpoint::{Action, RoleCodeMap, ScopeSignature, TAG_ELSE, TAG_THEN};
use crate::expr::Expr;

/// The label namespace for generated coordination messages. User labels
/// cannot contain `#`, so these never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxKind {
    If,
    While,
    Scope,
}

impl AuxKind {
    fn name(self) -> &'static str {
        match self {
            AuxKind::If => "if",
            AuxKind::While => "while",
            AuxKind::Scope => "scope",
        }
    }
}

/// Deterministic, collision-free label for the coordination messages of the
/// construct at `path`: `#if@2.0`, `#while@1`, `#scope@3`.
pub fn aux_label(kind: AuxKind, path: &[usize]) -> String {
    format!("#{}@{}", kind.name(), path_string(path))
}

/// Label carrying scope directives for the scope identified by `scope_id`.
pub fn scope_label(scope_id: &str) -> String {
    format!("#scope@{scope_id}")
}

/// Projection context: rule bodies prefix their scope and aux identifiers so
/// they never collide with the enclosing program's.
#[derive(Debug, Clone, Default)]
struct ProjCtx {
    id_prefix: String,
}

impl ProjCtx {
    fn path_id(&self, path: &[usize]) -> String {
        if self.id_prefix.is_empty() {
            path_string(path)
        } else if path.is_empty() {
            self.id_prefix.clone()
        } else {
            format!("{}:{}", self.id_prefix, path_string(path))
        }
    }

    fn aux(&self, kind: AuxKind, path: &[usize]) -> String {
        format!("#{}@{}", kind.name(), self.path_id(path))
    }
}

/// Project one statement for one role. `path` is the statement's position in
/// its tree and feeds the auxiliary label namespace.
pub fn project_stmt(stmt: &ChorStmt, role: &str, path: &Path) -> Action {
    project_in(stmt, role, path, &ProjCtx::default(), &mut BTreeMap::new())
}

fn project_in(
    stmt: &ChorStmt,
    role: &str,
    path: &Path,
    ctx: &ProjCtx,
    scope_index: &mut BTreeMap<String, ScopeSignature>,
) -> Action {
    match stmt {
        ChorStmt::Skip => Action::Noop,
        ChorStmt::Interaction {
            label,
            sender,
            expr,
            receiver,
            target,
        } => {
            if role == sender {
                Action::Send {
                    label: label.clone(),
                    to: receiver.clone(),
                    expr: expr.clone().unwrap_or(Expr::lit(unit_payload())),
                }
            } else if role == receiver {
                Action::Recv {
                    label: label.clone(),
                    from: sender.clone(),
                    var: target.clone(),
                }
            } else {
                Action::Noop
            }
        }
        ChorStmt::Assign { var, owner, expr } => {
            if role == owner {
                Action::Assign {
                    var: var.clone(),
                    expr: expr.clone(),
                }
            } else {
                Action::Noop
            }
        }
        ChorStmt::Seq(items) => Action::seq(
            items
                .iter()
                .enumerate()
                .map(|(i, item)| project_in(item, role, &child(path, i), ctx, scope_index))
                .collect(),
        ),
        ChorStmt::Par(items) => Action::par(
            items
                .iter()
                .enumerate()
                .map(|(i, item)| project_in(item, role, &child(path, i), ctx, scope_index))
                .collect(),
        ),
        ChorStmt::If {
            cond,
            controller,
            then_branch,
            else_branch,
        } => {
            let aux = ctx.aux(AuxKind::If, path);
            let mut notify: RoleSet = then_branch.roles();
            if let Some(e) = else_branch {
                notify.extend(e.roles());
            }
            notify.remove(controller);
            let then_path = child(path, 0);
            let else_path = child(path, 1);
            if role == controller {
                let then_p = project_in(then_branch, role, &then_path, ctx, scope_index);
                let else_p = else_branch
                    .as_deref()
                    .map(|e| project_in(e, role, &else_path, ctx, scope_index))
                    .unwrap_or(Action::Noop);
                Action::If {
                    cond: cond.clone(),
                    aux,
                    notify: notify.into_iter().collect(),
                    then: Box::new(then_p),
                    otherwise: Box::new(else_p),
                }
            } else if notify.contains(role) {
                let then_p = project_in(then_branch, role, &then_path, ctx, scope_index);
                let else_p = else_branch
                    .as_deref()
                    .map(|e| project_in(e, role, &else_path, ctx, scope_index))
                    .unwrap_or(Action::Noop);
                Action::BranchRecv {
                    aux,
                    from: controller.clone(),
                    branches: [(TAG_THEN.to_string(), then_p), (TAG_ELSE.to_string(), else_p)]
                        .into(),
                }
            } else {
                Action::Noop
            }
        }
        ChorStmt::While {
            cond,
            controller,
            body,
        } => {
            let aux = ctx.aux(AuxKind::While, path);
            let mut notify = body.roles();
            notify.remove(controller);
            let body_path = child(path, 0);
            if role == controller {
                Action::While {
                    cond: cond.clone(),
                    aux,
                    notify: notify.into_iter().collect(),
                    items: Box::new(project_in(body, role, &body_path, ctx, scope_index)),
                }
            } else if notify.contains(role) {
                Action::LoopRecv {
                    aux,
                    from: controller.clone(),
                    items: Box::new(project_in(body, role, &body_path, ctx, scope_index)),
                }
            } else {
                Action::Noop
            }
        }
        ChorStmt::Scope {
            controller,
            body,
            props,
            extra_roles,
        } => {
            let scope_id = ctx.path_id(path);
            let mut involved = body.roles();
            involved.insert(controller.clone());
            involved.extend(extra_roles.iter().cloned());
            scope_index.insert(
                scope_id.clone(),
                ScopeSignature {
                    controller: controller.clone(),
                    involved: involved.clone(),
                    props: props.clone(),
                },
            );
            let body_path = child(path, 0);
            let original = project_in(body, role, &body_path, ctx, scope_index);
            if role == controller {
                Action::ScopeCoord {
                    scope_id,
                    props: props.clone(),
                    involved,
                    original: Box::new(original),
                }
            } else if involved.contains(role) {
                Action::ScopeWait {
                    scope_id,
                    coordinator: controller.clone(),
                    original: Box::new(original),
                }
            } else {
                Action::Noop
            }
        }
    }
}

fn child(path: &Path, idx: usize) -> Path {
    let mut p = path.clone();
    p.push(idx);
    p
}

/// Payload of an interaction with empty parentheses.
pub fn unit_payload() -> crate::value::Value {
    crate::value::Value::Record(BTreeMap::new())
}

/// Project a whole program: one endpoint program per role (roles with no
/// actions get a noop), plus the scope index.
pub fn project_program(program: &Program) -> RoleCodeMap {
    let mut map = RoleCodeMap::default();
    for role in program.roles() {
        let code = project_in(
            &program.body,
            &role,
            &Path::new(),
            &ProjCtx::default(),
            &mut map.scope_index,
        );
        map.code.insert(role, code);
    }
    map
}

/// Project a rule body over its own roles and new roles. `rule_id` prefixes
/// every scope and aux identifier inside the body, so nested scopes inside
/// delivered code coordinate under their own names.
pub fn project_rule_with_id(rule: &RuleDef, rule_id: &str) -> RoleCodeMap {
    let ctx = ProjCtx {
        id_prefix: rule_id.to_string(),
    };
    let mut map = RoleCodeMap::default();
    let mut roles = rule.body.roles();
    roles.extend(rule.new_roles.iter().cloned());
    for role in roles {
        let code = project_in(&rule.body, &role, &Path::new(), &ctx, &mut map.scope_index);
        map.code.insert(role, code);
    }
    map
}

/// Project a rule body with an identifier derived from its file position.
pub fn project_rule(rule: &RuleDef) -> RoleCodeMap {
    project_rule_with_id(rule, &format!("rule{}", rule.source_order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_rules};

    fn barebone() -> Program {
        parse_program(
            r#"
include getPageInfo from "socket://localhost:8001" with "soap"
include getPageImg from "socket://localhost:8002" with "soap"
include compilePage from "socket://localhost:8000" with "soap"

preamble { starter: W }

aioc {
  address@U = getInput( "Insert address" );
  getPage: U( address ) -> W( address );
  {
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
  };
  page@W = compilePage( info, img );
  getPage: W( page ) -> U( page )
}
"#,
        )
        .unwrap()
    }

    #[test]
    fn aux_labels_are_path_scoped() {
        assert_eq!(aux_label(AuxKind::If, &[2, 0]), "#if@2.0");
        assert_ne!(
            aux_label(AuxKind::Scope, &[4]),
            aux_label(AuxKind::Scope, &[4, 1])
        );
    }

    #[test]
    fn interaction_projects_to_send_recv_noop() {
        let p = barebone();
        let stmt = match &p.body {
            crate::ast::ChorStmt::Seq(items) => &items[1],
            other => panic!("unexpected body {other:?}"),
        };
        let at_u = project_stmt(stmt, "U", &vec![1]);
        let at_w = project_stmt(stmt, "W", &vec![1]);
        let at_p = project_stmt(stmt, "P", &vec![1]);
        assert!(
            matches!(&at_u, Action::Send { label, to, .. } if label == "getPage" && to == "W")
        );
        assert!(
            matches!(&at_w, Action::Recv { label, from, var } if label == "getPage" && from == "U" && var.as_deref() == Some("address"))
        );
        assert!(at_p.is_noop());
    }

    #[test]
    fn skip_projects_to_noop_everywhere() {
        assert!(project_stmt(&crate::ast::ChorStmt::Skip, "U", &vec![]).is_noop());
    }

    #[test]
    fn barebone_projects_four_roles() {
        let map = project_program(&barebone());
        assert_eq!(map.roles().len(), 4);
        let w = map.get("W").unwrap();
        // W: recv address, parallel of two send/recv pairs, assign, send.
        match w {
            Action::Seq { items } => {
                assert!(matches!(&items[0], Action::Recv { label, .. } if label == "getPage"));
                assert!(matches!(&items[1], Action::Par { .. }));
                assert!(matches!(&items[2], Action::Assign { var, .. } if var == "page"));
                assert!(matches!(&items[3], Action::Send { label, .. } if label == "getPage"));
            }
            other => panic!("unexpected projection for W: {other:?}"),
        }
    }

    #[test]
    fn send_and_recv_multisets_match() {
        let map = project_program(&barebone());
        let mut sends: Vec<(String, String, String)> = Vec::new();
        let mut recvs: Vec<(String, String, String)> = Vec::new();
        for (role, code) in &map.code {
            for (label, to) in code.send_labels() {
                sends.push((label, role.clone(), to));
            }
            for (label, from) in code.recv_labels() {
                recvs.push((label, from, role.clone()));
            }
        }
        sends.sort();
        recvs.sort();
        assert_eq!(sends, recvs);
    }

    #[test]
    fn branch_receivers_get_both_branches() {
        let p = parse_program(
            r#"
preamble { starter: A }
aioc {
  token@A = "none";
  if ( token != "none" )@A {
    sendToken: A( token ) -> W( token )
  }
}
"#,
        )
        .unwrap();
        let map = project_program(&p);
        match map.get("W").unwrap() {
            Action::BranchRecv { aux, from, branches } => {
                assert_eq!(from, "A");
                assert!(aux.starts_with("#if@"));
                assert!(
                    matches!(&branches[TAG_THEN], Action::Recv { label, .. } if label == "sendToken")
                );
                assert!(branches[TAG_ELSE].is_noop());
            }
            other => panic!("unexpected projection for W: {other:?}"),
        }
    }

    #[test]
    fn scope_projects_coord_and_wait() {
        let p = parse_program(
            r#"
preamble { starter: W }
aioc {
  start@W = 1;
  scope @W { skip } prop { N.tag = "recommender" } roles { U, P }
}
"#,
        )
        .unwrap();
        let map = project_program(&p);
        let w = map.get("W").unwrap();
        match w {
            Action::Seq { items } => match &items[1] {
                Action::ScopeCoord {
                    scope_id,
                    involved,
                    props,
                    ..
                } => {
                    assert_eq!(scope_id, "1");
                    assert_eq!(involved.len(), 3);
                    assert_eq!(props["tag"], crate::value::Value::str("recommender"));
                }
                other => panic!("expected scopeCoord, got {other:?}"),
            },
            other => panic!("unexpected projection {other:?}"),
        }
        assert!(
            matches!(map.get("U").unwrap(), Action::ScopeWait { coordinator, .. } if coordinator == "W")
        );
        assert_eq!(map.scope_index.len(), 1);
    }

    #[test]
    fn rule_with_nested_scope_prefixes_ids() {
        let rules = parse_rules(
            r#"
rule {
  include getPageInfo, getPageInfoAsLoggedUser from "socket://localhost:8001" with "soap"
  on { N.tag == "page-info" }
  do {
    getPageInfo: W( address ) -> P( address );
    scope @W { skip } prop { N.tag = "auth" } roles { U };
    if ( token != "none" )@W {
      sendToken: W( token ) -> P( token );
      info@P = getPageInfoAsLoggedUser( address, token )
    } else {
      info@P = getPageInfo( address )
    };
    getInfo: P( info ) -> W( info )
  }
}
"#,
        )
        .unwrap();
        let map = project_rule_with_id(&rules[0], "repo0#0");
        let w = map.get("W").unwrap();
        let mut nested_scope = None;
        w.visit(&mut |a| {
            if let Action::ScopeCoord { scope_id, props, .. } = a {
                nested_scope = Some((scope_id.clone(), props.clone()));
            }
        });
        let (scope_id, props) = nested_scope.expect("W coordinates the nested scope");
        assert_eq!(scope_id, "repo0#0:1");
        assert_eq!(props["tag"], crate::value::Value::str("auth"));
        // P learns the branch over an aux label prefixed with the rule id.
        let p_code = map.get("P").unwrap();
        let mut saw_branch = false;
        p_code.visit(&mut |a| {
            if let Action::BranchRecv { aux, .. } = a {
                saw_branch = true;
                assert_eq!(aux, "#if@repo0#0:2");
            }
        });
        assert!(saw_branch);
    }

    #[test]
    fn rule_body_skip_gives_noops_for_new_roles() {
        let rules = parse_rules(r#"rule { newRoles: R on { true } do { skip } }"#).unwrap();
        let map = project_rule(&rules[0]);
        assert!(map.get("R").unwrap().is_noop());
    }
}
