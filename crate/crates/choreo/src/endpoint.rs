//! Per-role endpoint programs: the output of projection and the payload of
//! code-shipping directives.
//!
//! The JSON schema is part of the wire contract: every action serializes as a
//! record with a `kind` field plus kind-specific fields (`label`, `to`, `from`,
//! `expr`, `var`, `cond`, `aux`, `notify`, `then`, `else`, `branches`,
//! `scopeId`, `props`, `involved`, `coordinator`, `original`, `items`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ast::{Role, RoleSet};
use crate::expr::Expr;
use crate::value::Value;

/// Branch tags sent by an `if` controller.
pub const TAG_THEN: &str = "then";
pub const TAG_ELSE: &str = "else";
/// Iteration tags sent by a `while` controller.
pub const TAG_CONTINUE: &str = "continue";
pub const TAG_EXIT: &str = "exit";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Action {
    Send {
        label: String,
        to: Role,
        expr: Expr,
    },
    Recv {
        label: String,
        from: Role,
        /// Absent for pure synchronizations: the payload is dropped.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        var: Option<String>,
    },
    Assign {
        var: String,
        expr: Expr,
    },
    /// Local choice at the controller: evaluate, notify, run the chosen branch.
    If {
        cond: Expr,
        aux: String,
        notify: Vec<Role>,
        then: Box<Action>,
        #[serde(rename = "else")]
        otherwise: Box<Action>,
    },
    /// Non-controller side of a choice: wait for the branch tag.
    BranchRecv {
        aux: String,
        from: Role,
        branches: BTreeMap<String, Action>,
    },
    /// Local loop at the controller: evaluate, notify continue/exit each round.
    While {
        cond: Expr,
        aux: String,
        notify: Vec<Role>,
        items: Box<Action>,
    },
    /// Non-controller side of a loop: run the body once per continue tag.
    LoopRecv {
        aux: String,
        from: Role,
        items: Box<Action>,
    },
    /// Scope controller: query for a rule and distribute the verdict.
    ScopeCoord {
        #[serde(rename = "scopeId")]
        scope_id: String,
        props: BTreeMap<String, Value>,
        involved: RoleSet,
        original: Box<Action>,
    },
    /// Scope participant: wait for the coordinator's directive.
    ScopeWait {
        #[serde(rename = "scopeId")]
        scope_id: String,
        coordinator: Role,
        original: Box<Action>,
    },
    Seq {
        items: Vec<Action>,
    },
    Par {
        items: Vec<Action>,
    },
    Noop,
}

impl Action {
    /// Sequence constructor that prunes noops and flattens single items.
    pub fn seq(items: Vec<Action>) -> Action {
        let mut flat: Vec<Action> = Vec::new();
        for item in items {
            match item {
                Action::Noop => {}
                Action::Seq { items: inner } => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Action::Noop,
            1 => flat.pop().unwrap(),
            _ => Action::Seq { items: flat },
        }
    }

    /// Parallel constructor that prunes noops and flattens single items.
    pub fn par(items: Vec<Action>) -> Action {
        let mut flat: Vec<Action> = Vec::new();
        for item in items {
            match item {
                Action::Noop => {}
                Action::Par { items: inner } => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Action::Noop,
            1 => flat.pop().unwrap(),
            _ => Action::Par { items: flat },
        }
    }

    pub fn is_noop(&self) -> bool {
        matches!(self, Action::Noop)
    }

    /// User-visible send labels, for completeness checks.
    pub fn send_labels(&self) -> Vec<(String, Role)> {
        let mut out = Vec::new();
        self.visit(&mut |a| {
            if let Action::Send { label, to, .. } = a {
                if !label.starts_with('#') {
                    out.push((label.clone(), to.clone()));
                }
            }
        });
        out
    }

    /// User-visible receive labels, for completeness checks.
    pub fn recv_labels(&self) -> Vec<(String, Role)> {
        let mut out = Vec::new();
        self.visit(&mut |a| {
            if let Action::Recv { label, from, .. } = a {
                if !label.starts_with('#') {
                    out.push((label.clone(), from.clone()));
                }
            }
        });
        out
    }

    pub fn visit(&self, f: &mut impl FnMut(&Action)) {
        f(self);
        match self {
            Action::If { then, otherwise, .. } => {
                then.visit(f);
                otherwise.visit(f);
            }
            Action::BranchRecv { branches, .. } => {
                for b in branches.values() {
                    b.visit(f);
                }
            }
            Action::While { items, .. }
            | Action::LoopRecv { items, .. }
            | Action::ScopeCoord {
                original: items, ..
            }
            | Action::ScopeWait {
                original: items, ..
            } => items.visit(f),
            Action::Seq { items } | Action::Par { items } => {
                for item in items {
                    item.visit(f);
                }
            }
            _ => {}
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("endpoint actions always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("endpoint actions always serialize")
    }

    pub fn from_json(text: &str) -> Result<Action, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Projection output: one endpoint program per role, plus an index of the
/// scopes found along the way.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct RoleCodeMap {
    pub code: BTreeMap<Role, Action>,
    pub scope_index: BTreeMap<String, ScopeSignature>,
}

/// What a scope looks like from the outside: who controls it, who takes part,
/// and which properties it declares.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScopeSignature {
    pub controller: Role,
    pub involved: RoleSet,
    pub props: BTreeMap<String, Value>,
}

impl RoleCodeMap {
    pub fn roles(&self) -> BTreeSet<&str> {
        self.code.keys().map(|s| s.as_str()).collect()
    }

    pub fn get(&self, role: &str) -> Option<&Action> {
        self.code.get(role)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn schema_field_names_are_exact() {
        let a = Action::Send {
            label: "getPage".to_string(),
            to: "W".to_string(),
            expr: Expr::var("address"),
        };
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(json["kind"], "send");
        assert_eq!(json["label"], "getPage");
        assert_eq!(json["to"], "W");
        assert!(json.get("expr").is_some());

        let s = Action::ScopeCoord {
            scope_id: "3".to_string(),
            props: BTreeMap::new(),
            involved: ["W".to_string()].into(),
            original: Box::new(Action::Noop),
        };
        let json: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(json["kind"], "scopeCoord");
        assert!(json.get("scopeId").is_some());
        assert!(json.get("involved").is_some());
        assert!(json.get("original").is_some());
    }

    #[test]
    fn seq_prunes_noops() {
        let a = Action::seq(vec![Action::Noop, Action::Noop]);
        assert!(a.is_noop());
        let b = Action::seq(vec![
            Action::Noop,
            Action::Assign {
                var: "x".to_string(),
                expr: Expr::lit(crate::value::Value::Int(1)),
            },
        ]);
        assert!(matches!(b, Action::Assign { .. }));
    }

    #[test]
    fn round_trips_through_json() {
        let a = Action::Seq {
            items: vec![
                Action::Recv {
                    label: "getInfo".to_string(),
                    from: "P".to_string(),
                    var: Some("info".to_string()),
                },
                Action::BranchRecv {
                    aux: "#if@2.0".to_string(),
                    from: "A".to_string(),
                    branches: [
                        (
                            TAG_THEN.to_string(),
                            Action::Recv {
                                label: "sendToken".to_string(),
                                from: "A".to_string(),
                                var: Some("token".to_string()),
                            },
                        ),
                        (TAG_ELSE.to_string(), Action::Noop),
                    ]
                    .into(),
                },
            ],
        };
        let text = a.to_json();
        assert_eq!(Action::from_json(&text).unwrap(), a);
    }
}
