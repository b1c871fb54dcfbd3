//! Global choreography AST: programs, statements, and adaptation rules.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::value::Value;

pub type Role = String;
pub type RoleSet = BTreeSet<Role>;

/// A node's position in its tree: the sequence of child indices from the root.
/// `if` children are then=0 / else=1; `while` and `scope` bodies are 0.
pub type Path = Vec<usize>;

pub fn path_string(path: &[usize]) -> String {
    path.iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// `include f, g from "socket://host:port" with "proto"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Include {
    pub functions: Vec<String>,
    pub location: String,
    pub protocol: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChorStmt {
    /// `label: A( expr ) -> B( var )`; empty parentheses on either side make
    /// a pure synchronization (`ping: A() -> B()`).
    Interaction {
        label: String,
        sender: Role,
        expr: Option<Expr>,
        receiver: Role,
        target: Option<String>,
    },
    /// `var@A = expr`
    Assign {
        var: String,
        owner: Role,
        expr: Expr,
    },
    /// `a ; b ; c` — children are never sequences themselves.
    Seq(Vec<ChorStmt>),
    /// `a | b | c` — children are never parallels themselves.
    Par(Vec<ChorStmt>),
    If {
        cond: Expr,
        controller: Role,
        then_branch: Box<ChorStmt>,
        else_branch: Option<Box<ChorStmt>>,
    },
    While {
        cond: Expr,
        controller: Role,
        body: Box<ChorStmt>,
    },
    /// `scope @A { ... } prop { N.k = v } roles { B, C }`
    Scope {
        controller: Role,
        body: Box<ChorStmt>,
        props: BTreeMap<String, Value>,
        extra_roles: RoleSet,
    },
    Skip,
}

impl ChorStmt {
    pub fn seq(items: Vec<ChorStmt>) -> ChorStmt {
        let mut flat = Vec::new();
        for item in items {
            match item {
                ChorStmt::Seq(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => ChorStmt::Skip,
            1 => flat.pop().unwrap(),
            _ => ChorStmt::Seq(flat),
        }
    }

    pub fn par(items: Vec<ChorStmt>) -> ChorStmt {
        let mut flat = Vec::new();
        for item in items {
            match item {
                ChorStmt::Par(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => ChorStmt::Skip,
            1 => flat.pop().unwrap(),
            _ => ChorStmt::Par(flat),
        }
    }

    /// Roles taking part in this statement, including scope `roles` clauses
    /// and if/while controllers.
    pub fn roles(&self) -> RoleSet {
        let mut out = RoleSet::new();
        self.collect_roles(&mut out);
        out
    }

    fn collect_roles(&self, out: &mut RoleSet) {
        match self {
            ChorStmt::Interaction {
                sender, receiver, ..
            } => {
                out.insert(sender.clone());
                out.insert(receiver.clone());
            }
            ChorStmt::Assign { owner, .. } => {
                out.insert(owner.clone());
            }
            ChorStmt::Seq(items) | ChorStmt::Par(items) => {
                for item in items {
                    item.collect_roles(out);
                }
            }
            ChorStmt::If {
                controller,
                then_branch,
                else_branch,
                ..
            } => {
                out.insert(controller.clone());
                then_branch.collect_roles(out);
                if let Some(e) = else_branch {
                    e.collect_roles(out);
                }
            }
            ChorStmt::While {
                controller, body, ..
            } => {
                out.insert(controller.clone());
                body.collect_roles(out);
            }
            ChorStmt::Scope {
                controller,
                body,
                extra_roles,
                ..
            } => {
                out.insert(controller.clone());
                body.collect_roles(out);
                out.extend(extra_roles.iter().cloned());
            }
            ChorStmt::Skip => {}
        }
    }

    /// Children paired with their child index, for path computation.
    pub fn children(&self) -> Vec<(usize, &ChorStmt)> {
        match self {
            ChorStmt::Seq(items) | ChorStmt::Par(items) => items.iter().enumerate().collect(),
            ChorStmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                let mut out = vec![(0, then_branch.as_ref())];
                if let Some(e) = else_branch {
                    out.push((1, e.as_ref()));
                }
                out
            }
            ChorStmt::While { body, .. } | ChorStmt::Scope { body, .. } => {
                vec![(0, body.as_ref())]
            }
            _ => Vec::new(),
        }
    }

    /// Pre-order walk yielding each node with its path from this root.
    pub fn walk(&self) -> Vec<(Path, &ChorStmt)> {
        let mut out = Vec::new();
        let mut stack = vec![(Path::new(), self)];
        while let Some((path, node)) = stack.pop() {
            out.push((path.clone(), node));
            for (idx, child) in node.children().into_iter().rev() {
                let mut child_path = path.clone();
                child_path.push(idx);
                stack.push((child_path, child));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub includes: Vec<Include>,
    pub starter: Role,
    /// Preamble keys other than `starter`, kept verbatim.
    pub preamble_extra: Vec<(String, String)>,
    pub body: ChorStmt,
}

impl Program {
    /// All roles of this program. The starter always counts as a participant,
    /// so a bare `skip` program still has one role to run.
    pub fn roles(&self) -> RoleSet {
        let mut roles = self.body.roles();
        roles.insert(self.starter.clone());
        roles
    }

    pub fn declared_functions(&self) -> BTreeSet<&str> {
        self.includes
            .iter()
            .flat_map(|inc| inc.functions.iter().map(|s| s.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDef {
    pub includes: Vec<Include>,
    pub new_roles: RoleSet,
    pub condition: Expr,
    pub body: ChorStmt,
    /// Position of the rule in its repository file, 0-based.
    pub source_order: usize,
}

impl RuleDef {
    pub fn declared_functions(&self) -> BTreeSet<&str> {
        self.includes
            .iter()
            .flat_map(|inc| inc.functions.iter().map(|s| s.as_str()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::value::Value;

    fn interaction(label: &str, from: &str, to: &str) -> ChorStmt {
        ChorStmt::Interaction {
            label: label.to_string(),
            sender: from.to_string(),
            expr: Some(Expr::var("x")),
            receiver: to.to_string(),
            target: Some("x".to_string()),
        }
    }

    #[test]
    fn seq_flattens_nested_sequences() {
        let s = ChorStmt::seq(vec![
            interaction("a", "A", "B"),
            ChorStmt::seq(vec![interaction("b", "B", "C"), interaction("c", "C", "D")]),
        ]);
        match s {
            ChorStmt::Seq(items) => assert_eq!(items.len(), 3),
            other => panic!("expected Seq, got {other:?}"),
        }
    }

    #[test]
    fn scope_roles_include_extras() {
        let s = ChorStmt::Scope {
            controller: "W".to_string(),
            body: Box::new(ChorStmt::Skip),
            props: [("tag".to_string(), Value::str("recommender"))].into(),
            extra_roles: ["P".to_string(), "U".to_string()].into(),
        };
        let roles = s.roles();
        assert_eq!(roles, ["P", "U", "W"].map(String::from).into());
    }

    #[test]
    fn walk_paths_are_unique() {
        let s = ChorStmt::seq(vec![
            interaction("a", "A", "B"),
            ChorStmt::par(vec![interaction("b", "B", "C"), interaction("c", "B", "D")]),
            ChorStmt::If {
                cond: Expr::var("x"),
                controller: "B".to_string(),
                then_branch: Box::new(interaction("d", "B", "C")),
                else_branch: Some(Box::new(ChorStmt::Skip)),
            },
        ]);
        let nodes = s.walk();
        let paths: BTreeSet<_> = nodes.iter().map(|(p, _)| p.clone()).collect();
        assert_eq!(paths.len(), nodes.len(), "duplicate path identifiers");
    }

    #[test]
    fn starter_counts_as_role() {
        let p = Program {
            includes: vec![],
            starter: "W".to_string(),
            preamble_extra: vec![],
            body: ChorStmt::Skip,
        };
        assert_eq!(p.roles(), ["W".to_string()].into());
    }
}
