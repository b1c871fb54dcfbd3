//! Canonical pretty-printer for programs and rules. `parse(format(ast))`
//! yields a structurally equal AST; output uses 2-space indentation.

use crate::ast::{ChorStmt, Include, Program, RuleDef};
use crate::expr::{BinOp, Expr};
use crate::value::Value;

const INDENT: &str = "  ";

pub fn format_program(p: &Program) -> String {
    let mut out = String::new();
    for inc in &p.includes {
        out.push_str(&format_include(inc));
        out.push('\n');
    }
    if !p.includes.is_empty() {
        out.push('\n');
    }
    out.push_str("preamble { starter: ");
    out.push_str(&p.starter);
    for (k, v) in &p.preamble_extra {
        out.push_str(&format!(" {k}: {v}"));
    }
    out.push_str(" }\n\naioc ");
    out.push_str(&block(&p.body, 0));
    out.push('\n');
    out
}

pub fn format_rule(rule: &RuleDef) -> String {
    let mut out = String::from("rule {\n");
    for inc in &rule.includes {
        out.push_str(INDENT);
        out.push_str(&format_include(inc));
        out.push('\n');
    }
    if !rule.new_roles.is_empty() {
        out.push_str(INDENT);
        out.push_str("newRoles: ");
        out.push_str(&rule.new_roles.iter().cloned().collect::<Vec<_>>().join(", "));
        out.push('\n');
    }
    out.push_str(INDENT);
    out.push_str("on { ");
    out.push_str(&format_expr(&rule.condition));
    out.push_str(" }\n");
    out.push_str(INDENT);
    out.push_str("do ");
    out.push_str(&block(&rule.body, 1));
    out.push_str("\n}\n");
    out
}

pub fn format_rules(rules: &[RuleDef]) -> String {
    rules
        .iter()
        .map(format_rule)
        .collect::<Vec<_>>()
        .join("\n")
}

fn format_include(inc: &Include) -> String {
    format!(
        "include {} from {} with {}",
        inc.functions.join(", "),
        quote(&inc.location),
        quote(&inc.protocol)
    )
}

fn block(stmt: &ChorStmt, level: usize) -> String {
    let inner = fmt_chor(stmt, level + 1);
    format!("{{\n{inner}\n{}}}", INDENT.repeat(level))
}

fn fmt_chor(stmt: &ChorStmt, level: usize) -> String {
    match stmt {
        ChorStmt::Seq(items) => items
            .iter()
            .map(|item| fmt_parunit(item, level))
            .collect::<Vec<_>>()
            .join(&format!(";\n")),
        other => fmt_parunit(other, level),
    }
}

fn fmt_parunit(stmt: &ChorStmt, level: usize) -> String {
    let ind = INDENT.repeat(level);
    match stmt {
        // Parallel branches print as blocks, matching the source idiom.
        ChorStmt::Par(items) => items
            .iter()
            .map(|item| format!("{ind}{}", block(item, level)))
            .collect::<Vec<_>>()
            .join(&format!("\n{ind}|\n")),
        other => format!("{ind}{}", fmt_stmt(other, level)),
    }
}

fn fmt_stmt(stmt: &ChorStmt, level: usize) -> String {
    match stmt {
        ChorStmt::Interaction {
            label,
            sender,
            expr,
            receiver,
            target,
        } => {
            let payload = match expr {
                Some(e) => format!("( {} )", format_expr(e)),
                None => "()".to_string(),
            };
            let binding = match target {
                Some(t) => format!("( {t} )"),
                None => "()".to_string(),
            };
            format!("{label}: {sender}{payload} -> {receiver}{binding}")
        }
        ChorStmt::Assign { var, owner, expr } => {
            format!("{var}@{owner} = {}", format_expr(expr))
        }
        ChorStmt::If {
            cond,
            controller,
            then_branch,
            else_branch,
        } => {
            let mut out = format!(
                "if ( {} )@{controller} {}",
                format_expr(cond),
                block(then_branch, level)
            );
            if let Some(e) = else_branch {
                out.push_str(" else ");
                out.push_str(&block(e, level));
            }
            out
        }
        ChorStmt::While {
            cond,
            controller,
            body,
        } => format!(
            "while ( {} )@{controller} {}",
            format_expr(cond),
            block(body, level)
        ),
        ChorStmt::Scope {
            controller,
            body,
            props,
            extra_roles,
        } => {
            let mut out = format!("scope @{controller} {}", block(body, level));
            if !props.is_empty() {
                let assigns = props
                    .iter()
                    .map(|(k, v)| format!("N.{k} = {}", fmt_literal(v)))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!(" prop {{ {assigns} }}"));
            }
            if !extra_roles.is_empty() {
                let roles = extra_roles.iter().cloned().collect::<Vec<_>>().join(", ");
                out.push_str(&format!(" roles {{ {roles} }}"));
            }
            out
        }
        ChorStmt::Skip => "skip".to_string(),
        // Seq or Par nested under a statement position prints as a block.
        composite => block(composite, level.saturating_sub(1)),
    }
}

fn fmt_literal(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => quote(s),
        // Lists and records have no literal syntax; they cannot appear in a
        // parsed AST.
        other => quote(&crate::value::encode_value(other)),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

/// Precedence levels, loosest first; used to decide parenthesization.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin { op: BinOp::Or, .. } => 1,
        Expr::Bin { op: BinOp::And, .. } => 2,
        Expr::Not { .. } => 3,
        Expr::Bin {
            op: BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge,
            ..
        } => 4,
        Expr::Bin {
            op: BinOp::Add | BinOp::Sub,
            ..
        } => 5,
        Expr::Bin {
            op: BinOp::Mul | BinOp::Div,
            ..
        } => 6,
        _ => 7,
    }
}

pub fn format_expr(e: &Expr) -> String {
    match e {
        Expr::Lit { value } => fmt_literal(value),
        Expr::Var { name } => name.clone(),
        Expr::EnvRef { name } => format!("E.{name}"),
        Expr::PropRef { name } => format!("N.{name}"),
        Expr::Call { function, args } => {
            if args.is_empty() {
                format!("{function}()")
            } else {
                format!(
                    "{function}( {} )",
                    args.iter().map(format_expr).collect::<Vec<_>>().join(", ")
                )
            }
        }
        Expr::Not { inner } => {
            let body = format_expr(inner);
            if precedence(inner) < 3 {
                format!("not ({body})")
            } else {
                format!("not {body}")
            }
        }
        Expr::Bin { op, left, right } => {
            let prec = precedence(e);
            // Comparisons are non-associative, so a comparison child always
            // keeps its parentheses; otherwise the parse is left-associative.
            let l = wrap(left, precedence(left) < prec || (prec == 4 && precedence(left) == 4));
            let r = wrap(right, precedence(right) <= prec);
            format!("{l} {} {r}", op.symbol())
        }
    }
}

fn wrap(e: &Expr, parens: bool) -> String {
    let body = format_expr(e);
    if parens {
        format!("({body})")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr_text, parse_program, parse_rules};

    #[test]
    fn skip_program_formats_minimally() {
        let p = parse_program("preamble { starter: W } aioc { skip }").unwrap();
        let text = format_program(&p);
        assert_eq!(text, "preamble { starter: W }\n\naioc {\n  skip\n}\n");
        assert_eq!(parse_program(&text).unwrap(), p);
    }

    #[test]
    fn expression_parens_survive() {
        for src in [
            "a + b * c",
            "(a + b) * c",
            "not (a and b)",
            "not a == b",
            "x - y - z",
            "x - (y - z)",
            "(a == b) == c",
            "a or b and not c",
        ] {
            let e = parse_expr_text(src).unwrap();
            let printed = format_expr(&e);
            let reparsed = parse_expr_text(&printed).unwrap();
            assert_eq!(reparsed, e, "source `{src}` printed as `{printed}`");
        }
    }

    #[test]
    fn rule_round_trips() {
        let src = r#"
rule {
  include getTopItems from "socket://localhost:8001" with "soap"
  newRoles: R
  on { N.tag == "recommender" and E.recommender == "low-power" }
  do {
    getPopularProducts: R() -> P();
    items@P = getTopItems( 10, "popularity" )
  }
}
"#;
        let rules = parse_rules(src).unwrap();
        let printed = format_rules(&rules);
        let reparsed = parse_rules(&printed).unwrap();
        assert_eq!(reparsed, rules);
    }

    #[test]
    fn strings_are_escaped() {
        let p = parse_program(
            "preamble { starter: W } aioc { x@W = \"a\\\"b\\\\c\\nd\" }",
        )
        .unwrap();
        let text = format_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p);
    }
}
