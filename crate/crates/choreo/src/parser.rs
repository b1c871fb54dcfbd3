//! Lexer and recursive-descent parser for choreography (`.chor`) and rule
//! repository (`.rules`) files.
//!
//! Grammar sketch:
//!
//! ```text
//! program   := include* preamble "aioc" block
//! include   := "include" IDENT ("," IDENT)* "from" STRING "with" STRING
//! preamble  := "preamble" "{" (IDENT ":" IDENT)* "}"
//! block     := "{" chor "}"
//! chor      := parunit (";" chor)?          -- trailing ";" before "}" allowed
//! parunit   := unit ("|" unit)*
//! unit      := block | stmt
//! stmt      := interaction | assign | if | while | scope | "skip"
//! rulefile  := rule*
//! rule      := "rule" "{" include* ("newRoles" ":" IDENT ("," IDENT)*)?
//!              "on" "{" expr "}" "do" block "}"
//! ```
//!
//! `//` comments run to end of line. Operator precedence, loosest first:
//! `or`, `and`, `not`, comparisons, `+ -`, `* /`.

use std::collections::BTreeMap;

use crate::ast::{ChorStmt, Include, Program, RuleDef};
use crate::diag::{Diagnostic, Span};
use crate::expr::{BinOp, Expr};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Pipe,
    Comma,
    Colon,
    At,
    Dot,
    Arrow,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::Semi => "`;`".to_string(),
            Tok::Pipe => "`|`".to_string(),
            Tok::Comma => "`,`".to_string(),
            Tok::Colon => "`:`".to_string(),
            Tok::At => "`@`".to_string(),
            Tok::Dot => "`.`".to_string(),
            Tok::Arrow => "`->`".to_string(),
            Tok::Assign => "`=`".to_string(),
            Tok::EqEq => "`==`".to_string(),
            Tok::NotEq => "`!=`".to_string(),
            Tok::Lt => "`<`".to_string(),
            Tok::Le => "`<=`".to_string(),
            Tok::Gt => "`>`".to_string(),
            Tok::Ge => "`>=`".to_string(),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        b
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.peek2() == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, Diagnostic> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let (line, col) = (self.line, self.col);
            let span1 = |len: usize| Span::new(line, col, len);
            let Some(b) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    span: span1(0),
                });
                return Ok(out);
            };
            let tok = match b {
                b'{' => {
                    self.bump();
                    Token { tok: Tok::LBrace, span: span1(1) }
                }
                b'}' => {
                    self.bump();
                    Token { tok: Tok::RBrace, span: span1(1) }
                }
                b'(' => {
                    self.bump();
                    Token { tok: Tok::LParen, span: span1(1) }
                }
                b')' => {
                    self.bump();
                    Token { tok: Tok::RParen, span: span1(1) }
                }
                b';' => {
                    self.bump();
                    Token { tok: Tok::Semi, span: span1(1) }
                }
                b'|' => {
                    self.bump();
                    Token { tok: Tok::Pipe, span: span1(1) }
                }
                b',' => {
                    self.bump();
                    Token { tok: Tok::Comma, span: span1(1) }
                }
                b':' => {
                    self.bump();
                    Token { tok: Tok::Colon, span: span1(1) }
                }
                b'@' => {
                    self.bump();
                    Token { tok: Tok::At, span: span1(1) }
                }
                b'.' => {
                    self.bump();
                    Token { tok: Tok::Dot, span: span1(1) }
                }
                b'+' => {
                    self.bump();
                    Token { tok: Tok::Plus, span: span1(1) }
                }
                b'*' => {
                    self.bump();
                    Token { tok: Tok::Star, span: span1(1) }
                }
                b'/' => {
                    self.bump();
                    Token { tok: Tok::Slash, span: span1(1) }
                }
                b'-' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Token { tok: Tok::Arrow, span: span1(2) }
                    } else {
                        Token { tok: Tok::Minus, span: span1(1) }
                    }
                }
                b'=' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Token { tok: Tok::EqEq, span: span1(2) }
                    } else {
                        Token { tok: Tok::Assign, span: span1(1) }
                    }
                }
                b'!' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Token { tok: Tok::NotEq, span: span1(2) }
                    } else {
                        return Err(Diagnostic::error("stray `!`; did you mean `!=`?", span1(1)));
                    }
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Token { tok: Tok::Le, span: span1(2) }
                    } else {
                        Token { tok: Tok::Lt, span: span1(1) }
                    }
                }
                b'>' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Token { tok: Tok::Ge, span: span1(2) }
                    } else {
                        Token { tok: Tok::Gt, span: span1(1) }
                    }
                }
                b'"' => {
                    self.bump();
                    let mut text = String::new();
                    loop {
                        match self.peek() {
                            None | Some(b'\n') => {
                                return Err(Diagnostic::error(
                                    "unterminated string literal",
                                    span1(1),
                                ));
                            }
                            Some(b'"') => {
                                self.bump();
                                break;
                            }
                            Some(b'\\') => {
                                self.bump();
                                let esc = self.peek().ok_or_else(|| {
                                    Diagnostic::error("unterminated escape", span1(1))
                                })?;
                                self.bump();
                                text.push(match esc {
                                    b'"' => '"',
                                    b'\\' => '\\',
                                    b'n' => '\n',
                                    b't' => '\t',
                                    b'r' => '\r',
                                    other => {
                                        return Err(Diagnostic::error(
                                            format!("unknown escape `\\{}`", other as char),
                                            Span::new(self.line, self.col.saturating_sub(2), 2),
                                        ));
                                    }
                                });
                            }
                            Some(_) => {
                                let start = self.pos;
                                while let Some(c) = self.peek() {
                                    if c == b'"' || c == b'\\' || c == b'\n' {
                                        break;
                                    }
                                    self.bump();
                                }
                                text.push_str(
                                    std::str::from_utf8(&self.src[start..self.pos])
                                        .map_err(|_| {
                                            Diagnostic::error("invalid UTF-8 in string", span1(1))
                                        })?,
                                );
                            }
                        }
                    }
                    let len = text.chars().count() + 2;
                    Token {
                        tok: Tok::Str(text),
                        span: span1(len),
                    }
                }
                b'0'..=b'9' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if !c.is_ascii_digit() {
                            break;
                        }
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let n: i64 = text.parse().map_err(|_| {
                        Diagnostic::error(
                            format!("integer literal `{text}` out of range"),
                            span1(text.len()),
                        )
                    })?;
                    Token {
                        tok: Tok::Int(n),
                        span: span1(text.len()),
                    }
                }
                b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if !(c.is_ascii_alphanumeric() || c == b'_') {
                            break;
                        }
                        self.bump();
                    }
                    let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    Token {
                        tok: Tok::Ident(text.to_string()),
                        span: span1(text.len()),
                    }
                }
                other => {
                    return Err(Diagnostic::error(
                        format!("unexpected character `{}`", other as char),
                        span1(1),
                    ));
                }
            };
            out.push(tok);
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn new(text: &str) -> PResult<Parser> {
        Ok(Parser {
            tokens: Lexer::new(text).tokenize()?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(Diagnostic::error(
                format!("expected {}, found {}", tok.describe(), self.peek().describe()),
                self.span(),
            ))
        }
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if self.at_keyword(word) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn expect_keyword(&mut self, word: &str) -> PResult<()> {
        if self.eat_keyword(word) {
            Ok(())
        } else {
            Err(Diagnostic::error(
                format!("expected `{word}`, found {}", self.peek().describe()),
                self.span(),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(Diagnostic::error(
                format!("expected {what}, found {}", other.describe()),
                self.span(),
            )),
        }
    }

    fn string(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(Diagnostic::error(
                format!("expected {what}, found {}", other.describe()),
                self.span(),
            )),
        }
    }

    // ----- includes -----

    fn parse_includes(&mut self) -> PResult<Vec<Include>> {
        let mut includes = Vec::new();
        while self.at_keyword("include") {
            let span = self.span();
            self.bump();
            let mut functions = vec![self.ident("function name")?];
            while *self.peek() == Tok::Comma {
                self.bump();
                functions.push(self.ident("function name")?);
            }
            self.expect_keyword("from")?;
            let location = self.string("service location")?;
            self.expect_keyword("with")?;
            let protocol = self.string("protocol name")?;
            if functions.is_empty() {
                return Err(Diagnostic::error("include declares no functions", span));
            }
            includes.push(Include {
                functions,
                location,
                protocol,
            });
        }
        // One function must not resolve to two different locations.
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for inc in &includes {
            for f in &inc.functions {
                if let Some(prev) = seen.insert(f, &inc.location) {
                    if prev != inc.location {
                        return Err(Diagnostic::error(
                            format!("function `{f}` declared at two locations"),
                            Span::whole_input(),
                        ));
                    }
                }
            }
        }
        Ok(includes)
    }

    // ----- programs -----

    fn parse_program(&mut self) -> PResult<Program> {
        let includes = self.parse_includes()?;

        self.expect_keyword("preamble")?;
        self.expect(Tok::LBrace)?;
        let mut starter: Option<String> = None;
        let mut preamble_extra = Vec::new();
        while *self.peek() != Tok::RBrace {
            let key_span = self.span();
            let key = self.ident("preamble key")?;
            self.expect(Tok::Colon)?;
            let value = self.ident("preamble value")?;
            if key == "starter" {
                if starter.is_some() {
                    return Err(Diagnostic::error("duplicate starter declaration", key_span));
                }
                starter = Some(value);
            } else {
                preamble_extra.push((key, value));
            }
        }
        self.expect(Tok::RBrace)?;
        let starter = starter.ok_or_else(|| {
            Diagnostic::error("preamble is missing the starter declaration", Span::whole_input())
        })?;

        self.expect_keyword("aioc")?;
        let body = self.parse_block()?;

        if self.at_keyword("include") {
            return Err(Diagnostic::error(
                "include is only allowed before the preamble, not after the aioc block",
                self.span(),
            ));
        }
        if *self.peek() != Tok::Eof {
            return Err(Diagnostic::error(
                format!("expected end of input, found {}", self.peek().describe()),
                self.span(),
            ));
        }

        Ok(Program {
            includes,
            starter,
            preamble_extra,
            body,
        })
    }

    fn parse_block(&mut self) -> PResult<ChorStmt> {
        self.expect(Tok::LBrace)?;
        let chor = self.parse_chor()?;
        self.expect(Tok::RBrace)?;
        Ok(chor)
    }

    fn parse_chor(&mut self) -> PResult<ChorStmt> {
        let mut items = vec![self.parse_parunit()?];
        while *self.peek() == Tok::Semi {
            self.bump();
            if *self.peek() == Tok::RBrace {
                break; // trailing separator before `}`
            }
            items.push(self.parse_parunit()?);
        }
        Ok(ChorStmt::seq(items))
    }

    fn parse_parunit(&mut self) -> PResult<ChorStmt> {
        let mut items = vec![self.parse_unit()?];
        while *self.peek() == Tok::Pipe {
            self.bump();
            items.push(self.parse_unit()?);
        }
        Ok(ChorStmt::par(items))
    }

    fn parse_unit(&mut self) -> PResult<ChorStmt> {
        if *self.peek() == Tok::LBrace {
            self.parse_block()
        } else {
            self.parse_stmt()
        }
    }

    fn parse_stmt(&mut self) -> PResult<ChorStmt> {
        if self.eat_keyword("skip") {
            return Ok(ChorStmt::Skip);
        }
        if self.at_keyword("if") {
            return self.parse_if();
        }
        if self.at_keyword("while") {
            return self.parse_while();
        }
        if self.at_keyword("scope") {
            return self.parse_scope();
        }

        let name = self.ident("statement")?;
        match self.peek() {
            Tok::Colon => {
                // interaction: label: A( expr ) -> B( var ), or A() -> B()
                self.bump();
                let sender = self.ident("sender role")?;
                self.expect(Tok::LParen)?;
                let expr = if *self.peek() == Tok::RParen {
                    None
                } else {
                    Some(self.parse_expr()?)
                };
                self.expect(Tok::RParen)?;
                self.expect(Tok::Arrow)?;
                let receiver = self.ident("receiver role")?;
                self.expect(Tok::LParen)?;
                let target = if *self.peek() == Tok::RParen {
                    None
                } else {
                    Some(self.ident("target variable")?)
                };
                self.expect(Tok::RParen)?;
                Ok(ChorStmt::Interaction {
                    label: name,
                    sender,
                    expr,
                    receiver,
                    target,
                })
            }
            Tok::At => {
                // assignment: var@A = expr
                self.bump();
                let owner = self.ident("owner role")?;
                self.expect(Tok::Assign)?;
                let expr = self.parse_expr()?;
                Ok(ChorStmt::Assign {
                    var: name,
                    owner,
                    expr,
                })
            }
            other => Err(Diagnostic::error(
                format!(
                    "expected `:` (interaction) or `@` (assignment) after `{name}`, found {}",
                    other.describe()
                ),
                self.span(),
            )),
        }
    }

    fn parse_if(&mut self) -> PResult<ChorStmt> {
        self.expect_keyword("if")?;
        self.expect(Tok::LParen)?;
        let cond = self.parse_expr()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::At)?;
        let controller = self.ident("controller role")?;
        let then_branch = Box::new(self.parse_block()?);
        let else_branch = if self.eat_keyword("else") {
            Some(Box::new(self.parse_block()?))
        } else {
            None
        };
        Ok(ChorStmt::If {
            cond,
            controller,
            then_branch,
            else_branch,
        })
    }

    fn parse_while(&mut self) -> PResult<ChorStmt> {
        self.expect_keyword("while")?;
        self.expect(Tok::LParen)?;
        let cond = self.parse_expr()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::At)?;
        let controller = self.ident("controller role")?;
        let body = Box::new(self.parse_block()?);
        Ok(ChorStmt::While {
            cond,
            controller,
            body,
        })
    }

    fn parse_scope(&mut self) -> PResult<ChorStmt> {
        self.expect_keyword("scope")?;
        self.expect(Tok::At)?;
        let controller = self.ident("controller role")?;
        let body = Box::new(self.parse_block()?);

        let mut props = BTreeMap::new();
        if self.eat_keyword("prop") {
            self.expect(Tok::LBrace)?;
            loop {
                let span = self.span();
                let prefix = self.ident("scope property (N.name)")?;
                if prefix != "N" {
                    return Err(Diagnostic::error(
                        format!("scope properties use the N prefix, found `{prefix}`"),
                        span,
                    ));
                }
                self.expect(Tok::Dot)?;
                let name = self.ident("property name")?;
                self.expect(Tok::Assign)?;
                let value = self.parse_literal()?;
                if props.insert(name.clone(), value).is_some() {
                    return Err(Diagnostic::error(
                        format!("property `{name}` assigned twice"),
                        span,
                    ));
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }

        let mut extra_roles = std::collections::BTreeSet::new();
        if self.eat_keyword("roles") {
            self.expect(Tok::LBrace)?;
            loop {
                extra_roles.insert(self.ident("role name")?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }

        Ok(ChorStmt::Scope {
            controller,
            body,
            props,
            extra_roles,
        })
    }

    fn parse_literal(&mut self) -> PResult<Value> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Value::Int(n))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Value::Int(-n))
                    }
                    other => Err(Diagnostic::error(
                        format!("expected integer after `-`, found {}", other.describe()),
                        self.span(),
                    )),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(s))
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Value::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Value::Bool(false))
            }
            other => Err(Diagnostic::error(
                format!("expected literal, found {}", other.describe()),
                span,
            )),
        }
    }

    // ----- expressions -----

    fn parse_expr(&mut self) -> PResult<Expr> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> PResult<Expr> {
        let mut left = self.parse_and()?;
        while self.at_keyword("or") {
            self.bump();
            let right = self.parse_and()?;
            left = Expr::bin(BinOp::Or, left, right);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> PResult<Expr> {
        let mut left = self.parse_not()?;
        while self.at_keyword("and") {
            self.bump();
            let right = self.parse_not()?;
            left = Expr::bin(BinOp::And, left, right);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> PResult<Expr> {
        if self.at_keyword("not") {
            self.bump();
            let inner = self.parse_not()?;
            Ok(Expr::Not {
                inner: Box::new(inner),
            })
        } else {
            self.parse_comparison()
        }
    }

    fn parse_comparison(&mut self) -> PResult<Expr> {
        let left = self.parse_additive()?;
        let op = match self.peek() {
            Tok::EqEq => Some(BinOp::Eq),
            Tok::NotEq => Some(BinOp::Ne),
            Tok::Lt => Some(BinOp::Lt),
            Tok::Le => Some(BinOp::Le),
            Tok::Gt => Some(BinOp::Gt),
            Tok::Ge => Some(BinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let right = self.parse_additive()?;
            Ok(Expr::bin(op, left, right))
        } else {
            Ok(left)
        }
    }

    fn parse_additive(&mut self) -> PResult<Expr> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let right = self.parse_multiplicative()?;
            left = Expr::bin(op, left, right);
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.parse_primary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let right = self.parse_primary()?;
            left = Expr::bin(op, left, right);
        }
        Ok(left)
    }

    fn parse_primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::lit(Value::Int(n)))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(Expr::lit(Value::Int(-n)))
                    }
                    other => Err(Diagnostic::error(
                        format!("expected integer after `-`, found {}", other.describe()),
                        self.span(),
                    )),
                }
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::lit(Value::Str(s)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::lit(Value::Bool(true))),
                    "false" => return Ok(Expr::lit(Value::Bool(false))),
                    _ => {}
                }
                if (name == "E" || name == "N") && *self.peek() == Tok::Dot {
                    self.bump();
                    let prop = self.ident("property name")?;
                    return Ok(if name == "E" {
                        Expr::EnvRef { name: prop }
                    } else {
                        Expr::PropRef { name: prop }
                    });
                }
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.parse_expr()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.parse_expr()?);
                        }
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Call {
                        function: name,
                        args,
                    });
                }
                Ok(Expr::var(name))
            }
            other => Err(Diagnostic::error(
                format!("expected expression, found {}", other.describe()),
                span,
            )),
        }
    }

    // ----- rules -----

    fn parse_rules(&mut self) -> PResult<Vec<RuleDef>> {
        let mut rules = Vec::new();
        while *self.peek() != Tok::Eof {
            rules.push(self.parse_rule(rules.len())?);
        }
        Ok(rules)
    }

    fn parse_rule(&mut self, source_order: usize) -> PResult<RuleDef> {
        self.expect_keyword("rule")?;
        self.expect(Tok::LBrace)?;
        let includes = self.parse_includes()?;

        let mut new_roles = std::collections::BTreeSet::new();
        if self.at_keyword("newRoles") {
            self.bump();
            self.expect(Tok::Colon)?;
            new_roles.insert(self.ident("role name")?);
            while *self.peek() == Tok::Comma {
                self.bump();
                new_roles.insert(self.ident("role name")?);
            }
        }

        if !self.at_keyword("on") {
            return Err(Diagnostic::error(
                format!("rule is missing its `on` condition, found {}", self.peek().describe()),
                self.span(),
            ));
        }
        self.bump();
        self.expect(Tok::LBrace)?;
        let condition = self.parse_expr()?;
        self.expect(Tok::RBrace)?;

        if !self.at_keyword("do") {
            return Err(Diagnostic::error(
                format!("rule is missing its `do` body, found {}", self.peek().describe()),
                self.span(),
            ));
        }
        self.bump();
        let body = self.parse_block()?;
        self.expect(Tok::RBrace)?;

        // A new role that shadows a scope property name in the body is a
        // mistake waiting to happen; reject it up front.
        for (_, stmt) in body.walk() {
            if let ChorStmt::Scope { props, .. } = stmt {
                for prop in props.keys() {
                    if new_roles.contains(prop) {
                        return Err(Diagnostic::error(
                            format!("newRoles lists `{prop}`, which is also used as a property name"),
                            Span::whole_input(),
                        ));
                    }
                }
            }
        }

        Ok(RuleDef {
            includes,
            new_roles,
            condition,
            body,
            source_order,
        })
    }
}

/// Parse a `.chor` file.
pub fn parse_program(text: &str) -> Result<Program, Vec<Diagnostic>> {
    let run = || -> PResult<Program> { Parser::new(text)?.parse_program() };
    run().map_err(|d| vec![d])
}

/// Parse a `.rules` repository file. An empty file parses to an empty list;
/// whether that is acceptable is the repository's concern.
pub fn parse_rules(text: &str) -> Result<Vec<RuleDef>, Vec<Diagnostic>> {
    let run = || -> PResult<Vec<RuleDef>> { Parser::new(text)?.parse_rules() };
    run().map_err(|d| vec![d])
}

/// Parse a standalone expression, used by condition-handling tests and tools.
pub fn parse_expr_text(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let run = || -> PResult<Expr> {
        let mut p = Parser::new(text)?;
        let e = p.parse_expr()?;
        if *p.peek() != Tok::Eof {
            return Err(Diagnostic::error(
                format!("expected end of input, found {}", p.peek().describe()),
                p.span(),
            ));
        }
        Ok(e)
    };
    run().map_err(|d| vec![d])
}
