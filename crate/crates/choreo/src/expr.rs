//! Expressions and their evaluation against a role's variable store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

pub const INPUT_BUILTIN: &str = "getInput";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "camelCase")]
pub enum Expr {
    Lit { value: Value },
    Var { name: String },
    /// `E.name`: environment property, legal only in rule conditions.
    EnvRef { name: String },
    /// `N.name`: scope property, legal only in rule conditions.
    PropRef { name: String },
    Call { function: String, args: Vec<Expr> },
    Not { inner: Box<Expr> },
    Bin { op: BinOp, left: Box<Expr>, right: Box<Expr> },
}

impl Expr {
    pub fn lit(v: Value) -> Expr {
        Expr::Lit { value: v }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var { name: name.into() }
    }

    pub fn bin(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::Bin {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// All variable names read by this expression (not env/prop refs).
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var { name } = e {
                out.push(name.as_str());
            }
        });
        out
    }

    /// All function names called by this expression.
    pub fn calls(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Call { function, .. } = e {
                out.push(function.as_str());
            }
        });
        out
    }

    pub fn has_env_or_prop_refs(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::EnvRef { .. } | Expr::PropRef { .. }) {
                found = true;
            }
        });
        found
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Call { args, .. } => {
                for a in args {
                    a.walk(f);
                }
            }
            Expr::Not { inner } => inner.walk(f),
            Expr::Bin { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Expr::Lit { .. } | Expr::Var { .. } | Expr::EnvRef { .. } | Expr::PropRef { .. } => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("undefined variable {0}")]
    UndefinedVariable(String),
    #[error("undefined environment property {0}")]
    UndefinedEnv(String),
    #[error("undefined scope property {0}")]
    UndefinedProp(String),
    #[error("environment or scope property reference outside a rule condition")]
    RefOutsideCondition,
    #[error("type error: operator {op} expects {expected}, got {got}")]
    TypeError {
        op: String,
        expected: String,
        got: String,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("service {service} failed: {message}")]
    ServiceFailure { service: String, message: String },
    #[error("call to undeclared function {0}")]
    UnknownFunction(String),
    #[error("input script exhausted at prompt {0:?}")]
    InputUnderrun(String),
}

/// Dispatches declared function calls to their handlers.
pub trait ServiceBackend {
    fn invoke(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError>;
}

/// Supplies values for the `getInput` builtin.
pub trait InputProvider {
    fn next_input(&mut self, prompt: &str) -> Option<Value>;
}

/// A fixed input script, consumed front to back.
#[derive(Debug, Clone, Default)]
pub struct ScriptedInput {
    values: std::collections::VecDeque<Value>,
}

impl ScriptedInput {
    pub fn new(values: impl IntoIterator<Item = Value>) -> Self {
        ScriptedInput {
            values: values.into_iter().collect(),
        }
    }

    pub fn push(&mut self, v: Value) {
        self.values.push_back(v);
    }

    pub fn remaining(&self) -> usize {
        self.values.len()
    }
}

impl InputProvider for ScriptedInput {
    fn next_input(&mut self, _prompt: &str) -> Option<Value> {
        self.values.pop_front()
    }
}

/// In-memory table of service handlers, keyed by function name.
#[derive(Default)]
pub struct ServiceRegistry {
    handlers: BTreeMap<String, Box<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>>,
}

impl ServiceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        handler: impl Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    ) {
        self.handlers.insert(name.into(), Box::new(handler));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.handlers.keys().map(|s| s.as_str())
    }

    /// Shared-access invocation; handlers are pure functions.
    pub fn call(&self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        match self.handlers.get(name) {
            Some(h) => h(args).map_err(|message| EvalError::ServiceFailure {
                service: name.to_string(),
                message,
            }),
            None => Err(EvalError::UnknownFunction(name.to_string())),
        }
    }
}

impl ServiceBackend for ServiceRegistry {
    fn invoke(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.call(name, args)
    }
}

/// Evaluate an expression against a store. Env and prop refs are errors here;
/// rule conditions go through [`crate::adapt::eval_condition`] instead.
pub fn eval_expr(
    store: &BTreeMap<String, Value>,
    expr: &Expr,
    services: &mut dyn ServiceBackend,
    input: &mut dyn InputProvider,
) -> Result<Value, EvalError> {
    let mut effects = SplitEffects { services, input };
    let mut scope = EvalScope {
        locals: store,
        props: None,
        env: None,
        effects: Some(&mut effects),
    };
    eval_in(expr, &mut scope)
}

/// The side-effecting half of evaluation: service calls and `getInput`.
pub trait EvalEffects {
    fn invoke(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError>;
    fn next_input(&mut self, prompt: &str) -> Option<Value>;
}

struct SplitEffects<'a> {
    services: &'a mut dyn ServiceBackend,
    input: &'a mut dyn InputProvider,
}

impl EvalEffects for SplitEffects<'_> {
    fn invoke(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.services.invoke(name, args)
    }

    fn next_input(&mut self, prompt: &str) -> Option<Value> {
        self.input.next_input(prompt)
    }
}

/// One evaluation context covering both plain expressions and rule conditions.
pub(crate) struct EvalScope<'a> {
    pub locals: &'a BTreeMap<String, Value>,
    pub props: Option<&'a BTreeMap<String, Value>>,
    pub env: Option<&'a BTreeMap<String, Value>>,
    pub effects: Option<&'a mut dyn EvalEffects>,
}

pub(crate) fn eval_in(expr: &Expr, scope: &mut EvalScope<'_>) -> Result<Value, EvalError> {
    match expr {
        Expr::Lit { value } => Ok(value.clone()),
        Expr::Var { name } => scope
            .locals
            .get(name)
            .cloned()
            .ok_or_else(|| EvalError::UndefinedVariable(name.clone())),
        Expr::EnvRef { name } => match scope.env {
            Some(env) => env
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UndefinedEnv(name.clone())),
            None => Err(EvalError::RefOutsideCondition),
        },
        Expr::PropRef { name } => match scope.props {
            Some(props) => props
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UndefinedProp(name.clone())),
            None => Err(EvalError::RefOutsideCondition),
        },
        Expr::Call { function, args } => {
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                values.push(eval_in(a, scope)?);
            }
            let effects = scope
                .effects
                .as_mut()
                .ok_or_else(|| EvalError::UnknownFunction(function.clone()))?;
            if function == INPUT_BUILTIN {
                let prompt = values
                    .first()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                effects
                    .next_input(&prompt)
                    .ok_or(EvalError::InputUnderrun(prompt))
            } else {
                effects.invoke(function, &values)
            }
        }
        Expr::Not { inner } => match eval_in(inner, scope)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            other => Err(EvalError::TypeError {
                op: "not".to_string(),
                expected: "bool".to_string(),
                got: other.type_name().to_string(),
            }),
        },
        Expr::Bin { op, left, right } => eval_bin(*op, left, right, scope),
    }
}

fn eval_bin(
    op: BinOp,
    left: &Expr,
    right: &Expr,
    scope: &mut EvalScope<'_>,
) -> Result<Value, EvalError> {
    // and/or short-circuit so that a defined left side can decide the result.
    if matches!(op, BinOp::And | BinOp::Or) {
        let l = expect_bool(op, eval_in(left, scope)?)?;
        return match (op, l) {
            (BinOp::And, false) => Ok(Value::Bool(false)),
            (BinOp::Or, true) => Ok(Value::Bool(true)),
            _ => expect_bool(op, eval_in(right, scope)?).map(Value::Bool),
        };
    }

    let l = eval_in(left, scope)?;
    let r = eval_in(right, scope)?;
    match op {
        BinOp::Eq => Ok(Value::Bool(l == r)),
        BinOp::Ne => Ok(Value::Bool(l != r)),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let (a, b) = expect_ints(op, &l, &r)?;
            Ok(Value::Bool(match op {
                BinOp::Lt => a < b,
                BinOp::Le => a <= b,
                BinOp::Gt => a > b,
                _ => a >= b,
            }))
        }
        BinOp::Add => match (&l, &r) {
            (Value::Int(a), Value::Int(b)) => Ok(Value::Int(a.wrapping_add(*b))),
            (Value::Str(a), Value::Str(b)) => Ok(Value::Str(format!("{a}{b}"))),
            _ => Err(type_error(op, "two ints or two strings", &l, &r)),
        },
        BinOp::Sub | BinOp::Mul => {
            let (a, b) = expect_ints(op, &l, &r)?;
            Ok(Value::Int(match op {
                BinOp::Sub => a.wrapping_sub(b),
                _ => a.wrapping_mul(b),
            }))
        }
        BinOp::Div => {
            let (a, b) = expect_ints(op, &l, &r)?;
            if b == 0 {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(Value::Int(a.wrapping_div(b)))
            }
        }
        BinOp::And | BinOp::Or => unreachable!("handled above"),
    }
}

fn expect_bool(op: BinOp, v: Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::TypeError {
        op: op.symbol().to_string(),
        expected: "bool".to_string(),
        got: v.type_name().to_string(),
    })
}

fn expect_ints(op: BinOp, l: &Value, r: &Value) -> Result<(i64, i64), EvalError> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Ok((*a, *b)),
        _ => Err(type_error(op, "two ints", l, r)),
    }
}

fn type_error(op: BinOp, expected: &str, l: &Value, r: &Value) -> EvalError {
    EvalError::TypeError {
        op: op.symbol().to_string(),
        expected: expected.to_string(),
        got: format!("{} and {}", l.type_name(), r.type_name()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    fn eval(store_pairs: &[(&str, Value)], expr: &Expr) -> Result<Value, EvalError> {
        let mut services = ServiceRegistry::new();
        services.register("echo", |args| Ok(args[0].clone()));
        let mut input = ScriptedInput::default();
        eval_expr(&store(store_pairs), expr, &mut services, &mut input)
    }

    #[test]
    fn string_concatenation() {
        let e = Expr::bin(BinOp::Add, Expr::var("a"), Expr::lit(Value::str("y")));
        assert_eq!(eval(&[("a", Value::str("x"))], &e).unwrap(), Value::str("xy"));
    }

    #[test]
    fn undefined_variable_is_named() {
        let e = Expr::bin(BinOp::Ne, Expr::var("token"), Expr::lit(Value::str("none")));
        let err = eval(&[], &e).unwrap_err();
        assert_eq!(err, EvalError::UndefinedVariable("token".to_string()));
        assert!(err.to_string().contains("undefined variable token"));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = Expr::bin(BinOp::Div, Expr::lit(Value::Int(4)), Expr::lit(Value::Int(0)));
        assert_eq!(eval(&[], &e).unwrap_err(), EvalError::DivisionByZero);
    }

    #[test]
    fn comparison_on_strings_is_a_type_error() {
        let e = Expr::bin(BinOp::Lt, Expr::lit(Value::str("a")), Expr::lit(Value::str("b")));
        assert!(matches!(eval(&[], &e), Err(EvalError::TypeError { .. })));
    }

    #[test]
    fn calls_dispatch_through_registry() {
        let e = Expr::Call {
            function: "echo".to_string(),
            args: vec![Expr::lit(Value::Int(7))],
        };
        assert_eq!(eval(&[], &e).unwrap(), Value::Int(7));
    }

    #[test]
    fn unknown_function_is_an_error() {
        let e = Expr::Call {
            function: "mystery".to_string(),
            args: vec![],
        };
        assert_eq!(
            eval(&[], &e).unwrap_err(),
            EvalError::UnknownFunction("mystery".to_string())
        );
    }

    #[test]
    fn get_input_pulls_from_script() {
        let e = Expr::Call {
            function: INPUT_BUILTIN.to_string(),
            args: vec![Expr::lit(Value::str("Insert address"))],
        };
        let mut services = ServiceRegistry::new();
        let mut input = ScriptedInput::new([Value::str("/tea/earl-gray")]);
        let v = eval_expr(&BTreeMap::new(), &e, &mut services, &mut input).unwrap();
        assert_eq!(v, Value::str("/tea/earl-gray"));
        let err = eval_expr(&BTreeMap::new(), &e, &mut services, &mut input).unwrap_err();
        assert!(matches!(err, EvalError::InputUnderrun(_)));
    }

    #[test]
    fn env_refs_are_rejected_outside_conditions() {
        let e = Expr::EnvRef {
            name: "recommender".to_string(),
        };
        assert_eq!(eval(&[], &e).unwrap_err(), EvalError::RefOutsideCondition);
    }

    #[test]
    fn and_short_circuits() {
        let e = Expr::bin(
            BinOp::And,
            Expr::lit(Value::Bool(false)),
            Expr::var("missing"),
        );
        assert_eq!(eval(&[], &e).unwrap(), Value::Bool(false));
    }
}
