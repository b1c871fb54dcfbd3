//! The per-role executor state machine, shared by the simulator and the
//! socket transport. An executor owns its store and inbox; everything that
//! crosses role boundaries goes through a [`TaskCtx`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::{Role, RoleSet};
use crate::endpoint::{Action, TAG_CONTINUE, TAG_ELSE, TAG_EXIT, TAG_THEN};
use crate::expr::{EvalEffects, EvalError, Expr};
use crate::project::scope_label;
use crate::runtime::{AbortKind, AbortReason, EventKind, Inbox, Store};
use crate::value::Value;

/// Everything a deciding coordinator needs to apply a matched rule. Produced
/// by the adaptation query; consumed when the new roles can actually start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApplyPlan {
    pub scope_id: String,
    pub rule_id: String,
    pub new_roles: RoleSet,
    pub code: BTreeMap<Role, Action>,
    /// Function name to service location, for delivered code that calls
    /// functions the receiving role has never heard of.
    pub services: BTreeMap<String, String>,
    pub involved: RoleSet,
}

/// Verdict of an adaptation query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdaptDecision {
    /// No rule applies: run the original body everywhere.
    Original,
    /// A rule applies and its new roles are free to spawn now.
    Apply(Box<ApplyPlan>),
    /// A rule applies but some new role name is still alive; the plan waits.
    Defer(Box<ApplyPlan>),
}

/// Cross-role effects available to a stepping executor.
pub trait TaskCtx {
    fn self_role(&self) -> &str;
    fn send(&mut self, to: &str, label: &str, payload: Value) -> Result<(), AbortReason>;
    fn invoke_service(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError>;
    fn next_input(&mut self, prompt: &str) -> Option<Value>;
    /// Run the adaptation protocol for a scope entry: snapshot, query, and
    /// decide. Records the adaptQuery and ruleApplied/noRule events.
    fn adapt(
        &mut self,
        scope_id: &str,
        props: &BTreeMap<String, Value>,
        locals: &Store,
        involved: &RoleSet,
    ) -> Result<AdaptDecision, AbortReason>;
    /// Whether all of `roles` are currently free to spawn.
    fn can_spawn(&self, roles: &RoleSet) -> bool;
    fn spawn(&mut self, role: &str, code: Action) -> Result<(), AbortReason>;
    /// Called when a directive is consumed; the wire transport merges peer
    /// addresses and service locations carried alongside the code.
    fn note_directive(&mut self, _payload: &Value) {}
    fn trace(
        &mut self,
        kind: EventKind,
        role: &str,
        label: Option<&str>,
        rule_id: Option<&str>,
        detail: Option<Value>,
    );
}

/// The running shape of an endpoint program. Composite actions unfold into
/// frames; atomic actions stay pending until stepped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Pending(Action),
    InSeq {
        items: Vec<Action>,
        idx: usize,
        cur: Box<Task>,
    },
    InPar {
        branches: Vec<Task>,
    },
    /// Controller mid-iteration of a while loop.
    InLoop {
        cond: Expr,
        aux: String,
        notify: Vec<Role>,
        body: Action,
        cur: Box<Task>,
    },
    /// Loop participant mid-iteration.
    InLoopRecv {
        aux: String,
        from: Role,
        body: Action,
        cur: Box<Task>,
    },
    /// Coordinator with a matched rule waiting for its new roles to be free.
    AwaitApply(Box<ApplyPlan>),
    Done,
}

impl Task {
    pub fn new(action: Action) -> Task {
        match action {
            Action::Noop => Task::Done,
            Action::Seq { items } => {
                if items.is_empty() {
                    Task::Done
                } else {
                    let cur = Box::new(Task::new(items[0].clone()));
                    normalize(Task::InSeq { items, idx: 0, cur })
                }
            }
            Action::Par { items } => normalize(Task::InPar {
                branches: items.into_iter().map(Task::new).collect(),
            }),
            atomic => Task::Pending(atomic),
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self, Task::Done)
    }
}

/// Collapse finished frames upward.
fn normalize(task: Task) -> Task {
    match task {
        Task::InSeq {
            items,
            mut idx,
            mut cur,
        } => {
            while cur.is_done() {
                idx += 1;
                if idx >= items.len() {
                    return Task::Done;
                }
                cur = Box::new(Task::new(items[idx].clone()));
            }
            Task::InSeq { items, idx, cur }
        }
        Task::InPar { branches } => {
            if branches.iter().all(Task::is_done) {
                Task::Done
            } else {
                Task::InPar { branches }
            }
        }
        Task::InLoop {
            cond,
            aux,
            notify,
            body,
            cur,
        } => {
            if cur.is_done() {
                Task::Pending(Action::While {
                    cond,
                    aux,
                    notify,
                    items: Box::new(body),
                })
            } else {
                Task::InLoop {
                    cond,
                    aux,
                    notify,
                    body,
                    cur,
                }
            }
        }
        Task::InLoopRecv {
            aux,
            from,
            body,
            cur,
        } => {
            if cur.is_done() {
                Task::Pending(Action::LoopRecv {
                    aux,
                    from,
                    items: Box::new(body),
                })
            } else {
                Task::InLoopRecv {
                    aux,
                    from,
                    body,
                    cur,
                }
            }
        }
        other => other,
    }
}

/// What a leaf needs before it can step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeafNeed {
    Ready,
    Head { from: Role, label: String },
    Spawn(RoleSet),
}

pub fn collect_leaves(task: &Task, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, LeafNeed)>) {
    match task {
        Task::Done => {}
        Task::Pending(action) => {
            let need = match action {
                Action::Recv { label, from, .. } => LeafNeed::Head {
                    from: from.clone(),
                    label: label.clone(),
                },
                Action::BranchRecv { aux, from, .. } | Action::LoopRecv { aux, from, .. } => {
                    LeafNeed::Head {
                        from: from.clone(),
                        label: aux.clone(),
                    }
                }
                Action::ScopeWait {
                    scope_id,
                    coordinator,
                    ..
                } => LeafNeed::Head {
                    from: coordinator.clone(),
                    label: scope_label(scope_id),
                },
                _ => LeafNeed::Ready,
            };
            out.push((path.clone(), need));
        }
        Task::InSeq { cur, .. }
        | Task::InLoop { cur, .. }
        | Task::InLoopRecv { cur, .. } => {
            path.push(0);
            collect_leaves(cur, path, out);
            path.pop();
        }
        Task::InPar { branches } => {
            for (i, b) in branches.iter().enumerate() {
                path.push(i);
                collect_leaves(b, path, out);
                path.pop();
            }
        }
        Task::AwaitApply(plan) => {
            out.push((path.clone(), LeafNeed::Spawn(plan.new_roles.clone())));
        }
    }
}

/// Rendezvous state around the endpoint program proper.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// Non-starter: contact the starter.
    HelloSend { starter: Role },
    /// Non-starter: wait for the go-ahead.
    AwaitStart { starter: Role },
    /// Starter: collect hello from each peer, in canonical order.
    Gather { pending: Vec<Role>, peers: Vec<Role> },
    /// Starter: notify each peer it can start.
    Announce { pending: Vec<Role> },
    Running,
}

pub const HELLO_LABEL: &str = "#hello";
pub const START_LABEL: &str = "#start";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Executor {
    pub role: Role,
    pub store: Store,
    pub inbox: Inbox,
    pub task: Task,
    pub phase: Phase,
}

impl Executor {
    /// A static participant that joins the startup rendezvous.
    pub fn for_program(role: &str, code: Action, starter: &str, all_roles: &RoleSet) -> Executor {
        let phase = if role == starter {
            let peers: Vec<Role> = all_roles.iter().filter(|r| *r != starter).cloned().collect();
            if peers.is_empty() {
                Phase::Running
            } else {
                Phase::Gather {
                    pending: peers.clone(),
                    peers,
                }
            }
        } else {
            Phase::HelloSend {
                starter: starter.to_string(),
            }
        };
        Executor {
            role: role.to_string(),
            store: Store::new(),
            inbox: Inbox::default(),
            task: Task::new(code),
            phase,
        }
    }

    /// A role born mid-run by an adaptation; skips the rendezvous.
    pub fn spawned(role: &str, code: Action) -> Executor {
        Executor {
            role: role.to_string(),
            store: Store::new(),
            inbox: Inbox::default(),
            task: Task::new(code),
            phase: Phase::Running,
        }
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Running) && self.task.is_done()
    }

    /// Runnable leaf paths in canonical order, or a protocol error when a
    /// queue head can never be consumed. `can_spawn` answers whether a set of
    /// new role names is currently free.
    pub fn runnable(
        &self,
        can_spawn: &dyn Fn(&RoleSet) -> bool,
    ) -> Result<Vec<Vec<usize>>, AbortReason> {
        match &self.phase {
            Phase::HelloSend { .. } | Phase::Announce { .. } => Ok(vec![Vec::new()]),
            Phase::AwaitStart { starter } => {
                Ok(match self.inbox.head(starter) {
                    Some(env) if env.label == START_LABEL => vec![Vec::new()],
                    Some(env) => {
                        return Err(self.head_mismatch(starter, START_LABEL, &env.label));
                    }
                    None => Vec::new(),
                })
            }
            Phase::Gather { pending, .. } => {
                let next = &pending[0];
                Ok(match self.inbox.head(next) {
                    Some(env) if env.label == HELLO_LABEL => vec![Vec::new()],
                    Some(env) => {
                        return Err(self.head_mismatch(next, HELLO_LABEL, &env.label));
                    }
                    None => Vec::new(),
                })
            }
            Phase::Running => {
                let mut leaves = Vec::new();
                collect_leaves(&self.task, &mut Vec::new(), &mut leaves);
                // Labels currently wanted from each sender.
                let mut wanted: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
                for (_, need) in &leaves {
                    if let LeafNeed::Head { from, label } = need {
                        wanted.entry(from).or_default().push(label);
                    }
                }
                // A queue head we wait on but can never consume is a wiring
                // bug in delivered code or projection; fail loudly.
                for head in self.inbox.heads() {
                    if let Some(labels) = wanted.get(head.from.as_str()) {
                        if !labels.iter().any(|l| *l == head.label) {
                            return Err(self.head_mismatch(
                                &head.from,
                                &labels.join("|"),
                                &head.label,
                            ));
                        }
                    }
                }
                Ok(leaves
                    .into_iter()
                    .filter(|(_, need)| match need {
                        LeafNeed::Ready => true,
                        LeafNeed::Head { from, label } => self
                            .inbox
                            .head(from)
                            .is_some_and(|env| env.label == *label),
                        LeafNeed::Spawn(roles) => can_spawn(roles),
                    })
                    .map(|(path, _)| path)
                    .collect())
            }
        }
    }

    fn head_mismatch(&self, from: &str, wanted: &str, got: &str) -> AbortReason {
        AbortReason::new(
            AbortKind::ProtocolError,
            &self.role,
            format!("waiting for `{wanted}` from {from} but the queue head is `{got}`"),
        )
    }

    /// Perform one step at the given leaf path.
    pub fn step(&mut self, path: &[usize], ctx: &mut dyn TaskCtx) -> Result<(), AbortReason> {
        match std::mem::replace(&mut self.phase, Phase::Running) {
            Phase::HelloSend { starter } => {
                ctx.trace(EventKind::Send, &self.role, Some(HELLO_LABEL), None, None);
                ctx.send(&starter, HELLO_LABEL, Value::Str(self.role.clone()))?;
                self.phase = Phase::AwaitStart { starter };
                Ok(())
            }
            Phase::AwaitStart { starter } => {
                self.inbox.pop(&starter);
                ctx.trace(EventKind::Recv, &self.role, Some(START_LABEL), None, None);
                self.phase = Phase::Running;
                Ok(())
            }
            Phase::Gather { mut pending, peers } => {
                let from = pending.remove(0);
                self.inbox.pop(&from);
                ctx.trace(EventKind::Recv, &self.role, Some(HELLO_LABEL), None, None);
                self.phase = if pending.is_empty() {
                    Phase::Announce { pending: peers }
                } else {
                    Phase::Gather { pending, peers }
                };
                Ok(())
            }
            Phase::Announce { mut pending } => {
                let to = pending.remove(0);
                ctx.trace(EventKind::Send, &self.role, Some(START_LABEL), None, None);
                ctx.send(&to, START_LABEL, Value::Str("start".to_string()))?;
                self.phase = if pending.is_empty() {
                    Phase::Running
                } else {
                    Phase::Announce { pending }
                };
                Ok(())
            }
            Phase::Running => {
                let mut task = std::mem::replace(&mut self.task, Task::Done);
                let result = step_at(
                    &mut task,
                    path,
                    &self.role,
                    &mut self.store,
                    &mut self.inbox,
                    ctx,
                );
                self.task = normalize_path(task);
                result
            }
        }
    }
}

/// Re-normalize along the whole tree after a step. Trees are shallow, so the
/// full pass is cheap and keeps the logic in one place.
fn normalize_path(task: Task) -> Task {
    let task = match task {
        Task::InSeq { items, idx, cur } => {
            let cur = Box::new(normalize_path(*cur));
            normalize(Task::InSeq { items, idx, cur })
        }
        Task::InPar { branches } => normalize(Task::InPar {
            branches: branches.into_iter().map(normalize_path).collect(),
        }),
        Task::InLoop {
            cond,
            aux,
            notify,
            body,
            cur,
        } => {
            let cur = Box::new(normalize_path(*cur));
            normalize(Task::InLoop {
                cond,
                aux,
                notify,
                body,
                cur,
            })
        }
        Task::InLoopRecv {
            aux,
            from,
            body,
            cur,
        } => {
            let cur = Box::new(normalize_path(*cur));
            normalize(Task::InLoopRecv {
                aux,
                from,
                body,
                cur,
            })
        }
        other => other,
    };
    normalize(task)
}

fn step_at(
    task: &mut Task,
    path: &[usize],
    role: &str,
    store: &mut Store,
    inbox: &mut Inbox,
    ctx: &mut dyn TaskCtx,
) -> Result<(), AbortReason> {
    match task {
        Task::InSeq { cur, .. } | Task::InLoop { cur, .. } | Task::InLoopRecv { cur, .. } => {
            debug_assert_eq!(path.first(), Some(&0));
            step_at(cur, &path[1..], role, store, inbox, ctx)
        }
        Task::InPar { branches } => {
            let idx = *path.first().expect("par step needs a branch index");
            step_at(&mut branches[idx], &path[1..], role, store, inbox, ctx)
        }
        Task::Pending(_) | Task::AwaitApply(_) => {
            debug_assert!(path.is_empty());
            let current = std::mem::replace(task, Task::Done);
            *task = step_leaf(current, role, store, inbox, ctx)?;
            Ok(())
        }
        Task::Done => unreachable!("cannot step a finished task"),
    }
}

/// Adapter exposing the ctx to the expression evaluator, tracing every
/// service call on the way through.
struct CtxEffects<'a> {
    ctx: &'a mut dyn TaskCtx,
    role: &'a str,
}

impl EvalEffects for CtxEffects<'_> {
    fn invoke(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
        self.ctx.trace(
            EventKind::ServiceCall,
            self.role,
            None,
            None,
            Some(Value::Record(
                [
                    ("name".to_string(), Value::Str(name.to_string())),
                    ("args".to_string(), Value::List(args.to_vec())),
                ]
                .into(),
            )),
        );
        self.ctx.invoke_service(name, args)
    }

    fn next_input(&mut self, prompt: &str) -> Option<Value> {
        self.ctx.next_input(prompt)
    }
}

fn eval(
    expr: &Expr,
    role: &str,
    store: &Store,
    ctx: &mut dyn TaskCtx,
) -> Result<Value, AbortReason> {
    let mut effects = CtxEffects { ctx, role };
    let mut scope = crate::expr::EvalScope {
        locals: store,
        props: None,
        env: None,
        effects: Some(&mut effects),
    };
    crate::expr::eval_in(expr, &mut scope).map_err(|e| abort_of_eval(role, e))
}

fn abort_of_eval(role: &str, err: EvalError) -> AbortReason {
    let kind = match &err {
        EvalError::ServiceFailure { .. } | EvalError::UnknownFunction(_) => {
            AbortKind::ServiceFailure
        }
        EvalError::InputUnderrun(_) => AbortKind::InputUnderrun,
        _ => AbortKind::Evaluation,
    };
    AbortReason::new(kind, role, err.to_string())
}

fn eval_bool(
    expr: &Expr,
    role: &str,
    store: &Store,
    ctx: &mut dyn TaskCtx,
) -> Result<bool, AbortReason> {
    match eval(expr, role, store, ctx)? {
        Value::Bool(b) => Ok(b),
        other => Err(AbortReason::new(
            AbortKind::Evaluation,
            role,
            format!("condition evaluated to {} instead of a boolean", other.type_name()),
        )),
    }
}

fn step_leaf(
    task: Task,
    role: &str,
    store: &mut Store,
    inbox: &mut Inbox,
    ctx: &mut dyn TaskCtx,
) -> Result<Task, AbortReason> {
    let action = match task {
        Task::Pending(a) => a,
        Task::AwaitApply(plan) => return apply_plan(*plan, role, ctx),
        other => unreachable!("not a leaf: {other:?}"),
    };
    match action {
        Action::Send { label, to, expr } => {
            let payload = eval(&expr, role, store, ctx)?;
            ctx.trace(
                EventKind::Send,
                role,
                Some(&label),
                None,
                Some(Value::record([("to", Value::Str(to.clone()))])),
            );
            ctx.send(&to, &label, payload)?;
            Ok(Task::Done)
        }
        Action::Recv { label, from, var } => {
            let envelope = inbox.pop(&from).expect("recv stepped without a head");
            debug_assert_eq!(envelope.label, label);
            ctx.trace(
                EventKind::Recv,
                role,
                Some(&label),
                None,
                Some(Value::record([("from", Value::Str(from.clone()))])),
            );
            if let Some(var) = var {
                store.insert(var, envelope.payload);
            }
            Ok(Task::Done)
        }
        Action::Assign { var, expr } => {
            let value = eval(&expr, role, store, ctx)?;
            ctx.trace(
                EventKind::Assign,
                role,
                None,
                None,
                Some(Value::record([
                    ("var", Value::Str(var.clone())),
                    ("value", value.clone()),
                ])),
            );
            store.insert(var, value);
            Ok(Task::Done)
        }
        Action::If {
            cond,
            aux,
            notify,
            then,
            otherwise,
        } => {
            let taken = eval_bool(&cond, role, store, ctx)?;
            let tag = if taken { TAG_THEN } else { TAG_ELSE };
            for to in &notify {
                ctx.trace(EventKind::Send, role, Some(&aux), None, None);
                ctx.send(to, &aux, Value::Str(tag.to_string()))?;
            }
            Ok(Task::new(if taken { *then } else { *otherwise }))
        }
        Action::BranchRecv { aux, from, branches } => {
            let envelope = inbox.pop(&from).expect("branch recv stepped without a head");
            ctx.trace(EventKind::Recv, role, Some(&aux), None, None);
            let tag = envelope.payload.as_str().unwrap_or_default().to_string();
            match branches.get(&tag) {
                Some(branch) => Ok(Task::new(branch.clone())),
                None => Err(AbortReason::new(
                    AbortKind::ProtocolError,
                    role,
                    format!("unknown branch tag `{tag}` on {aux}"),
                )),
            }
        }
        Action::While {
            cond,
            aux,
            notify,
            items,
        } => {
            let again = eval_bool(&cond, role, store, ctx)?;
            let tag = if again { TAG_CONTINUE } else { TAG_EXIT };
            for to in &notify {
                ctx.trace(EventKind::Send, role, Some(&aux), None, None);
                ctx.send(to, &aux, Value::Str(tag.to_string()))?;
            }
            if again {
                Ok(normalize(Task::InLoop {
                    cond,
                    aux,
                    notify,
                    body: (*items).clone(),
                    cur: Box::new(Task::new(*items)),
                }))
            } else {
                Ok(Task::Done)
            }
        }
        Action::LoopRecv { aux, from, items } => {
            let envelope = inbox.pop(&from).expect("loop recv stepped without a head");
            ctx.trace(EventKind::Recv, role, Some(&aux), None, None);
            match envelope.payload.as_str() {
                Some(TAG_CONTINUE) => Ok(normalize(Task::InLoopRecv {
                    aux,
                    from,
                    body: (*items).clone(),
                    cur: Box::new(Task::new(*items)),
                })),
                Some(TAG_EXIT) => Ok(Task::Done),
                other => Err(AbortReason::new(
                    AbortKind::ProtocolError,
                    role,
                    format!("unknown loop tag `{other:?}` on {aux}"),
                )),
            }
        }
        Action::ScopeCoord {
            scope_id,
            props,
            involved,
            original,
        } => {
            let locals = store.clone();
            match ctx.adapt(&scope_id, &props, &locals, &involved)? {
                AdaptDecision::Original => {
                    let payload = Value::record([("directive", Value::str("original"))]);
                    for to in involved.iter().filter(|r| r.as_str() != role) {
                        ctx.trace(EventKind::Send, role, Some(&scope_label(&scope_id)), None, None);
                        ctx.send(to, &scope_label(&scope_id), payload.clone())?;
                    }
                    Ok(Task::new(*original))
                }
                AdaptDecision::Apply(plan) => apply_plan(*plan, role, ctx),
                AdaptDecision::Defer(plan) => Ok(Task::AwaitApply(plan)),
            }
        }
        Action::ScopeWait {
            scope_id,
            coordinator,
            original,
        } => {
            let envelope = inbox
                .pop(&coordinator)
                .expect("scope wait stepped without a directive");
            ctx.trace(EventKind::Recv, role, Some(&scope_label(&scope_id)), None, None);
            let directive = envelope
                .payload
                .field("directive")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            match directive.as_str() {
                "original" => Ok(Task::new(*original)),
                "apply" => {
                    ctx.note_directive(&envelope.payload);
                    match envelope.payload.field("code").and_then(Value::as_str) {
                        Some(code_json) => {
                            let code = Action::from_json(code_json).map_err(|e| {
                                AbortReason::new(
                                    AbortKind::ProtocolError,
                                    role,
                                    format!("undecodable directive code: {e}"),
                                )
                            })?;
                            Ok(Task::new(code))
                        }
                        None => Ok(Task::Done),
                    }
                }
                other => Err(AbortReason::new(
                    AbortKind::ProtocolError,
                    role,
                    format!("unknown directive `{other}` for scope {scope_id}"),
                )),
            }
        }
        Action::Noop | Action::Seq { .. } | Action::Par { .. } => {
            unreachable!("composite actions never sit at a leaf")
        }
    }
}

/// Spawn the plan's new roles, distribute code to the involved roles, and
/// hand the coordinator its own share.
fn apply_plan(plan: ApplyPlan, role: &str, ctx: &mut dyn TaskCtx) -> Result<Task, AbortReason> {
    for new_role in &plan.new_roles {
        let code = plan.code.get(new_role).cloned().unwrap_or(Action::Noop);
        ctx.trace(
            EventKind::RoleSpawned,
            new_role,
            None,
            Some(&plan.rule_id),
            Some(Value::record([("by", Value::Str(role.to_string()))])),
        );
        ctx.spawn(new_role, code)?;
    }
    let label = scope_label(&plan.scope_id);
    for to in plan.involved.iter().filter(|r| r.as_str() != role) {
        let code = plan.code.get(to).cloned().unwrap_or(Action::Noop);
        let mut payload: BTreeMap<String, Value> = [
            ("directive".to_string(), Value::str("apply")),
            ("ruleId".to_string(), Value::Str(plan.rule_id.clone())),
            ("code".to_string(), Value::Str(code.to_json())),
        ]
        .into();
        if !plan.services.is_empty() {
            payload.insert(
                "services".to_string(),
                Value::Record(
                    plan.services
                        .iter()
                        .map(|(k, v)| (k.clone(), Value::Str(v.clone())))
                        .collect(),
                ),
            );
        }
        ctx.trace(EventKind::Send, role, Some(&label), None, None);
        ctx.send(to, &label, Value::Record(payload))?;
    }
    let own = plan.code.get(role).cloned().unwrap_or(Action::Noop);
    Ok(Task::new(own))
}
