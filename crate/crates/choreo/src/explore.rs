//! Bounded exhaustive exploration of projected systems, and a reference
//! interpreter that executes the global choreography directly (no
//! projection, no messages) as the equivalence oracle.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use crate::adapt::{match_rule_scoped, RuleRegistry};
use crate::ast::{ChorStmt, Program, Role, RoleSet};
use crate::endpoint::RoleCodeMap;
use crate::expr::{EvalError, Expr, ServiceRegistry};
use crate::runtime::sim::{RunConfig, RunSummary, SimState};
use crate::runtime::{AbortKind, AbortReason, EnvStore, Store};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_states: 2_000_000,
            max_depth: 10_000,
        }
    }
}

/// A deadlock found during exploration, replayable by feeding `schedule`
/// to [`crate::runtime::Scheduler::Script`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadlockReport {
    pub schedule: Vec<usize>,
    pub blocked_roles: Vec<Role>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbortRecord {
    pub schedule: Vec<usize>,
    pub reason: AbortReason,
}

#[derive(Debug, Clone, Default)]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub schedules_explored: usize,
    pub deadlocks: Vec<DeadlockReport>,
    pub aborts: Vec<AbortRecord>,
    /// Distinct final-store fingerprints of completed schedules.
    pub outcomes: BTreeSet<String>,
    /// A representative final-store map per fingerprint.
    pub outcome_stores: BTreeMap<String, BTreeMap<Role, Store>>,
    /// Distinct service-call-count profiles across completed schedules.
    pub service_profiles: BTreeSet<BTreeMap<String, usize>>,
    pub truncated: bool,
}

impl ExplorationReport {
    pub fn summary(&self) -> String {
        format!(
            "{} deadlock{}, {} outcome{} ({} states, {} schedules{})",
            self.deadlocks.len(),
            if self.deadlocks.len() == 1 { "" } else { "s" },
            self.outcomes.len(),
            if self.outcomes.len() == 1 { "" } else { "s" },
            self.states_visited,
            self.schedules_explored,
            if self.truncated { ", truncated" } else { "" },
        )
    }

    /// Distinct per-service call counts observed, e.g. for login.
    pub fn call_counts(&self, service: &str) -> BTreeSet<usize> {
        self.service_profiles
            .iter()
            .map(|p| p.get(service).copied().unwrap_or(0))
            .collect()
    }
}

pub fn fingerprint_stores(stores: &BTreeMap<Role, Store>) -> String {
    serde_json::to_string(stores).expect("stores serialize")
}

fn hash_state<T: Hash>(state: &T) -> u128 {
    let mut h1 = std::hash::DefaultHasher::new();
    state.hash(&mut h1);
    let mut h2 = std::hash::DefaultHasher::new();
    0xa5a5_5a5au32.hash(&mut h2);
    state.hash(&mut h2);
    ((h1.finish() as u128) << 64) | h2.finish() as u128
}

/// Depth-first enumeration of every scheduler choice of a projected system,
/// memoizing visited global states.
pub fn explore(projections: &RoleCodeMap, config: &RunConfig, bounds: Bounds) -> ExplorationReport {
    let mut report = ExplorationReport::default();
    let initial = SimState::new(projections, config);

    struct Frame {
        state: SimState,
        choices: Vec<(usize, Vec<usize>)>,
        next: usize,
        summary: RunSummary,
        chosen: usize,
    }

    let mut visited: HashSet<u128> = HashSet::new();
    visited.insert(hash_state(&initial));
    report.states_visited = 1;

    let initial_choices = match initial.runnable_choices() {
        Ok(c) => c,
        Err(reason) => {
            report.aborts.push(AbortRecord {
                schedule: Vec::new(),
                reason,
            });
            return report;
        }
    };
    if initial_choices.is_empty() {
        if initial.is_completed() {
            record_terminal(&mut report, &initial, &RunSummary::default());
        } else {
            report.deadlocks.push(DeadlockReport {
                schedule: Vec::new(),
                blocked_roles: initial.executors.iter().map(|e| e.role.clone()).collect(),
            });
        }
        return report;
    }

    let mut stack = vec![Frame {
        state: initial,
        choices: initial_choices,
        next: 0,
        summary: RunSummary::default(),
        chosen: 0,
    }];

    while let Some(top) = stack.last_mut() {
        if top.next >= top.choices.len() {
            stack.pop();
            continue;
        }
        let pick = top.next;
        top.next += 1;

        let mut child = top.state.clone();
        let mut summary = top.summary.clone();
        let step = child.step_choice(&top.choices[pick], &mut summary);
        let schedule = |stack: &[Frame], pick: usize| -> Vec<usize> {
            let mut s: Vec<usize> = stack[1..].iter().map(|f| f.chosen).collect();
            s.push(pick);
            s
        };

        if let Err(reason) = step {
            let schedule = schedule(&stack, pick);
            report.aborts.push(AbortRecord { schedule, reason });
            continue;
        }

        let choices = match child.runnable_choices() {
            Ok(c) => c,
            Err(reason) => {
                let schedule = schedule(&stack, pick);
                report.aborts.push(AbortRecord { schedule, reason });
                continue;
            }
        };

        if choices.is_empty() {
            if child.is_completed() {
                record_terminal(&mut report, &child, &summary);
                report.schedules_explored += 1;
            } else {
                let schedule = schedule(&stack, pick);
                report.deadlocks.push(DeadlockReport {
                    schedule,
                    blocked_roles: child.executors.iter().map(|e| e.role.clone()).collect(),
                });
            }
            continue;
        }

        if !visited.insert(hash_state(&child)) {
            continue;
        }
        report.states_visited += 1;
        if report.states_visited >= bounds.max_states || stack.len() >= bounds.max_depth {
            report.truncated = true;
            continue;
        }
        stack.push(Frame {
            state: child,
            choices,
            next: 0,
            summary,
            chosen: pick,
        });
    }

    report
}

fn record_terminal(report: &mut ExplorationReport, state: &SimState, summary: &RunSummary) {
    let stores = state.final_stores();
    let fp = fingerprint_stores(&stores);
    report.outcome_stores.entry(fp.clone()).or_insert(stores);
    report.outcomes.insert(fp);
    report.service_profiles.insert(summary.service_calls.clone());
}

// ---------------------------------------------------------------------------
// Reference interpreter
// ---------------------------------------------------------------------------

/// The running shape of a global statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum GTask {
    Pending(ChorStmt),
    InSeq {
        items: Vec<ChorStmt>,
        idx: usize,
        cur: Box<GTask>,
    },
    InPar {
        branches: Vec<GTask>,
    },
    InLoop {
        cond: Expr,
        controller: Role,
        body: ChorStmt,
        cur: Box<GTask>,
    },
    Done,
}

impl GTask {
    fn new(stmt: ChorStmt) -> GTask {
        match stmt {
            ChorStmt::Skip => GTask::Done,
            ChorStmt::Seq(items) => {
                if items.is_empty() {
                    GTask::Done
                } else {
                    let cur = Box::new(GTask::new(items[0].clone()));
                    gnormalize(GTask::InSeq { items, idx: 0, cur })
                }
            }
            ChorStmt::Par(items) => gnormalize(GTask::InPar {
                branches: items.into_iter().map(GTask::new).collect(),
            }),
            other => GTask::Pending(other),
        }
    }

    fn is_done(&self) -> bool {
        matches!(self, GTask::Done)
    }
}

fn gnormalize(task: GTask) -> GTask {
    match task {
        GTask::InSeq {
            items,
            mut idx,
            mut cur,
        } => {
            while cur.is_done() {
                idx += 1;
                if idx >= items.len() {
                    return GTask::Done;
                }
                cur = Box::new(GTask::new(items[idx].clone()));
            }
            GTask::InSeq { items, idx, cur }
        }
        GTask::InPar { branches } => {
            if branches.iter().all(GTask::is_done) {
                GTask::Done
            } else {
                GTask::InPar { branches }
            }
        }
        GTask::InLoop {
            cond,
            controller,
            body,
            cur,
        } => {
            if cur.is_done() {
                GTask::Pending(ChorStmt::While {
                    cond,
                    controller,
                    body: Box::new(body),
                })
            } else {
                GTask::InLoop {
                    cond,
                    controller,
                    body,
                    cur,
                }
            }
        }
        other => other,
    }
}

fn gnormalize_deep(task: GTask) -> GTask {
    let task = match task {
        GTask::InSeq { items, idx, cur } => {
            let cur = Box::new(gnormalize_deep(*cur));
            GTask::InSeq { items, idx, cur }
        }
        GTask::InPar { branches } => GTask::InPar {
            branches: branches.into_iter().map(gnormalize_deep).collect(),
        },
        GTask::InLoop {
            cond,
            controller,
            body,
            cur,
        } => {
            let cur = Box::new(gnormalize_deep(*cur));
            GTask::InLoop {
                cond,
                controller,
                body,
                cur,
            }
        }
        other => other,
    };
    gnormalize(task)
}

/// Global interpreter state: per-role stores, no messages.
#[derive(Clone)]
struct RefState {
    task: GTask,
    stores: BTreeMap<Role, Store>,
    env: EnvStore,
    registry: Rc<RuleRegistry>,
    services: Rc<ServiceRegistry>,
    inputs: VecDeque<Value>,
}

impl Hash for RefState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.task.hash(state);
        self.stores.hash(state);
        self.env.hash(state);
        self.inputs.hash(state);
    }
}

impl RefState {
    fn new(program: &Program, config: &RunConfig) -> RefState {
        let stores = program
            .roles()
            .into_iter()
            .map(|r| (r, Store::new()))
            .collect();
        RefState {
            task: GTask::new(program.body.clone()),
            stores,
            env: EnvStore::new(config.env.clone()),
            registry: Rc::new(config.registry.clone()),
            services: config.services.clone(),
            inputs: config.inputs.iter().cloned().collect(),
        }
    }

    /// Paths of all pending leaves; every leaf is steppable.
    fn leaves(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        fn walk(task: &GTask, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            match task {
                GTask::Pending(_) => out.push(path.clone()),
                GTask::InSeq { cur, .. } | GTask::InLoop { cur, .. } => {
                    path.push(0);
                    walk(cur, path, out);
                    path.pop();
                }
                GTask::InPar { branches } => {
                    for (i, b) in branches.iter().enumerate() {
                        path.push(i);
                        walk(b, path, out);
                        path.pop();
                    }
                }
                GTask::Done => {}
            }
        }
        walk(&self.task, &mut Vec::new(), &mut out);
        out
    }

    fn step(&mut self, path: &[usize]) -> Result<(), AbortReason> {
        let mut task = std::mem::replace(&mut self.task, GTask::Done);
        let result = self.step_at(&mut task, path);
        self.task = gnormalize_deep(task);
        result
    }

    fn step_at(&mut self, task: &mut GTask, path: &[usize]) -> Result<(), AbortReason> {
        match task {
            GTask::InSeq { cur, .. } | GTask::InLoop { cur, .. } => {
                self.step_at(cur, &path[1..])
            }
            GTask::InPar { branches } => {
                let idx = *path.first().expect("par step needs an index");
                self.step_at(&mut branches[idx], &path[1..])
            }
            GTask::Pending(_) => {
                let GTask::Pending(stmt) = std::mem::replace(task, GTask::Done) else {
                    unreachable!()
                };
                *task = self.step_stmt(stmt)?;
                Ok(())
            }
            GTask::Done => unreachable!("cannot step a finished task"),
        }
    }

    fn eval(&mut self, role: &str, expr: &Expr) -> Result<Value, AbortReason> {
        struct RefEffects<'a> {
            services: &'a ServiceRegistry,
            inputs: &'a mut VecDeque<Value>,
        }
        impl crate::expr::EvalEffects for RefEffects<'_> {
            fn invoke(&mut self, name: &str, args: &[Value]) -> Result<Value, EvalError> {
                self.services.call(name, args)
            }
            fn next_input(&mut self, _prompt: &str) -> Option<Value> {
                self.inputs.pop_front()
            }
        }
        let store = self.stores.entry(role.to_string()).or_default();
        let mut effects = RefEffects {
            services: &self.services,
            inputs: &mut self.inputs,
        };
        let mut scope = crate::expr::EvalScope {
            locals: store,
            props: None,
            env: None,
            effects: Some(&mut effects),
        };
        crate::expr::eval_in(expr, &mut scope).map_err(|e| {
            let kind = match &e {
                EvalError::ServiceFailure { .. } | EvalError::UnknownFunction(_) => {
                    AbortKind::ServiceFailure
                }
                EvalError::InputUnderrun(_) => AbortKind::InputUnderrun,
                _ => AbortKind::Evaluation,
            };
            AbortReason::new(kind, role, e.to_string())
        })
    }

    fn eval_bool(&mut self, role: &str, expr: &Expr) -> Result<bool, AbortReason> {
        match self.eval(role, expr)? {
            Value::Bool(b) => Ok(b),
            other => Err(AbortReason::new(
                AbortKind::Evaluation,
                role,
                format!("condition evaluated to {}", other.type_name()),
            )),
        }
    }

    fn step_stmt(&mut self, stmt: ChorStmt) -> Result<GTask, AbortReason> {
        match stmt {
            ChorStmt::Skip => Ok(GTask::Done),
            ChorStmt::Interaction {
                sender,
                expr,
                receiver,
                target,
                ..
            } => {
                let value = match expr {
                    Some(e) => self.eval(&sender, &e)?,
                    None => crate::project::unit_payload(),
                };
                if let Some(target) = target {
                    self.stores
                        .entry(receiver)
                        .or_default()
                        .insert(target, value);
                }
                Ok(GTask::Done)
            }
            ChorStmt::Assign { var, owner, expr } => {
                let value = self.eval(&owner, &expr)?;
                self.stores.entry(owner).or_default().insert(var, value);
                Ok(GTask::Done)
            }
            ChorStmt::If {
                cond,
                controller,
                then_branch,
                else_branch,
            } => {
                if self.eval_bool(&controller, &cond)? {
                    Ok(GTask::new(*then_branch))
                } else {
                    Ok(GTask::new(
                        else_branch.map(|e| *e).unwrap_or(ChorStmt::Skip),
                    ))
                }
            }
            ChorStmt::While {
                cond,
                controller,
                body,
            } => {
                if self.eval_bool(&controller, &cond)? {
                    Ok(gnormalize(GTask::InLoop {
                        cond,
                        controller,
                        body: (*body).clone(),
                        cur: Box::new(GTask::new(*body)),
                    }))
                } else {
                    Ok(GTask::Done)
                }
            }
            ChorStmt::Scope {
                controller,
                body,
                props,
                extra_roles,
            } => {
                let mut involved: RoleSet = body.roles();
                involved.insert(controller.clone());
                involved.extend(extra_roles);
                let locals = self.stores.get(&controller).cloned().unwrap_or_default();
                let env = self.env.snapshot();
                let registry = self.registry.clone();
                let matched =
                    match_rule_scoped(&registry, &props, &locals, Some(&involved), &mut |_| {
                        env.clone()
                    });
                match matched {
                    Some(m) => {
                        for role in &m.new_roles {
                            self.stores.entry(role.clone()).or_default();
                        }
                        Ok(GTask::new(m.body))
                    }
                    None => Ok(GTask::new(*body)),
                }
            }
            composite @ (ChorStmt::Seq(_) | ChorStmt::Par(_)) => Ok(GTask::new(composite)),
        }
    }
}

/// Execute the global choreography directly, resolving parallel interleaving
/// with `chooser` (given the number of runnable threads, pick one).
pub fn reference_interpret(
    program: &Program,
    config: &RunConfig,
    chooser: &mut dyn FnMut(usize) -> usize,
) -> Result<BTreeMap<Role, Store>, AbortReason> {
    let mut state = RefState::new(program, config);
    loop {
        let leaves = state.leaves();
        if leaves.is_empty() {
            return Ok(state.stores);
        }
        let pick = chooser(leaves.len()).min(leaves.len() - 1);
        state.step(&leaves[pick])?;
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceReport {
    pub outcomes: BTreeSet<String>,
    pub outcome_stores: BTreeMap<String, BTreeMap<Role, Store>>,
    pub aborts: Vec<AbortReason>,
    pub states_visited: usize,
    pub truncated: bool,
}

/// Enumerate every interleaving of the reference interpreter.
pub fn reference_outcomes(
    program: &Program,
    config: &RunConfig,
    bounds: Bounds,
) -> ReferenceReport {
    let mut report = ReferenceReport::default();
    let initial = RefState::new(program, config);
    let mut visited: HashSet<u128> = HashSet::new();
    visited.insert(hash_state(&initial));
    report.states_visited = 1;

    let mut stack = vec![(initial, 0usize)];
    while let Some((state, next)) = stack.last_mut() {
        let leaves = state.leaves();
        if leaves.is_empty() {
            let fp = fingerprint_stores(&state.stores);
            report
                .outcome_stores
                .entry(fp.clone())
                .or_insert_with(|| state.stores.clone());
            report.outcomes.insert(fp);
            stack.pop();
            continue;
        }
        if *next >= leaves.len() {
            stack.pop();
            continue;
        }
        let pick = *next;
        *next += 1;
        let mut child = state.clone();
        if let Err(reason) = child.step(&leaves[pick]) {
            report.aborts.push(reason);
            continue;
        }
        if !visited.insert(hash_state(&child)) {
            continue;
        }
        report.states_visited += 1;
        if report.states_visited >= bounds.max_states || stack.len() >= bounds.max_depth {
            report.truncated = true;
            continue;
        }
        stack.push((child, 0));
    }
    report
}

/// Compare the projected system's outcome set against the reference
/// interpreter's.
#[derive(Debug, Clone, Default)]
pub struct EquivalenceReport {
    pub projected: ExplorationReport,
    pub reference: ReferenceReport,
    /// Outcomes of the projected system the reference cannot produce.
    pub unsound: Vec<String>,
    /// Reference outcomes the projected system never produced.
    pub unreached: Vec<String>,
}

impl EquivalenceReport {
    /// Projected outcomes are a subset of reference outcomes and nothing
    /// deadlocked or aborted.
    pub fn sound(&self) -> bool {
        self.unsound.is_empty()
            && self.projected.deadlocks.is_empty()
            && self.projected.aborts.is_empty()
    }

    /// Sound and every reference outcome is reachable: full equality.
    pub fn equivalent(&self) -> bool {
        self.sound() && self.unreached.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "projected {} outcomes vs reference {}; {}",
            self.projected.outcomes.len(),
            self.reference.outcomes.len(),
            if self.equivalent() {
                "equivalent".to_string()
            } else if self.sound() {
                format!("sound, {} reference outcomes unreached", self.unreached.len())
            } else {
                format!(
                    "NOT sound: {} divergent outcomes, {} deadlocks",
                    self.unsound.len(),
                    self.projected.deadlocks.len()
                )
            }
        )
    }
}

pub fn check_equivalence(
    program: &Program,
    config: &RunConfig,
    bounds: Bounds,
) -> EquivalenceReport {
    let projections = crate::project::project_program(program);
    let config = RunConfig {
        starter: program.starter.clone(),
        ..config.clone()
    };
    let projected = explore(&projections, &config, bounds);
    let reference = reference_outcomes(program, &config, bounds);
    let unsound = projected
        .outcomes
        .difference(&reference.outcomes)
        .cloned()
        .collect();
    let unreached = reference
        .outcomes
        .difference(&projected.outcomes)
        .cloned()
        .collect();
    EquivalenceReport {
        projected,
        reference,
        unsound,
        unreached,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_program;
    use crate::endpoint::Action;
    use crate::parser::parse_program;
    use crate::project::project_program;
    use crate::runtime::{RunStatus, Scheduler};

    fn program(src: &str) -> Program {
        let p = parse_program(src).unwrap();
        let diags = check_program(&p);
        assert!(!crate::diag::has_errors(&diags), "{diags:?}");
        p
    }

    #[test]
    fn skip_program_is_trivially_equivalent() {
        let p = program("preamble { starter: W } aioc { skip }");
        let report = check_equivalence(&p, &RunConfig::default(), Bounds::default());
        assert!(report.equivalent(), "{}", report.summary());
        assert_eq!(report.projected.outcomes.len(), 1);
    }

    #[test]
    fn race_free_parallel_program_has_one_outcome() {
        let p = program(
            r#"preamble { starter: W }
aioc {
  seed@W = 1;
  {
    { m1: W( 1 ) -> A( x ); r1: A( x + 1 ) -> W( a ) }
    |
    { m2: W( 2 ) -> B( y ); r2: B( y + 1 ) -> W( b ) }
  }
}"#,
        );
        let projections = project_program(&p);
        let config = RunConfig {
            starter: p.starter.clone(),
            ..RunConfig::default()
        };
        let report = explore(&projections, &config, Bounds::default());
        assert!(report.deadlocks.is_empty());
        assert!(report.aborts.is_empty());
        assert_eq!(report.outcomes.len(), 1, "{}", report.summary());

        let eq = check_equivalence(&p, &RunConfig::default(), Bounds::default());
        assert!(eq.equivalent(), "{}", eq.summary());
    }

    #[test]
    fn racy_writes_show_multiple_outcomes_in_both_worlds() {
        let p = parse_program(
            r#"preamble { starter: W }
aioc {
  { x@W = 1 } | { x@W = 2 }
}"#,
        )
        .unwrap();
        let eq = check_equivalence(&p, &RunConfig::default(), Bounds::default());
        assert_eq!(eq.projected.outcomes.len(), 2);
        assert!(eq.equivalent(), "{}", eq.summary());
    }

    #[test]
    fn cyclic_endpoint_pair_deadlocks_and_replays() {
        // Hand-built code that no checked choreography would produce: both
        // sides receive before they send.
        let mut map = RoleCodeMap::default();
        map.code.insert(
            "A".to_string(),
            Action::Seq {
                items: vec![
                    Action::Recv {
                        label: "m2".into(),
                        from: "B".into(),
                        var: Some("x".into()),
                    },
                    Action::Send {
                        label: "m1".into(),
                        to: "B".into(),
                        expr: Expr::lit(Value::Int(1)),
                    },
                ],
            },
        );
        map.code.insert(
            "B".to_string(),
            Action::Seq {
                items: vec![
                    Action::Recv {
                        label: "m1".into(),
                        from: "A".into(),
                        var: Some("y".into()),
                    },
                    Action::Send {
                        label: "m2".into(),
                        to: "A".into(),
                        expr: Expr::lit(Value::Int(2)),
                    },
                ],
            },
        );
        let config = RunConfig {
            starter: "A".to_string(),
            ..RunConfig::default()
        };
        let report = explore(&map, &config, Bounds::default());
        assert_eq!(report.deadlocks.len(), 1, "{}", report.summary());
        assert_eq!(report.outcomes.len(), 0);

        // The reported schedule replays to the same deadlock.
        let schedule = report.deadlocks[0].schedule.clone();
        let out = crate::runtime::sim::run(
            &map,
            RunConfig {
                starter: "A".to_string(),
                scheduler: Scheduler::Script(schedule),
                ..RunConfig::default()
            },
        );
        assert_eq!(out.status, RunStatus::Deadlock);
    }

    #[test]
    fn dropped_notification_is_caught() {
        let p = program(
            r#"preamble { starter: A }
aioc {
  flag@A = true;
  if ( flag )@A {
    m: A( 1 ) -> B( x )
  } else {
    m2: A( 2 ) -> B( x )
  }
}"#,
        );
        let mut projections = project_program(&p);
        // Sabotage: drop B from the controller's notification list.
        let a_code = projections.code.get_mut("A").unwrap();
        fn strip_notify(a: &mut Action) {
            match a {
                Action::If { notify, .. } => notify.clear(),
                Action::Seq { items } | Action::Par { items } => {
                    items.iter_mut().for_each(strip_notify)
                }
                _ => {}
            }
        }
        strip_notify(a_code);
        let report = explore(&projections, &RunConfig::default(), Bounds::default());
        let caught = !report.deadlocks.is_empty() || !report.aborts.is_empty();
        assert!(caught, "mutation must surface as deadlock or abort");
    }

    #[test]
    fn reference_interpreter_runs_to_final_stores() {
        let p = program(
            r#"preamble { starter: B }
aioc {
  x@A = 41;
  m: A( x + 1 ) -> B( y )
}"#,
        );
        let stores =
            reference_interpret(&p, &RunConfig::default(), &mut |_| 0).expect("completes");
        assert_eq!(stores["B"]["y"], Value::Int(42));
        assert_eq!(stores["A"]["x"], Value::Int(41));
    }
}
