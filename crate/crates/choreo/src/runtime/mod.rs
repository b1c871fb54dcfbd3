//! Execution of projected systems: message envelopes, per-role executors,
//! the environment store, scripted timelines, and run outcomes.
//!
//! The runtime comes in two flavours sharing one executor state machine:
//! [`sim`] steps every role inside one process under a seeded scheduler, and
//! the wire transport (see [`crate::wire`]) runs each role against sockets.

pub mod sim;
pub mod task;

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::ast::Role;
use crate::value::Value;

/// A message in flight. Delivery per (from, to) pair is FIFO, witnessed by
/// the per-pair sequence number.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Envelope {
    pub from: Role,
    pub to: Role,
    pub label: String,
    pub payload: Value,
    pub seq: u64,
}

/// Per-sender FIFO queues of a role's pending messages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Inbox {
    queues: BTreeMap<Role, VecDeque<Envelope>>,
}

impl Inbox {
    pub fn push(&mut self, envelope: Envelope) {
        self.queues
            .entry(envelope.from.clone())
            .or_default()
            .push_back(envelope);
    }

    pub fn head(&self, from: &str) -> Option<&Envelope> {
        self.queues.get(from).and_then(|q| q.front())
    }

    pub fn pop(&mut self, from: &str) -> Option<Envelope> {
        let q = self.queues.get_mut(from)?;
        let env = q.pop_front();
        if q.is_empty() {
            self.queues.remove(from);
        }
        env
    }

    pub fn is_empty(&self) -> bool {
        self.queues.values().all(|q| q.is_empty())
    }

    pub fn heads(&self) -> impl Iterator<Item = &Envelope> {
        self.queues.values().filter_map(|q| q.front())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    Send,
    Recv,
    Assign,
    ServiceCall,
    AdaptQuery,
    RuleApplied,
    NoRule,
    RoleSpawned,
}

/// One line of the run trace, exported as JSON lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub kind: EventKind,
    pub role: Role,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(rename = "ruleId", skip_serializing_if = "Option::is_none")]
    pub rule_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

pub fn trace_to_jsonl(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for ev in trace {
        out.push_str(&serde_json::to_string(ev).expect("trace events serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AbortKind {
    ServiceFailure,
    ProtocolError,
    InputUnderrun,
    Evaluation,
    SpawnCollision,
    Config,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortReason {
    pub kind: AbortKind,
    pub role: Role,
    pub detail: String,
}

impl AbortReason {
    pub fn new(kind: AbortKind, role: impl Into<String>, detail: impl Into<String>) -> Self {
        AbortReason {
            kind,
            role: role.into(),
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} at role {}: {}", self.kind, self.role, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Deadlock,
    Aborted(AbortReason),
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

pub type Store = BTreeMap<String, Value>;

/// The result of a run: how it ended, where every role's variables landed,
/// and the ordered event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: RunStatus,
    pub final_stores: BTreeMap<Role, Store>,
    pub trace: Vec<TraceEvent>,
}

impl Outcome {
    pub fn store(&self, role: &str) -> Option<&Store> {
        self.final_stores.get(role)
    }

    pub fn events(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> {
        self.trace.iter().filter(move |e| e.kind == kind)
    }

    pub fn service_calls(&self, name: &str) -> usize {
        self.events(EventKind::ServiceCall)
            .filter(|e| {
                e.detail
                    .as_ref()
                    .and_then(|d| d.field("name"))
                    .and_then(Value::as_str)
                    == Some(name)
            })
            .count()
    }

    pub fn rule_applications(&self) -> Vec<&str> {
        self.events(EventKind::RuleApplied)
            .filter_map(|e| e.rule_id.as_deref())
            .collect()
    }
}

/// Runtime-global key-value state describing the execution context,
/// settable by administrators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EnvStore {
    values: BTreeMap<String, Value>,
    version: u64,
}

impl EnvStore {
    pub fn new(values: BTreeMap<String, Value>) -> Self {
        EnvStore { values, version: 0 }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn set(&mut self, name: impl Into<String>, value: Value) {
        self.values.insert(name.into(), value);
        self.version += 1;
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn snapshot(&self) -> BTreeMap<String, Value> {
        self.values.clone()
    }
}

/// When a timeline entry fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Trigger {
    /// Before the n-th adaptation query of the run (1-based: the n-th time
    /// any coordinator enters a scope).
    BeforeAdaptQuery { n: usize },
    /// Before the n-th individual rule-condition check of the run (1-based,
    /// counted across all queries). This is the window in which the
    /// environment can move between checks of consecutive rules.
    BeforeRuleCheck { n: usize },
    /// Once the trace has reached n events.
    AtTraceStep { n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TimelineAction {
    EnvSet { name: String, value: Value },
    RulesConnect { id: String, text: String },
    RulesDisconnect { id: String },
    InputPush { value: Value },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub trigger: Trigger,
    pub action: TimelineAction,
}

/// An ordered script of registry/environment/input changes, pinned to
/// deterministic points of the run. Each entry fires at most once.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Timeline {
    pub entries: Vec<TimelineEntry>,
}

impl Timeline {
    pub fn new(entries: Vec<TimelineEntry>) -> Self {
        Timeline { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Timeline, serde_json::Error> {
        let entries: Vec<TimelineEntry> = serde_json::from_str(text)?;
        Ok(Timeline { entries })
    }
}

/// How the simulator picks the next runnable step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheduler {
    /// Seeded uniform choice over runnable steps; the default.
    Random { seed: u64 },
    /// Always the first runnable step in canonical order.
    FixedOrder,
    /// Scripted choice indices (into the canonical runnable list); used to
    /// replay schedules found by the explorer. Falls back to the first
    /// runnable step when the script runs out.
    Script(Vec<usize>),
}

impl Default for Scheduler {
    fn default() -> Self {
        Scheduler::Random { seed: 0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inbox_is_fifo_per_sender() {
        let mut inbox = Inbox::default();
        for seq in 0..3 {
            inbox.push(Envelope {
                from: "A".into(),
                to: "B".into(),
                label: format!("m{seq}"),
                payload: Value::Int(seq as i64),
                seq,
            });
        }
        assert_eq!(inbox.head("A").unwrap().label, "m0");
        assert_eq!(inbox.pop("A").unwrap().seq, 0);
        assert_eq!(inbox.pop("A").unwrap().seq, 1);
        assert!(!inbox.is_empty());
    }

    #[test]
    fn env_store_versions_writes() {
        let mut env = EnvStore::default();
        assert!(env.get("recommender").is_none());
        env.set("recommender", Value::str("low-power"));
        assert_eq!(env.get("recommender"), Some(&Value::str("low-power")));
        assert_eq!(env.version(), 1);
    }

    #[test]
    fn timeline_round_trips_from_json() {
        let text = r#"[
          {"trigger": {"kind": "beforeAdaptQuery", "n": 2},
           "action": {"kind": "envSet", "name": "auth", "value": "available"}},
          {"trigger": {"kind": "atTraceStep", "n": 0},
           "action": {"kind": "rulesDisconnect", "id": "rec-low"}}
        ]"#;
        let t = Timeline::from_json(text).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert_eq!(
            t.entries[0].trigger,
            Trigger::BeforeAdaptQuery { n: 2 }
        );
    }
}
