//! The executable corpus: a tea-shop system of choreographies, adaptation
//! rules, deterministic mock services over a product fixture set, and
//! scripted scenarios with machine-checkable expectations.

use std::collections::BTreeMap;
use std::rc::Rc;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adapt::{connect_repository, RuleRegistry};
use crate::diag::has_errors;
use crate::expr::ServiceRegistry;
use crate::parser::parse_program;
use crate::project::project_program;
use crate::runtime::sim::{run, RunConfig};
use crate::runtime::{
    EventKind, Outcome, RunStatus, Scheduler, Timeline, TimelineAction, TimelineEntry, Trigger,
};
use crate::value::Value;

/// One product of the store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductFixture {
    pub address: String,
    pub title: String,
    pub description: String,
    #[serde(rename = "imageBase64")]
    pub image_base64: String,
    pub popularity: i64,
}

pub const FIXTURES_JSON: &str = include_str!("../../../fixtures/products.json");

/// Embedded copies of every corpus file, keyed by repository-relative path.
pub const CORPUS_FILES: &[(&str, &str)] = &[
    ("corpus/barebone.chor", include_str!("../../../corpus/barebone.chor")),
    ("corpus/compiler-scope.chor", include_str!("../../../corpus/compiler-scope.chor")),
    ("corpus/recommender.chor", include_str!("../../../corpus/recommender.chor")),
    ("corpus/adaptable.chor", include_str!("../../../corpus/adaptable.chor")),
    ("corpus/ephemeral.chor", include_str!("../../../corpus/ephemeral.chor")),
    ("corpus/race.chor", include_str!("../../../corpus/race.chor")),
    ("corpus/rec-low.rules", include_str!("../../../corpus/rec-low.rules")),
    ("corpus/rec-compiler.rules", include_str!("../../../corpus/rec-compiler.rules")),
    ("corpus/auth.rules", include_str!("../../../corpus/auth.rules")),
    ("corpus/page-info-logged.rules", include_str!("../../../corpus/page-info-logged.rules")),
    ("corpus/rec-full.rules", include_str!("../../../corpus/rec-full.rules")),
    ("corpus/loop-step.rules", include_str!("../../../corpus/loop-step.rules")),
    ("corpus/db.rules", include_str!("../../../corpus/db.rules")),
];

pub const SCENARIO_FILES: &[(&str, &str)] = &[
    ("barebone", include_str!("../../../scenarios/barebone.json")),
    ("compiler-scope", include_str!("../../../scenarios/compiler-scope.json")),
    ("rec-low", include_str!("../../../scenarios/rec-low.json")),
    ("no-rules", include_str!("../../../scenarios/no-rules.json")),
    ("auth-available", include_str!("../../../scenarios/auth-available.json")),
    ("auth-unavailable", include_str!("../../../scenarios/auth-unavailable.json")),
    ("full-power", include_str!("../../../scenarios/full-power.json")),
    ("ephemeral", include_str!("../../../scenarios/ephemeral.json")),
    ("rule-race", include_str!("../../../scenarios/rule-race.json")),
    ("rule-race-baseline", include_str!("../../../scenarios/rule-race-baseline.json")),
    ("bad-address", include_str!("../../../scenarios/bad-address.json")),
];

pub fn corpus_file(path: &str) -> Option<&'static str> {
    CORPUS_FILES
        .iter()
        .find(|(p, _)| *p == path)
        .map(|(_, text)| *text)
}

pub fn scenario_ids() -> Vec<&'static str> {
    SCENARIO_FILES.iter().map(|(id, _)| *id).collect()
}

pub fn fixtures() -> Vec<ProductFixture> {
    serde_json::from_str(FIXTURES_JSON).expect("fixtures parse")
}

fn known_users() -> BTreeMap<&'static str, &'static str> {
    [("alice", "wonder"), ("bob", "builder")].into()
}

fn product_record(p: &ProductFixture) -> Value {
    Value::record([
        ("address", Value::str(&p.address)),
        ("title", Value::str(&p.title)),
        ("popularity", Value::Int(p.popularity)),
    ])
}

fn info_record(p: &ProductFixture) -> Value {
    Value::record([
        ("address", Value::str(&p.address)),
        ("title", Value::str(&p.title)),
        ("description", Value::str(&p.description)),
    ])
}

fn arg<'a>(args: &'a [Value], i: usize, what: &str) -> Result<&'a Value, String> {
    args.get(i).ok_or_else(|| format!("missing argument {i}: {what}"))
}

fn str_arg(args: &[Value], i: usize, what: &str) -> Result<String, String> {
    arg(args, i, what)?
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| format!("argument {i} ({what}) must be a string"))
}

fn find_product(fixtures: &[ProductFixture], address: &str) -> Result<ProductFixture, String> {
    fixtures
        .iter()
        .find(|p| p.address == address)
        .cloned()
        .ok_or_else(|| format!("unknown address {address}"))
}

fn token_user(token: &str) -> Result<String, String> {
    token
        .strip_prefix("tok-")
        .map(str::to_string)
        .ok_or_else(|| format!("not logged in: token {token:?}"))
}

/// Stable string hash for deterministic personalization; independent of the
/// standard library's hasher.
fn stable_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn items_of(value: &Value) -> Result<Vec<Value>, String> {
    match value {
        Value::List(items) => Ok(items.clone()),
        Value::Record(m) => match m.get("items") {
            Some(Value::List(items)) => Ok(items.clone()),
            _ => Err("expected a list or a record with an items list".to_string()),
        },
        _ => Err("expected a list or a record with an items list".to_string()),
    }
}

fn top_by_popularity(fixtures: &[ProductFixture], n: usize) -> Vec<Value> {
    let mut sorted: Vec<&ProductFixture> = fixtures.iter().collect();
    sorted.sort_by(|a, b| b.popularity.cmp(&a.popularity).then(a.address.cmp(&b.address)));
    sorted.into_iter().take(n).map(product_record).collect()
}

/// All mock service handlers, one per function named by the corpus includes.
pub fn services() -> ServiceRegistry {
    let mut reg = ServiceRegistry::new();
    let fixtures = Arc::new(fixtures());

    let fx = fixtures.clone();
    reg.register("getPageInfo", move |args| {
        let address = str_arg(args, 0, "address")?;
        Ok(info_record(&find_product(&fx, &address)?))
    });

    let fx = fixtures.clone();
    reg.register("getPageImg", move |args| {
        let address = str_arg(args, 0, "address")?;
        Ok(Value::Str(find_product(&fx, &address)?.image_base64))
    });

    reg.register("compilePage", |args| {
        let info = arg(args, 0, "info")?;
        let img = arg(args, 1, "img")?;
        Ok(Value::record([
            ("title", info.field("title").cloned().unwrap_or(Value::str(""))),
            (
                "description",
                info.field("description").cloned().unwrap_or(Value::str("")),
            ),
            ("image", img.clone()),
        ]))
    });

    reg.register("compilePageWithRecommends", |args| {
        let info = arg(args, 0, "info")?;
        let img = arg(args, 1, "img")?;
        let recommendations = arg(args, 2, "recommendations")?;
        Ok(Value::record([
            ("title", info.field("title").cloned().unwrap_or(Value::str(""))),
            (
                "description",
                info.field("description").cloned().unwrap_or(Value::str("")),
            ),
            ("image", img.clone()),
            ("recommendations", recommendations.clone()),
        ]))
    });

    let fx = fixtures.clone();
    reg.register("getTopItems", move |args| {
        let n = arg(args, 0, "count")?
            .as_int()
            .ok_or("count must be an integer")?;
        let mode = str_arg(args, 1, "mode")?;
        if mode != "popularity" {
            return Err(format!("unsupported ranking mode {mode:?}"));
        }
        Ok(Value::List(top_by_popularity(&fx, n.max(0) as usize)))
    });

    reg.register("processRecommendations", |args| {
        let items = items_of(arg(args, 0, "items")?)?;
        let titles: Vec<String> = items
            .iter()
            .filter_map(|i| i.field("title").and_then(Value::as_str).map(str::to_string))
            .collect();
        let featured = titles.iter().take(3).cloned().collect::<Vec<_>>();
        Ok(Value::record([
            (
                "description",
                Value::Str(format!("Flavoured with {}", featured.join(", "))),
            ),
            (
                "items",
                Value::List(titles.into_iter().map(Value::Str).collect()),
            ),
        ]))
    });

    reg.register("login", |args| {
        let credentials = str_arg(args, 0, "credentials")?;
        let token = match credentials.split_once(':') {
            Some((user, pass)) if known_users().get(user) == Some(&pass) => {
                format!("tok-{user}")
            }
            _ => "none".to_string(),
        };
        Ok(Value::Str(token))
    });

    let fx = fixtures.clone();
    reg.register("getPageInfoAsLoggedUser", move |args| {
        let address = str_arg(args, 0, "address")?;
        let user = token_user(&str_arg(args, 1, "token")?)?;
        let p = find_product(&fx, &address)?;
        Ok(Value::record([
            ("address", Value::str(&p.address)),
            ("title", Value::str(&p.title)),
            (
                "description",
                Value::Str(format!("{} Curated for {user}.", p.description)),
            ),
            ("user", Value::Str(user)),
        ]))
    });

    reg.register("getQuery", |args| {
        let info = arg(args, 0, "info")?;
        Ok(Value::record([
            ("kind", Value::str("generic")),
            ("topic", info.field("title").cloned().unwrap_or(Value::str(""))),
        ]))
    });

    reg.register("getQueryAsLoggedUser", |args| {
        let info = arg(args, 0, "info")?;
        let user = token_user(&str_arg(args, 1, "token")?)?;
        Ok(Value::record([
            ("kind", Value::str("personal")),
            ("topic", info.field("title").cloned().unwrap_or(Value::str(""))),
            ("user", Value::Str(user)),
        ]))
    });

    let fx = fixtures.clone();
    reg.register("processQuery", move |args| {
        let query = arg(args, 0, "query")?;
        let kind = query.field("kind").and_then(Value::as_str).unwrap_or("generic");
        let items = if kind == "personal" {
            let user = query.field("user").and_then(Value::as_str).unwrap_or("");
            // Deterministic personalization: a stable hash of the user and
            // the product set picks where the selection starts.
            let catalogue: String = fx.iter().map(|p| p.address.as_str()).collect();
            let start = (stable_hash(&format!("{user}:{catalogue}")) % fx.len() as u64) as usize;
            (0..3)
                .map(|i| product_record(&fx[(start + i) % fx.len()]))
                .collect()
        } else {
            top_by_popularity(&fx, 3)
        };
        Ok(Value::Record(
            [("items".to_string(), Value::List(items))].into(),
        ))
    });

    reg
}

/// Service locations as declared by the corpus includes, for the wire mode.
pub fn service_locations() -> BTreeMap<String, String> {
    [
        ("compilePage", 8000),
        ("compilePageWithRecommends", 8000),
        ("getPageInfo", 8001),
        ("getPageInfoAsLoggedUser", 8001),
        ("getTopItems", 8001),
        ("processQuery", 8001),
        ("getPageImg", 8002),
        ("getQuery", 8003),
        ("getQueryAsLoggedUser", 8003),
        ("processRecommendations", 8003),
        ("login", 8004),
    ]
    .into_iter()
    .map(|(f, port)| (f.to_string(), format!("socket://localhost:{port}")))
    .collect()
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFileRef {
    pub id: String,
    pub file: String,
}

/// A timeline entry as written in scenario files: rule connects reference
/// corpus files instead of embedding text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioTimelineEntry {
    pub trigger: Trigger,
    pub action: ScenarioAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ScenarioAction {
    EnvSet { name: String, value: Value },
    RulesConnect { id: String, file: String },
    RulesDisconnect { id: String },
    InputPush { value: Value },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Predicate {
    Completed,
    AbortedServiceFailure,
    AdaptQueryCount { count: usize },
    NoRuleCount { count: usize },
    RuleAppliedCount { count: usize },
    /// Applied rule ids, compared as multisets.
    RulesApplied { rule_ids: Vec<String> },
    ServiceCallCount { name: String, min: usize, max: usize },
    /// At least one call of `name` received exactly these arguments.
    ServiceCallArgs { name: String, args: Vec<Value> },
    StoreField {
        role: String,
        var: String,
        #[serde(default)]
        path: Vec<String>,
        equals: Value,
    },
    StoreFieldExists {
        role: String,
        var: String,
        #[serde(default)]
        path: Vec<String>,
    },
    /// The sequence of values assigned to `var` at `role` over the run.
    AssignValues {
        role: String,
        var: String,
        values: Vec<Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub choreography: String,
    pub rules: Vec<RuleFileRef>,
    #[serde(default)]
    pub env: BTreeMap<String, Value>,
    #[serde(default)]
    pub inputs: Vec<Value>,
    #[serde(default)]
    pub timeline: Vec<ScenarioTimelineEntry>,
    pub expected: Vec<Predicate>,
}

pub fn load_scenario(id: &str) -> Result<ScenarioSpec, String> {
    let (_, text) = SCENARIO_FILES
        .iter()
        .find(|(sid, _)| *sid == id)
        .ok_or_else(|| format!("unknown scenario `{id}` (known: {})", scenario_ids().join(", ")))?;
    serde_json::from_str(text).map_err(|e| format!("scenario `{id}` is malformed: {e}"))
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub id: String,
    pub results: Vec<(String, bool)>,
    pub outcome: Outcome,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|(_, ok)| *ok)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.results
            .iter()
            .filter(|(_, ok)| !ok)
            .map(|(what, _)| what.as_str())
            .collect()
    }
}

/// Resolve a corpus path against the embedded corpus, falling back to disk
/// for files outside it.
fn read_corpus(path: &str) -> Result<String, String> {
    if let Some(text) = corpus_file(path) {
        return Ok(text.to_string());
    }
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))
}

/// Build the run configuration a scenario describes.
pub fn scenario_config(spec: &ScenarioSpec, seed: u64) -> Result<(crate::ast::Program, RunConfig), String> {
    let source = read_corpus(&spec.choreography)?;
    let program = parse_program(&source)
        .map_err(|d| format!("{} does not parse: {}", spec.choreography, d[0].message))?;
    let diags = crate::checker::check_program(&program);
    if has_errors(&diags) {
        return Err(format!(
            "{} fails the checker: {}",
            spec.choreography, diags[0].message
        ));
    }

    let mut registry = RuleRegistry::new();
    for rule_ref in &spec.rules {
        let text = read_corpus(&rule_ref.file)?;
        connect_repository(&mut registry, &text, &rule_ref.id)
            .map_err(|d| format!("{} rejected: {}", rule_ref.file, d[0].message))?;
    }

    let mut entries = Vec::new();
    for entry in &spec.timeline {
        let action = match &entry.action {
            ScenarioAction::EnvSet { name, value } => TimelineAction::EnvSet {
                name: name.clone(),
                value: value.clone(),
            },
            ScenarioAction::RulesConnect { id, file } => TimelineAction::RulesConnect {
                id: id.clone(),
                text: read_corpus(file)?,
            },
            ScenarioAction::RulesDisconnect { id } => {
                TimelineAction::RulesDisconnect { id: id.clone() }
            }
            ScenarioAction::InputPush { value } => {
                TimelineAction::InputPush { value: value.clone() }
            }
        };
        entries.push(TimelineEntry {
            trigger: entry.trigger,
            action,
        });
    }

    let config = RunConfig {
        starter: program.starter.clone(),
        services: Rc::new(services()),
        inputs: spec.inputs.clone(),
        env: spec.env.clone(),
        registry,
        timeline: Timeline::new(entries),
        scheduler: Scheduler::Random { seed },
        ..RunConfig::default()
    };
    Ok((program, config))
}

/// Run a scenario in simulation mode and evaluate its expectations.
pub fn run_scenario(spec: &ScenarioSpec, seed: u64) -> Result<ScenarioReport, String> {
    let (program, config) = scenario_config(spec, seed)?;
    let projections = project_program(&program);
    let outcome = run(&projections, config);
    Ok(evaluate(spec, outcome))
}

/// Check every expectation of a scenario against an outcome, from whichever
/// execution mode produced it.
pub fn evaluate(spec: &ScenarioSpec, outcome: Outcome) -> ScenarioReport {
    let results = spec
        .expected
        .iter()
        .map(|p| (describe(p), holds(p, &outcome)))
        .collect();
    ScenarioReport {
        id: spec.id.clone(),
        results,
        outcome,
    }
}

fn describe(p: &Predicate) -> String {
    match p {
        Predicate::Completed => "run completes".to_string(),
        Predicate::AbortedServiceFailure => "run aborts with a service failure".to_string(),
        Predicate::AdaptQueryCount { count } => format!("{count} adaptation queries"),
        Predicate::NoRuleCount { count } => format!("{count} no-rule verdicts"),
        Predicate::RuleAppliedCount { count } => format!("{count} rules applied"),
        Predicate::RulesApplied { rule_ids } => format!("rules applied: {rule_ids:?}"),
        Predicate::ServiceCallCount { name, min, max } => {
            format!("{name} called between {min} and {max} times")
        }
        Predicate::ServiceCallArgs { name, args } => format!("{name} called with {args:?}"),
        Predicate::StoreField { role, var, path, equals } => {
            format!("{role}.{var}{} == {equals}", render_path(path))
        }
        Predicate::StoreFieldExists { role, var, path } => {
            format!("{role}.{var}{} exists", render_path(path))
        }
        Predicate::AssignValues { role, var, values } => {
            format!("{role}.{var} assigned {values:?} in order")
        }
    }
}

fn render_path(path: &[String]) -> String {
    path.iter().map(|p| format!(".{p}")).collect()
}

fn lookup<'a>(outcome: &'a Outcome, role: &str, var: &str, path: &[String]) -> Option<&'a Value> {
    let mut v = outcome.final_stores.get(role)?.get(var)?;
    for key in path {
        v = v.field(key)?;
    }
    Some(v)
}

fn holds(p: &Predicate, outcome: &Outcome) -> bool {
    match p {
        Predicate::Completed => outcome.status.is_completed(),
        Predicate::AbortedServiceFailure => matches!(
            &outcome.status,
            RunStatus::Aborted(reason) if reason.kind == crate::runtime::AbortKind::ServiceFailure
        ),
        Predicate::AdaptQueryCount { count } => {
            outcome.events(EventKind::AdaptQuery).count() == *count
        }
        Predicate::NoRuleCount { count } => outcome.events(EventKind::NoRule).count() == *count,
        Predicate::RuleAppliedCount { count } => {
            outcome.events(EventKind::RuleApplied).count() == *count
        }
        Predicate::RulesApplied { rule_ids } => {
            let mut got: Vec<&str> = outcome.rule_applications();
            let mut want: Vec<&str> = rule_ids.iter().map(String::as_str).collect();
            got.sort_unstable();
            want.sort_unstable();
            got == want
        }
        Predicate::ServiceCallCount { name, min, max } => {
            let n = outcome.service_calls(name);
            n >= *min && n <= *max
        }
        Predicate::ServiceCallArgs { name, args } => {
            outcome.events(EventKind::ServiceCall).any(|e| {
                let Some(detail) = &e.detail else { return false };
                detail.field("name").and_then(Value::as_str) == Some(name)
                    && detail.field("args") == Some(&Value::List(args.clone()))
            })
        }
        Predicate::StoreField { role, var, path, equals } => {
            lookup(outcome, role, var, path) == Some(equals)
        }
        Predicate::StoreFieldExists { role, var, path } => {
            lookup(outcome, role, var, path).is_some()
        }
        Predicate::AssignValues { role, var, values } => {
            let got: Vec<&Value> = outcome
                .events(EventKind::Assign)
                .filter(|e| e.role == *role)
                .filter_map(|e| {
                    let detail = e.detail.as_ref()?;
                    if detail.field("var").and_then(Value::as_str) == Some(var) {
                        detail.field("value")
                    } else {
                        None
                    }
                })
                .collect();
            got == values.iter().collect::<Vec<_>>()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_contain_earl_gray() {
        let fx = fixtures();
        assert!(fx.len() >= 10);
        let earl = fx.iter().find(|p| p.title == "Earl Gray").expect("Earl Gray");
        assert_eq!(earl.address, "/tea/earl-gray");
        let addresses: std::collections::BTreeSet<_> = fx.iter().map(|p| &p.address).collect();
        assert_eq!(addresses.len(), fx.len(), "addresses are unique");
    }

    #[test]
    fn get_top_items_ranks_by_popularity() {
        let reg = services();
        let out = reg
            .call("getTopItems", &[Value::Int(10), Value::str("popularity")])
            .unwrap();
        let Value::List(items) = out else { panic!("expected list") };
        assert_eq!(items.len(), 10);
        let pops: Vec<i64> = items
            .iter()
            .map(|i| i.field("popularity").unwrap().as_int().unwrap())
            .collect();
        assert!(pops.windows(2).all(|w| w[0] >= w[1]), "descending: {pops:?}");
    }

    #[test]
    fn compile_page_carries_title_and_image() {
        let reg = services();
        let info = reg
            .call("getPageInfo", &[Value::str("/tea/earl-gray")])
            .unwrap();
        let img = reg.call("getPageImg", &[Value::str("/tea/earl-gray")]).unwrap();
        let page = reg.call("compilePage", &[info, img.clone()]).unwrap();
        assert_eq!(page.field("title"), Some(&Value::str("Earl Gray")));
        assert_eq!(page.field("image"), Some(&img));
    }

    #[test]
    fn recommendations_description_is_flavoured() {
        let reg = services();
        let items = reg
            .call("getTopItems", &[Value::Int(5), Value::str("popularity")])
            .unwrap();
        let recs = reg.call("processRecommendations", &[items]).unwrap();
        let description = recs.field("description").unwrap().as_str().unwrap();
        assert!(description.starts_with("Flavoured with"), "{description}");
    }

    #[test]
    fn login_yields_token_or_none() {
        let reg = services();
        assert_eq!(
            reg.call("login", &[Value::str("alice:wonder")]).unwrap(),
            Value::str("tok-alice")
        );
        assert_eq!(
            reg.call("login", &[Value::str("mallory:guess")]).unwrap(),
            Value::str("none")
        );
    }

    #[test]
    fn logged_user_variants_reject_missing_token() {
        let reg = services();
        assert!(reg
            .call(
                "getPageInfoAsLoggedUser",
                &[Value::str("/tea/earl-gray"), Value::str("none")]
            )
            .is_err());
    }

    #[test]
    fn unknown_address_is_a_service_failure() {
        let reg = services();
        assert!(reg.call("getPageInfo", &[Value::str("/tea/nope")]).is_err());
    }

    #[test]
    fn query_round_trip_is_deterministic() {
        let reg = services();
        let info = reg.call("getPageInfo", &[Value::str("/tea/sencha")]).unwrap();
        let q = reg
            .call("getQueryAsLoggedUser", &[info, Value::str("tok-alice")])
            .unwrap();
        let r1 = reg.call("processQuery", &[q.clone()]).unwrap();
        let r2 = reg.call("processQuery", &[q]).unwrap();
        assert_eq!(r1, r2);
        let items = items_of(&r1).unwrap();
        assert_eq!(items.len(), 3);
    }

    #[test]
    fn every_scenario_file_loads() {
        for id in scenario_ids() {
            let spec = load_scenario(id).unwrap();
            assert_eq!(spec.id, id);
            assert!(!spec.expected.is_empty());
        }
    }

    #[test]
    fn barebone_scenario_passes() {
        let spec = load_scenario("barebone").unwrap();
        let report = run_scenario(&spec, 0).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures());
    }
}
