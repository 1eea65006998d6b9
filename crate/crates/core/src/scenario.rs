//! Scenario documents and trace records.
//!
//! Scenarios are JSON objects:
//!
//! ```json
//! {
//!   "kind": "finite",
//!   "agents": ["1", "2"],
//!   "num_states": 2,
//!   "state_labels": ["x", "y"],
//!   "partitions": { "1": [["x"], ["y"]], "2": [["x", "y"]] },
//!   "message_function": { "name": "known_state" },
//!   "graph": [["1", "2"], ["2", "1"]],
//!   "true_state": "x"
//! }
//! ```
//!
//! Symbolic scenarios use `"kind": "symbolic"`, omit `num_states`, give each
//! partition as `{modulus, exceptional_blocks, template_families,
//! infinite_blocks: [{finite_part, progressions}]}` over the positive
//! integers, and take an integer `true_state`.
//!
//! Rationals are written `"n/d"` (or a plain integer); floating point numbers
//! are rejected. Messages in lookup tables are integers, strings (tokens) or
//! `{"rational": "n/d"}`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::engine::{FiniteTrace, Scenario};
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::lattice::{Event, Partition, Profile, StateId};
use crate::messages::{Message, MessageFunction};
use crate::symbolic::{InfiniteBlock, PeriodicPartition, SymbolicProfile, SymbolicScenario, SymbolicTrace};
use crate::trace::{StageFlags, StageRecord};

/// A parsed scenario of either kind.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedScenario {
    Finite(Scenario),
    Symbolic(SymbolicScenario),
}

impl LoadedScenario {
    pub fn agents(&self) -> &[String] {
        match self {
            LoadedScenario::Finite(sc) => &sc.agents,
            LoadedScenario::Symbolic(sc) => &sc.agents,
        }
    }

    pub fn graph(&self) -> &CommGraph {
        match self {
            LoadedScenario::Finite(sc) => &sc.graph,
            LoadedScenario::Symbolic(sc) => &sc.graph,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LoadedScenario::Finite(_) => "finite",
            LoadedScenario::Symbolic(_) => "symbolic",
        }
    }
}

/// Scenario files shipped with the library, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("integers_example", include_str!("../fixtures/integers_example.scenario")),
    ("nonmonotone", include_str!("../fixtures/nonmonotone.scenario")),
    ("stp_counterexample_1", include_str!("../fixtures/stp_counterexample_1.scenario")),
    ("stp_counterexample_2", include_str!("../fixtures/stp_counterexample_2.scenario")),
    ("informed_broadcaster", include_str!("../fixtures/informed_broadcaster.scenario")),
    ("cycle3_no_reciprocity", include_str!("../fixtures/cycle3_no_reciprocity.scenario")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    kind: String,
    agents: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_labels: Option<Vec<Label>>,
    partitions: BTreeMap<String, Value>,
    message_function: Value,
    graph: Vec<(Label, Label)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    true_state: Option<Label>,
}

/// Labels may be written as strings or integers.
#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Label {
    Int(u64),
    Str(String),
}

impl Label {
    fn text(&self) -> String {
        match self {
            Label::Int(i) => i.to_string(),
            Label::Str(s) => s.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodicDoc {
    modulus: u64,
    #[serde(default)]
    exceptional_blocks: Vec<Vec<u64>>,
    #[serde(default)]
    template_families: Vec<Vec<u64>>,
    #[serde(default)]
    infinite_blocks: Vec<InfiniteDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InfiniteDoc {
    #[serde(default)]
    finite_part: Vec<u64>,
    progressions: Vec<u64>,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

fn field_error(what: &str, e: serde_json::Error) -> Error {
    Error::Invalid(format!("{what}: {e}"))
}

/// Index of each label; labels must be unique.
fn index_labels(labels: &[String]) -> Result<HashMap<&str, usize>> {
    let mut map = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if map.insert(l.as_str(), i).is_some() {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(map)
}

fn lookup_label(map: &HashMap<&str, usize>, label: &str) -> Result<usize> {
    map.get(label).copied().ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

fn parse_rational(v: &Value) -> Result<BigRational> {
    let bad = || Error::Invalid(format!("`{v}` is not a rational; write \"n/d\""));
    match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => {
            let i: BigInt = n.to_string().parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(i))
        }
        Value::Number(_) => Err(Error::Invalid(format!(
            "floating point value {v} is not allowed; write rationals as \"n/d\""
        ))),
        Value::String(s) => {
            let (n, d) = s.split_once('/').unwrap_or((s, "1"));
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(Error::Invalid(format!("zero denominator in `{s}`")));
            }
            Ok(BigRational::new(n, d))
        }
        _ => Err(bad()),
    }
}

fn rational_value(r: &BigRational) -> Value {
    Value::String(format!("{}/{}", r.numer(), r.denom()))
}

fn parse_message(v: &Value) -> Result<Message> {
    match v {
        Value::Number(n) => n.as_i64().map(Message::Int).ok_or_else(|| {
            Error::Invalid(format!("message {v} must be an integer, token or rational"))
        }),
        Value::String(s) => Ok(Message::Token(s.clone())),
        Value::Object(o) if o.len() == 1 && o.contains_key("rational") => {
            Ok(Message::Rational(parse_rational(&o["rational"])?))
        }
        _ => Err(Error::Invalid(format!("message {v} must be an integer, token or rational"))),
    }
}

fn message_value(m: &Message) -> Value {
    match m {
        Message::Int(i) => json!(i),
        Message::Token(t) => json!(t),
        Message::Rational(r) => json!({ "rational": rational_value(r) }),
    }
}

fn params<T: for<'de> Deserialize<'de>>(name: &str, v: &Value) -> Result<T> {
    let mut obj = v.as_object().cloned().unwrap_or_default();
    obj.remove("name");
    serde_json::from_value(Value::Object(obj)).map_err(|e| field_error(name, e))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaximinParams {
    actions: Vec<i64>,
    utility: Vec<Vec<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingParams {
    state_values: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PosteriorParams {
    prior: Vec<Value>,
    event: Vec<Label>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffParams {
    payoffs: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LookupParams {
    table: Vec<LookupEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LookupEntry {
    block: Vec<Label>,
    message: Value,
}

fn parse_message_function(v: &Value, states: &[String]) -> Result<MessageFunction> {
    let name = v
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Invalid("message_function needs a string `name`".into()))?;
    let index = index_labels(states)?;
    let n = states.len();
    let rationals = |vals: &[Value], what: &str| -> Result<Vec<BigRational>> {
        if vals.len() != n {
            return Err(Error::Invalid(format!("{what} needs {n} entries, got {}", vals.len())));
        }
        vals.iter().map(parse_rational).collect()
    };
    match name {
        "known_state" => params::<NoParams>(name, v).map(|_| MessageFunction::KnownState),
        "injective" => params::<NoParams>(name, v).map(|_| MessageFunction::Injective),
        "maximin" => {
            let p: MaximinParams = params(name, v)?;
            if p.utility.len() != p.actions.len() {
                return Err(Error::Invalid("maximin needs one utility row per action".into()));
            }
            let mut utility = Vec::new();
            for row in &p.utility {
                if row.len() != n {
                    return Err(Error::Invalid(format!("utility rows need {n} entries")));
                }
                utility.push(
                    row.iter()
                        .map(|u| if u.is_null() { Ok(None) } else { parse_rational(u).map(Some) })
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            Ok(MessageFunction::Maximin { actions: p.actions, utility })
        }
        "maximin_matching" => {
            let p: MatchingParams = params(name, v)?;
            if p.state_values.len() != n {
                return Err(Error::Invalid(format!("state_values needs {n} entries")));
            }
            Ok(MessageFunction::maximin_matching(&p.state_values))
        }
        "posterior" => {
            let p: PosteriorParams = params(name, v)?;
            let prior = rationals(&p.prior, "prior")?;
            let states: Vec<StateId> =
                p.event.iter().map(|l| lookup_label(&index, &l.text())).collect::<Result<_>>()?;
            Ok(MessageFunction::Posterior { prior, event: Event::from_states(n, &states)? })
        }
        "expected_value" => {
            let p: PayoffParams = params(name, v)?;
            Ok(MessageFunction::ExpectedValue { payoffs: rationals(&p.payoffs, "payoffs")? })
        }
        "lookup" => {
            let p: LookupParams = params(name, v)?;
            let entries = p
                .table
                .iter()
                .map(|e| {
                    let block = e
                        .block
                        .iter()
                        .map(|l| lookup_label(&index, &l.text()))
                        .collect::<Result<Vec<_>>>()?;
                    Ok((block, parse_message(&e.message)?))
                })
                .collect::<Result<Vec<_>>>()?;
            MessageFunction::lookup(n, entries)
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

fn message_function_value(mf: &MessageFunction, states: &[String]) -> Value {
    let name = mf.family();
    match mf {
        MessageFunction::KnownState | MessageFunction::Injective => json!({ "name": name }),
        MessageFunction::Maximin { actions, utility } => {
            let rows: Vec<Vec<Value>> = utility
                .iter()
                .map(|row| row.iter().map(|u| u.as_ref().map_or(Value::Null, rational_value)).collect())
                .collect();
            json!({ "name": name, "actions": actions, "utility": rows })
        }
        MessageFunction::Posterior { prior, event } => {
            let ev: Vec<&String> = event.states().map(|x| &states[x]).collect();
            let prior: Vec<Value> = prior.iter().map(rational_value).collect();
            json!({ "name": name, "prior": prior, "event": ev })
        }
        MessageFunction::ExpectedValue { payoffs } => {
            let payoffs: Vec<Value> = payoffs.iter().map(rational_value).collect();
            json!({ "name": name, "payoffs": payoffs })
        }
        MessageFunction::Lookup { num_states, table } => {
            let entries: Vec<Value> = (1..table.len())
                .map(|bits| {
                    let block: Vec<&String> = Event::from_bits(*num_states, bits as u64)
                        .states()
                        .map(|x| &states[x])
                        .collect();
                    json!({ "block": block, "message": message_value(&table[bits]) })
                })
                .collect();
            json!({ "name": name, "table": entries })
        }
    }
}

fn periodic_from_doc(doc: PeriodicDoc) -> Result<PeriodicPartition> {
    PeriodicPartition::new(
        doc.modulus,
        doc.exceptional_blocks,
        doc.template_families,
        doc.infinite_blocks
            .into_iter()
            .map(|b| InfiniteBlock { finite: b.finite_part, starts: b.progressions })
            .collect(),
    )
}

/// The document form of a periodic partition.
pub fn periodic_value(pp: &PeriodicPartition) -> Value {
    let doc = PeriodicDoc {
        modulus: pp.modulus(),
        exceptional_blocks: pp.exceptional_blocks().to_vec(),
        template_families: pp.template_families().to_vec(),
        infinite_blocks: pp
            .infinite_blocks()
            .iter()
            .map(|b| InfiniteDoc { finite_part: b.finite.clone(), progressions: b.starts.clone() })
            .collect(),
    };
    serde_json::to_value(doc).expect("plain data serializes")
}

fn partition_value(p: &Partition, states: &[String]) -> Value {
    let blocks: Vec<Vec<&String>> =
        p.blocks().iter().map(|b| b.iter().map(|&x| &states[x]).collect()).collect();
    json!(blocks)
}

fn graph_edges(doc_graph: &[(Label, Label)], agents: &HashMap<&str, usize>) -> Result<Vec<(usize, usize)>> {
    doc_graph
        .iter()
        .map(|(a, b)| Ok((lookup_label(agents, &a.text())?, lookup_label(agents, &b.text())?)))
        .collect()
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    let doc: Document = serde_json::from_str(text).map_err(parse_error)?;
    let agents: Vec<String> = doc.agents.iter().map(Label::text).collect();
    let agent_index = index_labels(&agents)?;
    for name in doc.partitions.keys() {
        lookup_label(&agent_index, name)?;
    }
    let partition_of = |a: &String| {
        doc.partitions
            .get(a)
            .ok_or_else(|| Error::Invalid(format!("no partition given for agent `{a}`")))
    };
    let edges = graph_edges(&doc.graph, &agent_index)?;
    let graph = CommGraph::new(agents.len(), edges)?;
    match doc.kind.as_str() {
        "finite" => {
            let n = doc
                .num_states
                .ok_or_else(|| Error::Invalid("finite scenarios need `num_states`".into()))?;
            let states: Vec<String> = match &doc.state_labels {
                Some(ls) => ls.iter().map(Label::text).collect(),
                None => (0..n).map(|x| x.to_string()).collect(),
            };
            if states.len() != n {
                return Err(Error::LabelMismatch { expected: n, got: states.len() });
            }
            let state_index = index_labels(&states)?;
            let mut parts = Vec::new();
            for a in &agents {
                let blocks: Vec<Vec<Label>> = serde_json::from_value(partition_of(a)?.clone())
                    .map_err(|e| field_error(&format!("partition of `{a}`"), e))?;
                let blocks = blocks
                    .iter()
                    .map(|b| b.iter().map(|l| lookup_label(&state_index, &l.text())).collect())
                    .collect::<Result<Vec<Vec<usize>>>>()?;
                parts.push(Partition::from_blocks(&blocks, n)?);
            }
            let mf = parse_message_function(&doc.message_function, &states)?;
            let true_state =
                doc.true_state.as_ref().map(|l| lookup_label(&state_index, &l.text())).transpose()?;
            let sc = Scenario::new(agents, states, Profile::new(parts)?, mf, graph, true_state)?;
            Ok(LoadedScenario::Finite(sc))
        }
        "symbolic" => {
            if doc.num_states.is_some() || doc.state_labels.is_some() {
                return Err(Error::Invalid(
                    "symbolic scenarios range over the positive integers; drop num_states/state_labels"
                        .into(),
                ));
            }
            let mut parts = Vec::new();
            for a in &agents {
                let pd: PeriodicDoc = serde_json::from_value(partition_of(a)?.clone())
                    .map_err(|e| field_error(&format!("partition of `{a}`"), e))?;
                parts.push(periodic_from_doc(pd)?);
            }
            match doc.message_function.get("name").and_then(Value::as_str) {
                Some("known_state") => {}
                Some(other) => {
                    return Err(Error::Invalid(format!(
                        "symbolic scenarios support only known_state, got `{other}`"
                    )))
                }
                None => return Err(Error::Invalid("message_function needs a string `name`".into())),
            }
            let true_state = match &doc.true_state {
                None => None,
                Some(Label::Int(x)) => Some(*x),
                Some(Label::Str(s)) => Some(
                    s.parse::<u64>().map_err(|_| Error::Invalid(format!("true_state `{s}` is not a positive integer")))?,
                ),
            };
            let sc = SymbolicScenario::new(agents, graph, SymbolicProfile::new(parts)?, true_state)?;
            Ok(LoadedScenario::Symbolic(sc))
        }
        other => Err(Error::Invalid(format!("unknown scenario kind `{other}`"))),
    }
}

/// Serializes a scenario so that [`parse_scenario`] gives it back.
pub fn scenario_to_json(sc: &LoadedScenario) -> String {
    let agents = sc.agents();
    let graph: Vec<(Label, Label)> = sc
        .graph()
        .edges()
        .iter()
        .map(|&(i, j)| (Label::Str(agents[i].clone()), Label::Str(agents[j].clone())))
        .collect();
    let doc = match sc {
        LoadedScenario::Finite(f) => Document {
            kind: "finite".into(),
            agents: agents.iter().cloned().map(Label::Str).collect(),
            num_states: Some(f.num_states()),
            state_labels: Some(f.state_labels.iter().cloned().map(Label::Str).collect()),
            partitions: agents
                .iter()
                .zip(f.initial.parts())
                .map(|(a, p)| (a.clone(), partition_value(p, &f.state_labels)))
                .collect(),
            message_function: message_function_value(&f.message_function, &f.state_labels),
            graph,
            true_state: f.true_state.map(|x| Label::Str(f.state_labels[x].clone())),
        },
        LoadedScenario::Symbolic(s) => Document {
            kind: "symbolic".into(),
            agents: agents.iter().cloned().map(Label::Str).collect(),
            num_states: None,
            state_labels: None,
            partitions: agents
                .iter()
                .zip(s.initial.parts())
                .map(|(a, p)| (a.clone(), periodic_value(p)))
                .collect(),
            message_function: json!({ "name": "known_state" }),
            graph,
            true_state: s.true_state.map(Label::Int),
        },
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes") + "\n"
}

fn flags_value(f: &StageFlags) -> Value {
    json!({
        "consensus": f.consensus,
        "partial_consensus": f.partial_consensus,
        "ck_message_profile": f.ck_message_profile,
        "fixed_point": f.fixed_point,
    })
}

fn record_line<S>(
    r: &StageRecord<S>,
    agents: &[String],
    partitions: Vec<Value>,
) -> String {
    let parts: Vec<Value> = agents
        .iter()
        .zip(partitions)
        .map(|(a, p)| json!({ "agent": a, "partition": p }))
        .collect();
    let messages = r
        .true_messages
        .as_ref()
        .map(|ms| Value::Array(ms.iter().map(|m| Value::String(m.to_string())).collect()));
    let rec = json!({
        "ordinal": r.ordinal.to_string(),
        "kind": r.kind.as_str(),
        "partitions": parts,
        "messages_at_true_state": messages,
        "flags": flags_value(&r.flags),
    });
    serde_json::to_string(&rec).expect("plain data serializes")
}

/// One JSON line per stage.
pub fn finite_trace_lines(sc: &Scenario, trace: &FiniteTrace) -> Vec<String> {
    trace
        .records
        .iter()
        .map(|r| {
            let parts = r
                .state
                .profile
                .parts()
                .iter()
                .map(|p| partition_value(p, &sc.state_labels))
                .collect();
            record_line(r, &sc.agents, parts)
        })
        .collect()
}

pub fn symbolic_trace_lines(sc: &SymbolicScenario, trace: &SymbolicTrace) -> Vec<String> {
    trace
        .records
        .iter()
        .map(|r| {
            let parts = r.state.profile.parts().iter().map(periodic_value).collect();
            record_line(r, &sc.agents, parts)
        })
        .collect()
}
