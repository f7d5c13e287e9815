//! Fault-tree structure: events, AND/OR gates and the canonical labelling.
//!
//! A [`FaultTree`] stores its events in canonical order: the `k` primary
//! events occupy indices `0..k` and every event appears after all of its
//! ancestors. All index-based accessors use this order; ids are kept
//! verbatim for I/O.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of an event, unique within a tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(String);

impl EventId {
    pub fn new(id: impl Into<String>) -> Self {
        EventId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> Self {
        EventId(s.to_owned())
    }
}

impl AsRef<str> for EventId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "OR")]
    Or,
}

impl Gate {
    fn parse(event: &str, raw: &str) -> Result<Self> {
        match raw {
            "AND" => Ok(Gate::And),
            "OR" => Ok(Gate::Or),
            other => Err(Error::UnsupportedGate {
                event: event.to_owned(),
                gate: other.to_owned(),
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gate::And => "AND",
            Gate::Or => "OR",
        }
    }
}

/// Observed value of an event; `Na` means not observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventState {
    Zero,
    One,
    Na,
}

impl EventState {
    pub fn from_bool(value: bool) -> Self {
        if value {
            EventState::One
        } else {
            EventState::Zero
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            EventState::Zero => Some(false),
            EventState::One => Some(true),
            EventState::Na => None,
        }
    }

    pub fn is_observed(self) -> bool {
        self != EventState::Na
    }

    pub fn parse(cell: &str) -> Option<Self> {
        match cell.trim() {
            "0" => Some(EventState::Zero),
            "1" => Some(EventState::One),
            "NA" | "" => Some(EventState::Na),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventState::Zero => "0",
            EventState::One => "1",
            EventState::Na => "NA",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Every event feeds at most one gate.
    PureTree,
    /// Some event feeds two or more gates (a common cause).
    SharedCauseDag,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::PureTree => "PURE_TREE",
            Structure::SharedCauseDag => "SHARED_CAUSE_DAG",
        }
    }
}

/// One entry of the tree file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
}

/// The tree file document, before validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub events: Vec<EventRecord>,
    pub top: String,
}

impl TreeDocument {
    pub fn new(top: impl Into<String>) -> Self {
        TreeDocument {
            events: Vec::new(),
            top: top.into(),
        }
    }

    pub fn primary(mut self, id: &str, label: &str) -> Self {
        self.events.push(EventRecord {
            id: id.to_owned(),
            label: label.to_owned(),
            gate: None,
            inputs: None,
        });
        self
    }

    pub fn gate(mut self, id: &str, label: &str, gate: Gate, inputs: &[&str]) -> Self {
        self.events.push(EventRecord {
            id: id.to_owned(),
            label: label.to_owned(),
            gate: Some(gate.as_str().to_owned()),
            inputs: Some(inputs.iter().map(|s| s.to_string()).collect()),
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Event {
    id: EventId,
    label: String,
    gate: Option<Gate>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

/// A validated AND/OR fault tree in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultTree {
    events: Vec<Event>,
    primaries: usize,
    top: usize,
    index: HashMap<EventId, usize>,
    /// Canonical index of each event in document order.
    document_order: Vec<usize>,
}

impl FaultTree {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    /// Validates a document and relabels its events canonically.
    pub fn from_document(doc: &TreeDocument) -> Result<Self> {
        let n = doc.events.len();
        let mut doc_index: HashMap<&str, usize> = HashMap::with_capacity(n);
        for (i, rec) in doc.events.iter().enumerate() {
            if rec.id.trim().is_empty() {
                return Err(Error::Format(format!("event {} has an empty id", i + 1)));
            }
            if doc_index.insert(rec.id.as_str(), i).is_some() {
                return Err(Error::DuplicateId(rec.id.clone()));
            }
        }

        let mut gates = Vec::with_capacity(n);
        let mut inputs: Vec<Vec<usize>> = Vec::with_capacity(n);
        for rec in &doc.events {
            let listed = rec.inputs.as_deref().unwrap_or(&[]);
            let gate = match &rec.gate {
                Some(raw) => Some(Gate::parse(&rec.id, raw)?),
                None => None,
            };
            if gate.is_none() && !listed.is_empty() {
                return Err(Error::PrimaryWithInputs(rec.id.clone()));
            }
            if gate.is_some() && listed.len() < 2 {
                return Err(Error::GateArity {
                    event: rec.id.clone(),
                    count: listed.len(),
                });
            }
            let mut resolved = Vec::with_capacity(listed.len());
            for input in listed {
                let j = *doc_index.get(input.as_str()).ok_or_else(|| Error::UnknownInput {
                    event: rec.id.clone(),
                    input: input.clone(),
                })?;
                if resolved.contains(&j) {
                    return Err(Error::Format(format!(
                        "event `{}` lists input `{}` twice",
                        rec.id, input
                    )));
                }
                resolved.push(j);
            }
            gates.push(gate);
            inputs.push(resolved);
        }

        let top = *doc_index
            .get(doc.top.as_str())
            .ok_or_else(|| Error::MissingTop(doc.top.clone()))?;

        let order = topological_order(&doc.events, &gates, &inputs)?;

        let mut outputs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, ins) in inputs.iter().enumerate() {
            for &j in ins {
                outputs[j].push(i);
            }
        }
        if !outputs[top].is_empty() {
            return Err(Error::TopHasOutput(doc.top.clone()));
        }
        for &i in &order {
            if i != top && outputs[i].is_empty() {
                return Err(Error::Dangling(doc.events[i].id.clone()));
            }
        }

        let mut canonical = vec![0usize; n];
        for (pos, &i) in order.iter().enumerate() {
            canonical[i] = pos;
        }
        let events: Vec<Event> = order
            .iter()
            .map(|&i| {
                let rec = &doc.events[i];
                Event {
                    id: EventId::new(rec.id.clone()),
                    label: rec.label.clone(),
                    gate: gates[i],
                    inputs: inputs[i].iter().map(|&j| canonical[j]).collect(),
                    outputs: outputs[i].iter().map(|&j| canonical[j]).collect(),
                }
            })
            .collect();
        let primaries = gates.iter().filter(|g| g.is_none()).count();
        let index = events.iter().enumerate().map(|(pos, e)| (e.id.clone(), pos)).collect();

        Ok(FaultTree {
            events,
            primaries,
            top: canonical[top],
            index,
            document_order: canonical,
        })
    }

    pub fn to_document(&self) -> TreeDocument {
        let events = self
            .document_order
            .iter()
            .map(|&i| {
                let e = &self.events[i];
                EventRecord {
                    id: e.id.0.clone(),
                    label: e.label.clone(),
                    gate: e.gate.map(|g| g.as_str().to_owned()),
                    inputs: e
                        .gate
                        .map(|_| e.inputs.iter().map(|&j| self.events[j].id.0.clone()).collect()),
                }
            })
            .collect();
        TreeDocument {
            events,
            top: self.events[self.top].id.0.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("tree document serializes")
    }

    /// Total number of events `n`.
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of primary events `k`.
    pub fn primary_count(&self) -> usize {
        self.primaries
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn is_primary(&self, i: usize) -> bool {
        i < self.primaries
    }

    pub fn id(&self, i: usize) -> &EventId {
        &self.events[i].id
    }

    pub fn label(&self, i: usize) -> &str {
        &self.events[i].label
    }

    pub fn gate(&self, i: usize) -> Option<Gate> {
        self.events[i].gate
    }

    /// Immediate causes (parents in the belief network) of event `i`.
    pub fn inputs(&self, i: usize) -> &[usize] {
        &self.events[i].inputs
    }

    /// Gates that event `i` feeds (its children).
    pub fn outputs(&self, i: usize) -> &[usize] {
        &self.events[i].outputs
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(&EventId::from(id)).copied()
    }

    pub fn require_index(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownEvent(id.to_owned()))
    }

    /// Event ids in canonical order.
    pub fn canonical_order(&self) -> Vec<EventId> {
        self.events.iter().map(|e| e.id.clone()).collect()
    }

    pub fn primary_ids(&self) -> impl Iterator<Item = &EventId> {
        self.events[..self.primaries].iter().map(|e| &e.id)
    }

    /// All ancestors of `i` (parents, parents of parents, ...), sorted.
    pub fn ancestors(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.events[i].inputs.clone();
        while let Some(j) = stack.pop() {
            if seen.insert(j) {
                stack.extend_from_slice(&self.events[j].inputs);
            }
        }
        seen
    }

    /// All successors of `i` (children, grandchildren, ...), sorted.
    pub fn successors(&self, i: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.events[i].outputs.clone();
        while let Some(j) = stack.pop() {
            if seen.insert(j) {
                stack.extend_from_slice(&self.events[j].outputs);
            }
        }
        seen
    }

    pub fn classify_structure(&self) -> Structure {
        if self.events.iter().all(|e| e.outputs.len() <= 1) {
            Structure::PureTree
        } else {
            Structure::SharedCauseDag
        }
    }

    /// First AND gate in canonical order, if any.
    pub fn first_and_gate(&self) -> Option<usize> {
        (0..self.len()).find(|&i| self.events[i].gate == Some(Gate::And))
    }

    /// Deterministic gate evaluation from primary values.
    pub fn evaluate(&self, primary: &[bool]) -> Vec<bool> {
        assert_eq!(primary.len(), self.primaries, "expected one value per primary event");
        let mut values = Vec::with_capacity(self.len());
        values.extend_from_slice(primary);
        for e in &self.events[self.primaries..] {
            let v = match e.gate {
                Some(Gate::And) => e.inputs.iter().all(|&j| values[j]),
                Some(Gate::Or) => e.inputs.iter().any(|&j| values[j]),
                None => unreachable!("non-primary events carry a gate"),
            };
            values.push(v);
        }
        values
    }

    /// Gate algebra on occurrence probabilities, treating gate inputs as
    /// independent. Exact for pure trees.
    pub fn gate_probabilities(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.primaries);
        let mut probs = Vec::with_capacity(self.len());
        probs.extend_from_slice(p);
        for e in &self.events[self.primaries..] {
            let q = match e.gate {
                Some(Gate::And) => e.inputs.iter().map(|&j| probs[j]).product(),
                Some(Gate::Or) => 1.0 - e.inputs.iter().map(|&j| 1.0 - probs[j]).product::<f64>(),
                None => unreachable!(),
            };
            probs.push(q);
        }
        probs
    }
}

/// Primaries first in document order, then gates in a topological order
/// with ties broken by document position.
fn topological_order(records: &[EventRecord], gates: &[Option<Gate>], inputs: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = records.len();
    let mut order: Vec<usize> = (0..n).filter(|&i| gates[i].is_none()).collect();
    let mut pending: Vec<usize> = inputs.iter().map(|ins| ins.len()).collect();
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, ins) in inputs.iter().enumerate() {
        for &j in ins {
            dependents[j].push(i);
        }
    }

    let mut ready = BinaryHeap::new();
    for &i in &order {
        for &d in &dependents[i] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(Reverse(d));
            }
        }
    }
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &d in &dependents[i] {
            pending[d] -= 1;
            if pending[d] == 0 {
                ready.push(Reverse(d));
            }
        }
    }

    if order.len() < n {
        // Walk unresolved inputs until a node repeats; that node lies on a cycle.
        let mut current = (0..n).find(|&i| pending[i] > 0).expect("unresolved node");
        let mut visited = vec![false; n];
        while !visited[current] {
            visited[current] = true;
            current = *inputs[current]
                .iter()
                .find(|&&j| pending[j] > 0)
                .expect("unresolved node has an unresolved input");
        }
        return Err(Error::Cycle(records[current].id.clone()));
    }
    Ok(order)
}
