//! Pairwise-comparison elicitation of primary-event priors.
//!
//! An expert picks a cornerstone event, gives a probability interval for it
//! and compares the other events of the group against it (and optionally
//! against each other) on a nine-level qualitative scale. Scores are turned
//! into geometric-mean weights, the cornerstone interval is rescaled by the
//! weight ratio for every event and each interval is fitted by a beta whose
//! central 95% interval it is.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::beta::{fit_central_interval, BetaParams, MAX_UPPER};
use crate::error::{Error, Result};
use crate::fault_tree::{EventId, FaultTree};
use crate::inference::{PriorEntry, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonLevel {
    AbsolutelyLess,
    VeryStronglyLess,
    StronglyLess,
    ModeratelyLess,
    Equal,
    ModeratelyMore,
    StronglyMore,
    VeryStronglyMore,
    AbsolutelyMore,
}

impl ComparisonLevel {
    pub const ALL: [ComparisonLevel; 9] = [
        ComparisonLevel::AbsolutelyLess,
        ComparisonLevel::VeryStronglyLess,
        ComparisonLevel::StronglyLess,
        ComparisonLevel::ModeratelyLess,
        ComparisonLevel::Equal,
        ComparisonLevel::ModeratelyMore,
        ComparisonLevel::StronglyMore,
        ComparisonLevel::VeryStronglyMore,
        ComparisonLevel::AbsolutelyMore,
    ];

    const SCORES: [f64; 9] = [0.17, 0.21, 0.28, 0.53, 1.00, 1.04, 1.23, 1.52, 2.55];

    fn position(self) -> usize {
        self as usize
    }

    /// Numeric score of "E_i is `self` probable than E_j".
    pub fn score(self) -> f64 {
        Self::SCORES[self.position()]
    }

    /// The same judgement seen from the other event.
    pub fn reverse(self) -> Self {
        Self::ALL[8 - self.position()]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ComparisonLevel::AbsolutelyLess => "absolutely_less",
            ComparisonLevel::VeryStronglyLess => "very_strongly_less",
            ComparisonLevel::StronglyLess => "strongly_less",
            ComparisonLevel::ModeratelyLess => "moderately_less",
            ComparisonLevel::Equal => "equal",
            ComparisonLevel::ModeratelyMore => "moderately_more",
            ComparisonLevel::StronglyMore => "strongly_more",
            ComparisonLevel::VeryStronglyMore => "very_strongly_more",
            ComparisonLevel::AbsolutelyMore => "absolutely_more",
        }
    }
}

pub fn score(level: ComparisonLevel) -> f64 {
    level.score()
}

pub fn reverse(level: ComparisonLevel) -> ComparisonLevel {
    level.reverse()
}

/// Partial matrix of qualitative comparisons between the events of a group.
/// Both directions of every recorded pair are stored; the diagonal never is.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonMatrix {
    events: Vec<EventId>,
    entries: BTreeMap<(usize, usize), ComparisonLevel>,
}

impl ComparisonMatrix {
    pub fn new(events: Vec<EventId>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &events {
            if !seen.insert(e.clone()) {
                return Err(Error::DuplicateId(e.to_string()));
            }
        }
        Ok(ComparisonMatrix {
            events,
            entries: BTreeMap::new(),
        })
    }

    pub fn events(&self) -> &[EventId] {
        &self.events
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.events
            .iter()
            .position(|e| e.as_str() == id)
            .ok_or_else(|| Error::UnknownEvent(id.to_owned()))
    }

    /// Records "`from` is `level` probable than `to`" and its reverse.
    pub fn record(&mut self, from: &str, to: &str, level: ComparisonLevel) -> Result<()> {
        let i = self.position(from)?;
        let j = self.position(to)?;
        if i == j {
            return Err(Error::SelfComparison(from.to_owned()));
        }
        for (key, value) in [((i, j), level), ((j, i), level.reverse())] {
            match self.entries.get(&key) {
                Some(&existing) if existing != value => {
                    return Err(Error::ConflictingComparison {
                        from: from.to_owned(),
                        to: to.to_owned(),
                    })
                }
                _ => {
                    self.entries.insert(key, value);
                }
            }
        }
        Ok(())
    }

    pub fn level(&self, i: usize, j: usize) -> Option<ComparisonLevel> {
        self.entries.get(&(i, j)).copied()
    }

    /// `q_ij`, if event `i` was compared with event `j`.
    pub fn score(&self, i: usize, j: usize) -> Option<f64> {
        self.level(i, j).map(ComparisonLevel::score)
    }

    pub fn is_compared(&self, a: &str, b: &str) -> bool {
        match (self.position(a), self.position(b)) {
            (Ok(i), Ok(j)) => self.entries.contains_key(&(i, j)),
            _ => false,
        }
    }
}

/// Sum-normalized geometric-mean weights of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    ids: Vec<EventId>,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn ids(&self) -> &[EventId] {
        &self.ids
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.ids.iter().position(|e| e.as_str() == id).map(|i| self.weights[i])
    }
}

/// Geometric mean of each event's defined comparison scores, normalized to
/// sum to one. Events with no comparisons are rejected unless the group has
/// a single event.
pub fn weights(matrix: &ComparisonMatrix) -> Result<WeightVector> {
    let m = matrix.events.len();
    let mut raw = Vec::with_capacity(m);
    for i in 0..m {
        let (log_sum, count) = (0..m)
            .filter(|&j| j != i)
            .filter_map(|j| matrix.score(i, j))
            .fold((0.0, 0usize), |(s, c), q| (s + q.ln(), c + 1));
        if count == 0 {
            if m == 1 {
                raw.push(1.0);
                continue;
            }
            return Err(Error::Disconnected(matrix.events[i].to_string()));
        }
        raw.push((log_sum / count as f64).exp());
    }
    let total: f64 = raw.iter().sum();
    Ok(WeightVector {
        ids: matrix.events.clone(),
        weights: raw.into_iter().map(|w| w / total).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledInterval {
    pub lower: f64,
    pub upper: f64,
    /// The upper bound was cut to 1.
    pub clamped: bool,
}

/// Rescales the cornerstone interval by `w_i / w_star`, capping the upper
/// bound at 1.
pub fn scaled_interval(w_i: f64, w_star: f64, p_lower: f64, p_upper: f64) -> Result<ScaledInterval> {
    if !(w_i > 0.0 && w_star > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weights must be positive, got {w_i} and {w_star}"
        )));
    }
    if !(p_lower > 0.0 && p_lower < p_upper && p_upper <= 1.0) {
        return Err(Error::InvalidInterval {
            lower: p_lower,
            upper: p_upper,
        });
    }
    let ratio = w_i / w_star;
    let lower = ratio * p_lower;
    if lower >= 1.0 {
        return Err(Error::NearCertain {
            event: String::new(),
            lower,
        });
    }
    let raw_upper = ratio * p_upper;
    Ok(ScaledInterval {
        lower,
        upper: raw_upper.min(1.0),
        clamped: raw_upper >= 1.0,
    })
}

/// One group's elicitation: events, cornerstone, its interval and the
/// comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSession {
    cornerstone: EventId,
    interval: (f64, f64),
    matrix: ComparisonMatrix,
}

impl ComparisonSession {
    pub fn new(cornerstone: EventId, interval: (f64, f64), matrix: ComparisonMatrix) -> Result<Self> {
        let (lower, upper) = interval;
        if !(lower > 0.0 && lower < upper && upper <= 1.0) {
            return Err(Error::InvalidInterval { lower, upper });
        }
        if !matrix.events.contains(&cornerstone) {
            return Err(Error::CornerstoneNotInGroup(cornerstone.to_string()));
        }
        for e in &matrix.events {
            if *e != cornerstone && !matrix.is_compared(e.as_str(), cornerstone.as_str()) {
                return Err(Error::MissingCornerstoneComparison {
                    event: e.to_string(),
                    cornerstone: cornerstone.to_string(),
                });
            }
        }
        Ok(ComparisonSession {
            cornerstone,
            interval,
            matrix,
        })
    }

    pub fn events(&self) -> &[EventId] {
        self.matrix.events()
    }

    pub fn cornerstone(&self) -> &EventId {
        &self.cornerstone
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn matrix(&self) -> &ComparisonMatrix {
        &self.matrix
    }
}

/// Elicited prior of one primary event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitedPrior {
    pub event: EventId,
    pub group: usize,
    pub weight: f64,
    pub interval: ScaledInterval,
    pub beta: BetaParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elicitation {
    /// Priors in the tree's canonical primary order.
    pub priors: Vec<ElicitedPrior>,
    pub warnings: Vec<String>,
}

impl Elicitation {
    pub fn prior_spec(&self, tree: &FaultTree) -> Result<PriorSpec> {
        let map: HashMap<EventId, BetaParams> = self.priors.iter().map(|p| (p.event.clone(), p.beta)).collect();
        PriorSpec::from_map(tree, &map)
    }

    pub fn get(&self, id: &str) -> Option<&ElicitedPrior> {
        self.priors.iter().find(|p| p.event.as_str() == id)
    }

    /// Priors-file entries carrying the weight, scaled interval and mean.
    pub fn entries(&self) -> BTreeMap<String, PriorEntry> {
        self.priors
            .iter()
            .map(|p| {
                let entry = PriorEntry {
                    mean: Some(p.beta.mean()),
                    weight: Some(p.weight),
                    interval: Some([p.interval.lower, p.interval.upper]),
                    clamped: Some(p.interval.clamped),
                    group: Some(p.group),
                    ..PriorEntry::plain(p.beta)
                };
                (p.event.to_string(), entry)
            })
            .collect()
    }
}

/// Runs the full elicitation pipeline for every group of a tree.
pub fn build_priors(tree: &FaultTree, sessions: &[ComparisonSession]) -> Result<Elicitation> {
    let mut owner: HashMap<&EventId, usize> = HashMap::new();
    for (g, session) in sessions.iter().enumerate() {
        for e in session.events() {
            let i = tree.require_index(e.as_str())?;
            if !tree.is_primary(i) {
                return Err(Error::NotPrimary(e.to_string()));
            }
            if owner.insert(e, g).is_some() {
                return Err(Error::OverlappingGroups(e.to_string()));
            }
        }
    }
    if let Some(missing) = tree.primary_ids().find(|id| !owner.contains_key(id)) {
        return Err(Error::UncoveredPrimary(missing.to_string()));
    }

    let mut by_event: HashMap<EventId, ElicitedPrior> = HashMap::new();
    let mut warnings = Vec::new();
    for (g, session) in sessions.iter().enumerate() {
        let w = weights(session.matrix())?;
        let w_star = w
            .get(session.cornerstone().as_str())
            .expect("cornerstone belongs to its group");
        let (p_lower, p_upper) = session.interval();
        for (id, &w_i) in w.ids().iter().zip(w.values()) {
            let interval = if id == session.cornerstone() {
                ScaledInterval {
                    lower: p_lower,
                    upper: p_upper,
                    clamped: false,
                }
            } else {
                scaled_interval(w_i, w_star, p_lower, p_upper).map_err(|e| match e {
                    Error::NearCertain { lower, .. } => Error::NearCertain {
                        event: id.to_string(),
                        lower,
                    },
                    other => other,
                })?
            };
            let mut target_upper = interval.upper;
            if target_upper > MAX_UPPER {
                warnings.push(format!(
                    "upper bound for {id} clamped to 1; fitting with upper target {MAX_UPPER}"
                ));
                target_upper = MAX_UPPER;
            }
            let beta = fit_central_interval(interval.lower, target_upper)?;
            by_event.insert(
                id.clone(),
                ElicitedPrior {
                    event: id.clone(),
                    group: g,
                    weight: w_i,
                    interval,
                    beta,
                },
            );
        }
    }

    let priors = tree
        .primary_ids()
        .map(|id| by_event.remove(id).expect("coverage checked"))
        .collect();
    Ok(Elicitation { priors, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRecord {
    pub from: String,
    pub to: String,
    pub level: ComparisonLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRecord {
    pub events: Vec<String>,
    pub cornerstone: String,
    pub interval: [f64; 2],
    #[serde(default)]
    pub comparisons: Vec<ComparisonRecord>,
}

/// The elicitation file document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElicitationDocument {
    pub groups: Vec<GroupRecord>,
}

impl ElicitationDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn sessions(&self) -> Result<Vec<ComparisonSession>> {
        self.groups
            .iter()
            .map(|g| {
                let mut matrix = ComparisonMatrix::new(g.events.iter().map(|e| EventId::new(e.clone())).collect())?;
                for c in &g.comparisons {
                    matrix.record(&c.from, &c.to, c.level)?;
                }
                ComparisonSession::new(
                    EventId::new(g.cornerstone.clone()),
                    (g.interval[0], g.interval[1]),
                    matrix,
                )
            })
            .collect()
    }
}

pub fn parse_sessions(text: &str) -> Result<Vec<ComparisonSession>> {
    ElicitationDocument::from_json(text)?.sessions()
}
