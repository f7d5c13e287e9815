//! Likelihood of complete and partial fault-tree observations.
//!
//! Three routes are provided: the complete-data product of primary
//! Bernoulli terms, marginalization over unobserved primaries for any
//! AND/OR structure, and the recursive construction over nearest observed
//! ancestors that only applies to pure trees. All values are natural logs;
//! `-inf` marks data that are impossible under the tree logic.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::fault_tree::{EventId, EventState, FaultTree, Gate, Structure};

/// Default cap on the number of enumerated unobserved primaries.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 25;

/// A partial assignment of {0, 1, NA} to every event of a tree, stored in
/// the tree's canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observation {
    states: Vec<EventState>,
}

impl Observation {
    pub fn unobserved(tree: &FaultTree) -> Self {
        Observation {
            states: vec![EventState::Na; tree.len()],
        }
    }

    pub fn from_states(tree: &FaultTree, states: Vec<EventState>) -> Result<Self> {
        if states.len() != tree.len() {
            return Err(Error::InvalidArgument(format!(
                "observation has {} states for {} events",
                states.len(),
                tree.len()
            )));
        }
        Ok(Observation { states })
    }

    /// Assigns the listed events; all others are NA.
    pub fn from_pairs(tree: &FaultTree, pairs: &[(&str, EventState)]) -> Result<Self> {
        let mut obs = Self::unobserved(tree);
        for &(id, state) in pairs {
            let i = tree.require_index(id)?;
            obs.states[i] = state;
        }
        Ok(obs)
    }

    pub fn complete(full: &[bool]) -> Self {
        Observation {
            states: full.iter().map(|&v| EventState::from_bool(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize) -> EventState {
        self.states[i]
    }

    pub fn set(&mut self, i: usize, state: EventState) {
        self.states[i] = state;
    }

    pub fn states(&self) -> &[EventState] {
        &self.states
    }

    pub fn observed_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_observed()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.states.iter().all(|s| s.is_observed())
    }

    /// Values of a fully observed assignment.
    pub fn full_values(&self) -> Option<Vec<bool>> {
        self.states.iter().map(|s| s.value()).collect()
    }

    /// States keyed by event id.
    pub fn by_id(&self, tree: &FaultTree) -> BTreeMap<EventId, EventState> {
        (0..tree.len()).map(|i| (tree.id(i).clone(), self.states[i])).collect()
    }
}

fn assign(obs: &mut Observation, tree: &FaultTree, i: usize, value: bool, changed: &mut bool) -> Result<()> {
    match obs.states[i].value() {
        Some(v) if v != value => Err(Error::Contradiction(tree.id(i).to_string())),
        Some(_) => Ok(()),
        None => {
            obs.states[i] = EventState::from_bool(value);
            *changed = true;
            Ok(())
        }
    }
}

/// Least fixpoint of the three-valued gate rules.
///
/// Upward an AND is 0 if any input is 0 and 1 if all are 1, an OR is 1 if
/// any input is 1 and 0 if all are 0. Downward an OR at 0 forces its inputs
/// to 0 and an AND at 1 forces them to 1. Observed values are never changed.
pub fn propagate_implications(tree: &FaultTree, obs: &Observation) -> Result<Observation> {
    let mut out = obs.clone();
    let k = tree.primary_count();
    loop {
        let mut changed = false;
        for i in k..tree.len() {
            let gate = tree.gate(i).expect("non-primary events have gates");
            let inputs = tree.inputs(i);
            let values: Vec<Option<bool>> = inputs.iter().map(|&j| out.states[j].value()).collect();
            let any = |v: bool| values.contains(&Some(v));
            let all = |v: bool| values.iter().all(|&x| x == Some(v));
            match gate {
                Gate::And => {
                    if any(false) {
                        assign(&mut out, tree, i, false, &mut changed)?;
                    } else if all(true) {
                        assign(&mut out, tree, i, true, &mut changed)?;
                    }
                }
                Gate::Or => {
                    if any(true) {
                        assign(&mut out, tree, i, true, &mut changed)?;
                    } else if all(false) {
                        assign(&mut out, tree, i, false, &mut changed)?;
                    }
                }
            }
            match (gate, out.states[i].value()) {
                (Gate::Or, Some(false)) => {
                    for &j in inputs {
                        assign(&mut out, tree, j, false, &mut changed)?;
                    }
                }
                (Gate::And, Some(true)) => {
                    for &j in inputs {
                        assign(&mut out, tree, j, true, &mut changed)?;
                    }
                }
                _ => {}
            }
        }
        if !changed {
            return Ok(out);
        }
    }
}

/// Whether a complete assignment respects every gate.
pub fn is_consistent(tree: &FaultTree, full: &[bool]) -> bool {
    let k = tree.primary_count();
    full.len() == tree.len() && tree.evaluate(&full[..k]) == full
}

fn ln_bernoulli(p: f64, value: bool) -> f64 {
    if value {
        p.ln()
    } else {
        (-p).ln_1p()
    }
}

/// Complete-data log-likelihood: the primary Bernoulli product if the
/// assignment is consistent, `-inf` otherwise.
pub fn loglik_complete(tree: &FaultTree, full: &[bool], p: &[f64]) -> f64 {
    if !is_consistent(tree, full) {
        return f64::NEG_INFINITY;
    }
    (0..tree.primary_count()).map(|i| ln_bernoulli(p[i], full[i])).sum()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Precomputed marginal likelihood of one observation: fixed primary terms
/// plus the consistent completions of the relevant unobserved primaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTerm {
    fixed: Vec<(usize, bool)>,
    free: Vec<usize>,
    completions: Vec<u64>,
    impossible: bool,
}

impl MarginalTerm {
    pub fn new(tree: &FaultTree, obs: &Observation, limit: usize) -> Result<Self> {
        let closed = match propagate_implications(tree, obs) {
            Ok(c) => c,
            Err(Error::Contradiction(_)) => {
                return Ok(MarginalTerm {
                    fixed: Vec::new(),
                    free: Vec::new(),
                    completions: Vec::new(),
                    impossible: true,
                })
            }
            Err(e) => return Err(e),
        };
        let k = tree.primary_count();
        let fixed: Vec<(usize, bool)> = (0..k)
            .filter_map(|i| closed.states[i].value().map(|v| (i, v)))
            .collect();

        // Unobserved primaries that no observed intermediate depends on sum out to one.
        let observed_gates: Vec<usize> = (k..tree.len()).filter(|&i| closed.states[i].is_observed()).collect();
        let mut relevant = vec![false; k];
        for &g in &observed_gates {
            for a in tree.ancestors(g) {
                if a < k {
                    relevant[a] = true;
                }
            }
        }
        let free: Vec<usize> = (0..k)
            .filter(|&i| relevant[i] && !closed.states[i].is_observed())
            .collect();
        if free.len() > limit {
            return Err(Error::EnumerationLimit {
                count: free.len(),
                limit,
            });
        }

        let mut primary = vec![false; k];
        for &(i, v) in &fixed {
            primary[i] = v;
        }
        let mut completions = Vec::new();
        for mask in 0..(1u64 << free.len()) {
            for (bit, &i) in free.iter().enumerate() {
                primary[i] = mask >> bit & 1 == 1;
            }
            let values = tree.evaluate(&primary);
            if observed_gates
                .iter()
                .all(|&g| closed.states[g].value() == Some(values[g]))
            {
                completions.push(mask);
            }
        }
        let impossible = completions.is_empty();
        Ok(MarginalTerm {
            fixed,
            free,
            completions,
            impossible,
        })
    }

    pub fn enumerated_primaries(&self) -> usize {
        self.free.len()
    }

    pub fn loglik(&self, p: &[f64]) -> f64 {
        if self.impossible {
            return f64::NEG_INFINITY;
        }
        let fixed: f64 = self.fixed.iter().map(|&(i, v)| ln_bernoulli(p[i], v)).sum();
        if self.completions.len() as u64 == 1u64 << self.free.len() {
            return fixed;
        }
        let ln_on: Vec<f64> = self.free.iter().map(|&i| p[i].ln()).collect();
        let ln_off: Vec<f64> = self.free.iter().map(|&i| (-p[i]).ln_1p()).collect();
        let terms: Vec<f64> = self
            .completions
            .iter()
            .map(|&mask| {
                (0..self.free.len())
                    .map(|bit| if mask >> bit & 1 == 1 { ln_on[bit] } else { ln_off[bit] })
                    .sum()
            })
            .collect();
        fixed + log_sum_exp(&terms)
    }
}

/// Marginalized log-likelihood of a partial observation, enumerating at
/// most `limit` unobserved primaries.
pub fn loglik_marginal_with_limit(tree: &FaultTree, obs: &Observation, p: &[f64], limit: usize) -> Result<f64> {
    Ok(MarginalTerm::new(tree, obs, limit)?.loglik(p))
}

pub fn loglik_marginal(tree: &FaultTree, obs: &Observation, p: &[f64]) -> Result<f64> {
    loglik_marginal_with_limit(tree, obs, p, DEFAULT_ENUMERATION_LIMIT)
}

/// Multilinear polynomial in primary probabilities: a sum of signed
/// products of factors `p_j` and `1 - p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GPolynomial {
    /// Factor list (primary index, `true` for `p_j`, `false` for `1 - p_j`),
    /// sorted by index, mapped to its coefficient.
    terms: BTreeMap<Vec<(usize, bool)>, f64>,
}

impl GPolynomial {
    pub fn constant(c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(Vec::new(), c);
        }
        GPolynomial { terms }
    }

    pub fn variable(j: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(j, true)], 1.0);
        GPolynomial { terms }
    }

    /// `1 - self`, with `1 - (1 - p_j)` folded back to `p_j`.
    pub fn complement(&self) -> Self {
        let mut out = GPolynomial::constant(1.0);
        for (factors, &c) in &self.terms {
            out.add_term(factors.clone(), -c);
        }
        out.fold_single_complements();
        out
    }

    fn fold_single_complements(&mut self) {
        // 1 - p_j appears as {[]: 1, [(j, true)]: -1}; rewrite to [(j, false)].
        if self.terms.len() == 2 {
            let one = self.terms.get(&Vec::new()).copied();
            let single = self.terms.iter().find(|(f, _)| f.len() == 1).map(|(f, &c)| (f[0], c));
            if let (Some(1.0), Some(((j, polarity), -1.0))) = (one, single) {
                self.terms.clear();
                self.terms.insert(vec![(j, !polarity)], 1.0);
            }
        }
    }

    fn add_term(&mut self, factors: Vec<(usize, bool)>, c: f64) {
        let entry = self.terms.entry(factors).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    /// Product; binary factors satisfy `E_j^2 = E_j` and `E_j (1 - E_j) = 0`.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut out = GPolynomial { terms: BTreeMap::new() };
        for (fa, &ca) in &self.terms {
            'terms: for (fb, &cb) in &other.terms {
                let mut merged: Vec<(usize, bool)> = Vec::with_capacity(fa.len() + fb.len());
                let (mut x, mut y) = (0, 0);
                while x < fa.len() || y < fb.len() {
                    let next = match (fa.get(x), fb.get(y)) {
                        (Some(&a), Some(&b)) if a.0 == b.0 => {
                            x += 1;
                            y += 1;
                            if a.1 != b.1 {
                                continue 'terms;
                            }
                            a
                        }
                        (Some(&a), Some(&b)) if a.0 < b.0 => {
                            x += 1;
                            a
                        }
                        (Some(_), Some(&b)) => {
                            y += 1;
                            b
                        }
                        (Some(&a), None) => {
                            x += 1;
                            a
                        }
                        (None, Some(&b)) => {
                            y += 1;
                            b
                        }
                        (None, None) => unreachable!(),
                    };
                    merged.push(next);
                }
                out.add_term(merged, ca * cb);
            }
        }
        out
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Primary indices the polynomial depends on.
    pub fn variables(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self.terms.keys().flatten().map(|&(j, _)| j).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(factors, &c)| {
                c * factors
                    .iter()
                    .map(|&(j, on)| if on { p[j] } else { 1.0 - p[j] })
                    .product::<f64>()
            })
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

/// Probability that an event occurs given its observed ancestors.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunction {
    /// The observed ancestors force the event to this value.
    Implied(bool),
    Polynomial(GPolynomial),
}

fn implied_value(tree: &FaultTree, obs: &Observation, i: usize) -> Option<bool> {
    if tree.is_primary(i) {
        return None;
    }
    let values: Vec<Option<bool>> = tree
        .inputs(i)
        .iter()
        .map(|&j| obs.get(j).value().or_else(|| implied_value(tree, obs, j)))
        .collect();
    match tree.gate(i).expect("gate") {
        Gate::And if values.contains(&Some(false)) => Some(false),
        Gate::And if values.iter().all(|v| *v == Some(true)) => Some(true),
        Gate::Or if values.contains(&Some(true)) => Some(true),
        Gate::Or if values.iter().all(|v| *v == Some(false)) => Some(false),
        _ => None,
    }
}

fn occurrence_polynomial(tree: &FaultTree, obs: &Observation, i: usize) -> GPolynomial {
    if tree.is_primary(i) {
        return GPolynomial::variable(i);
    }
    let input_poly = |j: usize| match obs.get(j).value() {
        Some(v) => GPolynomial::constant(if v { 1.0 } else { 0.0 }),
        None => occurrence_polynomial(tree, obs, j),
    };
    let inputs = tree.inputs(i);
    match tree.gate(i).expect("gate") {
        Gate::And => inputs
            .iter()
            .fold(GPolynomial::constant(1.0), |acc, &j| acc.multiply(&input_poly(j))),
        Gate::Or => inputs
            .iter()
            .fold(GPolynomial::constant(1.0), |acc, &j| {
                acc.multiply(&input_poly(j).complement())
            })
            .complement(),
    }
}

/// `g` function of event `i` (canonical index) under an observation:
/// the probability that `i` occurs given its nearest observed ancestors,
/// as a polynomial in the unobserved primary ancestors.
pub fn g_function(tree: &FaultTree, i: usize, obs: &Observation) -> Result<GFunction> {
    if tree.classify_structure() != Structure::PureTree {
        return Err(Error::NotPureTree);
    }
    Ok(g_function_unchecked(tree, i, obs))
}

fn g_function_unchecked(tree: &FaultTree, i: usize, obs: &Observation) -> GFunction {
    match implied_value(tree, obs, i) {
        Some(v) => GFunction::Implied(v),
        None => GFunction::Polynomial(occurrence_polynomial(tree, obs, i)),
    }
}

/// Compiled recursive likelihood: one factor per observed event.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTerm {
    factors: Vec<GPolynomial>,
    impossible: bool,
}

impl TreeTerm {
    pub fn new(tree: &FaultTree, obs: &Observation) -> Result<Self> {
        if tree.classify_structure() != Structure::PureTree {
            return Err(Error::NotPureTree);
        }
        let mut factors = Vec::new();
        let mut impossible = false;
        for i in 0..tree.len() {
            let Some(value) = obs.get(i).value() else { continue };
            match g_function_unchecked(tree, i, obs) {
                GFunction::Implied(v) if v == value => {}
                GFunction::Implied(_) => impossible = true,
                GFunction::Polynomial(g) => {
                    factors.push(if value { g } else { g.complement() });
                }
            }
        }
        Ok(TreeTerm { factors, impossible })
    }

    pub fn factors(&self) -> &[GPolynomial] {
        &self.factors
    }

    pub fn loglik(&self, p: &[f64]) -> f64 {
        if self.impossible {
            return f64::NEG_INFINITY;
        }
        self.factors.iter().map(|g| g.eval(p).ln()).sum()
    }
}

/// Recursive pure-tree log-likelihood of a partial observation.
pub fn loglik_tree(tree: &FaultTree, obs: &Observation, p: &[f64]) -> Result<f64> {
    Ok(TreeTerm::new(tree, obs)?.loglik(p))
}

/// Which likelihood construction a [`DatasetLikelihood`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LikelihoodMethod {
    /// Recursive construction for pure trees, marginalization otherwise.
    #[default]
    Auto,
    Marginal,
    Tree,
}

#[derive(Debug, Clone, PartialEq)]
enum Term {
    Marginal(MarginalTerm),
    Tree(TreeTerm),
}

impl Term {
    fn loglik(&self, p: &[f64]) -> f64 {
        match self {
            Term::Marginal(t) => t.loglik(p),
            Term::Tree(t) => t.loglik(p),
        }
    }
}

/// Something that scores a primary-probability vector.
pub trait LogLikelihood: Sync {
    fn loglik(&self, p: &[f64]) -> f64;
}

impl<F> LogLikelihood for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn loglik(&self, p: &[f64]) -> f64 {
        self(p)
    }
}

/// Log-likelihood of a list of observations, with identical rows merged.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetLikelihood {
    terms: Vec<(Term, usize)>,
    observations: usize,
}

impl DatasetLikelihood {
    /// Compiles every observation. A row that contradicts the tree logic is
    /// rejected with its (1-based) row number.
    pub fn new(tree: &FaultTree, data: &[Observation], method: LikelihoodMethod) -> Result<Self> {
        let method = match method {
            LikelihoodMethod::Auto if tree.classify_structure() == Structure::PureTree => LikelihoodMethod::Tree,
            LikelihoodMethod::Auto => LikelihoodMethod::Marginal,
            m => m,
        };
        let mut seen: HashMap<&Observation, usize> = HashMap::new();
        let mut terms: Vec<(Term, usize)> = Vec::new();
        for (row, obs) in data.iter().enumerate() {
            if obs.len() != tree.len() {
                return Err(Error::ObservationRow {
                    row: row + 1,
                    cause: Box::new(Error::InvalidArgument("observation does not match the tree".into())),
                });
            }
            if let Some(&slot) = seen.get(obs) {
                terms[slot].1 += 1;
                continue;
            }
            propagate_implications(tree, obs).map_err(|e| Error::ObservationRow {
                row: row + 1,
                cause: Box::new(e),
            })?;
            let term = match method {
                LikelihoodMethod::Tree => Term::Tree(TreeTerm::new(tree, obs)?),
                _ => Term::Marginal(MarginalTerm::new(tree, obs, DEFAULT_ENUMERATION_LIMIT)?),
            };
            seen.insert(obs, terms.len());
            terms.push((term, 1));
        }
        Ok(DatasetLikelihood {
            terms,
            observations: data.len(),
        })
    }

    pub fn observation_count(&self) -> usize {
        self.observations
    }

    pub fn distinct_count(&self) -> usize {
        self.terms.len()
    }
}

impl LogLikelihood for DatasetLikelihood {
    fn loglik(&self, p: &[f64]) -> f64 {
        let mut total = 0.0;
        for (term, count) in &self.terms {
            let ll = term.loglik(p);
            if ll == f64::NEG_INFINITY {
                return ll;
            }
            total += *count as f64 * ll;
        }
        total
    }
}

/// Parses an observation CSV: a header of event ids, then one row per
/// observation with cells `0`, `1` or `NA`. Events without a column are NA.
pub fn parse_observations_csv(tree: &FaultTree, text: &str) -> Result<Vec<Observation>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if header.iter().all(str::is_empty) {
        return Ok(Vec::new());
    }
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter() {
        let i = tree.require_index(name)?;
        if columns.contains(&i) {
            return Err(Error::DuplicateId(name.to_owned()));
        }
        columns.push(i);
    }
    let mut data = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::ObservationRow {
            row: row + 1,
            cause: Box::new(Error::Format(e.to_string())),
        })?;
        let mut obs = Observation::unobserved(tree);
        for (&i, cell) in columns.iter().zip(record.iter()) {
            let state = EventState::parse(cell).ok_or_else(|| Error::ObservationRow {
                row: row + 1,
                cause: Box::new(Error::Format(format!("cell `{cell}` is not 0, 1 or NA"))),
            })?;
            obs.set(i, state);
        }
        data.push(obs);
    }
    Ok(data)
}

/// Writes observations with every event as a column, in canonical order.
pub fn observations_csv(tree: &FaultTree, data: &[Observation]) -> String {
    let mut out = tree
        .canonical_order()
        .iter()
        .map(EventId::as_str)
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for obs in data {
        let row: Vec<&str> = obs.states().iter().map(|s| s.as_str()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
