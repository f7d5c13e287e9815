//! Prior simulation and posterior sampling of primary-event probabilities.

use std::collections::{BTreeMap, HashMap};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta::BetaParams;
use crate::error::{Error, Result};
use crate::fault_tree::{EventId, EventState, FaultTree, Structure};
use crate::likelihood::{
    DatasetLikelihood, LikelihoodMethod, LogLikelihood, MarginalTerm, Observation, DEFAULT_ENUMERATION_LIMIT,
};
use crate::rng::{self, Domain, PRIOR_CHUNK};

/// Minimum prior sample size accepted by importance sampling.
pub const MIN_IMPORTANCE_DRAWS: usize = 1000;
/// Importance sampling warns when ESS falls below this fraction of R.
pub const ESS_WARNING_FRACTION: f64 = 0.01;
/// Metropolis keeps at most this many draws unless thinning is given.
pub const MAX_STORED_DRAWS: usize = 100_000;
pub const DEFAULT_STEP_VARIANCE: f64 = 0.25;
pub const DEFAULT_ITERATIONS: usize = 1_000_000;
const MAX_START_ATTEMPTS: usize = 100;

/// Independent beta priors on the primary probabilities, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    ids: Vec<EventId>,
    params: Vec<BetaParams>,
}

/// One entry of the priors file. Elicitation metadata is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamped: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<usize>,
}

impl PriorEntry {
    pub fn plain(params: BetaParams) -> Self {
        PriorEntry {
            a: params.a,
            b: params.b,
            mean: None,
            weight: None,
            interval: None,
            clamped: None,
            group: None,
        }
    }
}

impl PriorSpec {
    pub fn new(tree: &FaultTree, params: Vec<BetaParams>) -> Result<Self> {
        if params.len() != tree.primary_count() {
            return Err(Error::InvalidArgument(format!(
                "{} priors for {} primary events",
                params.len(),
                tree.primary_count()
            )));
        }
        for p in &params {
            BetaParams::new(p.a, p.b)?;
        }
        Ok(PriorSpec {
            ids: tree.primary_ids().cloned().collect(),
            params,
        })
    }

    pub fn uniform(tree: &FaultTree) -> Self {
        PriorSpec {
            ids: tree.primary_ids().cloned().collect(),
            params: vec![BetaParams::uniform(); tree.primary_count()],
        }
    }

    pub fn from_map(tree: &FaultTree, map: &HashMap<EventId, BetaParams>) -> Result<Self> {
        for id in map.keys() {
            let i = tree.require_index(id.as_str())?;
            if !tree.is_primary(i) {
                return Err(Error::NotPrimary(id.to_string()));
            }
        }
        let params = tree
            .primary_ids()
            .map(|id| map.get(id).copied().ok_or_else(|| Error::MissingPrior(id.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tree, params)
    }

    pub fn from_json(tree: &FaultTree, text: &str) -> Result<Self> {
        let entries: BTreeMap<String, PriorEntry> = serde_json::from_str(text)?;
        let map = entries
            .into_iter()
            .map(|(id, e)| Ok((EventId::new(id), BetaParams::new(e.a, e.b)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        Self::from_map(tree, &map)
    }

    pub fn entries(&self) -> BTreeMap<String, PriorEntry> {
        self.ids
            .iter()
            .zip(&self.params)
            .map(|(id, &p)| (id.to_string(), PriorEntry::plain(p)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries()).expect("priors serialize")
    }

    pub fn ids(&self) -> &[EventId] {
        &self.ids
    }

    pub fn params(&self) -> &[BetaParams] {
        &self.params
    }

    pub fn get(&self, id: &str) -> Option<BetaParams> {
        self.ids.iter().position(|e| e.as_str() == id).map(|i| self.params[i])
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn means(&self) -> Vec<f64> {
        self.params.iter().map(BetaParams::mean).collect()
    }

    pub fn ln_density(&self, p: &[f64]) -> f64 {
        self.params.iter().zip(p).map(|(b, &x)| b.ln_pdf(x)).sum()
    }

    fn check_tree(&self, tree: &FaultTree) -> Result<()> {
        if self.ids.len() != tree.primary_count() || self.ids.iter().zip(tree.primary_ids()).any(|(a, b)| a != b) {
            return Err(Error::InvalidArgument(
                "prior does not match the tree's primary events".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SamplingMethod {
    Prior,
    Importance,
    Metropolis,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_sample_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burnin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_variance: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

/// Draws of the primary probability vector, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    ids: Vec<EventId>,
    draws: Vec<f64>,
    pub seed: u64,
    pub method: SamplingMethod,
    pub diagnostics: Diagnostics,
}

impl SampleSet {
    pub fn ids(&self) -> &[EventId] {
        &self.ids
    }

    pub fn dimension(&self) -> usize {
        self.ids.len()
    }

    pub fn len(&self) -> usize {
        if self.ids.is_empty() {
            0
        } else {
            self.draws.len() / self.ids.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let k = self.ids.len();
        &self.draws[r * k..(r + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.ids.len())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|row| row[j]).collect()
    }

    pub fn column_by_id(&self, id: &str) -> Option<Vec<f64>> {
        self.ids.iter().position(|e| e.as_str() == id).map(|j| self.column(j))
    }

    /// Builds a sample set from explicit rows.
    pub fn from_rows(ids: Vec<EventId>, rows: &[Vec<f64>], seed: u64, method: SamplingMethod) -> Result<Self> {
        let k = ids.len();
        let mut draws = Vec::with_capacity(rows.len() * k);
        for row in rows {
            if row.len() != k {
                return Err(Error::InvalidArgument("row length does not match ids".into()));
            }
            draws.extend_from_slice(row);
        }
        Ok(SampleSet {
            ids,
            draws,
            seed,
            method,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Monte Carlo standard error of the mean of `values`, a per-draw
    /// quantity derived from this sample set.
    pub fn monte_carlo_se(&self, values: &[f64]) -> f64 {
        let n = values.len().max(1) as f64;
        let sd = sample_sd(values);
        match self.method {
            SamplingMethod::Prior => sd / n.sqrt(),
            SamplingMethod::Importance => {
                let ess = self.diagnostics.effective_sample_size.unwrap_or(n).max(1.0);
                sd * (1.0 / ess + 1.0 / n).sqrt()
            }
            SamplingMethod::Metropolis => batch_means_se(values),
        }
    }
}

/// Mean shifted by the first value, exact for constant input.
fn sample_mean(values: &[f64]) -> f64 {
    let Some(&shift) = values.first() else {
        return f64::NAN;
    };
    shift + values.iter().map(|v| v - shift).sum::<f64>() / values.len() as f64
}

fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = sample_mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means with batch size `floor(sqrt(n))`.
pub fn batch_means_se(values: &[f64]) -> f64 {
    let n = values.len();
    let size = (n as f64).sqrt().floor().max(1.0) as usize;
    let batches = n / size;
    if batches < 2 {
        return sample_sd(values) / (n.max(1) as f64).sqrt();
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| sample_mean(&values[b * size..(b + 1) * size]))
        .collect();
    sample_sd(&means) / (batches as f64).sqrt()
}

/// Mean, standard deviation and central 95% interval of a quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

pub const MIN_SUMMARY_DRAWS: usize = 100;

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.len() < MIN_SUMMARY_DRAWS {
        return Err(Error::TooFewDraws {
            needed: MIN_SUMMARY_DRAWS,
            got: values.len(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        mean: sample_mean(values),
        sd: sample_sd(values),
        q025: empirical_quantile(&sorted, 0.025),
        q975: empirical_quantile(&sorted, 0.975),
    })
}

/// Counts of `values` in equal-width bins over [0, 1].
pub fn histogram(values: &[f64], bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = ((v * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[b] += 1;
    }
    counts
}

fn open_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `draws` independent prior draws; chunked into fixed-size streams so the
/// matrix is identical for any thread count.
pub fn sample_prior(spec: &PriorSpec, draws: usize, seed: u64) -> Result<SampleSet> {
    if draws == 0 {
        return Err(Error::InvalidArgument("at least one draw is required".into()));
    }
    let samplers: Vec<Beta<f64>> = spec
        .params
        .iter()
        .map(|p| Beta::new(p.a, p.b).map_err(|_| Error::InvalidBeta { a: p.a, b: p.b }))
        .collect::<Result<_>>()?;
    let k = spec.len();
    let chunks = draws.div_ceil(PRIOR_CHUNK);
    let values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = rng::stream(seed, Domain::Prior, c as u64);
            let rows = PRIOR_CHUNK.min(draws - c * PRIOR_CHUNK);
            let mut out = Vec::with_capacity(rows * k);
            for _ in 0..rows {
                for s in &samplers {
                    out.push(open_unit(s.sample(&mut rng)));
                }
            }
            out
        })
        .collect();
    Ok(SampleSet {
        ids: spec.ids.clone(),
        draws: values,
        seed,
        method: SamplingMethod::Prior,
        diagnostics: Diagnostics::default(),
    })
}

/// Per-draw occurrence probability of each non-primary target.
///
/// Pure trees use the gate algebra; with shared causes the gate inputs are
/// dependent, so the target probability is obtained exactly by summing
/// over its primary ancestors.
pub fn push_forward(tree: &FaultTree, samples: &SampleSet, targets: &[&str]) -> Result<Vec<(EventId, Vec<f64>)>> {
    if samples.dimension() != tree.primary_count() {
        return Err(Error::InvalidArgument("samples do not match the tree".into()));
    }
    let indices = targets
        .iter()
        .map(|t| {
            let i = tree.require_index(t)?;
            if tree.is_primary(i) {
                return Err(Error::IsPrimary(t.to_string()));
            }
            Ok(i)
        })
        .collect::<Result<Vec<_>>>()?;

    let per_draw: Vec<Vec<f64>> = if tree.classify_structure() == Structure::PureTree {
        samples
            .draws
            .par_chunks_exact(samples.dimension())
            .map(|p| {
                let all = tree.gate_probabilities(p);
                indices.iter().map(|&i| all[i]).collect()
            })
            .collect()
    } else {
        let terms = indices
            .iter()
            .map(|&i| {
                let mut obs = Observation::unobserved(tree);
                obs.set(i, EventState::One);
                MarginalTerm::new(tree, &obs, DEFAULT_ENUMERATION_LIMIT)
            })
            .collect::<Result<Vec<_>>>()?;
        samples
            .draws
            .par_chunks_exact(samples.dimension())
            .map(|p| terms.iter().map(|t| t.loglik(p).exp()).collect())
            .collect()
    };

    Ok(indices
        .iter()
        .enumerate()
        .map(|(t, &i)| (tree.id(i).clone(), per_draw.iter().map(|row| row[t]).collect()))
        .collect())
}

/// Importance sampling with the prior as proposal and multinomial
/// resampling of `draws` rows proportional to the likelihood weights.
pub fn importance_with(spec: &PriorSpec, likelihood: &dyn LogLikelihood, draws: usize, seed: u64) -> Result<SampleSet> {
    if draws < MIN_IMPORTANCE_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "importance sampling needs at least {MIN_IMPORTANCE_DRAWS} draws"
        )));
    }
    let prior = sample_prior(spec, draws, seed)?;
    let k = prior.dimension();
    let log_weights: Vec<f64> = prior.draws.par_chunks_exact(k).map(|p| likelihood.loglik(p)).collect();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::AllWeightsZero);
    }
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let ess = sum * sum / sum_sq;

    let index = WeightedIndex::new(&weights).map_err(|_| Error::AllWeightsZero)?;
    let mut rng = rng::stream(seed, Domain::Resample, 0);
    let mut resampled = Vec::with_capacity(draws * k);
    for _ in 0..draws {
        let r = index.sample(&mut rng);
        resampled.extend_from_slice(prior.row(r));
    }

    let mut diagnostics = Diagnostics {
        effective_sample_size: Some(ess),
        ..Diagnostics::default()
    };
    if ess < ESS_WARNING_FRACTION * draws as f64 {
        diagnostics.warnings.push(format!(
            "effective sample size {ess:.1} is below {:.0}% of {draws} draws; consider the Metropolis sampler",
            ESS_WARNING_FRACTION * 100.0
        ));
    }
    Ok(SampleSet {
        ids: spec.ids.clone(),
        draws: resampled,
        seed,
        method: SamplingMethod::Importance,
        diagnostics,
    })
}

pub fn posterior_importance(
    spec: &PriorSpec,
    tree: &FaultTree,
    data: &[Observation],
    draws: usize,
    seed: u64,
) -> Result<SampleSet> {
    spec.check_tree(tree)?;
    let likelihood = DatasetLikelihood::new(tree, data, LikelihoodMethod::Auto)?;
    importance_with(spec, &likelihood, draws, seed)
}

/// Random-walk Metropolis settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhSettings {
    pub iterations: usize,
    pub step_variance: f64,
    /// Defaults to 10% of the iterations.
    pub burnin: Option<usize>,
    /// Defaults to the smallest thinning that keeps at most
    /// [`MAX_STORED_DRAWS`] draws.
    pub thin: Option<usize>,
    /// Include the logit change-of-variables factor `p (1 - p)` in the
    /// acceptance ratio. Without it the chain does not target the posterior
    /// in `p`; the option exists only to compare against that variant.
    pub jacobian: bool,
}

impl Default for MhSettings {
    fn default() -> Self {
        MhSettings {
            iterations: DEFAULT_ITERATIONS,
            step_variance: DEFAULT_STEP_VARIANCE,
            burnin: None,
            thin: None,
            jacobian: true,
        }
    }
}

impl MhSettings {
    pub fn with_iterations(iterations: usize) -> Self {
        MhSettings {
            iterations,
            ..Self::default()
        }
    }

    pub fn resolved_burnin(&self) -> usize {
        self.burnin.unwrap_or(self.iterations / 10)
    }

    pub fn resolved_thin(&self) -> usize {
        let kept = self.iterations.saturating_sub(self.resolved_burnin());
        self.thin.unwrap_or_else(|| kept.div_ceil(MAX_STORED_DRAWS).max(1))
    }
}

struct LogitTarget<'a> {
    spec: &'a PriorSpec,
    likelihood: &'a dyn LogLikelihood,
    jacobian: bool,
}

impl LogitTarget<'_> {
    /// Log target at logit coordinates `lambda`; fills `p`.
    fn eval(&self, lambda: &[f64], p: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for ((&l, prior), slot) in lambda.iter().zip(&self.spec.params).zip(p.iter_mut()) {
            let x = 1.0 / (1.0 + (-l).exp());
            if !(x > 0.0 && x < 1.0) {
                return f64::NEG_INFINITY;
            }
            *slot = x;
            // ln p = -softplus(-l), ln(1 - p) = -softplus(l)
            let ln_p = -softplus(-l);
            let ln_q = -softplus(l);
            let (ea, eb) = if self.jacobian {
                (prior.a, prior.b)
            } else {
                (prior.a - 1.0, prior.b - 1.0)
            };
            total += ea * ln_p + eb * ln_q;
        }
        if !total.is_finite() {
            return f64::NEG_INFINITY;
        }
        total + self.likelihood.loglik(p)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Random-walk Metropolis over logit coordinates with a joint normal
/// proposal of variance `step_variance` in every coordinate.
pub fn metropolis_with(
    spec: &PriorSpec,
    likelihood: &dyn LogLikelihood,
    settings: &MhSettings,
    seed: u64,
) -> Result<SampleSet> {
    let burnin = settings.resolved_burnin();
    let thin = settings.resolved_thin();
    if settings.iterations <= burnin {
        return Err(Error::InvalidArgument("iterations must exceed burn-in".into()));
    }
    if !(settings.step_variance > 0.0 && settings.step_variance.is_finite()) {
        return Err(Error::InvalidArgument("step variance must be positive".into()));
    }
    if thin == 0 {
        return Err(Error::InvalidArgument("thinning must be at least 1".into()));
    }
    let k = spec.len();
    let target = LogitTarget {
        spec,
        likelihood,
        jacobian: settings.jacobian,
    };

    let starts = sample_prior(spec, MAX_START_ATTEMPTS, rng::derive_seed(seed, Domain::ChainStart, 0))?;
    let mut lambda = vec![0.0; k];
    let mut p = vec![0.0; k];
    let mut current = f64::NEG_INFINITY;
    for row in starts.rows() {
        for (l, &x) in lambda.iter_mut().zip(row) {
            *l = (x / (1.0 - x)).ln();
        }
        current = target.eval(&lambda, &mut p);
        if current.is_finite() {
            break;
        }
    }
    if !current.is_finite() {
        return Err(Error::NoValidStart(MAX_START_ATTEMPTS));
    }

    let normal = Normal::new(0.0, settings.step_variance.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::stream(seed, Domain::Chain, 0);
    let mut proposal = vec![0.0; k];
    let mut proposal_p = vec![0.0; k];
    let stored_rows = (settings.iterations - burnin) / thin;
    let mut stored = Vec::with_capacity(stored_rows * k);
    let mut accepted = 0usize;
    for it in 0..settings.iterations {
        for (dst, &src) in proposal.iter_mut().zip(&lambda) {
            *dst = src + normal.sample(&mut rng);
        }
        let candidate = target.eval(&proposal, &mut proposal_p);
        let u: f64 = rng.random();
        if candidate > f64::NEG_INFINITY && u.ln() < candidate - current {
            std::mem::swap(&mut lambda, &mut proposal);
            std::mem::swap(&mut p, &mut proposal_p);
            current = candidate;
            accepted += 1;
        }
        if it >= burnin && (it - burnin + 1).is_multiple_of(thin) {
            stored.extend_from_slice(&p);
        }
    }

    Ok(SampleSet {
        ids: spec.ids.clone(),
        draws: stored,
        seed,
        method: SamplingMethod::Metropolis,
        diagnostics: Diagnostics {
            acceptance_rate: Some(accepted as f64 / settings.iterations as f64),
            iterations: Some(settings.iterations),
            burnin: Some(burnin),
            thin: Some(thin),
            step_variance: Some(settings.step_variance),
            ..Diagnostics::default()
        },
    })
}

pub fn posterior_mh(
    spec: &PriorSpec,
    tree: &FaultTree,
    data: &[Observation],
    settings: &MhSettings,
    seed: u64,
) -> Result<SampleSet> {
    spec.check_tree(tree)?;
    let likelihood = DatasetLikelihood::new(tree, data, LikelihoodMethod::Auto)?;
    metropolis_with(spec, &likelihood, settings, seed)
}

/// Closed-form posterior for an OR-only tree after `m` observations of the
/// top event not occurring: every primary is then known to be 0, and
/// beta(a, b) updates to beta(a, b + m).
pub fn conjugate_oracle(spec: &PriorSpec, tree: &FaultTree, m: usize) -> Result<PriorSpec> {
    spec.check_tree(tree)?;
    if let Some(i) = tree.first_and_gate() {
        return Err(Error::AndGatePresent(tree.id(i).to_string()));
    }
    Ok(PriorSpec {
        ids: spec.ids.clone(),
        params: spec
            .params
            .iter()
            .map(|p| BetaParams {
                a: p.a,
                b: p.b + m as f64,
            })
            .collect(),
    })
}

/// Top-event mean `1 - prod (b_i + m) / (a_i + b_i + m)` of an OR-only tree.
pub fn conjugate_top_mean(spec: &PriorSpec, m: usize) -> f64 {
    let m = m as f64;
    1.0 - spec.params.iter().map(|p| (p.b + m) / (p.a + p.b + m)).product::<f64>()
}

/// Summary of one quantity in a posterior or prior report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub event: String,
    pub primary: bool,
    #[serde(flatten)]
    pub summary: Summary,
    pub mcse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub method: SamplingMethod,
    pub seed: u64,
    pub draws: usize,
    pub diagnostics: Diagnostics,
    pub quantities: Vec<QuantitySummary>,
}

impl SummaryReport {
    pub fn get(&self, event: &str) -> Option<&QuantitySummary> {
        self.quantities.iter().find(|q| q.event == event)
    }
}

/// Summaries of every primary plus the requested non-primary targets.
pub fn summarize_samples(tree: &FaultTree, samples: &SampleSet, targets: &[&str]) -> Result<SummaryReport> {
    let mut quantities = Vec::new();
    for (j, id) in samples.ids().iter().enumerate() {
        let column = samples.column(j);
        quantities.push(QuantitySummary {
            event: id.to_string(),
            primary: true,
            summary: summarize(&column)?,
            mcse: samples.monte_carlo_se(&column),
        });
    }
    for (id, values) in push_forward(tree, samples, targets)? {
        quantities.push(QuantitySummary {
            event: id.to_string(),
            primary: false,
            summary: summarize(&values)?,
            mcse: samples.monte_carlo_se(&values),
        });
    }
    Ok(SummaryReport {
        method: samples.method,
        seed: samples.seed,
        draws: samples.len(),
        diagnostics: samples.diagnostics.clone(),
        quantities,
    })
}

/// Draws as CSV: header of event ids, one row per draw.
pub fn draws_csv(ids: &[String], columns: &[Vec<f64>]) -> String {
    let mut out = ids.join(",");
    out.push('\n');
    let rows = columns.first().map_or(0, Vec::len);
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format!("{}", c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Parses a draws CSV back into `(ids, columns)`.
pub fn parse_draws_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format("empty draws file".into()))?
        .split(',')
        .map(|s| s.trim().to_owned())
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (row, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Format(format!(
                "draws row {} has {} cells",
                row + 1,
                cells.len()
            )));
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(
                cell.trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("bad number `{cell}` in draws row {}", row + 1)))?,
            );
        }
    }
    Ok((header, columns))
}
