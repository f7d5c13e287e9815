//! Synthetic datasets, masking policies and repeated-update studies.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault_tree::{EventId, EventState, FaultTree};
use crate::inference::{
    importance_with, metropolis_with, push_forward, summarize, MhSettings, PriorSpec, SampleSet, SamplingMethod,
};
use crate::likelihood::{DatasetLikelihood, LikelihoodMethod, LogLikelihood, Observation};
use crate::rng::{self, Domain};

/// Which events of a simulated assignment are kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MaskPolicy {
    Complete,
    /// Each event kept independently with probability `q`.
    Random {
        q: f64,
    },
    TopOnly,
    TopAndIntermediate,
}

impl MaskPolicy {
    pub fn random(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "keep probability {q} must lie in (0, 1)"
            )));
        }
        Ok(MaskPolicy::Random { q })
    }

    /// Parses `complete`, `top-only`, `top-and-intermediate` or `random:<q>`.
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "complete" => Ok(MaskPolicy::Complete),
            "top-only" => Ok(MaskPolicy::TopOnly),
            "top-and-intermediate" => Ok(MaskPolicy::TopAndIntermediate),
            other => match other.strip_prefix("random:") {
                Some(q) => Self::random(
                    q.parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad keep probability `{q}`")))?,
                ),
                None => Err(Error::InvalidArgument(format!("unknown mask policy `{other}`"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            MaskPolicy::Complete => "complete".into(),
            MaskPolicy::Random { q } => format!("random:{q}"),
            MaskPolicy::TopOnly => "top-only".into(),
            MaskPolicy::TopAndIntermediate => "top-and-intermediate".into(),
        }
    }
}

fn check_truth(tree: &FaultTree, p_true: &[f64]) -> Result<()> {
    if p_true.len() != tree.primary_count() {
        return Err(Error::InvalidArgument(format!(
            "{} true probabilities for {} primary events",
            p_true.len(),
            tree.primary_count()
        )));
    }
    if p_true.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("true probabilities must lie in [0, 1]".into()));
    }
    Ok(())
}

fn draw_assignment(tree: &FaultTree, p_true: &[f64], rng: &mut ChaCha8Rng) -> Vec<bool> {
    let primary: Vec<bool> = p_true.iter().map(|&p| rng.random::<f64>() < p).collect();
    tree.evaluate(&primary)
}

/// One full assignment: independent Bernoulli primaries, all other events
/// derived from the gates.
pub fn simulate_observation(tree: &FaultTree, p_true: &[f64], seed: u64) -> Result<Vec<bool>> {
    check_truth(tree, p_true)?;
    Ok(draw_assignment(
        tree,
        p_true,
        &mut rng::stream(seed, Domain::Dataset, 0),
    ))
}

fn mask_with(tree: &FaultTree, full: &[bool], policy: MaskPolicy, rng: &mut ChaCha8Rng) -> Observation {
    let mut obs = Observation::complete(full);
    for i in 0..full.len() {
        let keep = match policy {
            MaskPolicy::Complete => true,
            MaskPolicy::Random { q } => rng.random::<f64>() < q,
            MaskPolicy::TopOnly => i == tree.top(),
            MaskPolicy::TopAndIntermediate => !tree.is_primary(i),
        };
        if !keep {
            obs.set(i, EventState::Na);
        }
    }
    obs
}

/// Replaces the values the policy does not retain with NA.
pub fn mask(tree: &FaultTree, full: &[bool], policy: MaskPolicy, seed: u64) -> Result<Observation> {
    if full.len() != tree.len() {
        return Err(Error::InvalidArgument("assignment does not match the tree".into()));
    }
    Ok(mask_with(tree, full, policy, &mut rng::stream(seed, Domain::Mask, 0)))
}

/// `m` full assignments drawn from one seed.
pub fn simulate_dataset(tree: &FaultTree, p_true: &[f64], m: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    check_truth(tree, p_true)?;
    let mut rng = rng::stream(seed, Domain::Dataset, 0);
    Ok((0..m).map(|_| draw_assignment(tree, p_true, &mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sampler {
    Importance { draws: usize },
    Metropolis(MhSettings),
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub tree: FaultTree,
    pub truth: Vec<f64>,
    pub prior: PriorSpec,
    pub m: usize,
    /// Every policy masks the same underlying complete dataset within a
    /// replicate.
    pub policies: Vec<MaskPolicy>,
    pub replicates: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        check_truth(&self.tree, &self.truth)?;
        if self.replicates == 0 || self.m == 0 || self.policies.is_empty() {
            return Err(Error::InvalidArgument(
                "a study needs at least one replicate, one observation and one policy".into(),
            ));
        }
        if self.prior.ids().iter().ne(self.tree.primary_ids()) {
            return Err(Error::InvalidArgument(
                "prior does not match the tree's primary events".into(),
            ));
        }
        Ok(())
    }

    /// Seed of replicate `r`; replicates can be re-run in isolation.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        rng::derive_seed(self.seed, Domain::Replicate, r as u64)
    }

    /// The masked datasets of replicate `r`, one per policy.
    pub fn replicate_datasets(&self, r: usize) -> Result<Vec<Vec<Observation>>> {
        self.validate()?;
        let seed = self.replicate_seed(r);
        let full = simulate_dataset(&self.tree, &self.truth, self.m, seed)?;
        Ok(self
            .policies
            .iter()
            .enumerate()
            .map(|(k, &policy)| {
                let mut rng = rng::stream(seed, Domain::Mask, k as u64);
                full.iter()
                    .map(|row| mask_with(&self.tree, row, policy, &mut rng))
                    .collect()
            })
            .collect())
    }
}

/// Aggregates for one event under one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityAggregate {
    pub event: String,
    pub truth: f64,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: MaskPolicy,
    pub succeeded: usize,
    pub failures: Vec<ReplicateFailure>,
    /// Replicates whose dataset log-likelihood at the posterior mean was
    /// not finite.
    pub nonfinite_loglik: usize,
    pub quantities: Vec<QuantityAggregate>,
}

impl PolicyReport {
    pub fn get(&self, event: &str) -> Option<&QuantityAggregate> {
        self.quantities.iter().find(|q| q.event == event)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    pub m: usize,
    pub replicates: usize,
    pub sampler: Sampler,
    pub policies: Vec<PolicyReport>,
}

impl StudyReport {
    pub fn policy(&self, policy: MaskPolicy) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.policy == policy)
    }

    /// Rows of `policy,event,truth,mean,sd,q025,q975,rmse`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,event,truth,mean,sd,q025,q975,rmse\n");
        for p in &self.policies {
            for q in &p.quantities {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    p.policy.name(),
                    q.event,
                    q.truth,
                    q.mean,
                    q.sd,
                    q.q025,
                    q.q975,
                    q.rmse
                ));
            }
        }
        out
    }
}

/// Per-event (mean, sd, q025, q975) of one replicate posterior.
type ReplicateSummary = Vec<[f64; 4]>;

fn non_primary_ids(tree: &FaultTree) -> Vec<&str> {
    (tree.primary_count()..tree.len())
        .map(|i| tree.id(i).as_str())
        .collect()
}

fn true_probabilities(tree: &FaultTree, truth: &[f64]) -> Result<Vec<f64>> {
    let ids: Vec<EventId> = tree.primary_ids().cloned().collect();
    let point = SampleSet::from_rows(ids, &[truth.to_vec()], 0, SamplingMethod::Prior)?;
    let mut out = truth.to_vec();
    for (_, values) in push_forward(tree, &point, &non_primary_ids(tree))? {
        out.push(values[0]);
    }
    Ok(out)
}

fn run_replicate(config: &StudyConfig, dataset: &[Observation], seed: u64) -> Result<(ReplicateSummary, bool)> {
    let likelihood = DatasetLikelihood::new(&config.tree, dataset, LikelihoodMethod::Auto)?;
    let samples = match config.sampler {
        Sampler::Importance { draws } => importance_with(&config.prior, &likelihood, draws, seed)?,
        Sampler::Metropolis(settings) => metropolis_with(&config.prior, &likelihood, &settings, seed)?,
    };
    let mut summary = Vec::with_capacity(config.tree.len());
    let mut columns: Vec<Vec<f64>> = (0..samples.dimension()).map(|j| samples.column(j)).collect();
    for (_, values) in push_forward(&config.tree, &samples, &non_primary_ids(&config.tree))? {
        columns.push(values);
    }
    for values in &columns {
        let s = summarize(values)?;
        summary.push([s.mean, s.sd, s.q025, s.q975]);
    }
    let mean_p: Vec<f64> = summary[..samples.dimension()].iter().map(|s| s[0]).collect();
    let finite = likelihood.loglik(&mean_p).is_finite();
    Ok((summary, finite))
}

/// Runs every replicate under every policy and aggregates the posterior
/// summaries. Replicates run in parallel; the reduction is in replicate
/// order, so the report does not depend on scheduling.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let truth = true_probabilities(&config.tree, &config.truth)?;
    let outcomes: Vec<Vec<std::result::Result<(ReplicateSummary, bool), String>>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let datasets = match config.replicate_datasets(r) {
                Ok(d) => d,
                Err(e) => return vec![Err(e.to_string()); config.policies.len()],
            };
            let seed = config.replicate_seed(r);
            datasets
                .iter()
                .enumerate()
                .map(|(k, data)| {
                    run_replicate(config, data, rng::derive_seed(seed, Domain::Simulation, k as u64))
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let policies = config
        .policies
        .iter()
        .enumerate()
        .map(|(k, &policy)| {
            let mut failures = Vec::new();
            let mut ok: Vec<&ReplicateSummary> = Vec::new();
            let mut nonfinite = 0;
            for (r, per_policy) in outcomes.iter().enumerate() {
                match &per_policy[k] {
                    Ok((summary, finite)) => {
                        ok.push(summary);
                        if !finite {
                            nonfinite += 1;
                        }
                    }
                    Err(error) => failures.push(ReplicateFailure {
                        replicate: r,
                        error: error.clone(),
                    }),
                }
            }
            let n = ok.len() as f64;
            let quantities = if ok.is_empty() {
                Vec::new()
            } else {
                (0..config.tree.len())
                    .map(|e| {
                        let avg = |f: usize| ok.iter().map(|s| s[e][f]).sum::<f64>() / n;
                        let mse = ok.iter().map(|s| (s[e][0] - truth[e]).powi(2)).sum::<f64>() / n;
                        QuantityAggregate {
                            event: config.tree.id(e).to_string(),
                            truth: truth[e],
                            mean: avg(0),
                            sd: avg(1),
                            q025: avg(2),
                            q975: avg(3),
                            rmse: mse.sqrt(),
                        }
                    })
                    .collect()
            };
            PolicyReport {
                policy,
                succeeded: ok.len(),
                failures,
                nonfinite_loglik: nonfinite,
                quantities,
            }
        })
        .collect();

    Ok(StudyReport {
        seed: config.seed,
        m: config.m,
        replicates: config.replicates,
        sampler: config.sampler,
        policies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_tree::{Gate, TreeDocument};

    fn fig1() -> FaultTree {
        FaultTree::from_document(
            &TreeDocument::new("E7")
                .primary("E1", "")
                .primary("E2", "")
                .primary("E3", "")
                .primary("E4", "")
                .gate("E5", "", Gate::Or, &["E1", "E2"])
                .gate("E6", "", Gate::And, &["E3", "E4"])
                .gate("E7", "", Gate::Or, &["E5", "E6"]),
        )
        .unwrap()
    }

    #[test]
    fn zero_truth_gives_all_zero() {
        let tree = fig1();
        assert_eq!(simulate_observation(&tree, &[0.0; 4], 9).unwrap(), vec![false; 7]);
        assert_eq!(
            simulate_observation(&tree, &[0.3; 4], 9).unwrap(),
            simulate_observation(&tree, &[0.3; 4], 9).unwrap()
        );
    }

    #[test]
    fn policies() {
        let tree = fig1();
        let full = tree.evaluate(&[true, false, true, true]);
        assert_eq!(
            mask(&tree, &full, MaskPolicy::Complete, 1).unwrap(),
            Observation::complete(&full)
        );
        let top = mask(&tree, &full, MaskPolicy::TopOnly, 1).unwrap();
        assert_eq!(top.observed_count(), 1);
        assert!(top.get(tree.top()).is_observed());
        let inter = mask(&tree, &full, MaskPolicy::TopAndIntermediate, 1).unwrap();
        assert_eq!(inter.observed_count(), 3);
        let random = mask(&tree, &full, MaskPolicy::random(0.5).unwrap(), 4).unwrap();
        for (i, &value) in full.iter().enumerate() {
            let s = random.get(i);
            assert!(!s.is_observed() || s.value() == Some(value));
        }
        assert!(MaskPolicy::random(1.0).is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        for p in [
            MaskPolicy::Complete,
            MaskPolicy::TopOnly,
            MaskPolicy::TopAndIntermediate,
            MaskPolicy::Random { q: 0.5 },
        ] {
            assert_eq!(MaskPolicy::parse(&p.name()).unwrap(), p);
        }
        assert!(MaskPolicy::parse("sometimes").is_err());
    }

    #[test]
    fn study_rejects_bad_config() {
        let tree = fig1();
        let config = StudyConfig {
            prior: PriorSpec::uniform(&tree),
            tree,
            truth: vec![0.1; 4],
            m: 0,
            policies: vec![MaskPolicy::Complete],
            replicates: 1,
            sampler: Sampler::Importance { draws: 1000 },
            seed: 1,
        };
        assert!(run_study(&config).is_err());
    }
}
