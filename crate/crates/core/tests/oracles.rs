//! Likelihoods and beta numerics against independent brute-force references.

use ftrisk::data;
use ftrisk::fault_tree::TreeDocument;
use ftrisk::likelihood::{g_function, DatasetLikelihood, GFunction, LikelihoodMethod, LogLikelihood};
use ftrisk::rng::{self, Domain};
use ftrisk::{
    fit_central_interval, loglik_marginal, loglik_tree, propagate_implications, BetaParams, EventState, FaultTree,
    Gate, Observation,
};
use rand::Rng;
use statrs::distribution::{Beta, ContinuousCDF};

/// Sums the probability of every primary assignment whose evaluation agrees
/// with the observed events.
fn brute_force_likelihood(tree: &FaultTree, obs: &Observation, p: &[f64]) -> f64 {
    let k = tree.primary_count();
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        let v: Vec<bool> = (0..k).map(|i| mask >> i & 1 == 1).collect();
        let full = tree.evaluate(&v);
        let agrees = (0..tree.len()).all(|i| obs.get(i).value().is_none_or(|x| x == full[i]));
        if agrees {
            total += v
                .iter()
                .zip(p)
                .map(|(&e, &q)| if e { q } else { 1.0 - q })
                .product::<f64>();
        }
    }
    total
}

fn shared_cause_tree() -> FaultTree {
    let doc = TreeDocument::new("T")
        .primary("A", "")
        .primary("B", "")
        .primary("C", "")
        .primary("D", "")
        .gate("G1", "", Gate::Or, &["A", "B"])
        .gate("G2", "", Gate::And, &["B", "C"])
        .gate("G3", "", Gate::Or, &["G2", "D"])
        .gate("T", "", Gate::And, &["G1", "G3"]);
    FaultTree::from_document(&doc).unwrap()
}

fn random_observation(tree: &FaultTree, rng: &mut impl Rng) -> (Observation, Vec<f64>) {
    let k = tree.primary_count();
    let v: Vec<bool> = (0..k).map(|_| rng.random()).collect();
    let full = tree.evaluate(&v);
    let mut obs = Observation::complete(&full);
    for i in 0..tree.len() {
        if rng.random::<f64>() < 0.5 {
            obs.set(i, EventState::Na);
        }
    }
    let p = (0..k).map(|_| rng.random_range(0.02..0.98)).collect();
    (obs, p)
}

#[test]
fn likelihoods_match_brute_force_enumeration() {
    let mut rng = rng::stream(11, Domain::Simulation, 0);
    for tree in [data::fig1_tree(), data::atv_tree()] {
        for _ in 0..100 {
            let (obs, p) = random_observation(&tree, &mut rng);
            let expected = brute_force_likelihood(&tree, &obs, &p);
            for ll in [
                loglik_marginal(&tree, &obs, &p).unwrap(),
                loglik_tree(&tree, &obs, &p).unwrap(),
            ] {
                assert!(
                    (ll.exp() - expected).abs() <= 1e-12 * expected,
                    "{} vs {expected}",
                    ll.exp()
                );
            }
        }
    }
}

#[test]
fn shared_cause_marginal_matches_brute_force() {
    let tree = shared_cause_tree();
    let mut rng = rng::stream(12, Domain::Simulation, 0);
    for _ in 0..200 {
        let (obs, p) = random_observation(&tree, &mut rng);
        let expected = brute_force_likelihood(&tree, &obs, &p);
        let ll = loglik_marginal(&tree, &obs, &p).unwrap();
        assert!((ll.exp() - expected).abs() <= 1e-12 * expected);
    }
    assert!(loglik_tree(&tree, &Observation::unobserved(&tree), &[0.5; 4]).is_err());
}

#[test]
fn implications_leave_likelihood_unchanged() {
    let tree = data::atv_tree();
    let mut rng = rng::stream(13, Domain::Simulation, 0);
    for _ in 0..100 {
        let (obs, p) = random_observation(&tree, &mut rng);
        let closed = propagate_implications(&tree, &obs).unwrap();
        let a = loglik_marginal(&tree, &obs, &p).unwrap();
        let b = loglik_marginal(&tree, &closed, &p).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn dataset_likelihood_is_a_sum_over_observations() {
    let tree = data::fig1_tree();
    let mut rng = rng::stream(14, Domain::Simulation, 0);
    let (_, p) = random_observation(&tree, &mut rng);
    let data: Vec<Observation> = (0..30).map(|_| random_observation(&tree, &mut rng).0).collect();
    let separate: f64 = data.iter().map(|o| loglik_marginal(&tree, o, &p).unwrap()).sum();
    for method in [
        LikelihoodMethod::Auto,
        LikelihoodMethod::Marginal,
        LikelihoodMethod::Tree,
    ] {
        let joint = DatasetLikelihood::new(&tree, &data, method).unwrap().loglik(&p);
        assert!((joint - separate).abs() <= 1e-10 * separate.abs());
    }
}

/// P(E_i = 1 | observed events among its ancestors), by enumerating the
/// unobserved primaries below `i`.
fn conditional_occurrence(tree: &FaultTree, i: usize, obs: &Observation, p: &[f64]) -> f64 {
    let below = tree.ancestors(i);
    let k = tree.primary_count();
    let (mut hit, mut total) = (0.0, 0.0);
    for mask in 0u32..(1 << k) {
        let v: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
        let full = tree.evaluate(&v);
        if !below.iter().all(|&j| obs.get(j).value().is_none_or(|x| x == full[j])) {
            continue;
        }
        let w: f64 = v
            .iter()
            .zip(p)
            .enumerate()
            .filter(|(j, _)| below.contains(j))
            .map(|(_, (&e, &q))| if e { q } else { 1.0 - q })
            .product();
        total += w;
        if full[i] {
            hit += w;
        }
    }
    // primaries outside the subtree repeat every weight equally in both sums
    hit / total
}

#[test]
fn occurrence_polynomials_match_enumeration() {
    let tree = data::fig1_tree();
    let mut rng = rng::stream(15, Domain::Simulation, 0);
    for _ in 0..100 {
        let (obs, p) = random_observation(&tree, &mut rng);
        for i in tree.primary_count()..tree.len() {
            if obs.get(i).is_observed() {
                continue;
            }
            let expected = conditional_occurrence(&tree, i, &obs, &p);
            if !expected.is_finite() {
                continue;
            }
            match g_function(&tree, i, &obs).unwrap() {
                GFunction::Polynomial(g) => assert!((g.eval(&p) - expected).abs() < 1e-12),
                GFunction::Implied(v) => assert_eq!(f64::from(u8::from(v)), expected),
            }
        }
    }
}

#[test]
fn incomplete_beta_matches_statrs() {
    for &(a, b) in &[
        (0.5, 0.5),
        (1.0, 1.0),
        (1.65, 1078.5),
        (2.5, 120.0),
        (4.0, 10.0),
        (30.0, 2.0),
        (600.0, 700.0),
    ] {
        let ours = BetaParams::new(a, b).unwrap();
        let theirs = Beta::new(a, b).unwrap();
        for i in 1..200 {
            let x = i as f64 / 200.0;
            assert!(
                (ours.cdf(x) - theirs.cdf(x)).abs() < 1e-10,
                "cdf({x}) for beta({a}, {b})"
            );
        }
        for q in [0.001, 0.025, 0.5, 0.975, 0.999] {
            let expected = theirs.inverse_cdf(q);
            assert!(
                (ours.quantile(q) - expected).abs() < 1e-7 * expected.max(1e-3),
                "quantile {q} of beta({a}, {b})"
            );
        }
    }
}

#[test]
fn central_fits_hit_statrs_quantiles() {
    for (lo, hi) in [(0.01, 0.05), (0.002, 0.011), (0.1, 0.3), (0.3, 0.9), (1e-4, 1e-3)] {
        let fit = fit_central_interval(lo, hi).unwrap();
        let reference = Beta::new(fit.a, fit.b).unwrap();
        assert!((reference.cdf(lo) - 0.025).abs() < 1e-6);
        assert!((reference.cdf(hi) - 0.975).abs() < 1e-6);
    }
}
