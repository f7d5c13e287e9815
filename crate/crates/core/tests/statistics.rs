//! Statistical checks of the samplers and the simulation study.

use ftrisk::data;
use ftrisk::inference::summarize_samples;
use ftrisk::likelihood::{DatasetLikelihood, LikelihoodMethod, LogLikelihood};
use ftrisk::rng::{derive_seed, Domain};
use ftrisk::simulation::{simulate_dataset, Sampler};
use ftrisk::{
    build_priors, mask, posterior_importance, posterior_mh, simulate_observation, EventState, MaskPolicy, MhSettings,
    Observation, PriorSpec, SampleSet, StudyConfig,
};

fn mean_and_se(samples: &SampleSet, j: usize) -> (f64, f64) {
    let column = samples.column(j);
    let mean = column.iter().sum::<f64>() / column.len() as f64;
    (mean, samples.monte_carlo_se(&column))
}

#[test]
fn top_event_rate_of_simulated_data() {
    let tree = data::fig1_tree();
    let n = 100_000;
    let hits = (0..n)
        .filter(|&r| {
            simulate_observation(&tree, &data::FIG1_TRUTH, derive_seed(1, Domain::Simulation, r as u64)).unwrap()
                [tree.top()]
        })
        .count();
    let rate = hits as f64 / n as f64;
    assert!((rate - 0.0737).abs() <= 0.003, "{rate}");
}

#[test]
fn random_masking_keeps_half_the_events() {
    let tree = data::fig1_tree();
    let full = simulate_observation(&tree, &data::FIG1_TRUTH, 3).unwrap();
    let policy = MaskPolicy::random(0.5).unwrap();
    let n = 10_000;
    let mut kept = 0;
    for s in 0..n {
        let obs = mask(&tree, &full, policy, derive_seed(4, Domain::Mask, s)).unwrap();
        for (i, &value) in full.iter().enumerate() {
            if let Some(v) = obs.get(i).value() {
                assert_eq!(v, value);
                kept += 1;
            }
        }
    }
    let mean = kept as f64 / n as f64;
    assert!((mean - 3.5).abs() <= 0.1, "{mean}");
}

#[test]
fn single_dataset_top_posterior_is_in_band() {
    let tree = data::fig1_tree();
    let prior = build_priors(&tree, &data::fig4_incomplete_sessions())
        .unwrap()
        .prior_spec(&tree)
        .unwrap();
    let data: Vec<Observation> = simulate_dataset(&tree, &data::FIG1_TRUTH, 40, 5)
        .unwrap()
        .iter()
        .map(|full| Observation::complete(full))
        .collect();
    let samples = posterior_mh(&prior, &tree, &data, &MhSettings::default(), 6).unwrap();
    let top = summarize_samples(&tree, &samples, &["E7"])
        .unwrap()
        .get("E7")
        .unwrap()
        .summary
        .mean;
    assert!((0.05..=0.10).contains(&top), "{top}");
}

#[test]
fn samplers_agree_on_partial_data() {
    let tree = data::fig1_tree();
    let prior = PriorSpec::uniform(&tree);
    let data: Vec<Observation> = simulate_dataset(&tree, &[0.2, 0.3, 0.3, 0.4], 20, 7)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(l, full)| mask(&tree, full, MaskPolicy::random(0.5).unwrap(), l as u64).unwrap())
        .collect();
    let is = posterior_importance(&prior, &tree, &data, 200_000, 8).unwrap();
    let mh = posterior_mh(&prior, &tree, &data, &MhSettings::default(), 8).unwrap();
    for j in 0..tree.primary_count() {
        let (a, sa) = mean_and_se(&is, j);
        let (b, sb) = mean_and_se(&mh, j);
        let z = (a - b).abs() / (sa * sa + sb * sb).sqrt();
        assert!(z <= 3.0, "event {j}: {a} vs {b} ({z:.2} SE)");
    }
}

#[test]
fn uncorrected_chain_misses_the_oracle() {
    let tree = data::atv_tree();
    let prior = data::atv_published_priors();
    let mut obs = Observation::unobserved(&tree);
    obs.set(tree.top(), EventState::Zero);
    let data = vec![obs; 5];
    let settings = MhSettings {
        jacobian: false,
        ..MhSettings::with_iterations(300_000)
    };
    let samples = posterior_mh(&prior, &tree, &data, &settings, 9).unwrap();
    let top = summarize_samples(&tree, &samples, &["E14"])
        .unwrap()
        .get("E14")
        .unwrap()
        .summary
        .mean;
    let oracle = ftrisk::conjugate_top_mean(&prior, 5);
    assert!(oracle - top > 0.04, "uncorrected {top}, oracle {oracle}");
}

#[test]
fn more_data_narrows_the_posterior() {
    let tree = data::fig1_tree();
    let config = StudyConfig {
        tree: tree.clone(),
        truth: data::FIG1_TRUTH.to_vec(),
        prior: PriorSpec::uniform(&tree),
        m: 40,
        policies: vec![MaskPolicy::Complete, MaskPolicy::TopOnly],
        replicates: 20,
        sampler: Sampler::Importance { draws: 20_000 },
        seed: 10,
    };
    // per-replicate posterior SDs, summed over primaries
    let mut sds = [Vec::new(), Vec::new()];
    for r in 0..config.replicates {
        let datasets = config.replicate_datasets(r).unwrap();
        for (p, data) in datasets.iter().enumerate() {
            let seed = derive_seed(config.replicate_seed(r), Domain::Simulation, p as u64);
            let samples = posterior_importance(&config.prior, &tree, data, 20_000, seed).unwrap();
            let lik = DatasetLikelihood::new(&tree, data, LikelihoodMethod::Auto).unwrap();
            let means: Vec<f64> = (0..tree.primary_count()).map(|j| mean_and_se(&samples, j).0).collect();
            assert!(lik.loglik(&means).is_finite());
            let total: f64 = (0..tree.primary_count())
                .map(|j| {
                    let c = samples.column(j);
                    let m = c.iter().sum::<f64>() / c.len() as f64;
                    (c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (c.len() - 1) as f64).sqrt()
                })
                .sum();
            sds[p].push(total);
        }
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let (complete, se_c) = stats(&sds[0]);
    let (top_only, se_t) = stats(&sds[1]);
    assert!(complete <= top_only + 3.0 * (se_c * se_c + se_t * se_t).sqrt());

    let report = ftrisk::run_study(&config).unwrap();
    for policy in &report.policies {
        assert_eq!(policy.succeeded, 20);
        assert_eq!(policy.nonfinite_loglik, 0);
        assert!(policy.quantities.iter().all(|q| q.rmse >= 0.0));
    }
}
