use ftrisk::data;
use ftrisk::fault_tree::TreeDocument;
use ftrisk::inference::SamplingMethod;
use ftrisk::{
    fit_central_interval, propagate_implications, push_forward, simulate_observation, weights, BetaParams,
    ComparisonLevel, ComparisonMatrix, EventId, EventState, FaultTree, Gate, Observation, SampleSet,
};
use proptest::prelude::*;

fn level() -> impl Strategy<Value = ComparisonLevel> {
    (0..9usize).prop_map(|i| ComparisonLevel::ALL[i])
}

/// A connected comparison matrix over `n` events: a chain plus extra pairs.
fn matrix() -> impl Strategy<Value = ComparisonMatrix> {
    (2..7usize)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(level(), n - 1),
                proptest::collection::vec((0..n, 0..n, level()), 0..10),
            )
        })
        .prop_map(|(n, chain, extra)| {
            let ids: Vec<EventId> = (0..n).map(|i| EventId::new(format!("E{i}"))).collect();
            let mut m = ComparisonMatrix::new(ids.clone()).unwrap();
            for (i, l) in chain.into_iter().enumerate() {
                m.record(ids[i].as_str(), ids[i + 1].as_str(), l).unwrap();
            }
            for (i, j, l) in extra {
                if i != j && !m.is_compared(ids[i].as_str(), ids[j].as_str()) {
                    m.record(ids[i].as_str(), ids[j].as_str(), l).unwrap();
                }
            }
            m
        })
}

fn random_tree() -> impl Strategy<Value = FaultTree> {
    (
        2..6usize,
        proptest::collection::vec((any::<bool>(), 0..100usize, 2..4usize), 8),
    )
        .prop_map(|(k, choices)| {
            let mut doc = TreeDocument::new("");
            let mut roots: Vec<String> = (1..=k).map(|i| format!("P{i}")).collect();
            for id in &roots {
                doc = doc.primary(id, "");
            }
            let mut choices = choices.into_iter().cycle();
            let mut n = 0;
            while roots.len() > 1 {
                let (and, pick, take) = choices.next().unwrap();
                let take = take.min(roots.len());
                let mut inputs = Vec::new();
                for t in 0..take {
                    inputs.push(roots.remove((pick + t) % roots.len()));
                }
                n += 1;
                let id = format!("G{n}");
                let gate = if and { Gate::And } else { Gate::Or };
                let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
                doc = doc.gate(&id, "", gate, &refs);
                roots.push(id);
            }
            doc.top = roots.pop().unwrap();
            FaultTree::from_document(&doc).unwrap()
        })
}

fn normalized_geometric_means(m: &ComparisonMatrix, c: f64) -> Vec<f64> {
    let n = m.events().len();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let logs: Vec<f64> = (0..n).filter_map(|j| m.score(i, j)).map(|q| (c * q).ln()).collect();
            (logs.iter().sum::<f64>() / logs.len() as f64).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weights_are_invariant_to_score_scale(m in matrix(), c in 0.01f64..100.0) {
        let w = weights(&m).unwrap();
        for (a, b) in w.values().iter().zip(normalized_geometric_means(&m, c)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reverse_entries_are_consistent(m in matrix()) {
        let n = m.events().len();
        for i in 0..n {
            prop_assert!(m.level(i, i).is_none());
            for j in 0..n {
                if let Some(l) = m.level(i, j) {
                    prop_assert_eq!(m.level(j, i), Some(l.reverse()));
                }
            }
        }
    }

    #[test]
    fn central_fit_round_trips(lower in 1e-4f64..0.5, width in 0.05f64..0.95) {
        let upper = (lower + width * (1.0 - lower)).min(0.999);
        prop_assume!(upper > lower * 1.05);
        let b = fit_central_interval(lower, upper).unwrap();
        prop_assert!((b.quantile(0.025) - lower).abs() <= 1e-4);
        prop_assert!((b.quantile(0.975) - upper).abs() <= 1e-4);
    }

    #[test]
    fn central_fit_is_symmetric(lower in 0.01f64..0.4, width in 0.1f64..0.5) {
        let upper = lower + width;
        let b = fit_central_interval(lower, upper).unwrap();
        let mirrored = fit_central_interval(1.0 - upper, 1.0 - lower).unwrap();
        prop_assert!((b.a - mirrored.b).abs() <= 1e-4 * b.a);
        prop_assert!((b.b - mirrored.a).abs() <= 1e-4 * b.b);
    }

    #[test]
    fn quantile_inverts_cdf(a in 0.5f64..50.0, b in 0.5f64..500.0, x in 1e-3f64..0.999) {
        let beta = BetaParams::new(a, b).unwrap();
        let u = beta.cdf(x);
        prop_assume!(u > 1e-10 && u < 1.0 - 1e-10);
        prop_assert!((beta.quantile(u) - x).abs() <= 1e-8);
    }

    #[test]
    fn evaluate_keeps_primaries_and_is_monotone(tree in random_tree(), bits in proptest::collection::vec(any::<bool>(), 6)) {
        let k = tree.primary_count();
        let v = &bits[..k];
        let full = tree.evaluate(v);
        prop_assert_eq!(&full[..k], v);
        for i in 0..k {
            if !v[i] {
                let mut up = v.to_vec();
                up[i] = true;
                let raised = tree.evaluate(&up);
                prop_assert!(full.iter().zip(&raised).all(|(a, b)| !a || *b));
            }
        }
    }

    #[test]
    fn implications_are_idempotent(tree in random_tree(), seed in any::<u64>(), keep in proptest::collection::vec(any::<bool>(), 15)) {
        let p = vec![0.3; tree.primary_count()];
        let full = simulate_observation(&tree, &p, seed).unwrap();
        let mut obs = Observation::complete(&full);
        for (i, &k) in keep.iter().enumerate().take(tree.len()) {
            if !k {
                obs.set(i, EventState::Na);
            }
        }
        let once = propagate_implications(&tree, &obs).unwrap();
        let twice = propagate_implications(&tree, &once).unwrap();
        prop_assert_eq!(&once, &twice);
        for (i, &value) in full.iter().enumerate() {
            if obs.get(i).is_observed() {
                prop_assert_eq!(once.get(i), obs.get(i));
            }
            if let Some(v) = once.get(i).value() {
                prop_assert_eq!(v, value);
            }
        }
    }

    #[test]
    fn push_forward_is_monotone(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 1..20), eps in 1e-6f64..0.5) {
        let tree = data::fig1_tree();
        let ids: Vec<EventId> = tree.primary_ids().cloned().collect();
        let raised: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|x| (x + eps).min(1.0 - 1e-12)).collect())
            .collect();
        let base = SampleSet::from_rows(ids.clone(), &rows, 0, SamplingMethod::Prior).unwrap();
        let up = SampleSet::from_rows(ids, &raised, 0, SamplingMethod::Prior).unwrap();
        let targets = ["E5", "E6", "E7"];
        let a = push_forward(&tree, &base, &targets).unwrap();
        let b = push_forward(&tree, &up, &targets).unwrap();
        for ((_, low), (_, high)) in a.iter().zip(&b) {
            prop_assert!(low.iter().zip(high).all(|(l, h)| h >= l));
        }
    }
}

#[test]
fn canonical_order_is_a_stable_permutation() {
    for tree in [data::fig1_tree(), data::atv_tree()] {
        let order = tree.canonical_order();
        let rebuilt = FaultTree::from_document(&tree.to_document()).unwrap();
        assert_eq!(rebuilt.canonical_order(), order);
        let mut sorted = order.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), tree.len());
    }
}
