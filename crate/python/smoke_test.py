"""Exercises the Python bindings end to end on the bundled example trees.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import math
import sys

import ftrisk


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    tree = ftrisk.FaultTree.example()
    assert tree.primaries == ["E1", "E2", "E3", "E4"]
    assert tree.top == "E7" and len(tree) == 7 and tree.structure == "PURE_TREE"
    assert tree.evaluate([False, False, True, True]) == [False, False, True, True, False, True, True]
    again = ftrisk.FaultTree.from_json(tree.to_json())
    assert again.events == tree.events

    # worked example: E1 = 0, E3 = 1, E6 = 1 has likelihood (1 - p1) p3 p4
    p = [0.1, 0.2, 0.3, 0.4]
    ll = tree.loglik([{"E1": False, "E3": True, "E6": True}], p)
    assert close(math.exp(ll), 0.9 * 0.3 * 0.4, 1e-12)

    w = ftrisk.comparison_weights(["A", "B"], [("A", "B", "strongly_more")])
    assert close(w["A"] + w["B"], 1.0, 1e-12) and w["A"] > w["B"]

    a, b = ftrisk.fit_central_interval(0.01, 0.05)
    assert close(ftrisk.beta_quantile(a, b, 0.025), 0.01, 1e-4)
    assert close(ftrisk.beta_quantile(a, b, 0.975), 0.05, 1e-4)

    atv = ftrisk.FaultTree.launch_vehicle()
    prior = ftrisk.PriorSpec.launch_vehicle()
    assert len(prior) == 11 and prior["E01"] == prior.params[0]
    samples = ftrisk.sample_prior(prior, 100_000, 1)
    top = samples.summary(atv)["E14"]
    assert close(top["mean"], 0.17, 0.005), top

    data = [{"E14": False}] * 5
    post = ftrisk.posterior_mh(prior, atv, data, iterations=200_000, seed=2)
    mh_top = post.summary(atv)["E14"]["mean"]
    assert 0.0 < post.diagnostics["acceptance_rate"] < 1.0
    is_post = ftrisk.posterior_importance(prior, atv, data, draws=50_000, seed=2)
    is_top = is_post.summary(atv)["E14"]["mean"]
    assert close(mh_top, 0.1645, 0.01) and close(is_top, 0.1645, 0.01), (mh_top, is_top)

    report = ftrisk.run_study(
        tree,
        [0.02, 0.05, 0.05, 0.10],
        ftrisk.PriorSpec.uniform(tree),
        m=40,
        policies=["complete", "top-only"],
        replicates=3,
        method="is",
        draws=5_000,
        seed=3,
    )
    assert [p["policy"]["kind"] for p in report["policies"]] == ["COMPLETE", "TOP_ONLY"]
    assert all(p["succeeded"] == 3 for p in report["policies"])

    try:
        ftrisk.FaultTree.from_json('{"top": "X", "events": [{"id": "X", "gate": "OR", "inputs": ["X", "Y"]}]}')
    except ValueError as e:
        assert "Y" in str(e) or "X" in str(e)
    else:
        raise AssertionError("invalid tree accepted")

    print(f"ftrisk {ftrisk.__version__}: smoke test passed "
          f"(prior top {top['mean']:.4f}, posterior top MH {mh_top:.4f} / IS {is_top:.4f})")


if __name__ == "__main__":
    sys.exit(main())
