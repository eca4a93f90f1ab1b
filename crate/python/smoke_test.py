"""Smoke test for the obliv_relay extension module.

Build and install first, for example:
    pip install --no-build-isolation ./crates/py
Then run:
    python python/smoke_test.py
"""

import json
import math

import obliv_relay as orl


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    adder = orl.Channel.fixture("binary_adder_pmarc", {"c": 1.0})
    assert adder.m == 2 and adder.k == 1 and adder.relay_size == 3
    uniform = orl.Policy.uniform(adder)

    gcf = orl.region(adder, uniform, "pmarc")
    names = sorted(n for bounds in gcf.bounds().values() for n in bounds)
    assert names == ["eq10", "eq11", "eq12", "eq13", "eq14", "eq15"], names
    nnc = orl.region(adder, uniform, "nnc")
    verdict, witness, _ = orl.compare(gcf, nnc)
    assert verdict == "equal", (verdict, witness)
    value, point = gcf.max_weighted([1.0, 1.0])
    assert close(value, sum(point))
    assert gcf.contains(point, 1e-12)

    # JSON round trips through both classes
    again = orl.Channel.from_json(adder.to_json())
    assert again.kernel == adder.kernel
    assert orl.Policy.from_json(uniform.to_json()).q_dist == uniform.q_dist
    assert json.loads(gcf.to_json())["scheme"] == "gcf"

    # information measures on the induced joint law
    joint = orl.build_joint(adder, uniform)
    assert close(joint.mutual_info(["X1", "X2"], ["Y1"]), 1.5)
    assert close(joint.cond_mutual_info(["X1"], ["Y1"], ["X2"]), 1.0)
    coin = orl.JointDistribution(["A", "B"], [2, 2], [0.5, 0.0, 0.0, 0.5])
    assert close(coin.mutual_info(["A"], ["B"]), 1.0)
    assert coin.marginalize(["B"]).probs == [0.5, 0.5]

    g = orl.strong_interference_gaussian(h11=1.0, h12=1.5, h21=2.0, h22=1.0, h1r=1.0, h2r=1.0)
    assert g["holds"] and close(g["gaps"][0]["min_gap"], 0.25)
    side = g["gaussian_inputs"]["condition1"]
    assert side["agree"] and close(side["lhs_scalar"], 0.5 * math.log2(3.0))

    xor = orl.Channel.fixture("xor_pifrc")
    report = orl.strong_interference_dmc(xor, resolution=8)
    assert report["holds"] and report["certified"] == "evidence_only"

    noiseless = orl.Channel.fixture("noiseless_pmarc")
    sim = orl.simulate(noiseless, orl.Policy.uniform(noiseless, compression_sizes=[1]), n=4,
                       rates=[0.25, 0.25], rhat=[0.0], trials=200, seed=1, typicality="conditional")
    assert sim["failures"] == 0, sim

    bsc = orl.Channel.fixture("bsc_pmarc")
    lemma = orl.verify_lemma1(bsc, orl.Policy.uniform(bsc, compression_sizes=[1]), samples=20000, seed=3)
    assert lemma["max_tv"] < 0.03, lemma

    value, point, best, region = orl.frontier_search(adder, "pmarc", [1.0, 1.0], resolution=2)
    assert close(value, 1.5) and isinstance(best, orl.Policy)

    for bad in (lambda: orl.Channel.fixture("nope"), lambda: orl.Channel.from_json("{}")):
        try:
            bad()
        except orl.ValidationError:
            pass
        else:
            raise AssertionError("expected ValidationError")
    try:
        orl.simulate(adder, uniform, n=50, rates=[1.0, 1.0], rhat=[1.0])
    except orl.ResourceCapError:
        pass
    else:
        raise AssertionError("expected ResourceCapError")

    print(f"obliv_relay {orl.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
