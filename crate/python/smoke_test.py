"""Smoke test for the pysefron extension module.

Build and install it first, for example:
    pip install maturin && maturin develop --release -m crates/python/Cargo.toml
"""

import os
import sys
import tempfile

import pysefron as s

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")


def main():
    spikes = s.encode([0.3, 0.7])
    assert len(spikes) == 12
    assert abs(s.inverse_encode(spikes[6:]) - 0.7) < 1e-3

    iris = s.load_csv(os.path.join(DATA, "iris.csv"), "species")
    train = iris.subset(list(range(0, len(iris), 2)))
    test = iris.subset(list(range(1, len(iris), 2)))
    model = s.Model.train(train, lam=3.0, sigma=0.55, tau_stdp=1.6, epochs=30, strict_eq10=False)
    clf = model.evaluate(test)

    fsf = s.FsfSet.select(model, train)
    fsf_acc = fsf.evaluate(test)["accuracy"]
    expl = fsf.classify([0.472, 0.083, 0.508, 0.375])

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.json")
        model.save(path)
        assert s.Model.load(path).hash() == model.hash()

    print(f"best epoch {model.best_epoch}, test accuracy {clf['accuracy']:.3f}")
    print(f"t_o {fsf.t_o}, FSF test accuracy {fsf_acc:.3f}")
    print(f"S2 aggregates {[round(a, 3) for a in expl['aggregates']]}, predicted class {expl['predicted']}")
    assert clf["accuracy"] > 0.8 and fsf_acc > 0.8
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
