"""Smoke test for the qdes_py extension.

Build and install first, e.g.

    pip install maturin
    maturin develop --release -m crates/python/Cargo.toml

or point PYTHONPATH at a directory holding the built ``qdes_py`` module.
"""

import math
import os
import sys
import tempfile

import qdes_py


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    return cond


def main():
    results = []

    eg2 = qdes_py.example("eg2", 2, lam=0.5)
    results.append(check(eg2.kind == "mm-qfa", "eg2 is a measure-many automaton"))
    results.append(check(abs(eg2.prob("00") - 0.5631056433) < 1e-9, "eg2 value on 00"))

    # Closed form (1 - r)^zeros; recover r from one zero.
    one = eg2.prob("0")
    r = 1.0 - one
    results.append(check(all(abs(eg2.prob(w) - (1 - r) ** w.count("0")) < 1e-12
                             for w in ["", "1", "01", "0101", "1111", "000"]),
                         "eg2 closed form"))

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "eg2.json")
        eg2.save(path)
        back = qdes_py.Automaton.load(path)
        results.append(check(back.to_json() == eg2.to_json(), "canonical round trip"))

    same, cex = qdes_py.equivalent(eg2, eg2)
    results.append(check(same and cex is None, "automaton equals itself"))

    plant = qdes_py.example("eg1", 2)
    target = qdes_py.example("eg1", 2, target=True)
    results.append(check(qdes_py.decide_controllability(plant, target, ["0", "1"]) is None,
                         "eg1 target controllable w.r.t. {0,1}"))
    cex = qdes_py.decide_controllability(plant, target, ["2"])
    results.append(check(cex is not None and cex[0] == "" and cex[1] == "2",
                         "eg1 target not controllable when 2 is uncontrollable"))

    af = qdes_py.example("af-modp", 11)
    results.append(check(math.isclose(af.prob("0" * 11), 1.0, abs_tol=1e-12), "af-modp returns at p"))

    prod = qdes_py.compose(af, af)
    results.append(check(abs(prod.prob("000") - af.prob("000") ** 2) < 1e-10, "tensor product law"))

    try:
        qdes_py.Automaton.from_json("{ not json")
        results.append(check(False, "bad json rejected"))
    except ValueError:
        results.append(check(True, "bad json rejected"))

    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
