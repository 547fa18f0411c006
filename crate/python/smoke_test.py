"""Smoke test for the kronlab_py extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
Then run:                 python python/smoke_test.py
"""

import json
import math

import kronlab_py as kl


def partition_prefix(n):
    p = [1] + [0] * n
    for part in range(1, n + 1):
        for s in range(part, n + 1):
            p[s] += p[s - part]
    out, acc = [], 0
    for x in p:
        acc += x
        out.append(acc)
    return out


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    ints = kl.FrequencySystem.covering("powerlaw:A=1,alpha=1", 41.0)
    assert ints.axioms_pass()
    sums = partition_prefix(40)
    assert all(kl.count_n(ints, float(e)) == sums[e] for e in range(41))
    assert kl.count_n(ints, 5.0) == 19

    # past the enumeration cap, integer systems are counted by coin change
    big = kl.FrequencySystem.covering("powerlaw:A=1,alpha=1", 201.0)
    rows = kl.asymptotic_vs_exact(big, [50.0, 100.0, 200.0])
    assert all(math.isfinite(r[3]) for r in rows)
    assert rows[-1][1] == partition_prefix(200)[200]

    s = kl.solve_saddle(big, 100.0)
    assert s["residual"] <= 1e-10 * 100.0

    sys = kl.FrequencySystem.covering("powerlaw:A=1,alpha=1.5", 20.0)
    f = kl.TrigPolynomial(sys, [([(0, 1)], 1.0), ([(0, -1)], 1.0), ([], 0.25)])
    assert close(f.bohr_mean(), 0.25, 1e-15)
    assert close(f.evaluate(0.0), 2.25, 1e-14)
    space = kl.FockSpace.energy_cut(sys, 12.0)
    t = space.toeplitz(f)
    assert close(kl.tau_e(space, t, 10.0), 0.25, 1e-12)

    # finite-rank defect T(f)T(f) - T(f^2) averages to minus the window ratio
    defect = t @ t - space.toeplitz(f * f)
    ratio = kl.window_ratio(sys, 10.0, 1.0)
    assert close(kl.tau_e(space, defect, 10.0), -ratio, 1e-12)

    graded = kl.FockSpace.occupancy("graded", [1.0, 2.0 ** 1.5], 4)
    state = kl.ThermalState(graded, 1.0)
    a = graded.random_operator(7, 2 * graded.dim, 0)
    b = graded.random_operator(8, 2 * graded.dim, 1)
    assert state.twisted_kms_defect(a, b) <= 1e-10
    assert close(state.witten_index(), (1 - math.exp(-5.0)) * (1 - math.exp(-5.0 * 2.0 ** 1.5)), 1e-12)

    bos = kl.FockSpace.occupancy("boson", [1.0], 3)
    ann, cre = bos.boson_ops(0)
    assert close(ann.get(0, 1), 1.0, 0.0) and close(cre.get(2, 1), math.sqrt(2.0), 1e-15)
    thermal = kl.ThermalState(bos, 0.5)
    assert close(thermal.gibbs(bos.identity()), 1.0, 1e-14)
    assert thermal.kms_defect(ann, cre) <= 1e-12

    ok, results, table = kl.run_experiment("skms", {"modes": "2", "boson-cutoff": "4", "beta": "1", "seed": "7"})
    assert ok
    assert all(c["defect"] <= 1e-10 for c in json.loads(results)["checks"])
    assert table.splitlines()[0].split(",")[0] == "check"

    ok, results, _ = kl.run_experiment("witten")
    assert ok and json.loads(results)["rows"][0]["index"] == 1.0

    try:
        kl.run_experiment("no-such-experiment")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown experiment accepted")

    print("kronlab_py smoke test: ok")


if __name__ == "__main__":
    main()
