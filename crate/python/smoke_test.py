"""Smoke test for the fracvisc Python extension.

Build and install first, e.g.  pip install --no-build-isolation ./crates/py
then run  python python/smoke_test.py
"""

import math

import fracvisc


def close(a, b, rel):
    return abs(a - b) <= rel * max(abs(a), abs(b))


def check_moduli():
    m = fracvisc.Model.fmm_fmg(150.0, 0.4, 0.6, 0.1, 20.0, 2.0, 0.3)
    x = fracvisc.log_grid(1e-4, 1e2, 25)
    storage, loss = m.moduli(x)
    p = m.params()
    for xi, s, l in zip(x, storage, loss):
        want = 0j
        for e, tau, a, b in ((p["E_c1"], p["tau_c1"], p["alpha1"], p["beta1"]),
                             (p["E_c2"], p["tau_c2"], p["alpha2"], 0.0)):
            iz = 1j * xi * tau
            want += e * iz ** a / (1 + iz ** (a - b))
        assert close(s, want.real, 1e-10) and close(l, want.imag, 1e-10), (xi, s, want)
    # Maxwell limit
    mx = fracvisc.Model.fmm_fmg(1.0, 1.0, 1.0, 0.0, 1e-9, 1.0, 0.5)
    s, _ = mx.moduli([1.0])
    assert abs(s[0] - 0.5) < 1e-8


def check_json_round_trip():
    m = fracvisc.Model.preset("40HS/0.0", constrained=True)
    back = fracvisc.Model.from_json(m.to_json())
    assert back.params() == m.params()
    assert "40HS/0.0" in fracvisc.Model.presets()
    try:
        fracvisc.Model.fmm_fmg(-1.0, 1.0, 0.5, 0.1, 1.0, 1.0, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("negative modulus accepted")


def check_fit():
    truth = fracvisc.Model.preset("20HS/0.0", constrained=True)
    x = fracvisc.log_grid(1e-8, 1e2, 101)
    storage, loss = fracvisc.synthesize(truth, x)
    res = fracvisc.fit(x, storage, loss, n_pop=40, n_iter=600, n_runs=4, seed=3)
    assert res["relative_error"] < 0.0198, res["relative_error"]
    assert len(res["run_costs"]) == 4
    assert res["best_cost"] == min(res["run_costs"])


def check_sensitivity():
    m = fracvisc.Model.preset("40HS/0.0")
    grid = fracvisc.log_grid(1e-8, 1e2, 41)
    s = fracvisc.local_indices(m, grid)
    for a, b in zip(s["E_c1"], s["E_c2"]):
        assert abs(a + b - 1.0) < 1e-12
    mc = fracvisc.mc_indices(m, grid, n_samples=200, seed=1)
    assert set(mc["mean"]) == set(s)
    l1 = fracvisc.index_norm(grid, [1.0] * len(grid))
    assert close(l1, 10 * math.log(10), 1e-12)

    sob = fracvisc.sobol_indices(m, grid, n=1024)
    for p, first in sob["first"].items():
        total = sob["total"][p]
        assert all(-0.05 <= f <= 1.05 for f in first), p
        assert all(t >= f - 0.05 for f, t in zip(first, total)), p
    assert fracvisc.sobol_points(4, 1) == [[0.0], [0.5], [0.75], [0.25]]


if __name__ == "__main__":
    check_moduli()
    check_json_round_trip()
    check_fit()
    check_sensitivity()
    print("fracvisc smoke test: OK")
