"""Smoke test for the comp_prox_py extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
Then run:                 python3 python/smoke_test.py
"""

import math
import random

import numpy as np

import comp_prox_py as cp


def close(a, b, tol=1e-9):
    return all(abs(x - y) <= tol for x, y in zip(np.ravel(a), np.ravel(b)))


def check_prox():
    assert cp.soft_threshold([3.0, -0.5, -2.0], 1.0) == [2.0, 0.0, -1.0]

    rng = np.random.default_rng(0)
    a = rng.uniform(-2, 2, size=(5, 4))
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    expected = u @ np.diag(np.maximum(s - 0.7, 0.0)) @ vt
    assert close(cp.singular_value_threshold(a.tolist(), 0.7), expected)

    x = cp.ball_l2_l1_prox([3.0, 4.0], 0.0, 1.0)
    assert close(x, [0.6, 0.8])

    v = cp.capped_simplex_project([0.5, -2.0, 1.0], 1.0)
    assert close(v, [0.0, 1.0, 0.0]) and min(v) >= 0.0


def check_filter():
    f = cp.Filter(0.0)
    assert f.insert(1.0, 0.2, [1.0, 0.0])
    assert f.insert(0.1, 1.0, [0.0, 1.0])
    assert not f.insert(1.5, 0.5)  # dominated
    gap, alpha, weights, combined = f.gap()
    grid = max(f.h(i / 10000) for i in range(10001))
    assert abs(gap - grid) < 1e-4 and 0.0 <= alpha <= 1.0
    assert abs(sum(w for _, w in weights) - 1.0) < 1e-12 and len(combined) == 2
    lo, hi = f.delta_segment()
    assert 0.0 <= lo <= hi <= 1.0


def check_certificates():
    random.seed(1)
    n = 8
    a = [[random.gauss(0, 1) / math.sqrt(n) for _ in range(n)] for _ in range(n)]
    b = [random.gauss(0, 1) for _ in range(n)]
    rows = cp.bilinear_ball(a, b, 256)
    assert [t for t, _, _ in rows] == [2**k for k in range(9)]
    for _, res, eps in rows:
        assert eps <= res + 1e-9
    assert rows[-1][1] < rows[0][1]


def check_solve():
    s = cp.solve("mc_known_opt", n=16, max_iters=128)
    extra = dict(s.extra)
    opt = float(extra["opt"])
    assert s.lower <= opt * (1 + 1e-9) <= s.upper * (1 + 1e-9) + 1e-12
    assert [r[0] for r in s.rows] == [2**k for k in range(8)]

    l1 = cp.solve("l1_planted", n=32, m=16, eps=1e-4, max_iters=100000)
    assert l1.mode == "sequential" and dict(l1.extra)["reached_eps"] == "true"

    keys = dict(cp.default_config())
    assert keys["n"] == "64"
    try:
        cp.solve("no_such_family")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown family accepted")


if __name__ == "__main__":
    for check in (check_prox, check_filter, check_certificates, check_solve):
        check()
        print(f"ok {check.__name__}")
