"""Reference optima for the attack SDP from a general-purpose conic solver.

Writes data/oracles/sdp_oracle.json with the test matrices and the optimal
objective of

    max Tr(Q W)  s.t.  W >= 0,  Tr(W) <= eps^2,  ||W||_* <= 1

for each (matrix, eps) pair. The C++ acceptance test compares its
eigenpair solution against these numbers.
"""

import argparse
import json
import pathlib

import cvxpy as cp
import numpy as np

EPSILONS = [0.5, 1.0, 2.0, 10.0]


def solve(q, eps):
    # unit-scale copy; objective rescaled on return
    scale = float(np.abs(q).max())
    q = q / scale
    n = q.shape[0]
    w = cp.Variable((n, n), PSD=True)
    # ||W||_* == Tr(W) for PSD W
    cons = [cp.trace(w) <= eps**2, cp.trace(w) <= 1]
    prob = cp.Problem(cp.Maximize(cp.sum(cp.multiply(q, w))), cons)
    prob.solve(
        solver=cp.CLARABEL,
        tol_gap_abs=1e-9,
        tol_gap_rel=1e-9,
        tol_feas=1e-9,
        max_iter=500,
    )
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"solver status {prob.status}")
    return float(prob.value) * scale, prob.status


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parents[1] / "data/oracles/sdp_oracle.json"))
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = []
    for i in range(args.count):
        n = int(rng.integers(10, 61))
        m = int(rng.integers(max(2, n // 4), n + 1))
        j = rng.standard_normal((m, n)) * rng.uniform(0.1, 10.0)
        q = j.T @ j
        q = 0.5 * (q + q.T)
        optima = []
        for eps in EPSILONS:
            value, status = solve(q, eps)
            optima.append({"epsilon": eps, "objective": value, "status": status})
        cases.append({"id": i, "rows": m, "cols": n, "jacobian": j.ravel(order="C").tolist(), "optima": optima})
        print(f"case {i}: n={n} m={m} top={optima[1]['objective']:.12g}", flush=True)

    payload = {
        "generator": "scripts/sdp_oracle.py",
        "solver": "CLARABEL",
        "seed": args.seed,
        "epsilons": EPSILONS,
        "cases": cases,
    }
    path = pathlib.Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload))


if __name__ == "__main__":
    main()
