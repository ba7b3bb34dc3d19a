#!/usr/bin/env python3
"""Freeze independent reference solutions for the prox operators and the
edge + group program.

Every reference value is computed by a generic conic solver (cvxpy with
Clarabel) from the optimization problem itself, never from the closed forms
the library implements.  Run from the repository root:

    python3 tests/oracles/gen_oracles.py

Writes tests/data/prox_oracles.json, tests/data/lift_oracles.json and
tests/data/eg_oracles.json.
"""

import json
import pathlib

import cvxpy as cp
import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "data"
SOLVER = dict(solver=cp.CLARABEL)


def sym(rng, p, scale=1.0):
    a = rng.normal(scale=scale, size=(p, p))
    return (a + a.T) / 2


def pos_weights(rng, p):
    w = rng.uniform(0.2, 2.0, size=(p, p))
    return (w + w.T) / 2


def random_node_groups(rng, p):
    """Disjoint node groups of size >= 1 covering a random subset of nodes."""
    perm = list(rng.permutation(p))
    groups = []
    while perm and rng.uniform() < 0.8:
        size = int(rng.integers(1, min(3, len(perm)) + 1))
        groups.append(sorted(int(i) for i in perm[:size]))
        perm = perm[size:]
    return groups


def edge_groups(p, node_groups):
    """Cartesian squares of the node groups; every other entry is a singleton."""
    covered = np.zeros((p, p), dtype=bool)
    groups = []
    for g in node_groups:
        entries = [(i, j) for j in g for i in g]
        for i, j in entries:
            covered[i, j] = True
        groups.append(entries)
    for j in range(p):
        for i in range(p):
            if not covered[i, j]:
                groups.append([(i, j)])
    return groups


def group_norm_expr(x, groups):
    return sum(cp.norm(cp.hstack([x[i, j] for i, j in g]), 2) for g in groups)


def group_constraints(x, groups, radius):
    return [cp.norm(cp.hstack([x[i, j] for i, j in g]), 2) <= radius for g in groups]


def solve(objective, constraints=()):
    prob = cp.Problem(cp.Minimize(objective), list(constraints))
    prob.solve(**SOLVER)
    assert prob.status == cp.OPTIMAL, prob.status
    return prob.value


def mat(a):
    return np.asarray(a, dtype=float).tolist()


def prox_cases(rng):
    cases = {"prox_weighted_l1": [], "prox_group_l2": [], "proj_weighted_linf_ball": [],
             "proj_group_dual_ball": []}
    for _ in range(50):
        p = int(rng.integers(2, 5))
        x = rng.normal(scale=1.5, size=(p, p))
        w = pos_weights(rng, p)
        gamma = float(rng.uniform(0.1, 1.5))
        u = cp.Variable((p, p))
        solve(0.5 * cp.sum_squares(u - x) + gamma * cp.sum(cp.multiply(w, cp.abs(u))))
        cases["prox_weighted_l1"].append(
            {"x": mat(x), "w": mat(w), "gamma": gamma, "expected": mat(u.value)})

    for _ in range(50):
        p = int(rng.integers(2, 5))
        x = rng.normal(scale=1.5, size=(p, p))
        ng = random_node_groups(rng, p)
        eps = float(rng.uniform(0.3, 2.0))
        gamma = float(rng.uniform(0.1, 1.5))
        u = cp.Variable((p, p))
        solve(0.5 * cp.sum_squares(u - x) + eps * gamma * group_norm_expr(u, edge_groups(p, ng)))
        cases["prox_group_l2"].append({"x": mat(x), "node_groups": ng, "eps": eps, "gamma": gamma,
                                       "expected": mat(u.value)})

    for _ in range(50):
        p = int(rng.integers(2, 5))
        x = rng.normal(scale=1.5, size=(p, p))
        c = rng.normal(size=(p, p))
        w = pos_weights(rng, p)
        lam = float(rng.uniform(0.1, 1.5))
        u = cp.Variable((p, p))
        solve(0.5 * cp.sum_squares(u - x), [cp.abs(u - c) <= lam * w])
        cases["proj_weighted_linf_ball"].append(
            {"x": mat(x), "center": mat(c), "w": mat(w), "lambda": lam, "expected": mat(u.value)})

    for _ in range(50):
        p = int(rng.integers(2, 5))
        x = rng.normal(scale=1.5, size=(p, p))
        c = rng.normal(size=(p, p))
        ng = random_node_groups(rng, p)
        eps = float(rng.uniform(0.3, 2.0))
        lam = float(rng.uniform(0.1, 1.5))
        u = cp.Variable((p, p))
        solve(0.5 * cp.sum_squares(u - x), group_constraints(u - c, edge_groups(p, ng), eps * lam))
        cases["proj_group_dual_ball"].append(
            {"x": mat(x), "center": mat(c), "node_groups": ng, "eps": eps, "lambda": lam,
             "expected": mat(u.value)})
    return cases


def lift_cases(rng):
    """prox_{gamma h}(y) for h = term o A over the stacked (delta_e, delta_g)."""
    cases = []
    for k in range(40):
        p = 2 if k < 20 else 3
        term = ["F1", "F2", "G1", "G2"][k % 4]
        ye = rng.normal(scale=1.5, size=(p, p))
        yg = rng.normal(scale=1.5, size=(p, p))
        b = sym(rng, p)
        w = pos_weights(rng, p)
        ng = random_node_groups(rng, p)
        groups = edge_groups(p, ng)
        eps = float(rng.uniform(0.3, 2.0))
        lam = float(rng.uniform(0.1, 1.0))
        gamma = float(rng.uniform(0.2, 1.5))
        ue = cp.Variable((p, p))
        ug = cp.Variable((p, p))
        quad = 0.5 * cp.sum_squares(ue - ye) + 0.5 * cp.sum_squares(ug - yg)
        cons = []
        if term == "F1":
            obj = quad + gamma * cp.sum(cp.multiply(w, cp.abs(ue)))
        elif term == "F2":
            obj = quad + gamma * eps * group_norm_expr(ug, groups)
        elif term == "G1":
            obj = quad
            cons = [cp.abs(ue + ug - b) <= lam * w]
        else:
            obj = quad
            cons = group_constraints(ue + ug - b, groups, eps * lam)
        solve(obj, cons)
        cases.append({"term": term, "y_e": mat(ye), "y_g": mat(yg), "backward": mat(b),
                      "w": mat(w), "node_groups": ng, "eps": eps, "lambda": lam,
                      "gamma": gamma, "expected_e": mat(ue.value), "expected_g": mat(ug.value)})
    return cases


def eg_cases(rng):
    """min ||W o De||_1 + eps ||Dg||_{G,2}
       s.t. ||(1/W) o (De + Dg - B)||_inf <= lambda,  ||De + Dg - B||*_{G,2} <= eps lambda."""
    cases = []
    p = 4
    while len(cases) < 10:
        b = sym(rng, p, scale=1.5)
        w = pos_weights(rng, p)
        ng = [[0, 1], [2, 3]] if len(cases) % 2 else [[0, 1, 2]]
        groups = edge_groups(p, ng)
        eps = float(rng.uniform(0.5, 2.0))
        lam = float(rng.uniform(0.1, 0.6))
        de = cp.Variable((p, p))
        dg = cp.Variable((p, p))
        r = de + dg - b
        value = solve(cp.sum(cp.multiply(w, cp.abs(de))) + eps * group_norm_expr(dg, groups),
                      [cp.abs(r) <= lam * w] + group_constraints(r, groups, eps * lam))
        if value < 1e-3:
            continue
        cases.append({"backward": mat(b), "w": mat(w), "node_groups": ng, "eps": eps,
                      "lambda": lam, "objective": value})
    return cases


def main():
    rng = np.random.default_rng(20240611)
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "prox_oracles.json").write_text(json.dumps(prox_cases(rng), indent=1))
    (OUT / "lift_oracles.json").write_text(json.dumps(lift_cases(rng), indent=1))
    (OUT / "eg_oracles.json").write_text(json.dumps(eg_cases(rng), indent=1))


if __name__ == "__main__":
    main()
