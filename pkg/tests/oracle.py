"""Independent grid-over-q oracle.

This reimplements the pooling feasible set from the raw network (not via the
package model/relaxation/simplex): pool fractions q are fixed on a lattice of
each pool's simplex, path flows are substituted as q*y, and the remaining LP
over (y, z) is solved with scipy's HiGHS.  The minimum over the grid is a
certified upper bound on the global minimum that is exact whenever an
optimal q lies on the lattice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from poolblend.network import Network


@dataclass
class OracleResult:
    objective: float
    best: dict | None  # {"q": {(i,l): val}, "y": {(l,j): val}, "z": {(i,j): val}}
    points: list[dict]  # sampled feasible points, same structure
    grid_size: int


def simplex_grid(n_parts: int, step: float) -> list[tuple[float, ...]]:
    """All points of the n-simplex with coordinates on multiples of step."""
    ticks = round(1.0 / step)
    assert abs(ticks * step - 1.0) < 1e-12
    out = []
    for cuts in itertools.combinations(range(ticks + n_parts - 1), n_parts - 1):
        parts = []
        prev = -1
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(ticks + n_parts - 2 - prev)
        out.append(tuple(p / ticks for p in parts))
    return out


def _effective_upper(net: Network, *names) -> float:
    return min(net.nodes[n].capacity_bounds()[1] for n in names)


def grid_oracle(
    net: Network,
    step: float = 0.02,
    collect_points: int = 0,
    rng: np.random.Generator | None = None,
    extra_objectives: int = 0,
) -> OracleResult:
    inputs, pools, outputs = net.inputs(), net.pools(), net.outputs()
    il = sorted((e.source, e.destination) for e in net.pq_edges()
                if net.nodes[e.source].layer == 0 and net.nodes[e.destination].layer == 1)
    lj = sorted((e.source, e.destination) for e in net.pq_edges()
                if net.nodes[e.source].layer == 1 and net.nodes[e.destination].layer == 2)
    ij = sorted((e.source, e.destination) for e in net.pq_edges()
                if net.nodes[e.source].layer == 0 and net.nodes[e.destination].layer == 2)
    feeders = {l: sorted(i for i, ll in il if ll == l) for l in pools}
    served = {l: sorted(j for ll, j in lj if ll == l) for l in pools}

    y_index = {pair: k for k, pair in enumerate(lj)}
    z_index = {pair: len(lj) + k for k, pair in enumerate(ij)}
    n_vars = len(lj) + len(ij)

    grids = []
    for l in pools:
        if feeders[l]:
            grids.append([(l, g) for g in simplex_grid(len(feeders[l]), step)])
        else:
            grids.append([(l, ())])

    var_bounds = []
    for (l, j) in lj:
        edge = net.edges[(l, j)]
        lo, hi = edge.capacity_bounds()
        hi = min(hi, _effective_upper(net, l, j))
        var_bounds.append((lo, None if math.isinf(hi) else hi))
    for (i, j) in ij:
        edge = net.edges[(i, j)]
        lo, hi = edge.capacity_bounds()
        hi = min(hi, _effective_upper(net, i, j))
        var_bounds.append((lo, None if math.isinf(hi) else hi))

    rng = rng or np.random.default_rng(0)
    best_obj = math.inf
    best = None
    points: list[dict] = []
    grid_size = 0

    for assignment in itertools.product(*grids):
        grid_size += 1
        q = {}
        for l, fractions in assignment:
            for i, frac in zip(feeders[l], fractions):
                q[(i, l)] = frac

        c = np.zeros(n_vars)
        for (l, j) in lj:
            c[y_index[(l, j)]] = (
                sum(net.nodes[i].cost * q[(i, l)] for i in feeders[l]) - net.nodes[j].cost
            )
        for (i, j) in ij:
            c[z_index[(i, j)]] = net.nodes[i].cost - net.nodes[j].cost

        A_ub, b_ub = [], []

        def add_le(row, rhs):
            A_ub.append(row)
            b_ub.append(rhs)

        for j in outputs:
            node = net.nodes[j]
            pools_j = [l for l, jj in lj if jj == j]
            bypass_j = [i for i, jj in ij if jj == j]
            if not pools_j and not bypass_j:
                continue
            for k, pu in sorted(node.quality_upper.items()):
                row = np.zeros(n_vars)
                for l in pools_j:
                    cq = sum(net.nodes[i].quality.get(k, 0.0) * q[(i, l)] for i in feeders[l])
                    row[y_index[(l, j)]] = cq - pu
                for i in bypass_j:
                    row[z_index[(i, j)]] = net.nodes[i].quality.get(k, 0.0) - pu
                add_le(row, 0.0)
            for k, pl in sorted(node.quality_lower.items()):
                row = np.zeros(n_vars)
                for l in pools_j:
                    cq = sum(net.nodes[i].quality.get(k, 0.0) * q[(i, l)] for i in feeders[l])
                    row[y_index[(l, j)]] = pl - cq
                for i in bypass_j:
                    row[z_index[(i, j)]] = pl - net.nodes[i].quality.get(k, 0.0)
                add_le(row, 0.0)
            lo, hi = node.capacity_bounds()
            row = np.zeros(n_vars)
            for l in pools_j:
                row[y_index[(l, j)]] = 1.0
            for i in bypass_j:
                row[z_index[(i, j)]] = 1.0
            if math.isfinite(hi):
                add_le(row.copy(), hi)
            if lo > 0:
                add_le(-row, -lo)

        for i in inputs:
            lo, hi = net.nodes[i].capacity_bounds()
            row = np.zeros(n_vars)
            for (ii, l) in il:
                if ii != i:
                    continue
                for j in served[l]:
                    row[y_index[(l, j)]] += q[(i, l)]
            for (ii, j) in ij:
                if ii == i:
                    row[z_index[(ii, j)]] = 1.0
            if not row.any() and lo <= 0:
                continue
            if math.isfinite(hi):
                add_le(row.copy(), hi)
            if lo > 0:
                add_le(-row, -lo)

        for l in pools:
            s_l = net.nodes[l].capacity_bounds()[1]
            if math.isfinite(s_l) and served[l]:
                row = np.zeros(n_vars)
                for j in served[l]:
                    row[y_index[(l, j)]] = 1.0
                add_le(row, s_l)

        for (i, l) in il:
            edge_hi = net.edges[(i, l)].capacity_bounds()[1]
            c_il = min(edge_hi, net.nodes[i].capacity_bounds()[1], net.nodes[l].capacity_bounds()[1])
            if math.isfinite(c_il) and served[l]:
                row = np.zeros(n_vars)
                for j in served[l]:
                    row[y_index[(l, j)]] = q[(i, l)]
                add_le(row, c_il)
            edge_lo = net.edges[(i, l)].capacity_bounds()[0]
            if edge_lo > 0 and served[l]:
                row = np.zeros(n_vars)
                for j in served[l]:
                    row[y_index[(l, j)]] = -q[(i, l)]
                add_le(row, -edge_lo)

        A = np.array(A_ub) if A_ub else None
        b = np.array(b_ub) if b_ub else None

        def solve_with(cost):
            res = linprog(cost, A_ub=A, b_ub=b, bounds=var_bounds, method="highs")
            return res

        res = solve_with(c)
        if res.status != 0:
            continue

        def to_point(x):
            return {
                "q": dict(q),
                "y": {pair: float(x[y_index[pair]]) for pair in lj},
                "z": {pair: float(x[z_index[pair]]) for pair in ij},
            }

        if res.fun < best_obj:
            best_obj = res.fun
            best = to_point(res.x)
        if collect_points:
            points.append(to_point(res.x))
            for _ in range(extra_objectives):
                alt = solve_with(rng.normal(size=n_vars))
                if alt.status == 0:
                    points.append(to_point(alt.x))
            if len(points) > collect_points:
                points = points[:collect_points]
                collect_points = -1  # stop collecting further
        elif collect_points == -1:
            pass

    return OracleResult(objective=best_obj, best=best, points=points, grid_size=grid_size)


def point_to_model_values(pq, oracle_point: dict) -> dict[int, float]:
    """Expand an oracle (q, y, z) point into the full model assignment."""
    values: dict[int, float] = {}
    for key, vid in pq.q.items():
        values[vid] = oracle_point["q"][key]
    for key, vid in pq.y_pool.items():
        values[vid] = oracle_point["y"][key]
    for key, vid in pq.y_bypass.items():
        values[vid] = oracle_point["z"][key]
    for (i, l, j), vid in pq.v.items():
        values[vid] = oracle_point["q"][(i, l)] * oracle_point["y"][(l, j)]
    return values
