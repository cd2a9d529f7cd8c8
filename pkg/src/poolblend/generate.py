"""Seeded random instance generator for the two benchmark families.

The sparse family mimics the layered structure of the classic blending
instances: thin pool backbones plus a bypass-heavy mix of extra edges, one
or two tracked qualities.  The dense family starts from complete
input->pool and pool->output bipartite layers trimmed to the requested edge
count.  Both are deterministic per seed and always produce buildable
networks (every pool has at least one feed and one outlet, demands have no
lower bounds, so zero flow is always feasible).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSpec
from .network import Network, NodeLayer

__all__ = ["GenSpec", "generate_instance"]

FAMILIES = ("sparse_haverly", "dense_rand")


@dataclass
class GenSpec:
    family: str
    ni: int
    nl: int
    nj: int
    nk: int
    na: int
    seed: int

    def instance_name(self) -> str:
        return (
            f"{self.family}_{self.ni}x{self.nl}x{self.nj}"
            f"_k{self.nk}_a{self.na}_s{self.seed}"
        )


def _names(prefix: str, count: int) -> list[str]:
    width = len(str(count))
    return [f"{prefix}{idx + 1:0{width}d}" for idx in range(count)]


def _validate(spec: GenSpec) -> None:
    if spec.family not in FAMILIES:
        raise InfeasibleSpec(f"unknown family {spec.family!r}; expected one of {FAMILIES}")
    for label, value in (("ni", spec.ni), ("nl", spec.nl), ("nj", spec.nj),
                         ("nk", spec.nk), ("na", spec.na)):
        if value < 1:
            raise InfeasibleSpec(f"{label} must be positive, got {value}")
    max_edges = spec.ni * spec.nl + spec.ni * spec.nj + spec.nl * spec.nj
    if spec.na > max_edges:
        raise InfeasibleSpec(
            f"na={spec.na} exceeds the {max_edges} possible edges for these layer sizes"
        )
    if spec.na < 2 * spec.nl:
        raise InfeasibleSpec(
            f"na={spec.na} cannot give every pool a feed and an outlet (need >= {2 * spec.nl})"
        )


def generate_instance(spec: GenSpec) -> Network:
    _validate(spec)
    rng = np.random.default_rng(spec.seed)
    inputs = _names("i", spec.ni)
    pools = _names("l", spec.nl)
    outputs = _names("j", spec.nj)
    qualities = _names("k", spec.nk)

    # input qualities first so output limits can straddle them; feeds with
    # worse quality are cheaper, which is what makes blending worthwhile
    quality = {
        i: {k: round(float(rng.uniform(0.5, 3.5)), 4) for k in qualities} for i in inputs
    }
    mean_quality = {i: sum(quality[i].values()) / spec.nk for i in inputs}
    q_lo = min(mean_quality.values())
    q_span = max(max(mean_quality.values()) - q_lo, 1e-9)
    spreads = {}
    for k in qualities:
        column = sorted(quality[i][k] for i in inputs)
        spreads[k] = (column[0], max(column[-1] - column[0], 0.2))

    net = Network(spec.instance_name())
    for i in inputs:
        dirtiness = (mean_quality[i] - q_lo) / q_span
        cost = 16.0 + float(rng.uniform(0.0, 4.0)) - 12.0 * dirtiness
        net.add_node(
            NodeLayer.INPUT,
            i,
            capacity_upper=round(float(rng.uniform(80.0, 150.0)), 2),
            cost=round(cost, 2),
            attr={"quality": quality[i]},
        )
    for l in pools:
        net.add_node(
            NodeLayer.POOL, l, capacity_upper=round(float(rng.uniform(60.0, 120.0)), 2)
        )
    for j in outputs:
        # half the products are premium: strict limits that pay accordingly
        strict = rng.random() < 0.5
        band = (0.05, 0.35) if strict else (0.4, 0.8)
        upper = {}
        tightness = 0.0
        for k in qualities:
            base, spread = spreads[k]
            frac = float(rng.uniform(*band))
            upper[k] = round(base + frac * spread, 4)
            tightness += 1.0 - frac
        tightness /= spec.nk
        net.add_node(
            NodeLayer.OUTPUT,
            j,
            capacity_upper=round(float(rng.uniform(50.0, 120.0)), 2),
            cost=round(12.0 + 10.0 * tightness + float(rng.uniform(0.0, 3.0)), 2),
            attr={"quality_upper": upper},
        )

    chosen: set[tuple[str, str]] = set()

    def pick(pool_of_candidates: list[tuple[str, str]]) -> tuple[str, str] | None:
        remaining = [e for e in pool_of_candidates if e not in chosen]
        if not remaining:
            return None
        edge = remaining[int(rng.integers(len(remaining)))]
        chosen.add(edge)
        return edge

    # backbone: one feed and one outlet per pool
    for l in pools:
        chosen.add((inputs[int(rng.integers(spec.ni))], l))
        chosen.add((l, outputs[int(rng.integers(spec.nj))]))

    il_all = [(i, l) for i in inputs for l in pools]
    lj_all = [(l, j) for l in pools for j in outputs]
    ij_all = [(i, j) for i in inputs for j in outputs]
    # bypass candidates lean dirty: clean feeds reach strict outputs only by
    # blending through a pool, which is where the pooling structure bites
    ranked = sorted(inputs, key=lambda i: mean_quality[i])
    dirty = set(ranked[(len(ranked) - 1) // 3 :])
    ij_sparse = [(i, j) for i, j in ij_all if i in dirty]

    if spec.family == "dense_rand":
        # fill the bipartite layers first, spill over into bypass edges
        layer_candidates = [e for e in il_all + lj_all if e not in chosen]
        rng.shuffle(layer_candidates)
        for edge in layer_candidates:
            if len(chosen) >= spec.na:
                break
            chosen.add(edge)
        while len(chosen) < spec.na:
            edge = pick(ij_all)
            if edge is None:
                break
            # pick() already added it
    else:
        # roughly even thirds with a bypass lean, like the classic sparse sets
        while len(chosen) < spec.na:
            draw = rng.random()
            if draw < 0.4:
                order = (ij_sparse, ij_all, il_all, lj_all)
            elif draw < 0.7:
                order = (il_all, ij_sparse, ij_all, lj_all)
            else:
                order = (lj_all, ij_sparse, ij_all, il_all)
            edge = None
            for candidates in order:
                edge = pick(candidates)
                if edge is not None:
                    break
            if edge is None:
                raise InfeasibleSpec(f"na={spec.na} exceeds reachable edges")

    for src, dst in sorted(chosen):
        net.add_edge(src, dst)
    return net.freeze()
