"""Convex LP relaxation: every bilinear product is replaced by an auxiliary
variable constrained to its McCormick envelope over the variable box.

Products sharing the same variable pair share one auxiliary variable.  When a
factor's box is degenerate (lower == upper) the product is linearized in
place and no auxiliary variable is created.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import BoundsWiden, UnboundedBilinearVariable
from .model import Domain, LinearExpr, Model, Sense

__all__ = ["EnvelopeEntry", "RelaxedModel", "relax", "refresh_bounds"]


@dataclass
class EnvelopeEntry:
    aux_id: int
    x_id: int
    y_id: int
    row_names: list[str]
    source: str


@dataclass
class RelaxedModel:
    lp: Model
    envelopes: dict[tuple[int, int], EnvelopeEntry]
    var_map: dict[int, int] = field(default_factory=dict)
    cut_hashes: set = field(default_factory=set)
    cut_rows: list[str] = field(default_factory=list)

    def clone(self) -> "RelaxedModel":
        return RelaxedModel(
            lp=self.lp.clone(),
            envelopes={
                key: EnvelopeEntry(e.aux_id, e.x_id, e.y_id, list(e.row_names), e.source)
                for key, e in self.envelopes.items()
            },
            var_map=dict(self.var_map),
            cut_hashes=set(self.cut_hashes),
            cut_rows=list(self.cut_rows),
        )

    def mccormick_residual(self, point) -> tuple[float, tuple[int, int] | None]:
        """Largest |w - x*y| over all envelopes at the point."""
        worst, worst_key = 0.0, None
        for key, entry in self.envelopes.items():
            res = abs(point[entry.aux_id] - point[entry.x_id] * point[entry.y_id])
            if res > worst:
                worst, worst_key = res, key
        return worst, worst_key


def _corner_products(xl, xu, yl, yu) -> list[float]:
    return [xl * yl, xl * yu, xu * yl, xu * yu]


def _envelope_rows(lp: Model, entry: EnvelopeEntry) -> None:
    """(Re)write the four envelope rows and the aux bounds for the entry."""
    x = lp.variables[entry.x_id]
    y = lp.variables[entry.y_id]
    xl, xu, yl, yu = x.lower, x.upper, y.lower, y.upper
    corners = _corner_products(xl, xu, yl, yu)
    lp.set_bounds(entry.aux_id, min(corners), max(corners))
    w, xi, yi = entry.aux_id, entry.x_id, entry.y_id
    rows = [
        # w >= xl*y + yl*x - xl*yl
        (LinearExpr({w: 1.0, yi: -xl, xi: -yl}), Sense.GE, -xl * yl),
        # w >= xu*y + yu*x - xu*yu
        (LinearExpr({w: 1.0, yi: -xu, xi: -yu}), Sense.GE, -xu * yu),
        # w <= xu*y + yl*x - xu*yl
        (LinearExpr({w: 1.0, yi: -xu, xi: -yl}), Sense.LE, -xu * yl),
        # w <= xl*y + yu*x - xl*yu
        (LinearExpr({w: 1.0, yi: -xl, xi: -yu}), Sense.LE, -xl * yu),
    ]
    for name, (expr, sense, rhs) in zip(entry.row_names, rows):
        if name in lp.constraints:
            con = lp.constraints[name]
            con.linear = expr
            con.sense = sense
            con.rhs = rhs
        else:
            lp.add_constraint(name, expr, sense, rhs)


def relax(model: Model) -> RelaxedModel:
    """Linearize the model: binaries become [0,1] continuous, every bilinear
    term routes through a shared envelope variable."""
    lp = Model(f"relaxed[{model.name}]")
    for var in model.variables:
        lp.add_variable(var.name, var.lower, var.upper, Domain.CONTINUOUS)
    var_map = {v.id: v.id for v in model.variables}

    envelopes: dict[tuple[int, int], EnvelopeEntry] = {}
    degenerate: dict[tuple[int, int], str] = {}  # pair -> which side is fixed

    def rewrite(linear: LinearExpr, bilinear, source: str) -> LinearExpr:
        out = linear.copy()
        for term in bilinear:
            a, b = term.var_a, term.var_b
            xa, xb = model.variables[a], model.variables[b]
            for var in (xa, xb):
                if not (math.isfinite(var.lower) and math.isfinite(var.upper)):
                    raise UnboundedBilinearVariable(
                        f"variable {var.name!r} in a bilinear term has unbounded box"
                    )
            if xa.lower == xa.upper:
                out.add_term(b, term.coefficient * xa.lower)
                continue
            if xb.lower == xb.upper:
                out.add_term(a, term.coefficient * xb.lower)
                continue
            key = (a, b)
            if key not in envelopes:
                aux = lp.add_variable(f"w[{xa.name}*{xb.name}]", 0.0, 0.0)
                entry = EnvelopeEntry(
                    aux_id=aux.id,
                    x_id=a,
                    y_id=b,
                    row_names=[
                        f"mccormick_ge1[{aux.name}]",
                        f"mccormick_ge2[{aux.name}]",
                        f"mccormick_le1[{aux.name}]",
                        f"mccormick_le2[{aux.name}]",
                    ],
                    source=source,
                )
                envelopes[key] = entry
            out.add_term(envelopes[key].aux_id, term.coefficient)
        return out

    for con in model.constraints.values():
        if not con.active:
            continue
        expr = rewrite(con.linear, con.bilinear, con.name)
        lp.add_constraint(con.name, expr, con.sense, con.rhs)
    lp.objective = rewrite(model.objective, model.objective_bilinear, "objective")

    rm = RelaxedModel(lp=lp, envelopes=envelopes, var_map=var_map)
    for key in sorted(envelopes):
        _envelope_rows(lp, envelopes[key])
    return rm


def refresh_bounds(rm: RelaxedModel, new_bounds: dict[int, tuple[float, float]]) -> RelaxedModel:
    """Tighten variable boxes and recompute the affected envelope rows.

    Bounds may only shrink; widening any direction raises BoundsWiden.
    Refreshing with identical bounds is a structural no-op.
    """
    changed: set[int] = set()
    for var_id, (lo, hi) in new_bounds.items():
        var = rm.lp.variables[var_id]
        if lo < var.lower - 1e-12 or hi > var.upper + 1e-12:
            raise BoundsWiden(
                f"variable {var.name!r}: [{lo}, {hi}] is not inside [{var.lower}, {var.upper}]"
            )
        if lo == var.lower and hi == var.upper:
            continue
        rm.lp.set_bounds(var_id, lo, hi)
        changed.add(var_id)
    if changed:
        for key in sorted(rm.envelopes):
            entry = rm.envelopes[key]
            if entry.x_id in changed or entry.y_id in changed:
                _envelope_rows(rm.lp, entry)
    return rm
