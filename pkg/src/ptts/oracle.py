"""Brute-force reference answers for tiny flow instances.

Every integer assignment to the free edges is enumerated and kept if it
conserves flow at every node. Nothing here shares code with the solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .attack import AttackerView, BalanceRange, InconsistentLeak
from .flow import FlowNetwork, Infeasible

_CHUNK_ROWS = 1 << 20


class OracleLimitExceeded(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_free_edges: int = 6
    max_bound_span: int = 20
    max_assignments: int = 10**8


# (tail, head, lower, upper, cost)
_Arc = tuple[int, int, int, int, int]


def _enumerate(
    node_count: int, supplies: Sequence[int], arcs: Sequence[_Arc], limits: OracleLimits
):
    """Yield (free-edge values, fixed flows) blocks of conserving assignments.

    Each yielded block is a 2-D array: one row per feasible assignment, one
    column per arc, in the original arc order.
    """
    free = [i for i, a in enumerate(arcs) if a[2] < a[3]]
    if len(free) > limits.max_free_edges:
        raise OracleLimitExceeded(f"{len(free)} free edges > {limits.max_free_edges}")
    spans = [arcs[i][3] - arcs[i][2] for i in free]
    if any(s > limits.max_bound_span for s in spans):
        raise OracleLimitExceeded(f"bound span {max(spans)} > {limits.max_bound_span}")
    total = 1
    for s in spans:
        total *= s + 1
    if total > limits.max_assignments:
        raise OracleLimitExceeded(f"{total} assignments > {limits.max_assignments}")

    incidence = np.zeros((len(arcs), node_count), dtype=np.int64)
    for i, (u, v, *_rest) in enumerate(arcs):
        incidence[i, u] += 1
        incidence[i, v] -= 1
    target = np.asarray(supplies, dtype=np.int64)
    base = np.array([a[2] for a in arcs], dtype=np.int64)

    # lexicographic order over the free edges, in fixed-size chunks
    for start in range(0, total, _CHUNK_ROWS):
        codes = np.arange(start, min(start + _CHUNK_ROWS, total), dtype=np.int64)
        flows = np.tile(base, (len(codes), 1))
        for col, span in zip(reversed(free), reversed(spans)):
            codes, digit = np.divmod(codes, span + 1)
            flows[:, col] += digit
        ok = np.all(flows @ incidence == target, axis=1)
        if ok.any():
            yield flows[ok]


def brute_force_min_cost(n: FlowNetwork, limits: OracleLimits = OracleLimits()) -> int | Infeasible:
    arcs = [(e.tail, e.head, e.lower, e.upper, e.cost) for e in n.edges]
    costs = np.array([e.cost for e in n.edges], dtype=np.int64)
    best = None
    for block in _enumerate(n.node_count, n.supplies, arcs, limits):
        value = int((block @ costs).min()) if len(costs) else 0
        best = value if best is None else min(best, value)
    return Infeasible() if best is None else best


def brute_force_range(
    v: AttackerView, target: int, limits: OracleLimits = OracleLimits(), *, hide_mint: bool = False
) -> BalanceRange:
    """Feasible balance range of ``target`` by exhaustive enumeration."""
    if target not in v.addresses:
        raise KeyError(f"unknown target address {target}")
    supply = v.total_supply
    # node 0 feeds the deployer, node 1 drains every balance
    node = {a: i + 2 for i, a in enumerate(v.addresses)}
    supplies = [0] * (len(node) + 2)
    supplies[0], supplies[1] = supply, -supply
    arcs: list[_Arc] = [(0, node[v.deployer], 0 if hide_mint else supply, supply, 0)]
    for t in v.transfers:
        amt = v.leaked_amounts.get(t.index)
        arcs.append((node[t.sender], node[t.receiver], *((0, supply) if amt is None else (amt, amt)), 0))
    col = None
    for a in v.addresses:
        if a == target:
            col = len(arcs)
        arcs.append((node[a], 1, 0, supply, 0))

    lo = hi = None
    for block in _enumerate(len(supplies), supplies, arcs, limits):
        values = block[:, col]
        bmin, bmax = int(values.min()), int(values.max())
        lo = bmin if lo is None else min(lo, bmin)
        hi = bmax if hi is None else max(hi, bmax)
    if lo is None:
        raise InconsistentLeak("no integer flow is consistent with the leaked amounts")
    return BalanceRange(target, lo, hi)
