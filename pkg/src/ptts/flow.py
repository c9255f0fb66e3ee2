"""Exact integer minimum-cost flow with edge lower bounds and node supplies.

The solver runs in two phases on the lower-bound-reduced network:

1. a max-flow (Dinic) from aggregate excess to aggregate deficit decides
   feasibility and yields some feasible flow;
2. every residual arc of negative cost is saturated, which leaves a residual
   graph with non-negative costs and some new imbalances, and a primal-dual
   successive-shortest-path loop (Dijkstra potentials, then a maximal flow on
   the zero-reduced-cost arcs) routes those imbalances back at minimum cost.

Saturating negative arcs up front also copes with negative cycles, which a
Bellman-Ford potential pass cannot.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, TextIO

INT64_MAX = (1 << 63) - 1
INT32_MAX = (1 << 31) - 1
# supplies and bounds up to this size keep every intermediate sum inside int64
MAGNITUDE_LIMIT = 1 << 40
_INF = float("inf")


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    lower: int
    upper: int
    cost: int = 0


@dataclass
class FlowNetwork:
    node_count: int
    supplies: list[int]
    edges: list[Edge] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.supplies) != self.node_count:
            raise ValueError("supplies must list one value per node")

    def add_edge(self, tail: int, head: int, lower: int, upper: int, cost: int = 0) -> int:
        self.edges.append(Edge(tail, head, lower, upper, cost))
        return len(self.edges) - 1

    def validate(self) -> None:
        if sum(self.supplies) != 0:
            raise ValueError(f"supplies sum to {sum(self.supplies)}, not 0")
        if any(abs(b) > MAGNITUDE_LIMIT for b in self.supplies):
            raise OverflowError("node supply exceeds 2^40")
        for i, e in enumerate(self.edges):
            if not (0 <= e.tail < self.node_count and 0 <= e.head < self.node_count):
                raise ValueError(f"edge {i} references a missing node")
            if e.tail == e.head:
                raise ValueError(f"edge {i} is a self-loop")
            if not 0 <= e.lower <= e.upper:
                raise ValueError(f"edge {i} has invalid bounds [{e.lower}, {e.upper}]")
            if e.upper > MAGNITUDE_LIMIT:
                raise OverflowError(f"edge {i} capacity exceeds 2^40")
            if abs(e.cost) > INT32_MAX:
                raise OverflowError(f"edge {i} cost does not fit in 32 bits")

    def objective(self, flows: Iterable[int]) -> int:
        return sum(e.cost * x for e, x in zip(self.edges, flows))


@dataclass
class FlowSolution:
    flows: list[int]
    objective: int
    # node potentials certifying optimality (reduced cost c + p[tail] - p[head])
    potentials: list[int]


@dataclass(frozen=True)
class Infeasible:
    reason: str = "no flow satisfies the supplies and bounds"

    def __bool__(self) -> bool:
        return False


def reduce_lower_bounds(n: FlowNetwork) -> tuple[FlowNetwork, list[int], int]:
    """Shift every edge's lower bound into the node supplies.

    Returns the reduced network (all lower bounds 0, capacities ``u - l``),
    the forced base flow per edge, and the cost of that base flow.
    """
    supplies = list(n.supplies)
    edges = []
    base = []
    base_cost = 0
    for e in n.edges:
        if e.lower:
            supplies[e.tail] -= e.lower
            supplies[e.head] += e.lower
            base_cost += e.cost * e.lower
        base.append(e.lower)
        edges.append(Edge(e.tail, e.head, 0, e.upper - e.lower, e.cost))
    return FlowNetwork(n.node_count, supplies, edges), base, base_cost


class _Residual:
    """Arc-pair residual graph; arc ``a ^ 1`` is the reverse of arc ``a``."""

    __slots__ = ("n", "adj", "to", "cap", "cost")

    def __init__(self, n: int) -> None:
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[int] = []

    def add(self, u: int, v: int, cap: int, cost: int) -> int:
        a = len(self.to)
        self.to += (v, u)
        self.cap += (cap, 0)
        self.cost += (cost, -cost)
        self.adj[u].append(a)
        self.adj[v].append(a + 1)
        return a

    def max_flow(self, s: int, t: int, pot: list[int] | None = None) -> int:
        """Dinic max-flow from s to t.

        With ``pot`` given, only arcs of zero reduced cost are usable.
        """
        adj, to, cap, cost = self.adj, self.to, self.cap, self.cost
        n = self.n
        total = 0
        while True:
            level = [-1] * n
            level[s] = 0
            frontier = [s]
            while frontier and level[t] < 0:
                nxt = []
                for u in frontier:
                    lu = level[u] + 1
                    pu = pot[u] if pot is not None else 0
                    for a in adj[u]:
                        if cap[a] > 0:
                            v = to[a]
                            if level[v] < 0 and (pot is None or cost[a] + pu - pot[v] == 0):
                                level[v] = lu
                                nxt.append(v)
                frontier = nxt
            if level[t] < 0:
                return total
            total += self._blocking(s, t, level, pot)

    def _blocking(self, s: int, t: int, level: list[int], pot: list[int] | None) -> int:
        adj, to, cap, cost = self.adj, self.to, self.cap, self.cost
        it = [0] * self.n
        pushed = 0
        path: list[int] = []
        u = s
        while True:
            if u == t:
                f = min(cap[a] for a in path)
                cut = -1
                for i, a in enumerate(path):
                    cap[a] -= f
                    cap[a ^ 1] += f
                    if cut < 0 and cap[a] == 0:
                        cut = i
                pushed += f
                del path[cut:]
                u = to[path[-1]] if path else s
                continue
            arcs = adj[u]
            i = it[u]
            lv = level[u] + 1
            pu = pot[u] if pot is not None else 0
            while i < len(arcs):
                a = arcs[i]
                if cap[a] > 0:
                    v = to[a]
                    if level[v] == lv and (pot is None or cost[a] + pu - pot[v] == 0):
                        break
                i += 1
            it[u] = i
            if i < len(arcs):
                a = arcs[i]
                path.append(a)
                u = to[a]
                continue
            # dead end: prune u and retreat
            level[u] = -2
            if not path:
                return pushed
            a = path.pop()
            u = to[a ^ 1]
            it[u] += 1

    def dijkstra(self, s: int, pot: list[int]) -> list[float]:
        adj, to, cap, cost = self.adj, self.to, self.cap, self.cost
        dist: list[float] = [_INF] * self.n
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            pu = pot[u]
            for a in adj[u]:
                if cap[a] > 0:
                    v = to[a]
                    nd = d + cost[a] + pu - pot[v]
                    if nd < dist[v]:
                        dist[v] = nd
                        heapq.heappush(heap, (nd, v))
        return dist


def _attach_terminals(g: _Residual, imbalance: list[int], s: int, t: int) -> tuple[list[int], int]:
    arcs = []
    need = 0
    for v, b in enumerate(imbalance):
        if b > 0:
            arcs.append(g.add(s, v, b, 0))
            need += b
        elif b < 0:
            arcs.append(g.add(v, t, -b, 0))
    return arcs, need


def _detach(g: _Residual, arcs: list[int]) -> None:
    for a in arcs:
        g.cap[a] = 0
        g.cap[a ^ 1] = 0


def _phase_one(reduced: FlowNetwork) -> tuple[_Residual, list[int]] | None:
    n = reduced.node_count
    g = _Residual(n + 2)
    s, t = n, n + 1
    edge_arcs = [g.add(e.tail, e.head, e.upper, e.cost) for e in reduced.edges]
    terminals, need = _attach_terminals(g, reduced.supplies, s, t)
    if g.max_flow(s, t) != need:
        return None
    _detach(g, terminals)
    return g, edge_arcs


def is_feasible(n: FlowNetwork) -> bool:
    n.validate()
    reduced, _, _ = reduce_lower_bounds(n)
    return _phase_one(reduced) is not None


def solve_min_cost_flow(n: FlowNetwork) -> FlowSolution | Infeasible:
    n.validate()
    reduced, base, _ = reduce_lower_bounds(n)
    first = _phase_one(reduced)
    if first is None:
        return Infeasible()
    g, edge_arcs = first
    size = reduced.node_count
    s, t = size, size + 1
    to, cap, cost = g.to, g.cap, g.cost

    # saturate negative arcs; afterwards every residual arc has cost >= 0
    imbalance = [0] * (size + 2)
    for a in range(len(to)):
        if cost[a] < 0 and cap[a] > 0:
            f = cap[a]
            cap[a] = 0
            cap[a ^ 1] += f
            imbalance[to[a]] += f
            imbalance[to[a ^ 1]] -= f
    _, need = _attach_terminals(g, imbalance[:size], s, t)

    pot = [0] * (size + 2)
    while need > 0:
        dist = g.dijkstra(s, pot)
        dt = dist[t]
        if dt == _INF:
            raise RuntimeError("residual imbalance cannot be routed; feasibility phase is inconsistent")
        for v in range(size + 2):
            dv = dist[v]
            pot[v] += dt if dv > dt else dv
        pushed = g.max_flow(s, t, pot)
        need -= pushed

    flows = [base[i] + cap[a ^ 1] for i, a in enumerate(edge_arcs)]
    objective = n.objective(flows)
    if abs(objective) > INT64_MAX:
        raise OverflowError("objective does not fit in 64 bits")
    return FlowSolution(flows, objective, pot[:size])


def check_optimality(n: FlowNetwork, sol: FlowSolution) -> bool:
    """Verify bounds, conservation, the objective and complementary slackness."""
    if len(sol.flows) != len(n.edges) or len(sol.potentials) != n.node_count:
        return False
    net = [0] * n.node_count
    p = sol.potentials
    for e, x in zip(n.edges, sol.flows):
        if not e.lower <= x <= e.upper:
            return False
        net[e.tail] += x
        net[e.head] -= x
        rc = e.cost + p[e.tail] - p[e.head]
        if x < e.upper and rc < 0:
            return False
        if x > e.lower and rc > 0:
            return False
    return net == list(n.supplies) and n.objective(sol.flows) == sol.objective


def dump_dimacs(n: FlowNetwork, out: TextIO) -> None:
    """Write ``n`` in DIMACS-like min-cost format with 1-based node ids."""
    out.write(f"p min {n.node_count} {len(n.edges)}\n")
    for v, b in enumerate(n.supplies):
        if b:
            out.write(f"n {v + 1} {b}\n")
    for e in n.edges:
        out.write(f"a {e.tail + 1} {e.head + 1} {e.lower} {e.upper} {e.cost}\n")


def load_dimacs(lines: Iterable[str]) -> FlowNetwork:
    net: FlowNetwork | None = None
    declared = 0
    for lineno, raw in enumerate(lines, 1):
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        try:
            if tag == "p":
                if parts[1] != "min":
                    raise ValueError(f"unsupported problem type {parts[1]!r}")
                nodes, declared = int(parts[2]), int(parts[3])
                net = FlowNetwork(nodes, [0] * nodes)
            elif net is None:
                raise ValueError("problem line must come first")
            elif tag == "n":
                net.supplies[int(parts[1]) - 1] = int(parts[2])
            elif tag == "a":
                u, v, lo, hi, c = map(int, parts[1:6])
                net.add_edge(u - 1, v - 1, lo, hi, c)
            else:
                raise ValueError(f"unknown line tag {tag!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if net is None:
        raise ValueError("missing problem line")
    if len(net.edges) != declared:
        raise ValueError(f"expected {declared} arcs, read {len(net.edges)}")
    return net
