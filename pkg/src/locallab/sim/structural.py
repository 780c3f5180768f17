"""Certification of the tree, row, grid and Turing layers.

Every node works out, layer by layer, the *unit* it belongs to: its tree
(T-component) in the tree layer, its row (E/W-component of grid nodes) in the
row, grid and Turing layers.  A unit is good when no member breaks a good rule
of that layer.  In a bad unit, members that break a rule output the error
label and the others route pointers toward the nearest such member.

All graph reads go through :class:`_LayerView`, which records which nodes were
consulted.  A node can stop as soon as its view contains every consulted node
together with all of that node's edges, i.e. at round ``1 + max distance``.
"""

from __future__ import annotations

from collections import deque
from typing import Any, Callable

import numpy as np

from ..lcl import ABSENT
from ..network import Network, RootedNeighborhood
from ..pi import (
    E, ERROR, G, GOOD, GRID_POINTERS, I_E, O_E, QUIET_BAD, ROW_POINTERS, T, TREE_POINTERS, W,
    f, grid_good_violations, pointer, row_good_violations, slab, tree_good_violations,
    turing_good_rules,
)
from ..turing import TuringMachine
from .engine import LocalAlgorithm, NodeOutput

TREE, ROW, GRID, TURING = range(4)
LAYERS = 4

_POINTERS = {TREE: TREE_POINTERS, ROW: ROW_POINTERS, GRID: GRID_POINTERS}
_SUCC: dict[int, Callable[[str], tuple | None]] = {
    TREE: {"L": ("L",), "R": ("R",), "P": ("P", "L", "R"), "Ch_R": ("Ch_R", "L", "R")}.get,
    ROW: {"E": ("E",), "W": ("W",)}.get,
    GRID: {"E": ("E",), "W": ("W",)}.get,
}


class Unit:
    """Outputs of one unit in one layer, plus what the computation looked at."""

    __slots__ = ("layer", "members", "node_out", "half_out", "touched", "deps", "_support")

    def __init__(self, layer: int, members: tuple[int, ...]):
        self.layer = layer
        self.members = members
        self.node_out: dict[int, Any] = {}
        self.half_out: dict[int, tuple] = {}
        self.touched: set[int] = set()
        self.deps: set[Unit] = set()
        self._support: frozenset[int] | None = None

    def support(self) -> frozenset[int]:
        if self._support is None:
            s = set(self.touched)
            for d in self.deps:
                s |= d.support()
            self._support = frozenset(s)
        return self._support


class _LayerView:
    """The graph as a given layer sees it (nodes bad in an earlier layer removed), with read tracking."""

    def __init__(self, lab: "RowLabeler", layer: int, unit: Unit):
        self.lab = lab
        self.layer = layer
        self.unit = unit

    def nbrs(self, u: int) -> tuple[tuple[int, int, int], ...]:
        self.unit.touched.add(u)
        adj, deps = self.lab.filtered_adjacency(self.layer, u)
        self.unit.deps |= deps
        return adj

    def hin(self, u: int, port: int) -> Any:
        self.unit.touched.add(u)
        return self.lab.net.hin(u, port)

    def nin(self, u: int) -> Any:
        self.unit.touched.add(u)
        return self.lab.net.node_input[u]


class RowLabeler:
    """Layer-by-layer labeler over a whole network (or over a view's fragment)."""

    def __init__(self, net: Network, tm: TuringMachine):
        self.net = net
        self.tm = tm
        self.rules = [tree_good_violations, row_good_violations, grid_good_violations, turing_good_rules(tm)]
        self._units: list[dict[int, Unit]] = [dict() for _ in range(LAYERS)]
        self._adj: list[dict[int, tuple]] = [dict() for _ in range(LAYERS + 1)]

    # -- presence -----------------------------------------------------------

    def present(self, layer: int, y: int, deps: set[Unit]) -> bool:
        for below in range(layer):
            unit = self.unit(below, y)
            deps.add(unit)
            if unit.node_out[y] != GOOD:
                return False
        return True

    def filtered_adjacency(self, layer: int, u: int) -> tuple[tuple, frozenset]:
        hit = self._adj[layer].get(u)
        if hit is None:
            deps: set[Unit] = set()
            adj = tuple(e for e in self.net.adjacency[u] if self.present(layer, e[1], deps))
            hit = self._adj[layer][u] = (adj, frozenset(deps))
        return hit

    # -- units ----------------------------------------------------------------

    def quiescent(self, layer: int, u: int) -> bool:
        kind = self.net.node_input[u][0]
        return (layer == TREE and kind == G) or (layer in (GRID, TURING) and kind == T)

    def unit(self, layer: int, u: int) -> Unit:
        hit = self._units[layer].get(u)
        if hit is None:
            hit = self._evaluate(layer, u)
            for m in hit.members:
                self._units[layer][m] = hit
        return hit

    def _joins(self, view: _LayerView, layer: int, u: int, p: int, v: int) -> bool:
        if layer == TREE:
            return view.nin(v)[0] == T
        return slab(view, u, p) in (E, W) and view.nin(v)[0] == G

    def _evaluate(self, layer: int, u: int) -> Unit:
        net = self.net
        probe = Unit(layer, (u,))
        view = _LayerView(self, layer, probe)
        kind = view.nin(u)[0]
        if self.quiescent(layer, u) or (layer == ROW and kind == T):
            members = [u]
        else:
            members, seen, queue = [], {u}, deque([u])
            while queue:
                x = queue.popleft()
                members.append(x)
                for p, y, _ in view.nbrs(x):
                    if y not in seen and self._joins(view, layer, x, p, y):
                        seen.add(y)
                        queue.append(y)
        unit = Unit(layer, tuple(sorted(members, key=lambda x: net.ids[x])))
        unit.touched, unit.deps = probe.touched, probe.deps
        view.unit = unit
        if self.quiescent(layer, u):
            self._fill(unit, {u: GOOD}, {})
            return unit
        broken = [m for m in unit.members if self.rules[layer](view, m)]
        if not broken:
            self._fill(unit, {m: GOOD for m in unit.members}, {})
        elif layer == TURING:
            self._turing_pointers(view, unit, broken)
        else:
            self._route(view, unit, broken)
        return unit

    def _fill(self, unit: Unit, node_out: dict[int, Any], half_override: dict[int, dict[int, Any]]) -> None:
        bad_half = I_E if unit.layer == TURING else QUIET_BAD
        for m in unit.members:
            lab = node_out.get(m, GOOD)
            unit.node_out[m] = lab
            default = GOOD if lab == GOOD else bad_half
            over = half_override.get(m, {})
            unit.half_out[m] = tuple(over.get(p, default) for p, _, _ in self.net.adjacency[m])

    def _route(self, view: _LayerView, unit: Unit, broken: list[int]) -> None:
        layer = unit.layer
        allowed, succ = _POINTERS[layer], _SUCC[layer]
        level = {m: 0 for m in broken}
        out: dict[int, Any] = {m: ERROR for m in broken}
        d = 0
        while True:
            d += 1
            fresh = {}
            for m in unit.members:
                if m in level:
                    continue
                best = None
                for p, y, _ in view.nbrs(m):
                    lab = slab(view, m, p)
                    if y not in level or lab not in allowed or f(view, m, lab) != y:
                        continue
                    nxt = succ(lab)
                    if out[y] != ERROR and nxt is not None and out[y][1] not in nxt:
                        continue
                    key = (level[y], p, lab)
                    if best is None or key < best:
                        best = key
                if best is not None:
                    fresh[m] = pointer(best[2])
            if not fresh:
                break
            for m, lab in fresh.items():
                level[m] = d
                out[m] = lab
        self._fill(unit, out, {})

    def _turing_pointers(self, view: _LayerView, unit: Unit, broken: list[int]) -> None:
        dist = {m: 0 for m in broken}
        queue = deque(broken)
        members = set(unit.members)
        while queue:
            x = queue.popleft()
            for side in (W, E):
                y = f(view, x, side)
                if y is not None and y in members and y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        out: dict[int, Any] = {m: QUIET_BAD for m in broken}
        halves: dict[int, dict[int, Any]] = {}
        for m in unit.members:
            if m in dist and dist[m] == 0:
                continue
            best = None
            for side in (W, E):
                y = f(view, m, side)
                if y is None or y not in dist:
                    continue
                port = next(p for p, z, _ in view.nbrs(m) if z == y)
                key = (dist[y], port)
                if best is None or key < best:
                    best = key
            if best is None:
                continue
            out[m] = QUIET_BAD
            halves[m] = {best[1]: O_E}
        self._fill(unit, out, halves)

    # -- per node -------------------------------------------------------------

    def node_result(self, u: int) -> tuple[list[Any], list[tuple], list[Unit]]:
        """Layer labels of ``u``, its half-edge labels per layer, and the units consulted."""
        labels, halves, units = [], [], []
        for layer in range(LAYERS):
            unit = self.unit(layer, u)
            units.append(unit)
            labels.append(unit.node_out[u])
            halves.append(unit.half_out[u])
            if unit.node_out[u] != GOOD:
                break
        return labels, halves, units


def compose_output(net: Network, u: int, labels: list[Any], halves: list[tuple], layers: int) -> NodeOutput:
    pad = [ABSENT] * (layers - len(labels))
    node = tuple(labels) + tuple(pad)
    half = {p: tuple(h[i] for h in halves) + tuple(pad) for i, (p, _, _) in enumerate(net.adjacency[u])}
    return NodeOutput(node, half)


def support_of(units: list[Unit]) -> frozenset[int]:
    s: set[int] = set()
    for unit in units:
        s |= unit.support()
    return frozenset(s)


def halt_round(dist: np.ndarray, support: frozenset[int]) -> int:
    return 1 + int(dist[np.fromiter(support, dtype=np.int64, count=len(support))].max())


class StructuralAlgorithm(LocalAlgorithm):
    """Solves tree * row * grid * Turing; outputs are 4-tuples per node and half-edge."""

    name = "structural"

    def __init__(self, tm: TuringMachine):
        self.tm = tm

    def decide(self, view: RootedNeighborhood) -> NodeOutput | None:
        frag = view.fragment
        lab = RowLabeler(frag, self.tm)
        labels, halves, units = lab.node_result(0)
        if halt_round(frag.distances_from(0), support_of(units)) > view.radius:
            return None
        return compose_output(frag, 0, labels, halves, LAYERS)

    def host_run(self, net: Network) -> list[tuple[Any, int]]:
        lab = RowLabeler(net, self.tm)
        results = []
        for u in net.nodes():
            labels, halves, units = lab.node_result(u)
            r = halt_round(net.distances_from(u), support_of(units))
            results.append((compose_output(net, u, labels, halves, LAYERS), r))
        return results


def alg_structural(tm: TuringMachine) -> StructuralAlgorithm:
    return StructuralAlgorithm(tm)
