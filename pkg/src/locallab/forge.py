"""Instance generators: perfect trees, layers, growing grids, machine-trace grids, corruptions."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Hashable

from .lcl import LclProblem, OutputLabeling
from .network import Network, build_network
from .pi import (
    CH, CH_L, CH_R, E, GOOD, G, HEAD, I_H, N, NO, O_H, P, L, R, S, T, W,
    half_input, node_input,
)
from .turing import TuringMachine, moves_west_at_edge, tm_trace


class InputTooLong(ValueError):
    """The machine input does not fit on the rows of the instance."""


class WestEdgeMove(ValueError):
    """The trace moves the head left from the west-most cell, which a growing grid cannot show."""


class UnsupportedKind(ValueError):
    """Unknown corruption kind."""


class NoCorruptionSite(ValueError):
    """The instance has no place where the requested corruption applies."""


CORRUPTION_KINDS = ("tree_break", "row_break", "grid_break", "turing_transition", "turing_two_heads")


@dataclass
class _Builder:
    """Accumulates nodes and edges; ports are handed out in insertion order."""

    inputs: dict[Hashable, Any] = field(default_factory=dict)
    edges: list[tuple[Hashable, int, Hashable, int]] = field(default_factory=list)
    halves: dict[tuple[Hashable, int], Any] = field(default_factory=dict)
    next_port: dict[Hashable, int] = field(default_factory=dict)

    def node(self, key: Hashable, label: Any) -> None:
        self.inputs[key] = label
        self.next_port[key] = 1

    def edge(self, u: Hashable, lu: Any, v: Hashable, lv: Any) -> None:
        p, q = self.next_port[u], self.next_port[v]
        self.next_port[u] += 1
        self.next_port[v] += 1
        self.edges.append((u, p, v, q))
        self.halves[(u, p)] = lu
        self.halves[(v, q)] = lv

    def build(self, order: list[Hashable]) -> Network:
        ids = {key: i + 1 for i, key in enumerate(order)}
        return build_network(self.edges, ids, self.inputs, self.halves)


def tree_height(i: int) -> int:
    """Number of edge levels of the tree above a row of ``i`` nodes."""
    return (i - 1).bit_length() if i > 1 else 0


def leaf_slots(i: int) -> list[int]:
    """Leaf positions of the ``i`` grid nodes: both ends pinned, first gaps widened to 2."""
    width = 2 ** tree_height(i)
    skips = width - i
    slots, pos = [0], 0
    for j in range(1, i):
        pos += 2 if j <= skips else 1
        slots.append(pos)
    assert slots[-1] == width - 1
    return slots


def _add_tree(b: _Builder, tag: Hashable, levels: int, label: Any) -> list[Hashable]:
    """Perfect tree with ``levels`` levels; returns keys in (level, position) order."""
    keys = []
    for lvl in range(levels):
        for pos in range(2**lvl):
            key = (tag, "t", lvl, pos)
            b.node(key, label)
            keys.append(key)
    for lvl in range(levels):
        for pos in range(2**lvl):
            u = (tag, "t", lvl, pos)
            if pos + 1 < 2**lvl:
                b.edge(u, half_input(R), (tag, "t", lvl, pos + 1), half_input(L))
            if lvl + 1 < levels:
                b.edge(u, half_input(CH_L), (tag, "t", lvl + 1, 2 * pos), half_input(P))
                b.edge(u, half_input(CH_R), (tag, "t", lvl + 1, 2 * pos + 1), half_input(P))
    return keys


def make_perfect_tree(levels: int) -> Network:
    if levels < 1:
        raise ValueError("a perfect tree needs at least one level")
    b = _Builder()
    keys = _add_tree(b, 0, levels, node_input(T))
    return b.build(keys)


def _add_layer(b: _Builder, layer: int, cells: list[tuple], row_planes: list[tuple[str, str]]) -> list[Hashable]:
    """One row with its tree.  ``row_planes[j]`` holds the head-pointer labels of edge j–(j+1)."""
    i = len(cells)
    h = tree_height(i)
    row = [(layer, "g", j) for j in range(i)]
    for key, cell in zip(row, cells):
        b.node(key, node_input(G, *cell))
    tree = _add_tree(b, layer, h + 1, node_input(T))
    for key, slot in zip(row, leaf_slots(i)):
        b.edge(key, half_input(P), (layer, "t", h, slot), half_input(CH))
    for j in range(i - 1):
        west, east = row_planes[j]
        b.edge(row[j], half_input(E, west), row[j + 1], half_input(W, east))
    return row + tree


def _toward(i: int, head: int | None) -> list[tuple[str, str]]:
    """Head-pointer labels for the row edges; with no head every edge points east."""
    if head is None:
        return [(O_H, I_H)] * (i - 1)
    return [(O_H, I_H) if j + 1 <= head else (I_H, O_H) for j in range(i - 1)]


def make_layer(i: int) -> Network:
    if i < 1:
        raise ValueError("a row needs at least one node")
    b = _Builder()
    keys = _add_layer(b, 1, [(0, NO, NO)] * i, _toward(i, None))
    return b.build(keys)


def _grid(rows: list[tuple[list[tuple], int | None]]) -> Network:
    b = _Builder()
    order: list[Hashable] = []
    for r, (cells, head) in enumerate(rows, start=1):
        order += _add_layer(b, r, cells, _toward(len(cells), head))
        if r > 1:
            for j in range(len(rows[r - 2][0])):
                b.edge((r - 1, "g", j), half_input(S), (r, "g", j), half_input(N))
    return b.build(order)


def make_growing_grid(h: int, l: int) -> Network:
    """Rows of ``l, l+1, ..., l+h-1`` nodes, each under its own tree."""
    if h < 1 or l < 1:
        raise ValueError("h and l must be at least 1")
    return _grid([([(0, NO, NO)] * (l + r), None) for r in range(h)])


def gk_rows(k: int, tm: TuringMachine, x: str) -> list[tuple[list[tuple], int | None]]:
    m = len(x)
    if m > k:
        raise InputTooLong(f"input of length {m} does not fit in {k} rows")
    if m == 0 or set(x) - {"0", "1"}:
        raise ValueError("input must be a non-empty binary string")
    rows: list[tuple[list[tuple], int | None]] = [([(0, NO, NO)] * r, None) for r in range(1, m)]
    trace = tm_trace(tm, x, k - m + 1)
    for t, c in enumerate(trace):
        if t + 1 < len(trace) and moves_west_at_edge(tm, c):
            raise WestEdgeMove(f"row {m + t}: head moves west from the first cell")
        cells = [(b, HEAD, c.state) if j == c.head else (b, NO, NO) for j, b in enumerate(c.tape)]
        rows.append((cells, c.head))
    return rows


def make_Gk(k: int, tm: TuringMachine, x: str) -> Network:
    """Growing grid over ``k`` rows starting from one node, carrying the trace of ``tm`` on ``x``."""
    return _grid(gk_rows(k, tm, x))


def layer_of(net: Network, l: int = 1) -> list[int]:
    """Layer index (1-based) of every node of a generated grid whose first row has ``l`` nodes."""
    # Layer r holds its grid nodes and 2^(h+1)-1 tree nodes; ids are consecutive per layer.
    bounds, total, width = [], 0, l - 1
    while total < net.n:
        width += 1
        total += width + 2 ** (tree_height(width) + 1) - 1
        bounds.append(total)
    out = []
    for i in net.ids:
        lo = 0
        while bounds[lo] < i:
            lo += 1
        out.append(lo + 1)
    return out


# ---------------------------------------------------------------------------
# corruptions


def _struct(net: Network, u: int, port: int) -> str:
    return net.hin(u, port)[0]


def _candidates(net: Network, kind: str) -> list[tuple[int, int] | tuple[int, tuple]]:
    kinds = [nin[0] for nin in net.node_input]
    sites: list = []
    if kind == "tree_break":
        sites = [(u, p) for u, p, v, q in net.edges()
                 if kinds[u] == kinds[v] == T and _struct(net, u, p) in (L, R)]
    elif kind == "row_break":
        sites = [(u, p) for u, p, v, q in net.edges() if _struct(net, u, p) in (E, W)]
    elif kind == "grid_break":
        # A column edge hanging from a one-node row splits off a valid smaller grid; skip it.
        for u, p, v, q in net.edges():
            if _struct(net, u, p) in (N, S):
                upper = u if _struct(net, u, p) == S else v
                if any(_struct(net, upper, pp) in (E, W) for pp, _, _ in net.adjacency[upper]):
                    sites.append((u, p))
    elif kind in ("turing_transition", "turing_two_heads"):
        sites = _turing_sites(net, kind)
    else:
        raise UnsupportedKind(f"unknown corruption kind {kind!r}")
    return sites


def _turing_sites(net: Network, kind: str) -> list:
    """Grid cells with a north neighbor inside the traced part of the grid."""
    north = {}
    for u in net.nodes():
        for p, v, _ in net.adjacency[u]:
            if _struct(net, u, p) == N:
                north[u] = v
    headed = _headed_rows(net)
    sites = []
    for u, up in north.items():
        if up not in headed or u not in headed:
            continue
        if kind == "turing_transition":
            sites.append((u, ("flip",)))
        elif net.node_input[u][2] != HEAD:
            head_above = headed[up]
            near = {head_above}
            for p, v, _ in net.adjacency[head_above]:
                if _struct(net, head_above, p) == S:
                    near.add(v)
                    near.update(y for pp, y, _ in net.adjacency[v] if _struct(net, v, pp) in (E, W))
            if u not in near:
                sites.append((u, ("head",)))
    return sites


def _headed_rows(net: Network) -> dict[int, int]:
    """Map each grid node of a row containing a head to that row's head node."""
    seen: dict[int, int] = {}
    for u in net.nodes():
        if net.node_input[u][0] != G or u in seen:
            continue
        row, stack = {u}, [u]
        while stack:
            x = stack.pop()
            for p, y, _ in net.adjacency[x]:
                if _struct(net, x, p) in (E, W) and y not in row:
                    row.add(y)
                    stack.append(y)
        heads = [x for x in row if net.node_input[x][2] == HEAD]
        for x in row:
            seen[x] = heads[0] if len(heads) == 1 else -1
    return {x: h for x, h in seen.items() if h >= 0}


def corrupt(net: Network, kind: str, seed: int, *, tm: TuringMachine | None = None) -> Network:
    """Apply one seeded local mutation of the given kind."""
    sites = _candidates(net, kind)
    if not sites:
        raise NoCorruptionSite(f"no site for {kind} in this instance")
    u, what = random.Random(seed).choice(sites)
    if kind.endswith("_break"):
        return net.without_edge(u, what)
    k, b, h, q = net.node_input[u]
    if what == ("flip",):
        return net.with_node_input(u, (k, 1 - b, h, q))
    start = tm.start if tm is not None else _some_state(net)
    return net.with_node_input(u, (k, b, HEAD, start))


def _some_state(net: Network) -> str:
    return min(nin[3] for nin in net.node_input if nin[3] != NO)


# ---------------------------------------------------------------------------
# canonical labelings


def all_good(net: Network, problem: LclProblem) -> OutputLabeling:
    """Every layer outputs the good label everywhere (consensus, if present, gets ``reject``)."""
    layers = problem.layers
    node = tuple(GOOD if lay.name != "consensus" else "reject" for lay in layers)
    half = tuple(GOOD for _ in layers)
    if len(layers) == 1:
        node, half = node[0], half[0]
    return OutputLabeling.uniform(net, node, half)


def grid_columns(net: Network) -> dict[int, tuple[int, int]]:
    """(row, column) of each grid node, 1-based, found by walking W and N from the corner."""
    kinds = [nin[0] for nin in net.node_input]
    pos: dict[int, tuple[int, int]] = {}
    corner = [u for u in net.nodes() if kinds[u] == G
              and not any(_struct(net, u, p) in (W, N) for p, _, _ in net.adjacency[u])]
    for c in corner:
        frontier = [(c, (1, 1))]
        while frontier:
            u, (i, j) = frontier.pop()
            if u in pos:
                continue
            pos[u] = (i, j)
            for p, v, _ in net.adjacency[u]:
                step = {E: (0, 1), W: (0, -1), S: (1, 0), N: (-1, 0)}.get(_struct(net, u, p))
                if step and v not in pos:
                    frontier.append((v, (i + step[0], j + step[1])))
    return pos


__all__ = [
    "CORRUPTION_KINDS", "InputTooLong", "NoCorruptionSite", "UnsupportedKind", "WestEdgeMove",
    "all_good", "corrupt", "gk_rows", "grid_columns", "layer_of", "leaf_slots", "make_Gk",
    "make_growing_grid", "make_layer", "make_perfect_tree", "tree_height",
]
