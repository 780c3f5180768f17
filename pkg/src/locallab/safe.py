"""Safe neighborhoods and the finite search for neighborhood-to-label mappings.

A radius ``t`` is *T-safe* for a view ``X`` when no network of the class that
contains ``X`` has so few nodes ``n'`` that ``t > T(n')``.  Because ``T`` is
non-decreasing, it is enough to find the smallest host of ``X``: the view is
unsafe iff that host (if any lies below the first ``N`` with ``T(N) >= t``)
already breaks the bound.

Whether ``X`` occurs in a class graph with ``n'`` nodes is decided without
enumerating ports, inputs or identifiers.  Those are free outside the view and
fixed inside it, so ``X`` occurs at ``v'`` exactly when the unlabeled ball of
``v'`` (with host degrees, root marked) matches the unlabeled shape of ``X``,
the labels of ``X`` lie in the class alphabets, and its largest identifier fits
in ``[n'^c]``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import networkx as nx

from .lcl import LclProblem, OutputLabeling, verify_solution
from .network import (
    ID_EXPONENT, Network, RootedNeighborhood, build_network, canonical_encode, neighborhood,
)
from .problems import NO_HALF

SEARCH_CAP = 1 << 20


class BoundNotExceeded(ValueError):
    """``T`` stays below the radius up to the search cap and no tail constant was declared."""


class NotInClass(ValueError):
    """The network does not belong to the graph class, so no maximal safe radius exists."""


class UnmappedView(KeyError):
    """A node's maximally safe view has no entry in the mapping."""

    def __init__(self, node_id: int, view: bytes):
        super().__init__(f"node {node_id}: view not in mapping")
        self.node_id = node_id
        self.view = view


# ---------------------------------------------------------------------------
# complexity bounds


@dataclass(frozen=True)
class ComplexityBound:
    """A non-decreasing ``T``; ``tail=(C, N0)`` declares ``T(n) = C`` for all ``n >= N0``."""

    name: str
    fn: Callable[[int], int] = field(compare=False)
    tail: tuple[int, int] | None = None

    def __call__(self, n: int) -> int:
        return self.fn(n)

    def first_reaching(self, t: int) -> int | None:
        """Smallest ``N`` with ``T(N) >= t``; ``None`` if the declared tail stays below ``t``."""
        if self.tail is not None:
            C, N0 = self.tail
            if t > C:
                return None
            hi = N0
        else:
            hi = 1
            while self(hi) < t:
                if hi >= SEARCH_CAP:
                    raise BoundNotExceeded(f"{self.name} stays below {t} up to n={SEARCH_CAP}")
                hi = min(2 * hi, SEARCH_CAP)
        lo = 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self(mid) >= t:
                hi = mid
            else:
                lo = mid + 1
        return lo


def constant_bound(C: int) -> ComplexityBound:
    return ComplexityBound(f"const{C}", lambda n: C, (C, 1))


def log2floor_bound() -> ComplexityBound:
    return ComplexityBound("log2floor", lambda n: int(math.floor(math.log2(n))) if n >= 1 else 0)


def identity_bound() -> ComplexityBound:
    return ComplexityBound("identity", lambda n: n)


def bound_by_name(spec: str) -> ComplexityBound:
    """``const:C``, ``log2`` or ``n``."""
    if spec.startswith("const:"):
        return constant_bound(int(spec.split(":", 1)[1]))
    if spec == "log2":
        return log2floor_bound()
    if spec == "n":
        return identity_bound()
    raise ValueError(f"unknown bound {spec!r}")


# ---------------------------------------------------------------------------
# graph classes


def _path(n: int) -> Iterator[nx.Graph]:
    yield nx.path_graph(n)


def _cycle(n: int) -> Iterator[nx.Graph]:
    if n >= 3:
        yield nx.cycle_graph(n)


def _trees(max_degree: int) -> Callable[[int], Iterator[nx.Graph]]:
    def gen(n: int) -> Iterator[nx.Graph]:
        if n <= 2:
            yield nx.path_graph(n)
            return
        found = [g for g in nx.nonisomorphic_trees(n) if max(d for _, d in g.degree) <= max_degree]
        yield from sorted(found, key=lambda g: sorted(g.edges()))
    return gen


@dataclass(frozen=True)
class GraphClass:
    """Graphs of a family together with every port numbering and input labeling.

    ``base(n)`` yields the unlabeled graphs on ``n`` nodes (one per isomorphism
    class).  Identifiers are placed by the caller or handled analytically.
    """

    name: str
    max_degree: int
    base: Callable[[int], Iterator[nx.Graph]] = field(compare=False)
    node_alphabet: tuple = ("·",)
    half_alphabet: tuple = (NO_HALF,)
    c: int = ID_EXPONENT

    def base_graphs(self, n: int) -> list[nx.Graph]:
        return list(self.base(n))

    def networks(self, n: int, ids: Sequence[int] | None = None) -> Iterator[Network]:
        """Every port numbering and input labeling of every base graph on ``n`` nodes, in fixed order."""
        for g in self.base_graphs(n):
            yield from _labelings(g, self, ids)

    def host_bound(self, x: RootedNeighborhood) -> int:
        """Any host of ``x`` in the class can be replaced by one with at most this many nodes."""
        f = x.fragment
        missing = sum(f.degrees[u] - len(f.adjacency[u]) for u in f.nodes())
        return f.n + missing


def paths(node_alphabet: tuple = ("·",), half_alphabet: tuple = (NO_HALF,)) -> GraphClass:
    return GraphClass("paths", 2, _path, node_alphabet, half_alphabet)


def cycles(node_alphabet: tuple = ("·",), half_alphabet: tuple = (NO_HALF,)) -> GraphClass:
    return GraphClass("cycles", 2, _cycle, node_alphabet, half_alphabet)


def trees(max_degree: int = 3, node_alphabet: tuple = ("·",), half_alphabet: tuple = (NO_HALF,)) -> GraphClass:
    return GraphClass(f"trees{max_degree}", max_degree, _trees(max_degree), node_alphabet, half_alphabet)


def class_by_name(name: str, node_alphabet: tuple = ("·",)) -> GraphClass:
    if name == "paths":
        return paths(node_alphabet)
    if name == "cycles":
        return cycles(node_alphabet)
    if name.startswith("trees"):
        return trees(int(name[5:] or 3), node_alphabet)
    raise ValueError(f"unknown graph class {name!r}")


def _labelings(g: nx.Graph, cls: GraphClass, ids: Sequence[int] | None) -> Iterator[Network]:
    nodes = sorted(g.nodes())
    n = len(nodes)
    ids = tuple(range(1, n + 1)) if ids is None else tuple(ids)
    incident = [sorted(g.neighbors(u)) for u in nodes]
    port_choices = [list(itertools.permutations(nb)) for nb in incident]
    halves = [(u, v) for u in nodes for v in incident[u]]
    for ports in itertools.product(*port_choices):
        port_of = {(u, v): i + 1 for u in nodes for i, v in enumerate(ports[u])}
        edges = [(u, port_of[(u, v)], v, port_of[(v, u)]) for u, v in sorted(g.edges())]
        for inputs in itertools.product(cls.node_alphabet, repeat=n):
            for hl in itertools.product(cls.half_alphabet, repeat=len(halves)):
                half = {(u, port_of[(u, v)]): lab for (u, v), lab in zip(halves, hl)}
                yield build_network(edges, {u: ids[u] for u in nodes}, dict(enumerate(inputs)), half,
                                    c=cls.c, max_degree=cls.max_degree)


# ---------------------------------------------------------------------------
# occurrence of a view in the class


def _shape(x: RootedNeighborhood) -> nx.Graph:
    f = x.fragment
    s = nx.Graph()
    for u in f.nodes():
        s.add_node(u, deg=f.degrees[u], root=(u == 0))
    for u in f.nodes():
        for _, v, _ in f.adjacency[u]:
            s.add_edge(u, v)
    return s


def _ball(g: nx.Graph, v: int, t: int) -> nx.Graph:
    dist = nx.single_source_shortest_path_length(g, v, cutoff=t)
    s = nx.Graph()
    for u in dist:
        s.add_node(u, deg=g.degree[u], root=(u == v))
    for u, w in g.edges():
        if u in dist and w in dist and min(dist[u], dist[w]) <= t - 1:
            s.add_edge(u, w)
    return s


def _same_attrs(a: dict, b: dict) -> bool:
    return a["deg"] == b["deg"] and a["root"] == b["root"]


class SafetyOracle:
    """Decides T-safety for views against one graph class, with memoized occurrence tests."""

    def __init__(self, cls: GraphClass):
        self.cls = cls
        self._occ: dict[tuple[bytes, int], bool] = {}
        self._bases: dict[int, list[nx.Graph]] = {}

    def _labels_fit(self, x: RootedNeighborhood) -> bool:
        f = x.fragment
        return (all(lab in self.cls.node_alphabet for lab in f.node_input)
                and all(lab in self.cls.half_alphabet for row in f.halfedge_input for lab in row)
                and max(f.degrees) <= self.cls.max_degree)

    def occurs(self, x: RootedNeighborhood, n: int) -> bool:
        """Does some class network on ``n`` nodes have a node whose view is ``x``?"""
        f = x.fragment
        if f.n > n or max(f.ids) > n ** self.cls.c or not self._labels_fit(x):
            return False
        key = (canonical_encode(x, ignore_ids=True), n)
        hit = self._occ.get(key)
        if hit is None:
            hit = self._search(x, n)
            self._occ[key] = hit
        return hit

    def _search(self, x: RootedNeighborhood, n: int) -> bool:
        shape = _shape(x)
        degs = sorted(d for _, d in shape.nodes(data="deg"))
        bases = self._bases.get(n)
        if bases is None:
            bases = self._bases[n] = self.cls.base_graphs(n)
        for g in bases:
            for v in sorted(g.nodes()):
                if g.degree[v] != x.fragment.degrees[0]:
                    continue
                ball = _ball(g, v, x.radius)
                if ball.number_of_nodes() != shape.number_of_nodes():
                    continue
                if sorted(g.degree[u] for u in ball) != degs:
                    continue
                if nx.is_isomorphic(ball, shape, node_match=_same_attrs):
                    return True
        return False

    def smallest_host(self, x: RootedNeighborhood, upto: int) -> int | None:
        for n in range(max(1, x.fragment.n), upto + 1):
            if self.occurs(x, n):
                return n
        return None

    def is_safe(self, x: RootedNeighborhood, T: ComplexityBound) -> bool:
        t = x.radius
        N = T.first_reaching(t)
        upto = self.cls.host_bound(x) if N is None else min(N - 1, self.cls.host_bound(x))
        n = self.smallest_host(x, upto)
        return n is None or t <= T(n)

    def max_safe_radius(self, net: Network, v: int, T: ComplexityBound) -> int:
        limit = T(net.n)
        for t in range(limit + 1):
            if not self.is_safe(neighborhood(net, v, t + 1), T):
                return t
        raise NotInClass(f"node {net.ids[v]}: radius {limit + 1} is still safe, so the network is not in {self.cls.name}")


_ORACLES: dict[GraphClass, SafetyOracle] = {}


def _oracle(cls: GraphClass) -> SafetyOracle:
    hit = _ORACLES.get(cls)
    if hit is None:
        hit = _ORACLES[cls] = SafetyOracle(cls)
    return hit


def is_T_safe(x: RootedNeighborhood, T: ComplexityBound, cls: GraphClass) -> bool:
    return _oracle(cls).is_safe(x, T)


def maximally_T_safe_radius(net: Network, v: int, T: ComplexityBound, cls: GraphClass) -> int:
    """Largest ``t`` such that ``t`` is safe for ``v`` and ``t + 1`` is not."""
    return _oracle(cls).max_safe_radius(net, v, T)


def maximally_safe_view(net: Network, v: int, T: ComplexityBound, cls: GraphClass) -> RootedNeighborhood:
    return neighborhood(net, v, maximally_T_safe_radius(net, v, T, cls))


def safety_report(views: Iterable[RootedNeighborhood], T: ComplexityBound, cls: GraphClass) -> list[str]:
    return [f"view={canonical_encode(x).decode()} radius={x.radius} safe={str(is_T_safe(x, T, cls)).lower()}"
            for x in views]


# ---------------------------------------------------------------------------
# mapping search


class NotFound:
    """No mapping labels every instance correctly."""

    def __repr__(self) -> str:
        return "NotFound"

    def __bool__(self) -> bool:
        return False


NOT_FOUND = NotFound()

Output = tuple  # (node label, half-edge labels by port order)


@dataclass
class Instances:
    """Enumerated instances with each node's maximally safe view key, plus the views in first-seen order."""

    networks: list[Network]
    keys: list[tuple[bytes, ...]]
    views: list[bytes]
    root_degree: dict[bytes, int]


def enumerate_instances(cls: GraphClass, T: ComplexityBound, N: int,
                        f_promise: Callable[[int], int] | None = None, id_exponent: int = 1) -> Instances:
    """All class networks with ``1 <= n <= N`` (and ``N <= f(n)`` under a promise).

    Identifiers range over injective assignments into ``[n^id_exponent]``.
    """
    nets, keys, views, degree = [], [], [], {}
    for n in range(1, N + 1):
        if f_promise is not None and N > f_promise(n):
            continue
        for perm in itertools.permutations(range(1, n ** id_exponent + 1), n):
            for net in cls.networks(n, perm):
                row = []
                for v in net.nodes():
                    key = canonical_encode(maximally_safe_view(net, v, T, cls))
                    if key not in degree:
                        degree[key] = net.degree(v)
                        views.append(key)
                    row.append(key)
                nets.append(net)
                keys.append(tuple(row))
    return Instances(nets, keys, views, degree)


def candidate_outputs(p: LclProblem, degree: int) -> list[Output]:
    return [(a, tuple(hs)) for a in p.node_out for hs in itertools.product(list(p.halfedge_out), repeat=degree)]


def _labeling(net: Network, keys: Sequence[bytes], g: dict[bytes, Output]) -> OutputLabeling:
    return OutputLabeling(tuple(g[k][0] for k in keys), tuple(g[k][1] for k in keys))


def search_mapping(p: LclProblem, T: ComplexityBound, N: int, cls: GraphClass,
                   f_promise: Callable[[int], int] | None = None, *, id_exponent: int = 1,
                   instances: Instances | None = None) -> dict[bytes, Output] | NotFound:
    """First mapping (views in first-seen order, labels in alphabet order) that solves every instance.

    Depth-first over views; an instance is checked as soon as all of its views
    are assigned.
    """
    inst = instances if instances is not None else enumerate_instances(cls, T, N, f_promise, id_exponent)
    order = {k: i for i, k in enumerate(inst.views)}
    due: list[list[int]] = [[] for _ in inst.views]
    for j, row in enumerate(inst.keys):
        due[max(order[k] for k in row)].append(j)
    choices = [candidate_outputs(p, inst.root_degree[k]) for k in inst.views]
    g: dict[bytes, Output] = {}

    def ok(i: int) -> bool:
        return all(not verify_solution(inst.networks[j], p, _labeling(inst.networks[j], inst.keys[j], g))
                   for j in due[i])

    # iterative DFS to stay clear of the recursion limit
    pos = [0] * len(inst.views)
    i = 0
    while 0 <= i < len(inst.views):
        key = inst.views[i]
        if pos[i] == len(choices[i]):
            pos[i] = 0
            g.pop(key, None)
            i -= 1
            continue
        g[key] = choices[i][pos[i]]
        pos[i] += 1
        if ok(i):
            i += 1
    return dict(g) if i == len(inst.views) else NOT_FOUND


def apply_mapping(g: dict[bytes, Output], net: Network, T: ComplexityBound, cls: GraphClass) -> OutputLabeling:
    nodes, halves = [], []
    for v in net.nodes():
        key = canonical_encode(maximally_safe_view(net, v, T, cls))
        if key not in g:
            raise UnmappedView(net.ids[v], key)
        nodes.append(g[key][0])
        halves.append(g[key][1])
    return OutputLabeling(tuple(nodes), tuple(halves))


def mapping_lines(g: dict[bytes, Output]) -> list[str]:
    return [f"{k.decode()} -> {json.dumps(list(v), ensure_ascii=False, default=str)}"
            for k, v in sorted(g.items(), key=lambda kv: kv[0])]


__all__ = [
    "BoundNotExceeded", "ComplexityBound", "GraphClass", "Instances", "NOT_FOUND", "NotFound", "NotInClass",
    "SafetyOracle", "UnmappedView", "apply_mapping", "bound_by_name", "candidate_outputs", "class_by_name",
    "constant_bound", "cycles", "enumerate_instances", "identity_bound", "is_T_safe", "log2floor_bound",
    "mapping_lines", "maximally_T_safe_radius", "maximally_safe_view", "paths", "safety_report",
    "search_mapping", "trees",
]
