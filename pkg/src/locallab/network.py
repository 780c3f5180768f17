"""Port-numbered networks with identifiers, and radius-t rooted views.

Node handles are the integers ``0..n-1``; identifiers are data attached to
handles.  A :class:`Network` may also be a *fragment* (the materialized content
of a rooted neighborhood): fragments keep the host degree of every node and the
host port numbers, so their adjacency lists can be shorter than the recorded
degree.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

MAX_DEGREE = 10
ID_EXPONENT = 3
UNREACHABLE = np.iinfo(np.int32).max


class NetworkError(ValueError):
    """Base class for malformed networks; ``node`` names the offender."""

    def __init__(self, message: str, node: Any = None):
        super().__init__(message)
        self.node = node


class DuplicatePort(NetworkError):
    pass


class NonInjectiveIds(NetworkError):
    pass


class DegreeExceedsDelta(NetworkError):
    pass


class IdOutOfRange(NetworkError):
    pass


class PortNumberingError(NetworkError):
    pass


class MissingLabel(NetworkError):
    pass


class UnknownNode(NetworkError):
    pass


class InstanceFormatError(ValueError):
    """An instance or labeling file does not follow the documented format."""


Adjacency = tuple[tuple[int, int, int], ...]


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable port-numbered network.

    ``adjacency[u]`` lists ``(port, neighbor, neighbor_port)`` sorted by port and
    ``halfedge_input[u]`` holds the half-edge labels in the same order.
    """

    ids: tuple[int, ...]
    node_input: tuple[Any, ...]
    adjacency: tuple[Adjacency, ...]
    halfedge_input: tuple[tuple[Any, ...], ...]
    degrees: tuple[int, ...]
    c: int = ID_EXPONENT
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.ids)

    def nodes(self) -> range:
        return range(len(self.ids))

    def degree(self, u: int) -> int:
        return self.degrees[u]

    @cached_property
    def _slots(self) -> tuple[dict[int, int], ...]:
        return tuple({p: i for i, (p, _, _) in enumerate(adj)} for adj in self.adjacency)

    @cached_property
    def _handles(self) -> dict[int, int]:
        return {i: u for u, i in enumerate(self.ids)}

    def handle(self, node_id: int) -> int:
        try:
            return self._handles[node_id]
        except KeyError:
            raise UnknownNode(f"no node with id {node_id}", node_id) from None

    def has_port(self, u: int, port: int) -> bool:
        return port in self._slots[u]

    def target(self, u: int, port: int) -> tuple[int, int]:
        """Neighbor handle and its port for the edge at ``(u, port)``."""
        _, v, q = self.adjacency[u][self._slots[u][port]]
        return v, q

    def hin(self, u: int, port: int) -> Any:
        return self.halfedge_input[u][self._slots[u][port]]

    def edges(self) -> Iterable[tuple[int, int, int, int]]:
        """Each undirected edge once, as ``(u, p, v, q)`` with ``u < v``."""
        for u, adj in enumerate(self.adjacency):
            for p, v, q in adj:
                if u < v:
                    yield u, p, v, q

    def is_complete(self) -> bool:
        return all(len(a) == d for a, d in zip(self.adjacency, self.degrees))

    # distances -----------------------------------------------------------

    def _csr(self) -> csr_matrix:
        if "csr" not in self._cache:
            rows, cols = [], []
            for u, adj in enumerate(self.adjacency):
                for _, v, _ in adj:
                    rows.append(u)
                    cols.append(v)
            data = np.ones(len(rows), dtype=np.int8)
            self._cache["csr"] = csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        return self._cache["csr"]

    def distances_from(self, u: int) -> np.ndarray:
        """Hop distances from ``u``; unreachable nodes get ``UNREACHABLE``."""
        rows = self._cache.setdefault("dist", {})
        if u not in rows:
            self._fill_distances(u)
        return rows[u]

    def _fill_distances(self, u: int, batch: int = 512) -> None:
        # Whole batches of sources are solved at once; run() asks for every node.
        rows = self._cache["dist"]
        start = (u // batch) * batch
        sources = [s for s in range(start, min(start + batch, self.n)) if s not in rows]
        d = shortest_path(self._csr(), unweighted=True, indices=sources, directed=True)
        d = np.atleast_2d(d)
        finite = np.isfinite(d)
        out = np.full(d.shape, UNREACHABLE, dtype=np.int32)
        out[finite] = d[finite].astype(np.int32)
        for i, s in enumerate(sources):
            rows[s] = out[i]

    def bfs_distances(self, u: int) -> dict[int, int]:
        """Plain breadth-first distances to every reachable node."""
        dist = {u: 0}
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for _, y, _ in self.adjacency[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    # functional updates ---------------------------------------------------

    def without_edge(self, u: int, port: int) -> "Network":
        """Delete the edge at ``(u, port)``; higher ports at both ends shift down."""
        v, q = self.target(u, port)
        drop = {(u, port), (v, q)}

        def renumber(x: int, p: int) -> int:
            if x == u and p > port:
                return p - 1
            if x == v and p > q:
                return p - 1
            return p

        adjacency, labels = [], []
        for x, adj in enumerate(self.adjacency):
            new_adj, new_lab = [], []
            for (p, y, r), lab in zip(adj, self.halfedge_input[x]):
                if (x, p) in drop:
                    continue
                new_adj.append((renumber(x, p), y, renumber(y, r)))
                new_lab.append(lab)
            adjacency.append(tuple(new_adj))
            labels.append(tuple(new_lab))
        degrees = list(self.degrees)
        degrees[u] -= 1
        degrees[v] -= 1
        return Network(self.ids, self.node_input, tuple(adjacency), tuple(labels), tuple(degrees), self.c)

    def with_node_input(self, u: int, label: Any) -> "Network":
        inputs = list(self.node_input)
        inputs[u] = label
        return Network(self.ids, tuple(inputs), self.adjacency, self.halfedge_input, self.degrees, self.c)

    def with_halfedge_input(self, u: int, port: int, label: Any) -> "Network":
        labels = [list(x) for x in self.halfedge_input]
        labels[u][self._slots[u][port]] = label
        return Network(
            self.ids, self.node_input, self.adjacency, tuple(map(tuple, labels)), self.degrees, self.c
        )

    def permuted(self, order: list[int]) -> "Network":
        """Same network with handle ``order[i]`` renamed to ``i``."""
        new_of = {old: new for new, old in enumerate(order)}
        adjacency = tuple(
            tuple((p, new_of[v], q) for p, v, q in self.adjacency[old]) for old in order
        )
        return Network(
            tuple(self.ids[o] for o in order),
            tuple(self.node_input[o] for o in order),
            adjacency,
            tuple(self.halfedge_input[o] for o in order),
            tuple(self.degrees[o] for o in order),
            self.c,
        )


def build_network(
    edge_list: Iterable[tuple[Hashable, int, Hashable, int]],
    ids: Mapping[Hashable, int],
    node_input: Mapping[Hashable, Any],
    halfedge_input: Mapping[tuple[Hashable, int], Any],
    *,
    c: int = ID_EXPONENT,
    max_degree: int = MAX_DEGREE,
) -> Network:
    """Validate and assemble a network.

    Nodes are the keys of ``ids``; their order fixes the handles.  Every edge is
    given once as ``(u, p, v, q)`` (a symmetric duplicate is tolerated).
    """
    keys = list(ids)
    handle = {k: i for i, k in enumerate(keys)}
    n = len(keys)
    if n == 0:
        raise NetworkError("a network needs at least one node")

    seen_ids: dict[int, Hashable] = {}
    for k in keys:
        i = ids[k]
        if not isinstance(i, (int, np.integer)) or isinstance(i, bool):
            raise IdOutOfRange(f"id of node {k!r} is not an integer", k)
        if i in seen_ids:
            raise NonInjectiveIds(f"nodes {seen_ids[i]!r} and {k!r} share id {i}", k)
        seen_ids[i] = k
        if not 1 <= i <= n**c:
            raise IdOutOfRange(f"id {i} of node {k!r} outside [1, {n}^{c}]", k)

    ports: list[dict[int, tuple[int, int]]] = [dict() for _ in range(n)]
    for u, p, v, q in edge_list:
        for x in (u, v):
            if x not in handle:
                raise UnknownNode(f"edge endpoint {x!r} is not a declared node", x)
        hu, hv = handle[u], handle[v]
        if hu == hv:
            raise PortNumberingError(f"self-loop at node {u!r}", u)
        if ports[hu].get(p) == (hv, q) and ports[hv].get(q) == (hu, p):
            continue
        if p in ports[hu]:
            raise DuplicatePort(f"port {p} used twice at node {u!r}", u)
        if q in ports[hv]:
            raise DuplicatePort(f"port {q} used twice at node {v!r}", v)
        if any(w == hv for w, _ in ports[hu].values()):
            raise PortNumberingError(f"parallel edges between {u!r} and {v!r}", u)
        ports[hu][p] = (hv, q)
        ports[hv][q] = (hu, p)

    for k in keys:
        table = ports[handle[k]]
        if len(table) > max_degree:
            raise DegreeExceedsDelta(f"node {k!r} has degree {len(table)} > {max_degree}", k)
        if set(table) != set(range(1, len(table) + 1)):
            raise PortNumberingError(f"ports at node {k!r} are not 1..{len(table)}", k)

    inputs = []
    for k in keys:
        if k not in node_input:
            raise MissingLabel(f"node {k!r} has no input label", k)
        inputs.append(node_input[k])

    adjacency, labels = [], []
    for k in keys:
        table = ports[handle[k]]
        adj = tuple((p, table[p][0], table[p][1]) for p in sorted(table))
        lab = []
        for p, _, _ in adj:
            if (k, p) not in halfedge_input:
                raise MissingLabel(f"half-edge ({k!r}, {p}) has no input label", k)
            lab.append(halfedge_input[(k, p)])
        adjacency.append(adj)
        labels.append(tuple(lab))

    return Network(
        ids=tuple(int(ids[k]) for k in keys),
        node_input=tuple(inputs),
        adjacency=tuple(adjacency),
        halfedge_input=tuple(labels),
        degrees=tuple(len(a) for a in adjacency),
        c=c,
    )


# ---------------------------------------------------------------------------
# rooted neighborhoods


@dataclass(frozen=True, eq=False)
class RootedNeighborhood:
    """The radius-``radius`` view of ``center`` in ``network``.

    Construction is O(1); the fragment is materialized on first access.  In the
    fragment the root has handle 0 and nodes are numbered in port-ordered
    breadth-first order from the root.
    """

    network: Network
    center: int
    radius: int

    root = 0

    @cached_property
    def _dist(self) -> np.ndarray:
        return self.network.distances_from(self.center)

    def distance(self, u: int) -> int:
        """Host distance from the center to host node ``u``."""
        return int(self._dist[u])

    @cached_property
    def eccentricity(self) -> int:
        d = self._dist
        return int(d[d != UNREACHABLE].max())

    @property
    def component_exhausted(self) -> bool:
        """True when the view already shows the whole component with every edge."""
        return self.eccentricity < self.radius

    @cached_property
    def host_nodes(self) -> tuple[int, ...]:
        """Host handles in fragment order."""
        return self._order()[0]

    def _order(self) -> tuple[tuple[int, ...], dict[int, int]]:
        net, t, d = self.network, self.radius, self._dist
        order = [self.center]
        index = {self.center: 0}
        head = 0
        while head < len(order):
            x = order[head]
            head += 1
            if d[x] >= t:
                continue
            for _, y, _ in net.adjacency[x]:
                if y not in index:
                    index[y] = len(order)
                    order.append(y)
        return tuple(order), index

    @cached_property
    def fragment(self) -> Network:
        net, t, d = self.network, self.radius, self._dist
        order, index = self._order()
        adjacency, labels = [], []
        for x in order:
            adj, lab = [], []
            for (p, y, q), h in zip(net.adjacency[x], net.halfedge_input[x]):
                if y in index and min(d[x], d[y]) <= t - 1:
                    adj.append((p, index[y], q))
                    lab.append(h)
            adjacency.append(tuple(adj))
            labels.append(tuple(lab))
        return Network(
            ids=tuple(net.ids[x] for x in order),
            node_input=tuple(net.node_input[x] for x in order),
            adjacency=tuple(adjacency),
            halfedge_input=tuple(labels),
            degrees=tuple(net.degrees[x] for x in order),
            c=net.c,
        )


def neighborhood(net: Network, v: int, t: int) -> RootedNeighborhood:
    """Radius-``t`` view of handle ``v``."""
    if not isinstance(v, (int, np.integer)) or not 0 <= v < net.n:
        raise UnknownNode(f"node handle {v!r} not in network", v)
    if t < 0:
        raise ValueError("radius must be non-negative")
    return RootedNeighborhood(net, int(v), int(t))


def view_of(fragment: Network, radius: int) -> RootedNeighborhood:
    """Wrap an already materialized fragment (root = handle 0) as a view."""
    return RootedNeighborhood(fragment, 0, radius)


# ---------------------------------------------------------------------------
# isomorphism and canonical encoding


def _frag(x: RootedNeighborhood | Network) -> Network:
    return x.fragment if isinstance(x, RootedNeighborhood) else x


def _radius(x: RootedNeighborhood | Network) -> int | None:
    return x.radius if isinstance(x, RootedNeighborhood) else None


def isomorphic(a: RootedNeighborhood, b: RootedNeighborhood, *, ignore_ids: bool = False) -> bool:
    """Root-preserving isomorphism test.

    With ids the bijection is forced (ids are unique), so it is read off
    directly.  Without ids a backtracking search over candidate images is run.
    """
    fa, fb = _frag(a), _frag(b)
    if fa.n != fb.n or _radius(a) != _radius(b):
        return False
    if not ignore_ids:
        if fa.ids[0] != fb.ids[0] or sorted(fa.ids) != sorted(fb.ids):
            return False
        phi = [fb.handle(i) for i in fa.ids]
        return _is_isomorphism(fa, fb, phi, ignore_ids=False)
    return _search_isomorphism(fa, fb) is not None


def _node_signature(net: Network, u: int) -> tuple:
    return (net.degrees[u], len(net.adjacency[u]), _key(net.node_input[u]))


def _key(x: Any) -> str:
    return json.dumps(x, sort_keys=True, default=str)


def _is_isomorphism(fa: Network, fb: Network, phi: list[int], *, ignore_ids: bool) -> bool:
    for u in fa.nodes():
        w = phi[u]
        if _node_signature(fa, u) != _node_signature(fb, w):
            return False
        if not ignore_ids and fa.ids[u] != fb.ids[w]:
            return False
        ea = {(p, phi[v], q, _key(h)) for (p, v, q), h in zip(fa.adjacency[u], fa.halfedge_input[u])}
        eb = {(p, v, q, _key(h)) for (p, v, q), h in zip(fb.adjacency[w], fb.halfedge_input[w])}
        if ea != eb:
            return False
    return True


def _search_isomorphism(fa: Network, fb: Network) -> list[int] | None:
    if _node_signature(fa, 0) != _node_signature(fb, 0):
        return None
    da, db = fa.bfs_distances(0), fb.bfs_distances(0)
    if len(da) != fa.n or len(db) != fb.n:
        return None
    order = sorted(fa.nodes(), key=lambda u: da[u])
    phi: dict[int, int] = {0: 0}
    used = {0}

    def consistent(u: int, w: int) -> bool:
        if da[u] != db[w] or _node_signature(fa, u) != _node_signature(fb, w):
            return False
        for (p, v, q), h in zip(fa.adjacency[u], fa.halfedge_input[u]):
            if v in phi:
                if not fb.has_port(w, p) or fb.target(w, p) != (phi[v], q) or _key(fb.hin(w, p)) != _key(h):
                    return False
        return True

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        u = order[i]
        if u in phi:
            return extend(i + 1)
        for w in fb.nodes():
            if w not in used and consistent(u, w):
                phi[u] = w
                used.add(w)
                if extend(i + 1):
                    return True
                del phi[u]
                used.discard(w)
        return False

    if not extend(0):
        return None
    mapping = [phi[u] for u in fa.nodes()]
    return mapping if _is_isomorphism(fa, fb, mapping, ignore_ids=True) else None


def canonical_encode(x: RootedNeighborhood | Network, *, ignore_ids: bool = False) -> bytes:
    """Byte string equal for two views iff they are isomorphic.

    Ports make the root-fixed labeling unique: a breadth-first walk from the
    root that visits ports in increasing order assigns every node the same
    position in any isomorphic copy, so no search over orderings is needed.
    """
    f = _frag(x)
    order = [0]
    pos = {0: 0}
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for _, v, _ in f.adjacency[u]:
            if v not in pos:
                pos[v] = len(order)
                order.append(v)
    if len(order) != f.n:
        raise ValueError("fragment is not connected to its root")
    rows = []
    for u in order:
        edges = [[p, pos[v], q, h] for (p, v, q), h in zip(f.adjacency[u], f.halfedge_input[u])]
        row = [f.degrees[u], f.node_input[u], edges]
        if not ignore_ids:
            row.insert(0, f.ids[u])
        rows.append(row)
    doc = {"r": _radius(x), "nodes": rows}
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False, default=str).encode("utf-8")


# ---------------------------------------------------------------------------
# instance files

_INSTANCE_KEYS = {"nodes", "edges", "c"}
_NODE_KEYS = {"id", "input"}
_EDGE_KEYS = {"u_id", "u_port", "v_id", "v_port", "u_halfedge_input", "v_halfedge_input"}


def freeze(x: Any) -> Any:
    """JSON arrays become tuples, recursively (labels must be hashable)."""
    if isinstance(x, list):
        return tuple(freeze(y) for y in x)
    return x


def network_to_doc(net: Network) -> dict:
    nodes = [{"id": net.ids[u], "input": net.node_input[u]} for u in net.nodes()]
    edges = [
        {
            "u_id": net.ids[u],
            "u_port": p,
            "v_id": net.ids[v],
            "v_port": q,
            "u_halfedge_input": net.hin(u, p),
            "v_halfedge_input": net.hin(v, q),
        }
        for u, p, v, q in net.edges()
    ]
    return {"c": net.c, "nodes": nodes, "edges": edges}


def network_from_doc(doc: Any) -> Network:
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance must be an object")
    _check_keys(doc, _INSTANCE_KEYS, {"nodes", "edges"}, "instance")
    c = doc.get("c", ID_EXPONENT)
    if not isinstance(c, int) or c < 1:
        raise InstanceFormatError("field c must be a positive integer")
    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise InstanceFormatError("nodes and edges must be lists")
    ids, inputs, halfedges, edges = {}, {}, {}, []
    for rec in doc["nodes"]:
        _check_keys(rec, _NODE_KEYS, _NODE_KEYS, "node")
        if rec["id"] in ids:
            raise NonInjectiveIds(f"id {rec['id']} listed twice", rec["id"])
        ids[rec["id"]] = rec["id"]
        inputs[rec["id"]] = freeze(rec["input"])
    for rec in doc["edges"]:
        _check_keys(rec, _EDGE_KEYS, _EDGE_KEYS, "edge")
        u, p, v, q = rec["u_id"], rec["u_port"], rec["v_id"], rec["v_port"]
        edges.append((u, p, v, q))
        halfedges[(u, p)] = freeze(rec["u_halfedge_input"])
        halfedges[(v, q)] = freeze(rec["v_halfedge_input"])
    return build_network(edges, ids, inputs, halfedges, c=c)


def _check_keys(rec: Any, allowed: set, required: set, what: str) -> None:
    if not isinstance(rec, dict):
        raise InstanceFormatError(f"{what} record must be an object")
    extra = set(rec) - allowed
    if extra:
        raise InstanceFormatError(f"unknown {what} field(s): {sorted(extra)}")
    missing = required - set(rec)
    if missing:
        raise InstanceFormatError(f"{what} record lacks {sorted(missing)}")


def dumps_network(net: Network) -> str:
    return json.dumps(network_to_doc(net), ensure_ascii=False, indent=1) + "\n"


def loads_network(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return network_from_doc(doc)
