"""LCL problems, certification problems, layered composition and verification."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from .network import InstanceFormatError, Network, freeze

# Sentinel for "no output in this layer" inside composed labels.
ABSENT = None


class AlphabetMismatch(ValueError):
    """A labeling uses a label outside the problem's alphabets."""


class LabelSet:
    """A set of labels given by explicit members or by a membership predicate."""

    def __init__(self, members: Iterable[Any] | None = None, *, contains: Callable[[Any], bool] | None = None,
                 enumerate_with: Callable[[], Iterator[Any]] | None = None, name: str = ""):
        if members is None and contains is None:
            raise ValueError("need members or a predicate")
        self._members = frozenset(members) if members is not None else None
        self._contains = contains
        self._enumerate = enumerate_with
        self.name = name
        if self._members is not None and not self._members:
            raise ValueError("alphabets must be non-empty")

    def __contains__(self, x: Any) -> bool:
        try:
            if self._members is not None:
                return x in self._members
        except TypeError:
            return False
        return bool(self._contains(x))

    @property
    def finite(self) -> bool:
        return self._members is not None or self._enumerate is not None

    def __iter__(self) -> Iterator[Any]:
        if self._members is not None:
            return iter(sorted(self._members, key=label_key))
        if self._enumerate is not None:
            return self._enumerate()
        raise TypeError(f"label set {self.name or '?'} is given by a predicate only")

    def __len__(self) -> int:
        return sum(1 for _ in self)

    def __repr__(self) -> str:
        if self._members is not None:
            return f"LabelSet({sorted(self._members, key=label_key)})"
        return f"LabelSet(<{self.name or 'predicate'}>)"


def label_key(x: Any) -> str:
    """Total order on labels (used for deterministic output)."""
    return json.dumps(x, sort_keys=True, ensure_ascii=False, default=str)


def as_label_set(x: LabelSet | Iterable[Any]) -> LabelSet:
    return x if isinstance(x, LabelSet) else LabelSet(x)


@dataclass(frozen=True, order=True)
class Violation:
    witness_nodes: tuple[int, ...]
    constraint_id: str
    message: str = ""

    def line(self) -> str:
        ids = ",".join(str(i) for i in self.witness_nodes)
        return f"VIOLATION {self.constraint_id} nodes={ids} {self.message}".rstrip()


# ---------------------------------------------------------------------------
# labeled graphs: what a constraint predicate sees


class LabeledGraph:
    """A network together with (possibly projected) inputs and outputs.

    Nodes whose output is ``ABSENT`` are dropped, as are edges with an
    ``ABSENT`` half-edge output; ``nbrs`` only lists kept edges.
    """

    def __init__(self, net: Network, node_out: Sequence[Any], half_out: Sequence[Sequence[Any]],
                 *, node_in: Sequence[Any] | None = None, half_in: Sequence[Sequence[Any]] | None = None,
                 filtered: bool = False):
        self.net = net
        self.node_out = node_out
        self.half_out = half_out
        self.node_in = net.node_input if node_in is None else node_in
        self.half_in = net.halfedge_input if half_in is None else half_in
        self.filtered = filtered
        self._nbrs: dict[int, tuple] = {}

    def present(self, u: int) -> bool:
        return not self.filtered or self.node_out[u] is not ABSENT

    def nodes(self) -> Iterator[int]:
        return (u for u in self.net.nodes() if self.present(u))

    def nbrs(self, u: int) -> tuple[tuple[int, int, int], ...]:
        cached = self._nbrs.get(u)
        if cached is None:
            if not self.filtered:
                cached = self.net.adjacency[u]
            else:
                cached = tuple(
                    (p, v, q)
                    for i, (p, v, q) in enumerate(self.net.adjacency[u])
                    if self.node_out[v] is not ABSENT
                    and self.half_out[u][i] is not ABSENT
                    and self.hout(v, q) is not ABSENT
                )
            self._nbrs[u] = cached
        return cached

    def nin(self, u: int) -> Any:
        return self.node_in[u]

    def hin(self, u: int, port: int) -> Any:
        return self.half_in[u][self.net._slots[u][port]]

    def out(self, u: int) -> Any:
        return self.node_out[u]

    def hout(self, u: int, port: int) -> Any:
        return self.half_out[u][self.net._slots[u][port]]

    def houts(self, u: int) -> Sequence[Any]:
        return self.half_out[u]

    def ident(self, u: int) -> int:
        return self.net.ids[u]

    def violation(self, rule: str, nodes: Iterable[int], message: str = "") -> Violation:
        return Violation(tuple(self.ident(x) for x in nodes), rule, message)

    def project(self, node_fn: Callable[[Any], Any], half_fn: Callable[[Any], Any],
                in_fn: Callable[[Any], Any] | None = None, hin_fn: Callable[[Any], Any] | None = None,
                *, filtered: bool | None = None) -> "LabeledGraph":
        node_out = [node_fn(x) for x in self.node_out]
        half_out = [tuple(half_fn(x) for x in row) for row in self.half_out]
        node_in = self.node_in if in_fn is None else [in_fn(x) for x in self.node_in]
        half_in = self.half_in if hin_fn is None else [tuple(hin_fn(x) for x in row) for row in self.half_in]
        return LabeledGraph(self.net, node_out, half_out, node_in=node_in, half_in=half_in,
                            filtered=self.filtered if filtered is None else filtered)


def walk(nbrs: Callable[[int], Iterable[tuple[int, int, int]]], label: Callable[[int, int], Any],
         u: int, seq: Sequence[Any]) -> int | None:
    """Endpoint of the unique walk from ``u`` following half-edge labels ``seq``.

    Walks are counted with multiplicity; zero or several matching walks give
    ``None``.
    """
    frontier = [u]
    for lab in seq:
        frontier = [v for x in frontier for (p, v, _) in nbrs(x) if label(x, p) == lab]
        if not frontier:
            return None
    return frontier[0] if len(frontier) == 1 else None


def follow_path(net: Network, labeling: Callable[[int, int], Any] | Mapping[tuple[int, int], Any],
                u: int, seq: Sequence[Any]) -> int | None:
    """Unique path endpoint in ``net`` for half-edge labels ``seq`` (``None`` if not unique)."""
    label = labeling if callable(labeling) else (lambda x, p: labeling.get((x, p)))
    return walk(lambda x: net.adjacency[x], label, u, seq)


# ---------------------------------------------------------------------------
# problems

NodeCheck = Callable[[LabeledGraph, int], Iterable[Violation]]


class LclProblem:
    """Alphabets plus a per-node constraint evaluated on a :class:`LabeledGraph`."""

    arity = 1
    is_certification = False

    def __init__(self, name: str, node_in, halfedge_in, node_out, halfedge_out,
                 check: NodeCheck, *, check_radius: int = 1):
        self.name = name
        self.node_in = as_label_set(node_in)
        self.halfedge_in = as_label_set(halfedge_in)
        self.node_out = as_label_set(node_out)
        self.halfedge_out = as_label_set(halfedge_out)
        self.check = check
        self.check_radius = check_radius

    @property
    def layers(self) -> tuple["LclProblem", ...]:
        return (self,)

    def violations(self, g: LabeledGraph) -> list[Violation]:
        found: list[Violation] = []
        for u in g.nodes():
            found.extend(self.check(g, u))
        return found

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class CertificationLcl(LclProblem):
    """Good and bad sub-problems over shared inputs with disjoint output alphabets.

    ``constrained(g, u)`` says whether ``u`` is subject to this layer at all;
    other nodes are quiescent and accept any output.  At constrained nodes every
    half-edge output must lie on the same side as the node output.
    """

    is_certification = True

    def __init__(self, name: str, node_in, halfedge_in, *, good_node, good_half, bad_node, bad_half,
                 good_check: NodeCheck, bad_check: NodeCheck,
                 constrained: Callable[[LabeledGraph, int], bool] = lambda g, u: True,
                 check_radius: int = 1):
        self.good_node = as_label_set(good_node)
        self.good_half = as_label_set(good_half)
        self.bad_node = as_label_set(bad_node)
        self.bad_half = as_label_set(bad_half)
        for a, b, what in ((self.good_node, self.bad_node, "node"), (self.good_half, self.bad_half, "half-edge")):
            if set(a) & set(b):
                raise ValueError(f"{name}: good and bad {what} outputs overlap")
        self.good_check = good_check
        self.bad_check = bad_check
        self.constrained = constrained
        super().__init__(
            name, node_in, halfedge_in,
            LabelSet(set(self.good_node) | set(self.bad_node)),
            LabelSet(set(self.good_half) | set(self.bad_half)),
            self._check, check_radius=check_radius,
        )

    def is_good_node(self, label: Any) -> bool:
        return label in self.good_node

    def is_good_half(self, label: Any) -> bool:
        return label in self.good_half

    def _check(self, g: LabeledGraph, u: int) -> Iterable[Violation]:
        if not self.constrained(g, u):
            return []
        good = self.is_good_node(g.out(u))
        side = self.good_half if good else self.bad_half
        found = [
            g.violation(f"side.{self.name}", [u], f"half-edge at port {p} is on the other side")
            for p, _, _ in g.nbrs(u)
            if g.hout(u, p) not in side
        ]
        found.extend((self.good_check if good else self.bad_check)(g, u))
        return found

    @property
    def good(self) -> LclProblem:
        return LclProblem(f"{self.name}.good", self.node_in, self.halfedge_in, self.good_node, self.good_half,
                          self._side_only(True), check_radius=self.check_radius)

    @property
    def bad(self) -> LclProblem:
        return LclProblem(f"{self.name}.bad", self.node_in, self.halfedge_in, self.bad_node, self.bad_half,
                          self._side_only(False), check_radius=self.check_radius)

    def _side_only(self, good: bool) -> NodeCheck:
        def check(g: LabeledGraph, u: int) -> Iterable[Violation]:
            if not self.constrained(g, u):
                return []
            return (self.good_check if good else self.bad_check)(g, u)
        return check


def _split(label: Any, a: int, b: int) -> tuple[Any, Any]:
    """Split a flat composed label into its first-part and second-part labels."""
    if not isinstance(label, tuple) or len(label) != a + b:
        raise AlphabetMismatch(f"composed label {label!r} does not have {a + b} parts")
    x = label[0] if a == 1 else label[:a]
    rest = label[a:]
    if all(r is ABSENT for r in rest):
        return x, ABSENT
    return x, (rest[0] if b == 1 else rest)


def _join(x: Any, y: Any, a: int, b: int) -> tuple:
    left = (x,) if a == 1 else tuple(x)
    if y is ABSENT:
        return left + (ABSENT,) * b
    return left + ((y,) if b == 1 else tuple(y))


class Composition(LclProblem):
    """Layered product: the second problem is enforced only where the first is good.

    Labels are flat tuples (one entry per base layer, ``None`` where a layer has
    no output).  With ``shared_inputs`` both parts read the same input labels;
    otherwise inputs are pairs ``(first_input, second_input)``.
    """

    def __init__(self, first: LclProblem, second: LclProblem, *, shared_inputs: bool = False):
        if not first.is_certification:
            raise TypeError("the first operand of a composition must be a certification problem")
        self.first = first
        self.second = second
        self.shared_inputs = shared_inputs
        self.arity = first.arity + second.arity
        self.is_certification = second.is_certification
        a, b = first.arity, second.arity
        name = f"{first.name}*{second.name}"

        def pair_in(s1: LabelSet, s2: LabelSet) -> LabelSet:
            if shared_inputs:
                return LabelSet(contains=lambda x: x in s1 and x in s2, name="shared")
            return LabelSet(contains=lambda x: isinstance(x, tuple) and len(x) == 2 and x[0] in s1 and x[1] in s2,
                            name="pairs")

        def product_out(s1: LabelSet, s2: LabelSet) -> LabelSet:
            def contains(label: Any) -> bool:
                try:
                    x, y = _split(label, a, b)
                except AlphabetMismatch:
                    return False
                return x in s1 and (y is ABSENT or y in s2)

            def enumerate_all() -> Iterator[Any]:
                for x, y in itertools.product(s1, [ABSENT, *s2]):
                    yield _join(x, y, a, b)

            return LabelSet(contains=contains, enumerate_with=enumerate_all, name="product")

        super().__init__(
            name,
            pair_in(first.node_in, second.node_in),
            pair_in(first.halfedge_in, second.halfedge_in),
            product_out(first.node_out, second.node_out),
            product_out(first.halfedge_out, second.halfedge_out),
            self._noop, check_radius=max(first.check_radius, second.check_radius),
        )

    @staticmethod
    def _noop(g: LabeledGraph, u: int) -> Iterable[Violation]:
        return []

    @property
    def layers(self) -> tuple[LclProblem, ...]:
        return self.first.layers + self.second.layers

    def split(self, label: Any) -> tuple[Any, Any]:
        return _split(label, self.first.arity, self.second.arity)

    def join(self, x: Any, y: Any) -> tuple:
        return _join(x, y, self.first.arity, self.second.arity)

    def is_good_node(self, label: Any) -> bool:
        x, y = self.split(label)
        return self.first.is_good_node(x) and y is not ABSENT and self.second.is_good_node(y)

    def is_good_half(self, label: Any) -> bool:
        x, y = self.split(label)
        return self.first.is_good_half(x) and y is not ABSENT and self.second.is_good_half(y)

    def violations(self, g: LabeledGraph) -> list[Violation]:
        first, second = self.first, self.second
        rule = f"admissible.{second.name}"
        found: list[Violation] = []
        for u in g.nodes():
            x, y = self.split(g.out(u))
            if first.is_good_node(x) and y is ABSENT:
                found.append(g.violation(rule, [u], "good first part requires a second-part output"))
            elif not first.is_good_node(x) and y is not ABSENT:
                found.append(g.violation(rule, [u], "bad first part forbids a second-part output"))
            for p, _, _ in g.nbrs(u):
                hx, hy = self.split(g.hout(u, p))
                if first.is_good_half(hx) == (hy is ABSENT):
                    found.append(g.violation(rule, [u], f"half-edge at port {p} breaks layer admissibility"))
        found.extend(first.violations(self.project_first(g)))
        found.extend(second.violations(self.project_second(g)))
        return found

    def project_first(self, g: LabeledGraph) -> LabeledGraph:
        take = lambda lab: ABSENT if lab is ABSENT else self.split(lab)[0]
        if self.shared_inputs:
            return g.project(take, take)
        return g.project(take, take, lambda x: x[0], lambda x: x[0])

    def project_second(self, g: LabeledGraph) -> LabeledGraph:
        take = lambda lab: ABSENT if lab is ABSENT else self.split(lab)[1]
        if self.shared_inputs:
            return g.project(take, take, filtered=True)
        return g.project(take, take, lambda x: x[1], lambda x: x[1], filtered=True)


def compose(p1: LclProblem, p2: LclProblem, *, shared_inputs: bool = False) -> Composition:
    return Composition(p1, p2, shared_inputs=shared_inputs)


def compose_all(problems: Sequence[LclProblem], *, shared_inputs: bool = False) -> LclProblem:
    """Left fold of :func:`compose`."""
    result = problems[0]
    for p in problems[1:]:
        result = compose(result, p, shared_inputs=shared_inputs)
    return result


def trivial_problem(node_in, halfedge_in, label: Any = "*") -> LclProblem:
    """Single output label, no constraints."""
    return LclProblem("trivial", node_in, halfedge_in, {label}, {label}, lambda g, u: [])


# ---------------------------------------------------------------------------
# labelings and verification


@dataclass(frozen=True)
class OutputLabeling:
    """Node outputs by handle; half-edge outputs aligned with the adjacency lists."""

    node_out: tuple[Any, ...]
    halfedge_out: tuple[tuple[Any, ...], ...]

    @classmethod
    def uniform(cls, net: Network, node_label: Any, half_label: Any) -> "OutputLabeling":
        return cls(tuple(node_label for _ in net.nodes()),
                   tuple(tuple(half_label for _ in adj) for adj in net.adjacency))

    @classmethod
    def from_maps(cls, net: Network, node_map: Mapping[int, Any],
                  half_map: Mapping[tuple[int, int], Any]) -> "OutputLabeling":
        return cls(tuple(node_map[u] for u in net.nodes()),
                   tuple(tuple(half_map[(u, p)] for p, _, _ in net.adjacency[u]) for u in net.nodes()))

    def half(self, net: Network, u: int, port: int) -> Any:
        return self.halfedge_out[u][net._slots[u][port]]

    def with_node(self, u: int, label: Any) -> "OutputLabeling":
        out = list(self.node_out)
        out[u] = label
        return OutputLabeling(tuple(out), self.halfedge_out)

    def with_half(self, net: Network, u: int, port: int, label: Any) -> "OutputLabeling":
        rows = [list(r) for r in self.halfedge_out]
        rows[u][net._slots[u][port]] = label
        return OutputLabeling(self.node_out, tuple(map(tuple, rows)))

    def permuted(self, order: list[int]) -> "OutputLabeling":
        return OutputLabeling(tuple(self.node_out[o] for o in order), tuple(self.halfedge_out[o] for o in order))


def check_alphabets(net: Network, p: LclProblem, out: OutputLabeling) -> None:
    if len(out.node_out) != net.n or len(out.halfedge_out) != net.n:
        raise AlphabetMismatch("labeling is not total on the network")
    for u in net.nodes():
        nid = net.ids[u]
        if len(out.halfedge_out[u]) != len(net.adjacency[u]):
            raise AlphabetMismatch(f"node {nid}: half-edge labeling is not total")
        if out.node_out[u] not in p.node_out:
            raise AlphabetMismatch(f"node {nid}: output {out.node_out[u]!r} not in the output alphabet")
        for lab in out.halfedge_out[u]:
            if lab not in p.halfedge_out:
                raise AlphabetMismatch(f"node {nid}: half-edge output {lab!r} not in the output alphabet")
        if net.node_input[u] not in p.node_in:
            raise AlphabetMismatch(f"node {nid}: input {net.node_input[u]!r} not in the input alphabet")
        for lab in net.halfedge_input[u]:
            if lab not in p.halfedge_in:
                raise AlphabetMismatch(f"node {nid}: half-edge input {lab!r} not in the input alphabet")


def verify_solution(net: Network, p: LclProblem, out: OutputLabeling) -> list[Violation]:
    """Every violated constraint instance, sorted by witness ids then rule id."""
    check_alphabets(net, p, out)
    g = LabeledGraph(net, out.node_out, out.halfedge_out)
    return sorted(set(p.violations(g)))


def report_lines(violations: Iterable[Violation]) -> list[str]:
    return [v.line() for v in violations]


# ---------------------------------------------------------------------------
# labeling files

_LABELING_KEYS = {"nodes", "halfedges"}


def labeling_to_doc(net: Network, out: OutputLabeling) -> dict:
    return {
        "nodes": [{"id": net.ids[u], "output": out.node_out[u]} for u in net.nodes()],
        "halfedges": [
            {"u_id": net.ids[u], "u_port": p, "output": out.halfedge_out[u][i]}
            for u in net.nodes()
            for i, (p, _, _) in enumerate(net.adjacency[u])
        ],
    }


def labeling_from_doc(net: Network, doc: Any) -> OutputLabeling:
    if not isinstance(doc, dict) or set(doc) != _LABELING_KEYS:
        raise InstanceFormatError("labeling must be an object with exactly nodes and halfedges")
    node_map, half_map = {}, {}
    try:
        for rec in doc["nodes"]:
            if set(rec) != {"id", "output"}:
                raise InstanceFormatError(f"bad node record {rec!r}")
            node_map[net.handle(rec["id"])] = freeze(rec["output"])
        for rec in doc["halfedges"]:
            if set(rec) != {"u_id", "u_port", "output"}:
                raise InstanceFormatError(f"bad half-edge record {rec!r}")
            half_map[(net.handle(rec["u_id"]), rec["u_port"])] = freeze(rec["output"])
        return OutputLabeling.from_maps(net, node_map, half_map)
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"labeling is not total or malformed: {exc}") from exc


def dumps_labeling(net: Network, out: OutputLabeling) -> str:
    return json.dumps(labeling_to_doc(net, out), ensure_ascii=False, indent=1) + "\n"


def loads_labeling(net: Network, text: str) -> OutputLabeling:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return labeling_from_doc(net, doc)
