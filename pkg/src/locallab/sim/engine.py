"""Ball-growing execution of LOCAL algorithms."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from ..lcl import OutputLabeling
from ..network import Network, RootedNeighborhood, neighborhood


class BudgetExceeded(RuntimeError):
    def __init__(self, nodes: Sequence[int], budget: int):
        self.nodes = list(nodes)
        self.budget = budget
        shown = ",".join(map(str, self.nodes[:20])) + ("..." if len(self.nodes) > 20 else "")
        super().__init__(f"{len(self.nodes)} node(s) not halted within {budget} rounds: {shown}")


@dataclass(frozen=True)
class NodeOutput:
    """A node label together with labels for the node's own half-edges, keyed by port."""

    node: Any
    halfedges: Mapping[int, Any] = field(default_factory=dict)


class LocalAlgorithm:
    """``decide(view)`` returns an output, or ``None`` to keep growing the ball.

    Subclasses may also provide ``host_run(net)``: the same outputs and halting
    rounds computed over the whole network at once.  It must agree exactly with
    growing balls; the test-suite checks that on small instances.
    """

    name = "algorithm"

    def decide(self, view: RootedNeighborhood) -> Any | None:
        raise NotImplementedError

    def host_run(self, net: Network) -> list[tuple[Any, int]] | None:
        return None


class FunctionAlgorithm(LocalAlgorithm):
    def __init__(self, fn: Callable[[RootedNeighborhood], Any | None], name: str = "function"):
        self.fn = fn
        self.name = name

    def decide(self, view: RootedNeighborhood) -> Any | None:
        return self.fn(view)


def constant_algorithm(label: Any) -> LocalAlgorithm:
    return FunctionAlgorithm(lambda view: label, name="constant")


def own_id_algorithm() -> LocalAlgorithm:
    return FunctionAlgorithm(lambda view: view.fragment.ids[0], name="own-id")


def component_size_algorithm() -> LocalAlgorithm:
    """Waits until the whole component is visible, then outputs its size."""
    def decide(view: RootedNeighborhood) -> Any | None:
        return view.fragment.n if view.component_exhausted else None
    return FunctionAlgorithm(decide, name="component-size")


@dataclass(frozen=True)
class SimulationTrace:
    net: Network
    outputs: tuple[Any, ...]
    halt_rounds: tuple[int, ...]

    @property
    def max_round(self) -> int:
        return max(self.halt_rounds, default=0)

    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.halt_rounds).items()))

    def labeling(self, default_half: Any = None) -> OutputLabeling:
        nodes, halves = [], []
        for u, out in enumerate(self.outputs):
            if isinstance(out, NodeOutput):
                nodes.append(out.node)
                halves.append(tuple(out.halfedges.get(p, default_half) for p, _, _ in self.net.adjacency[u]))
            else:
                nodes.append(out)
                halves.append(tuple(default_half for _ in self.net.adjacency[u]))
        return OutputLabeling(tuple(nodes), tuple(halves))

    def dump_lines(self) -> list[str]:
        lines = []
        for u in sorted(self.net.nodes(), key=lambda x: self.net.ids[x]):
            out = self.outputs[u]
            value = out.node if isinstance(out, NodeOutput) else out
            text = json.dumps(value, ensure_ascii=False, separators=(",", ":"))
            lines.append(f"{self.net.ids[u]},{self.halt_rounds[u]},{text}")
        return lines


def run(net: Network, alg: LocalAlgorithm, budget: int, *, use_views: bool = False) -> SimulationTrace:
    """Every node grows its view until ``decide`` answers; rounds beyond ``budget`` are an error."""
    fast = None if use_views else alg.host_run(net)
    if fast is not None:
        late = [net.ids[u] for u in net.nodes() if fast[u][1] > budget]
        if late:
            raise BudgetExceeded(sorted(late), budget)
        return SimulationTrace(net, tuple(o for o, _ in fast), tuple(r for _, r in fast))
    outputs, rounds, late = [], [], []
    for v in net.nodes():
        for t in range(budget + 1):
            out = alg.decide(neighborhood(net, v, t))
            if out is not None:
                outputs.append(out)
                rounds.append(t)
                break
        else:
            outputs.append(None)
            rounds.append(-1)
            late.append(net.ids[v])
    if late:
        raise BudgetExceeded(sorted(late), budget)
    return SimulationTrace(net, tuple(outputs), tuple(rounds))


def sensible_on(net: Network, alg: LocalAlgorithm, extra: int = 2) -> bool:
    """Once a view covers the whole component, ``decide`` answers and keeps its answer."""
    for v in net.nodes():
        ecc = neighborhood(net, v, 0).eccentricity
        answers = {repr(alg.decide(neighborhood(net, v, t))) for t in range(ecc + 1, ecc + 1 + extra)}
        if len(answers) != 1 or "None" in answers:
            return False
    return True


def locality_profile(family: Callable[[int], Network], alg: LocalAlgorithm, ks: Iterable[int],
                     budget: int) -> list[tuple[int, int, int]]:
    rows = []
    for k in sorted(set(ks)):
        net = family(k)
        rows.append((k, net.n, run(net, alg, budget).max_round))
    return rows


def profile_csv(rows: Iterable[tuple[int, int, int]]) -> str:
    return "k,n,max_round\n" + "".join(f"{k},{n},{r}\n" for k, n, r in rows)
