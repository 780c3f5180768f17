"""Small LCL problems used to exercise the neighborhood-to-label mapping search."""

from __future__ import annotations

from typing import Any, Iterable

from .lcl import LabeledGraph, LabelSet, LclProblem, Violation

NO_HALF = "·"

_ANY = LabelSet(contains=lambda x: True, name="any")


def copy_input_problem(alphabet: Iterable[Any] = (0, 1)) -> LclProblem:
    """Every node outputs its own input label."""
    labels = tuple(alphabet)

    def check(g: LabeledGraph, u: int) -> list[Violation]:
        if g.out(u) != g.nin(u):
            return [g.violation("copy.equal", [u], f"output {g.out(u)!r} differs from input {g.nin(u)!r}")]
        return []

    return LclProblem("copy-input", labels, _ANY, labels, {NO_HALF}, check)


def two_coloring_problem() -> LclProblem:
    """Neighbors receive different colors from {0, 1}."""

    def check(g: LabeledGraph, u: int) -> list[Violation]:
        return [g.violation("coloring.proper", sorted([u, v], key=g.ident), "neighbors share a color")
                for _, v, _ in g.nbrs(u) if g.out(u) == g.out(v)]

    return LclProblem("two-coloring", _ANY, _ANY, (0, 1), {NO_HALF}, check)
