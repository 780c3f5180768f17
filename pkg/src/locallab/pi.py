"""The five constraint layers of the layered problem (tree, row, grid, Turing, consensus).

Input model shared by all layers (each layer reads what it needs):

* node input ``(kind, tape, head, state)`` with kind ``"T"`` (tree node) or
  ``"G"`` (grid node), tape in {0, 1}, head ``"H"`` or :data:`NO`, state a
  machine state name or :data:`NO`;
* half-edge input ``(struct, plane)``: one structural label from
  :data:`STRUCT_LABELS` and one head-pointer label ``"I_H"``/``"O_H"``.

Good outputs are ``"⊥"``.  Bad sides use ``"Error"``, pointer labels
``("pointer", p)`` and, where a layer needs a bad label that carries no
information, ``"⊥bad"`` so that good and bad alphabets stay disjoint.

Rules are written against a small graph interface (``nbrs``, ``hin``,
``nin``) so that the verifier and the certification algorithms evaluate the
very same predicates.
"""

from __future__ import annotations

import itertools
from typing import Any, Callable, Iterable, Protocol

from .lcl import (
    CertificationLcl,
    LabeledGraph,
    LabelSet,
    LclProblem,
    Violation,
    compose_all,
    walk,
)
from .turing import TuringMachine

T, G = "T", "G"
NO = "⊥T"
HEAD = "H"
GOOD = "⊥"
QUIET_BAD = "⊥bad"
ERROR = "Error"
I_H, O_H = "I_H", "O_H"
I_E, O_E = "I_E", "O_E"
ACCEPT, REJECT = "accept", "reject"

CH_L, CH_R, P, L, R, CH = "Ch_L", "Ch_R", "P", "L", "R", "Ch"
E, W, N, S = "E", "W", "N", "S"
STRUCT_LABELS = (CH_L, CH_R, P, L, R, CH, E, W, N, S)
TREE_POINTERS = (L, R, P, CH_L, CH_R)
ROW_POINTERS = (E, W)
GRID_POINTERS = (L, R, P, CH_L, CH_R, E, W, CH)

CHECK_RADIUS = 6


def pointer(p: str) -> tuple[str, str]:
    return ("pointer", p)


def is_pointer(x: Any) -> bool:
    return isinstance(x, tuple) and len(x) == 2 and x[0] == "pointer"


def node_input(kind: str, tape: int = 0, head: str = NO, state: str = NO) -> tuple:
    return (kind, tape, head, state)


def half_input(struct: str, plane: str = O_H) -> tuple:
    return (struct, plane)


class GraphView(Protocol):
    def nbrs(self, u: int) -> tuple[tuple[int, int, int], ...]: ...
    def hin(self, u: int, port: int) -> Any: ...
    def nin(self, u: int) -> Any: ...


# ---------------------------------------------------------------------------
# small helpers over a graph view


def kind(g: GraphView, u: int) -> str:
    return g.nin(u)[0]


def slab(g: GraphView, u: int, port: int) -> str:
    return g.hin(u, port)[0]


def plane(g: GraphView, u: int, port: int) -> str:
    return g.hin(u, port)[1]


def has(g: GraphView, u: int, *labels: str) -> bool:
    return any(slab(g, u, p) in labels for p, _, _ in g.nbrs(u))


def count(g: GraphView, u: int, label: str) -> int:
    return sum(1 for p, _, _ in g.nbrs(u) if slab(g, u, p) == label)


def f(g: GraphView, u: int, *seq: str) -> int | None:
    """Unique endpoint of the structural-label path ``seq`` from ``u``."""
    return walk(g.nbrs, lambda x, p: slab(g, x, p), u, seq)


def edge_to(g: GraphView, u: int, v: int | None) -> tuple[int, int] | None:
    """``(port at u, port at v)`` of the edge u–v, if ``v`` is a neighbor."""
    if v is None:
        return None
    for p, y, q in g.nbrs(u):
        if y == v:
            return p, q
    return None


Found = list[tuple[str, list[int], str]]


# ---------------------------------------------------------------------------
# tree layer


def tree_good_violations(g: GraphView, u: int) -> Found:
    """Violated structural tree rules at a T node (as if it output good)."""
    out: Found = []
    nb = g.nbrs(u)
    mine = [slab(g, u, p) for p, _, _ in nb]
    if len(set(mine)) != len(mine):
        out.append(("goodTree.1", [u], "two incident half-edges share a label"))
    for p, v, q in nb:
        a, b = slab(g, u, p), slab(g, v, q)
        if (a == L and b != R) or (a == R and b != L):
            out.append(("goodTree.2", [u, v], f"horizontal edge labeled {a}/{b}"))
        if (a == P and b not in (CH_L, CH_R)) or (a in (CH_L, CH_R) and b != P):
            out.append(("goodTree.3", [u, v], f"parent-child edge labeled {a}/{b}"))
    for p, v, q in nb:
        if slab(g, u, p) == P and slab(g, v, q) == CH_L and f(g, u, P, CH_R, L) != u:
            out.append(("goodTree.4", [u, v], "left child does not close the sibling cycle"))
    if has(g, u, R):
        for p, v, q in nb:
            if slab(g, u, p) == P and slab(g, v, q) == CH_R and f(g, u, P, R, CH_L, L) != u:
                out.append(("goodTree.5", [u, v], "right child does not close the cousin cycle"))
    if has(g, u, CH_L) != has(g, u, CH_R):
        out.append(("goodTree.6", [u], "exactly one of the two child labels present"))
    if has(g, u, P) != has(g, u, L, R):
        out.append(("goodTree.7", [u], "P present without L/R, or L/R present without P"))
    if not has(g, u, CH_L, CH_R):
        for side in (L, R):
            w = f(g, u, side)
            if w is not None and has(g, w, CH_L, CH_R):
                out.append(("goodTree.8", [u, w], f"leaf has a non-leaf {side} neighbor"))
        if count(g, u, CH) > 1:
            out.append(("goodTree.8", [u], "leaf carries more than one Ch half-edge"))
    for p, v, q in nb:
        if slab(g, u, p) != P:
            continue
        side = {CH_R: R, CH_L: L}.get(slab(g, v, q))
        if side is None:
            continue
        parent = f(g, u, P)
        if parent is not None and has(g, u, side) != has(g, parent, side):
            out.append(("goodTree.9", [u, parent], f"{side} neighbor presence differs from the parent's"))
    return out


def _pointer_rules(layer: str, g: LabeledGraph, u: int, allowed: tuple[str, ...],
                   succ: Callable[[str], Iterable[str] | None],
                   violates_good: Callable[[GraphView, int], Found]) -> list[Violation]:
    """Shared bad-side rules: Error needs a witness, pointers form valid chains."""
    lab = g.out(u)
    found: list[Violation] = []
    if lab == ERROR:
        if not violates_good(g, u):
            found.append(g.violation(f"bad{layer}.1", [u], "Error output without a violated good rule"))
        return found
    if not is_pointer(lab) or lab[1] not in allowed:
        found.append(g.violation(f"bad{layer}.2", [u], f"unexpected bad output {lab!r}"))
        return found
    p = lab[1]
    if not has(g, u, p):
        found.append(g.violation(f"bad{layer}.2", [u], f"pointer {p} has no matching half-edge"))
        return found
    v = f(g, u, p)
    if v is None:
        found.append(g.violation(f"bad{layer}.3", [u], f"pointer {p} does not lead to a unique node"))
        return found
    target = g.out(v)
    if target == ERROR:
        return found
    if not is_pointer(target):
        found.append(g.violation(f"bad{layer}.3", [u, v], f"pointer {p} ends at a non-bad output"))
        return found
    ok = succ(p)
    if ok is not None and target[1] not in ok:
        found.append(g.violation(f"bad{layer}.3", [u, v], f"pointer {p} continues with {target[1]}"))
    return found


def _wrap(found_fn: Callable[[GraphView, int], Found]) -> Callable[[LabeledGraph, int], list[Violation]]:
    def check(g: LabeledGraph, u: int) -> list[Violation]:
        return [g.violation(rule, nodes, msg) for rule, nodes, msg in found_fn(g, u)]
    return check


_TREE_SUCC = {L: (L,), R: (R,), P: (P, L, R), CH_R: (CH_R, L, R)}
_ROW_SUCC = {E: (E,), W: (W,)}


def _tree_bad(g: LabeledGraph, u: int) -> list[Violation]:
    return _pointer_rules("Tree", g, u, TREE_POINTERS, _TREE_SUCC.get, tree_good_violations)


# ---------------------------------------------------------------------------
# row layer


def row_good_violations(g: GraphView, u: int) -> Found:
    out: Found = []
    if kind(g, u) == T:
        if count(g, u, CH) > 1:
            out.append(("goodRow.3", [u], "tree node with several Ch half-edges"))
        return out
    if count(g, u, E) > 1 or count(g, u, W) > 1 or count(g, u, P) != 1:
        out.append(("goodRow.2", [u], "grid node needs <=1 E, <=1 W and exactly one P"))
    leaf_ok = False
    for p, v, q in g.nbrs(u):
        if slab(g, u, p) == P and slab(g, v, q) == CH and kind(g, v) == T and not has(g, v, CH_L, CH_R):
            leaf_ok = True
    if not leaf_ok:
        out.append(("goodRow.4", [u], "no attachment edge to a tree leaf"))
    right_nbr = [v for _, v, _ in g.nbrs(u) if has(g, v, R)]
    if right_nbr:
        if not has(g, u, E):
            out.append(("goodRow.5", [u, right_nbr[0]], "neighbor has a right sibling but node has no E"))
        elif f(g, u, P, R, CH, W) != u and f(g, u, P, R, R, CH, W) != u:
            out.append(("goodRow.5", [u, right_nbr[0]], "no 4- or 5-cycle with the tree"))
    parent = f(g, u, P)
    if parent is not None and kind(g, parent) != T:
        parent = None
    witnesses = [u] if parent is None else [u, parent]
    if has(g, u, W) != (parent is not None and has(g, parent, L)):
        out.append(("goodRow.6", witnesses, "W half-edge iff parent has L"))
    if has(g, u, E) != (parent is not None and has(g, parent, R)):
        out.append(("goodRow.7", witnesses, "E half-edge iff parent has R"))
    return out


def _row_bad(g: LabeledGraph, u: int) -> list[Violation]:
    return _pointer_rules("Row", g, u, ROW_POINTERS, _ROW_SUCC.get, row_good_violations)


# ---------------------------------------------------------------------------
# grid layer


def grid_good_violations(g: GraphView, u: int) -> Found:
    out: Found = []
    mine_s = has(g, u, S)
    for p, v, _ in g.nbrs(u):
        if slab(g, u, p) == E and has(g, v, S) != mine_s:
            out.append(("goodGrid.2", [u, v], "S half-edge presence differs from the east neighbor"))
    # The closing-square rule is only demanded where there is a row below.
    if has(g, u, E) and mine_s and f(g, u, E, S, W, N) != u:
        out.append(("goodGrid.3", [u], "E,S,W,N walk does not return"))
    if not has(g, u, E) and has(g, u, N):
        out.append(("goodGrid.4", [u], "N half-edge without an E half-edge"))
    return out


def _grid_bad(g: LabeledGraph, u: int) -> list[Violation]:
    return _pointer_rules("Grid", g, u, GRID_POINTERS, _ROW_SUCC.get, grid_good_violations)


# ---------------------------------------------------------------------------
# Turing layer


def turing_good_rules(tm: TuringMachine) -> Callable[[GraphView, int], Found]:
    states = set(tm.states)

    def rules(g: GraphView, u: int) -> Found:
        out: Found = []
        _, b, h, q = g.nin(u)
        w, v = f(g, u, W), f(g, u, E)
        ew, ev = edge_to(g, u, w), edge_to(g, u, v)

        def mine(e):
            return plane(g, u, e[0])

        def far(e, node):
            return plane(g, node, e[1])

        if h == HEAD:
            if ew and (mine(ew) != I_H or far(ew, w) != O_H):
                out.append(("goodTuring.1a", [u, w], "west neighbor does not point to the head"))
            if ev and (mine(ev) != I_H or far(ev, v) != O_H):
                out.append(("goodTuring.1a", [u, v], "east neighbor does not point to the head"))
        else:
            if w is None and ev and (mine(ev) != O_H or far(ev, v) != I_H):
                out.append(("goodTuring.1b", [u, v], "west end does not point east"))
            if v is None and ew and (mine(ew) != O_H or far(ew, w) != I_H):
                out.append(("goodTuring.1c", [u, w], "east end does not point west"))
            if ew and far(ew, w) == I_H and (mine(ew) != O_H or (ev and mine(ev) != I_H)):
                out.append(("goodTuring.1d", [u, w], "eastward pointer chain broken"))
            if ev and far(ev, v) == I_H and (mine(ev) != O_H or (ew and mine(ew) != I_H)):
                out.append(("goodTuring.1e", [u, v], "westward pointer chain broken"))
        if (q in states) != (h == HEAD) or (q not in states and q != NO):
            out.append(("goodTuring.2", [u], "state present iff head present"))
        s = f(g, u, S)
        if h == HEAD and q in states:
            q2, b2, d = tm.delta[(q, b)]
            if d == "S":
                if s is not None and g.nin(s)[1:] != (b2, HEAD, q2):
                    out.append(("goodTuring.3a", [u, s], "stationary head not reproduced below"))
            else:
                diag = f(g, u, S, E if d == "R" else W)
                if diag is not None and g.nin(diag)[2:] != (HEAD, q2):
                    out.append((f"goodTuring.3{'b' if d == 'R' else 'c'}", [u, diag], "moved head missing below"))
                if s is not None and g.nin(s)[1:] != (b2, NO, NO):
                    out.append((f"goodTuring.3{'b' if d == 'R' else 'c'}", [u, s], "written cell wrong below"))
        elif h != HEAD and s is not None and g.nin(s)[1] != b:
            out.append(("goodTuring.4", [u, s], "tape symbol not copied"))
        return out

    return rules


def _turing_bad(tm: TuringMachine) -> Callable[[LabeledGraph, int], list[Violation]]:
    good_rules = turing_good_rules(tm)

    def check(g: LabeledGraph, u: int) -> list[Violation]:
        found: list[Violation] = []
        if g.out(u) != QUIET_BAD:
            found.append(g.violation("badTuring.2", [u], f"unexpected bad output {g.out(u)!r}"))
        w, v = f(g, u, W), f(g, u, E)
        ends = [(e, x) for e, x in ((edge_to(g, u, w), w), (edge_to(g, u, v), v)) if e]
        for (p, q), x in ends:
            if g.hout(u, p) == O_E and g.hout(x, q) != I_E:
                found.append(g.violation("badTuring.1", [u, x], "outgoing error pointer without incoming end"))
        if good_rules(g, u):
            if any(g.hout(u, p) != I_E for (p, _), _ in ends):
                found.append(g.violation("badTuring.2", [u], "violating node must be a sink"))
        elif not any(g.hout(u, p) == O_E for (p, _), _ in ends):
            found.append(g.violation("badTuring.3", [u], "error pointer chain stops"))
        return found

    return check


# ---------------------------------------------------------------------------
# consensus layer


def _consensus(tm_accept: str, tm_reject: str) -> Callable[[LabeledGraph, int], list[Violation]]:
    halting = {tm_accept: ACCEPT, tm_reject: REJECT}

    def check(g: LabeledGraph, u: int) -> list[Violation]:
        found: list[Violation] = []
        x = g.out(u)
        q = g.nin(u)[3]
        if q in halting and x != halting[q]:
            found.append(g.violation("consensus.1", [u], f"halting state {q} but output {x}"))
        east = f(g, u, E)
        if east is not None and g.out(east) != x:
            found.append(g.violation("consensus.2", [u, east], "output differs from the node to the east"))
        above = f(g, u, N)
        if above is not None and g.out(above) != x:
            found.append(g.violation("consensus.3", [u, above], "output differs from the node to the north"))
        return found

    return check


# ---------------------------------------------------------------------------
# alphabets and constructors


def node_inputs(states: Iterable[str] | None = None) -> LabelSet:
    allowed = None if states is None else set(states)

    def contains(x: Any) -> bool:
        if not (isinstance(x, tuple) and len(x) == 4):
            return False
        k, b, h, q = x
        if k not in (T, G) or b not in (0, 1) or isinstance(b, bool) or h not in (HEAD, NO):
            return False
        return q == NO or (isinstance(q, str) and (allowed is None or q in allowed))

    def enumerate_all():
        if allowed is None:
            raise TypeError("state set unknown")
        for k, b, h, q in itertools.product((T, G), (0, 1), (HEAD, NO), [NO, *sorted(allowed)]):
            yield (k, b, h, q)

    return LabelSet(contains=contains, enumerate_with=enumerate_all, name="pi-node-inputs")


HALF_INPUTS = LabelSet(itertools.product(STRUCT_LABELS, (I_H, O_H)))


def _layer(name: str, *, states, bad_node, bad_half, good_rules, bad_check, constrained) -> CertificationLcl:
    return CertificationLcl(
        name, node_inputs(states), HALF_INPUTS,
        good_node={GOOD}, good_half={GOOD}, bad_node=bad_node, bad_half=bad_half,
        good_check=_wrap(good_rules), bad_check=bad_check,
        constrained=constrained, check_radius=CHECK_RADIUS,
    )


def _is(k: str) -> Callable[[LabeledGraph, int], bool]:
    return lambda g, u: kind(g, u) == k


def pi_tree(states: Iterable[str] | None = None) -> CertificationLcl:
    return _layer("tree", states=states, bad_node={ERROR, *map(pointer, TREE_POINTERS)}, bad_half={QUIET_BAD},
                  good_rules=tree_good_violations, bad_check=_tree_bad, constrained=_is(T))


def pi_row(states: Iterable[str] | None = None) -> CertificationLcl:
    return _layer("row", states=states, bad_node={ERROR, *map(pointer, ROW_POINTERS)}, bad_half={QUIET_BAD},
                  good_rules=row_good_violations, bad_check=_row_bad, constrained=lambda g, u: True)


def pi_grid(states: Iterable[str] | None = None) -> CertificationLcl:
    return _layer("grid", states=states, bad_node={ERROR, *map(pointer, GRID_POINTERS)}, bad_half={QUIET_BAD},
                  good_rules=grid_good_violations, bad_check=_grid_bad, constrained=_is(G))


def pi_turing(tm: TuringMachine) -> CertificationLcl:
    return _layer("turing", states=tm.states, bad_node={QUIET_BAD}, bad_half={I_E, O_E},
                  good_rules=turing_good_rules(tm), bad_check=_turing_bad(tm), constrained=_is(G))


def pi_consensus(tm: TuringMachine | None = None) -> LclProblem:
    accept, reject = (tm.accept, tm.reject) if tm else (ACCEPT, REJECT)
    states = tm.states if tm else None
    return LclProblem("consensus", node_inputs(states), HALF_INPUTS, {ACCEPT, REJECT}, {GOOD},
                      _consensus(accept, reject), check_radius=CHECK_RADIUS)


def pi_grid_stack(states: Iterable[str] | None = None) -> LclProblem:
    """tree * row * grid."""
    return compose_all([pi_tree(states), pi_row(states), pi_grid(states)], shared_inputs=True)


def pi_structural(tm: TuringMachine) -> LclProblem:
    """tree * row * grid * Turing."""
    s = tm.states
    return compose_all([pi_tree(s), pi_row(s), pi_grid(s), pi_turing(tm)], shared_inputs=True)


def pi_full(tm: TuringMachine) -> LclProblem:
    s = tm.states
    return compose_all([pi_tree(s), pi_row(s), pi_grid(s), pi_turing(tm), pi_consensus(tm)], shared_inputs=True)


def problem_by_name(name: str, tm: TuringMachine | None) -> LclProblem:
    """Single layers or prefixes of the stack, as used by the command line."""
    states = tm.states if tm else None
    if name == "tree":
        return pi_tree(states)
    if name == "row":
        return compose_all([pi_tree(states), pi_row(states)], shared_inputs=True)
    if name == "grid":
        return pi_grid_stack(states)
    if name in ("turing", "consensus", "full") and tm is None:
        raise ValueError(f"problem {name} needs a Turing machine")
    if name == "turing":
        return pi_structural(tm)
    if name in ("consensus", "full"):
        return pi_full(tm)
    raise ValueError(f"unknown problem {name!r}")


def all_good_label(layers: int) -> tuple:
    return (GOOD,) * layers


RULES: dict[str, list[tuple[str, str]]] = {
    "tree": [
        ("goodTree.1", "incident half-edge labels are pairwise distinct"),
        ("goodTree.2", "L at one end means R at the other, and the reverse"),
        ("goodTree.3", "P at one end means Ch_L or Ch_R at the other, and the reverse"),
        ("goodTree.4", "a left child reaches itself via P, Ch_R, L"),
        ("goodTree.5", "a right child with an R edge reaches itself via P, R, Ch_L, L"),
        ("goodTree.6", "Ch_L present iff Ch_R present"),
        ("goodTree.7", "no P iff no L and no R"),
        ("goodTree.8", "leaves have leaf neighbors and at most one Ch half-edge"),
        ("goodTree.9", "a child has the same outer horizontal neighbor as its parent"),
        ("badTree.1", "Error only at a node breaking a good tree rule"),
        ("badTree.2", "a pointer names an existing half-edge"),
        ("badTree.3", "a pointer leads to Error or to an allowed next pointer"),
    ],
    "row": [
        ("goodRow.2", "grid node: at most one E, at most one W, exactly one P"),
        ("goodRow.3", "tree node: at most one Ch"),
        ("goodRow.4", "grid node hangs from a tree leaf"),
        ("goodRow.5", "below a node with a right neighbor: E exists and a 4- or 5-cycle closes"),
        ("goodRow.6", "W present iff the parent has L"),
        ("goodRow.7", "E present iff the parent has R"),
        ("badRow.1", "Error only at a node breaking a good row rule"),
        ("badRow.2", "a pointer names an existing half-edge"),
        ("badRow.3", "an E or W pointer leads to Error or the same pointer"),
    ],
    "grid": [
        ("goodGrid.2", "E neighbors agree on having an S half-edge"),
        ("goodGrid.3", "with E and S present, the E,S,W,N walk returns"),
        ("goodGrid.4", "no E means no N"),
        ("badGrid.1", "Error only at a node breaking a good grid rule"),
        ("badGrid.2", "a pointer names an existing half-edge"),
        ("badGrid.3", "a pointer leads to Error or a pointer; E and W keep direction"),
    ],
    "turing": [
        ("goodTuring.1a", "row neighbors of the head point at it"),
        ("goodTuring.1b", "a headless west end points east"),
        ("goodTuring.1c", "a headless east end points west"),
        ("goodTuring.1d", "eastward head pointers propagate"),
        ("goodTuring.1e", "westward head pointers propagate"),
        ("goodTuring.2", "a state label appears exactly at the head"),
        ("goodTuring.3a", "stationary move: the cell below holds the next symbol, head and state"),
        ("goodTuring.3b", "right move: the head reappears south-east, the written symbol south"),
        ("goodTuring.3c", "left move: the head reappears south-west, the written symbol south"),
        ("goodTuring.4", "cells away from the head are copied south"),
        ("badTuring.1", "an outgoing error pointer meets an incoming end"),
        ("badTuring.2", "a node breaking a good Turing rule is a sink"),
        ("badTuring.3", "every other bad node forwards the error pointer"),
    ],
    "consensus": [
        ("consensus.1", "a head in a halting state outputs that state"),
        ("consensus.2", "row neighbors agree"),
        ("consensus.3", "the node to the north agrees"),
    ],
}


def describe() -> list[str]:
    return [f"{layer}.{rule}: {title}" for layer, rules in RULES.items() for rule, title in rules]
