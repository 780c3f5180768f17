"""The consensus layer on top of structural certification, driven by a halting oracle."""

from __future__ import annotations

from typing import Any, Mapping, Protocol

from ..network import Network, RootedNeighborhood
from ..pi import ACCEPT, E, G, GOOD, HEAD, N, REJECT, S, W, f
from ..turing import (
    Halting, TmConfiguration, TuringMachine, classify, grid_successor, normalize, tm_step,
)
from .engine import LocalAlgorithm, NodeOutput
from .structural import (
    LAYERS, RowLabeler, Unit, _LayerView, compose_output, halt_round, support_of,
)

CONSENSUS = LAYERS


class OracleInconsistency(RuntimeError):
    """The oracle gave different answers for a configuration and its successor."""


class HaltingOracle(Protocol):
    def query(self, c: TmConfiguration) -> Halting: ...


class SimulationOracle:
    """Ground truth by simulation with non-termination detection, capped at ``max_steps`` steps.

    Runs that are neither settled nor halted within the cap are reported as
    running forever; for the shipped machines that is never needed.
    """

    def __init__(self, tm: TuringMachine, max_steps: int = 20_000):
        self.tm = tm
        self.max_steps = max_steps
        self.undecided = 0
        self._memo: dict[TmConfiguration, Halting] = {}

    def query(self, c: TmConfiguration) -> Halting:
        key = normalize(c)
        hit = self._memo.get(key)
        if hit is None:
            hit = classify(self.tm, c, self.max_steps)
            if hit is None:
                self.undecided += 1
                hit = Halting.RUNS_FOREVER
            self._memo[key] = hit
        return hit


class TableOracle:
    """Answers read from an explicit table; stands in for advice that no program computes."""

    def __init__(self, table: Mapping[tuple, Halting], default: Halting | None = None):
        self.table = dict(table)
        self.default = default

    @staticmethod
    def key(c: TmConfiguration) -> tuple:
        return (c.tape, c.head, c.state)

    def query(self, c: TmConfiguration) -> Halting:
        hit = self.table.get(self.key(c), self.default)
        if hit is None:
            raise KeyError(f"no oracle entry for {self.key(c)}")
        return hit


def rows_within(N: int) -> int:
    """Largest k with k(k+1)/2 <= N: the most rows a grid of at most N nodes can hold."""
    k = 0
    while (k + 1) * (k + 2) // 2 <= N:
        k += 1
    return k


class BoundedOracle:
    """Knowing n <= N: halting is only reported if it happens within the rows that can exist."""

    def __init__(self, tm: TuringMachine, N: int):
        if N < 1:
            raise ValueError("N must be at least 1")
        self.tm = tm
        self.N = N
        self.rows = rows_within(N)

    def steps_for(self, c: TmConfiguration) -> int:
        return self.rows - len(c.tape)

    def query(self, c: TmConfiguration) -> Halting:
        steps = self.steps_for(c)
        if steps < 0:
            return Halting.RUNS_FOREVER
        for _ in range(steps + 1):
            if self.tm.halted(c.state):
                return self.tm.verdict(c.state)
            c = tm_step(self.tm, c)
        return Halting.RUNS_FOREVER


def bounded_oracle(tm: TuringMachine, N: int) -> BoundedOracle:
    return BoundedOracle(tm, N)


_ANSWER = {Halting.HALTS_ACCEPT: ACCEPT, Halting.HALTS_REJECT: REJECT, Halting.RUNS_FOREVER: REJECT}


class ConsensusLabeler(RowLabeler):
    def __init__(self, net: Network, tm: TuringMachine, oracle: HaltingOracle):
        super().__init__(net, tm)
        self.oracle = oracle
        self._rows: dict[int, tuple[Unit, TmConfiguration | None]] = {}
        self._answers: dict[int, Unit] = {}

    def _row(self, u: int) -> tuple[Unit, TmConfiguration | None]:
        """Row of ``u`` in the consensus layer, read west to east, with its configuration if headed."""
        hit = self._rows.get(u)
        if hit is not None:
            return hit
        unit = Unit(CONSENSUS, ())
        view = _LayerView(self, CONSENSUS, unit)
        west, steps = u, 0
        while (w := f(view, west, W)) is not None and steps <= self.net.n:
            west, steps = w, steps + 1
        cells, x = [], west
        while x is not None and len(cells) <= self.net.n:
            cells.append(x)
            x = f(view, x, E)
        unit.members = tuple(cells)
        inputs = [view.nin(x) for x in cells]
        heads = [i for i, nin in enumerate(inputs) if nin[2] == HEAD]
        config = None
        if len(heads) == 1:
            config = TmConfiguration(tuple(nin[1] for nin in inputs), heads[0], inputs[heads[0]][3])
        for x in cells:
            self._rows[x] = (unit, config)
        return unit, config

    def _answer(self, c: TmConfiguration) -> str:
        verdict = self.oracle.query(c)
        if not self.tm.halted(c.state):
            if self.oracle.query(grid_successor(self.tm, c)) != verdict:
                raise OracleInconsistency(f"oracle disagrees between {c} and its successor")
        return _ANSWER[verdict]

    def consensus_unit(self, u: int) -> Unit:
        """Output of the row of ``u``; rows without a head borrow the answer of the nearest headed row."""
        hit = self._answers.get(u)
        if hit is not None:
            return hit
        unit = Unit(CONSENSUS, ())
        view = _LayerView(self, CONSENSUS, unit)
        if view.nin(u)[0] != G:
            unit.members = (u,)
            self._set(unit, REJECT)
            self._answers[u] = unit
            return unit
        row, config = self._row(u)
        unit.members = row.members
        unit.deps.add(row)
        answer = None
        if config is not None:
            answer = self._answer(config)
        else:
            for side in (S, N):
                x = row.members[0]
                while answer is None and (x := f(view, x, side)) is not None:
                    other, cfg = self._row(x)
                    unit.deps.add(other)
                    if cfg is not None:
                        answer = self._answer(cfg)
                    x = other.members[0]
                if answer is not None:
                    break
        self._set(unit, answer or REJECT)
        for m in unit.members:
            self._answers[m] = unit
        return unit

    def _set(self, unit: Unit, answer: str) -> None:
        for m in unit.members:
            unit.node_out[m] = answer
            unit.half_out[m] = tuple(GOOD for _ in self.net.adjacency[m])

    def full_result(self, u: int) -> tuple[list[Any], list[tuple], list[Unit]]:
        labels, halves, units = self.node_result(u)
        if len(labels) == LAYERS and labels[-1] == GOOD:
            unit = self.consensus_unit(u)
            labels.append(unit.node_out[u])
            halves.append(unit.half_out[u])
            units.append(unit)
        return labels, halves, units


class ConsensusAlgorithm(LocalAlgorithm):
    """Solves the whole layered problem: structural certification plus the consensus answer."""

    name = "consensus"

    def __init__(self, tm: TuringMachine, oracle: HaltingOracle):
        self.tm = tm
        self.oracle = oracle

    def decide(self, view: RootedNeighborhood) -> NodeOutput | None:
        frag = view.fragment
        lab = ConsensusLabeler(frag, self.tm, self.oracle)
        labels, halves, units = lab.full_result(0)
        if halt_round(frag.distances_from(0), support_of(units)) > view.radius:
            return None
        return compose_output(frag, 0, labels, halves, LAYERS + 1)

    def host_run(self, net: Network) -> list[tuple[Any, int]]:
        lab = ConsensusLabeler(net, self.tm, self.oracle)
        out = []
        for u in net.nodes():
            labels, halves, units = lab.full_result(u)
            r = halt_round(net.distances_from(u), support_of(units))
            out.append((compose_output(net, u, labels, halves, LAYERS + 1), r))
        return out


def alg_consensus(tm: TuringMachine, oracle: HaltingOracle) -> ConsensusAlgorithm:
    return ConsensusAlgorithm(tm, oracle)
