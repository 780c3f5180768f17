"""Binary-tape Turing machines, configurations, and grid-shaped traces."""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

MOVES = ("L", "R", "S")


class MachineFormatError(ValueError):
    """A machine description is malformed or violates the halting convention."""


class Halting(enum.Enum):
    HALTS_ACCEPT = "HaltsAccept"
    HALTS_REJECT = "HaltsReject"
    RUNS_FOREVER = "RunsForever"


@dataclass(frozen=True)
class TuringMachine:
    states: tuple[str, ...]
    start: str
    accept: str
    reject: str
    delta: Mapping[tuple[str, int], tuple[str, int, str]] = field(hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "delta", dict(self.delta))
        qs = set(self.states)
        if len(qs) != len(self.states):
            raise MachineFormatError("duplicate state names")
        if "⊥T" in qs:
            raise MachineFormatError("state name collides with the no-state marker")
        for q in (self.start, self.accept, self.reject):
            if q not in qs:
                raise MachineFormatError(f"state {q!r} is not declared")
        if self.accept == self.reject:
            raise MachineFormatError("accept and reject must differ")
        for q in self.states:
            for b in (0, 1):
                if (q, b) not in self.delta:
                    raise MachineFormatError(f"transition for ({q}, {b}) missing")
        for (q, b), (q2, b2, d) in self.delta.items():
            if q not in qs or q2 not in qs or b not in (0, 1) or b2 not in (0, 1) or d not in MOVES:
                raise MachineFormatError(f"bad transition {(q, b)} -> {(q2, b2, d)}")
            if q in (self.accept, self.reject) and (q2, b2, d) != (q, b, "S"):
                raise MachineFormatError(f"halting state {q} must loop in place")

    def halted(self, state: str) -> bool:
        return state in (self.accept, self.reject)

    def verdict(self, state: str) -> Halting:
        if state == self.accept:
            return Halting.HALTS_ACCEPT
        if state == self.reject:
            return Halting.HALTS_REJECT
        raise ValueError(f"{state} is not a halting state")


@dataclass(frozen=True)
class TmConfiguration:
    tape: tuple[int, ...]
    head: int
    state: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "tape", tuple(self.tape))
        if not 0 <= self.head < len(self.tape):
            raise ValueError(f"head {self.head} outside tape of length {len(self.tape)}")


def initial_configuration(tm: TuringMachine, x: Iterable[int] | str) -> TmConfiguration:
    tape = tuple(int(c) for c in x)
    if not tape:
        raise ValueError("input must be non-empty")
    return TmConfiguration(tape, 0, tm.start)


def tm_step(tm: TuringMachine, c: TmConfiguration) -> TmConfiguration:
    """One transition.  A right move off the end appends a 0; a left move at cell 0 stays put."""
    q2, b2, d = tm.delta[(c.state, c.tape[c.head])]
    tape = list(c.tape)
    tape[c.head] = b2
    head = c.head
    if d == "R":
        head += 1
        if head == len(tape):
            tape.append(0)
    elif d == "L":
        head = max(head - 1, 0)
    return TmConfiguration(tuple(tape), head, q2)


def grid_successor(tm: TuringMachine, c: TmConfiguration) -> TmConfiguration:
    """Next row of a growing grid: one step, then the tape is padded to one cell longer."""
    nxt = tm_step(tm, c)
    pad = len(c.tape) + 1 - len(nxt.tape)
    return TmConfiguration(nxt.tape + (0,) * pad, nxt.head, nxt.state)


def moves_west_at_edge(tm: TuringMachine, c: TmConfiguration) -> bool:
    return c.head == 0 and tm.delta[(c.state, c.tape[0])][2] == "L"


def tm_trace(tm: TuringMachine, x: Iterable[int] | str, rows: int) -> list[TmConfiguration]:
    """``rows`` grid rows starting from the initial configuration of ``x``."""
    if rows < 1:
        return []
    trace = [initial_configuration(tm, x)]
    while len(trace) < rows:
        trace.append(grid_successor(tm, trace[-1]))
    return trace


def normalize(c: TmConfiguration) -> TmConfiguration:
    """Drop trailing zeros beyond the head; equal normal forms mean equal futures."""
    tape = list(c.tape)
    while len(tape) > c.head + 1 and tape[-1] == 0:
        tape.pop()
    return TmConfiguration(tuple(tape), c.head, c.state)


def run_until_halt(tm: TuringMachine, c: TmConfiguration, max_steps: int) -> tuple[TmConfiguration, int]:
    """Step until halting or ``max_steps`` steps; returns the final configuration and steps taken."""
    steps = 0
    while steps < max_steps and not tm.halted(c.state):
        c = tm_step(tm, c)
        steps += 1
    return c, steps


def classify(tm: TuringMachine, c: TmConfiguration, max_steps: int) -> Halting | None:
    """Halting behaviour of ``c`` if it can be settled within ``max_steps`` steps, else ``None``.

    Non-termination is proved two ways: a configuration recurs (checked against
    snapshots taken at power-of-two steps), or the head reaches blank tape in a
    state it earlier had on blank tape further west without ever moving west of
    that earlier position (and without a clamped move at the west edge), so the
    run repeats shifted east forever.
    """
    tape, head, state = list(c.tape), c.head, c.state
    last_one = max((i for i, b in enumerate(tape) if b), default=-1)
    marks: dict[str, int] = {}
    snap, snap_at = None, 1
    for step in range(max_steps + 1):
        if tm.halted(state):
            return tm.verdict(state)
        if head > last_one:
            prev = marks.get(state)
            if prev is not None and prev <= head:
                return Halting.RUNS_FOREVER
            marks[state] = head
        if snap is not None and snap[0] == head and snap[1] == state and snap[2] == _trim(tape, head):
            return Halting.RUNS_FOREVER
        if step + 1 == snap_at:
            snap, snap_at = (head, state, _trim(tape, head)), 2 * snap_at
        q2, b2, d = tm.delta[(state, tape[head])]
        tape[head] = b2
        if b2:
            last_one = max(last_one, head)
        elif head == last_one:
            last_one = max((i for i in range(head) if tape[i]), default=-1)
        state = q2
        if d == "R":
            head += 1
            if head == len(tape):
                tape.append(0)
        elif d == "L":
            if head > 0:
                head -= 1
            else:
                # A clamped move has no shifted counterpart, so earlier marks prove nothing.
                marks = {}
        marks = {q: h for q, h in marks.items() if h <= head}
    return None


def _trim(tape: list[int], head: int) -> tuple[int, ...]:
    end = len(tape)
    while end > head + 1 and tape[end - 1] == 0:
        end -= 1
    return tuple(tape[:end])


class ReferenceSimulator:
    """Second, independent simulator over an unbounded sparse tape."""

    def __init__(self, tm: TuringMachine, x: Iterable[int] | str):
        self.tm = tm
        self.cells = {i: int(b) for i, b in enumerate(x)}
        self.width = len(self.cells)
        self.pos = 0
        self.state = tm.start

    def advance(self) -> None:
        sym = self.cells.get(self.pos, 0)
        self.state, self.cells[self.pos], move = self.tm.delta[(self.state, sym)]
        self.pos = self.pos + 1 if move == "R" else (self.pos - 1 if move == "L" and self.pos > 0 else self.pos)
        self.width += 1

    def snapshot(self) -> tuple[tuple[int, ...], int, str]:
        return tuple(self.cells.get(i, 0) for i in range(self.width)), self.pos, self.state


# ---------------------------------------------------------------------------
# machine files


def machine_to_doc(tm: TuringMachine) -> dict:
    return {
        "states": list(tm.states),
        "start": tm.start,
        "accept": tm.accept,
        "reject": tm.reject,
        "delta": [[q, b, *tm.delta[(q, b)]] for q in tm.states for b in (0, 1)],
    }


def machine_from_doc(doc: object) -> TuringMachine:
    keys = {"states", "start", "accept", "reject", "delta"}
    if not isinstance(doc, dict) or set(doc) != keys:
        raise MachineFormatError(f"machine must have exactly the fields {sorted(keys)}")
    delta = {}
    for row in doc["delta"]:
        if not isinstance(row, list) or len(row) != 5:
            raise MachineFormatError(f"bad transition row {row!r}")
        q, b, q2, b2, d = row
        if (q, b) in delta:
            raise MachineFormatError(f"duplicate transition for ({q}, {b})")
        delta[(q, b)] = (q2, b2, d)
    return TuringMachine(tuple(doc["states"]), doc["start"], doc["accept"], doc["reject"], delta)


def dumps_machine(tm: TuringMachine) -> str:
    return json.dumps(machine_to_doc(tm), indent=1) + "\n"


def loads_machine(text: str) -> TuringMachine:
    try:
        return machine_from_doc(json.loads(text))
    except json.JSONDecodeError as exc:
        raise MachineFormatError(f"not valid JSON: {exc}") from exc


def load_machine(path: str | Path) -> TuringMachine:
    return loads_machine(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# small machines


def _machine(rules: dict[tuple[str, int], tuple[str, int, str]], states: list[str]) -> TuringMachine:
    for h in ("accept", "reject"):
        for b in (0, 1):
            rules[(h, b)] = (h, b, "S")
    return TuringMachine(tuple(states + ["accept", "reject"]), states[0], "accept", "reject", rules)


def flip_machine() -> TuringMachine:
    """Inverts each bit while sweeping right; never halts."""
    return _machine({("q0", 0): ("q0", 1, "R"), ("q0", 1): ("q0", 0, "R")}, ["q0"])


def seek_machine() -> TuringMachine:
    """Accepts at the first 1; runs forever on an all-zero tape."""
    return _machine({("q0", 0): ("q0", 0, "R"), ("q0", 1): ("accept", 1, "S")}, ["q0"])


def interpreter_machine() -> TuringMachine:
    """Reads the tape as 2-bit instructions: 11 accept, 10 reject, 01 skip the next one, 00 no-op."""
    r = {
        ("q0", 0): ("op0", 0, "R"), ("q0", 1): ("op1", 1, "R"),
        ("op1", 0): ("reject", 0, "S"), ("op1", 1): ("accept", 1, "S"),
        ("op0", 0): ("q0", 0, "R"), ("op0", 1): ("skip1", 1, "R"),
        ("skip1", 0): ("skip2", 0, "R"), ("skip1", 1): ("skip2", 1, "R"),
        ("skip2", 0): ("q0", 0, "R"), ("skip2", 1): ("q0", 1, "R"),
    }
    return _machine(r, ["q0", "op0", "op1", "skip1", "skip2"])


def random_machine(rng: random.Random, n_states: int = 3, *, halt_weight: float = 0.15) -> TuringMachine:
    """Random total machine over ``q0..q{n-1}`` plus the two halting states."""
    work = [f"q{i}" for i in range(n_states)]
    rules = {}
    for q in work:
        for b in (0, 1):
            if rng.random() < halt_weight:
                q2 = rng.choice(["accept", "reject"])
            else:
                q2 = rng.choice(work)
            rules[(q, b)] = (q2, rng.randint(0, 1), rng.choice(MOVES))
    return _machine(rules, work)
