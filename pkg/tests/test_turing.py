import random

import pytest
from hypothesis import given, settings, strategies as st

from locallab.turing import (
    Halting, MachineFormatError, ReferenceSimulator, TmConfiguration, TuringMachine, classify, dumps_machine,
    flip_machine, grid_successor, initial_configuration, interpreter_machine, load_machine, loads_machine,
    random_machine, run_until_halt, seek_machine, tm_step, tm_trace,
)


def test_halting_state_is_a_fixed_point():
    tm = interpreter_machine()
    c = TmConfiguration((1, 0, 1), 1, tm.accept)
    assert tm_step(tm, c) == c


def test_flip_example():
    tm = flip_machine()
    assert tm_step(tm, TmConfiguration((1, 0), 0, "q0")) == TmConfiguration((0, 0), 1, "q0")


def test_right_move_extends_and_left_edge_holds():
    tm = flip_machine()
    assert tm_step(tm, TmConfiguration((1,), 0, "q0")) == TmConfiguration((0, 0), 1, "q0")
    lefty = TuringMachine(("a", "y", "n"), "a", "y", "n", {
        ("a", 0): ("a", 1, "L"), ("a", 1): ("a", 1, "L"),
        ("y", 0): ("y", 0, "S"), ("y", 1): ("y", 1, "S"),
        ("n", 0): ("n", 0, "S"), ("n", 1): ("n", 1, "S"),
    })
    assert tm_step(lefty, TmConfiguration((0, 0), 0, "a")) == TmConfiguration((1, 0), 0, "a")


def test_grid_rows_grow_by_one():
    tm = seek_machine()
    trace = tm_trace(tm, "001", 6)
    assert [len(c.tape) for c in trace] == [3, 4, 5, 6, 7, 8]
    assert trace[2].state == "q0" and trace[3].state == tm.accept and trace[-1].head == 2
    assert tm_trace(tm, "1", 0) == []


def test_trace_matches_reference_simulator():
    rng = random.Random(11)
    for _ in range(1000):
        tm = random_machine(rng, rng.randint(1, 4))
        x = "".join(rng.choice("01") for _ in range(rng.randint(1, 5)))
        rows = rng.randint(1, 12)
        ref = ReferenceSimulator(tm, x)
        for c in tm_trace(tm, x, rows):
            assert (c.tape, c.head, c.state) == ref.snapshot()
            ref.advance()


def _plain(tm, c, steps):
    end, _ = run_until_halt(tm, c, steps)
    return tm.verdict(end.state) if tm.halted(end.state) else None


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**9), n_states=st.integers(1, 3), x=st.text("01", min_size=1, max_size=4))
def test_classify_never_contradicts_long_simulation(seed, n_states, x):
    tm = random_machine(random.Random(seed), n_states)
    c = initial_configuration(tm, x)
    verdict = classify(tm, c, 400)
    long_run = _plain(tm, c, 4000)
    if verdict in (Halting.HALTS_ACCEPT, Halting.HALTS_REJECT):
        assert long_run == verdict
    elif verdict is Halting.RUNS_FOREVER:
        assert long_run is None


def test_classify_examples():
    assert classify(flip_machine(), initial_configuration(flip_machine(), "1"), 50) is Halting.RUNS_FOREVER
    seek = seek_machine()
    assert classify(seek, initial_configuration(seek, "0001"), 50) is Halting.HALTS_ACCEPT
    assert classify(seek, initial_configuration(seek, "0000"), 50) is Halting.RUNS_FOREVER
    interp = interpreter_machine()
    assert classify(interp, initial_configuration(interp, "10"), 50) is Halting.HALTS_REJECT
    assert classify(interp, initial_configuration(interp, "0011"), 50) is Halting.HALTS_ACCEPT


def test_successor_keeps_the_verdict():
    rng = random.Random(2)
    for _ in range(200):
        tm = random_machine(rng, 3)
        c = initial_configuration(tm, "".join(rng.choice("01") for _ in range(3)))
        a = classify(tm, c, 500)
        b = classify(tm, grid_successor(tm, c), 500)
        if a is not None and b is not None:
            assert a == b


def test_machine_files(tmp_path):
    for tm in (flip_machine(), seek_machine(), interpreter_machine()):
        path = tmp_path / "m.tm"
        path.write_text(dumps_machine(tm))
        again = load_machine(path)
        assert again == tm and again.delta == tm.delta
    with pytest.raises(MachineFormatError):
        loads_machine("{")
    text = dumps_machine(flip_machine()).replace('"S"', '"R"', 1)
    with pytest.raises(MachineFormatError):
        loads_machine(text)


def test_shipped_machine_files_match_builtins():
    from pathlib import Path
    root = Path(__file__).resolve().parent.parent / "machines"
    for name, tm in (("flip", flip_machine()), ("seek", seek_machine()), ("interp", interpreter_machine())):
        assert load_machine(root / f"{name}.tm") == tm
