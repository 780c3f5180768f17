"""Command line: generate, corrupt, run, verify and profile, writing reproducible files.

Exit codes: 0 ok, 1 verification failure, 2 usage or format error, 3 round budget exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .forge import (
    CORRUPTION_KINDS, InputTooLong, NoCorruptionSite, UnsupportedKind, WestEdgeMove, all_good, corrupt,
    make_Gk, make_growing_grid, make_perfect_tree,
)
from .lcl import AlphabetMismatch, dumps_labeling, loads_labeling, report_lines, verify_solution
from .network import InstanceFormatError, NetworkError, dumps_network, loads_network
from .pi import pi_grid_stack, pi_tree, problem_by_name
from .sim import (
    BudgetExceeded, SimulationOracle, TableOracle, alg_consensus, alg_structural, bounded_oracle,
    locality_profile, profile_csv, run,
)
from .turing import (
    Halting, MachineFormatError, TuringMachine, flip_machine, interpreter_machine, load_machine, seek_machine,
)

OK, FAILED, USAGE, BUDGET = 0, 1, 2, 3

BUILTIN_MACHINES = {"flip": flip_machine, "seek": seek_machine, "interp": interpreter_machine}
PROBLEMS = ("tree", "row", "grid", "turing", "consensus", "full")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# files


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, params: dict[str, Any], inputs: Sequence[str],
                   outputs: Sequence[str]) -> None:
    doc = {
        "subcommand": command,
        "parameters": params,
        "inputs": {p: _digest(p) for p in inputs},
        "outputs": sorted(outputs),
        "version": __version__,
    }
    write_atomic(out / "manifest.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def machine(spec: str | None, *, required: bool) -> TuringMachine | None:
    if spec is None:
        if required:
            raise UsageError("this command needs --tm (a machine file or one of flip, seek, interp)")
        return None
    if spec in BUILTIN_MACHINES and not Path(spec).exists():
        return BUILTIN_MACHINES[spec]()
    read_text(spec)
    return load_machine(spec)


def parse_ks(text: str) -> list[int]:
    """``a:b`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            a, b = (int(s) for s in text.split(":", 1))
            ks = list(range(a, b + 1))
        else:
            ks = [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --ks value {text!r}") from exc
    if not ks:
        raise UsageError("--ks selects no values")
    return ks


def make_oracle(spec: str | None, N: int | None, tm: TuringMachine):
    if spec is None and N is not None:
        spec = f"bounded:{N}"
    if spec is None:
        raise UsageError("the consensus algorithm needs an oracle: ground-truth, ground-truth:FILE or bounded:N")
    if spec == "ground-truth":
        return SimulationOracle(tm)
    if spec.startswith("ground-truth:"):
        return load_oracle_table(spec.split(":", 1)[1])
    if spec.startswith("bounded:"):
        try:
            return bounded_oracle(tm, int(spec.split(":", 1)[1]))
        except ValueError as exc:
            raise UsageError(f"bad oracle {spec!r}") from exc
    raise UsageError(f"unknown oracle {spec!r}")


def load_oracle_table(path: str) -> TableOracle:
    """JSON list of ``{"tape": [...], "head": h, "state": q, "verdict": "HaltsAccept"|...}``."""
    try:
        rows = json.loads(read_text(path))
        table = {(tuple(r["tape"]), r["head"], r["state"]): Halting(r["verdict"]) for r in rows}
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"bad oracle table {path}: {exc}") from exc
    return TableOracle(table)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(a: argparse.Namespace) -> int:
    out = Path(a.out)
    if a.kind == "tree":
        if a.h is None:
            raise UsageError("gen tree needs --h (number of levels)")
        net = make_perfect_tree(a.h)
        labeling = all_good(net, pi_tree())
        params = {"kind": "tree", "h": a.h}
    elif a.kind == "grid":
        if a.h is None or a.l is None:
            raise UsageError("gen grid needs --h and --l")
        net = make_growing_grid(a.h, a.l)
        labeling = all_good(net, pi_grid_stack())
        params = {"kind": "grid", "h": a.h, "l": a.l}
    else:
        if a.k is None or a.input is None:
            raise UsageError("gen gk needs --k and --input")
        tm = machine(a.tm, required=True)
        net = make_Gk(a.k, tm, a.input)
        labeling = run(net, alg_structural(tm), a.budget).labeling()
        params = {"kind": "gk", "k": a.k, "tm": a.tm, "input": a.input, "budget": a.budget}
    write_atomic(out / "instance.json", dumps_network(net))
    write_atomic(out / "labeling.json", dumps_labeling(net, labeling))
    inputs = [a.tm] if a.kind == "gk" and Path(a.tm).exists() else []
    write_manifest(out, "gen", params, inputs, ["instance.json", "labeling.json"])
    print(f"wrote {out / 'instance.json'} ({net.n} nodes)")
    return OK


def cmd_corrupt(a: argparse.Namespace) -> int:
    if a.seed is None:
        raise UsageError("corrupt needs --seed")
    net = loads_network(read_text(a.instance))
    tm = machine(a.tm, required=False)
    bad = corrupt(net, a.kind, a.seed, tm=tm)
    out = Path(a.out)
    write_atomic(out / "instance.json", dumps_network(bad))
    inputs = [a.instance] + ([a.tm] if a.tm and Path(a.tm).exists() else [])
    write_manifest(out, "corrupt", {"kind": a.kind, "seed": a.seed, "tm": a.tm}, inputs, ["instance.json"])
    print(f"wrote {out / 'instance.json'}")
    return OK


def cmd_run(a: argparse.Namespace) -> int:
    net = loads_network(read_text(a.instance))
    tm = machine(a.tm, required=True)
    if a.alg == "structural":
        alg = alg_structural(tm)
    else:
        alg = alg_consensus(tm, make_oracle(a.oracle, a.N, tm))
    trace = run(net, alg, a.budget)
    out = Path(a.out)
    write_atomic(out / "trace.txt", "\n".join(trace.dump_lines()) + "\n")
    write_atomic(out / "labeling.json", dumps_labeling(net, trace.labeling()))
    inputs = [a.instance] + ([a.tm] if Path(a.tm).exists() else [])
    params = {"alg": a.alg, "oracle": a.oracle, "N": a.N, "budget": a.budget, "tm": a.tm}
    write_manifest(out, "run", params, inputs, ["labeling.json", "trace.txt"])
    print(f"max_round={trace.max_round}")
    return OK


def cmd_verify(a: argparse.Namespace) -> int:
    net = loads_network(read_text(a.instance))
    labeling = loads_labeling(net, read_text(a.labeling))
    tm = machine(a.tm, required=a.problem in ("turing", "consensus", "full"))
    problem = problem_by_name(a.problem, tm)
    try:
        found = verify_solution(net, problem, labeling)
        lines = report_lines(found)
    except AlphabetMismatch as exc:
        found, lines = [exc], [f"ALPHABET {exc}"]
    text = "\n".join(lines + [f"{len(found)} violation(s)"]) + "\n"
    sys.stdout.write(text)
    if a.out:
        out = Path(a.out)
        write_atomic(out / "report.txt", text)
        inputs = [a.instance, a.labeling] + ([a.tm] if a.tm and Path(a.tm).exists() else [])
        write_manifest(out, "verify", {"problem": a.problem, "tm": a.tm}, inputs, ["report.txt"])
    return FAILED if found else OK


def cmd_profile(a: argparse.Namespace) -> int:
    if a.ks is None:
        raise UsageError("profile needs --ks")
    ks = parse_ks(a.ks)
    tm = machine(a.tm, required=True)
    x = a.input or "0"
    alg = alg_structural(tm) if a.alg == "structural" else alg_consensus(tm, make_oracle(a.oracle, a.N, tm))
    rows = locality_profile(lambda k: make_Gk(k, tm, x), alg, ks, a.budget)
    text = profile_csv(rows)
    out = Path(a.out)
    write_atomic(out / "profile.csv", text)
    inputs = [a.tm] if Path(a.tm).exists() else []
    params = {"alg": a.alg, "ks": ks, "tm": a.tm, "input": x, "oracle": a.oracle, "N": a.N, "budget": a.budget}
    write_manifest(out, "profile", params, inputs, ["profile.csv"])
    sys.stdout.write(text)
    return OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locallab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, out: bool = True) -> None:
        p.add_argument("--tm", help="machine file, or a built-in: flip, seek, interp")
        p.add_argument("--budget", type=int, default=10_000, help="round budget (default 10000)")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    g = sub.add_parser("gen", help="generate an instance and its reference labeling")
    g.add_argument("kind", choices=("tree", "grid", "gk"))
    g.add_argument("--k", type=int, help="layers of G_k")
    g.add_argument("--h", type=int, help="tree levels, or grid rows")
    g.add_argument("--l", type=int, help="length of the first grid row")
    g.add_argument("--input", help="binary machine input for gk")
    common(g)
    g.set_defaults(fn=cmd_gen)

    c = sub.add_parser("corrupt", help="apply one seeded local mutation")
    c.add_argument("instance")
    c.add_argument("kind", choices=CORRUPTION_KINDS)
    c.add_argument("--seed", type=int)
    common(c)
    c.set_defaults(fn=cmd_corrupt)

    r = sub.add_parser("run", help="simulate an algorithm on an instance")
    r.add_argument("instance")
    r.add_argument("alg", choices=("structural", "consensus"))
    r.add_argument("oracle", nargs="?", help="ground-truth, ground-truth:FILE or bounded:N")
    r.add_argument("--N", type=int, help="shorthand for the oracle bounded:N")
    common(r)
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="check a labeling against a problem")
    v.add_argument("instance")
    v.add_argument("labeling")
    v.add_argument("problem", choices=PROBLEMS)
    v.add_argument("--tm", help="machine file, or a built-in: flip, seek, interp")
    v.add_argument("--out", help="also write report.txt and a manifest here")
    v.set_defaults(fn=cmd_verify)

    p = sub.add_parser("profile", help="max halting round of an algorithm on G_k over a range of k")
    p.add_argument("alg", choices=("structural", "consensus"))
    p.add_argument("oracle", nargs="?", help="ground-truth, ground-truth:FILE or bounded:N")
    p.add_argument("--ks", help="a:b or a comma-separated list")
    p.add_argument("--input", help="binary machine input (default 0)")
    p.add_argument("--N", type=int, help="shorthand for the oracle bounded:N")
    common(p)
    p.set_defaults(fn=cmd_profile)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BUDGET
    except (UsageError, InputTooLong, WestEdgeMove, NoCorruptionSite, UnsupportedKind, MachineFormatError,
            InstanceFormatError, NetworkError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
