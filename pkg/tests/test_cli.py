import json
from pathlib import Path

import pytest

from locallab.cli import BUDGET, FAILED, OK, USAGE, main
from locallab.lcl import dumps_labeling, loads_labeling
from locallab.network import loads_network

MACHINES = Path(__file__).resolve().parent.parent / "machines"
FLIP = str(MACHINES / "flip.tm")


def files(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


def gen_gk(out, k=8, x="101"):
    return main(["gen", "gk", "--k", str(k), "--tm", FLIP, "--input", x, "--out", str(out)])


def test_gen_is_reproducible(tmp_path):
    assert gen_gk(tmp_path / "a") == OK
    assert gen_gk(tmp_path / "b") == OK
    a, b = files(tmp_path / "a"), files(tmp_path / "b")
    assert set(a) == {"instance.json", "labeling.json", "manifest.json"}
    assert a == b
    manifest = json.loads(a["manifest.json"])
    assert manifest["subcommand"] == "gen" and manifest["parameters"]["k"] == 8


def test_gen_rejects_bad_parameters(tmp_path):
    assert gen_gk(tmp_path / "x", k=2, x="101") == USAGE
    assert main(["gen", "grid", "--h", "2", "--out", str(tmp_path / "y")]) == USAGE
    with pytest.raises(SystemExit) as info:
        main(["gen", "cube", "--out", str(tmp_path)])
    assert info.value.code == USAGE


def test_gen_run_verify_pipeline(tmp_path):
    assert gen_gk(tmp_path / "g") == OK
    inst = tmp_path / "g" / "instance.json"
    assert main(["verify", str(inst), str(tmp_path / "g" / "labeling.json"), "turing", "--tm", FLIP]) == OK
    n = loads_network(inst.read_text()).n
    assert main(["run", str(inst), "consensus", f"bounded:{n}", "--tm", FLIP, "--out", str(tmp_path / "r")]) == OK
    labeling = tmp_path / "r" / "labeling.json"
    assert main(["verify", str(inst), str(labeling), "full", "--tm", FLIP]) == OK
    assert main(["run", str(inst), "consensus", "--N", str(n), "--tm", FLIP, "--out", str(tmp_path / "s")]) == OK
    assert files(tmp_path / "r")["labeling.json"] == files(tmp_path / "s")["labeling.json"]
    trace = (tmp_path / "r" / "trace.txt").read_text().splitlines()
    assert len(trace) == n and trace[0].startswith("1,")


def test_flipped_consensus_output(tmp_path, capsys):
    assert gen_gk(tmp_path / "g") == OK
    inst = tmp_path / "g" / "instance.json"
    net = loads_network(inst.read_text())
    assert main(["run", str(inst), "consensus", "ground-truth", "--tm", FLIP, "--out", str(tmp_path / "r")]) == OK
    out = loads_labeling(net, (tmp_path / "r" / "labeling.json").read_text())
    # east end of the bottom row: one west neighbor, nothing to the north or east
    last = max((u for u in net.nodes() if net.node_input[u][0] == "G" and len(out.node_out[u]) == 5),
               key=lambda u: net.ids[u])
    lab = out.node_out[last]
    flipped = out.with_node(last, lab[:4] + ("accept" if lab[4] == "reject" else "reject",))
    bad = tmp_path / "bad.json"
    bad.write_text(dumps_labeling(net, flipped))
    capsys.readouterr()
    assert main(["verify", str(inst), str(bad), "full", "--tm", FLIP]) == FAILED
    report = capsys.readouterr().out.splitlines()
    assert report[-1] == "1 violation(s)"
    assert "consensus.2" in report[0]


def test_malformed_inputs(tmp_path):
    assert gen_gk(tmp_path / "g") == OK
    inst = tmp_path / "g" / "instance.json"
    cut = tmp_path / "cut.json"
    cut.write_text(inst.read_text()[:200])
    assert main(["verify", str(cut), str(tmp_path / "g" / "labeling.json"), "tree"]) == USAGE
    assert main(["verify", str(inst), str(tmp_path / "missing.json"), "tree"]) == USAGE
    assert main(["run", str(inst), "consensus", "--tm", FLIP, "--out", str(tmp_path / "r")]) == USAGE


def test_corrupted_instance_gets_bad_labels(tmp_path):
    assert gen_gk(tmp_path / "g", x="1") == OK
    inst = tmp_path / "g" / "instance.json"
    assert main(["corrupt", str(inst), "tree_break", "--seed", "4", "--out", str(tmp_path / "c")]) == OK
    bad = tmp_path / "c" / "instance.json"
    assert main(["run", str(bad), "structural", "--tm", FLIP, "--out", str(tmp_path / "r")]) == OK
    net = loads_network(bad.read_text())
    out = loads_labeling(net, (tmp_path / "r" / "labeling.json").read_text())
    assert any(lab[0] != "⊥" for lab in out.node_out)
    assert main(["verify", str(bad), str(tmp_path / "r" / "labeling.json"), "turing", "--tm", FLIP]) == OK


def test_budget_exit_code(tmp_path):
    assert gen_gk(tmp_path / "g") == OK
    inst = tmp_path / "g" / "instance.json"
    assert main(["run", str(inst), "structural", "--tm", FLIP, "--budget", "3", "--out", str(tmp_path / "r")]) == BUDGET


def test_profile(tmp_path, capsys):
    args = ["profile", "structural", "--ks", "4:7", "--tm", "flip", "--input", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == OK
    assert main(args + ["--out", str(tmp_path / "b")]) == OK
    table = (tmp_path / "a" / "profile.csv").read_text().splitlines()
    assert table[0] == "k,n,max_round" and len(table) == 5
    ns = [int(line.split(",")[1]) for line in table[1:]]
    assert ns == sorted(ns)
    assert files(tmp_path / "a") == files(tmp_path / "b")
    assert main(["profile", "structural", "--ks", ",", "--tm", "flip", "--out", str(tmp_path / "c")]) == USAGE
