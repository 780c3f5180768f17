import itertools
import random

from locallab.forge import all_good, corrupt, grid_columns, make_Gk, make_growing_grid, make_layer, make_perfect_tree
from locallab.lcl import ABSENT, OutputLabeling, compose, verify_solution
from locallab.network import network_from_doc, network_to_doc
from locallab.pi import (
    ACCEPT, ERROR, GOOD, HEAD, I_E, L, O_E, P, QUIET_BAD, R, REJECT, RULES, S, TREE_POINTERS, describe,
    pi_consensus, pi_full, pi_grid, pi_grid_stack, pi_row, pi_structural, pi_tree, pi_turing, pointer,
)
from locallab.turing import flip_machine, interpreter_machine, seek_machine


def rule_ids(net, problem, out):
    return {v.constraint_id for v in verify_solution(net, problem, out)}


def node_by_id(net, i):
    return net.ids.index(i)


def port_with(net, u, label):
    return next(p for p, _, _ in net.adjacency[u] if net.hin(u, p)[0] == label)


# ---------------------------------------------------------------- tree


def test_perfect_tree_is_good():
    for levels in range(1, 5):
        net = make_perfect_tree(levels)
        assert verify_solution(net, pi_tree(), all_good(net, pi_tree())) == []


def test_swapped_horizontal_labels():
    net = make_perfect_tree(3)
    u, p, v, q = next(e for e in net.edges() if net.hin(e[0], e[1])[0] in (L, R))
    a, b = net.hin(u, p), net.hin(v, q)
    one_end = net.with_halfedge_input(u, p, (b[0], a[1]))
    assert "goodTree.2" in rule_ids(one_end, pi_tree(), all_good(one_end, pi_tree()))
    both = one_end.with_halfedge_input(v, q, (a[0], b[1]))
    assert rule_ids(both, pi_tree(), all_good(both, pi_tree()))


def _tree_labelings(net, choices):
    for combo in choices:
        nodes = tuple(combo)
        halves = tuple(tuple(GOOD if x == GOOD else QUIET_BAD for _ in net.adjacency[u]) for u, x in enumerate(nodes))
        yield OutputLabeling(nodes, halves)


def test_valid_trees_admit_only_the_good_labeling():
    options = [GOOD, ERROR, *map(pointer, TREE_POINTERS)]
    for levels in (1, 2):
        net = make_perfect_tree(levels)
        for out in _tree_labelings(net, itertools.product(options, repeat=net.n)):
            ok = not verify_solution(net, pi_tree(), out)
            assert ok == all(x == GOOD for x in out.node_out)
    net = make_perfect_tree(3)
    rng = random.Random(3)
    sample = [[rng.choice(options) for _ in net.nodes()] for _ in range(400)]
    for out in _tree_labelings(net, sample):
        if any(x != GOOD for x in out.node_out):
            assert verify_solution(net, pi_tree(), out)


def test_pointer_rules():
    net = make_perfect_tree(2)
    tree = pi_tree()
    root = node_by_id(net, 1)
    bad_half = OutputLabeling.uniform(net, GOOD, GOOD)
    for u in net.nodes():
        bad_half = bad_half.with_node(u, pointer(L))
        for p, _, _ in net.adjacency[u]:
            bad_half = bad_half.with_half(net, u, p, QUIET_BAD)
    assert "badTree.2" in rule_ids(net, tree, bad_half)
    only_root = OutputLabeling.uniform(net, GOOD, GOOD).with_node(root, ERROR)
    for p, _, _ in net.adjacency[root]:
        only_root = only_root.with_half(net, root, p, QUIET_BAD)
    assert "badTree.1" in rule_ids(net, tree, only_root)


# ---------------------------------------------------------------- row


def test_single_layer_is_good():
    two = compose(pi_tree(), pi_row(), shared_inputs=True)
    for i in (1, 3, 4, 7):
        net = make_layer(i)
        assert verify_solution(net, two, all_good(net, two)) == []


def test_grid_node_without_attachment():
    net = make_layer(4)
    u = next(u for u in net.nodes() if net.node_input[u][0] == "G")
    cut = net.without_edge(u, port_with(net, u, P))
    assert "goodRow.2" in rule_ids(cut, pi_row(), OutputLabeling.uniform(cut, GOOD, GOOD))


def _two_layers_joined():
    a, b = network_to_doc(make_layer(2)), network_to_doc(make_layer(2))
    shift = len(a["nodes"])
    for rec in b["nodes"]:
        rec["id"] += shift
    for rec in b["edges"]:
        rec["u_id"] += shift
        rec["v_id"] += shift
    doc = {"c": a["c"], "nodes": a["nodes"] + b["nodes"], "edges": a["edges"] + b["edges"]}
    net = network_from_doc(doc)
    east_end = next(u for u in net.nodes() if net.ids[u] <= shift and net.node_input[u][0] == "G"
                    and not any(net.hin(u, p)[0] == "E" for p, _, _ in net.adjacency[u]))
    west_end = next(u for u in net.nodes() if net.ids[u] > shift and net.node_input[u][0] == "G"
                    and not any(net.hin(u, p)[0] == "W" for p, _, _ in net.adjacency[u]))
    doc["edges"].append({
        "u_id": net.ids[east_end], "u_port": net.degree(east_end) + 1,
        "v_id": net.ids[west_end], "v_port": net.degree(west_end) + 1,
        "u_halfedge_input": ["E", "O_H"], "v_halfedge_input": ["W", "I_H"],
    })
    return network_from_doc(doc)


def test_rows_of_two_trees_cannot_be_joined():
    net = _two_layers_joined()
    ids = rule_ids(net, pi_row(), OutputLabeling.uniform(net, GOOD, GOOD))
    assert ids & {"goodRow.5", "goodRow.6", "goodRow.7"}


# ---------------------------------------------------------------- grid


def test_growing_grid_is_good():
    net = make_growing_grid(4, 1)
    assert verify_solution(net, pi_grid_stack(), all_good(net, pi_grid_stack())) == []


def test_missing_column_edge():
    net = make_growing_grid(4, 1)
    cols = grid_columns(net)
    u = next(u for u, (i, j) in cols.items() if i == 2 and j == 1)
    cut = net.without_edge(u, port_with(net, u, S))
    assert rule_ids(cut, pi_grid(), OutputLabeling.uniform(cut, GOOD, GOOD)) & {"goodGrid.2", "goodGrid.3"}


def test_north_without_east():
    net = make_growing_grid(2, 1)
    cols = grid_columns(net)
    u = next(u for u, (i, j) in cols.items() if (i, j) == (2, 1))
    cut = net.without_edge(u, port_with(net, u, "E"))
    assert "goodGrid.4" in rule_ids(cut, pi_grid(), OutputLabeling.uniform(cut, GOOD, GOOD))


# ---------------------------------------------------------------- Turing


def test_trace_rows_are_good():
    tm = interpreter_machine()
    for x in ("1", "0", "01", "00"):
        net = make_Gk(7, tm, x)
        assert verify_solution(net, pi_turing(tm), OutputLabeling.uniform(net, GOOD, GOOD)) == []


def test_blank_rows_above_a_long_input_are_flagged():
    # A headless row wider than one cell cannot point at a head, and blank
    # cells cannot be copied onto a 1; both show up only above the input row.
    tm = interpreter_machine()
    for x in ("10", "0001", "0110"):
        net = make_Gk(7, tm, x)
        cols = grid_columns(net)
        found = verify_solution(net, pi_turing(tm), OutputLabeling.uniform(net, GOOD, GOOD))
        assert found
        for v in found:
            assert min(cols[node_by_id(net, i)][0] for i in v.witness_nodes) < len(x)


def test_second_head_is_caught_in_its_row():
    tm = flip_machine()
    net = make_Gk(6, tm, "10")
    cols = grid_columns(net)
    for seed in range(10):
        bad = corrupt(net, "turing_two_heads", seed, tm=tm)
        found = verify_solution(bad, pi_turing(tm), OutputLabeling.uniform(bad, GOOD, GOOD))
        pointer_rules = [v for v in found if v.constraint_id in ("goodTuring.1a", "goodTuring.1d", "goodTuring.1e")]
        assert pointer_rules
        rows = {cols[node_by_id(bad, i)][0] for v in pointer_rules for i in v.witness_nodes}
        assert len(rows) == 1


def test_valid_row_has_no_error_sink():
    tm = interpreter_machine()
    net = make_Gk(3, tm, "011")
    row = [u for u, (i, _) in grid_columns(net).items() if i == 3]
    assert len(row) == 3
    row_ports = [(u, p) for u in row for p, _, _ in net.adjacency[u] if net.hin(u, p)[0] in ("E", "W")]
    assert len(row_ports) == 4
    base = OutputLabeling.uniform(net, GOOD, GOOD)
    for u in row:
        base = base.with_node(u, QUIET_BAD)
        for p, _, _ in net.adjacency[u]:
            base = base.with_half(net, u, p, I_E)
    for choice in itertools.product((I_E, O_E), repeat=4):
        out = base
        for (u, p), lab in zip(row_ports, choice):
            out = out.with_half(net, u, p, lab)
        assert verify_solution(net, pi_turing(tm), out), choice


# ---------------------------------------------------------------- consensus and the full stack


def test_uniform_accept_without_halting():
    tm = flip_machine()
    net = make_Gk(5, tm, "1")
    assert verify_solution(net, pi_consensus(tm), OutputLabeling.uniform(net, ACCEPT, GOOD)) == []


def test_rejecting_head_demands_reject():
    tm = interpreter_machine()
    net = make_Gk(5, tm, "10")
    found = verify_solution(net, pi_consensus(tm), OutputLabeling.uniform(net, ACCEPT, GOOD))
    assert {v.constraint_id for v in found} == {"consensus.1"}
    for v in found:
        assert net.node_input[node_by_id(net, v.witness_nodes[0])][2:] == (HEAD, tm.reject)
    assert verify_solution(net, pi_consensus(tm), OutputLabeling.uniform(net, REJECT, GOOD)) == []


def test_one_differing_node_in_a_row():
    tm = flip_machine()
    net = make_Gk(5, tm, "1")
    u = next(u for u, (i, j) in grid_columns(net).items() if (i, j) == (4, 2))
    out = OutputLabeling.uniform(net, REJECT, GOOD).with_node(u, ACCEPT)
    assert "consensus.2" in rule_ids(net, pi_consensus(tm), out)


def test_full_canonical_labeling():
    for tm, x, answer, halts in ((flip_machine(), "01", REJECT, False), (interpreter_machine(), "1", REJECT, True),
                                 (seek_machine(), "01", ACCEPT, True)):
        net = make_Gk(7, tm, x)
        p = pi_full(tm)
        good = all_good(net, p)
        out = OutputLabeling(tuple(lab[:4] + (answer,) for lab in good.node_out), good.halfedge_out)
        assert verify_solution(net, p, out) == []
        wrong = ACCEPT if answer == REJECT else REJECT
        flipped = OutputLabeling(tuple(lab[:4] + (wrong,) for lab in good.node_out), good.halfedge_out)
        # Without a halting head in the grid either answer is consistent.
        assert bool(verify_solution(net, p, flipped)) == halts


def test_tree_errors_force_later_layers_absent():
    tm = flip_machine()
    net = make_Gk(5, tm, "1")
    broken = corrupt(net, "tree_break", 0)
    p = pi_structural(tm)
    out = all_good(broken, p)
    assert verify_solution(broken, p, out)
    u = next(u for u in broken.nodes() if broken.node_input[u][0] == "T")
    mixed = out.with_node(u, (ERROR, GOOD, GOOD, GOOD))
    assert any(v.constraint_id.startswith("admissible.") for v in verify_solution(broken, p, mixed))
    dropped = out.with_node(u, (ERROR, ABSENT, ABSENT, ABSENT))
    assert not any(v.constraint_id.startswith("admissible.") and node_by_id(broken, v.witness_nodes[0]) == u
                   for v in verify_solution(broken, p, dropped) if v.constraint_id.startswith("admissible."))


def test_grid_nodes_are_quiescent_in_the_tree_layer():
    net = make_growing_grid(2, 2)
    out = OutputLabeling.uniform(net, GOOD, GOOD)
    for u in net.nodes():
        if net.node_input[u][0] == "G":
            out = out.with_node(u, ERROR)
            for p, _, _ in net.adjacency[u]:
                out = out.with_half(net, u, p, QUIET_BAD)
    assert verify_solution(net, pi_tree(), out) == []


def test_describe_lists_every_rule_once():
    lines = describe()
    assert len(lines) == sum(len(r) for r in RULES.values()) == len(set(lines))
    assert "tree.goodTree.4: a left child reaches itself via P, Ch_R, L" in lines
    assert all(line.split(".", 1)[0] in RULES for line in lines)
