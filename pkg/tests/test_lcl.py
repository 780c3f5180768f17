import pytest

from locallab.forge import make_growing_grid, make_perfect_tree, all_good
from locallab.lcl import (
    ABSENT, AlphabetMismatch, LabelSet, OutputLabeling, compose, dumps_labeling, follow_path,
    loads_labeling, trivial_problem, verify_solution,
)
from locallab.network import build_network
from locallab.pi import ERROR, GOOD, QUIET_BAD, pi_grid_stack, pi_tree


def star():
    edges = [("c", 1, "a", 1), ("c", 2, "b", 1)]
    ids = {"c": 1, "a": 2, "b": 3}
    half = {("c", 1): "R", ("c", 2): "R", ("a", 1): "L", ("b", 1): "L"}
    return build_network(edges, ids, {k: 0 for k in ids}, half)


def chain():
    edges = [("u", 1, "v", 1), ("v", 2, "w", 1)]
    ids = {"u": 1, "v": 2, "w": 3}
    half = {("u", 1): "P", ("v", 1): "Ch", ("v", 2): "R", ("w", 1): "L"}
    return build_network(edges, ids, {k: 0 for k in ids}, half)


def labels_of(net):
    return {(u, p): net.hin(u, p) for u in net.nodes() for p, _, _ in net.adjacency[u]}


def test_follow_path():
    net = chain()
    assert follow_path(net, labels_of(net), 0, []) == 0
    assert follow_path(net, labels_of(net), 0, ["P", "R"]) == 2
    s = star()
    assert follow_path(s, labels_of(s), 0, ["R"]) is None
    assert follow_path(s, labels_of(s), 1, ["L", "R"]) is None


def test_label_sets():
    s = LabelSet({1, 2})
    assert 1 in s and 3 not in s and list(s) == [1, 2]
    with pytest.raises(ValueError):
        LabelSet(set())
    pred = LabelSet(contains=lambda x: x > 0, name="positive")
    assert 4 in pred and not pred.finite


def tree_with_trivial():
    tree = pi_tree()
    return tree, compose(tree, trivial_problem(tree.node_in, tree.halfedge_in), shared_inputs=True)


def test_compose_with_trivial_second_layer():
    tree, both = tree_with_trivial()
    net = make_perfect_tree(3)
    assert verify_solution(net, both, OutputLabeling.uniform(net, (GOOD, "*"), (GOOD, "*"))) == []
    broken = net.without_edge(1, next(p for p, v, _ in net.adjacency[1] if v == 2))
    assert verify_solution(broken, tree, all_good(broken, tree))
    assert verify_solution(broken, both, OutputLabeling.uniform(broken, (GOOD, "*"), (GOOD, "*")))


def test_admissibility():
    _, both = tree_with_trivial()
    net = make_perfect_tree(2)
    good = OutputLabeling.uniform(net, (GOOD, "*"), (GOOD, "*"))
    missing = good.with_node(0, (GOOD, ABSENT))
    assert any(v.constraint_id == "admissible.trivial" for v in verify_solution(net, both, missing))
    extra = good.with_node(0, (ERROR, "*"))
    assert any(v.constraint_id == "admissible.trivial" for v in verify_solution(net, both, extra))


def test_mixed_sides_in_one_layer():
    tree = pi_tree()
    net = make_perfect_tree(2)
    out = OutputLabeling.uniform(net, GOOD, GOOD).with_half(net, 0, 1, QUIET_BAD)
    ids = {v.constraint_id for v in verify_solution(net, tree, out)}
    assert "side.tree" in ids


def test_alphabet_mismatch():
    net = make_perfect_tree(2)
    with pytest.raises(AlphabetMismatch):
        verify_solution(net, pi_tree(), OutputLabeling.uniform(net, "nonsense", GOOD))


def test_verification_is_sorted_and_handle_independent():
    net = make_growing_grid(3, 2)
    p = pi_grid_stack()
    cut = net.without_edge(0, 1)
    out = all_good(cut, p)
    found = verify_solution(cut, p, out)
    assert found == sorted(found) and found
    order = list(reversed(range(cut.n)))
    again = verify_solution(cut.permuted(order), p, out.permuted(order))
    assert again == found


def test_layers_report_like_their_projection():
    net = make_growing_grid(3, 1).without_edge(0, 1)
    stack = pi_grid_stack()
    out = all_good(net, stack)
    tree_only = verify_solution(net, pi_tree(), OutputLabeling.uniform(net, GOOD, GOOD))
    mine = [v for v in verify_solution(net, stack, out) if v.constraint_id.startswith("goodTree")]
    assert {v.constraint_id for v in mine} == {v.constraint_id for v in tree_only}


def test_compose_is_associative_on_a_small_instance():
    t = pi_tree()
    a = trivial_problem(t.node_in, t.halfedge_in, "a")
    net = make_perfect_tree(2)
    lhs = compose(compose(t, t, shared_inputs=True), a, shared_inputs=True)
    rhs = compose(t, compose(t, a, shared_inputs=True), shared_inputs=True)
    for lab in [(GOOD, GOOD, "a"), (GOOD, ERROR, ABSENT), (ERROR, ABSENT, ABSENT), (GOOD, GOOD, ABSENT)]:
        out = OutputLabeling.uniform(net, lab, (GOOD, GOOD, "a") if lab[1] == GOOD else (GOOD, QUIET_BAD, ABSENT))
        assert bool(verify_solution(net, lhs, out)) == bool(verify_solution(net, rhs, out))


def test_labeling_file_round_trip():
    net = make_perfect_tree(2)
    out = OutputLabeling.uniform(net, (GOOD, ("pointer", "L")), (GOOD, GOOD))
    assert loads_labeling(net, dumps_labeling(net, out)) == out
