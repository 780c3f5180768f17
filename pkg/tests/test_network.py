import itertools
import random

import networkx as nx
import pytest

from locallab.network import (
    DegreeExceedsDelta, DuplicatePort, IdOutOfRange, InstanceFormatError, NonInjectiveIds, UnknownNode,
    build_network, canonical_encode, dumps_network, isomorphic, loads_network, neighborhood,
)


def path(n, ports=None, ids=None):
    ids = ids or {i: i + 1 for i in range(n)}
    edges = []
    for i in range(n - 1):
        p, q = (ports or {}).get(i, (1 if i == 0 else 2, 1))
        edges.append((i, p, i + 1, q))
    half = {}
    for u, p, v, q in edges:
        half[(u, p)] = half[(v, q)] = "-"
    return build_network(edges, ids, {i: "x" for i in range(n)}, half)


def triangle():
    edges = [(0, 1, 1, 1), (1, 2, 2, 1), (2, 2, 0, 2)]
    half = {(u, p): "-" for e in edges for u, p in ((e[0], e[1]), (e[2], e[3]))}
    return build_network(edges, {0: 1, 1: 2, 2: 3}, {i: "x" for i in range(3)}, half)


def test_single_node():
    net = build_network([], {"a": 1}, {"a": "x"}, {})
    assert net.n == 1 and net.degree(0) == 0


def test_single_edge():
    net = build_network([("a", 1, "b", 1)], {"a": 1, "b": 2}, {"a": 0, "b": 0}, {("a", 1): 0, ("b", 1): 0})
    assert net.target(0, 1) == (1, 1)
    assert list(net.edges()) == [(0, 1, 1, 1)]


def test_duplicate_ids_rejected():
    with pytest.raises(NonInjectiveIds) as info:
        build_network([("a", 1, "b", 1)], {"a": 1, "b": 1}, {"a": 0, "b": 0}, {("a", 1): 0, ("b", 1): 0})
    assert info.value.node == "b"


def test_other_invariants_rejected():
    with pytest.raises(IdOutOfRange):
        build_network([], {"a": 2}, {"a": 0}, {})
    with pytest.raises(DuplicatePort):
        build_network([("a", 1, "b", 1), ("a", 1, "c", 1)], {"a": 1, "b": 2, "c": 3}, {k: 0 for k in "abc"},
                      {("a", 1): 0, ("b", 1): 0, ("c", 1): 0})
    star = [("h", i + 1, i, 1) for i in range(11)]
    ids = {"h": 100, **{i: i + 1 for i in range(11)}}
    half = {**{("h", i + 1): 0 for i in range(11)}, **{(i, 1): 0 for i in range(11)}}
    with pytest.raises(DegreeExceedsDelta):
        build_network(star, ids, {k: 0 for k in ids}, half)


def test_radius_zero_keeps_host_degree():
    x = neighborhood(path(3), 1, 0)
    f = x.fragment
    assert f.n == 1 and f.adjacency[0] == () and f.degrees[0] == 2


def test_triangle_radius_one_drops_far_edge():
    f = neighborhood(triangle(), 0, 1).fragment
    assert f.n == 3
    assert sum(len(a) for a in f.adjacency) // 2 == 2


def test_path_radius_one_from_middle():
    f = neighborhood(path(3), 1, 1).fragment
    assert f.n == 3 and sum(len(a) for a in f.adjacency) // 2 == 2


def test_unknown_node():
    with pytest.raises(UnknownNode):
        neighborhood(path(2), 5, 1)


def test_growth_and_exhaustion():
    net = path(6)
    for v in net.nodes():
        ecc = neighborhood(net, v, 0).eccentricity
        prev = set()
        for t in range(ecc + 3):
            x = neighborhood(net, v, t)
            ids = set(x.fragment.ids)
            assert prev <= ids
            prev = ids
        full = neighborhood(net, v, ecc + 1).fragment
        assert full.n == net.n and sum(map(len, full.adjacency)) == sum(map(len, net.adjacency))


def test_isomorphism_examples():
    a = neighborhood(path(3), 1, 1)
    assert isomorphic(a, a)
    one = neighborhood(build_network([], {"a": 1}, {"a": 0}, {}), 0, 0)
    other = neighborhood(build_network([("a", 1, "b", 1)], {"a": 2, "b": 1}, {"a": 0, "b": 0},
                                       {("a", 1): 0, ("b", 1): 0}), 0, 0)
    assert not isomorphic(one, other)
    swapped = neighborhood(path(3, ports={0: (1, 2), 1: (1, 1)}), 1, 1)
    assert not isomorphic(a, swapped)
    assert canonical_encode(a) != canonical_encode(swapped)
    assert canonical_encode(a) == canonical_encode(a)


def test_encoding_ignores_handles():
    net = path(5)
    order = [3, 0, 4, 1, 2]
    moved = net.permuted(order)
    for v in net.nodes():
        w = order.index(v)
        for t in range(4):
            assert canonical_encode(neighborhood(net, v, t)) == canonical_encode(neighborhood(moved, w, t))


def _all_small_networks(max_n=4):
    for n in range(1, max_n + 1):
        for g in nx.graph_atlas_g():
            if g.number_of_nodes() != n or not nx.is_connected(g) or max((d for _, d in g.degree), default=0) > 3:
                continue
            nbrs = [sorted(g.neighbors(u)) for u in range(n)]
            for perm in itertools.product(*(itertools.permutations(nb) for nb in nbrs)):
                port = {(u, v): i + 1 for u in range(n) for i, v in enumerate(perm[u])}
                edges = [(u, port[(u, v)], v, port[(v, u)]) for u, v in g.edges()]
                half = {(u, p): "-" for (u, v), p in port.items()}
                yield build_network(edges, {u: u + 1 for u in range(n)}, {u: "x" for u in range(n)}, half)


def test_encoding_matches_isomorphism_exhaustively():
    views = [neighborhood(net, v, t) for net in _all_small_networks() for v in net.nodes() for t in range(3)]
    rng = random.Random(5)
    sample = rng.sample(views, min(len(views), 220))
    for a in sample:
        for b in sample:
            for ignore in (False, True):
                same = canonical_encode(a, ignore_ids=ignore) == canonical_encode(b, ignore_ids=ignore)
                assert same == isomorphic(a, b, ignore_ids=ignore)


def test_isomorphism_is_an_equivalence():
    views = [neighborhood(net, v, 2) for net in _all_small_networks(3) for v in net.nodes()]
    for a, b, c in itertools.islice(itertools.product(views, repeat=3), 0, None, 7):
        ab, bc, ac = isomorphic(a, b, ignore_ids=True), isomorphic(b, c, ignore_ids=True), isomorphic(a, c, ignore_ids=True)
        assert isomorphic(a, a, ignore_ids=True)
        assert ab == isomorphic(b, a, ignore_ids=True)
        if ab and bc:
            assert ac


def test_instance_file_round_trip():
    net = triangle()
    again = loads_network(dumps_network(net))
    assert dumps_network(again) == dumps_network(net)
    with pytest.raises(InstanceFormatError):
        loads_network('{"nodes": [], "edges": [], "c": 3, "extra": 1}')
    with pytest.raises(InstanceFormatError):
        loads_network(dumps_network(net)[:40])


def test_without_edge_renumbers_ports():
    net = path(3)
    cut = net.without_edge(1, 1)
    assert cut.degree(1) == 1 and cut.adjacency[1][0][0] == 1
